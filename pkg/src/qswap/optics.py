"""Optical elements, the 8-mode Bell-measurement interferometer and photon loss.

Matrices follow the input-output relation ``b = U a`` between output and
input annihilation operators.  For the real matrices used here this is the
same ``U`` that :func:`qswap.fock.apply_mode_unitary` expects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import (
    PRUNE_THRESHOLD,
    UNITARY_TOL,
    Ensemble,
    JointBasisState,
    PureState,
    is_unitary,
)

#: Polarization registry of the Bell-measurement stage (inputs and outputs).
POLARIZATION_MODES = ("H1", "H2", "H3", "H4", "V1", "V2", "V3", "V4")
#: Output detectors carry primes; index i of the output matches POLARIZATION_MODES[i].
DETECTORS = tuple(m + "'" for m in POLARIZATION_MODES)

#: Input modes a_1..a_8 of the block (path) form, in polarization labels.
BLOCK_INPUT_ORDER = ("H3", "H4", "V1", "V2", "H1", "H2", "V3", "V4")
#: Output modes b_1'..b_8' of the block form, in polarization labels.
BLOCK_OUTPUT_ORDER = ("H1'", "H3'", "V1'", "V3'", "H2'", "H4'", "V2'", "V4'")

HADAMARD_4 = np.array([
    [1, 1, 1, 1],
    [1, -1, 1, -1],
    [1, 1, -1, -1],
    [1, -1, -1, 1],
], dtype=float)

_EQ10 = np.array([
    [0, 0, 1, 1, 1, 1, 0, 0],
    [1, 1, 0, 0, 0, 0, 1, 1],
    [0, 0, 1, -1, 1, -1, 0, 0],
    [1, -1, 0, 0, 0, 0, 1, -1],
    [0, 0, 1, 1, -1, -1, 0, 0],
    [1, 1, 0, 0, 0, 0, -1, -1],
    [0, 0, 1, -1, -1, 1, 0, 0],
    [1, -1, 0, 0, 0, 0, -1, 1],
], dtype=float) / 2


@dataclass(frozen=True)
class ModeUnitary:
    matrix: np.ndarray
    modes: tuple[str, ...] = POLARIZATION_MODES

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (len(self.modes), len(self.modes)):
            raise ValueError(f"matrix shape {m.shape} does not match {len(self.modes)} modes")
        if not is_unitary(m, UNITARY_TOL):
            raise ValueError("matrix is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "modes", tuple(self.modes))

    def __matmul__(self, other: ModeUnitary) -> ModeUnitary:
        """``self @ other`` applies ``other`` first."""
        if self.modes != other.modes:
            raise ValueError("cannot compose unitaries over different registries")
        return ModeUnitary(self.matrix @ other.matrix, self.modes)

    @property
    def dagger(self) -> ModeUnitary:
        return ModeUnitary(self.matrix.conj().T, self.modes)

    def index(self, mode: str | int) -> int:
        return self.modes.index(mode) if isinstance(mode, str) else mode


def _embed(block: np.ndarray, idx: Sequence[int], n: int, modes) -> ModeUnitary:
    m = np.eye(n, dtype=complex)
    m[np.ix_(idx, idx)] = block
    return ModeUnitary(m, modes)


def _resolve(modes: Sequence[str], *labels) -> list[int]:
    return [modes.index(x) if isinstance(x, str) else int(x) for x in labels]


_BALANCED = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def beamsplitter(i, j, modes: Sequence[str] = POLARIZATION_MODES) -> ModeUnitary:
    """50:50 beamsplitter; the sum port stays in ``i``, the difference in ``j``."""
    idx = _resolve(tuple(modes), i, j)
    if idx[0] == idx[1]:
        raise ValueError("beamsplitter needs two distinct modes")
    return _embed(_BALANCED, idx, len(modes), modes)


def pbs(h_i, h_j, v_i, v_j, modes: Sequence[str] = POLARIZATION_MODES) -> ModeUnitary:
    """Polarizing beamsplitter between paths i and j: H is exchanged, V passes."""
    idx = _resolve(tuple(modes), h_i, h_j, v_i, v_j)
    if len(set(idx)) != 4:
        raise ValueError("pbs needs four distinct modes")
    block = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float)
    return _embed(block, idx, len(modes), modes)


def hwp(h_i, v_i, modes: Sequence[str] = POLARIZATION_MODES) -> ModeUnitary:
    """Half-wave plate at 22.5 degrees, rotating H/V into diagonal/antidiagonal."""
    idx = _resolve(tuple(modes), h_i, v_i)
    if idx[0] == idx[1]:
        raise ValueError("hwp needs two distinct modes")
    return _embed(_BALANCED, idx, len(modes), modes)


def permutation(mapping: dict, modes: Sequence[str] = POLARIZATION_MODES) -> ModeUnitary:
    """Wiring: a photon in mode ``src`` leaves in mode ``mapping[src]``."""
    modes = tuple(modes)
    n = len(modes)
    m = np.zeros((n, n))
    targets = {i: i for i in range(n)}
    for src, dst in mapping.items():
        targets[_resolve(modes, src)[0]] = _resolve(modes, dst)[0]
    if sorted(targets.values()) != list(range(n)):
        raise ValueError("mapping is not a permutation")
    for src, dst in targets.items():
        m[dst, src] = 1
    return ModeUnitary(m, modes)


def compose(*elements: ModeUnitary) -> ModeUnitary:
    """Circuit product; ``elements`` are listed in the order light meets them."""
    out = elements[0]
    for e in elements[1:]:
        out = e @ out
    return out


def bell_interferometer_polarization() -> ModeUnitary:
    """The literal 8x8 transfer matrix over (H1..H4, V1..V4)."""
    return ModeUnitary(_EQ10, POLARIZATION_MODES)


def bell_interferometer_circuit() -> ModeUnitary:
    """Build the same interferometer from beamsplitters, PBSs and wave plates.

    Stage 1 mixes Alice/Bob (paths 1, 2) and the two auxiliary paths (3, 4)
    for both polarizations.  The difference ports are routed so that the
    PBSs pair path 1 with path 2 and path 3 with path 4, then every path gets
    a half-wave plate before detection.
    """
    stage1 = [
        beamsplitter("H1", "H2"), beamsplitter("V1", "V2"),
        beamsplitter("H3", "H4"), beamsplitter("V3", "V4"),
    ]
    # sum ports: A/B -> path 1, aux -> path 2; difference ports: A/B -> 3, aux -> 4
    wiring = permutation({"H2": "H3", "V2": "V3", "H3": "H2", "V3": "V2"})
    stage2 = [pbs("H1", "H2", "V1", "V2"), pbs("H3", "H4", "V3", "V4")]
    stage3 = [hwp(f"H{k}", f"V{k}") for k in range(1, 5)]
    return compose(*stage1, wiring, *stage2, *stage3)


def block_permutations() -> tuple[np.ndarray, np.ndarray]:
    """(P_in, P_out) with ``a_block = P_in a_pol`` and ``b_block = P_out b_pol``."""
    n = len(POLARIZATION_MODES)
    p_in = np.zeros((n, n))
    p_out = np.zeros((n, n))
    for r, m in enumerate(BLOCK_INPUT_ORDER):
        p_in[r, POLARIZATION_MODES.index(m)] = 1
    for r, m in enumerate(BLOCK_OUTPUT_ORDER):
        p_out[r, DETECTORS.index(m)] = 1
    return p_in, p_out


def bell_interferometer_blockform() -> ModeUnitary:
    """diag(H4, H4)/2 over the relabeled modes a_1..a_8."""
    m = np.zeros((8, 8))
    m[:4, :4] = HADAMARD_4 / 2
    m[4:, 4:] = HADAMARD_4 / 2
    return ModeUnitary(m, tuple(f"a{k}" for k in range(1, 9)))


def blockform_in_polarization_basis() -> ModeUnitary:
    """The block form mapped back to (H1..H4, V1..V4) via the mode reorderings."""
    p_in, p_out = block_permutations()
    return ModeUnitary(p_out.T @ bell_interferometer_blockform().matrix @ p_in, POLARIZATION_MODES)


@dataclass(frozen=True)
class LossChannel:
    """Pure-loss channel of transmittivity ``eta`` on the listed modes (all if None)."""

    eta: float
    modes: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise ValueError(f"transmittivity must lie in [0, 1], got {self.eta}")


def loss_kraus_amplitude(n: int, k: int, eta: float) -> float:
    """<n-k| K_k |n> for losing k of n photons."""
    if not 0 <= k <= n:
        return 0.0
    return math.sqrt(math.comb(n, k) * eta ** (n - k) * (1 - eta) ** k)


# The largest weight ever discarded by apply_loss; tests assert it stays tiny.
_DROPPED_MASS = [0.0]


def dropped_mass() -> float:
    return _DROPPED_MASS[0]


def _loss_on_mode(branches: list[PureState], idx: int, eta: float) -> list[PureState]:
    out = []
    for state in branches:
        by_k: dict[int, dict[JointBasisState, complex]] = {}
        for key, amp in state.amplitudes.items():
            n = key.photons[idx]
            for k in range(n + 1):
                c = loss_kraus_amplitude(n, k, eta)
                if c == 0:
                    continue
                ph = key.photons[:idx] + (n - k,) + key.photons[idx + 1:]
                by_k.setdefault(k, {})[JointBasisState(key.memories, ph)] = amp * c
        out.extend(state._like(terms) for terms in by_k.values())
    return out


def apply_loss(state: PureState, channel: LossChannel) -> Ensemble:
    """Expand the loss channel into Kraus branches.

    Each branch corresponds to one pattern of lost photons across the affected
    modes; the branch weight is the squared norm of K_k |state>.
    """
    modes = state.modes if channel.modes is None else channel.modes
    branches = [state]
    for mode in modes:
        branches = _loss_on_mode(branches, state.mode_index(mode), channel.eta)
    kept = []
    lost = 0.0
    for b in branches:
        w = b.norm_squared()
        if w < PRUNE_THRESHOLD:
            lost += w
            continue
        kept.append((w, b.normalized()))
    _DROPPED_MASS[0] = max(_DROPPED_MASS[0], lost)
    if lost > 1e-12:
        raise ArithmeticError(f"loss expansion dropped {lost:.3e} of probability")
    return Ensemble(tuple(kept))


def apply_loss_ensemble(ens: Ensemble, channel: LossChannel) -> Ensemble:
    branches = []
    for w, s in ens.branches:
        for w2, s2 in apply_loss(s, channel).branches:
            branches.append((w * w2, s2))
    return Ensemble(tuple(branches))
