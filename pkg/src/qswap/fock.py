"""Sparse multimode Fock states joined with memory-qutrit labels.

A :class:`PureState` maps :class:`JointBasisState` keys (memory labels plus a
photon occupation tuple) to complex amplitudes.  Mode unitaries act on the
photonic part in the Schroedinger picture with the convention

    a_j^dagger  ->  sum_k U[k, j] a_k^dagger

so a single photon in input mode ``j`` ends up in column ``j`` of ``U``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

PHOTON_CAP = 4
PRUNE_THRESHOLD = 1e-14
UNITARY_TOL = 1e-10
MEMORY_DIM = 3


class RegistryError(ValueError):
    """Two states (or a state and an operator) disagree on their mode registry."""


class TruncationError(ValueError):
    """An operation would push a basis term above the global photon cap."""


class JointBasisState(NamedTuple):
    """Memory labels (one per memory, each in {0, 1, 2}) and photon counts."""

    memories: tuple[int, ...]
    photons: tuple[int, ...]

    @property
    def memA(self) -> int:
        return self.memories[0]

    @property
    def memB(self) -> int:
        return self.memories[1]


def check_occupation(photons: Sequence[int], n_modes: int, cap: int = PHOTON_CAP) -> tuple[int, ...]:
    photons = tuple(int(n) for n in photons)
    if len(photons) != n_modes:
        raise RegistryError(f"occupation {photons} does not match {n_modes} modes")
    if any(n < 0 for n in photons):
        raise ValueError(f"negative photon count in {photons}")
    if sum(photons) > cap:
        raise TruncationError(f"{sum(photons)} photons exceed the cap of {cap}")
    return photons


def _prune(amps: Mapping[JointBasisState, complex]) -> dict[JointBasisState, complex]:
    return {k: complex(v) for k, v in amps.items() if abs(v) ** 2 >= PRUNE_THRESHOLD}


@dataclass(frozen=True)
class PureState:
    """Sparse (possibly sub-normalized) pure state.

    ``modes`` labels the optical modes in occupation order and ``memories``
    names the memory qutrits in label order.
    """

    amplitudes: Mapping[JointBasisState, complex]
    modes: tuple[str, ...]
    memories: tuple[str, ...] = ("A", "B")
    cap: int = PHOTON_CAP

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "memories", tuple(self.memories))
        clean = {}
        for key, amp in self.amplitudes.items():
            mem, photons = key
            mem = tuple(int(m) for m in mem)
            if len(mem) != len(self.memories) or any(m not in (0, 1, 2) for m in mem):
                raise ValueError(f"bad memory labels {mem} for memories {self.memories}")
            photons = check_occupation(photons, len(self.modes), self.cap)
            k = JointBasisState(mem, photons)
            clean[k] = clean.get(k, 0) + amp
        object.__setattr__(self, "amplitudes", _prune(clean))

    @classmethod
    def basis(cls, memories: Sequence[int], photons: Sequence[int], modes: Sequence[str],
              memory_names: Sequence[str] = ("A", "B"), amplitude: complex = 1.0) -> PureState:
        return cls({JointBasisState(tuple(memories), tuple(photons)): amplitude}, tuple(modes), tuple(memory_names))

    @classmethod
    def vacuum(cls, modes: Sequence[str], memories: Sequence[int] = (0, 0),
               memory_names: Sequence[str] = ("A", "B")) -> PureState:
        return cls.basis(memories, [0] * len(modes), modes, memory_names)

    def _like(self, amplitudes: Mapping[JointBasisState, complex]) -> PureState:
        return PureState(amplitudes, self.modes, self.memories, self.cap)

    def __len__(self) -> int:
        return len(self.amplitudes)

    def __add__(self, other: PureState) -> PureState:
        _check_registry(self, other)
        out = dict(self.amplitudes)
        for k, v in other.amplitudes.items():
            out[k] = out.get(k, 0) + v
        return self._like(out)

    def __mul__(self, scalar: complex) -> PureState:
        return self._like({k: v * scalar for k, v in self.amplitudes.items()})

    __rmul__ = __mul__

    def norm_squared(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.amplitudes.values()))

    def normalized(self) -> PureState:
        n2 = self.norm_squared()
        if n2 == 0:
            raise ValueError("cannot normalize the zero state")
        return self * (1 / math.sqrt(n2))

    def photon_numbers(self) -> set[int]:
        return {sum(k.photons) for k in self.amplitudes}

    def amplitude(self, memories: Sequence[int], photons: Sequence[int]) -> complex:
        return self.amplitudes.get(JointBasisState(tuple(memories), tuple(photons)), 0j)

    def mode_index(self, mode: int | str) -> int:
        if isinstance(mode, str):
            return self.modes.index(mode)
        if not 0 <= mode < len(self.modes):
            raise IndexError(f"mode {mode} out of range for {len(self.modes)} modes")
        return mode

    def allclose(self, other: PureState, atol: float = 1e-10) -> bool:
        _check_registry(self, other)
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self.amplitudes.get(k, 0) - other.amplitudes.get(k, 0)) <= atol for k in keys)


def _check_registry(a: PureState, b: PureState) -> None:
    if a.modes != b.modes or a.memories != b.memories:
        raise RegistryError(f"registry mismatch: {a.modes}/{a.memories} vs {b.modes}/{b.memories}")


@dataclass(frozen=True)
class Ensemble:
    """Density operator sum_k w_k |psi_k><psi_k| with unit-norm branches."""

    branches: tuple[tuple[float, PureState], ...] = field(default_factory=tuple)

    def __post_init__(self):
        branches = tuple((float(w), s) for w, s in self.branches)
        for w, s in branches:
            if w < 0:
                raise ValueError(f"negative branch weight {w}")
            if abs(s.norm_squared() - 1) > 1e-10:
                raise ValueError("ensemble branches must be unit norm")
        if branches:
            first = branches[0][1]
            for _, s in branches[1:]:
                _check_registry(first, s)
        object.__setattr__(self, "branches", branches)

    @classmethod
    def from_pure(cls, state: PureState) -> Ensemble:
        n2 = state.norm_squared()
        if n2 == 0:
            return cls(())
        return cls(((n2, state.normalized()),))

    @property
    def modes(self) -> tuple[str, ...]:
        return self.branches[0][1].modes

    @property
    def memories(self) -> tuple[str, ...]:
        return self.branches[0][1].memories

    def trace(self) -> float:
        return float(sum(w for w, _ in self.branches))

    def __len__(self) -> int:
        return len(self.branches)


@dataclass(frozen=True)
class MemoryDensity:
    """Two-memory density matrix in the basis |nm>, index 3n + m."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (MEMORY_DIM**2, MEMORY_DIM**2):
            raise ValueError(f"memory density must be 9x9, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise ValueError("memory density is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> MemoryDensity:
        t = self.trace()
        if t <= 0:
            raise ValueError("cannot normalize a zero-trace memory density")
        return MemoryDensity(self.matrix / t)

    def expectation(self, vector: Sequence[complex]) -> float:
        v = np.asarray(vector, dtype=complex)
        return float((v.conj() @ self.matrix @ v).real)

    def fidelity(self, target: Sequence[complex]) -> float:
        """<target|rho|target> / Tr rho."""
        return self.expectation(target) / self.trace()

    def reduced(self, keep: int = 0) -> np.ndarray:
        """3x3 reduced matrix of memory ``keep`` (0 for A, 1 for B)."""
        r = self.matrix.reshape(3, 3, 3, 3)
        if keep == 0:
            return np.einsum("ikjk->ij", r)
        return np.einsum("kikj->ij", r)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>."""
    _check_registry(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = sum(np.conj(a.amplitudes.get(k, 0)) * b.amplitudes.get(k, 0)
                for k in small.amplitudes if k in large.amplitudes)
    return complex(total)


def _shift(photons: tuple[int, ...], idx: int, delta: int) -> tuple[int, ...]:
    return photons[:idx] + (photons[idx] + delta,) + photons[idx + 1:]


def apply_creation(state: PureState, mode: int | str) -> PureState:
    idx = state.mode_index(mode)
    out = {}
    for k, amp in state.amplitudes.items():
        if sum(k.photons) + 1 > state.cap:
            raise TruncationError(f"creation on mode {state.modes[idx]} exceeds cap {state.cap}")
        n = k.photons[idx]
        out[JointBasisState(k.memories, _shift(k.photons, idx, 1))] = amp * math.sqrt(n + 1)
    return state._like(out)


def apply_annihilation(state: PureState, mode: int | str) -> PureState:
    idx = state.mode_index(mode)
    out = {}
    for k, amp in state.amplitudes.items():
        n = k.photons[idx]
        if n:
            out[JointBasisState(k.memories, _shift(k.photons, idx, -1))] = amp * math.sqrt(n)
    return state._like(out)


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(matrix)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m @ m.conj().T, np.eye(len(m)), atol=tol)


@lru_cache(maxsize=None)
def sector_basis(n_modes: int, total: int) -> tuple[tuple[int, ...], ...]:
    """All occupations of ``n_modes`` modes holding exactly ``total`` photons."""
    out = []
    for bars in itertools.combinations(range(total + n_modes - 1), n_modes - 1):
        edges = (-1,) + bars + (total + n_modes - 1,)
        out.append(tuple(edges[i + 1] - edges[i] - 1 for i in range(n_modes)))
    return tuple(out)


@lru_cache(maxsize=None)
def _sector_index(n_modes: int, total: int) -> dict[tuple[int, ...], int]:
    return {occ: i for i, occ in enumerate(sector_basis(n_modes, total))}


@lru_cache(maxsize=None)
def _raising(n_modes: int, total: int) -> tuple[np.ndarray, ...]:
    """a_k^dag restricted to sector total-1 -> sector total, one matrix per mode."""
    upper = _sector_index(n_modes, total)
    lower = sector_basis(n_modes, total - 1)
    mats = []
    for k in range(n_modes):
        r = np.zeros((len(upper), len(lower)))
        for col, occ in enumerate(lower):
            r[upper[_shift(occ, k, 1)], col] = math.sqrt(occ[k] + 1)
        mats.append(r)
    return tuple(mats)


@lru_cache(maxsize=64)
def _fock_block(key: bytes, n: int, total: int) -> np.ndarray:
    """Matrix of the mode unitary on the ``total``-photon sector.

    Column |m> is prod_j (sum_k U[k,j] a_k^dag)^{m_j} / sqrt(m_j!) |0>, built
    one creation operator at a time: |m> = a_j^dag / sqrt(m_j) |m - e_j>.
    """
    if total == 0:
        return np.ones((1, 1), dtype=complex)
    u = np.frombuffer(key, dtype=complex).reshape(n, n)
    lower = _fock_block(key, n, total - 1)
    lower_idx = _sector_index(n, total - 1)
    raising = _raising(n, total)
    basis = sector_basis(n, total)
    block = np.zeros((len(basis), len(basis)), dtype=complex)
    by_mode: dict[int, list[int]] = {}
    for col, occ in enumerate(basis):
        by_mode.setdefault(next(i for i, c in enumerate(occ) if c), []).append(col)
    for j, cols in by_mode.items():
        create_j = sum(u[k, j] * raising[k] for k in range(n) if u[k, j] != 0)
        src = [lower_idx[_shift(basis[c], j, -1)] for c in cols]
        norms = np.sqrt([basis[c][j] for c in cols])
        block[:, cols] = (create_j @ lower[:, src]) / norms
    return block


def apply_mode_unitary(state: PureState, unitary) -> PureState:
    """Transform ``state`` under a passive linear-optical mode unitary.

    ``unitary`` is either a raw square matrix or an object with ``matrix`` and
    ``modes`` attributes; in the latter case the mode order must match.
    """
    matrix = getattr(unitary, "matrix", unitary)
    order = getattr(unitary, "modes", None)
    u = np.ascontiguousarray(matrix, dtype=complex)
    n = len(state.modes)
    if u.shape != (n, n):
        raise RegistryError(f"unitary of shape {u.shape} does not act on {n} modes")
    if order is not None and tuple(order) != state.modes:
        raise RegistryError(f"unitary modes {tuple(order)} differ from state modes {state.modes}")
    if not is_unitary(u):
        raise ValueError("mode transformation is not unitary")
    key = u.tobytes()
    groups: dict[tuple[tuple[int, ...], int], dict[int, complex]] = {}
    for k, amp in state.amplitudes.items():
        total = sum(k.photons)
        groups.setdefault((k.memories, total), {})[_sector_index(n, total)[k.photons]] = amp
    out: dict[JointBasisState, complex] = {}
    for (mem, total), entries in groups.items():
        block = _fock_block(key, n, total)
        cols = list(entries)
        image = block[:, cols] @ np.array([entries[c] for c in cols])
        basis = sector_basis(n, total)
        for i in np.flatnonzero(np.abs(image) ** 2 >= PRUNE_THRESHOLD):
            out[JointBasisState(mem, basis[i])] = image[i]
    return state._like(out)


def tensor(*states: PureState) -> PureState:
    """Tensor product; memories and modes are concatenated in argument order."""
    modes = tuple(itertools.chain.from_iterable(s.modes for s in states))
    memories = tuple(itertools.chain.from_iterable(s.memories for s in states))
    if len(set(modes)) != len(modes) or len(set(memories)) != len(memories):
        raise RegistryError("tensor factors share mode or memory names")
    cap = max(s.cap for s in states)
    out = {}
    for terms in itertools.product(*(s.amplitudes.items() for s in states)):
        mem = tuple(itertools.chain.from_iterable(k.memories for k, _ in terms))
        ph = tuple(itertools.chain.from_iterable(k.photons for k, _ in terms))
        out[JointBasisState(mem, ph)] = math.prod(a for _, a in terms)
    return PureState(out, modes, memories, cap)


def rearrange(state: PureState, modes: Sequence[str], memories: Sequence[str] | None = None) -> PureState:
    """Reorder modes (and memories); modes absent from ``state`` are added in vacuum.

    Dropping a mode that carries photons raises :class:`RegistryError`.
    """
    modes = tuple(modes)
    memories = state.memories if memories is None else tuple(memories)
    if sorted(memories) != sorted(state.memories):
        raise RegistryError(f"cannot map memories {state.memories} to {memories}")
    src = {m: i for i, m in enumerate(state.modes)}
    dropped = [i for m, i in src.items() if m not in modes]
    mem_perm = [state.memories.index(m) for m in memories]
    out = {}
    for k, amp in state.amplitudes.items():
        if any(k.photons[i] for i in dropped):
            raise RegistryError("rearrange would discard occupied modes")
        ph = tuple(k.photons[src[m]] if m in src else 0 for m in modes)
        out[JointBasisState(tuple(k.memories[i] for i in mem_perm), ph)] = amp
    return PureState(out, modes, memories, state.cap)


def tensor_ensembles(*ensembles: Ensemble) -> Ensemble:
    branches = []
    for combo in itertools.product(*(e.branches for e in ensembles)):
        w = math.prod(b[0] for b in combo)
        branches.append((w, tensor(*(b[1] for b in combo))))
    return Ensemble(tuple(branches))


def _memory_vectors(state: PureState) -> dict[tuple[int, ...], np.ndarray]:
    if len(state.memories) != 2:
        raise RegistryError(f"expected two memories, got {state.memories}")
    groups: dict[tuple[int, ...], np.ndarray] = {}
    for k, amp in state.amplitudes.items():
        v = groups.setdefault(k.photons, np.zeros(MEMORY_DIM**2, dtype=complex))
        v[MEMORY_DIM * k.memories[0] + k.memories[1]] += amp
    return groups


def partial_trace_to_memory(source: PureState | Ensemble) -> MemoryDensity:
    """Trace out every photonic mode; the result keeps the input's total weight."""
    rho = np.zeros((MEMORY_DIM**2, MEMORY_DIM**2), dtype=complex)
    branches: Iterable[tuple[float, PureState]]
    branches = source.branches if isinstance(source, Ensemble) else ((1.0, source),)
    for w, state in branches:
        for v in _memory_vectors(state).values():
            rho += w * np.outer(v, v.conj())
    return MemoryDensity((rho + rho.conj().T) / 2)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits; eigenvalues below 1e-15 contribute nothing."""
    ev = np.linalg.eigvalsh(np.asarray(rho))
    ev = ev[ev > 1e-15]
    return float(-np.sum(ev * np.log2(ev)))


def coherent_information(rho: MemoryDensity) -> float:
    """S(B) - S(AB) of a normalized two-memory state, in bits.

    For a pure state this is the entanglement entropy; for mixed states it is
    a lower bound on distillable entanglement.
    """
    return von_neumann_entropy(rho.reduced(1)) - von_neumann_entropy(rho.matrix)


def entanglement_entropy(state: PureState | Sequence[complex], keep: int = 0, tol: float = 1e-10) -> float:
    """Entropy of one memory of a pure two-memory state.

    Accepts a :class:`PureState` (whose memories must not be entangled with the
    photons) or a length-9 amplitude vector.
    """
    if isinstance(state, PureState):
        rho = partial_trace_to_memory(state)
        if abs(rho.trace() - 1) > tol:
            raise ValueError(f"state is not normalized (norm^2 = {rho.trace()})")
        purity = float(np.trace(rho.matrix @ rho.matrix).real)
        if abs(purity - 1) > tol:
            raise ValueError("memories are not in a pure state")
        return von_neumann_entropy(rho.reduced(keep))
    v = np.asarray(state, dtype=complex)
    if v.shape != (MEMORY_DIM**2,):
        raise ValueError("expected a 9-component memory vector")
    if abs(np.vdot(v, v).real - 1) > tol:
        raise ValueError("state is not normalized")
    m = v.reshape(MEMORY_DIM, MEMORY_DIM)
    reduced = m @ m.conj().T if keep == 0 else m.T @ m.conj()
    return von_neumann_entropy(reduced)
