"""The qutrit entanglement-swapping protocol.

Alice and Bob each hold a memory qutrit entangled with a photonic qutrit
(vacuum, H or V).  Their photons meet an auxiliary H/V photon pair in the
8-mode Bell-measurement interferometer; one click in each half of the
detector bank heralds an entangled memory pair.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fock import (
    MEMORY_DIM,
    PHOTON_CAP,
    Ensemble,
    JointBasisState,
    MemoryDensity,
    PureState,
    apply_mode_unitary,
    coherent_information,
    entanglement_entropy,
    rearrange,
    sector_basis,
    tensor,
    tensor_ensembles,
)
from .optics import (
    DETECTORS,
    POLARIZATION_MODES,
    LossChannel,
    ModeUnitary,
    apply_loss,
    bell_interferometer_polarization,
)

NODE_MODES = {"A": ("H1", "V1"), "B": ("H2", "V2")}
AUX_MODES = ("H3", "V3")

FIRST_HALF = ("H1'", "H3'", "V1'", "V3'")
SECOND_HALF = ("H2'", "H4'", "V2'", "V4'")


class Detector(str, enum.Enum):
    PNRD = "pnrd"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class ProtocolParams:
    p: float
    alpha: float | None = None
    eta: float = 1.0
    detector: Detector = Detector.PNRD

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.alpha is not None and not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        object.__setattr__(self, "detector", Detector(self.detector))

    @property
    def aux_alpha(self) -> float:
        return alpha_balanced(self.p) if self.alpha is None else self.alpha


@dataclass(frozen=True)
class DetectionPattern:
    first: str
    second: str

    def __post_init__(self):
        if self.first not in FIRST_HALF or self.second not in SECOND_HALF:
            raise ValueError(f"({self.first}, {self.second}) is not a heralding pattern")

    def __str__(self) -> str:
        return f"({self.first},{self.second})"

    @classmethod
    def parse(cls, text: str) -> DetectionPattern:
        first, second = text.strip("() ").replace(" ", "").split(",")
        return cls(first, second)

    @property
    def detector_indices(self) -> tuple[int, int]:
        return DETECTORS.index(self.first), DETECTORS.index(self.second)


# Signs of (|00>, |12>, |21>) in each heralded state, in table order.
_TABLE = (
    ("H1'", "H2'", (1, 1, 1)), ("H1'", "V2'", (-1, 1, 1)),
    ("V1'", "H2'", (-1, 1, 1)), ("V1'", "V2'", (1, 1, 1)),
    ("H1'", "H4'", (1, 1, -1)), ("H1'", "V4'", (1, -1, 1)),
    ("V1'", "H4'", (1, -1, 1)), ("V1'", "V4'", (1, 1, -1)),
    ("H3'", "H2'", (1, -1, 1)), ("H3'", "V2'", (1, 1, -1)),
    ("V3'", "H2'", (1, 1, -1)), ("V3'", "V2'", (1, -1, 1)),
    ("H3'", "H4'", (-1, 1, 1)), ("H3'", "V4'", (1, 1, 1)),
    ("V3'", "H4'", (1, 1, 1)), ("V3'", "V4'", (-1, 1, 1)),
)
_SIGNS = {DetectionPattern(f, s): signs for f, s, signs in _TABLE}

CANONICAL = DetectionPattern("H1'", "H2'")


def alpha_balanced(p: float) -> float:
    """Auxiliary amplitude that equalizes the heralded coefficients."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return p / math.sqrt(5 * p * p - 8 * p + 4)


def bell_state() -> np.ndarray:
    v = np.zeros(MEMORY_DIM**2)
    v[[0, 5, 7]] = 1 / math.sqrt(3)
    return v


def prepare_source(p: float, node: str) -> PureState:
    """Memory-photon state of one node over its (H, V) modes."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    modes = NODE_MODES[node]
    s = math.sqrt(p / 2)
    amps = {
        JointBasisState((0,), (0, 0)): math.sqrt(1 - p),
        JointBasisState((1,), (1, 0)): s,
        JointBasisState((2,), (0, 1)): s,
    }
    return PureState(amps, modes, (node,))


def prepare_aux(alpha: float) -> PureState:
    """sqrt(1 - alpha^2)|vac> + alpha |1_H, 1_V> on the auxiliary path."""
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    amps = {
        JointBasisState((), (0, 0)): math.sqrt(1 - alpha * alpha),
        JointBasisState((), (1, 1)): alpha,
    }
    return PureState(amps, AUX_MODES, ())


def prepare_initial(params: ProtocolParams) -> PureState:
    joint = tensor(prepare_source(params.p, "A"), prepare_source(params.p, "B"), prepare_aux(params.aux_alpha))
    return rearrange(joint, POLARIZATION_MODES)


def _rearrange_ensemble(ens: Ensemble, modes) -> Ensemble:
    return Ensemble(tuple((w, rearrange(s, modes)) for w, s in ens.branches))


def prepare_initial_lossy(params: ProtocolParams) -> Ensemble:
    """Every photonic mode passes a loss channel of transmittivity ``eta``."""
    channel = LossChannel(params.eta)
    factors = [
        apply_loss(prepare_source(params.p, "A"), channel),
        apply_loss(prepare_source(params.p, "B"), channel),
        apply_loss(prepare_aux(params.aux_alpha), channel),
    ]
    return _rearrange_ensemble(tensor_ensembles(*factors), POLARIZATION_MODES)


def to_block_modes(state: PureState) -> PureState:
    """Relabel a polarization-registry state onto the path modes a1..a8."""
    from .optics import BLOCK_INPUT_ORDER

    moved = rearrange(state, BLOCK_INPUT_ORDER)
    return PureState(moved.amplitudes, tuple(f"a{k}" for k in range(1, 9)), moved.memories, moved.cap)


def enumerate_patterns() -> list[DetectionPattern]:
    return [DetectionPattern(f, s) for f, s, _ in _TABLE]


def pattern_signs(pattern: DetectionPattern) -> tuple[int, int, int]:
    try:
        return _SIGNS[pattern]
    except KeyError:
        raise ValueError(f"unknown detection pattern {pattern}") from None


def expected_heralded_state(pattern: DetectionPattern) -> np.ndarray:
    s00, s12, s21 = pattern_signs(pattern)
    v = np.zeros(MEMORY_DIM**2)
    v[0], v[5], v[7] = s00, s12, s21
    return v / math.sqrt(3)


def local_correction(pattern: DetectionPattern) -> np.ndarray:
    """Diagonal sign flip on memory A mapping the pattern's state onto the Bell state."""
    s00, s12, s21 = pattern_signs(pattern)
    return np.kron(np.diag([s00, s12, s21]).astype(float), np.eye(MEMORY_DIM))


@dataclass(frozen=True)
class MeasurementOperator:
    """Sum of projectors onto output Fock patterns, pulled back through ``unitary``.

    ``terms`` holds (coefficient, output occupation) pairs; the operator on
    the input modes is sum_t c_t U^dag |n_t><n_t| U.
    """

    pattern: DetectionPattern
    detector: Detector
    terms: tuple[tuple[float, tuple[int, ...]], ...]
    unitary: ModeUnitary = field(default_factory=bell_interferometer_polarization)

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {occ: c for c, occ in self.terms})

    def weight(self, occupation: tuple[int, ...]) -> float:
        return self._lookup.get(occupation, 0.0)

    def input_vectors(self) -> list[tuple[float, PureState]]:
        """The projector terms expressed in the input-mode basis."""
        udag = self.unitary.dagger
        out = []
        for c, occ in self.terms:
            ket = PureState({JointBasisState((), occ): 1.0}, self.unitary.modes, ())
            out.append((c, apply_mode_unitary(ket, udag)))
        return out

    def matrix(self, basis: Sequence[tuple[int, ...]]) -> np.ndarray:
        """Dense matrix of the operator on the photonic span of ``basis``."""
        index = {occ: i for i, occ in enumerate(basis)}
        m = np.zeros((len(basis), len(basis)), dtype=complex)
        for c, vec in self.input_vectors():
            v = np.zeros(len(basis), dtype=complex)
            for k, amp in vec.amplitudes.items():
                v[index[k.photons]] = amp
            m += c * np.outer(v, v.conj())
        return m


def fock_basis(n_modes: int = 8, cap: int = PHOTON_CAP) -> list[tuple[int, ...]]:
    """All occupations of ``n_modes`` modes with at most ``cap`` photons."""
    return [occ for total in range(cap + 1) for occ in sector_basis(n_modes, total)]


@lru_cache(maxsize=256)
def measurement_operator(pattern: DetectionPattern, detector: Detector | str = Detector.PNRD,
                         others_vacuum: bool = True, cap: int = PHOTON_CAP) -> MeasurementOperator:
    """Projector terms for one heralding pattern.

    PNRD accepts exactly one photon at each clicked detector; threshold
    detection accepts one or more.  With ``others_vacuum`` the six other
    detectors must stay dark.
    """
    detector = Detector(detector)
    i, j = pattern.detector_indices
    terms = []
    for occ in fock_basis(len(DETECTORS), cap):
        if others_vacuum and sum(occ) != occ[i] + occ[j]:
            continue
        if detector is Detector.PNRD:
            ok = occ[i] == 1 and occ[j] == 1
        else:
            ok = occ[i] >= 1 and occ[j] >= 1
        if ok:
            terms.append((1.0, occ))
    op = MeasurementOperator(pattern, detector, tuple(terms))
    _check_operator_bounds(op, cap)
    return op


def _check_operator_bounds(op: MeasurementOperator, cap: int) -> None:
    # terms are projectors onto distinct orthogonal output patterns with c in (0, 1]
    if any(not 0 < c <= 1 for c, _ in op.terms):
        raise ValueError("measurement coefficients must lie in (0, 1]")
    if len({occ for _, occ in op.terms}) != len(op.terms):
        raise ValueError("measurement terms overlap")
    if any(sum(occ) > cap for _, occ in op.terms):
        raise ValueError("measurement term exceeds the photon cap")
    ev = np.linalg.eigvalsh(op.matrix(fock_basis(len(DETECTORS), cap)))
    if ev.min() < -1e-10 or ev.max() > 1 + 1e-10:
        raise ValueError(f"measurement operator spectrum [{ev.min()}, {ev.max()}] outside [0, 1]")


@dataclass(frozen=True)
class HeraldedOutcome:
    pattern: DetectionPattern
    detector: Detector
    probability: float
    memory: MemoryDensity | None
    target: np.ndarray

    @property
    def degenerate(self) -> bool:
        return self.memory is None

    @property
    def fidelity(self) -> float:
        """Fidelity with the pattern's own signed Bell state."""
        return float("nan") if self.memory is None else self.memory.fidelity(self.target)

    @property
    def fidelity_canonical(self) -> float:
        """Fidelity with the unsigned Bell state, without local correction."""
        return float("nan") if self.memory is None else self.memory.fidelity(bell_state())

    @property
    def entropy(self) -> float:
        """Coherent information of the heralded state clipped at zero.

        Equals the entanglement entropy whenever the heralded state is pure.
        """
        if self.memory is None:
            return float("nan")
        return max(0.0, coherent_information(self.memory))


def _as_ensemble(source: PureState | Ensemble) -> Ensemble:
    return source if isinstance(source, Ensemble) else Ensemble.from_pure(source)


def _transformed(source: PureState | Ensemble, unitary: ModeUnitary) -> list[tuple[float, dict]]:
    out = []
    for w, state in _as_ensemble(source).branches:
        moved = apply_mode_unitary(state, unitary)
        groups: dict[tuple[int, ...], np.ndarray] = {}
        for k, amp in moved.amplitudes.items():
            v = groups.setdefault(k.photons, np.zeros(MEMORY_DIM**2, dtype=complex))
            v[MEMORY_DIM * k.memories[0] + k.memories[1]] += amp
        out.append((w, groups))
    return out


def _outcome(op: MeasurementOperator, transformed, prob_floor: float) -> HeraldedOutcome:
    rho = np.zeros((MEMORY_DIM**2, MEMORY_DIM**2), dtype=complex)
    for w, groups in transformed:
        for occ, v in groups.items():
            c = op.weight(occ)
            if c:
                rho += w * c * np.outer(v, v.conj())
    prob = float(np.trace(rho).real)
    memory = None
    if prob > prob_floor:
        memory = MemoryDensity((rho + rho.conj().T) / (2 * prob))
    return HeraldedOutcome(op.pattern, op.detector, max(prob, 0.0), memory, expected_heralded_state(op.pattern))


def herald(source: PureState | Ensemble, pattern: DetectionPattern,
           detector: Detector | str = Detector.PNRD, prob_floor: float = 1e-15) -> HeraldedOutcome:
    """Project ``source`` onto one detection pattern and trace out the photons.

    A zero-probability pattern gives an outcome with ``memory=None`` rather
    than an exception.
    """
    op = measurement_operator(pattern, Detector(detector))
    return _outcome(op, _transformed(source, op.unitary), prob_floor)


def herald_all(source: PureState | Ensemble, detector: Detector | str = Detector.PNRD,
               patterns: Sequence[DetectionPattern] | None = None,
               prob_floor: float = 1e-15) -> list[HeraldedOutcome]:
    patterns = enumerate_patterns() if patterns is None else list(patterns)
    detector = Detector(detector)
    transformed = _transformed(source, bell_interferometer_polarization())
    return [_outcome(measurement_operator(p, detector), transformed, prob_floor) for p in patterns]


def prepare(params: ProtocolParams) -> PureState | Ensemble:
    """Ideal pure input when lossless, otherwise the lossy ensemble."""
    return prepare_initial(params) if params.eta == 1 else prepare_initial_lossy(params)


def total_success(params: ProtocolParams, all_patterns: bool = True) -> float:
    """Sum of heralding probabilities over the 16 patterns.

    With ``all_patterns=False`` the canonical pattern is computed once and
    multiplied by 16.
    """
    source = prepare(params)
    if not all_patterns:
        return 16 * herald(source, CANONICAL, params.detector).probability
    return sum(o.probability for o in herald_all(source, params.detector))


def pure_entropy(outcome: HeraldedOutcome) -> float:
    """Entanglement entropy of a heralded state that is pure (ideal case)."""
    if outcome.memory is None:
        return float("nan")
    ev, vec = np.linalg.eigh(outcome.memory.matrix)
    return entanglement_entropy(vec[:, -1])


def outcome_distribution(source: PureState | Ensemble,
                         unitary: ModeUnitary | None = None) -> dict[tuple[int, ...], float]:
    """Probability of every output photon pattern under number-resolving detection."""
    unitary = bell_interferometer_polarization() if unitary is None else unitary
    dist: dict[tuple[int, ...], float] = {}
    for w, groups in _transformed(source, unitary):
        for occ, v in groups.items():
            dist[occ] = dist.get(occ, 0.0) + w * float(np.vdot(v, v).real)
    return dist
