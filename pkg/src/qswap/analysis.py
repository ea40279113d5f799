"""Closed forms, rate comparisons, optimum/crossover solvers and sweeps."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from scipy import optimize

from .fock import PureState
from .optics import LossChannel, apply_loss
from .protocol import (
    CANONICAL,
    Detector,
    ProtocolParams,
    alpha_balanced,
    herald,
    herald_all,
    prepare,
    prepare_aux,
    prepare_source,
)

log = logging.getLogger(__name__)

LOG2_3 = math.log2(3)
CROSSOVER_BRACKET = (0.62, 0.99)


class SolverError(RuntimeError):
    pass


def analytic_ps_pattern(p: float) -> float:
    """Heralding probability of a single detection pattern (ideal, balanced alpha)."""
    return 3 / 16 * p * p * (1 - p) ** 2 / (5 * p * p - 8 * p + 4)


def analytic_ps_total(p: float) -> float:
    return 3 * p * p * (1 - p) ** 2 / (5 * p * p - 8 * p + 4)


def optimal_p_closed_form() -> tuple[float, float]:
    c2, c4 = 2 ** (1 / 3), 4 ** (1 / 3)
    p_star = (4 - 2 * c2 + c4) / 5
    # 2*cbrt(4) in the denominator; the value then equals analytic_ps_total(p_star)
    ps_star = 3 / 125 * (16 + 97 * c2 - 76 * c4) / (-2 + c2 + 2 * c4)
    return p_star, ps_star


def _ps_total_slope(p: float) -> float:
    # sign-carrying numerator of d/dp [3 p^2 (1-p)^2 / (5p^2 - 8p + 4)]
    n = 3 * p * p * (1 - p) ** 2
    dn = 6 * p * (1 - p) * (1 - 2 * p)
    d = 5 * p * p - 8 * p + 4
    return dn * d - n * (10 * p - 8)


def optimal_p_search(tol: float = 1e-14) -> tuple[float, float]:
    """Maximize the total success probability by a bracketed root of its slope.

    A value-based search (golden section) only pins a flat maximum to about
    sqrt(machine epsilon) in p; the slope changes sign cleanly instead.
    """
    p = optimize.brentq(_ps_total_slope, 0.3, 0.9, xtol=tol)
    return float(p), analytic_ps_total(float(p))


def optimal_p() -> tuple[float, float]:
    """(p*, P_s*) from the closed form, cross-checked against the search."""
    p_star, ps_star = optimal_p_closed_form()
    p_num, _ = optimal_p_search()
    if abs(p_num - p_star) > 1e-9 or abs(analytic_ps_total(p_star) - ps_star) > 1e-9:
        raise SolverError(f"closed form {p_star} disagrees with search {p_num}")
    return p_star, ps_star


def rate_qutrit(p: float) -> float:
    return LOG2_3 * analytic_ps_total(p)


def rate_type2(p: float, eta: float = 1.0) -> float:
    return eta * eta * p * p / 2


def rate_type1(p: float, eta: float = 1.0) -> float:
    return eta * p / 2


def rate_gap(p: float) -> float:
    """Qutrit rate minus the type-II rate (both lossless)."""
    return rate_qutrit(p) - rate_type2(p)


def crossover_p(bracket: tuple[float, float] = CROSSOVER_BRACKET, xtol: float = 1e-14) -> float:
    lo, hi = bracket
    if rate_gap(lo) * rate_gap(hi) > 0:
        raise SolverError(f"no sign change of the rate gap on {bracket}")
    return float(optimize.bisect(rate_gap, lo, hi, xtol=xtol))


@dataclass(frozen=True)
class SweepRecord:
    p: float
    eta: float
    detector: str
    P_s: float
    fidelity_corrected: float
    fidelity_canonical: float
    entropy_bits: float
    rate: float
    analytic_P_s: float | None = None
    abs_err: float | None = None
    pattern_spread: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate_point(p: float, eta: float, detector: Detector | str, all_patterns: bool = False,
                   alpha: float | None = None) -> SweepRecord:
    params = ProtocolParams(p, alpha=alpha, eta=eta, detector=Detector(detector))
    source = prepare(params)
    if all_patterns:
        outcomes = herald_all(source, params.detector)
        probs = [o.probability for o in outcomes]
        p_s = sum(probs)
        spread = max(probs) - min(probs)
        live = [o for o in outcomes if not o.degenerate]
        if live:
            f_corr = sum(o.probability * o.fidelity for o in live) / p_s
            f_can = sum(o.probability * o.fidelity_canonical for o in live) / p_s
            head = live[0]
        else:
            f_corr = f_can = math.nan
            head = outcomes[0]
    else:
        head = herald(source, CANONICAL, params.detector)
        p_s = 16 * head.probability
        spread = None
        f_corr, f_can = head.fidelity, head.fidelity_canonical
    entropy = head.entropy
    rate = 0.0 if math.isnan(entropy) else entropy * p_s
    analytic = err = None
    if eta == 1 and alpha is None:
        analytic = analytic_ps_total(p)
        err = abs(p_s - analytic)
    return SweepRecord(p, eta, params.detector.value, p_s, f_corr, f_can, entropy, rate, analytic, err, spread)


def _evaluate(args) -> SweepRecord:
    return evaluate_point(*args)


def sweep(p_grid: Sequence[float], eta_grid: Sequence[float] = (1.0,),
          detectors: Iterable[Detector | str] = (Detector.PNRD,), all_patterns: bool = False,
          workers: int = 1) -> list[SweepRecord]:
    """One record per (p, eta, detector), ordered detector-major, then eta, then p."""
    if not len(p_grid) or not len(eta_grid):
        raise ValueError("sweep grids must be non-empty")
    jobs = [(float(p), float(eta), Detector(d), all_patterns)
            for d in detectors for eta in eta_grid for p in p_grid]
    log.info("sweeping %d grid points", len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_evaluate, jobs))
    return [_evaluate(j) for j in jobs]


# Loss bookkeeping against hand-written closed forms of the lossy input states.

def _branch_amplitudes(state: PureState, eta: float) -> list[tuple[float, dict]]:
    ens = apply_loss(state, LossChannel(eta))
    return [(w, {(k.memories, k.photons): a * math.sqrt(w) for k, a in s.amplitudes.items()})
            for w, s in ens.branches]


def loss_audit(p: float, alpha: float | None, eta: float) -> list[dict]:
    """Compare constructive loss-channel branches with hand-written closed forms.

    The constructive values are read off the Kraus expansion, never from a
    formula, so a mismatch flags the reference expression. ``alpha=None`` uses
    the balanced auxiliary amplitude.
    """
    if alpha is None:
        alpha = alpha_balanced(p)
    src = _branch_amplitudes(prepare_source(p, "A"), eta)
    aux = _branch_amplitudes(prepare_aux(alpha), eta)

    def amp(branches, key):
        for _, terms in branches:
            if key in terms and len(terms) > 1:
                return abs(terms[key])
        return 0.0

    def weight(branches, key):
        for w, terms in branches:
            if list(terms) == [key]:
                return w
        return 0.0

    src_trace = sum(w for w, _ in src)
    aux_trace = sum(w for w, _ in aux)
    reference_src_trace = (1 - p) + 2 * eta * p + p * (1 - eta)
    reference_aux_trace = (1 - alpha**2) + (alpha * eta) ** 2 + 2 * alpha**2 * math.sqrt(eta * (1 - eta)) \
        + alpha**2 * (1 - eta) ** 2
    rows = [
        ("source vacuum amplitude", "sqrt(1-p)", math.sqrt(1 - p), amp(src, ((0,), (0, 0)))),
        ("source surviving H amplitude", "sqrt(eta*p)", math.sqrt(eta * p), amp(src, ((1,), (1, 0)))),
        ("source surviving V amplitude", "sqrt(eta*p)", math.sqrt(eta * p), amp(src, ((2,), (0, 1)))),
        ("source lost-photon weight, memory 1", "p/2*(1-eta)", p / 2 * (1 - eta), weight(src, ((1,), (0, 0)))),
        ("source lost-photon weight, memory 2", "p/2*(1-eta)", p / 2 * (1 - eta), weight(src, ((2,), (0, 0)))),
        ("source state trace", "(1-p)+2*eta*p+p*(1-eta)", reference_src_trace, src_trace),
        ("aux vacuum amplitude", "sqrt(1-alpha^2)", math.sqrt(1 - alpha**2), amp(aux, ((), (0, 0)))),
        ("aux surviving pair amplitude", "alpha*eta", alpha * eta, amp(aux, ((), (1, 1)))),
        ("aux single-loss weight, H survives", "alpha^2*sqrt(eta*(1-eta))",
         alpha**2 * math.sqrt(eta * (1 - eta)), weight(aux, ((), (1, 0)))),
        ("aux single-loss weight, V survives", "alpha^2*sqrt(eta*(1-eta))",
         alpha**2 * math.sqrt(eta * (1 - eta)), weight(aux, ((), (0, 1)))),
        ("aux double-loss weight", "alpha^2*(1-eta)^2", alpha**2 * (1 - eta) ** 2, weight(aux, ((), (0, 0)))),
        ("aux state trace", "sum of reference terms", reference_aux_trace, aux_trace),
    ]
    out = []
    for name, expr, reference, constructive in rows:
        out.append({
            "quantity": name,
            "reference_expression": expr,
            "reference_value": reference,
            "constructive_value": constructive,
            "abs_diff": abs(reference - constructive),
            "match": abs(reference - constructive) <= 1e-12,
            "p": p, "alpha": alpha, "eta": eta,
        })
    return out
