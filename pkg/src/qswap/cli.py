"""Command-line entry point: ``qswap <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import analysis
from .protocol import (
    Detector,
    ProtocolParams,
    alpha_balanced,
    enumerate_patterns,
    herald,
    herald_all,
    pattern_signs,
    prepare,
)
from .sampling import random_ensemble

log = logging.getLogger("qswap")

SIG_DIGITS = 12
FIDELITY_TOL = 1e-9
PROBABILITY_TOL = 1e-12

RATE_COLUMNS = ("p", "P_s_qutrit", "rate_qutrit", "rate_type2", "analytic_P_s", "abs_err")
LOSS_COLUMNS = ("p", "eta", "detector", "P_s", "fidelity_corrected", "fidelity_canonical", "rate")


class UsageError(Exception):
    pass


def fmt(x):
    """Fixed 12-significant-digit rendering shared by CSV and JSON output."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, float, np.floating, np.integer)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return None
        return float(format(x, f".{SIG_DIGITS}g"))
    return x


def _csv_cell(x) -> str:
    v = fmt(x)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, f".{SIG_DIGITS}g")
    return str(v)


def render(rows: Sequence[dict], columns: Sequence[str], kind: str) -> str:
    if kind == "json":
        return json.dumps([{c: fmt(r[c]) for c in columns} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_csv_cell(r[c]) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from exc
    log.info("wrote %s", out)


def parse_grid(text: str) -> list[float]:
    """``a:b:n`` -> n evenly spaced points from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:n, got {text!r}") from None
    if n < 1 or not (0 <= a <= 1 and 0 <= b <= 1):
        raise argparse.ArgumentTypeError(f"grid {text!r} must have n >= 1 and endpoints in [0, 1]")
    if n == 1:
        return [a]
    return [round(float(x), 12) for x in np.linspace(a, b, n)]


def unit_interval(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= x <= 1:
        raise argparse.ArgumentTypeError(f"{x} is outside [0, 1]")
    return x


def _grid(args, scalar: str, grid: str, default: list[float]) -> list[float]:
    if getattr(args, grid) is not None:
        return getattr(args, grid)
    if getattr(args, scalar) is not None:
        return [getattr(args, scalar)]
    return default


def _detectors(args) -> list[Detector]:
    if args.detector is None:
        return [Detector.PNRD, Detector.THRESHOLD]
    return [Detector(args.detector)]


def cmd_verify_table1(args) -> int:
    p = 0.5 if args.p is None else args.p
    eta = 1.0 if args.eta is None else args.eta
    alpha = args.alpha
    if alpha is None and args.alpha_scale is not None:
        alpha = min(1.0, args.alpha_scale * alpha_balanced(p))
    params = ProtocolParams(p, alpha=alpha, eta=eta, detector=Detector(args.detector or "pnrd"))
    outcomes = herald_all(prepare(params), params.detector)
    probs = [o.probability for o in outcomes]
    spread = max(probs) - min(probs)
    rows = []
    for o in outcomes:
        ok = (not o.degenerate) and o.fidelity >= 1 - FIDELITY_TOL
        rows.append({
            "pattern": str(o.pattern),
            "signs": " ".join("+" if s > 0 else "-" for s in pattern_signs(o.pattern)),
            "fidelity": o.fidelity,
            "probability": o.probability,
            "status": "degenerate" if o.degenerate else ("pass" if ok else "fail"),
        })
    emit(render(rows, ("pattern", "signs", "fidelity", "probability", "status"), args.format), args.out)
    failed = [r["pattern"] for r in rows if r["status"] == "fail"]
    degenerate = [r["pattern"] for r in rows if r["status"] == "degenerate"]
    equal = spread <= PROBABILITY_TOL
    passed = len(rows) - len(failed) - len(degenerate)
    print(f"{passed}/16 patterns reproduce their heralded state; probability spread {spread:.3e}", file=sys.stderr)
    if failed:
        print("mismatch: " + ", ".join(failed), file=sys.stderr)
    if degenerate:
        print(f"degenerate (zero probability): {len(degenerate)} patterns", file=sys.stderr)
    if not equal:
        print("probabilities are not equal across patterns", file=sys.stderr)
    return 0 if passed == 16 and equal else 1


def cmd_sweep_rate(args) -> int:
    ps = _grid(args, "p", "p_grid", parse_grid("0.01:0.99:99"))
    records = analysis.sweep(ps, (1.0,), (Detector.PNRD,), all_patterns=args.all_patterns, workers=args.workers)
    rows = [{
        "p": r.p,
        "P_s_qutrit": r.P_s,
        "rate_qutrit": r.rate,
        "rate_type2": analysis.rate_type2(r.p),
        "analytic_P_s": r.analytic_P_s,
        "abs_err": r.abs_err,
    } for r in records]
    emit(render(rows, RATE_COLUMNS, args.format), args.out)
    return 0


def cmd_sweep_loss(args) -> int:
    ps = _grid(args, "p", "p_grid", parse_grid("0.1:0.9:9"))
    etas = _grid(args, "eta", "eta_grid", parse_grid("0.5:1:6"))
    if any(e <= 0 for e in etas):
        raise UsageError("transmittivity must be positive")
    records = analysis.sweep(ps, etas, _detectors(args), all_patterns=args.all_patterns, workers=args.workers)
    emit(render([r.as_dict() for r in records], LOSS_COLUMNS, args.format), args.out)
    return 0


def _print_values(values: dict, kind: str) -> None:
    if kind == "json":
        print(json.dumps({k: fmt(v) for k, v in values.items()}))
    else:
        for k, v in values.items():
            print(f"{k}={_csv_cell(v)}")


def cmd_optimum(args) -> int:
    p_star, ps_star = analysis.optimal_p()
    _print_values({"p_star": p_star, "P_s_star": ps_star, "rate_star": analysis.rate_qutrit(p_star)}, args.format)
    return 0


def cmd_crossover(args) -> int:
    p_x = analysis.crossover_p()
    _print_values({"p_crossover": p_x, "rate": analysis.rate_type2(p_x)}, args.format)
    return 0


def cmd_audit_loss(args) -> int:
    p = 0.5 if args.p is None else args.p
    eta = 0.7 if args.eta is None else args.eta
    alpha = alpha_balanced(p) if args.alpha is None else args.alpha
    rows = analysis.loss_audit(p, alpha, eta)
    cols = ("quantity", "reference_expression", "reference_value", "constructive_value", "abs_diff", "match",
            "p", "alpha", "eta")
    emit(render(rows, cols, args.format), args.out)
    return 0


def cmd_check_dominance(args) -> int:
    """Tr[M_th rho] >= Tr[M_pnr rho] on random ensembles for every pattern."""
    rng = np.random.default_rng(args.seed)
    violations = 0
    for pattern in enumerate_patterns():
        for _ in range(args.samples):
            rho = random_ensemble(rng)
            th = herald(rho, pattern, Detector.THRESHOLD).probability
            pn = herald(rho, pattern, Detector.PNRD).probability
            if th < pn - 1e-12:
                violations += 1
                log.error("dominance violated for %s: %g < %g", pattern, th, pn)
    print(f"violations={violations}")
    return 1 if violations else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qswap", description="Qutrit entanglement-swapping simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, grids=True):
        sp.add_argument("--p", type=unit_interval, help="photon generation probability")
        sp.add_argument("--eta", type=unit_interval, help="channel transmittivity")
        if grids:
            sp.add_argument("--p-grid", type=parse_grid, metavar="a:b:n")
            sp.add_argument("--eta-grid", type=parse_grid, metavar="a:b:n")
        sp.add_argument("--detector", choices=[d.value for d in Detector])
        sp.add_argument("--all-patterns", action="store_true", help="evaluate all 16 patterns instead of 16x one")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("verify-table1", help="reproduce the 16 heralded states")
    common(sp, grids=False)
    sp.add_argument("--alpha", type=unit_interval, help="auxiliary amplitude (default: balanced)")
    sp.add_argument("--alpha-scale", type=float, help="multiply the balanced alpha by this factor")
    sp.set_defaults(func=cmd_verify_table1)

    sp = sub.add_parser("sweep-rate", help="ideal success probability and rates versus p")
    common(sp)
    sp.set_defaults(func=cmd_sweep_rate)

    sp = sub.add_parser("sweep-loss", help="success probability and fidelity under loss")
    common(sp)
    sp.set_defaults(func=cmd_sweep_loss)

    sp = sub.add_parser("optimum", help="p maximizing the success probability")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=cmd_optimum)

    sp = sub.add_parser("crossover", help="p where the qutrit and type-II rates cross")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    sp.set_defaults(func=cmd_crossover)

    sp = sub.add_parser("audit-loss", help="compare loss-channel branches with closed-form lossy states")
    common(sp, grids=False)
    sp.add_argument("--alpha", type=unit_interval)
    sp.set_defaults(func=cmd_audit_loss, format="json")

    sp = sub.add_parser("check-dominance", help="threshold vs PNRD operator dominance on random states")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=100)
    sp.set_defaults(func=cmd_check_dominance)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("QSWAP_LOG", "WARNING").upper()
    logging.basicConfig(level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"qswap: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
