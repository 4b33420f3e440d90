"""Command-line front end.

Every subcommand reads a JSON config (``--config``), writes its main output
to ``--out`` or stdout and maps failures onto fixed exit codes::

    0 success   2 validation   3 infeasible   4 inconclusive   5 verification
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import zlib
from typing import Any, Optional, Sequence

import numpy as np

from . import bounds, design, estimation, fock, gaussian
from .coremath import partition_signs, to_rational
from .errors import InconclusiveError, InfeasibleError, PnetError, ValidationError, VerificationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_INCONCLUSIVE = 4
EXIT_VERIFICATION = 5

VERIFY_TOL = 1e-6


def _load_json(path: Optional[str]) -> Any:
    if path is None:
        raise ValidationError("--config is required")
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _alpha(cfg: dict):
    if "alpha" not in cfg:
        raise ValidationError("config needs 'alpha'")
    raw = cfg["alpha"]
    if not isinstance(raw, list):
        raise ValidationError("'alpha' must be a list of rational strings")
    return partition_signs([to_rational(a) for a in raw])


def _pos_int(cfg: dict, key: str, default: Optional[int] = None) -> int:
    val = cfg.get(key, default)
    if val is None:
        raise ValidationError(f"config needs '{key}'")
    if isinstance(val, bool) or not isinstance(val, int) or val < 1:
        raise ValidationError(f"'{key}' must be a positive integer")
    return val


def _seed(cfg: dict, override: Optional[int]) -> int:
    seed = override if override is not None else cfg.get("seed")
    if seed is None:
        raise ValidationError("a seed is required for sampling (config 'seed' or --seed)")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    return seed


def substream(seed: int, name: str, index: int = 0) -> np.random.SeedSequence:
    """Named, indexed child stream of the master seed."""
    return np.random.SeedSequence([seed, zlib.crc32(name.encode()), index])


def _schedule_json(sched: design.ProtocolSchedule) -> str:
    return json.dumps(sched.to_dict(), indent=2) + "\n"


def cmd_bounds(args) -> int:
    cfg = _load_json(args.config)
    alpha = _alpha(cfg)
    N = cfg.get("N")
    nbar = cfg.get("N_bar")
    if N is not None:
        N = _pos_int(cfg, "N")
    if nbar is not None and (isinstance(nbar, bool) or not isinstance(nbar, (int, float)) or nbar <= 0):
        raise ValidationError("'N_bar' must be a positive number")
    M = _pos_int(cfg, "M", 1)
    t = cfg.get("t")
    if t is not None:
        t = to_rational(t) if isinstance(t, str) else t
    reports = bounds.bound_report(alpha, N=N, nbar=nbar, t=t, M=M)
    payload = {
        "alpha": alpha.to_strings(),
        "reports": [r.to_dict() for r in reports],
        "qubit_reference": bounds.QUBIT_REFERENCE,
    }
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    if args.csv:
        _emit(bounds.reports_to_csv(alpha, reports), args.csv)
    return EXIT_OK


def cmd_design(args) -> int:
    cfg = _load_json(args.config)
    alpha = _alpha(cfg)
    N = _pos_int(cfg, "N")
    M = _pos_int(cfg, "M")
    cap = cfg.get("support_cap")
    if cap is not None:
        cap = _pos_int(cfg, "support_cap")
    limit = _pos_int(cfg, "omega_limit", design.DEFAULT_OMEGA_LIMIT)
    budget = cfg.get("node_budget")
    if budget is not None:
        budget = _pos_int(cfg, "node_budget")
    sched = design.design_schedule(alpha, N, M, cap, limit, budget)
    _emit(_schedule_json(sched), args.out)
    return EXIT_OK


def verify_schedule(data: dict) -> dict:
    """Recompute both QFI paths and every saturation residual for a schedule dict."""
    sched = design.ProtocolSchedule.from_dict(data)
    problems = sched.violations()
    report: dict = {
        "M": sched.M,
        "sum_r": sum(sched.r),
        "target_residual": sched.target_residual(),
        "problems": problems,
    }
    analytic = design.schedule_qfi_analytic(sched)
    report["qfi_analytic"] = analytic.tolist()
    report["saturation_residual"] = design.check_saturation_phase(analytic, sched.alpha, sched.N, sched.M)
    try:
        numeric = fock.qfi_numeric_schedule(sched)
    except ValidationError as exc:
        problems.append(f"simulation failed: {exc}")
        report["qfi_numeric"] = None
        report["qfi_deviation"] = None
        report["saturation_residual_numeric"] = None
    else:
        report["qfi_numeric"] = numeric.tolist()
        report["qfi_deviation"] = analytic.max_rel_deviation(numeric)
        report["saturation_residual_numeric"] = design.check_saturation_phase(
            numeric, sched.alpha, sched.N, sched.M
        )
    worst = max(
        report["target_residual"],
        report["saturation_residual"],
        report["qfi_deviation"] if report["qfi_deviation"] is not None else 0.0,
        report["saturation_residual_numeric"] or 0.0,
    )
    report["max_residual"] = worst
    report["passed"] = not problems and worst <= VERIFY_TOL
    return report


def cmd_verify(args) -> int:
    path = args.schedule or args.config
    data = _load_json(path)
    if not isinstance(data, dict):
        raise ValidationError("schedule file must hold a JSON object")
    report = verify_schedule(data)
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    if not report["passed"]:
        raise VerificationError(
            f"verification failed (max residual {report['max_residual']:.3e}); "
            + "; ".join(report["problems"])
        )
    return EXIT_OK


def cmd_qfi(args) -> int:
    data = _load_json(args.state or args.config)
    if isinstance(data, dict):
        state_data, M = data.get("state"), data.get("M", 1)
    else:
        state_data, M = data, 1
    if args.passes is not None:
        M = args.passes
    if isinstance(M, bool) or not isinstance(M, int) or M < 1:
        raise ValidationError("M must be a positive integer")
    if not isinstance(state_data, list):
        raise ValidationError("state must be a list of {occupation, re, im}")
    try:
        state = fock.FockState.from_json(state_data)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed state: {exc}") from exc
    F = fock.qfi_numeric_static(state, M)
    _emit(json.dumps({"M": M, "qfi": F.tolist()}, indent=2) + "\n", args.out)
    return EXIT_OK


def _float_list(cfg: dict, key: str, length: Optional[int] = None, default=None) -> list[float]:
    val = cfg.get(key, default)
    if val is None:
        raise ValidationError(f"config needs '{key}'")
    if not isinstance(val, list):
        val = [val]
    try:
        out = [float(v) for v in val]
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"'{key}' must hold numbers") from exc
    if length is not None and len(out) != length:
        raise ValidationError(f"'{key}' must have {length} entries")
    return out


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


PHASE_COLUMNS = [
    "alpha", "N", "M", "K", "total_photons", "trials",
    "mse_empirical", "bound", "ratio", "slope_context",
]


def cmd_simulate_phase(args) -> int:
    cfg = _load_json(args.config)
    alpha = _alpha(cfg)
    N = _pos_int(cfg, "N")
    M = _pos_int(cfg, "M", 1)
    seed = _seed(cfg, args.seed)
    trials = _pos_int(cfg, "trials", 500)
    theta = _float_list(cfg, "theta", alpha.d, default=[0.0] * alpha.d)
    totals = cfg.get("totals", [16, 32, 64, 128, 256, 512])
    if not isinstance(totals, list) or not totals:
        raise ValidationError("'totals' must be a non-empty list of photon totals")
    rpe_cfg = cfg.get("rpe", {})
    slope = rpe_cfg.get("slope", estimation.DEFAULT_NU_SLOPE)
    floor = rpe_cfg.get("floor", estimation.DEFAULT_NU_FLOOR)

    sched = design.design_schedule(
        alpha, N, M, cfg.get("support_cap"), cfg.get("omega_limit", design.DEFAULT_OMEGA_LIMIT), cfg.get("node_budget")
    )
    rows, points = [], []
    for idx, total in enumerate(totals):
        if isinstance(total, bool) or not isinstance(total, int) or total < 1 or total % N:
            raise ValidationError(f"photon total {total!r} must be a positive multiple of N={N}")
        rpe = estimation.RpeSchedule.for_budget(total // N, 1, slope, floor)
        rng = np.random.default_rng(substream(seed, "simulate-phase", idx))
        res = estimation.estimate_function_phase(sched, theta, rpe, trials, rng)
        if res.out_of_range:
            print(f"warning: accumulated phase outside the capture range at total {total}", file=sys.stderr)
        points.append((res.total_photons, res.mse_empirical))
        rows.append([
            " ".join(alpha.to_strings()), N, M, rpe.K, res.total_photons, trials,
            res.mse_empirical, res.bound, res.ratio,
        ])
        if args.verbose:
            detail = {"index": idx, "rpe": rpe.to_dict(), "result": res.to_dict()}
            print(json.dumps(detail), file=sys.stderr)
    slope_fit = estimation.scaling_fit(points)[0] if len(points) >= 2 else float("nan")
    for row in rows:
        row.append(slope_fit)
    _emit(_csv_text(PHASE_COLUMNS, rows), args.out)
    return EXIT_OK


DISPLACEMENT_COLUMNS = [
    "N_bar", "M", "d", "mse_empirical", "mse_bound_leading", "mse_bound_exact", "ratio", "stderr",
]


def cmd_simulate_displacement(args) -> int:
    cfg = _load_json(args.config)
    alpha = _alpha(cfg)
    M = _pos_int(cfg, "M", 1)
    seed = _seed(cfg, args.seed)
    shots = _pos_int(cfg, "shots", 10**5)
    if shots < 2:
        raise ValidationError("'shots' must be at least 2")
    nbars = _float_list(cfg, "N_bar")
    if any(n <= 0 for n in nbars):
        raise ValidationError("'N_bar' values must be positive")
    theta = _float_list(cfg, "theta", alpha.d, default=[0.0] * alpha.d)
    rows = []
    for idx, nbar in enumerate(nbars):
        proto = gaussian.DisplacementProtocol(alpha, nbar, M)
        est = gaussian.estimate_q_displacement(proto, theta, shots, substream(seed, "simulate-displacement", idx))
        lead = proto.bound(exact=False)
        exact = proto.bound(exact=True)
        rows.append([nbar, M, alpha.d, est.mse, lead, exact, est.mse / lead, est.mse_stderr])
        if args.verbose:
            print(json.dumps({"index": idx, "q_hat": est.q_hat, "q_true": est.q_true}), file=sys.stderr)
    _emit(_csv_text(DISPLACEMENT_COLUMNS, rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnet", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--out", metavar="PATH", help="write the main output here instead of stdout")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--verbose", action="store_true", help="per-run JSON details on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="closed-form MSE bounds")
    p.add_argument("--csv", metavar="PATH", help="also write the reports as CSV")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("design", parents=[common], help="synthesize a saturating phase schedule")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", parents=[common], help="re-check a schedule file")
    p.add_argument("schedule", nargs="?", help="schedule JSON (defaults to --config)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("qfi", parents=[common], help="static QFI of a Fock state")
    p.add_argument("state", nargs="?", help="state JSON (defaults to --config)")
    p.add_argument("--passes", type=int, help="number of passes M")
    p.set_defaults(func=cmd_qfi)

    p = sub.add_parser("simulate-phase", parents=[common], help="RPE Monte-Carlo sweep (CSV)")
    p.set_defaults(func=cmd_simulate_phase)

    p = sub.add_parser("simulate-displacement", parents=[common], help="Gaussian Monte-Carlo sweep (CSV)")
    p.set_defaults(func=cmd_simulate_displacement)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except VerificationError as exc:
        print(f"verification: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (ValidationError, PnetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
