"""Command-line entry point: ``python -m einsteuler <verb> ...``.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 numerical abort,
5 failed check.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import EinsteulerError, ParseError, ValidationError
from .evolve import MONITOR_COLUMNS, run, write_monitors
from .io import write_binary
from .reduction import COMPONENT_NAMES, assemble_block_system
from .scenario import Scenario, build_state, load_scenario
from .wsobolev import DyadicFamily, EnergyWeights, check_inequality_suite, energy_x_terms, norm_l2_delta

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4, 5
ROUNDOFF_FLOOR = 1e-12  # convergence columns below this are treated as exact
log = logging.getLogger("einsteuler")


def _json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, default=float))
    return path


def _load(args) -> Scenario:
    scn = load_scenario(args.scenario, strict_window=args.strict_window)
    for msg in scn.warnings:
        log.warning(msg)
    return scn


# ---------------------------------------------------------------- plots


def _plots(out: Path, result, U, grid) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    arr = result.monitor_array()
    paths = []
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(arr[:, 0], arr[:, 1])
    ax.set_xlabel("t")
    ax.set_ylabel("energy_x")
    fig.tight_layout()
    paths.append(out / "energy.png")
    fig.savefig(paths[-1], dpi=100)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    for k, name in ((2, "norm_drift"), (3, "harmonic_residual"), (4, "eps_consistency")):
        ax.semilogy(arr[:, 0], np.abs(arr[:, k]) + 1e-300, label=name)
    ax.set_xlabel("t")
    ax.legend()
    fig.tight_layout()
    paths.append(out / "residuals.png")
    fig.savefig(paths[-1], dpi=100)
    plt.close(fig)

    axis = grid.active[0] if grid.active else 0
    idx = [n // 2 for n in grid.shape]
    idx[axis] = slice(None)
    line = U[tuple(idx)]
    x = grid.axis_coords(axis)
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in (0, 4, 7, 50, 52):
        ax.plot(x, line[..., c], label=COMPONENT_NAMES[c])
    ax.set_xlabel("xyz"[axis])
    ax.legend()
    fig.tight_layout()
    paths.append(out / "profile.png")
    fig.savefig(paths[-1], dpi=100)
    plt.close(fig)
    return paths


# ---------------------------------------------------------------- verbs


def _norm_report(U, scn: Scenario, threads: int) -> dict:
    weights = EnergyWeights.from_state(U, scn.eos)
    terms = energy_x_terms(U, scn.norm, weights, scn.grid, threads=threads)
    l2 = norm_l2_delta(np.linalg.norm(U, axis=-1), scn.norm.delta, grid=scn.grid)
    return {"energy_terms": terms, "energy_x": float(np.sqrt(sum(terms.values()))), "l2_delta": l2}


def cmd_run(args) -> int:
    scn = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    U0 = build_state(scn)
    result = run(scn.evolution, U0, scn.eos, scn.grid, scn.norm, threads=args.threads)
    write_monitors(out / "monitors.csv", result.monitors)
    write_binary(out / "final_state.bin", result.final, COMPONENT_NAMES, t=scn.evolution.t_end,
                 grid_points=list(scn.grid.points), grid_extent=list(scn.grid.extent))
    norms = {"initial": _norm_report(U0, scn, args.threads), "final": _norm_report(result.final, scn, args.threads)}
    _json(out / "norms.json", norms)
    _plots(out, result, result.final, scn.grid)

    arr = result.monitor_array()
    checks = {
        "finite": bool(np.all(np.isfinite(arr))),
        "a0_positive": bool(np.all(arr[:, 5] > 0)),
        "gronwall": bool(result.gronwall.passed),
    }
    summary = {
        "scenario": scn.name,
        "warnings": list(scn.warnings),
        **result.summary(),
        "checks": checks,
        "passed": all(checks.values()),
    }
    _json(out / "summary.json", summary)
    print(json.dumps({"passed": summary["passed"], "checks": checks}))
    return EXIT_OK if summary["passed"] else EXIT_CHECK


def cmd_check_norms(args) -> int:
    scn = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    U0 = build_state(scn)
    report = _norm_report(U0, scn, args.threads)
    _json(out / "norms.json", report)
    print(json.dumps(report, default=float))
    return EXIT_OK


def _fit_order(h, e) -> float:
    h, e = np.asarray(h), np.asarray(e)
    if np.any(e <= 0):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def cmd_convergence(args) -> int:
    scn = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cols = ("norm_drift", "harmonic_residual", "eps_consistency")
    rows = []
    grid = scn.grid
    for level in range(args.levels):
        s = replace(scn, grid=grid)
        result = run(s.evolution, build_state(s), s.eos, grid, s.norm, threads=args.threads)
        arr = result.monitor_array()
        sups = {c: float(np.max(np.abs(arr[:, MONITOR_COLUMNS.index(c)]))) for c in cols}
        rows.append({"level": level, "points": grid.points[grid.active[0]], "h": grid.h, **sups})
        grid = grid.refined()
    orders = {c: _fit_order([r["h"] for r in rows], [r[c] for r in rows]) for c in cols}
    with (out / "convergence.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["level", "points", "h", *cols])
        for r in rows:
            wr.writerow([r["level"], r["points"], repr(r["h"]), *(repr(r[c]) for c in cols)])
    print(f"{'level':>5} {'points':>7} {'h':>10} " + " ".join(f"{c:>18}" for c in cols))
    for r in rows:
        print(f"{r['level']:>5} {r['points']:>7} {r['h']:>10.4g} " + " ".join(f"{r[c]:>18.6e}" for c in cols))
    print("order " + " ".join(f"{c}={orders[c]:.3f}" for c in cols))
    passed = True
    if args.expect_order is not None:
        for c in cols:
            if max(r[c] for r in rows) < ROUNDOFF_FLOOR:
                continue
            if not abs(orders[c] - args.expect_order) <= 0.1 * args.expect_order:
                passed = False
    _json(out / "convergence.json", {"rows": rows, "orders": orders, "passed": passed})
    return EXIT_OK if passed else EXIT_CHECK


def cmd_matrices(args) -> int:
    scn = _load(args)
    out = Path(args.out)
    U0 = build_state(scn)
    try:
        point = tuple(int(p) for p in args.point.split(","))
    except ValueError:
        raise ValidationError("--point", "expected three integers i,j,k") from None
    if len(point) != 3 or any(not 0 <= p < n for p, n in zip(point, scn.grid.shape)):
        raise ValidationError("--point", f"must index the grid {scn.grid.shape}")
    system = assemble_block_system(U0[point], scn.eos)
    paths = system.dump_csv(out / "matrices")
    print("\n".join(str(p) for p in paths))
    return EXIT_OK


def cmd_inequalities(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fam = DyadicFamily(n_ref=args.n_ref) if args.n_ref else None
    report = check_inequality_suite(args.family, dim=args.dim, fam=fam, probe=not args.no_probe, seed=args.seed)
    with (out / "inequalities.csv").open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["check", "worst_ratio", "bound", "passed"])
        wr.writerows(report.csv_rows())
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_CHECK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--strict-window", action="store_true",
                        help="treat a regularity outside the well-posedness window as an error")

    p = argparse.ArgumentParser(prog="einsteuler", description="Einstein-Euler harmonic-gauge toolkit")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", parents=[common], help="evolve a scenario and write monitors")
    r.add_argument("scenario")
    r.set_defaults(func=cmd_run)
    n = sub.add_parser("check-norms", parents=[common], help="weighted norms of the initial state")
    n.add_argument("scenario")
    n.set_defaults(func=cmd_check_norms)
    c = sub.add_parser("convergence", parents=[common], help="run at successive refinements")
    c.add_argument("scenario")
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--expect-order", type=float, default=None)
    c.set_defaults(func=cmd_convergence)
    m = sub.add_parser("matrices", parents=[common], help="dump the 55x55 blocks at a grid point")
    m.add_argument("scenario")
    m.add_argument("--point", default="0,0,0")
    m.set_defaults(func=cmd_matrices)
    q = sub.add_parser("inequalities", parents=[common], help="weighted Sobolev inequality suite")
    q.add_argument("--family", default="gaussians+bumps")
    q.add_argument("--dim", type=int, default=1, choices=(1, 2, 3))
    q.add_argument("--n-ref", type=int, default=None)
    q.add_argument("--no-probe", action="store_true")
    q.set_defaults(func=cmd_inequalities)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_PARSE
    except ValidationError as exc:
        log.error("validation error: %s", exc)
        return EXIT_VALIDATION
    except EinsteulerError as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
