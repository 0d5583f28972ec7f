"""Command-line driver.

Subcommands:

    run                --config FILE --out DIR
    sweep              --config FILE --eps-min X --eps-max X --eps-count N
                       --out DIR [--workers N]
    report             --sweep CSV --out DIR
    check-inequalities --out DIR

Exit codes: 0 when every graded check passes, 2 when any graded check
fails (or any sweep row aborts), 1 on usage or runtime errors.  Worker
parallelism for sweeps is capped by the AGGDIFF_WORKERS environment
variable.  Outputs go only to the declared --out directory; inputs are
never mutated.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import parse_config
from .errors import AggdiffError, SweepFailure
from .inequalities import standard_inequality_suite
from .io import (
    emit_fit_reports_json,
    emit_loglog_svg,
    emit_series_csv,
    emit_sweep_csv,
    emit_timings_csv,
    fmt,
    read_sweep_csv,
    write_field_snapshot,
)
from .solver import run as run_solver
from .sweep import geometric_eps_list, standard_report, sweep

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CHECK_FAILED = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggdiff",
        description="Aggregation-diffusion concentration laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)

    p_sweep = sub.add_parser("sweep", help="run a geometric eps sweep")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--eps-min", type=float, required=True)
    p_sweep.add_argument("--eps-max", type=float, required=True)
    p_sweep.add_argument("--eps-count", type=int, required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=None)

    p_rep = sub.add_parser("report", help="fit scaling exponents of a sweep CSV")
    p_rep.add_argument("--sweep", required=True)
    p_rep.add_argument("--out", required=True)

    p_chk = sub.add_parser(
        "check-inequalities", help="run the interpolation-inequality suites"
    )
    p_chk.add_argument("--out", required=True)
    return parser


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    out = _outdir(args.out)
    series, final_state = run_solver(config)
    emit_series_csv(series, out / "series.csv")
    write_field_snapshot(out / "final_field.bin", final_state)
    mass_col = series.column("mass")
    drift = abs(mass_col - mass_col[0]).max() / abs(mass_col[0])
    print(
        f"run finished: dim={config.dim} eps={config.eps:g} n={config.n} "
        f"T={final_state.t:g} steps={final_state.step_index} "
        f"mass_drift={drift:.3e}"
    )
    print(f"wrote {out / 'series.csv'} and {out / 'final_field.bin'}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = parse_config(args.config)
    out = _outdir(args.out)
    eps_list = geometric_eps_list(args.eps_min, args.eps_max, args.eps_count)
    try:
        result = sweep(config, eps_list, workers=args.workers)
    except SweepFailure as exc:
        print(f"sweep failed: {exc}", file=sys.stderr)
        if exc.result is not None:
            emit_sweep_csv(exc.result, out / "sweep.csv")
            print(f"partial results in {out / 'sweep.csv'}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    emit_sweep_csv(result, out / "sweep.csv")
    emit_timings_csv(result, out / "sweep_timings.csv")
    print(
        f"sweep finished: {len(result.rows)} rows, eps in "
        f"[{min(eps_list):g}, {max(eps_list):g}]"
    )
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def _cmd_report(args) -> int:
    result = read_sweep_csv(args.sweep)
    out = _outdir(args.out)
    reports = standard_report(result)
    emit_fit_reports_json(reports, out / "fit_reports.json")
    all_passed = True
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        all_passed &= bool(rep.passed)
        detail = f"slope={rep.slope:+.4f}"
        if rep.theory_slope is not None:
            detail += f" theory={rep.theory_slope:+.4f}"
        if rep.tolerance is not None:
            detail += f" tol={rep.tolerance:g}"
        detail += f" R2={rep.r_squared:.4f}"
        if rep.ratio_max_min is not None:
            detail += (
                f" ratio={rep.ratio_max_min:.3f}"
                f" (threshold {rep.ratio_threshold:g})"
            )
        print(f"{status} {rep.observable}: {detail}")
        pairs = None
        if rep.observable.startswith("int_Hm_"):
            pairs = result.pairs("int_hm", int(rep.observable.split("_")[-1]))
        elif rep.observable.startswith("int_Lp_"):
            pairs = result.pairs("int_lp", float(rep.observable.split("_")[-1]))
        elif rep.observable.startswith("length_scale_"):
            pairs = result.pairs("length_scale", int(rep.observable.split("_")[-1]))
        if pairs is not None:
            emit_loglog_svg(rep, pairs, out / f"fig_{rep.observable}.svg")
    print(f"wrote {out / 'fit_reports.json'}")
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


def _cmd_check_inequalities(args) -> int:
    out = _outdir(args.out)
    rows = standard_inequality_suite()
    lines = ["check,params,statistic,value,threshold,passed"]
    all_passed = True
    for r in rows:
        all_passed &= r.passed
        thr = "" if r.threshold is None else fmt(r.threshold)
        lines.append(
            f"{r.check},\"{r.params}\",{r.statistic},{fmt(r.value)},{thr},"
            f"{int(r.passed)}"
        )
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check}[{r.params}]: "
              f"{r.statistic}={r.value:.3e}"
              + (f" (threshold {r.threshold:g})" if r.threshold is not None else ""))
    (out / "inequalities.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'inequalities.csv'}")
    return EXIT_OK if all_passed else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "report": _cmd_report,
        "check-inequalities": _cmd_check_inequalities,
    }
    try:
        return handlers[args.command](args)
    except AggdiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
