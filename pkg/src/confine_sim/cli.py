"""Command line entry point: ``confine-sim {run,sweep,metrics,validate-config}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import MetricsRow, SweepSpec, metrics_from_trajectory, parse_axis, run_sweep, sweep_columns
from .params import ConfigurationError, load_config

EXIT_OK = 0
EXIT_ABORTED = 1
EXIT_CONFIG = 2

log = logging.getLogger("confine_sim")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="confine-sim", description="Confined cell migration simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--config", default="defaults", help="YAML config file or 'defaults'")
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--t-end", type=float, default=None, help="override numerics.t_end")
        sp.add_argument("--snapshot-stride", type=int, default=None, help="accepted steps between snapshots")

    sp = sub.add_parser("run", help="run one simulation")
    common(sp, "run_out")

    sp = sub.add_parser("sweep", help="run a parameter grid")
    common(sp, "sweep_out")
    sp.add_argument("--axis", action="append", default=[], metavar="NAME=GRID",
                    help="e.g. nucleus.k_b=logspace(-2.5,-0.5,5); repeatable")
    sp.add_argument("--jobs", type=int, default=1, help="parallel simulations")

    sp = sub.add_parser("metrics", help="recompute metrics from a trajectory file")
    sp.add_argument("trajectory", help="trajectory .jsonl file")
    sp.add_argument("--out", default=None, help="write metrics CSV here instead of stdout")

    sp = sub.add_parser("validate-config", help="check a config file")
    sp.add_argument("--config", default="defaults")
    return p


def _metrics_columns() -> list[str]:
    return list(MetricsRow.COLUMNS)


def _cmd_run(args) -> int:
    from .engine import run
    from .io import write_summary_csv, write_table, write_trajectory

    params = load_config(args.config)
    if args.snapshot_stride is not None and args.snapshot_stride < 1:
        raise ConfigurationError("--snapshot-stride must be at least 1")
    if args.t_end is not None and not args.t_end > 0:
        raise ConfigurationError("--t-end must be positive")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traj = run(params, t_end=args.t_end, snapshot_stride=args.snapshot_stride)
    write_trajectory(traj, out / "trajectory.jsonl")
    write_summary_csv(traj, out / "summary.csv")
    row = metrics_from_trajectory(traj)
    write_table([row.as_record()], _metrics_columns(), out / "metrics.csv")
    print(f"{traj.status}: t={traj.final.t:.6g} steps={traj.final.step} speed={row.mean_speed:.6g} "
          f"area_ratio={row.mean_area_ratio:.6g}")
    if not traj.completed:
        print(f"aborted: {traj.message}", file=sys.stderr)
        return EXIT_ABORTED
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .io import write_table

    params = load_config(args.config)
    if not args.axis:
        raise ConfigurationError("sweep needs at least one --axis")
    axes = tuple(parse_axis(a) for a in args.axis)
    spec = SweepSpec(base=params, axes=axes, jobs=args.jobs, t_end=args.t_end,
                     snapshot_stride=args.snapshot_stride)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(idx, row):
        log.info("point %d: %s speed=%.4g status=%s", idx, row.values, row.mean_speed, row.status)

    rows = run_sweep(spec, progress=progress)
    path = write_table([r.as_record() for r in rows], sweep_columns(spec), out / "sweep.csv")
    print(f"{len(rows)} rows written to {path}")
    return EXIT_OK if all(r.status == "completed" for r in rows) else EXIT_ABORTED


def _cmd_metrics(args) -> int:
    from .io import TrajectoryFormatError, read_trajectory, write_table

    try:
        traj = read_trajectory(args.trajectory)
    except (OSError, TrajectoryFormatError, ValueError, KeyError) as exc:
        print(f"error: cannot read trajectory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    row = metrics_from_trajectory(traj)
    cols = _metrics_columns()
    if args.out:
        write_table([row.as_record()], cols, args.out)
    else:
        rec = row.as_record()
        for c in cols:
            print(f"{c},{rec[c]!r}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .params import dump_config

    params = load_config(args.config)
    sys.stdout.write(dump_config(params))
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "metrics": _cmd_metrics, "validate-config": _cmd_validate}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
