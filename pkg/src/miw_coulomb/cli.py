"""Command-line front end.

Usage:
    miw-coulomb solve   --n 11 [--format csv|json]
    miw-coulomb density --n 21 [--full-line] | --config positions.csv
    miw-coulomb sweep   --n 1..200 [--jobs 8]
    miw-coulomb energy  --n 1000 | --config positions.json
    miw-coulomb rerun   out/solve_N11.manifest.json

Exit codes: 0 success, 1 computation or validation failure, 2 usage error.
``MIW_COULOMB_OUT`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .density import build_step_density, density_distance, empirical_integral, empirical_mass
from .energy import average_hamiltonian
from .exceptions import MIWError
from .harness import ConvergenceRecord, check_mass_sandwich, fit_xn_scaling, sweep
from .model import HALF_LINE_MASS, target_density
from .solver import PrecisionMode, SolverConfig, solve_configuration, validate_configuration

log = logging.getLogger("miw_coulomb")

OUT_ENV = "MIW_COULOMB_OUT"


def positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"N must be >= 1, got {n}")
    return n


def n_list(text: str) -> list[int]:
    """Parse ``"11,21"``, ``"1..200"`` or a mix such as ``"1..10,50"``."""
    values: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            a, _, b = part.partition("..")
            lo, hi = positive_int(a), positive_int(b)
            if lo > hi:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            values.update(range(lo, hi + 1))
        else:
            values.add(positive_int(part))
    if not values:
        raise argparse.ArgumentTypeError("no N values given")
    return sorted(values)


def positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=positive_float, default=SolverConfig.tolerance,
                        help="residual tolerance for solving and validation (default %(default)g)")
    common.add_argument("--precision", choices=[m.value for m in PrecisionMode],
                        default=PrecisionMode.STANDARD.value)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="miw-coulomb",
        description="Many-interacting-worlds configurations for the 1D Coulomb first excited state.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve for the world positions")
    p.add_argument("--n", type=positive_int, required=True)

    for name, helptext in (("density", "empirical vs exact density series"),
                           ("energy", "interworld, Coulomb and average energies")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--n", type=positive_int)
        src.add_argument("--config", type=Path, help="positions file written by 'solve'")
        if name == "density":
            p.add_argument("--full-line", action="store_true",
                           help="mirror the half-line series onto x < 0")
            p.add_argument("--grid-points", type=positive_int, default=400)

    p = sub.add_parser("sweep", parents=[common], help="solve a range of N and fit x_N scaling")
    p.add_argument("--n", type=n_list, required=True, help="e.g. 1..200 or 11,21")
    p.add_argument("--jobs", type=positive_int, default=1)

    p = sub.add_parser("rerun", help="re-execute the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    return parser


def _out_dir(args) -> Path:
    out = args.out or Path(os.environ.get(OUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> SolverConfig:
    return SolverConfig(tolerance=args.tol, precision_mode=args.precision)


def _load_or_solve(args):
    if getattr(args, "config", None) is not None:
        return io.read_configuration(args.config), f"{args.config.stem}"
    cfg = solve_configuration(args.n, _config(args))
    return cfg, f"N{args.n}"


def _manifest(args, argv, outputs, inputs=()):
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
              if k not in ("command", "verbose")}
    return io.RunManifest(
        command=args.command,
        argv=list(argv),
        parameters=params,
        precision_mode=args.precision,
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
    )


def _finish(args, argv, stem, outputs, inputs=()):
    out = _out_dir(args)
    path = out / f"{stem}.manifest.json"
    io.write_json(path, _manifest(args, argv, outputs, inputs))
    for p in outputs:
        print(p)


def cmd_solve(args, argv) -> int:
    cfg = solve_configuration(args.n, _config(args))
    report = validate_configuration(cfg, args.tol)
    out = _out_dir(args)
    stem = f"solve_N{args.n}"
    data = io.configuration_dict(cfg, report)
    if args.format == "json":
        outputs = [io.write_json(out / f"{stem}.json", data)]
    else:
        outputs = [io.write_positions_csv(out / f"{stem}.csv", cfg),
                   io.write_json(out / f"{stem}.report.json", data)]
    _finish(args, argv, stem, outputs)
    for check in report.checks:
        status = "ok" if check.passed else "FAIL"
        print(f"  {check.name:<18} {status:<4} value={check.value:.6g} threshold={check.threshold:.3g}",
              file=sys.stderr)
    return 0 if report.passed else 1


def density_series(cfg, grid_points: int = 400, full_line: bool = False):
    """Step-rendering rows and uniform-grid rows of ``(x, p_empirical, p_target)``."""
    d = build_step_density(cfg)
    edges = d.breakpoints[::-1]  # ascending, starts at 0
    vals = np.concatenate([d.values[::-1], [0.0]])  # value right of each edge
    steps = []
    left = 0.0
    for x, right in zip(edges, vals):
        p = target_density(x)
        steps.append((x, left, p))
        steps.append((x, right, p))
        left = right
    grid = np.linspace(0.0, 1.2 * cfg.x1, grid_points)
    rows = list(zip(grid, d(grid), target_density(grid)))
    if full_line:
        steps = [(-x, pe, pt) for x, pe, pt in reversed(steps)] + steps
        rows = [(-x, pe, pt) for x, pe, pt in reversed(rows[1:])] + rows
    return steps, rows


def density_summary(cfg) -> dict:
    d = build_step_density(cfg)
    return {
        "n_worlds": cfg.n_worlds,
        "x1": cfg.x1,
        "xN": cfg.xN,
        "mass_no_boundary": empirical_mass(d),
        "mass_with_boundary": empirical_mass(d, include_boundary_term=True),
        "integral": empirical_integral(d),
        "target_half_mass": HALF_LINE_MASS,
        "mass_deficit": density_distance(d, "mass-deficit"),
        "l1_distance": density_distance(d, "l1"),
        "sup_distance": density_distance(d, "sup"),
    }


def cmd_density(args, argv) -> int:
    cfg, tag = _load_or_solve(args)
    steps, rows = density_series(cfg, args.grid_points, args.full_line)
    summary = density_summary(cfg)
    summary["full_line"] = args.full_line
    out = _out_dir(args)
    stem = f"density_{tag}"
    if args.format == "json":
        payload = dict(summary, steps=[list(r) for r in steps], grid=[list(r) for r in rows])
        outputs = [io.write_json(out / f"{stem}.json", payload)]
    else:
        outputs = [
            io.write_csv(out / f"{stem}.csv", io.DENSITY_COLUMNS, rows),
            io.write_csv(out / f"{stem}_steps.csv", io.DENSITY_COLUMNS, steps),
            io.write_json(out / f"{stem}.json", summary),
        ]
    inputs = [args.config] if args.config else []
    _finish(args, argv, stem, outputs, inputs)
    print(f"N={cfg.n_worlds} mass={summary['mass_no_boundary']:.6f} "
          f"deficit={summary['mass_deficit']:.6f}", file=sys.stderr)
    return 0


def cmd_energy(args, argv) -> int:
    cfg, tag = _load_or_solve(args)
    report = average_hamiltonian(cfg)
    out = _out_dir(args)
    stem = f"energy_{tag}"
    outputs = [io.write_json(out / f"{stem}.json", report)]
    inputs = [args.config] if args.config else []
    _finish(args, argv, stem, outputs, inputs)
    print(f"N={report.n_worlds} U={report.u_n:.12g} V={report.v_n:.12g} "
          f"H={report.h_n:.12g} bound={report.h_bound:.12g}", file=sys.stderr)
    return 0


def cmd_sweep(args, argv) -> int:
    records = sweep(args.n, _config(args), jobs=args.jobs)
    out = _out_dir(args)
    stem = "sweep"
    try:
        fit = fit_xn_scaling(records)
        fit_info = {"fit": fit, "in_window": fit.in_window}
    except ValueError as exc:
        fit_info = {"fit": None, "reason": str(exc)}
    sandwich = check_mass_sandwich(records)
    summary = dict(fit_info, sandwich=sandwich, sandwich_passed=sandwich.passed,
                   failed=[r.n_worlds for r in records if not r.ok])
    cols = ConvergenceRecord.columns()
    if args.format == "json":
        outputs = [io.write_json(out / f"{stem}.json", dict(summary, records=records))]
    else:
        rows = ([getattr(r, c) for c in cols] for r in records)
        outputs = [io.write_csv(out / f"{stem}.csv", cols, rows),
                   io.write_json(out / f"{stem}_fit.json", summary)]
    _finish(args, argv, stem, outputs)
    if fit_info["fit"] is not None:
        print(f"fitted a = {fit_info['fit'].exponent_a:.6f}", file=sys.stderr)
    failed = summary["failed"]
    if failed:
        print(f"{len(failed)} N values failed: {failed}", file=sys.stderr)
    return 1 if failed else 0


def cmd_rerun(args, argv) -> int:
    manifest = io.RunManifest.load(args.manifest)
    return main(manifest.argv)


COMMANDS = {
    "solve": cmd_solve,
    "density": cmd_density,
    "energy": cmd_energy,
    "sweep": cmd_sweep,
    "rerun": cmd_rerun,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except MIWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
