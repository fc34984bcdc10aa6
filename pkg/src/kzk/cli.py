"""Command-line entry point: ``kzk <subcommand> ...``.

Exit codes: 0 success or pass, 1 validation or gate failure (or a failed
verdict), 2 runtime failure, 64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import io
from .config import PRESETS, ConfigError, RunConfig, load_config, load_preset, validate
from .eigenbasis import mode_table

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2, 64
SUBCOMMANDS = ("run", "oracle", "inequalities", "experiment", "eigen-table", "validate")

log = logging.getLogger("kzk")


def _load(spec: str) -> RunConfig:
    """A config path, or the name of a shipped preset."""
    p = Path(spec)
    if not p.exists() and (spec in PRESETS or spec == "baseline"):
        return load_preset(spec)
    return load_config(p)


def _out_dir(cfg: RunConfig, override: str | None) -> Path:
    return Path(override) if override else cfg.output_path()


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    problems = validate(cfg)
    for p in problems:
        print(f"violation: {p}")
    if not problems:
        print("ok")
    return EXIT_INVALID if problems else EXIT_OK


def cmd_run(args) -> int:
    from .solver import run
    cfg = _load(args.config)
    problems = validate(cfg)
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_INVALID
    out = _out_dir(cfg, args.out)
    traj = run(cfg)
    io.write_records_csv(out / "diagnostics.csv", traj.records)
    if traj.final is not None:
        g = traj.final.grid
        io.write_field_csv(out / "final_field.csv", traj.final.values, g.x, g.y, g.X_max, g.L,
                           g.basis.family)
    for k, (t, st) in enumerate(traj.snapshots):
        g = st.grid
        io.write_field_csv(out / f"field_{k:05d}.csv", st.values, g.x, g.y, g.X_max, g.L,
                           g.basis.family)
    io.write_metadata(out, command="run", config=cfg.source, status=traj.status,
                      t_final=traj.t_final, message=traj.message)
    print(f"{traj.status}: {len(traj.records)} records to {out}")
    return EXIT_OK if traj.ok else EXIT_RUNTIME


def cmd_oracle(args) -> int:
    from . import linear_oracle as LO
    from .eigenbasis import build_basis
    from .experiments import _unit_mode
    basis = build_basis(args.family, args.L, args.count)

    def u0(x, y):
        prof = args.amplitude * np.exp(-0.5 * ((x - args.center) / args.width) ** 2)
        return prof * _unit_mode(basis, args.y_mode, y)

    st = LO.from_function(basis, u0, args.x_box, args.nx, args.b, args.center)
    st = LO.evolve(st, args.t)
    out = Path(args.out)
    io.write_field_csv(out, st.values, st.x, basis.nodes, args.x_box, args.L, basis.family)
    print(f"oracle field at t={args.t:g} to {out} (tail fraction {st.tail_mass_fraction():.3g})")
    return EXIT_OK


def cmd_inequalities(args) -> int:
    from .inequality_lab import TestFunctionEnsemble, run_suite
    ens = TestFunctionEnsemble(size=args.size, seed=args.seed, L=args.L)
    rows = run_suite(ens, refine=not args.no_refine)
    out = Path(args.out)
    io.write_table_csv(out, ["lemma", "parameters", "constant", "refined_constant", "pass"],
                       [(r.lemma, r.params, r.constant, r.refined_constant, r.passed)
                        for r in rows])
    ok = all(r.passed for r in rows)
    print(f"{sum(r.passed for r in rows)}/{len(rows)} rows pass; report in {out}")
    return EXIT_OK if ok else EXIT_INVALID


def cmd_experiment(args) -> int:
    from .experiments import run_preset
    cfg = _load(args.config)
    if cfg.preset is None:
        print("config has no [experiment] preset", file=sys.stderr)
        return EXIT_INVALID
    problems = validate(cfg)
    if problems:
        print("gate report:")
        for p in problems:
            print(f"  violation: {p}")
        return EXIT_INVALID
    out = _out_dir(cfg, args.out)
    verdict = run_preset(cfg, out)
    io.write_metadata(out, command="experiment", preset=cfg.preset, config=cfg.source)
    for k, v in asdict(verdict).items():
        if isinstance(v, list) and len(v) > 8:
            continue
        print(f"{k}: {v}")
    return EXIT_OK if verdict.passed else EXIT_INVALID


def cmd_eigen_table(args) -> int:
    rows = [(r[0], r[1]) for r in mode_table(args.family, args.L, args.count)]
    if args.out:
        io.write_table_csv(args.out, ["l", "lambda"], rows)
    else:
        print("l,lambda")
        for l, lam in rows:
            print(f"{l},{io.fmt(lam)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kzk", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a config against the model hypotheses")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="integrate a config and write diagnostics")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle", help="exact linear evolution of a Gaussian bump")
    p.add_argument("--family", default="a")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--x-box", type=float, default=30.0)
    p.add_argument("--nx", type=int, default=512)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--center", type=float, default=0.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--y-mode", type=int, default=1)
    p.add_argument("--out", default="oracle_field.csv")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("inequalities", help="randomized interpolation and trace inequality suite")
    p.add_argument("--size", type=int, default=200)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--out", default="inequalities.csv")
    p.set_defaults(func=cmd_inequalities)

    p = sub.add_parser("experiment", help="run a named experiment preset")
    p.add_argument("config", help="config path or preset name")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("eigen-table", help="eigenvalues of a boundary family")
    p.add_argument("--family", default="a")
    p.add_argument("--L", type=float, default=math.pi)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eigen_table)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    first = next((a for a in argv if not a.startswith("-")), None)
    if first is None or first not in SUBCOMMANDS:
        if "-h" in argv or "--help" in argv:
            ap.print_help()
            return EXIT_OK
        ap.print_usage(sys.stderr)
        print(f"unknown subcommand {first!r}; choose from {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # runtime failure of any subcommand
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
