"""Command line interface.

Exit codes: 0 on success, 2 on an assumption violation (and on invalid
configuration), 1 on a numerical failure or a failed verification suite.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments
from .config import RunConfig, load_config, parse_levels
from .exceptions import AssumptionViolation, ConfigError, DifemError
from .mesh import build_mesh, dump_mesh
from .problems import catalog
from .reporting import NORMALIZATIONS

EXIT_OK, EXIT_NUMERICAL, EXIT_ASSUMPTION = 0, 1, 2

log = logging.getLogger("difem")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="difem", description="Direct FEM for elliptic interface problems.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study of a built-in example")
    run.add_argument("--config", help="key = value configuration file (flags win)")
    run.add_argument("--example", type=int)
    run.add_argument("--beta-minus", type=float, dest="beta_minus")
    run.add_argument("--levels", type=parse_levels, help="inclusive range first:last")
    run.add_argument("--out", dest="output_dir")
    run.add_argument("--reference-degree", type=int, dest="reference_degree")
    run.add_argument("--assumption-c", type=float, dest="assumption_c")
    run.add_argument("--normalization", choices=NORMALIZATIONS)
    run.add_argument("--strict", action="store_const", const=True, default=None,
                     help="treat every resolution warning as an assumption violation")

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("--suite", choices=sorted(experiments.SUITES), required=True)
    ver.add_argument("--out", help="write the suite report to this file")

    dm = sub.add_parser("dump-mesh", help="print a structured mesh")
    dm.add_argument("--level", type=int, required=True)
    dm.add_argument("--domain", default="0,1", help="a,b for the square [a,b]^2")
    dm.add_argument("--example", type=int, help="use the domain of a built-in example")
    dm.add_argument("--out", help="write to this file instead of stdout")
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = cfg.merged(
        example=args.example, beta_minus=args.beta_minus, levels=args.levels,
        output_dir=args.output_dir, reference_degree=args.reference_degree,
        assumption_c=args.assumption_c, normalization=args.normalization, strict=args.strict,
    )
    problem = catalog(cfg.example, cfg.beta_minus)
    run = experiments.run_convergence(
        problem, cfg.level_range(problem.levels), cfg.output_dir,
        cfg.reference_degree, cfg.assumption_c, cfg.strict, cfg.normalization,
    )
    print(f"{problem.name} beta_minus/beta_plus={cfg.beta_minus:g} ({cfg.normalization} normalization)")
    print(run.table())
    for f in run.files:
        print(f"wrote {f}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    ok, text = experiments.SUITES[args.suite]()
    print(text)
    print(f"{args.suite}: {'PASS' if ok else 'FAIL'}")
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK if ok else EXIT_NUMERICAL


def _cmd_dump_mesh(args) -> int:
    if args.example is not None:
        domain = catalog(args.example, 1.0).domain
    else:
        try:
            a, b = (float(v) for v in args.domain.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad domain {args.domain!r}; expected a,b") from exc
        domain = (a, b)
    try:
        text = dump_mesh(build_mesh(domain, args.level))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "verify": _cmd_verify, "dump-mesh": _cmd_dump_mesh}[args.command]
    try:
        return handler(args)
    except (AssumptionViolation, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except DifemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
