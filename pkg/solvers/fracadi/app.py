import argparse
import logging
import os
import sys

from jsonschema.exceptions import ValidationError

from solvers.fracadi.lib.enums import Command, OutputFormat
from solvers.fracadi.lib.harness import EXIT_CONFIG, run
from solvers.fracadi.lib.run_config import RunConfig

LOG = logging.getLogger("fracadi.app")


def _get_log_level() -> int:
    lvl = os.getenv("LOGLEVEL", "")
    if lvl:
        try:
            return getattr(logging, lvl.upper())
        except Exception:
            pass
    debug = os.getenv("DEBUG", "0").lower()
    if debug in ("1", "true", "yes", "on"):
        return logging.DEBUG
    return logging.INFO


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracadi",
                                description="Spline/ADI solvers for space-fractional "
                                            "convection-diffusion equations")
    p.add_argument("command", choices=[c.value for c in Command])
    p.add_argument("--problem", help="registry problem id (table1, table2, cd1d, cd2d-twosided, "
                                     "cd2d-onesided, powerlaw-1d)")
    p.add_argument("--alpha", help="order in x, or a comma-separated list")
    p.add_argument("--beta", help="order in y, or a comma-separated list")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--n", type=int, help="cells per direction")
    grid.add_argument("--h", help="comma-separated spacings, e.g. 1/50,1/100")
    p.add_argument("--dt", help="time step or 'match' to tie it to the spacing")
    p.add_argument("--tfinal", type=float, dest="t_final")
    p.add_argument("--out")
    p.add_argument("--format", choices=[f.value for f in OutputFormat])
    p.add_argument("--threads", help="worker threads or 'auto'")
    p.add_argument("--oracle-tol", type=float, dest="oracle_tol")
    p.add_argument("--config", help="JSON run configuration (or FRACADI_CONFIG)")
    p.add_argument("--dump-field", action="store_const", const=True, dest="dump_field")
    p.add_argument("--save-config", help="write the effective configuration to this file")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(args.config or os.getenv("FRACADI_CONFIG") or None)
    cfg.read_config()
    cfg.apply_overrides({
        "command": args.command,
        "problem": args.problem,
        "alphas": args.alpha,
        "betas": args.beta,
        "n": args.n,
        "h": args.h,
        "dt": args.dt,
        "t_final": args.t_final,
        "out": args.out,
        "format": args.format,
        "threads": args.threads,
        "oracle_tol": args.oracle_tol,
        "dump_field": args.dump_field,
    })
    return cfg


def main(argv: list[str] | None = None):
    logging.basicConfig(level=_get_log_level(), format="%(asctime)s %(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config(args)
        if args.save_config:
            cfg.write(args.save_config)
    except (ValueError, TypeError, ValidationError, OSError) as e:
        LOG.error("Invalid configuration: %s", e)
        sys.exit(EXIT_CONFIG)

    result = run(cfg)
    if result.exit_code != 0:
        LOG.error("fracadi %s failed with exit code %d", cfg.command.value, result.exit_code)
    for path in result.artifacts:
        print(path)
    sys.exit(result.exit_code)


if __name__ == "__main__":
    main()
