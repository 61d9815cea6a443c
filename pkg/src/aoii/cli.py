"""Command-line entry point.

Usage:
    aoii <mode> [--config FILE] [--N ... --p ... --ps ... --alpha ...
                 --m --eps --xi --horizon --seed --out ...]

where <mode> is one of solve, sweep-p, sweep-ps, sweep-alpha, simulate,
validate.  Flags override values from the config file.  Exit codes: 0 on
success, 2 for configuration problems, 3 for solver non-convergence, 4 when
the truncation cap proved too small.
"""

from __future__ import annotations

import argparse
import sys

from .errors import AoiiError, ConfigError
from .experiment import MODES, parse_config, run


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoii",
        description="Constrained AoII-minimizing transmission scheduling: "
                    "solver, sweeps and Monte-Carlo validation.")
    sub = parser.add_subparsers(dest="mode", metavar="|".join(MODES))
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", type=str, default=None,
                        help="key=value config file")
        sp.add_argument("--N", type=int, default=None)
        sp.add_argument("--p", type=float, default=None)
        sp.add_argument("--ps", type=float, default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--m", type=int, default=None)
        sp.add_argument("--eps", type=float, default=None)
        sp.add_argument("--xi", type=float, default=None)
        sp.add_argument("--horizon", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=str, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.mode is None:
        print("error: a mode is required "
              f"({'|'.join(MODES)})", file=sys.stderr)
        return 2
    try:
        if args.config is not None:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}")
        else:
            text = ""
        overrides = {
            "N": args.N, "p": args.p, "p_s": args.ps, "alpha": args.alpha,
            "m": args.m, "eps": args.eps, "xi": args.xi,
            "horizon": args.horizon, "seed": args.seed, "out": args.out,
        }
        spec = parse_config(text, overrides=overrides, mode=args.mode)
        code = run(spec)
    except AoiiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(f"wrote {spec.output_path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
