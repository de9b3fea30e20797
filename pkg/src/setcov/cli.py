"""
Command-line entry point: ``python -m setcov <subcommand> --config FILE``.

Exit codes: 0 all verdicts pass, 2 at least one failure, 3 only
indeterminate verdicts besides passes, 4 refusal or invalid configuration.
"""

import argparse
import json
import os
import sys

from . import experiments
from .config import config_hash, load_config
from .errors import ConfigError, RefusalError, SetcovError

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_INDETERMINATE = 3
EXIT_REFUSED = 4

SUBCOMMANDS = {
    "covariogram": "set covariograms: exact against Monte Carlo, optional radial profile",
    "limitcov": "finite-t normalised covariance against the limit covariance",
    "wt": "growth function w_t: quadrature, closed form and Monte Carlo",
    "regvar": "regular-variation index, Potter certificate and co-regular variation",
    "berry-rates": "growth rates of w_{q,t} for powers of the Bessel kernel",
    "clt": "Gaussianity and correlations of set-indexed field functionals",
    "reduction": "distance between a transform's statistic and its leading chaos",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="setcov", description="Set-indexed covariance experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configuration's seed")
    return parser


def _write_refusal(out_dir, command, cfg, exc):
    os.makedirs(out_dir, exist_ok=True)
    doc = {"experiment": command, "refused": True, "reason": str(exc),
           "config_hash": config_hash(cfg), "config": cfg}
    with open(os.path.join(out_dir, f"{command}.refusal.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, args.seed)
        report = experiments.run(cfg, args.command)
    except RefusalError as exc:
        print(f"setcov {args.command}: refused: {exc}", file=sys.stderr)
        _write_refusal(args.out, args.command, cfg, exc)
        return EXIT_REFUSED
    except ConfigError as exc:
        print(f"setcov {args.command}: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except SetcovError as exc:
        print(f"setcov {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    csv_path, json_path = report.write(args.out)
    for row in report.rows:
        if row.verdict != "info":
            print(f"{row.verdict.upper():13s} {row.name}"
                  + ("" if row.t is None else f" t={row.t:g}"))
    v = report.verdicts
    print(f"{report.experiment} [{report.config_hash}]: {v['pass']} pass, "
          f"{v['fail']} fail, {v['indeterminate']} indeterminate "
          f"({report.runtime:.2f} s) -> {csv_path}, {json_path}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
