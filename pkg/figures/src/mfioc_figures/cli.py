"""Command line for the figure scripts.

Each subcommand takes input CSV path(s) and an output image path; schema
violations exit with code 2.
"""

import argparse
import sys

from .plots import plot_convergence, plot_montecarlo, plot_overlay
from .schemas import SchemaError


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mfioc-figures",
        description="Render convergence, overlay, and Monte Carlo figures "
                    "from solver output files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="dual-variable convergence curve")
    p.add_argument("trace", help="solver trace CSV")
    p.add_argument("out", help="output image path")
    p.set_defaults(run=lambda a: plot_convergence(a.trace, a.out))

    p = sub.add_parser("overlay", help="expert vs reconstructed trajectories")
    p.add_argument("expert", help="expert trajectory CSV")
    p.add_argument("recon", help="reconstructed trajectory CSV")
    p.add_argument("out", help="output image path")
    p.set_defaults(run=lambda a: plot_overlay(a.expert, a.recon, a.out))

    p = sub.add_parser("montecarlo", help="per-trial study panels")
    p.add_argument("summary", help="per-trial rows CSV")
    p.add_argument("out", help="output image path")
    p.set_defaults(run=lambda a: plot_montecarlo(a.summary, a.out))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.run(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
