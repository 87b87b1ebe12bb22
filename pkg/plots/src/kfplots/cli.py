"""Batch figure generation from experiment output files.

Exit codes: 0 ok, 2 usage error or malformed input.
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, render
from .schema import SchemaError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kfplot",
        description="Render figures from estimator-experiment output files.",
    )
    parser.add_argument(
        "--kind",
        required=True,
        choices=KINDS,
        help="figure type: error_curves overlays evaluate CSVs; spectrum "
        "scatters transition-matrix eigenvalues from a system JSON; surface "
        "and heatmap draw a trajectory CSV as a time/space field; trace "
        "plots a learner trace CSV",
    )
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="PATH",
        help="input file; repeat to overlay several error curves",
    )
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--title", default="", help="figure title")
    parser.add_argument("--xlabel", default="", help="x-axis label override")
    parser.add_argument("--ylabel", default="", help="y-axis label override")
    parser.add_argument(
        "--field",
        choices=["state", "estimate"],
        default="state",
        help="which trajectory field surface/heatmap draw (default state)",
    )
    parser.add_argument("--dpi", type=int, default=120, help="raster resolution (default 120)")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    spec = PlotSpec(
        kind=args.kind,
        inputs=tuple(args.inputs),
        output=args.out,
        title=args.title,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
        field=args.field,
        dpi=args.dpi,
    )
    try:
        render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
