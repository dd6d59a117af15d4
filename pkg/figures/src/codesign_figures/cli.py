"""Command line entry for the figure renderer.

One subcommand per figure kind; every subcommand takes --in (one or
more CSVs) and --out (SVG by default, PNG when the extension says so).
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codesign-figures",
        description="Render figures from co-design experiment CSVs")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--in", dest="inputs", nargs="+", required=True,
                       help="input CSV file(s)")
        p.add_argument("--out", required=True, help="output image path")
        p.add_argument("--title")
        if kind == "lines":
            p.add_argument("--x", default="value")
            p.add_argument("--y", default="lqr_sum",
                           help="comma-separated y columns")
            p.add_argument("--group", default=None)
        if kind == "contour":
            p.add_argument("--z", default="lqr_sum")
            p.add_argument("--levels", type=int, default=12)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=args.inputs,
        output=args.out,
        x=getattr(args, "x", "value"),
        y=tuple(getattr(args, "y", "lqr_sum").split(",")),
        group=getattr(args, "group", None),
        z=getattr(args, "z", "lqr_sum"),
        levels=getattr(args, "levels", 12),
        title=args.title,
    )
    try:
        path = render(spec)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
