"""Command line wrapper: `plots <figure-id> --in <csv> --out <file>`."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render experiment CSVs into figures"
    )
    parser.add_argument("figure", choices=sorted(FIGURES),
                        help="figure id to render")
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        help="input CSV path (repeatable)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--linear-y", action="store_true",
                        help="disable the default log-scale y axis")
    parser.add_argument("--label", action="append", default=[],
                        metavar="KEY=TEXT", help="override a legend label")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    labels = {}
    for item in args.label:
        if "=" not in item:
            print(f"error: bad label override {item!r}", file=sys.stderr)
            return 1
        key, text = item.split("=", 1)
        labels[key] = text
    try:
        spec = FigureSpec(
            figure=args.figure,
            inputs=args.inputs,
            output=args.out,
            log_y=not args.linear_y,
            labels=labels,
        )
        render(spec)
        return 0
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
