"""Command line: render figures from bandsplit result CSVs.

    bandsplit-plots render --in results.csv --kind throughput --out fig.svg
"""

import argparse
import sys
import warnings

from .render import KINDS, FigureSpec, RenderError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandsplit-plots")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure from a sweep CSV")
    r.add_argument("--in", dest="csv_path", required=True, metavar="CSV")
    r.add_argument("--kind", choices=KINDS, required=True)
    r.add_argument("--out", dest="out_path", required=True, metavar="PATH")
    r.add_argument("--png", action="store_true", help="write PNG instead of SVG")
    return parser


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            labels = render(FigureSpec(csv_path=ns.csv_path, kind=ns.kind,
                                       out_path=ns.out_path, png=ns.png))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {ns.out_path} ({len(labels)} series)")
    return 0


def entry() -> None:
    sys.exit(main())
