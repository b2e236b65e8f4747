"""figplot command line: regenerate one figure from a summary CSV."""

import argparse
import sys

from .render import KINDS, EmptyInputError, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="figplot",
                                 description="Figure regeneration from sweep CSVs")
    sp = ap.add_subparsers(dest="command", required=True)
    plot = sp.add_parser("plot", help="render one figure kind")
    plot.add_argument("--kind", choices=KINDS, required=True)
    plot.add_argument("--in", dest="csv_path", required=True, metavar="CSV")
    plot.add_argument("--out", dest="out_path", required=True, metavar="IMG")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = render(PlotSpec(args.csv_path, args.kind, args.out_path))
    except (SchemaError, EmptyInputError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
