"""Command-line entry point.

    mrlco-report curves|table --in <csv...> --out <dir> [--steps a,b]
"""

from __future__ import annotations

import argparse
import sys

from .data import ReportError
from .plots import PlotSpec, make_table, plot_curves


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrlco-report",
                                     description="Render figures/tables from result CSVs")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("curves", "table"):
        sub = subs.add_parser(name)
        sub.add_argument("--in", dest="inputs", nargs="+", required=True,
                         help="result CSV files")
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--steps", default=None,
                         help="curves: inclusive step range a,b; table: step list")
    return parser


def _parse_steps(text):
    if text is None:
        return None
    try:
        return tuple(int(x) for x in text.split(",") if x != "")
    except ValueError as exc:
        raise ReportError(f"bad --steps value {text!r}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        steps = _parse_steps(args.steps)
        spec = PlotSpec(inputs=args.inputs, out_dir=args.out, steps=steps)
        if args.command == "curves":
            if steps is not None and len(steps) != 2:
                raise ReportError("curves --steps wants exactly two values: a,b")
            written = plot_curves(spec)
            for path in written:
                print(path)
        else:
            path = make_table(spec)
            print(path)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
