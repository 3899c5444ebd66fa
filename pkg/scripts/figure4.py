"""Contrast and alpha versus inverse bath rate, written as CSV."""

import argparse
import sys

from nv_polarimetry.dynamics import figure4_table, log_grid, write_figure4_csv


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tau", type=float, default=12.0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("-o", "--output", help="CSV path (default stdout)")
    args = p.parse_args(argv)
    rows = figure4_table(args.tau, log_grid(1.0, 1000.0, args.points))
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_figure4_csv(rows, fh)
    else:
        write_figure4_csv(rows, sys.stdout)


if __name__ == "__main__":
    main()
