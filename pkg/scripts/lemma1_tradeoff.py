#!/usr/bin/env python3
"""Trap-guessing success versus GHZ collapse distortion for rotated product measurements.

One CSV row per (n, corrupted count, angle). Angle 0 is the computational
basis, pi/4 the dual basis.
"""
import argparse
import sys

from anonqtx import analysis as an


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", nargs="+", default=["3:1", "4:2", "5:2", "6:3"], help="n:m pairs")
    ap.add_argument("--grid", type=int, default=21)
    args = ap.parse_args(argv)

    rows = []
    for spec in args.sizes:
        n, m = map(int, spec.split(":"))
        reps = an.lemma1_check(n, m, grid=args.grid)
        print(f"n={n} m={m}: monotone={an.tradeoff_is_monotone(reps)}", file=sys.stderr)
        rows += [dict(n=n, m_corrupt=m, **r.to_dict()) for r in reps]
    sys.stdout.write(an.to_csv(rows, ("n", "m_corrupt") + an.LEMMA1_COLUMNS))


if __name__ == "__main__":
    main()
