#!/usr/bin/env python3
"""Show how the depth-d upper bounds approach the measure on the bundled
automata: two geometric-rate languages, the 2/d crawl, and the language
whose measure is the irrational root of m = 1/2 + m^4/8."""

import argparse
from pathlib import Path

from treemeasure.formats import parse_automaton
from treemeasure.safety import exact_depth_measure, iterate_measure

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

CASES = [
    ("lab.aut", "path avoiding c", "1/2"),
    ("a_path_3.aut", "all-a path, 3 letters", "0"),
    ("a_path_2.aut", "all-a path, 2 letters", "0 (M_d ~ 2/d)"),
    ("even_block.aut", "even-depth release", "root of m = 1/2 + m^4/8"),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--max-iters", type=int, default=5000)
    ap.add_argument("--show-depths", type=int, nargs="*", default=[0, 1, 2, 4, 8])
    args = ap.parse_args()

    for name, blurb, limit in CASES:
        aut = parse_automaton((FIXTURES / name).read_text(), source=name)
        est = iterate_measure(aut, tolerance=args.tol, max_iters=args.max_iters)
        print(f"{name}: {blurb} (limit {limit})")
        for d in args.show_depths:
            if d <= est.iterations:
                exact = exact_depth_measure(aut, d)
                shown = str(exact) if len(str(exact)) <= 24 else f"rational with {exact.denominator.bit_length()}-bit denominator"
                print(f"  M_{d:<4} = {float(exact):.9f}  ({shown})")
        print(
            f"  -> value={est.value:.9f} status={est.status}"
            f" iterations={est.iterations} last_delta={est.last_delta:.2e}"
        )

    scalar = 1.0
    for _ in range(200):
        scalar = 0.5 + scalar**4 / 8
    print(f"\nscalar recurrence m = 1/2 + m^4/8 from 1: {scalar:.12f}")


if __name__ == "__main__":
    main()
