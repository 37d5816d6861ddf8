#!/usr/bin/env python3
"""Spot-check the monotone-descent invariants on random automata: the
depth-d upper bounds never increase (exact arithmetic) and consecutive
type distributions stay ordered under the upward-closed-family order."""

import argparse
import random
import sys

from treemeasure.safety import SafetyAutomaton, verify_monotone_descent


def sample_automaton(rng: random.Random, letters=("a", "b"), max_states=4) -> SafetyAutomaton:
    n = rng.choice(range(2, max_states + 1))
    states = [f"q{i}" for i in range(n)]
    trans = []
    for q in states:
        for a in letters:
            for _ in range(rng.choice((0, 1, 1, 2))):
                trans.append((q, a, rng.choice(states), rng.choice(states)))
    initial = [q for q in states if rng.random() < 0.5] or [states[0]]
    return SafetyAutomaton(letters, states, trans, initial)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=25)
    ap.add_argument("--seed", type=int, default=20260813)
    ap.add_argument("--max-depth", type=int, default=25)
    ap.add_argument("--order-depth", type=int, default=10)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    failures = 0
    for i in range(args.count):
        aut = sample_automaton(rng)
        ok, bad_depth = verify_monotone_descent(
            aut, max_depth=args.max_depth, order_depth=args.order_depth
        )
        tag = "ok" if ok else f"FAIL at depth {bad_depth}"
        print(f"[{i + 1:3}/{args.count}] states={len(aut.states)} trans={len(aut.transitions):2} {tag}")
        failures += not ok
    print(f"{args.count - failures}/{args.count} automata satisfied both invariants")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
