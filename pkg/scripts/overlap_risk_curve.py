#!/usr/bin/env python3
"""How fast does the unseen-label risk decay with ID set size?

For uniform label distributions the risk of drawing a fresh sample whose
label never appeared among n i.i.d. ID draws is (1 - 1/C)^n: positive for
every finite n. Prints Monte Carlo estimates against the closed form.
"""

import argparse

import numpy as np

from oodbench.infotheory import overlap_risk_exact, simulate_overlap_risk

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--classes", type=int, nargs="+", default=[4, 10, 100])
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"{'C':>6}{'n_id':>8}{'analytic':>14}{'simulated':>14}{'std err':>12}")
    for c in args.classes:
        pmf = np.full(c, 1.0 / c)
        for n in (1, 3, 10, 30, 100, 300):
            exact = overlap_risk_exact(pmf, n)
            est, se = simulate_overlap_risk(pmf, n, trials=args.trials, seed=args.seed + n)
            print(f"{c:>6}{n:>8}{exact:>14.6f}{est:>14.6f}{se:>12.6f}")
        print()
