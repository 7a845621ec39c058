"""Classify LU-dressed two-qubit fixtures and the product family across mu.

Prints a confusion table for the fixtures and the verdict along a mu sweep of
``{|00>, |01>, |1 e0>, |1 e1>}``.
"""
import argparse
from collections import Counter

import numpy as np

from localizable.bipartite import MeasurementBasis
from localizable.numeric import random_unitary
from localizable.two_qubit import (
    bb84_basis,
    bell_basis,
    classify_two_qubit,
    computational_basis,
    pbsm_basis,
    product_basis,
)


def dress(b, rng):
    out = b.transformed(random_unitary(2, rng), random_unitary(2, rng))
    ops = out.ops * np.exp(2j * np.pi * rng.random(4))[:, None, None]
    return MeasurementBasis(ops[rng.permutation(4)])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, required=True)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    fixtures = {
        "computational": computational_basis(),
        "bell": bell_basis(),
        "bb84": bb84_basis(),
        "pbsm": pbsm_basis(),
        "mu=0.3": product_basis(0.3),
    }
    print(f"{'fixture':<14} verdicts over {args.trials} random LU")
    for name, basis in fixtures.items():
        tally = Counter(classify_two_qubit(dress(basis, rng)).tag.value for _ in range(args.trials))
        print(f"{name:<14} {dict(tally)}")

    print("\nmu sweep")
    for mu in np.linspace(0, 1, 11):
        cls = classify_two_qubit(dress(product_basis(mu, rng.uniform(0, 2 * np.pi)), rng))
        print(f"  mu={mu:.1f}  {cls.tag.value:<15} measured mu={cls.detail['mu']:.6f}")


if __name__ == "__main__":
    main()
