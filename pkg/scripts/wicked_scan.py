"""Scan random unitary error bases and tally how many are LU-equivalent to nice ones.

Also cross-checks the triple-product closure against the niceness test on every sample.
"""
import argparse
import json
import time

import numpy as np

from localizable.error_basis import check_lu_equivalent_to_nice, random_ueb
from localizable.localizability import triple_product_closure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, required=True)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = []
    for d in args.dims:
        start = time.perf_counter()
        nice = agree = 0
        for _ in range(args.samples):
            ueb = random_ueb(d, rng)
            verdict = check_lu_equivalent_to_nice(ueb)[0]
            closure = triple_product_closure(ueb.to_measurement_basis()).holds
            nice += verdict
            agree += verdict == closure
        rows.append({"d": d, "samples": args.samples, "nice_equivalent": nice, "closure_agrees": agree,
                     "seconds": round(time.perf_counter() - start, 3)})
    print(json.dumps({"seed": args.seed, "rows": rows}, indent=1))


if __name__ == "__main__":
    main()
