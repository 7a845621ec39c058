"""Run the ideal-measurement protocol for a Weyl-Heisenberg basis on random inputs
and report the worst deviation from the projective instrument."""
import argparse

import numpy as np

from localizable.error_basis import gen_weyl_heisenberg
from localizable.ideal import (
    build_ideal_protocol,
    ideal_instrument,
    ideal_outcomes,
    instrument_distance,
    protocol_instrument,
    simulate_ideal,
)
from localizable.numeric import random_density_matrix, trace_distance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--j", type=int, default=0)
    ap.add_argument("--states", type=int, default=100)
    ap.add_argument("--shots", type=int, default=10_000)
    ap.add_argument("--seed", type=int, required=True)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    b = gen_weyl_heisenberg(args.d).to_measurement_basis()
    proto = build_ideal_protocol(b, args.j)
    print("instrument distance", instrument_distance(protocol_instrument(proto), ideal_instrument(b)))
    worst_p = worst_s = 0.0
    for _ in range(args.states):
        rho = random_density_matrix(args.d**2, rng)
        res = simulate_ideal(proto, rho)
        probs, states = ideal_outcomes(b, rho)
        worst_p = max(worst_p, np.abs(res.probabilities - probs).max())
        worst_s = max([worst_s] + [trace_distance(s, t) for s, t in zip(states, res.states) if s is not None])
    print(f"worst probability error {worst_p:.3e}, worst conditional-state trace distance {worst_s:.3e}")
    res = simulate_ideal(proto, rho, seed=args.seed, shots=args.shots)
    print("last state: exact", np.round(res.probabilities, 4))
    print("last state: freq ", np.round(res.counts / args.shots, 4))


if __name__ == "__main__":
    main()
