"""Compare the iterative solver against support enumeration on random games."""

import argparse
import time

import numpy as np

from qnash.equilibrium import SolverConfig, solve_iterative, solve_support_enum
from qnash.game import GameSpec


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--games", type=int, default=100)
    parser.add_argument("--dims", type=int, nargs=2, default=[2, 2])
    parser.add_argument("--restarts", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    n = int(np.prod(args.dims))
    dists, uncertified, skipped = [], 0, 0
    t0 = time.perf_counter()
    for _ in range(args.games):
        spec = GameSpec(tuple(args.dims), rng.normal(size=(2, n)))
        eqs = solve_support_enum(spec)
        skipped += bool(eqs.skipped)
        res = solve_iterative(spec, SolverConfig(restarts=args.restarts, seed=args.seed))
        uncertified += not res.certified
        if eqs:
            dists.append(min(res.profile.distance(e.profile) for e in eqs))
    elapsed = time.perf_counter() - t0
    dists = np.array(dists)
    print(f"games {args.games}  dims {tuple(args.dims)}  time {elapsed:.2f}s")
    print(f"uncertified {uncertified}  games with singular supports {skipped}")
    print(f"distance to nearest enumerated equilibrium: max {dists.max():.2e}  median {np.median(dists):.2e}")
    print(f"within 1e-5: {(dists <= 1e-5).sum()}/{dists.size}")


if __name__ == "__main__":
    main()
