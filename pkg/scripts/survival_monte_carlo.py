"""Compare the survival-probability estimate with a Monte-Carlo run of the constant-rate model."""

import argparse

import numpy as np

from paulisurrogate.propagate import estimate_survival_prob


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10 ** 6)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--m", type=int, default=20)
    ap.add_argument("--max-freq", type=int, default=6)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("k  l  formula     monte_carlo  z")
    for k in range(2, args.m, 3):
        for l in range(1, min(k, args.max_freq) + 1):
            p = estimate_survival_prob(l, k, args.m, args.max_freq)
            hits = (rng.random((args.trials, args.m - k)) < l / k).sum(axis=1)
            mc = float(np.mean(l + hits <= args.max_freq))
            se = np.sqrt(max(p * (1 - p), 1e-300) / args.trials)
            print(f"{k:2d} {l:2d}  {p:.6f}    {mc:.6f}     {abs(mc - p) / se:5.2f}")


if __name__ == "__main__":
    main()
