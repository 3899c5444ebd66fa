"""Compare Monte Carlo trajectories with the closed-form rate-equation results."""

import argparse
import math

import numpy as np

from nv_polarimetry.dynamics import Branch, evolve_symmetric, exp_weighted_averages
from nv_polarimetry.model import RateSet
from nv_polarimetry.montecarlo import McConfig, occupation_curve, simulate

TAU = 12.0


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--gamma-inv", type=float, default=20.0)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    args = p.parse_args(argv)
    gamma = 1 / args.gamma_inv
    cfg = McConfig(args.n, args.seed, RateSet.symmetric(gamma), TAU)
    print(" t_ns   p_x_hat   closed    z")
    for pt in occupation_curve(cfg, np.linspace(0, 60, 11)):
        exact = evolve_symmetric(gamma, Branch.X, pt.t).p_x
        z = (pt.p_x_hat - exact) / pt.sigma if pt.sigma else 0.0
        print(f"{pt.t:5.1f}  {pt.p_x_hat:.5f}  {exact:.5f}  {z:+.2f}")
    batch = simulate(cfg, workers=args.workers)
    f = exp_weighted_averages(gamma, TAU, Branch.X).mean_p_x
    sigma = math.sqrt(f * (1 - f) / args.n)
    print(f"emitted from E_x: {batch.fraction_x:.5f} (closed form {f:.5f}, z {(batch.fraction_x - f) / sigma:+.2f})")
    print(f"mean flips      : {batch.n_flips.mean():.4f} (gamma tau {gamma * TAU:.4f})")


if __name__ == "__main__":
    main()
