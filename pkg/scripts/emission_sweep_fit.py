"""Simulate noisy polarizer sweeps over a range of bath rates and recover gamma^-1."""

import argparse

import numpy as np

from nv_polarimetry.dynamics import Averaging, Weighting
from nv_polarimetry.inference import batch_report
from nv_polarimetry.model import RateSet
from nv_polarimetry.montecarlo import detected_sweep

TAU = 12.0
SWEEP = [float(a) for a in range(0, 180, 5)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=100_000, help="photons per sweep")
    p.add_argument("--trials", type=int, default=20)
    args = p.parse_args(argv)
    print("gamma_inv  coverage  median_estimate")
    for g_inv in (3.0, 5.0, 20.0, 100.0, 300.0):
        data = [(str(s), detected_sweep(RateSet.symmetric(1 / g_inv), TAU, SWEEP, args.n, seed=s))
                for s in range(args.trials)]
        rows = batch_report(data, TAU, Averaging.EXPONENTIAL, Weighting.LINEAR)
        hits = sum(r.ci_low <= g_inv <= r.ci_high for r in rows)
        est = np.median([r.gamma_inv for r in rows])
        print(f"{g_inv:9g}  {hits:3d}/{len(rows):<4d}  {est:.3g}")


if __name__ == "__main__":
    main()
