"""Best polarizer contrast over quarter-wave-plate angles for mixed and elliptical light."""

import math

import numpy as np

from nv_polarimetry.dynamics import averages
from nv_polarimetry.model import LevelModel
from nv_polarimetry.optics import EmissionMixture, StokesVector, best_qwp_contrast, emission_mixture, mixture_to_stokes

TAU = 12.0
QWP = [float(a) for a in range(0, 180)]


def main():
    s = mixture_to_stokes(emission_mixture(averages(1 / 20.0, TAU), LevelModel()))
    angle, best = best_qwp_contrast(s, QWP)
    print(f"emission mixture : DOP {s.degree_of_polarization:.6f}, best {best:.6f} at QWP {angle:g} deg")
    q = s.degree_of_linear_polarization
    ell = StokesVector(1.0, q, 0.0, math.sqrt(1 - q * q))
    angle, best = best_qwp_contrast(ell, QWP)
    print(f"elliptical       : DOP {ell.degree_of_polarization:.6f}, best {best:.6f} at QWP {angle:g} deg")
    rng = np.random.default_rng(0)
    gaps = []
    for _ in range(200):
        mix = EmissionMixture(rng.uniform(), rng.uniform(), float(rng.uniform(-90, 90)))
        s = mixture_to_stokes(mix)
        gaps.append(best_qwp_contrast(s, QWP, refine=True)[1] - s.degree_of_polarization)
    print(f"random mixtures  : max(best - DOP) = {max(gaps):.2e} over {len(gaps)} draws")


if __name__ == "__main__":
    main()
