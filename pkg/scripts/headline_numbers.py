"""Print the headline contrast, population ratio and inverse rate for tau = 12 ns."""

from nv_polarimetry.dynamics import Branch, averages, contrast_from_gamma, evolve_symmetric
from nv_polarimetry.inference import invert_contrast
from nv_polarimetry.optics import emission_mixture, mixture_to_stokes
from nv_polarimetry.model import LevelModel

TAU = 12.0
GAMMA = 1 / 20.0


def main():
    state = evolve_symmetric(GAMMA, Branch.X, TAU)
    avg = averages(GAMMA, TAU)
    stokes = mixture_to_stokes(emission_mixture(avg, LevelModel()))
    print(f"p_x(tau), p_y(tau)      : {state.p_x:.6f}, {state.p_y:.6f}")
    print(f"alpha = tanh(gamma tau)  : {avg.alpha:.6f}")
    print(f"contrast                 : {contrast_from_gamma(GAMMA, TAU):.7f}")
    print(f"degree of polarization   : {stokes.degree_of_polarization:.6f}")
    for c in (0.55, 0.60):
        est = invert_contrast(c, TAU)
        print(f"gamma^-1 for C = {c:.2f}   : {est.gamma_inv:.4f} ns (alpha {est.alpha:.6f})")


if __name__ == "__main__":
    main()
