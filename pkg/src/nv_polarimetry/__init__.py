"""Polarization-resolved photoluminescence of a two-branch emitter with bath relaxation."""

from .dynamics import (
    Averaging,
    Branch,
    BranchAverages,
    PopulationState,
    Weighting,
    branch_averages,
    contrast_from_alpha,
    contrast_from_gamma,
    evolve_general,
    evolve_symmetric,
    exp_weighted_averages,
    figure4_table,
)
from .inference import FitResult, GammaEstimate, batch_report, fit_cosine, invert_contrast
from .model import (
    DomainError,
    EmitterConfig,
    LevelModel,
    RateSet,
    ThermalBath,
    boltzmann_factor,
    load_config,
    rates_from_detailed_balance,
    thermal_frequency,
)
from .optics import (
    EmissionMixture,
    StokesVector,
    emission_mixture,
    excitation_efficiency,
    mixture_to_stokes,
    polarizer_sweep,
    propagate,
    qwp_contrast_scan,
)

__version__ = "0.1.0"
