"""Excited-state population exchange between the two orbital branches.

The two-branch master equation is one-dimensional once normalisation is
imposed, so every solution here is a closed-form exponential.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .model import DomainError, RateSet

CLOSURE_TOL = 1e-12


class Branch(enum.Enum):
    X = "X"  # upper branch E_x
    Y = "Y"  # lower branch E_y

    @property
    def other(self) -> "Branch":
        return Branch.Y if self is Branch.X else Branch.X


# Names used in the level-structure description of a pumped branch.
UpperX = Branch.X
LowerY = Branch.Y


class Averaging(str, enum.Enum):
    """How the pre-emission branch populations are averaged.

    ``POINT`` takes the value at t = tau (the canonical model behind the
    contrast law). ``EXPONENTIAL`` weights the occupation by the exponential
    emission-time density; it is what a photon-counting simulation measures.
    """

    POINT = "point"
    EXPONENTIAL = "exponential"


class Weighting(str, enum.Enum):
    """Power applied to the mean populations in the polarizer intensity law."""

    SQUARED = "squared"
    LINEAR = "linear"

    @property
    def power(self) -> int:
        return 2 if self is Weighting.SQUARED else 1


@dataclass(frozen=True)
class PopulationState:
    p_x: float
    p_y: float
    t: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.p_x <= 1.0 and 0.0 <= self.p_y <= 1.0):
            raise DomainError(f"populations must lie in [0, 1], got ({self.p_x}, {self.p_y})")
        if abs(self.p_x + self.p_y - 1.0) > CLOSURE_TOL:
            raise DomainError(f"populations must sum to 1, got {self.p_x + self.p_y!r}")

    @classmethod
    def pumped(cls, branch: Branch) -> "PopulationState":
        return cls(1.0, 0.0) if branch is Branch.X else cls(0.0, 1.0)

    def population(self, branch: Branch) -> float:
        return self.p_x if branch is Branch.X else self.p_y


@dataclass(frozen=True)
class BranchAverages:
    mean_p_x: float
    mean_p_y: float
    alpha: float
    excited_branch: Branch

    @property
    def pumped_mean(self) -> float:
        return self.mean_p_x if self.excited_branch is Branch.X else self.mean_p_y

    @property
    def other_mean(self) -> float:
        return self.mean_p_y if self.excited_branch is Branch.X else self.mean_p_x


def _clip_pair(p_x: float) -> tuple[float, float]:
    p_x = min(1.0, max(0.0, p_x))
    return p_x, 1.0 - p_x


def evolve_general(rates: RateSet, initial: PopulationState, t: float) -> PopulationState:
    """Exact solution of dp_x/dt = c_xy p_y - c_yx p_x with p_x + p_y = 1.

    Rates may be asymmetric. The state relaxes towards
    c_xy / (c_xy + c_yx) at the total rate c_xy + c_yx.
    """
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    total = rates.c_xy + rates.c_yx
    if total == 0.0:
        return PopulationState(initial.p_x, initial.p_y, initial.t + t)
    p_inf = rates.c_xy / total
    decay = math.exp(-total * t)
    p_x = p_inf + (initial.p_x - p_inf) * decay
    p_x, p_y = _clip_pair(p_x)
    return PopulationState(p_x, p_y, initial.t + t)


def evolve_symmetric(gamma: float, excited_branch: Branch, t: float) -> PopulationState:
    """Populations at time ``t`` for equal up/down rates and a fully pumped branch.

    >>> s = evolve_symmetric(0.05, Branch.X, 12.0)
    >>> round(s.p_x, 6), round(s.p_y, 6)
    (0.650597, 0.349403)
    """
    if gamma < 0:
        raise DomainError(f"gamma must be non-negative, got {gamma}")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    decay = math.exp(-2.0 * gamma * t)
    pumped = 0.5 * (1.0 + decay)
    other = 0.5 * (1.0 - decay)
    if excited_branch is Branch.X:
        return PopulationState(pumped, other, t)
    return PopulationState(other, pumped, t)


def _averages(pumped: float, other: float, alpha: float, branch: Branch) -> BranchAverages:
    if branch is Branch.X:
        return BranchAverages(pumped, other, alpha, branch)
    return BranchAverages(other, pumped, alpha, branch)


def branch_averages(gamma: float, tau: float, excited_branch: Branch) -> BranchAverages:
    """Pre-emission populations approximated by their value at t = tau.

    The population ratio is then exactly tanh(gamma * tau).
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    state = evolve_symmetric(gamma, excited_branch, tau)
    alpha = math.tanh(gamma * tau)
    return _averages(state.population(excited_branch), state.population(excited_branch.other), alpha, excited_branch)


def exp_weighted_averages(gamma: float, tau: float, excited_branch: Branch) -> BranchAverages:
    """Pre-emission populations averaged over the exponential emission-time density.

    Not the canonical model; selected explicitly with ``Averaging.EXPONENTIAL``.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be non-negative, got {gamma}")
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    damping = 1.0 / (1.0 + 2.0 * gamma * tau)
    pumped = 0.5 * (1.0 + damping)
    other = 0.5 * (1.0 - damping)
    return _averages(pumped, other, other / pumped, excited_branch)


def averages(gamma: float, tau: float, excited_branch: Branch = Branch.X,
             averaging: Averaging | str = Averaging.POINT) -> BranchAverages:
    if Averaging(averaging) is Averaging.EXPONENTIAL:
        return exp_weighted_averages(gamma, tau, excited_branch)
    return branch_averages(gamma, tau, excited_branch)


def contrast_from_alpha(alpha: float) -> float:
    """Polarizer-sweep contrast (1 - alpha^2) / (1 + alpha^2)."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    a2 = alpha * alpha
    return (1.0 - a2) / (1.0 + a2)


def contrast_from_gamma(gamma: float, tau: float,
                        averaging: Averaging | str = Averaging.POINT,
                        weighting: Weighting | str = Weighting.SQUARED) -> float:
    """Predicted contrast for a given relaxation rate under a chosen detection model.

    Closed forms in x = gamma * tau, written to stay accurate when the
    contrast is tiny:

    ===========  ========  ==========================
    averaging    weights   contrast
    ===========  ========  ==========================
    point        squared   sech(2x)
    point        linear    exp(-2x)
    exponential  squared   (1 + 2x) / (1 + 2x + 2x^2)
    exponential  linear    1 / (1 + 2x)
    ===========  ========  ==========================

    The first row equals ``contrast_from_alpha(tanh(x))``.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be non-negative, got {gamma}")
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    x = gamma * tau
    squared = Weighting(weighting) is Weighting.SQUARED
    if Averaging(averaging) is Averaging.POINT:
        if squared:
            return 0.0 if 2.0 * x > 710.0 else 1.0 / math.cosh(2.0 * x)
        return math.exp(-2.0 * x)
    if squared:
        return (1.0 + 2.0 * x) / (1.0 + 2.0 * x + 2.0 * x * x)
    return 1.0 / (1.0 + 2.0 * x)


@dataclass(frozen=True)
class Figure4Row:
    gamma_inv: float
    contrast: float
    alpha: float


def figure4_table(tau: float, gamma_inv_grid: Iterable[float]) -> list[Figure4Row]:
    """Contrast and population ratio against the inverse relaxation rate at fixed tau."""
    rows = []
    for g_inv in gamma_inv_grid:
        g_inv = float(g_inv)
        if not g_inv > 0:
            raise DomainError(f"gamma_inv must be positive, got {g_inv}")
        avg = branch_averages(1.0 / g_inv, tau, Branch.X)
        rows.append(Figure4Row(g_inv, contrast_from_gamma(1.0 / g_inv, tau), avg.alpha))
    return rows


def log_grid(lo: float = 1.0, hi: float = 1000.0, n: int = 200) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def write_figure4_csv(rows: Iterable[Figure4Row], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["gamma_inv_ns", "contrast", "alpha"])
    for r in rows:
        writer.writerow([f"{r.gamma_inv:.6g}", f"{r.contrast:.6g}", f"{r.alpha:.6g}"])
