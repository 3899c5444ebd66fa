"""Synthetic excitation spectra and laser-polarization accumulations.

Every optical line is a peak-normalised Lorentzian scaled by the Malus
overlap between the laser polarization and the dipole of its branch.
Frequencies are GHz detunings; linewidths and drift are MHz.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .dynamics import Branch
from .model import SPIN_LABELS, DomainError, LevelModel
from .optics import excitation_efficiency


@dataclass(frozen=True)
class SpectrumLine:
    center: float
    fwhm: float
    amplitude: float
    branch: Branch
    spin_label: str

    def __post_init__(self):
        if not self.fwhm > 0:
            raise DomainError(f"fwhm must be positive, got {self.fwhm}")
        if self.amplitude < 0:
            raise DomainError(f"amplitude must be non-negative, got {self.amplitude}")

    @property
    def is_sz(self) -> bool:
        """True for the S_z-conserving line, the one selected for polarimetry."""
        return self.spin_label == "Sz"


@dataclass(frozen=True)
class SweepPlan:
    f_start: float
    f_stop: float
    n_points: int
    laser_angle: float = 0.0
    drift_rate: float = 0.0  # MHz per sweep
    noise: float = 0.0  # mean photon counts per unit signal; 0 disables sampling

    def __post_init__(self):
        if not self.f_start < self.f_stop:
            raise DomainError("f_start must be below f_stop")
        if self.n_points < 2:
            raise DomainError("n_points must be at least 2")
        if self.noise < 0:
            raise DomainError("noise scale must be non-negative")

    @property
    def frequencies(self) -> np.ndarray:
        return np.linspace(self.f_start, self.f_stop, self.n_points)


def lorentzian(f, center: float, fwhm_ghz: float):
    """Unit-height Lorentzian; equals 0.5 at ``center +/- fwhm/2``."""
    x = 2.0 * (np.asarray(f, dtype=float) - center) / fwhm_ghz
    return 1.0 / (1.0 + x * x)


def build_lines(model: LevelModel, amplitude: float = 1.0) -> list[SpectrumLine]:
    """Three spin lines per branch; E_y sits below the origin, E_x above it."""
    lines = []
    half = 0.5 * model.delta
    for branch, base, offsets in (
        (Branch.Y, model.zpl_detuning - half, model.spin_offsets_y),
        (Branch.X, model.zpl_detuning + half, model.spin_offsets_x),
    ):
        for label, off in zip(SPIN_LABELS, offsets):
            lines.append(SpectrumLine(base + off, model.linewidth, amplitude, branch, label))
    return lines


def sz_line(lines: Iterable[SpectrumLine], branch: Branch) -> SpectrumLine:
    for line in lines:
        if line.branch is branch and line.is_sz:
            return line
    raise LookupError(f"no S_z line for branch {branch.value}")


def dipole_angle(model: LevelModel, branch: Branch) -> float:
    return model.dipole_x_angle if branch is Branch.X else model.dipole_y_angle


def expected_spectrum(plan: SweepPlan, lines: Sequence[SpectrumLine], model: LevelModel,
                      row: int = 0) -> np.ndarray:
    """Noiseless signal of sweep number ``row`` (drift shifts every line by row * drift_rate)."""
    f = plan.frequencies
    shift = 1e-3 * plan.drift_rate * row
    y = np.zeros_like(f)
    for line in lines:
        eff = excitation_efficiency(plan.laser_angle, dipole_angle(model, line.branch))
        y += line.amplitude * eff * lorentzian(f, line.center + shift, 1e-3 * line.fwhm)
    return y


def spectrum(plan: SweepPlan, lines: Sequence[SpectrumLine], model: LevelModel,
             row: int = 0, rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(frequencies, counts)`` for one laser sweep.

    With ``plan.noise > 0`` the counts are Poisson samples with mean
    ``noise * signal`` drawn from ``rng``.
    """
    y = expected_spectrum(plan, lines, model, row)
    if plan.noise > 0:
        if rng is None:
            raise ValueError("a seeded rng is required when noise > 0")
        y = rng.poisson(plan.noise * y).astype(float)
    return plan.frequencies, y


def plan_around(line: SpectrumLine, half_width: float = 0.2, n_points: int = 801,
                **kw) -> SweepPlan:
    return SweepPlan(line.center - half_width, line.center + half_width, n_points, **kw)


@dataclass(frozen=True)
class Accumulation:
    angles: np.ndarray
    frequencies: np.ndarray
    counts: np.ndarray  # shape (len(angles), len(frequencies))

    def integrated(self) -> np.ndarray:
        """Per-row line intensity (trapezoid integral over frequency)."""
        return np.trapezoid(self.counts, self.frequencies, axis=1)


def row_rng(seed: int, row: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(row)])


def polarization_accumulation(plan: SweepPlan, angles: Sequence[float], model: LevelModel,
                              lines: Sequence[SpectrumLine] | None = None,
                              seed: int | None = None) -> Accumulation:
    """Stack of spectra, one per laser polarization angle.

    ``plan`` is a template: its laser angle is replaced row by row and the
    line centres drift by ``drift_rate`` per row. Noisy rows draw from
    independent streams keyed by ``(seed, row)``.
    """
    angles = np.asarray(angles, dtype=float)
    if len(np.unique(angles)) < 4:
        raise DomainError("an accumulation needs at least 4 angles")
    if lines is None:
        lines = build_lines(model)
    if plan.noise > 0 and seed is None:
        raise ValueError("seed is required when noise > 0")
    rows = []
    for i, a in enumerate(angles):
        p = SweepPlan(plan.f_start, plan.f_stop, plan.n_points, float(a), plan.drift_rate, plan.noise)
        rng = row_rng(seed, i) if plan.noise > 0 else None
        rows.append(spectrum(p, lines, model, row=i, rng=rng)[1])
    return Accumulation(angles, plan.frequencies, np.vstack(rows))


def fit_line_center(frequencies, counts) -> float:
    """Centre of a single Lorentzian (plus flat background) fitted to one sweep."""
    f = np.asarray(frequencies, dtype=float)
    y = np.asarray(counts, dtype=float)
    i = int(np.argmax(y))
    half = y[i] / 2.0
    above = f[y >= half]
    width0 = max(above[-1] - above[0], f[1] - f[0])

    def model(x, a, c, w, b):
        return a * lorentzian(x, c, w) + b

    popt, _ = curve_fit(model, f, y, p0=[y[i], f[i], width0, 0.0])
    return float(popt[1])


def write_spectrum_csv(frequencies, counts, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["freq_ghz", "counts"])
    for f, c in zip(frequencies, counts):
        writer.writerow([f"{f:.6g}", f"{c:.6g}"])


def write_accumulation_csv(acc: Accumulation, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["angle_deg", "freq_ghz", "counts"])
    for a, row in zip(acc.angles, acc.counts):
        for f, c in zip(acc.frequencies, row):
            writer.writerow([f"{a:.6g}", f"{f:.6g}", f"{c:.6g}"])
