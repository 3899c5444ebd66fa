"""Cosine fits of polarizer sweeps and inversion of contrast to a relaxation rate."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .dynamics import Averaging, Weighting, averages
from .model import DomainError

CI_LEVEL = 0.95
#: Two-sided normal quantile for CI_LEVEL, used when sigma is known exactly.
CI_Z = 1.959963984540054
#: Contrasts below this many standard deviations count as zero.
ZERO_CONTRAST_SIGMAS = 2.0

UNPOLARIZED_FLAG = "fully unpolarized (gamma_inv below ~3 ns)"
OVER_UNITY_FLAG = "contrast > 1"


class FitError(ValueError):
    pass


class DegenerateSamplingError(FitError):
    """The polarizer angles cannot separate the three cosine coefficients."""


class InvalidDataError(FitError):
    pass


class CsvFormatError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of I(theta) = a0 + a1 cos 2theta + a2 sin 2theta.

    ``phase`` is the polarizer angle of maximum transmission in degrees,
    folded into (-90, 90]. ``covariance`` is the heteroscedasticity-robust
    (HC3) 3x3 coefficient covariance.
    """

    a0: float
    a1: float
    a2: float
    contrast: float
    phase: float
    residual_rms: float
    covariance: np.ndarray
    n_points: int

    @property
    def dof(self) -> int:
        return self.n_points - 3

    @property
    def amplitude(self) -> float:
        return math.hypot(self.a1, self.a2)

    @property
    def contrast_sigma(self) -> float:
        """First-order standard error of the contrast."""
        a0, r = self.a0, self.amplitude
        if r == 0.0:
            grad = np.array([0.0, 1.0, 1.0]) / (a0 * math.sqrt(2.0))
        else:
            grad = np.array([-r / a0 ** 2, self.a1 / (r * a0), self.a2 / (r * a0)])
        var = float(grad @ self.covariance @ grad)
        return math.sqrt(max(var, 0.0))

    @property
    def over_unity(self) -> bool:
        return self.contrast > 1.0

    def model(self, angles) -> np.ndarray:
        t = 2.0 * np.deg2rad(np.asarray(angles, dtype=float))
        return self.a0 + self.a1 * np.cos(t) + self.a2 * np.sin(t)


def _as_xy(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, tuple) and len(data) == 2 and np.ndim(data[0]) == 1:
        x, y = data
    else:
        arr = np.asarray(list(data), dtype=float).reshape(-1, 2)
        x, y = arr[:, 0], arr[:, 1]
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def _hc3_covariance(design: np.ndarray, resid: np.ndarray) -> np.ndarray:
    """Heteroscedasticity-robust (HC3) coefficient covariance.

    Counting data have variance proportional to the signal, so the plain
    homoscedastic estimate misstates the contrast error at high contrast.
    """
    bread = np.linalg.inv(design.T @ design)
    lev = np.einsum("ij,jk,ik->i", design, bread, design)
    free = 1.0 - lev
    w = np.where(free > 1e-12, resid ** 2 / np.maximum(free, 1e-12) ** 2, 0.0)
    meat = design.T @ (design * w[:, None])
    return bread @ meat @ bread


def fit_cosine(data) -> FitResult:
    """Fit the period-180 deg harmonic to polarizer-angle data.

    ``data`` is an iterable of ``(angle_deg, intensity)`` pairs or an
    ``(angles, intensities)`` tuple of arrays.
    """
    x, y = _as_xy(data)
    n = len(x)
    if n < 4:
        raise DegenerateSamplingError(f"need at least 4 points, got {n}")
    t = 2.0 * np.deg2rad(x)
    design = np.column_stack([np.ones(n), np.cos(t), np.sin(t)])
    coef, _, rank, sv = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3 or sv[-1] < 1e-9 * sv[0]:
        raise DegenerateSamplingError(
            "angles do not span the cos/sin 2theta basis (need 3 distinct angles mod 180 deg)"
        )
    a0, a1, a2 = (float(c) for c in coef)
    if not a0 > 0:
        raise InvalidDataError(f"mean intensity must be positive, got a0={a0:.6g}")
    resid = y - design @ coef
    rss = float(resid @ resid)
    cov = _hc3_covariance(design, resid)
    phase = 0.5 * math.degrees(math.atan2(a2, a1))
    if phase <= -90.0:
        phase += 180.0
    return FitResult(
        a0=a0, a1=a1, a2=a2,
        contrast=math.hypot(a1, a2) / a0,
        phase=phase,
        residual_rms=math.sqrt(rss / n),
        covariance=cov,
        n_points=n,
    )


# ---------------------------------------------------------------------------
# contrast -> gamma


@dataclass(frozen=True)
class GammaEstimate:
    gamma: float
    gamma_inv: float
    alpha: float
    contrast: float
    contrast_sigma: float = 0.0
    ci_low: float = math.nan
    ci_high: float = math.nan
    resolved: bool = True


def _rate_time_product(c: float, averaging: Averaging, weighting: Weighting) -> tuple[float, float]:
    """gamma * tau reproducing contrast ``c``, and its derivative in ``c``.

    Inverts the closed forms listed in :func:`~.dynamics.contrast_from_gamma`.
    """
    if averaging is Averaging.POINT:
        if weighting is Weighting.SQUARED:
            s = math.sqrt((1.0 - c) * (1.0 + c))
            return 0.5 * math.acosh(1.0 / c), -0.5 / (c * s)
        return -0.5 * math.log(c), -0.5 / c
    if weighting is Weighting.SQUARED:
        s = math.sqrt((1.0 - c) * (1.0 + c))
        return (1.0 - c + s) / (2.0 * c), -(1.0 + s) / (2.0 * c * c * s)
    return 0.5 * (1.0 / c - 1.0), -0.5 / (c * c)


def ci_quantile(dof: int | None = None) -> float:
    """Two-sided quantile for CI_LEVEL; Student-t when sigma came from ``dof`` residuals."""
    if not dof:
        return CI_Z
    return float(stats.t.ppf(0.5 + CI_LEVEL / 2, dof))


def invert_contrast(contrast: float, tau: float, contrast_sigma: float = 0.0,
                    averaging: Averaging | str = Averaging.POINT,
                    weighting: Weighting | str = Weighting.SQUARED,
                    dof: int | None = None) -> GammaEstimate:
    """Relaxation rate that reproduces a measured polarizer contrast.

    The default model inverts C = (1 - alpha^2)/(1 + alpha^2) with
    alpha = tanh(gamma tau), i.e. C = sech(2 gamma tau). Every detection
    model has a closed-form inverse.

    ``contrast == 0`` cannot be resolved: the estimate carries
    ``resolved=False``, ``gamma=inf`` and ``alpha=1``. The confidence
    interval is the first-order (delta-method) band around ``gamma_inv``;
    pass the fit's ``dof`` when ``contrast_sigma`` came from residuals.
    """
    averaging, weighting = Averaging(averaging), Weighting(weighting)
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    if not 0.0 <= contrast <= 1.0:
        raise DomainError(f"contrast must lie in [0, 1], got {contrast}")
    if contrast == 0.0:
        return GammaEstimate(math.inf, 0.0, 1.0, 0.0, contrast_sigma, 0.0, 0.0, resolved=False)
    z = ci_quantile(dof)
    if contrast == 1.0:
        lo = math.inf
        if contrast_sigma > 0.0:
            # the derivative diverges here; bound from the lower contrast edge instead
            edge = max(1.0 - z * contrast_sigma, 0.0)
            lo = invert_contrast(edge, tau, 0.0, averaging, weighting).gamma_inv
        return GammaEstimate(0.0, math.inf, 0.0, 1.0, contrast_sigma, lo, math.inf)
    x, dx = _rate_time_product(contrast, averaging, weighting)
    gamma = x / tau
    gamma_inv = tau / x
    alpha = averages(gamma, tau, averaging=averaging).alpha
    half = z * contrast_sigma * abs(tau * dx / (x * x))
    return GammaEstimate(gamma, gamma_inv, alpha, contrast, contrast_sigma,
                         max(0.0, gamma_inv - half), gamma_inv + half)


# ---------------------------------------------------------------------------
# CSV input and batch reports


def read_sweep_csv(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Read an ``angle_deg,intensity`` file; errors name the offending line."""
    angles, values = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CsvFormatError(path, 1, "empty file")
        if [h.strip() for h in header[:2]] != ["angle_deg", "intensity"]:
            raise CsvFormatError(path, 1, f"expected header 'angle_deg,intensity', got {','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise CsvFormatError(path, line, f"expected 2 columns, got {len(row)}")
            try:
                a, v = float(row[0]), float(row[1])
            except ValueError:
                raise CsvFormatError(path, line, f"non-numeric value in {row!r}") from None
            if not (math.isfinite(a) and math.isfinite(v)):
                raise CsvFormatError(path, line, f"non-finite value in {row!r}")
            angles.append(a)
            values.append(v)
    return np.array(angles), np.array(values)


@dataclass(frozen=True)
class ReportRow:
    id: str
    contrast: float = math.nan
    contrast_sigma: float = math.nan
    gamma_inv: float = math.nan
    ci_low: float = math.nan
    ci_high: float = math.nan
    flag: str = ""


REPORT_HEADER = ("id", "contrast", "contrast_sigma", "gamma_inv_ns", "ci_low_ns", "ci_high_ns", "flag")


def analyse_sweep(dataset_id: str, data, tau: float,
                  averaging: Averaging | str = Averaging.POINT,
                  weighting: Weighting | str = Weighting.SQUARED) -> tuple[ReportRow, FitResult, GammaEstimate]:
    fit = fit_cosine(data)
    sigma = fit.contrast_sigma
    flags = []
    c = fit.contrast
    if fit.over_unity:
        flags.append(OVER_UNITY_FLAG)
        c = 1.0
    est = invert_contrast(c, tau, sigma, averaging, weighting, dof=fit.dof)
    if fit.contrast <= ZERO_CONTRAST_SIGMAS * sigma:
        flags.append(UNPOLARIZED_FLAG)
    row = ReportRow(dataset_id, fit.contrast, sigma, est.gamma_inv, est.ci_low, est.ci_high, "; ".join(flags))
    return row, fit, est


def batch_report(datasets: Iterable, tau: float,
                 averaging: Averaging | str = Averaging.POINT,
                 weighting: Weighting | str = Weighting.SQUARED) -> list[ReportRow]:
    """Fit and invert every dataset; failures are reported inline.

    Each item is a path to a sweep CSV or an ``(id, data)`` pair where
    ``data`` is anything :func:`fit_cosine` accepts.
    """
    rows = []
    for item in datasets:
        if isinstance(item, (str, os.PathLike)):
            ds_id = os.path.splitext(os.path.basename(os.fspath(item)))[0]
        else:
            ds_id, data = item
        try:
            if isinstance(item, (str, os.PathLike)):
                data = read_sweep_csv(item)
            row, _, _ = analyse_sweep(str(ds_id), data, tau, averaging, weighting)
        except (FitError, CsvFormatError, DomainError, OSError) as exc:
            row = ReportRow(str(ds_id), flag=f"error: {exc}")
        rows.append(row)
    return rows


def write_report_csv(rows: Sequence[ReportRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in rows:
        writer.writerow([r.id] + [f"{v:.6g}" for v in
                                  (r.contrast, r.contrast_sigma, r.gamma_inv, r.ci_low, r.ci_high)] + [r.flag])
