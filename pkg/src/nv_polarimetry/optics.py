"""Stokes/Mueller description of the emitted light and the detection chain.

Angles are measured counter-clockwise from the lab x axis. Retarders follow
the rotation-sandwich construction ``R(-theta) M0 R(theta)`` with the
unrotated retarder

    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0,  cos d, V_SIGN * sin d],
     [0, 0, -V_SIGN * sin d, cos d]]

so that a quarter-wave plate at +45 deg turns +Q light into ``V_SIGN * Q``
circular light.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .dynamics import BranchAverages, Weighting
from .inference import fit_cosine
from .model import DomainError, LevelModel

#: Sign of the circular component produced from +Q by a QWP at +45 deg.
V_SIGN = 1.0

PHYSICAL_TOL = 1e-12


@dataclass(frozen=True)
class StokesVector:
    i: float
    q: float = 0.0
    u: float = 0.0
    v: float = 0.0

    @classmethod
    def from_array(cls, arr) -> "StokesVector":
        i, q, u, v = (float(x) for x in arr)
        return cls(i, q, u, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.i, self.q, self.u, self.v], dtype=float)

    @property
    def polarized_intensity(self) -> float:
        return float(np.sqrt(self.q ** 2 + self.u ** 2 + self.v ** 2))

    @property
    def degree_of_polarization(self) -> float:
        if self.i == 0:
            return 0.0
        return self.polarized_intensity / self.i

    @property
    def degree_of_linear_polarization(self) -> float:
        if self.i == 0:
            return 0.0
        return float(np.hypot(self.q, self.u)) / self.i

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return self.i >= -tol and self.polarized_intensity <= self.i * (1 + tol) + tol


UNPOLARIZED = StokesVector(1.0)


def _rotator(theta: float) -> np.ndarray:
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.array([[1, 0, 0, 0], [0, c, s, 0], [0, -s, c, 0], [0, 0, 0, 1]], dtype=float)


def rotation_matrix(angle_deg: float) -> np.ndarray:
    """Mueller matrix that expresses a Stokes vector in axes rotated by ``angle_deg``."""
    return _rotator(np.deg2rad(angle_deg))


def polarizer_matrix(angle_deg: float, extinction: float = 0.0) -> np.ndarray:
    """Linear polarizer with transmission axis at ``angle_deg``.

    ``extinction`` is the intensity transmission along the blocked axis
    (0 for an ideal element).
    """
    tx, ty = 1.0, extinction
    a, b, c = 0.5 * (tx + ty), 0.5 * (tx - ty), np.sqrt(tx * ty)
    m0 = np.array([[a, b, 0, 0], [b, a, 0, 0], [0, 0, c, 0], [0, 0, 0, c]], dtype=float)
    r = _rotator(np.deg2rad(angle_deg))
    return r.T @ m0 @ r


def retarder_matrix(fast_axis_deg: float, retardance_deg: float) -> np.ndarray:
    d = np.deg2rad(retardance_deg)
    c, s = np.cos(d), V_SIGN * np.sin(d)
    m0 = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, c, s], [0, 0, -s, c]], dtype=float)
    r = _rotator(np.deg2rad(fast_axis_deg))
    return r.T @ m0 @ r


class ElementKind(enum.Enum):
    LINEAR_POLARIZER = "polarizer"
    QUARTER_WAVE_PLATE = "qwp"
    ROTATION = "rotation"


@dataclass(frozen=True)
class MuellerElement:
    """One optical element. Imperfection parameters default to an ideal element."""

    kind: ElementKind
    angle: float
    retardance_error: float = 0.0  # degrees, QWP only
    extinction: float = 0.0  # polarizer only
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind is ElementKind.LINEAR_POLARIZER:
            m = polarizer_matrix(self.angle, self.extinction)
        elif self.kind is ElementKind.QUARTER_WAVE_PLATE:
            m = retarder_matrix(self.angle, 90.0 + self.retardance_error)
        else:
            m = rotation_matrix(self.angle)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def LinearPolarizer(angle: float, extinction: float = 0.0) -> MuellerElement:
    return MuellerElement(ElementKind.LINEAR_POLARIZER, angle, extinction=extinction)


def QuarterWavePlate(fast_axis: float, retardance_error: float = 0.0) -> MuellerElement:
    return MuellerElement(ElementKind.QUARTER_WAVE_PLATE, fast_axis, retardance_error=retardance_error)


def Rotation(angle: float) -> MuellerElement:
    return MuellerElement(ElementKind.ROTATION, angle)


@dataclass(frozen=True)
class EmissionMixture:
    """Incoherent sum of light polarized along the two transition dipoles."""

    weight_x: float
    weight_y: float
    dipole_x_angle: float = 0.0

    def __post_init__(self):
        if self.weight_x < 0 or self.weight_y < 0:
            raise DomainError("mixture weights must be non-negative")
        total = self.weight_x + self.weight_y
        if not total > 0:
            raise DomainError("mixture weights must not both be zero")
        object.__setattr__(self, "weight_x", self.weight_x / total)
        object.__setattr__(self, "weight_y", self.weight_y / total)


def excitation_efficiency(laser_angle: float, dipole_angle: float) -> float:
    """Malus-law overlap cos^2 between the laser polarization and a transition dipole."""
    return float(np.cos(np.deg2rad(laser_angle - dipole_angle)) ** 2)


def emission_mixture(averages: BranchAverages, model: LevelModel,
                     weighting: Weighting | str = Weighting.SQUARED) -> EmissionMixture:
    """Polarization weights of the emitted light.

    The default weights each branch by its squared mean population, which
    reproduces the polarizer law I ~ <p_x>^2 cos^2 + <p_y>^2 sin^2.
    ``Weighting.LINEAR`` uses the populations themselves.
    """
    k = Weighting(weighting).power
    return EmissionMixture(averages.mean_p_x ** k, averages.mean_p_y ** k, model.dipole_x_angle)


def mixture_to_stokes(mix: EmissionMixture) -> StokesVector:
    dipole_frame = np.array([1.0, mix.weight_x - mix.weight_y, 0.0, 0.0])
    # express the dipole-frame vector in lab axes
    lab = rotation_matrix(-mix.dipole_x_angle) @ dipole_frame
    return StokesVector.from_array(lab)


def chain_matrix(chain: Sequence[MuellerElement]) -> np.ndarray:
    m = np.eye(4)
    for element in chain:
        m = element.matrix @ m
    return m


def propagate(stokes: StokesVector, chain: Sequence[MuellerElement]) -> StokesVector:
    """Send light through ``chain`` (first element is met first)."""
    if not stokes.is_physical():
        raise DomainError(f"non-physical Stokes vector {stokes}")
    return StokesVector.from_array(chain_matrix(chain) @ stokes.as_array())


def polarizer_sweep(stokes: StokesVector, qwp_angle: float | None,
                    angles: Iterable[float]) -> list[tuple[float, float]]:
    """Transmitted intensity through an optional QWP followed by a rotating polarizer."""
    angles = [float(a) for a in angles]
    if len(set(angles)) < 4:
        raise DomainError("a polarizer sweep needs at least 4 distinct angles")
    pre = [] if qwp_angle is None else [QuarterWavePlate(qwp_angle)]
    s = propagate(stokes, pre).as_array()
    out = []
    for a in angles:
        out.append((a, float((polarizer_matrix(a) @ s)[0])))
    return out


DEFAULT_SWEEP_ANGLES = tuple(float(a) for a in range(0, 180, 5))


def qwp_contrast_scan(stokes: StokesVector, qwp_angles: Iterable[float],
                      polarizer_angles: Sequence[float] = DEFAULT_SWEEP_ANGLES) -> list[tuple[float, float]]:
    """Fitted polarizer-sweep contrast for each quarter-wave-plate orientation."""
    if not stokes.is_physical():
        raise DomainError(f"non-physical Stokes vector {stokes}")
    out = []
    for q in qwp_angles:
        fit = fit_cosine(polarizer_sweep(stokes, q, polarizer_angles))
        out.append((float(q), fit.contrast))
    return out


def best_qwp_contrast(stokes: StokesVector, qwp_angles: Iterable[float],
                      polarizer_angles: Sequence[float] = DEFAULT_SWEEP_ANGLES,
                      refine: bool = False) -> tuple[float, float]:
    """(qwp_angle, contrast) of the best plate orientation.

    With ``refine`` the grid maximum is polished by a bounded scalar search
    one grid step either side.
    """
    scan = qwp_contrast_scan(stokes, qwp_angles, polarizer_angles)
    best_angle, best = max(scan, key=lambda r: r[1])
    if refine and len(scan) > 1:
        step = float(np.min(np.diff(sorted(a for a, _ in scan))))

        def neg(q):
            return -fit_cosine(polarizer_sweep(stokes, q, polarizer_angles)).contrast

        res = minimize_scalar(neg, bounds=(best_angle - step, best_angle + step),
                              method="bounded", options={"xatol": 1e-9})
        if -res.fun > best:
            best_angle, best = float(res.x), float(-res.fun)
    return best_angle, best


def write_sweep_csv(rows: Iterable[tuple[float, float]], fh, header=("angle_deg", "intensity")) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for a, y in rows:
        writer.writerow([f"{a:.6g}", f"{y:.6g}"])
