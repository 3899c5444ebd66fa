"""Two-branch emitter parameters and thermal-bath rate relations.

Units are fixed throughout the package: GHz for frequencies and splittings,
ns for times, K for temperatures. Angles are degrees at every public
interface and radians only inside numerical kernels.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

#: Boltzmann constant over Planck constant, GHz per kelvin (CODATA 2018).
KB_OVER_H_GHZ_PER_K = 20.836619

DEFAULT_DELTA_GHZ = 5.0
DEFAULT_TAU_NS = 12.0
DEFAULT_TEMPERATURE_K = 4.0
DEFAULT_GAMMA_PER_NS = 1.0 / 20.0

# Illustrative only: three spin lines per branch, positions not physical.
DEFAULT_SPIN_OFFSETS_X = (-1.2, 0.0, 1.1)
DEFAULT_SPIN_OFFSETS_Y = (-1.0, 0.0, 0.9)

# Spin label of each offset slot; S_z sits in the middle slot.
SPIN_LABELS = ("Sx", "Sz", "Sy")


class DomainError(ValueError):
    """A physical parameter lies outside its allowed domain."""


def natural_linewidth_mhz(tau: float) -> float:
    """Fourier-limited FWHM 1/(2 pi tau) in MHz for a lifetime in ns."""
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    return 1e3 / (2.0 * math.pi * tau)


@dataclass(frozen=True)
class LevelModel:
    """Excited-state structure of a single emitter.

    Attributes
    ----------
    delta : float
        Splitting between the upper (E_x) and lower (E_y) branch, GHz.
    tau : float
        Radiative lifetime, ns.
    zpl_detuning : float
        Laser-frequency origin used by the spectra, GHz.
    dipole_x_angle : float
        In-plane angle of the E_x transition dipole, degrees. The E_y dipole
        is always perpendicular to it.
    spin_offsets_x, spin_offsets_y : tuple of float
        Offsets of the three spin lines of each branch, GHz.
    linewidth : float or None
        Lorentzian FWHM per line, MHz. ``None`` selects the natural width.
    """

    delta: float = DEFAULT_DELTA_GHZ
    tau: float = DEFAULT_TAU_NS
    zpl_detuning: float = 0.0
    dipole_x_angle: float = 0.0
    spin_offsets_x: tuple[float, float, float] = DEFAULT_SPIN_OFFSETS_X
    spin_offsets_y: tuple[float, float, float] = DEFAULT_SPIN_OFFSETS_Y
    linewidth: float | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        for name in ("spin_offsets_x", "spin_offsets_y"):
            offsets = tuple(float(v) for v in getattr(self, name))
            if len(offsets) != 3:
                raise DomainError(f"{name} needs exactly 3 values, got {len(offsets)}")
            object.__setattr__(self, name, offsets)
        if self.linewidth is None:
            object.__setattr__(self, "linewidth", natural_linewidth_mhz(self.tau))
        elif not self.linewidth > 0:
            raise DomainError(f"linewidth must be positive, got {self.linewidth}")

    @property
    def dipole_y_angle(self) -> float:
        return self.dipole_x_angle + 90.0


@dataclass(frozen=True)
class ThermalBath:
    temperature: float = DEFAULT_TEMPERATURE_K
    thermal_frequency: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "thermal_frequency", thermal_frequency(self.temperature))


@dataclass(frozen=True)
class RateSet:
    """Bath-induced transition rates between the branches, 1/ns.

    ``c_xy`` feeds E_x from E_y, ``c_yx`` feeds E_y from E_x. ``gamma`` is the
    symmetric rate used when kT is much larger than the splitting.
    """

    c_xy: float
    c_yx: float
    gamma: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v >= 0:
                raise DomainError(f"{f.name} must be non-negative, got {v}")

    @classmethod
    def symmetric(cls, gamma: float) -> "RateSet":
        return cls(gamma, gamma, gamma)


def thermal_frequency(temperature: float) -> float:
    """Thermal energy kT expressed as a frequency in GHz."""
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    return KB_OVER_H_GHZ_PER_K * temperature


def boltzmann_factor(delta: float, bath: ThermalBath) -> float:
    """exp(-delta/kT), the up/down rate ratio between the two branches."""
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    return math.exp(-delta / bath.thermal_frequency)


def rates_from_detailed_balance(gamma_down: float, delta: float, bath: ThermalBath) -> RateSet:
    """Build the rate pair obeying detailed balance.

    The downhill rate E_x -> E_y is ``gamma_down``; the uphill rate is reduced
    by the Boltzmann factor. The ``gamma`` field keeps ``gamma_down`` as the
    symmetric-limit value.
    """
    if gamma_down < 0:
        raise DomainError(f"gamma_down must be non-negative, got {gamma_down}")
    factor = boltzmann_factor(delta, bath)
    return RateSet(c_xy=gamma_down * factor, c_yx=gamma_down, gamma=gamma_down)


# ---------------------------------------------------------------------------
# flat key=value config files

CONFIG_ENV_VAR = "NV_POLARIMETRY_CONFIG"

_FLOAT_KEYS = {
    "delta_ghz": "delta",
    "tau_ns": "tau",
    "temperature_k": "temperature",
    "gamma_per_ns": "gamma",
    "dipole_x_deg": "dipole_x_angle",
    "linewidth_mhz": "linewidth",
    "zpl_detuning_ghz": "zpl_detuning",
}
_LIST_KEYS = {
    "spin_offsets_x_ghz": "spin_offsets_x",
    "spin_offsets_y_ghz": "spin_offsets_y",
}


@dataclass(frozen=True)
class EmitterConfig:
    """Everything a config file can set: level model, bath and relaxation rate."""

    level: LevelModel = field(default_factory=LevelModel)
    bath: ThermalBath = field(default_factory=ThermalBath)
    gamma: float = DEFAULT_GAMMA_PER_NS

    def __post_init__(self):
        if not self.gamma >= 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma}")

    def with_overrides(self, **values) -> "EmitterConfig":
        """Return a copy with internal-name overrides (``tau=...``, ``gamma=...``)."""
        values = {k: v for k, v in values.items() if v is not None}
        level_keys = {f.name for f in fields(LevelModel)}
        level_kw = {k: v for k, v in values.items() if k in level_keys}
        level = replace(self.level, **level_kw) if level_kw else self.level
        natural = self.level.linewidth == natural_linewidth_mhz(self.level.tau)
        if "tau" in level_kw and "linewidth" not in level_kw and natural:
            level = replace(level, linewidth=None)
        bath = ThermalBath(values["temperature"]) if "temperature" in values else self.bath
        gamma = values.get("gamma", self.gamma)
        return EmitterConfig(level=level, bath=bath, gamma=gamma)

    def rates(self) -> RateSet:
        return rates_from_detailed_balance(self.gamma, self.level.delta, self.bath)


def parse_config(text: str, source: str = "<string>") -> dict:
    """Parse flat ``key=value`` text into internal-name values.

    Unknown keys and malformed numbers raise ``ValueError`` naming the key
    and source.
    """
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    parser.read_string("[emitter]\n" + text, source=source)
    out = {}
    for key, raw in parser["emitter"].items():
        try:
            if key in _FLOAT_KEYS:
                out[_FLOAT_KEYS[key]] = float(raw)
            elif key in _LIST_KEYS:
                out[_LIST_KEYS[key]] = tuple(float(v) for v in raw.split(","))
            else:
                raise ValueError(f"{source}: unknown config key {key!r}")
        except ValueError as exc:
            if key not in _FLOAT_KEYS and key not in _LIST_KEYS:
                raise
            raise ValueError(f"{source}: bad value for {key!r}: {raw!r}") from exc
    return out


def load_config(path: str | os.PathLike | None = None, **overrides) -> EmitterConfig:
    """Load an :class:`EmitterConfig` from ``path`` (or the env var), then apply overrides."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or None
    values = {}
    if path is not None:
        p = Path(path)
        values = parse_config(p.read_text(encoding="utf-8"), source=str(p))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return EmitterConfig().with_overrides(**values)
