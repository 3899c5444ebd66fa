"""Stochastic jump trajectories of the two-branch emitter.

Each trajectory waits an exponential emission time with mean tau while the
bath flips it between branches with exponential dwell times. The photon
inherits the polarization of the branch occupied at emission.

Random streams
--------------
Trajectories are generated in fixed blocks of :data:`BLOCK_SIZE`. Block ``b``
of a run with seed ``s`` draws from a Philox4x64 generator keyed by
``SeedSequence([s, stream, b])``, where ``stream`` separates the emission
simulation from the fixed-time occupation estimator. Output therefore does
not depend on how blocks are distributed over workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dynamics import Branch
from .model import DomainError, RateSet

BLOCK_SIZE = 4096
DEFAULT_N = 100_000

_EMISSION_STREAM = 0
_OCCUPATION_STREAM = 1
_SWEEP_STREAM = 2


def block_generator(seed: int, stream: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, stream, block])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class McConfig:
    n_trajectories: int
    seed: int
    rates: RateSet
    tau: float
    initial_branch: Branch = Branch.X

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise DomainError("n_trajectories must be at least 1")
        if not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")

    @property
    def n_blocks(self) -> int:
        return -(-self.n_trajectories // BLOCK_SIZE)

    def block_size(self, block: int) -> int:
        return min(BLOCK_SIZE, self.n_trajectories - block * BLOCK_SIZE)


@dataclass(frozen=True)
class TrajectorySample:
    emission_time: float
    branch_at_emission: Branch
    n_flips: int


@dataclass(frozen=True)
class TrajectoryBatch:
    """Column-wise trajectory samples; ``in_x`` marks emission from E_x."""

    emission_time: np.ndarray
    in_x: np.ndarray
    n_flips: np.ndarray

    def __len__(self) -> int:
        return len(self.emission_time)

    def __iter__(self):
        for t, x, n in zip(self.emission_time, self.in_x, self.n_flips):
            yield TrajectorySample(float(t), Branch.X if x else Branch.Y, int(n))

    @property
    def fraction_x(self) -> float:
        return float(np.mean(self.in_x))

    @classmethod
    def concatenate(cls, parts: Sequence["TrajectoryBatch"]) -> "TrajectoryBatch":
        return cls(
            np.concatenate([p.emission_time for p in parts]),
            np.concatenate([p.in_x for p in parts]),
            np.concatenate([p.n_flips for p in parts]),
        )


def _dwell(rng: np.random.Generator, in_x: np.ndarray, rates: RateSet) -> np.ndarray:
    # leaving E_x happens at c_yx, leaving E_y at c_xy
    rate = np.where(in_x, rates.c_yx, rates.c_xy)
    e = rng.standard_exponential(in_x.size)
    with np.errstate(divide="ignore"):
        return np.where(rate > 0, e / np.where(rate > 0, rate, 1.0), np.inf)


def simulate_block(config: McConfig, block: int) -> TrajectoryBatch:
    n = config.block_size(block)
    rng = block_generator(config.seed, _EMISSION_STREAM, block)
    emission = rng.exponential(config.tau, n)
    in_x = np.full(n, config.initial_branch is Branch.X)
    t = np.zeros(n)
    flips = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    while active.size:
        t_next = t[active] + _dwell(rng, in_x[active], config.rates)
        hop = t_next < emission[active]
        active = active[hop]
        t[active] = t_next[hop]
        in_x[active] = ~in_x[active]
        flips[active] += 1
    return TrajectoryBatch(emission, in_x, flips)


def simulate(config: McConfig, workers: int | None = None) -> TrajectoryBatch:
    """Sample ``config.n_trajectories`` emission events, deterministic in the seed.

    ``workers > 1`` spreads blocks over a thread pool; the result is
    identical to the serial run.
    """
    blocks = range(config.n_blocks)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: simulate_block(config, b), blocks))
    else:
        parts = [simulate_block(config, b) for b in blocks]
    return TrajectoryBatch.concatenate(parts)


# ---------------------------------------------------------------------------
# fixed-time occupation, ignoring emission


@dataclass(frozen=True)
class OccupationPoint:
    t: float
    p_x_hat: float
    sigma: float

    @property
    def band(self) -> tuple[float, float]:
        return self.p_x_hat - 3 * self.sigma, self.p_x_hat + 3 * self.sigma


def _occupation_block(config: McConfig, block: int, grid: np.ndarray) -> np.ndarray:
    """Number of trajectories in E_x at each grid time within one block."""
    n = config.block_size(block)
    rng = block_generator(config.seed, _OCCUPATION_STREAM, block)
    horizon = float(grid.max()) if grid.size else 0.0
    start_x = config.initial_branch is Branch.X
    in_x = np.full(n, start_x)
    t = np.zeros(n)
    # parity of flips that happened at or before each grid time
    parity = np.zeros((grid.size, n), dtype=bool)
    active = np.arange(n)
    while active.size:
        t_next = t[active] + _dwell(rng, in_x[active], config.rates)
        hop = t_next <= horizon
        active, t_hop = active[hop], t_next[hop]
        t[active] = t_hop
        in_x[active] = ~in_x[active]
        parity[:, active] ^= t_hop[None, :] <= grid[:, None]
    occupied_x = parity != start_x
    return occupied_x.sum(axis=1)


def occupation_curve(config: McConfig, time_grid: Iterable[float]) -> list[OccupationPoint]:
    """Ensemble estimate of p_x(t) with binomial standard errors."""
    grid = np.asarray(list(time_grid), dtype=float)
    if np.any(grid < 0):
        raise DomainError("time grid must be non-negative")
    counts = np.zeros(grid.size, dtype=np.int64)
    for b in range(config.n_blocks):
        counts += _occupation_block(config, b, grid)
    n = config.n_trajectories
    out = []
    for t, c in zip(grid, counts):
        p = c / n
        out.append(OccupationPoint(float(t), float(p), math.sqrt(p * (1 - p) / n)))
    return out


# ---------------------------------------------------------------------------
# polarizer sweeps on simulated photons


def photon_angles(samples: TrajectoryBatch, dipole_x_angle: float) -> np.ndarray:
    return np.where(samples.in_x, dipole_x_angle, dipole_x_angle + 90.0)


def empirical_polarizer_sweep(samples: TrajectoryBatch, dipole_x_angle: float,
                              angles: Iterable[float], seed: int = 0) -> list[tuple[float, float]]:
    """Fraction of photons passed by a polarizer at each angle.

    Every photon is offered to every angle and accepted with probability
    cos^2(theta - its polarization). Per-branch binomial draws replace the
    per-photon Bernoulli trials; the two are equal in distribution.
    """
    n = len(samples)
    if n < 1:
        raise DomainError("need at least one photon")
    n_x = int(np.count_nonzero(samples.in_x))
    out = []
    for i, a in enumerate(angles):
        rng = block_generator(seed, _SWEEP_STREAM, i)
        out.append((float(a), _accepted(rng, n_x, n - n_x, a - dipole_x_angle) / n))
    return out


def _accepted(rng: np.random.Generator, n_x: int, n_y: int, rel_angle: float) -> int:
    px = math.cos(math.radians(rel_angle)) ** 2
    return int(rng.binomial(n_x, px) + rng.binomial(n_y, 1.0 - px))


def detected_sweep(rates: RateSet, tau: float, angles: Sequence[float], n_photons: int,
                   seed: int, dipole_x_angle: float = 0.0,
                   initial_branch: Branch = Branch.X) -> list[tuple[float, float]]:
    """Photon counts behind a polarizer, one independent exposure per angle.

    The emitted photon number at each angle is Poisson with mean
    ``n_photons / len(angles)``; each exposure is its own trajectory
    ensemble, so angle-to-angle fluctuations are independent.
    """
    angles = [float(a) for a in angles]
    root = np.random.SeedSequence(int(seed))
    children = root.spawn(len(angles))
    mean = n_photons / len(angles)
    out = []
    for a, child in zip(angles, children):
        count_seed, traj_seed, accept_seed = child.generate_state(3, dtype=np.uint64)
        n = int(np.random.default_rng(count_seed).poisson(mean))
        if n == 0:
            out.append((a, 0.0))
            continue
        batch = simulate(McConfig(n, int(traj_seed), rates, tau, initial_branch))
        n_x = int(np.count_nonzero(batch.in_x))
        rng = np.random.default_rng(accept_seed)
        out.append((a, float(_accepted(rng, n_x, n - n_x, a - dipole_x_angle))))
    return out


def write_samples_csv(samples: TrajectoryBatch, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["emission_ns", "branch", "n_flips"])
    for t, x, n in zip(samples.emission_time, samples.in_x, samples.n_flips):
        writer.writerow([f"{t:.6g}", "X" if x else "Y", int(n)])


def write_occupation_csv(points: Iterable[OccupationPoint], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t_ns", "p_x_hat", "sigma"])
    for p in points:
        writer.writerow([f"{p.t:.6g}", f"{p.p_x_hat:.6g}", f"{p.sigma:.6g}"])
