"""Bin-mass probability distributions on a strike grid.

A distribution is stored as one probability mass per bin.  Densities are
never stored; where a density is needed it is ``mass / width``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, Unbounded

SUM_TOL = 1e-12
# Sums closer to 1 than this are summation round-off; rescaling them would only
# perturb the last bits and break lossless save/load round-trips.
ROUNDOFF_TOL = 1e-14
COVERAGE_WARNING = 0.99


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered strike edges; bin ``i`` spans ``[edges[i], edges[i+1])``."""

    edges: np.ndarray

    def __post_init__(self):
        edges = _frozen(self.edges, "edges")
        if edges.size < 2:
            raise DomainError("a grid needs at least 2 edges")
        if not np.all(np.isfinite(edges)):
            raise DomainError("grid edges must be finite")
        if not np.all(np.diff(edges) > 0):
            raise DomainError("grid edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def linear(cls, lo: float, hi: float, bins: int) -> "Grid":
        return cls(np.linspace(lo, hi, bins + 1))

    @classmethod
    def log_uniform(cls, lo: float, hi: float, bins: int) -> "Grid":
        """Edges equally spaced in ``ln x`` between ``lo`` and ``hi`` (both > 0)."""
        if lo <= 0 or hi <= 0:
            raise DomainError("log-uniform grid bounds must be positive")
        return cls(np.exp(np.linspace(np.log(lo), np.log(hi), bins + 1)))

    @classmethod
    def around_lognormal(cls, mu: float, sigma: float, bins: int, span: float = 8.0) -> "Grid":
        """Log-uniform grid covering ``mu ± span * sigma`` in log space."""
        return cls(np.exp(np.linspace(mu - span * sigma, mu + span * sigma, bins + 1)))

    @property
    def bins(self) -> int:
        return self.edges.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def positive(self) -> bool:
        return bool(self.edges[0] > 0)

    def bin_index(self, x: float) -> int:
        """Index of the bin containing ``x``; the last edge belongs to the last bin."""
        if not self.edges[0] <= x <= self.edges[-1]:
            raise DomainError(f"{x} lies outside the grid [{self.edges[0]}, {self.edges[-1]}]")
        return int(min(np.searchsorted(self.edges, x, side="right") - 1, self.bins - 1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self is other or np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash(self.edges.tobytes())

    def __len__(self) -> int:
        return self.bins


def require_same_grid(*objects) -> Grid:
    grid = objects[0].grid
    for obj in objects[1:]:
        if obj.grid != grid:
            raise DomainError("inputs are defined on different grids")
    return grid


@dataclass(frozen=True, eq=False)
class ProbMass:
    """Per-bin probability masses.

    Masses must be nonnegative and sum to one within ``SUM_TOL``; inputs
    inside that tolerance are rescaled to sum to one.
    """

    grid: Grid
    masses: np.ndarray
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        masses = np.array(self.masses, dtype=np.float64)
        if masses.shape != (self.grid.bins,):
            raise DomainError(f"expected {self.grid.bins} masses, got shape {masses.shape}")
        if not np.all(np.isfinite(masses)) or np.any(masses < 0):
            raise DomainError("masses must be finite and nonnegative")
        total = masses.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise DomainError(f"masses sum to {total!r}, not 1 within {SUM_TOL}")
        if abs(total - 1.0) > ROUNDOFF_TOL:
            masses = masses / total
        object.__setattr__(self, "masses", _frozen(masses, "masses"))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def densities(self) -> np.ndarray:
        return self.masses / self.grid.widths

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.masses > 0)

    def __len__(self) -> int:
        return self.masses.size


@dataclass(frozen=True)
class LognormalParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
            raise DomainError("lognormal parameters must be finite")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


def normalize(masses, grid: Grid) -> ProbMass:
    v = np.array(masses, dtype=np.float64)
    if v.shape != (grid.bins,):
        raise DomainError(f"expected {grid.bins} entries, got shape {v.shape}")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise DomainError("entries must be finite and nonnegative")
    total = v.sum()
    if total <= 0:
        raise DomainError("cannot normalize a zero vector")
    return ProbMass(grid, v / total)


def _normal_bin_masses(za: np.ndarray, zb: np.ndarray) -> np.ndarray:
    # Difference the tail that keeps both CDF values small to avoid cancellation.
    upper = za >= 0
    out = ndtr(zb) - ndtr(za)
    out[upper] = ndtr(-za[upper]) - ndtr(-zb[upper])
    return out


def discretize_lognormal(params: LognormalParams, grid: Grid) -> ProbMass:
    """Bin masses of LN(mu, sigma) on ``grid``, renormalized to the grid support.

    The captured (pre-renormalization) mass is stored as
    ``metadata["coverage"]``; ``metadata["coverage_warning"]`` is set when it
    falls below 99%.
    """
    if not grid.positive:
        raise DomainError("lognormal discretization needs positive grid edges")
    z = (np.log(grid.edges) - params.mu) / params.sigma
    raw = np.clip(_normal_bin_masses(z[:-1], z[1:]), 0.0, None)
    coverage = float(raw.sum())
    if coverage <= 0:
        raise DomainError("grid captures no lognormal mass")
    return ProbMass(
        grid,
        raw / coverage,
        {"coverage": coverage, "coverage_warning": coverage < COVERAGE_WARNING},
    )


def lognormal_log_weights(params: LognormalParams, grid: Grid) -> np.ndarray:
    """Unnormalized midpoint-rule log weights, ``ln(density(mid) * width)``.

    Stays finite far into the tails where bin masses underflow.
    """
    if not grid.positive:
        raise DomainError("lognormal weights need positive grid edges")
    x = grid.midpoints
    lx = np.log(x)
    return (
        -((lx - params.mu) ** 2) / (2.0 * params.sigma**2)
        - lx
        - np.log(params.sigma * np.sqrt(2.0 * np.pi))
        + np.log(grid.widths)
    )


class Moments(NamedTuple):
    mean: float
    variance: float
    log_mean: float | None
    log_variance: float | None


def moments(dist: ProbMass, include_log: bool = True) -> Moments:
    """Mass-weighted moments using bin midpoints as representative points."""
    x = dist.grid.midpoints
    w = dist.masses
    mean = float(w @ x)
    var = float(w @ (x - mean) ** 2)
    if not include_log:
        return Moments(mean, var, None, None)
    if not dist.grid.positive:
        raise DomainError("log-moments need positive grid edges")
    lx = np.log(x)
    lmean = float(w @ lx)
    lvar = float(w @ (lx - lmean) ** 2)
    return Moments(mean, var, lmean, lvar)


def relative_entropy(p: ProbMass, q: ProbMass) -> float | Unbounded:
    """Kullback-Leibler divergence ``sum p_i ln(p_i / q_i)`` in nats.

    Returns ``Unbounded.POS`` when ``p`` puts mass where ``q`` has none.
    """
    require_same_grid(p, q)
    on = p.masses > 0
    if np.any(q.masses[on] == 0):
        return Unbounded.POS
    pp = p.masses[on]
    d = float(np.sum(pp * np.log(pp / q.masses[on])))
    # A true divergence is never negative; clip round-off below zero.
    return max(d, 0.0)
