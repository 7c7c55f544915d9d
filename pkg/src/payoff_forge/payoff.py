"""Payoff structures, the beliefs they imply, and sanity diagnostics.

A growth-optimal payoff is ``f = R * b / m`` per bin, and conversely any
payoff ``f`` implies the belief ``b ∝ f * m``.  The payoff therefore works
as a likelihood that updates the market prior, which is what the bound and
boundary diagnostics probe.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Literal, Mapping

import numpy as np
from scipy.special import logsumexp

from .dist import Grid, LognormalParams, ProbMass, _frozen, lognormal_log_weights, require_same_grid
from .errors import DomainError

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Payoff:
    """Gross payoff multiple per unit notional, one value per bin."""

    grid: Grid
    values: np.ndarray
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = _frozen(self.values, "values")
        if values.shape != (self.grid.bins,):
            raise DomainError(f"expected {self.grid.bins} payoff values, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DomainError("payoff values must be finite and nonnegative")
        if not np.any(values > 0):
            raise DomainError("payoff is zero everywhere")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DiagnosticReport:
    """Outcome of a payoff sanity check.

    Fields not produced by the check that built the report stay ``None``.
    """

    max_leverage: float
    flagged_bins: tuple[int, ...]
    boundary_ok: bool | None = None
    max_boundary_deviation: float | None = None
    interval: tuple[float, float] | None = None
    tolerance: float | None = None
    bounded_ok: bool | None = None
    cap: float | None = None

    @property
    def ok(self) -> bool:
        return all(flag is not False for flag in (self.boundary_ok, self.bounded_ok))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flagged_bins"] = list(self.flagged_bins)
        if self.interval is not None:
            d["interval"] = list(self.interval)
        return d


def payoff_from_belief(b: ProbMass, m: ProbMass, reference_return: float = 1.0) -> Payoff:
    """Growth-optimal payoff ``R * b_i / m_i``.

    Bins that both distributions rule out get the risk-free value
    ``reference_return``: belief and market agree there.
    """
    grid = require_same_grid(b, m)
    if reference_return <= 0:
        raise DomainError("reference return must be positive")
    if np.any((b.masses > 0) & (m.masses == 0)):
        raise DomainError("belief puts mass on an outcome the market does not offer")
    values = np.full(grid.bins, float(reference_return))
    on = m.masses > 0
    values[on] = reference_return * (b.masses[on] / m.masses[on])
    return Payoff(grid, values)


def belief_from_payoff(f: Payoff, m: ProbMass) -> tuple[ProbMass, float]:
    """Belief implied by holding ``f`` against market prior ``m``.

    Returns the normalized belief and the scale ``S = sum f_i m_i``, so that
    ``b = f m / S``; ``S`` is ``R`` for a payoff built with reference return ``R``.
    """
    grid = require_same_grid(f, m)
    w = f.values * m.masses
    scale = float(w.sum())
    if scale <= 0:
        raise DomainError("payoff and market share no support")
    return ProbMass(grid, w / scale), scale


def boundary_check(
    f: Payoff, interval: tuple[float, float], tol: float = BOUNDARY_TOL
) -> DiagnosticReport:
    """Check that ``f`` is risk-free (``f = 1``) on every bin outside ``interval``.

    A bin is outside when its midpoint is outside ``[a, b]``.
    """
    a, b = (float(v) for v in interval)
    if not a < b:
        raise DomainError(f"degenerate research interval [{a}, {b}]")
    edges = f.grid.edges
    if b < edges[0] or a > edges[-1]:
        raise DomainError("research interval does not intersect the grid")
    x = f.grid.midpoints
    outside = (x < a) | (x > b)
    dev = np.abs(f.values - 1.0)
    max_dev = float(dev[outside].max()) if outside.any() else 0.0
    flagged = np.flatnonzero(outside & (dev > tol))
    return DiagnosticReport(
        max_leverage=float(f.values.max()),
        flagged_bins=tuple(int(i) for i in flagged),
        boundary_ok=max_dev <= tol,
        max_boundary_deviation=max_dev,
        interval=(a, b),
        tolerance=float(tol),
    )


def likelihood_bound_check(f: Payoff, cap: float) -> DiagnosticReport:
    if cap <= 0:
        raise DomainError("cap must be positive")
    flagged = np.flatnonzero(f.values > cap)
    return DiagnosticReport(
        max_leverage=float(f.values.max()),
        flagged_bins=tuple(int(i) for i in flagged),
        bounded_ok=flagged.size == 0,
        cap=float(cap),
    )


def risk_aversion_blend(f: Payoff, lam: float) -> Payoff:
    """Linear blend ``(1 - lam) + lam * f`` between risk-free and ``f``."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"blend weight must lie in [0, 1], got {lam}")
    if lam == 1.0:
        return Payoff(f.grid, f.values)
    g = (1.0 - lam) + lam * f.values
    # Round-off must not push the blend outside the [1, f] band.
    g = np.clip(g, np.minimum(f.values, 1.0), np.maximum(f.values, 1.0))
    return Payoff(f.grid, g, {"blend": lam})


VanillaKind = Literal["call", "digital_call", "forward"]


def vanilla_payoff(grid: Grid, kind: VanillaKind, strike: float, m: ProbMass) -> Payoff:
    """Vanilla payoff at bin midpoints, scaled to unit market cost ``sum m_i f_i = 1``.

    The forward is floored at zero; ``metadata["floored"]`` records whether
    the floor bit.
    """
    if m.grid != grid:
        raise DomainError("market distribution lives on a different grid")
    if not grid.edges[0] <= strike <= grid.edges[-1]:
        raise DomainError(f"strike {strike} outside grid span")
    if np.any(m.masses <= 0):
        raise DomainError("market distribution must be strictly positive")
    x = grid.midpoints
    meta: dict[str, Any] = {"kind": kind, "strike": float(strike)}
    if kind == "call":
        raw = np.maximum(x - strike, 0.0)
    elif kind == "digital_call":
        raw = (x > strike).astype(np.float64)
    elif kind == "forward":
        raw = x - strike
        meta["floored"] = bool(np.any(raw < 0))
        raw = np.maximum(raw, 0.0)
    else:
        raise DomainError(f"unknown vanilla kind {kind!r}")
    cost = float(m.masses @ raw)
    if cost <= 0:
        raise DomainError("vanilla payoff is zero across the grid")
    meta["unit_cost_scale"] = 1.0 / cost
    return Payoff(grid, raw / cost, meta)


def _check_sigmas(*sigmas: float) -> None:
    for s in sigmas:
        if not (np.isfinite(s) and s > 0):
            raise DomainError(f"volatilities must be positive, got {s}")


def variance_view_payoff(mu: float, sigma_m: float, sigma_b: float, grid: Grid) -> Payoff:
    """Closed-form density ratio of LN(mu, sigma_b) over LN(mu, sigma_m) at midpoints."""
    _check_sigmas(sigma_m, sigma_b)
    if not grid.positive:
        raise DomainError("variance view needs positive grid edges")
    curvature = 1.0 / sigma_m**2 - 1.0 / sigma_b**2
    y = np.log(grid.midpoints) - mu
    values = (sigma_m / sigma_b) * np.exp(curvature * y**2 / 2.0)
    if not np.all(np.isfinite(values)):
        raise DomainError("variance-view payoff overflows on this grid")
    return Payoff(grid, values, {"mu": mu, "sigma_m": sigma_m, "sigma_b": sigma_b})


def variance_view_rate(sigma_m: float, sigma_b: float, sigma_p: float) -> float:
    """Expected log rate of the variance-view payoff when LN(mu, sigma_p) is realized.

    ``ln(sigma_m/sigma_b) + (1/sigma_m^2 - 1/sigma_b^2) * sigma_p^2 / 2``: affine
    in realized variance, with slope positive exactly when ``sigma_b > sigma_m``.
    """
    _check_sigmas(sigma_m, sigma_b, sigma_p)
    return float(np.log(sigma_m / sigma_b) + variance_view_slope(sigma_m, sigma_b) * sigma_p**2)


def variance_view_slope(sigma_m: float, sigma_b: float) -> float:
    """Derivative of ``variance_view_rate`` with respect to ``sigma_p**2``."""
    _check_sigmas(sigma_m, sigma_b)
    return (1.0 / sigma_m**2 - 1.0 / sigma_b**2) / 2.0


def variance_view_rate_quadrature(
    sigma_m: float,
    sigma_b: float,
    sigma_p: float,
    mu: float = 0.0,
    bins: int = 10_000,
    span: float = 8.0,
) -> float:
    """Numerical ``sum p_i ln(b_i / m_i)`` for three lognormals sharing ``mu``.

    Uses midpoint-rule weights on a log-uniform grid covering
    ``mu ± span * max(sigma)``, worked in log space so tails where the
    market density underflows still contribute.
    """
    _check_sigmas(sigma_m, sigma_b, sigma_p)
    grid = Grid.around_lognormal(mu, max(sigma_m, sigma_b, sigma_p), bins, span)

    def log_masses(sigma):
        w = lognormal_log_weights(LognormalParams(mu, sigma), grid)
        return w - logsumexp(w)

    lp, lb, lm = log_masses(sigma_p), log_masses(sigma_b), log_masses(sigma_m)
    return float(np.exp(lp) @ (lb - lm))
