"""Plot-ready curve bundles: market density, belief density and payoff at bin midpoints.

Every builder returns an ordered mapping of equal-length columns starting
with ``x``, ``m``, ``b``, ``f``.  ``m`` and ``b`` are densities
(mass / bin width); nothing is rendered here.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dist import Grid, LognormalParams, ProbMass, discretize_lognormal, moments, normalize
from .errors import DomainError
from .payoff import (
    Payoff,
    belief_from_payoff,
    payoff_from_belief,
    risk_aversion_blend,
    vanilla_payoff,
    variance_view_payoff,
    variance_view_rate,
)

Curves = dict[str, np.ndarray]


def _curves(m: ProbMass, b: ProbMass, f: Payoff, **extra: np.ndarray) -> Curves:
    out = {"x": m.grid.midpoints, "m": m.densities, "b": b.densities, "f": f.values}
    out.update(extra)
    return out


def market_lognormal(mu: float, sigma: float, bins: int, span: float = 6.0, grid_sigma: float | None = None):
    grid = Grid.around_lognormal(mu, grid_sigma or sigma, bins, span)
    return grid, discretize_lognormal(LognormalParams(mu, sigma), grid)


def _restrict(m: ProbMass, lo: float, hi: float) -> np.ndarray:
    x = m.grid.midpoints
    inside = (x >= lo) & (x <= hi)
    if not inside.any():
        inside[m.grid.bin_index(min(max(0.5 * (lo + hi), m.grid.edges[0]), m.grid.edges[-1]))] = True
    w = np.where(inside, m.masses, 0.0)
    return w / w.sum()


def fig1_curves(
    panel: str = "C",
    mu: float = 0.0,
    sigma: float = 0.2,
    bins: int = 400,
    k: tuple[float, float] = (0.95, 1.0),
    l: tuple[float, float] = (1.1, 1.15),
    pk: float = 0.6,
    mu_b: float | None = None,
    sigma_b: float | None = None,
) -> Curves:
    """Binary-spread beliefs: certainty in one interval (A), two intervals (B), a full view (C)."""
    grid, m = market_lognormal(mu, sigma, bins)
    if panel == "A":
        b = ProbMass(grid, _restrict(m, *k))
    elif panel == "B":
        if not 0.0 <= pk <= 1.0:
            raise DomainError("pk must lie in [0, 1]")
        b = normalize(pk * _restrict(m, *k) + (1.0 - pk) * _restrict(m, *l), grid)
    elif panel == "C":
        params = LognormalParams(mu + 0.05 if mu_b is None else mu_b, sigma if sigma_b is None else sigma_b)
        b = discretize_lognormal(params, grid)
    else:
        raise DomainError(f"unknown panel {panel!r}")
    return _curves(m, b, payoff_from_belief(b, m))


def research_payoff(m: ProbMass, interval: tuple[float, float], amplitude: float = 0.5) -> Payoff:
    """Budget-neutral payoff equal to 1 outside ``interval`` with one oscillation inside.

    Inside the interval ``f = 1 + A (s - s_bar)`` with ``s`` a full sine period
    and ``s_bar`` its market-weighted mean there, so ``sum m_i f_i = 1``.
    """
    a, c = interval
    if not a < c:
        raise DomainError("research interval must have a < b")
    x = m.grid.midpoints
    inside = (x >= a) & (x <= c)
    if not inside.any():
        raise DomainError("no bin midpoint falls inside the research interval")
    s = np.sin(2.0 * np.pi * (x - a) / (c - a))
    w = m.masses[inside]
    s_bar = float(w @ s[inside] / w.sum()) if w.sum() > 0 else 0.0
    bump = np.where(inside, s - s_bar, 0.0)
    peak = float(np.abs(bump).max())
    if peak > 0 and amplitude * peak > 1.0:
        raise DomainError("amplitude would make the payoff negative")
    return Payoff(m.grid, 1.0 + amplitude * bump)


def fig2_curves(
    interval: tuple[float, float] | None = None,
    mu: float = 0.0,
    sigma: float = 0.2,
    bins: int = 400,
    amplitude: float = 0.5,
    lambdas: Sequence[float] = (0.25, 0.5, 0.75),
) -> Curves:
    """Researched-interval payoff plus risk-averse blends toward the risk-free line."""
    grid, m = market_lognormal(mu, sigma, bins)
    if interval is None:
        interval = (float(np.exp(mu - sigma)), float(np.exp(mu + sigma)))
    f = research_payoff(m, interval, amplitude)
    b, _ = belief_from_payoff(f, m)
    blends = {f"f_blend_{lam:g}": risk_aversion_blend(f, lam).values for lam in lambdas}
    return _curves(m, b, f, **blends)


def fig3_curves(
    kind: str = "call",
    strike: float | None = None,
    mu: float = 0.0,
    sigma: float = 0.2,
    bins: int = 400,
) -> Curves:
    """Belief implied by holding an at-the-money vanilla against a lognormal market.

    The default strike is the market forward ``E_m[x]``.
    """
    grid, m = market_lognormal(mu, sigma, bins)
    if strike is None:
        strike = moments(m, include_log=False).mean
    kinds = {"call": "call", "digital": "digital_call", "digital_call": "digital_call", "forward": "forward"}
    if kind not in kinds:
        raise DomainError(f"unknown vanilla kind {kind!r}")
    f = vanilla_payoff(grid, kinds[kind], strike, m)
    b, _ = belief_from_payoff(f, m)
    return _curves(m, b, f)


def variance_view_curves(
    mu: float = 0.0, sigma_m: float = 0.2, sigma_b: float = 0.3, bins: int = 400, span: float = 6.0
) -> Curves:
    grid, m = market_lognormal(mu, sigma_m, bins, span, grid_sigma=max(sigma_m, sigma_b))
    b = discretize_lognormal(LognormalParams(mu, sigma_b), grid)
    return _curves(m, b, variance_view_payoff(mu, sigma_m, sigma_b, grid))


def variance_rate_curve(sigma_m: float, sigma_b: float, sigma_p: Sequence[float]) -> Curves:
    sp = np.asarray(sigma_p, dtype=np.float64)
    rates = np.array([variance_view_rate(sigma_m, sigma_b, s) for s in sp])
    return {"sigma_p2": sp**2, "rate": rates}


def curves_to_csv(curves: Curves) -> str:
    cols = list(curves)
    n = {len(v) for v in curves.values()}
    if len(n) != 1:
        raise ValueError("curve columns differ in length")
    lines = [",".join(cols)]
    data = [np.asarray(curves[c], dtype=np.float64) for c in cols]
    for row in zip(*data):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
