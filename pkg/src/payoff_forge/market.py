"""Market quotes on binary spreads and their probabilistic reading.

Quoted gross returns ``R_i`` are turned into a market-implied distribution
``m_i = R / R_i`` where the reference return ``R`` satisfies
``1/R = sum_i 1/R_i``.  No pricing-measure or arbitrage checks are made.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import Grid, ProbMass, _frozen
from .errors import DomainError

FAIR_ODDS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MarketQuotes:
    grid: Grid
    returns: np.ndarray
    risk_free: float = 1.0

    def __post_init__(self):
        returns = _frozen(self.returns, "returns")
        if returns.shape != (self.grid.bins,):
            raise DomainError(f"expected {self.grid.bins} returns, got shape {returns.shape}")
        if not np.all(np.isfinite(returns)) or np.any(returns <= 0):
            raise DomainError("every gross return must be finite and positive")
        if not (np.isfinite(self.risk_free) and self.risk_free > 0):
            raise DomainError(f"risk-free gross return must be positive, got {self.risk_free}")
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "risk_free", float(self.risk_free))


@dataclass(frozen=True)
class ImpliedResult:
    dist: ProbMass
    reference_return: float
    fair_odds: bool


def implied_distribution(quotes: MarketQuotes, tol: float = FAIR_ODDS_TOL) -> ImpliedResult:
    inv = 1.0 / quotes.returns
    total = inv.sum()
    reference = 1.0 / total
    m = ProbMass(quotes.grid, inv / total)
    return ImpliedResult(m, float(reference), bool(abs(total - 1.0) <= tol))


def returns_from_distribution(
    m: ProbMass, reference_return: float = 1.0, risk_free: float = 1.0
) -> MarketQuotes:
    """Quotes whose implied distribution is ``m`` with the given reference return."""
    if reference_return <= 0:
        raise DomainError("reference return must be positive")
    if np.any(m.masses == 0):
        raise DomainError("a zero-mass bin would need an infinite return")
    return MarketQuotes(m.grid, reference_return / m.masses, risk_free)
