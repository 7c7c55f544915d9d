"""Growth-optimal (Kelly) allocation across binary spreads and a cash leg."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .dist import Grid, ProbMass, _frozen, require_same_grid
from .errors import DomainError, SolverError, Unbounded
from .market import MarketQuotes
from .payoff import Payoff

BUDGET_TOL = 1e-12
KKT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Allocation:
    """Capital fractions per bin plus a cash fraction, summing to one."""

    grid: Grid
    alphas: np.ndarray
    alpha0: float = 0.0
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        alphas = _frozen(self.alphas, "alphas")
        if alphas.shape != (self.grid.bins,):
            raise DomainError(f"expected {self.grid.bins} fractions, got shape {alphas.shape}")
        if not np.all(np.isfinite(alphas)) or np.any(alphas < 0) or not self.alpha0 >= 0:
            raise DomainError("capital fractions must be finite and nonnegative")
        total = self.alpha0 + alphas.sum()
        if abs(total - 1.0) > BUDGET_TOL:
            raise DomainError(f"fractions sum to {total!r}, not 1 within {BUDGET_TOL}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alpha0", float(self.alpha0))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def support(self) -> np.ndarray:
        """Bins receiving capital."""
        return np.flatnonzero(self.alphas > 0)


@dataclass(frozen=True)
class GrowthReport:
    believed_rate: float | Unbounded
    realized_rate: float | Unbounded | None
    per_bin_log_return: tuple[float | Unbounded, ...]

    def to_dict(self) -> dict:
        def enc(v):
            return str(v) if isinstance(v, Unbounded) else v

        return {
            "believed_rate": enc(self.believed_rate),
            "realized_rate": enc(self.realized_rate),
            "per_bin_log_return": [enc(v) for v in self.per_bin_log_return],
        }


def kelly_fair(b: ProbMass) -> Allocation:
    """Bet each bin in proportion to its believed probability."""
    return Allocation(b.grid, b.masses.copy(), 0.0, {"method": "proportional"})


def allocation_payoff(alloc: Allocation, quotes: MarketQuotes) -> Payoff:
    """Gross payoff ``alpha_i R_i + alpha0 R0`` in each bin."""
    return Payoff(alloc.grid, _gross(alloc, quotes))


def _log_rate(weights: np.ndarray, values: np.ndarray) -> float | Unbounded:
    on = weights > 0
    f = values[on]
    if np.any(f == 0):
        return Unbounded.NEG
    return float(weights[on] @ np.log(f))


def expected_log_return(p: ProbMass, payoff: Payoff) -> float | Unbounded:
    """``sum p_i ln f_i`` with ``0 ln 0 = 0``; ``Unbounded.NEG`` if a possible outcome pays nothing."""
    require_same_grid(p, payoff)
    return _log_rate(p.masses, payoff.values)


def _gross(alloc: Allocation, quotes: MarketQuotes) -> np.ndarray:
    require_same_grid(alloc, quotes)
    return alloc.alphas * quotes.returns + alloc.alpha0 * quotes.risk_free


def believed_rate(b: ProbMass, quotes: MarketQuotes, alloc: Allocation) -> float | Unbounded:
    """Investor's own expected log rate ``sum b_i ln(alpha_i R_i + alpha0 R0)``."""
    require_same_grid(b, quotes)
    return _log_rate(b.masses, _gross(alloc, quotes))


def realized_rate(p: ProbMass, b: ProbMass, m: ProbMass) -> float | Unbounded:
    """Actual expected log rate ``sum p_i ln(b_i / m_i)`` of the proportional bettor.

    Equals ``D(p||m) - D(p||b)``.
    """
    require_same_grid(p, b, m)
    on = p.masses > 0
    bz = b.masses[on] == 0
    mz = m.masses[on] == 0
    if np.any(bz & mz):
        raise DomainError("realized outcome is impossible under both belief and market")
    if bz.any() and mz.any():
        raise DomainError("rate has both -inf and +inf contributions")
    if bz.any():
        return Unbounded.NEG
    if mz.any():
        return Unbounded.POS
    pp = p.masses[on]
    return float(pp @ np.log(b.masses[on] / m.masses[on]))


def growth_report(
    b: ProbMass, quotes: MarketQuotes, alloc: Allocation, p: ProbMass | None = None
) -> GrowthReport:
    require_same_grid(b, quotes)
    f = _gross(alloc, quotes)
    logs = tuple(float(np.log(v)) if v > 0 else Unbounded.NEG for v in f)
    if p is None:
        realized = None
    else:
        require_same_grid(p, quotes)
        realized = _log_rate(p.masses, f)
    return GrowthReport(_log_rate(b.masses, f), realized, logs)


def kkt_residual(b: ProbMass, quotes: MarketQuotes, alloc: Allocation) -> float:
    """Largest violation of the optimality conditions of the log-growth program.

    The budget multiplier is exactly 1 at any stationary point (weight the
    gradient by the fractions and sum), so conditions are checked against
    ``lambda = 1``: ``b_i R_i / f_i <= 1`` with equality on funded bins, and
    ``R0 * sum_j b_j / f_j <= 1`` with equality when cash is held.
    """
    require_same_grid(b, quotes, alloc)
    bb, R, R0 = b.masses, quotes.returns, quotes.risk_free
    f = alloc.alphas * R + alloc.alpha0 * R0
    on = bb > 0
    if np.any(f[on] == 0):
        return float("inf")
    grad = np.zeros_like(bb)
    grad[on] = bb[on] * R[on] / f[on]
    grad0 = R0 * float(np.sum(bb[on] / f[on]))
    funded = alloc.alphas > 0
    res = np.where(funded, np.abs(grad - 1.0), np.maximum(grad - 1.0, 0.0))
    res0 = abs(grad0 - 1.0) if alloc.alpha0 > 0 else max(grad0 - 1.0, 0.0)
    budget = abs(alloc.alpha0 + alloc.alphas.sum() - 1.0)
    return float(max(res.max(initial=0.0), res0, budget))


def _m_star(b: ProbMass, quotes: MarketQuotes, alphas: np.ndarray, alpha0: float) -> np.ndarray:
    # Market prior on funded bins, the investor's own view (scaled by cash) elsewhere.
    funded = alphas > 0
    out = np.zeros_like(alphas)
    out[funded] = quotes.risk_free / quotes.returns[funded]
    if alpha0 > 0:
        out[~funded] = b.masses[~funded] / alpha0
    return out


# Slack on R0 * sum(1/R) <= 1 when deciding that cash is dominated.
DOMINATED_CASH_TOL = 1e-12


def _active_set(bb: np.ndarray, R: np.ndarray, R0: float):
    if R0 * np.sum(1.0 / R) <= 1.0 + DOMINATED_CASH_TOL:
        # Buying every bin replicates cash at least as well, so proportional betting is optimal.
        return bb.copy(), 0.0
    edge = bb * R
    cand = np.flatnonzero(bb > 0)
    # Stable sort: ties keep ascending bin order.
    order = cand[np.argsort(-edge[cand], kind="stable")]
    rest = np.concatenate([np.cumsum(bb[order][::-1])[::-1], [0.0]])
    alpha0 = 1.0
    inv_in = 0.0
    k = 0
    for i in order:
        if edge[i] <= alpha0 * R0:
            break
        k += 1
        inv_in += 1.0 / R[i]
        if rest[k] == 0.0:
            alpha0 = 0.0
            break
        denom = 1.0 - R0 * inv_in
        if denom <= 0.0:
            return None
        alpha0 = rest[k] / denom
    alphas = np.zeros_like(bb)
    chosen = order[:k]
    alphas[chosen] = np.maximum(bb[chosen] - alpha0 * R0 / R[chosen], 0.0)
    return alphas, alpha0


def fixed_point_allocation(
    b: ProbMass,
    quotes: MarketQuotes,
    damping: float = 0.5,
    max_iter: int = 200_000,
    tol: float = KKT_TOL,
) -> Allocation:
    """Damped multiplicative update ``w <- (1-eta) w + eta w * grad`` on spreads plus cash.

    Slow but assumption-free; each step keeps the fractions on the simplex.
    """
    require_same_grid(b, quotes)
    bb, R, R0 = b.masses, quotes.returns, quotes.risk_free
    on = bb > 0
    n_on = int(on.sum())
    w = np.where(on, 1.0 / (n_on + 1), 0.0)
    w0 = 1.0 / (n_on + 1)
    for it in range(max_iter):
        f = w * R + w0 * R0
        grad = np.where(on, bb * R / np.where(on, f, 1.0), 0.0)
        grad0 = R0 * float(np.sum(bb[on] / f[on]))
        w = (1 - damping) * w + damping * w * grad
        w0 = (1 - damping) * w0 + damping * w0 * grad0
        total = w0 + w.sum()
        w, w0 = w / total, w0 / total
        if it % 64 == 0:
            alloc = _snap(b, quotes, w, w0)
            if alloc is not None and kkt_residual(b, quotes, alloc) <= tol:
                return alloc
    raise SolverError(f"fixed-point allocation did not converge in {max_iter} iterations")


def _snap(b, quotes, w, w0):
    # Fractions that the iteration drives toward 0 only decay geometrically; zero them
    # once they are negligible and re-solve the stationarity equations on what is left.
    keep = w > 1e-10
    alphas = np.where(keep, w, 0.0)
    R, R0, bb = quotes.returns, quotes.risk_free, b.masses
    if w0 > 1e-10:
        rest = float(bb[~keep].sum())
        denom = 1.0 - R0 * float(np.sum(1.0 / R[keep]))
        if denom <= 0 or rest <= 0:
            return None
        a0 = rest / denom
        alphas = np.where(keep, bb - a0 * R0 / R, 0.0)
        if np.any(alphas < 0):
            return None
    else:
        a0 = 0.0
        alphas = np.where(keep, bb, 0.0)
    try:
        return Allocation(b.grid, alphas, a0, {"method": "fixed_point"})
    except DomainError:
        return None


def kelly_general(b: ProbMass, quotes: MarketQuotes) -> Allocation:
    """Maximize ``sum_i b_i ln(alpha_i R_i + alpha0 R0)`` over the capital simplex.

    Bins are ranked by edge ``b_i R_i``; the funded set grows down that ranking
    while the next edge beats the current cash payoff ``alpha0 R0``, with
    ``alpha0 = (1 - sum_S b) / (1 - R0 sum_S 1/R)`` and
    ``alpha_i = b_i - alpha0 R0 / R_i`` on the funded set ``S``.  Everything
    stays in cash exactly when no edge exceeds ``R0``.  When a full strip of
    bins returns at least ``R0`` the cash leg is dominated and the result is
    proportional betting ``alpha = b``.

    Metadata carries the funded set (``support``), the patched market view
    ``m_star`` for which ``b = f m_star / R0``, the KKT residual and the method.
    """
    require_same_grid(b, quotes)
    bb, R, R0 = b.masses, quotes.returns, quotes.risk_free
    solved = _active_set(bb, R, R0)
    alloc = None
    if solved is not None:
        alphas, alpha0 = solved
        try:
            alloc = Allocation(b.grid, alphas, alpha0)
        except DomainError:
            alloc = None
    method = "active_set"
    if alloc is None or kkt_residual(b, quotes, alloc) > KKT_TOL:
        alloc = fixed_point_allocation(b, quotes)
        method = "fixed_point"
    residual = kkt_residual(b, quotes, alloc)
    meta = {
        "method": method,
        "support": [int(i) for i in alloc.support],
        "m_star": _m_star(b, quotes, alloc.alphas, alloc.alpha0).tolist(),
        "kkt_residual": residual,
    }
    return Allocation(alloc.grid, alloc.alphas, alloc.alpha0, meta)
