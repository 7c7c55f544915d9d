"""Monte-Carlo reinvestment of the growth-optimal strategy.

Each path bets its whole wealth every round with the Kelly allocation and
reinvests the proceeds, so log-wealth is a sum of i.i.d. per-round log
payoffs.  The average per-round log rate converges to ``sum p_i ln f_i``.

Seeding scheme
--------------
Paths are grouped into fixed blocks of ``BLOCK_PATHS`` paths.  Block ``k``
draws from ``PCG64(SeedSequence(seed, spawn_key=(k,)))``, filling
``(block_paths, max(1, CHUNK_ELEMENTS // block_paths))`` arrays of uniforms
round chunk by round chunk.
The decomposition depends only on the config, never on the worker count,
so results are bitwise identical under any parallel schedule.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .allocator import allocation_payoff, expected_log_return, kelly_general
from .dist import ProbMass, require_same_grid
from .errors import DomainError, Unbounded
from .market import MarketQuotes

BLOCK_PATHS = 4096
CHUNK_ELEMENTS = 1 << 20
Z_PASS = 4.0


@dataclass(frozen=True)
class SimConfig:
    rounds: int
    paths: int
    seed: int
    realized: ProbMass
    belief: ProbMass
    quotes: MarketQuotes

    def __post_init__(self):
        if self.rounds < 1 or self.paths < 1:
            raise DomainError("rounds and paths must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        require_same_grid(self.realized, self.belief, self.quotes)


@dataclass(frozen=True)
class SimResult:
    """Outcome of a reinvestment run.

    ``per_path_terminal_log_wealth`` holds NaN for ruined paths (a draw with
    zero payoff); those are counted in ``ruined_paths`` and excluded from
    ``mean_log_rate``.
    """

    mean_log_rate: float
    std_error: float
    per_path_terminal_log_wealth: np.ndarray
    target_rate: float | Unbounded
    rounds: int
    ruined_paths: int = 0

    @property
    def paths(self) -> int:
        return self.per_path_terminal_log_wealth.size


def _run_block(block: int, n_paths: int, seed: int, rounds: int, cdf, logf):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))
    total = np.zeros(n_paths)
    sq = np.zeros(n_paths)
    ruined = np.zeros(n_paths, dtype=bool)
    chunk = max(1, CHUNK_ELEMENTS // n_paths)
    done = 0
    while done < rounds:
        step = min(chunk, rounds - done)
        u = rng.random((n_paths, step))
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
        draws = logf[idx]
        bad = ~np.isfinite(draws)
        ruined |= bad.any(axis=1)
        draws[bad] = 0.0
        total += draws.sum(axis=1)
        sq += (draws**2).sum(axis=1)
        done += step
    return total, sq, ruined


def simulate_reinvestment(cfg: SimConfig, workers: int = 1) -> SimResult:
    """Simulate ``cfg.paths`` independent reinvestment paths of ``cfg.rounds`` rounds.

    The standard error is the sample std of per-path rates over
    ``sqrt(paths)``; a single path falls back to the per-round std over
    ``sqrt(rounds)``.
    """
    alloc = kelly_general(cfg.belief, cfg.quotes)
    payoff = allocation_payoff(alloc, cfg.quotes)
    target = expected_log_return(cfg.realized, payoff)
    with np.errstate(divide="ignore"):
        logf = np.log(payoff.values)
    cdf = np.cumsum(cfg.realized.masses)
    cdf /= cdf[-1]

    n_blocks = math.ceil(cfg.paths / BLOCK_PATHS)
    sizes = [min(BLOCK_PATHS, cfg.paths - k * BLOCK_PATHS) for k in range(n_blocks)]
    args = [(k, sizes[k], cfg.seed, cfg.rounds, cdf, logf) for k in range(n_blocks)]
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _run_block(*a), args))
    else:
        parts = [_run_block(*a) for a in args]

    total = np.concatenate([p[0] for p in parts])
    sq = np.concatenate([p[1] for p in parts])
    ruined = np.concatenate([p[2] for p in parts])
    terminal = np.where(ruined, np.nan, total)
    ok = ~ruined
    rates = total[ok] / cfg.rounds
    n_ok = int(ok.sum())
    if n_ok == 0:
        mean, se = float("nan"), float("nan")
    else:
        mean = float(rates.mean())
        if n_ok > 1:
            se = float(rates.std(ddof=1) / math.sqrt(n_ok))
        elif cfg.rounds > 1:
            n = cfg.rounds
            var = max(sq[ok][0] - total[ok][0] ** 2 / n, 0.0) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
    return SimResult(mean, se, terminal, target, cfg.rounds, int(ruined.sum()))


@dataclass(frozen=True)
class ConvergenceSummary:
    z_score: float
    passed: bool
    inconsistent: bool
    log_wealth_quantiles: dict[str, float]
    wealth_quantiles: dict[str, float]
    ruined_paths: int

    def to_dict(self) -> dict:
        return {
            "z_score": self.z_score,
            "pass": self.passed,
            "inconsistent": self.inconsistent,
            "log_wealth_quantiles": self.log_wealth_quantiles,
            "wealth_quantiles": self.wealth_quantiles,
            "ruined_paths": self.ruined_paths,
        }


QUANTILES = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


def convergence_report(result: SimResult, threshold: float = Z_PASS) -> ConvergenceSummary:
    """Z-score of the simulated rate against the analytic target, plus wealth dispersion."""
    if isinstance(result.target_rate, Unbounded):
        z, passed, inconsistent = float("nan"), False, True
    else:
        diff = result.mean_log_rate - result.target_rate
        if result.std_error > 0:
            z = diff / result.std_error
            inconsistent = False
        elif diff == 0:
            z, inconsistent = 0.0, False
        else:
            z, inconsistent = math.copysign(math.inf, diff), True
        passed = bool(abs(z) <= threshold) and not inconsistent
    lw = result.per_path_terminal_log_wealth
    lw = lw[np.isfinite(lw)]
    if lw.size:
        qs = np.quantile(lw, QUANTILES)
        logq = {f"q{q:g}": float(v) for q, v in zip(QUANTILES, qs)}
        with np.errstate(over="ignore"):
            wq = {k: float(np.exp(v)) for k, v in logq.items()}
    else:
        logq, wq = {}, {}
    return ConvergenceSummary(float(z), passed, inconsistent, logq, wq, result.ruined_paths)
