"""``payoff-forge`` command line.

Exit codes: 0 success (diagnostic warnings included), 2 invalid input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import figures
from . import io as pio
from .allocator import KKT_TOL, growth_report, kelly_general
from .dist import Grid, LognormalParams, ProbMass, discretize_lognormal, moments, require_same_grid
from .errors import DomainError, SolverError
from .market import FAIR_ODDS_TOL, MarketQuotes, implied_distribution
from .payoff import (
    BOUNDARY_TOL,
    belief_from_payoff,
    boundary_check,
    likelihood_bound_check,
    payoff_from_belief,
)
from .simulator import SimConfig, Z_PASS, convergence_report, simulate_reinvestment

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        pio.write_text(output, text)


def _market_prior(market) -> tuple[ProbMass, float]:
    if isinstance(market, MarketQuotes):
        implied = implied_distribution(market)
        return implied.dist, implied.reference_return
    return market, 1.0


def cmd_discretize(args) -> dict:
    grid = Grid.around_lognormal(args.mu, args.grid_sigma or args.sigma, args.bins, args.span)
    dist = discretize_lognormal(LognormalParams(args.mu, args.sigma), grid)
    out = pio.dist_to_dict(dist)
    out["metadata"] = {"mu": args.mu, "sigma": args.sigma, **dist.metadata}
    return out


def cmd_implied(args) -> dict:
    quotes = pio.load_quotes(args.quotes)
    res = implied_distribution(quotes, tol=args.tol)
    out = pio.dist_to_dict(res.dist)
    out.update(
        reference_return=res.reference_return,
        fair_odds=res.fair_odds,
        metadata={"fair_odds_tol": args.tol},
    )
    return out


def cmd_design(args) -> dict:
    b = pio.load_distribution(args.belief)
    m, reference = _market_prior(pio.load_market(args.market))
    require_same_grid(b, m)
    f = payoff_from_belief(b, m, reference)
    diagnostics = {}
    if args.interval is not None:
        diagnostics["boundary"] = boundary_check(f, tuple(args.interval), args.tol).to_dict()
    if args.cap is not None:
        diagnostics["bound"] = likelihood_bound_check(f, args.cap).to_dict()
    out = pio.payoff_to_dict(f)
    out.update(
        reference_return=reference,
        diagnostics=diagnostics,
        metadata={"boundary_tol": args.tol},
    )
    return out


def cmd_imply(args) -> dict:
    f = pio.load_payoff(args.payoff)
    m, _ = _market_prior(pio.load_market(args.market))
    b, scale = belief_from_payoff(f, m)
    out = pio.dist_to_dict(b)
    out["implied_scale"] = scale
    out["mean_belief"] = moments(b, include_log=False).mean
    out["mean_market"] = moments(m, include_log=False).mean
    return out


def cmd_allocate(args) -> dict:
    b = pio.load_distribution(args.belief)
    quotes = pio.load_quotes(args.quotes)
    p = pio.load_distribution(args.realized) if args.realized else None
    alloc = kelly_general(b, quotes)
    out = pio.allocation_to_dict(alloc)
    out["support"] = alloc.metadata["support"]
    out["m_star"] = alloc.metadata["m_star"]
    out["growth"] = growth_report(b, quotes, alloc, p).to_dict()
    out["metadata"] = {
        "method": alloc.metadata["method"],
        "kkt_residual": alloc.metadata["kkt_residual"],
        "kkt_tol": KKT_TOL,
    }
    return out


def cmd_simulate(args) -> dict:
    cfg = pio.load_sim_config(args.config)
    overrides = {k: getattr(args, k) for k in ("rounds", "paths", "seed") if getattr(args, k) is not None}
    if overrides:
        cfg = SimConfig(
            overrides.get("rounds", cfg.rounds),
            overrides.get("paths", cfg.paths),
            overrides.get("seed", cfg.seed),
            cfg.realized,
            cfg.belief,
            cfg.quotes,
        )
    result = simulate_reinvestment(cfg, workers=args.workers)
    out = pio.sim_result_to_dict(result)
    out["convergence"] = convergence_report(result, args.z).to_dict()
    out["metadata"] = {"z_pass": args.z, "seed": cfg.seed}
    return out


def cmd_figures(args) -> str:
    case = args.case
    if case == "fig1":
        curves = figures.fig1_curves(panel=args.panel, mu=args.mu, sigma=args.sigma, bins=args.bins)
    elif case == "fig2":
        interval = tuple(args.interval) if args.interval else None
        curves = figures.fig2_curves(interval, args.mu, args.sigma, args.bins, args.amplitude, args.lam)
    elif case == "fig3":
        curves = figures.fig3_curves(args.kind, args.strike, args.mu, args.sigma, args.bins)
    else:
        curves = figures.variance_view_curves(args.mu, args.sigma, args.sigma_b, args.bins)
        if args.rate_output:
            sp = [0.02 * (i + 1) for i in range(40)]
            pio.write_text(args.rate_output, figures.curves_to_csv(
                figures.variance_rate_curve(args.sigma, args.sigma_b, sp)))
    return figures.curves_to_csv(curves)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="payoff-forge",
        description="Growth-optimal payoff design from beliefs and market quotes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("-o", "--output", help="output file (default: stdout)")
        p.set_defaults(func=func)
        return p

    p = add("discretize", cmd_discretize, "Write a lognormal distribution file on a log-uniform grid.")
    p.add_argument("--mu", type=float, default=0.0, help="log-space location (default 0)")
    p.add_argument("--sigma", type=float, required=True, help="log-space volatility")
    p.add_argument("--bins", type=int, default=400, help="number of bins (default 400)")
    p.add_argument("--span", type=float, default=8.0, help="half-width in grid sigmas (default 8)")
    p.add_argument("--grid-sigma", type=float, default=None,
                   help="sigma used to size the grid (default --sigma); share it to align files")

    p = add("implied", cmd_implied, "Market-implied distribution and fair-odds flag from quotes.")
    p.add_argument("quotes", help="quotes file (JSON or CSV)")
    p.add_argument("--tol", type=float, default=FAIR_ODDS_TOL, help=f"fair-odds tolerance (default {FAIR_ODDS_TOL})")

    p = add("design", cmd_design, "Growth-optimal payoff for a belief, with diagnostics.")
    p.add_argument("belief", help="belief distribution file")
    p.add_argument("market", help="market distribution or quotes file")
    p.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), help="researched interval")
    p.add_argument("--cap", type=float, help="likelihood cap on the payoff")
    p.add_argument("--tol", type=float, default=BOUNDARY_TOL, help=f"boundary tolerance (default {BOUNDARY_TOL})")

    p = add("imply", cmd_imply, "Belief implied by a payoff against a market prior.")
    p.add_argument("payoff", help="payoff file")
    p.add_argument("market", help="market distribution or quotes file")

    p = add("allocate", cmd_allocate, "Growth-optimal allocation with a risk-free leg.")
    p.add_argument("belief", help="belief distribution file")
    p.add_argument("quotes", help="quotes file")
    p.add_argument("--realized", help="realized distribution file for the realized rate")

    p = add("simulate", cmd_simulate, "Monte-Carlo reinvestment of the growth-optimal strategy.")
    p.add_argument("config", help="simulation config JSON")
    p.add_argument("--rounds", type=int, help="override rounds")
    p.add_argument("--paths", type=int, help="override paths")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--workers", type=int, default=1, help="parallel workers; output is identical for any value")
    p.add_argument("--z", type=float, default=Z_PASS, help=f"z-score pass threshold (default {Z_PASS})")

    p = add("figures", cmd_figures, "CSV curve bundle (x, m, b, f) for plotting.")
    p.add_argument("case", choices=["fig1", "fig2", "fig3", "variance_view"])
    p.add_argument("--mu", type=float, default=0.0, help="market log-space location (default 0)")
    p.add_argument("--sigma", type=float, default=0.2, help="market volatility (default 0.2)")
    p.add_argument("--bins", type=int, default=400, help="number of bins (default 400)")
    p.add_argument("--panel", choices=["A", "B", "C"], default="C", help="binary-spread panel (default C)")
    p.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), help="researched interval (fig2)")
    p.add_argument("--amplitude", type=float, default=0.5, help="researched-interval bump amplitude (default 0.5)")
    p.add_argument("--lam", type=float, nargs="*", default=[0.25, 0.5, 0.75], help="risk-aversion blend weights (fig2)")
    p.add_argument("--kind", choices=["call", "digital", "forward"], default="call", help="vanilla product (fig3)")
    p.add_argument("--strike", type=float, help="vanilla strike (default: market forward)")
    p.add_argument("--sigma-b", type=float, default=0.3, help="variance_view believed volatility (default 0.3)")
    p.add_argument("--rate-output", help="variance_view: also write rate vs sigma_p^2 CSV here")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
        text = result if isinstance(result, str) else pio.dumps(result)
    except (pio.SchemaError, DomainError, ValueError) as exc:
        print(f"payoff-forge {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"payoff-forge {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(text, args.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
