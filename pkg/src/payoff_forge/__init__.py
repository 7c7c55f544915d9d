"""Growth-optimal payoff design: beliefs, market-implied distributions and Kelly payoffs."""

from .allocator import (
    Allocation,
    GrowthReport,
    allocation_payoff,
    believed_rate,
    expected_log_return,
    fixed_point_allocation,
    growth_report,
    kelly_fair,
    kelly_general,
    kkt_residual,
    realized_rate,
)
from .dist import (
    Grid,
    LognormalParams,
    Moments,
    ProbMass,
    discretize_lognormal,
    lognormal_log_weights,
    moments,
    normalize,
    relative_entropy,
)
from .errors import DomainError, SolverError, Unbounded
from .market import ImpliedResult, MarketQuotes, implied_distribution, returns_from_distribution
from .payoff import (
    DiagnosticReport,
    Payoff,
    belief_from_payoff,
    boundary_check,
    likelihood_bound_check,
    payoff_from_belief,
    risk_aversion_blend,
    vanilla_payoff,
    variance_view_payoff,
    variance_view_rate,
    variance_view_rate_quadrature,
    variance_view_slope,
)
from .simulator import SimConfig, SimResult, convergence_report, simulate_reinvestment

__version__ = "0.1.0"
