import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from payoff_forge import DomainError, Grid, MarketQuotes, ProbMass, implied_distribution, returns_from_distribution

G2 = Grid([0.0, 1.0, 2.0])


@pytest.mark.parametrize(
    "returns, masses, reference, fair",
    [
        ((2.0, 2.0), (0.5, 0.5), 1.0, True),
        ((4.0, 4.0 / 3.0), (0.25, 0.75), 1.0, True),
        ((1.8, 1.8), (0.5, 0.5), 0.9, False),
    ],
)
def test_implied_distribution_examples(returns, masses, reference, fair):
    res = implied_distribution(MarketQuotes(G2, returns))
    np.testing.assert_allclose(res.dist.masses, masses, rtol=1e-15)
    assert res.reference_return == pytest.approx(reference, rel=1e-15)
    assert res.fair_odds is fair


def test_nonpositive_return_rejected():
    with pytest.raises(DomainError):
        MarketQuotes(G2, [2.0, 0.0])
    with pytest.raises(DomainError):
        MarketQuotes(G2, [2.0, 2.0], risk_free=0.0)


@pytest.mark.parametrize("masses, returns", [((0.5, 0.5), (2.0, 2.0)), ((0.25, 0.75), (4.0, 4.0 / 3.0))])
def test_returns_from_distribution(masses, returns):
    q = returns_from_distribution(ProbMass(G2, masses), 1.0)
    np.testing.assert_allclose(q.returns, returns, rtol=1e-15)


def test_zero_mass_bin_rejected():
    with pytest.raises(DomainError):
        returns_from_distribution(ProbMass(G2, [1.0, 0.0]), 1.0)


def _random_quotes(seed, n):
    rng = np.random.default_rng(seed)
    g = Grid(np.arange(n + 1.0))
    return MarketQuotes(g, rng.uniform(1.01, 50.0, n), rng.uniform(0.9, 1.2))


@given(st.integers(0, 2**32 - 1), st.integers(1, 64))
def test_masses_sum_to_one(seed, n):
    res = implied_distribution(_random_quotes(seed, n))
    assert abs(res.dist.masses.sum() - 1.0) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.integers(1, 64))
def test_round_trip_quotes(seed, n):
    q = _random_quotes(seed, n)
    res = implied_distribution(q)
    back = returns_from_distribution(res.dist, res.reference_return, q.risk_free)
    np.testing.assert_allclose(back.returns, q.returns, rtol=1e-12, atol=0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 64), st.floats(0.8, 1.3))
def test_round_trip_distribution(seed, n, r):
    rng = np.random.default_rng(seed)
    m = ProbMass(Grid(np.arange(n + 1.0)), rng.dirichlet(np.ones(n)) + 0.0)
    if np.any(m.masses == 0):
        return
    res = implied_distribution(returns_from_distribution(m, r))
    np.testing.assert_allclose(res.dist.masses, m.masses, rtol=1e-12)
    assert res.reference_return == pytest.approx(r, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 32), st.floats(0.1, 10.0))
def test_common_scaling(seed, n, c):
    q = _random_quotes(seed, n)
    scaled = MarketQuotes(q.grid, q.returns * c, q.risk_free)
    a, b = implied_distribution(q), implied_distribution(scaled)
    np.testing.assert_allclose(b.dist.masses, a.dist.masses, rtol=1e-12)
    assert b.reference_return == pytest.approx(c * a.reference_return, rel=1e-12)
