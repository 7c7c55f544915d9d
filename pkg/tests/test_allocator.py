import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from payoff_forge import (
    Allocation,
    DomainError,
    Grid,
    MarketQuotes,
    ProbMass,
    Unbounded,
    allocation_payoff,
    belief_from_payoff,
    believed_rate,
    fixed_point_allocation,
    growth_report,
    kelly_fair,
    kelly_general,
    kkt_residual,
    realized_rate,
    relative_entropy,
)

from oracles import simplex_search

G2 = Grid([0.0, 1.0, 2.0])


def pm(*m):
    return ProbMass(Grid(np.arange(len(m) + 1.0)), m)


def quotes(returns, r0=1.0):
    return MarketQuotes(Grid(np.arange(len(returns) + 1.0)), returns, r0)


def random_instance(rng, n, zero_frac=0.0):
    b = rng.dirichlet(np.ones(n))
    if zero_frac and n > 1:
        zero = rng.random(n) < zero_frac
        zero[rng.integers(n)] = False
        b = np.where(zero, 0.0, b)
        b /= b.sum()
    m = rng.dirichlet(np.ones(n))
    g = Grid(np.arange(n + 1.0))
    return ProbMass(g, b), MarketQuotes(g, rng.uniform(0.7, 1.3) / m, rng.uniform(0.9, 1.5))


class TestAllocationType:
    def test_budget(self):
        Allocation(G2, [0.5, 0.25], 0.25)
        with pytest.raises(DomainError):
            Allocation(G2, [0.5, 0.25], 0.3)

    def test_nonnegative(self):
        with pytest.raises(DomainError):
            Allocation(G2, [1.5, -0.5], 0.0)

    def test_support_derived(self):
        np.testing.assert_array_equal(Allocation(G2, [0.0, 0.4], 0.6).support, [1])


class TestKellyFair:
    @pytest.mark.parametrize("b", [(0.5, 0.5), (0.75, 0.25), (1.0, 0.0)])
    def test_proportional(self, b):
        a = kelly_fair(pm(*b))
        np.testing.assert_array_equal(a.alphas, b)
        assert a.alpha0 == 0.0


class TestBelievedRate:
    def test_fair_coin(self):
        b = pm(0.5, 0.5)
        assert believed_rate(b, quotes([2, 2]), kelly_fair(b)) == 0.0

    def test_biased(self):
        b = pm(0.75, 0.25)
        expected = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
        assert believed_rate(b, quotes([2, 2]), kelly_fair(b)) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.130812, abs=5e-7)

    def test_all_cash(self):
        b = pm(0.3, 0.7)
        r = believed_rate(b, quotes([2, 2], 1.2), Allocation(b.grid, [0, 0], 1.0))
        assert r == pytest.approx(math.log(1.2), abs=1e-15)

    def test_zero_payoff_signal(self):
        b = pm(0.5, 0.5)
        assert believed_rate(b, quotes([2, 2]), Allocation(b.grid, [1, 0], 0.0)) is Unbounded.NEG

    def test_report_consistency(self):
        b = pm(0.6, 0.3, 0.1)
        q = quotes([2.5, 3.0, 9.0], 1.05)
        a = kelly_general(b, q)
        rep = growth_report(b, q, a)
        total = sum(bi * li for bi, li in zip(b.masses, rep.per_bin_log_return) if bi > 0)
        assert rep.believed_rate == pytest.approx(total, abs=1e-12)
        assert rep.realized_rate is None


class TestRealizedRate:
    def test_example(self):
        r = realized_rate(pm(0.6, 0.4), pm(0.75, 0.25), pm(0.5, 0.5))
        assert r == pytest.approx(0.6 * math.log(1.5) + 0.4 * math.log(0.5), abs=1e-15)
        assert r == pytest.approx(-0.033980, abs=5e-7)

    def test_p_equals_b(self):
        b, m = pm(0.2, 0.5, 0.3), pm(0.3, 0.3, 0.4)
        assert realized_rate(b, b, m) == pytest.approx(relative_entropy(b, m), abs=1e-15)
        assert realized_rate(m, b, m) == pytest.approx(-relative_entropy(m, b), abs=1e-15)

    def test_signals(self):
        assert realized_rate(pm(0.5, 0.5), pm(1.0, 0.0), pm(0.5, 0.5)) is Unbounded.NEG
        assert realized_rate(pm(0.5, 0.5), pm(0.5, 0.5), pm(1.0, 0.0)) is Unbounded.POS

    @given(st.integers(2, 50), st.integers(0, 2**32 - 1))
    def test_decomposition(self, n, seed):
        rng = np.random.default_rng(seed)
        g = Grid(np.arange(n + 1.0))
        p, b, m = (ProbMass(g, rng.dirichlet(np.ones(n))) for _ in range(3))
        lhs = realized_rate(p, b, m)
        assert lhs == pytest.approx(relative_entropy(p, m) - relative_entropy(p, b), abs=1e-12)


class TestAllocationPayoff:
    def test_growth_optimal_payoff_is_ratio(self):
        b = pm(0.75, 0.25)
        f = allocation_payoff(kelly_fair(b), quotes([2, 2]))
        np.testing.assert_allclose(f.values, [1.5, 0.5], rtol=0, atol=0)

    def test_cash_floor(self):
        f = allocation_payoff(Allocation(G2, [0, 0], 1.0), MarketQuotes(G2, [2, 2], 1.2))
        np.testing.assert_array_equal(f.values, [1.2, 1.2])

    def test_single_digital(self):
        f = allocation_payoff(Allocation(G2, [1, 0], 0.0), MarketQuotes(G2, [2, 2]))
        np.testing.assert_array_equal(f.values, [2.0, 0.0])

    @given(st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_fair_market_view_is_risk_free(self, n, seed):
        rng = np.random.default_rng(seed)
        g = Grid(np.arange(n + 1.0))
        m = rng.dirichlet(np.ones(n))
        b = ProbMass(g, m)
        f = allocation_payoff(kelly_fair(b), MarketQuotes(g, 1.0 / b.masses))
        np.testing.assert_allclose(f.values, 1.0, rtol=1e-15)


class TestKellyGeneral:
    def test_all_cash_when_no_edge_beats_risk_free(self):
        a = kelly_general(pm(0.5, 0.5), quotes([2, 2], 1.5))
        assert a.alpha0 == 1.0
        np.testing.assert_array_equal(a.alphas, [0.0, 0.0])
        _, a0, _ = simplex_search([0.5, 0.5], [2, 2], 1.5)
        assert a0 == pytest.approx(1.0, abs=1e-4)

    def test_fair_odds_reproduces_proportional_betting(self):
        b = pm(0.75, 0.25)
        a = kelly_general(b, quotes([2, 2], 1.0))
        np.testing.assert_allclose(a.alphas, [0.75, 0.25], atol=1e-15)
        assert a.alpha0 == 0.0
        assert kkt_residual(b, quotes([2, 2], 1.0), a) <= 1e-8

    def test_partial_investment_against_brute_force(self):
        b, q = pm(0.9, 0.1), quotes([2, 2], 1.2)
        a = kelly_general(b, q)
        # Closed form on support {0}: alpha0 = 0.1 / (1 - 1.2/2), alpha_0 = 0.9 - alpha0 * 1.2 / 2.
        np.testing.assert_allclose(a.alphas, [0.75, 0.0], atol=1e-15)
        assert a.alpha0 == pytest.approx(0.25, abs=1e-15)
        alphas, a0, _ = simplex_search(b.masses, q.returns, q.risk_free)
        np.testing.assert_allclose(a.alphas, alphas, atol=1e-4)
        assert a.alpha0 == pytest.approx(a0, abs=1e-4)

    def test_metadata(self):
        b, q = pm(0.9, 0.1), quotes([2, 2], 1.2)
        a = kelly_general(b, q)
        assert a.metadata["support"] == [0]
        np.testing.assert_allclose(a.metadata["m_star"], [0.6, 0.4], rtol=1e-15)
        assert a.metadata["method"] == "active_set"

    def test_zero_belief_bins_unfunded(self):
        b, q = pm(0.6, 0.0, 0.4), quotes([1.5, 100.0, 4.0], 1.0)
        a = kelly_general(b, q)
        assert a.alphas[1] == 0.0

    def test_tie_breaking_is_deterministic(self):
        b, q = pm(0.4, 0.4, 0.2), quotes([2.5, 2.5, 2.0], 1.05)
        first = kelly_general(b, q)
        for _ in range(5):
            again = kelly_general(b, q)
            np.testing.assert_array_equal(again.alphas, first.alphas)
            assert again.alpha0 == first.alpha0

    @given(st.integers(1, 64), st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.3]))
    @settings(max_examples=200)
    def test_kkt(self, n, seed, zero_frac):
        b, q = random_instance(np.random.default_rng(seed), n, zero_frac)
        a = kelly_general(b, q)
        assert kkt_residual(b, q, a) <= 1e-8
        if q.risk_free * np.sum(1.0 / q.returns) > 1.0:
            assert (a.alpha0 == 1.0) == (np.max(b.masses * q.returns) <= q.risk_free)

    @given(st.integers(1, 64), st.integers(0, 2**32 - 1), st.floats(0.5, 1.0))
    def test_matches_kelly_fair_on_fair_odds(self, n, seed, r0):
        rng = np.random.default_rng(seed)
        g = Grid(np.arange(n + 1.0))
        b = ProbMass(g, rng.dirichlet(np.ones(n)))
        m = ProbMass(g, rng.dirichlet(np.ones(n)))
        q = MarketQuotes(g, 1.0 / m.masses, r0)
        a = kelly_general(b, q)
        np.testing.assert_allclose(a.alphas, kelly_fair(b).alphas, atol=1e-8)
        assert a.alpha0 <= 1e-8

    @given(st.integers(1, 12), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_fixed_point_agrees(self, n, seed):
        b, q = random_instance(np.random.default_rng(seed), n)
        exact = kelly_general(b, q)
        fp = fixed_point_allocation(b, q)
        assert believed_rate(b, q, fp) == pytest.approx(believed_rate(b, q, exact), abs=1e-9)

    @given(st.integers(1, 30), st.integers(0, 2**32 - 1))
    def test_patched_market_view_recovers_belief(self, n, seed):
        b, q = random_instance(np.random.default_rng(seed), n)
        a = kelly_general(b, q)
        if a.alpha0 == 0.0:
            return
        m_star = ProbMass(b.grid, a.metadata["m_star"])
        f = allocation_payoff(a, q)
        # b = f m* / R0, with m* a probability distribution.
        np.testing.assert_allclose(f.values * m_star.masses / q.risk_free, b.masses, atol=1e-12)
        implied, scale = belief_from_payoff(f, m_star)
        assert scale == pytest.approx(q.risk_free, rel=1e-12)
        np.testing.assert_allclose(implied.masses, b.masses, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_brute_force_objective(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(3):
            b, q = random_instance(rng, n)
            a = kelly_general(b, q)
            _, _, best = simplex_search(b.masses, q.returns, q.risk_free)
            assert believed_rate(b, q, a) == pytest.approx(best, abs=1e-6)
            assert believed_rate(b, q, a) >= best - 1e-12
