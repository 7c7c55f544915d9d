import math

import numpy as np
import pytest

from payoff_forge import DomainError, Grid, boundary_check
from payoff_forge import figures


class TestBinarySpreads:
    def test_panel_a_is_truncated_market(self):
        c = figures.fig1_curves("A", bins=300)
        x, f = c["x"], c["f"]
        inside = (x >= 0.95) & (x <= 1.0)
        assert np.all(f[~inside] == 0.0)
        # f is constant inside: one over the market mass of the interval.
        assert np.ptp(f[inside]) <= 1e-12 * f[inside].max()
        assert f[inside][0] > 1.0

    def test_panel_b_two_levels(self):
        c = figures.fig1_curves("B", bins=600)
        levels = np.unique(np.round(c["f"][c["f"] > 0], 9))
        assert levels.size == 2

    def test_panel_c_full_view(self):
        c = figures.fig1_curves("C", bins=300)
        assert np.all(c["f"] > 0)
        assert c["f"][-1] > 1.0 > c["f"][0]

    def test_bad_panel(self):
        with pytest.raises(DomainError):
            figures.fig1_curves("D")


class TestResearchInterval:
    def test_risk_free_outside_interval(self):
        c = figures.fig2_curves((0.9, 1.1), bins=400)
        x = c["x"]
        outside = (x < 0.9) | (x > 1.1)
        assert np.all(c["f"][outside] == 1.0)
        np.testing.assert_allclose(c["b"][outside], c["m"][outside], rtol=1e-12)

    def test_budget_neutral(self):
        grid, m = figures.market_lognormal(0.0, 0.2, 400)
        f = figures.research_payoff(m, (0.85, 1.2))
        assert m.masses @ f.values == pytest.approx(1.0, abs=1e-14)
        assert boundary_check(f, (0.85, 1.2)).boundary_ok

    def test_blends_sandwiched(self):
        c = figures.fig2_curves(bins=200, lambdas=(0.0, 0.3, 1.0))
        f = c["f"]
        assert np.all(c["f_blend_0"] == 1.0)
        np.testing.assert_array_equal(c["f_blend_1"], f)
        g = c["f_blend_0.3"]
        assert np.all((g >= np.minimum(f, 1)) & (g <= np.maximum(f, 1)))

    def test_amplitude_guard(self):
        _, m = figures.market_lognormal(0.0, 0.2, 100)
        with pytest.raises(DomainError):
            figures.research_payoff(m, (0.9, 1.1), amplitude=5.0)


class TestVanillaBeliefs:
    @pytest.mark.parametrize("kind", ["call", "digital"])
    def test_right_shift(self, kind):
        c = figures.fig3_curves(kind, bins=800)
        w = np.diff(Grid.around_lognormal(0.0, 0.2, 800, 6.0).edges)
        m, b = c["m"] * w, c["b"] * w
        x = c["x"]
        assert b @ x > m @ x

    def test_digital_zero_below_strike(self):
        c = figures.fig3_curves("digital", bins=800)
        k = math.exp(0.02)
        assert np.all(c["b"][c["x"] < k * 0.999] == 0.0)


class TestVarianceView:
    def test_no_view(self):
        c = figures.variance_view_curves(sigma_m=0.3, sigma_b=0.3)
        assert np.all(c["f"] == 1.0)

    def test_rate_curve_affine(self):
        c = figures.variance_rate_curve(0.2, 0.3, [0.1, 0.2, 0.3, 0.4])
        slopes = np.diff(c["rate"]) / np.diff(c["sigma_p2"])
        np.testing.assert_allclose(slopes, (25 - 100 / 9) / 2, rtol=1e-10)


def test_csv_shape():
    text = figures.curves_to_csv({"x": np.array([1.0, 2.0]), "f": np.array([0.5, 0.25])})
    assert text == "x,f\n1.0,0.5\n2.0,0.25\n"
    with pytest.raises(ValueError):
        figures.curves_to_csv({"x": np.zeros(2), "f": np.zeros(3)})
