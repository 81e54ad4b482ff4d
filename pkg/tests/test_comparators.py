import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bipcompare.bip import bip_frontier, bip_market_line
from bipcompare.comparators import (
    Counterexample,
    discordance_report,
    make_counterexample,
    panel,
    point_sharpe,
    sharpe_ratio,
    value_at_risk,
)
from bipcompare.errors import InsufficientData, InvalidInput, SigmaZero
from bipcompare.frontier import decompose, frontier_weights, market_line_point, tangency
from bipcompare.sampling import (
    GaussianRegime,
    GeneratorConfig,
    LognormalMarketRegime,
    PairedSample,
    draw_asset_returns,
    draw_market_line_pair,
    project_portfolios,
)

from conftest import normal_cdf


class TestPanel:
    def test_constant_returns(self):
        r = np.full(10, 0.03)
        with pytest.raises(SigmaZero):
            sharpe_ratio(r, 0.01)
        p = panel(r, 0.01, gamma=0.0)
        assert p.sharpe is None
        assert p.ceq == pytest.approx(0.03, abs=1e-15)
        assert p.volatility == 0.0

    def test_var_example(self):
        # plotting positions i/(n+1) = .2,.4,.6,.8; alpha=.25 sits a quarter of the
        # way from -0.10 to 0.00, i.e. the lower quantile is -0.075
        assert value_at_risk([-0.10, 0.00, 0.10, 0.20], 0.25) == pytest.approx(0.075, abs=1e-15)
        assert panel(np.array([-0.10, 0.00, 0.10, 0.20]), 0.0, alpha=0.25).var_alpha == pytest.approx(0.075)

    def test_risk_neutral_ceq(self):
        r = np.random.default_rng(1).normal(0.05, 0.2, size=500)
        assert panel(r, 0.0, gamma=0.0).ceq == pytest.approx(r.mean(), abs=1e-15)

    def test_sample_moments(self):
        r = np.array([0.01, 0.03, -0.02, 0.05, 0.00])
        p = panel(r, 0.01, gamma=2.0, alpha=0.2)
        mean, var = r.mean(), r.var(ddof=1)
        assert p.expected_return == pytest.approx(mean)
        assert p.volatility == pytest.approx(math.sqrt(var))
        assert p.sharpe == pytest.approx((mean - 0.01) / math.sqrt(var))
        assert p.ceq == pytest.approx(mean - var)

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            panel(np.array([0.1]), 0.0)
        with pytest.raises(InvalidInput):
            panel(np.array([0.1, 0.2]), 0.0, alpha=1.0)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), g1=st.floats(0, 10), g2=st.floats(0, 10))
    def test_ceq_decreasing_in_gamma(self, seed, g1, g2):
        r = np.random.default_rng(seed).normal(0.05, 0.2, size=30)
        lo, hi = sorted((g1, g2))
        assert panel(r, 0.0, gamma=hi).ceq <= panel(r, 0.0, gamma=lo).ceq
        assert panel(r, 0.0, gamma=hi).ceq <= panel(r, 0.0, gamma=hi).expected_return

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), a1=st.floats(0.001, 0.999), a2=st.floats(0.001, 0.999))
    def test_var_nonincreasing_in_level(self, seed, a1, a2):
        r = np.random.default_rng(seed).normal(0.0, 0.1, size=40)
        lo, hi = sorted((a1, a2))
        assert value_at_risk(r, hi) <= value_at_risk(r, lo)


class TestCounterexample:
    def test_reference_point(self):
        ce = make_counterexample(0.05, 0.01)
        assert ce.m == pytest.approx(math.log(1.05) - 0.01, abs=1e-15)
        assert ce.m == pytest.approx(0.038790164169432, abs=1e-12)
        assert ce.v == pytest.approx(0.2, abs=1e-15)
        assert ce.p_low_alpha_wins == pytest.approx(normal_cdf(0.05), abs=1e-12)
        # oracle: 1.05 e^0.01 - 1 - 0.05
        assert ce.excess_expected == pytest.approx(1.05 * math.exp(0.01) - 1.05, abs=1e-14)
        assert ce.excess_expected == pytest.approx(0.0105526754, abs=1e-10)
        assert ce.holds()

    def test_agrees_with_market_line_formula(self):
        ce = make_counterexample(0.05, 0.01)
        assert bip_market_line(ce.m, ce.v, ce.r0, 0.0, 1.0).p == pytest.approx(ce.p_low_alpha_wins, abs=1e-14)

    @pytest.mark.parametrize("r0", [0.0, 0.02, 0.05, 0.10])
    @pytest.mark.parametrize("delta", [1e-4, 1e-2, 0.1])
    def test_grid(self, r0, delta):
        ce = make_counterexample(r0, delta)
        lr = math.log1p(r0)
        assert ce.m < lr < ce.m + ce.v**2 / 2
        assert ce.p_low_alpha_wins > 0.5
        assert ce.excess_expected > 0
        assert lr - ce.m == pytest.approx(delta, rel=1e-9)

    def test_tiny_delta_still_strict(self):
        ce = make_counterexample(0.05, 1e-8)
        assert ce.holds()
        chain = ce.inequality_chain()
        assert chain["m < ln(1+r0)"] and chain["ln(1+r0) < m + v^2/2"]

    def test_negative_rate_allowed(self):
        assert make_counterexample(-0.5, 0.01).holds()

    @pytest.mark.parametrize("r0, delta", [(0.05, 0.0), (0.05, -0.1), (-1.0, 0.01)])
    def test_invalid(self, r0, delta):
        with pytest.raises(InvalidInput):
            make_counterexample(r0, delta)

    def test_monte_carlo_confirms(self):
        ce = make_counterexample(0.05, 0.01)
        rho = draw_asset_returns(GeneratorConfig(5, 400_000, LognormalMarketRegime(ce.m, ce.v, ce.r0)))[:, 0]
        p = ce.p_low_alpha_wins
        assert abs(np.mean(rho < ce.r0) - p) < 3 * math.sqrt(p * (1 - p) / rho.size)
        assert abs(rho.mean() - ce.r0 - ce.excess_expected) < 3 * rho.std() / math.sqrt(rho.size)


class TestDiscordance:
    def test_counterexample_flagged(self):
        ce = make_counterexample(0.05, 0.01)
        cfg = GeneratorConfig(42, 100_000, LognormalMarketRegime(ce.m, ce.v, ce.r0))
        rep = discordance_report(draw_market_line_pair(cfg, 0.0, 1.0), ce.r0)
        assert rep.preferences["expected_return"] == "b"
        assert rep.preferences["bip"] == "a"
        assert rep.preferences["sharpe"] == "undefined"
        assert ("expected_return", "bip") in rep.flags
        assert rep.discordant
        analytic = bip_market_line(ce.m, ce.v, ce.r0, 0.0, 1.0)
        rep2 = discordance_report(draw_market_line_pair(cfg, 0.0, 1.0), ce.r0, analytic=analytic)
        assert rep2.preferences["bip"] == "a"

    def test_market_line_sharpe_ties(self):
        ce = make_counterexample(0.05, 0.01)
        cfg = GeneratorConfig(1, 50_000, LognormalMarketRegime(ce.m, ce.v, ce.r0))
        rep = discordance_report(draw_market_line_pair(cfg, 0.2, 0.9), ce.r0)
        assert rep.preferences["sharpe"] == "tie"
        assert ("sharpe", "bip") not in rep.flags

    def test_frontier_pair_agrees(self, two_asset):
        d = decompose(two_asset)
        assert bip_frontier(d, two_asset, 0.3, 0.1).p > 0.5
        x = draw_asset_returns(GeneratorConfig(2, 100_000, GaussianRegime(two_asset)))
        s = project_portfolios(x, frontier_weights(d, 0.3).weights, frontier_weights(d, 0.1).weights)
        rep = discordance_report(s, two_asset.risk_free_rate)
        assert rep.preferences["expected_return"] == rep.preferences["bip"] == "a"
        assert ("expected_return", "bip") not in rep.flags

    def test_identical_portfolios(self):
        a = np.random.default_rng(3).normal(size=200)
        rep = discordance_report(PairedSample(np.column_stack([a, a])), 0.0)
        assert set(rep.preferences.values()) == {"tie"}
        assert rep.flags == []
        assert rep.bip_estimate is None

    def test_to_dict(self):
        a = np.random.default_rng(3).normal(size=(200, 2))
        d = discordance_report(PairedSample(a), 0.0).to_dict()
        assert set(d) == {"panel_a", "panel_b", "preferences", "bip_estimate", "analytic", "flags", "discordant"}


class TestSharpeDegeneracy:
    @settings(max_examples=100, deadline=None)
    @given(a1=st.floats(1e-3, 5), a2=st.floats(1e-3, 5))
    def test_constant_along_line(self, a1, a2):
        from bipcompare.market_model import validate_universe

        from conftest import TWO_ASSET

        t = tangency(validate_universe(TWO_ASSET))
        s1 = point_sharpe(market_line_point(t, 0.05, a1), 0.05)
        s2 = point_sharpe(market_line_point(t, 0.05, a2), 0.05)
        assert s1 == pytest.approx(s2, abs=1e-12)

    def test_risk_free_point(self, two_asset):
        with pytest.raises(SigmaZero):
            point_sharpe(market_line_point(tangency(two_asset), 0.05, 0.0), 0.05)
