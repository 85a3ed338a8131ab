"""Finite-difference solvers: grids, surfaces, indifference marches,
single-shock march, small-gamma expansion, sweeps and hedge reports.

Cross-route checks anchor each solver: no-shock degeneracies against
closed-form Black-Scholes, the single-shock march against the independent
tensor quadrature, constants and quantity-folding invariances, and the
buyer <= linear <= writer sandwich as a randomized property.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liqshock import (
    GridSpec,
    ModelParams,
    NumericalError,
    Payoff,
    PriceSurface,
    asymptotic_expansion,
    bs_price,
    gamma_sweep,
    hedge_report,
    linear_price,
    single_shock_memm_price,
    solve_buyer,
    solve_single_shock_buyer,
    solve_writer,
)
from conftest import SPOTS, STRIKE


def make_params(**kw) -> ModelParams:
    base = dict(mu0=0.06, sigma0=0.3, nu01=1.0, nu10=12.0, gamma=1.0, T=1.0)
    base.update(kw)
    return ModelParams(**base)


class TestGridSpec:
    def test_strike_sits_midway_between_nodes(self, params):
        for n_time in (100, 500, 2000):
            grid = GridSpec.build(params, STRIKE, n_time=n_time)
            offset = (math.log(STRIKE) - grid.z_min) / grid.delta_z
            assert offset - math.floor(offset) == pytest.approx(0.5, abs=1e-9)

    def test_step_relation(self, params):
        grid = GridSpec.build(params, STRIKE, n_time=800)
        s2dt = params.sigma0 ** 2 * grid.delta_t
        assert grid.delta_z == pytest.approx(
            math.sqrt(s2dt + 0.25 * s2dt * s2dt), rel=1e-14)
        assert grid.delta_t == pytest.approx(params.T / 800, rel=1e-14)

    def test_domain_covers_requested_width(self, params):
        grid = GridSpec.build(params, STRIKE, width=6.0)
        half = 6.0 * params.sigma0 * math.sqrt(params.T)
        assert grid.z_max - math.log(STRIKE) >= half
        assert math.log(STRIKE) - grid.z_min >= half

    def test_build_validation(self, params):
        with pytest.raises(ValueError):
            GridSpec.build(params, -1.0)
        with pytest.raises(ValueError):
            GridSpec.build(params, STRIKE, n_time=0)
        with pytest.raises(ValueError):
            GridSpec.build(params, STRIKE, width=0.0)

    def test_direct_construction_validation(self):
        with pytest.raises(ValueError, match="delta_z"):
            GridSpec(n_time=10, n_space=3, z_min=0.0, z_max=4.2,
                     delta_t=0.1, delta_z=2.1)
        with pytest.raises(ValueError, match="n_space"):
            GridSpec(n_time=10, n_space=2, z_min=0.0, z_max=0.1,
                     delta_t=0.1, delta_z=0.1)
        with pytest.raises(ValueError, match="inconsistent"):
            GridSpec(n_time=10, n_space=5, z_min=0.0, z_max=1.0,
                     delta_t=0.1, delta_z=0.1)


class TestPriceSurface:
    def test_shape_and_regime_validated(self, params, grid_default):
        bad = np.zeros((3, 3))
        with pytest.raises(ValueError, match="shape"):
            PriceSurface(bad, grid_default, Payoff("vanilla_call", STRIKE), 0)

    def test_row_requires_grid_time(self, indiff_solved):
        p, _ = indiff_solved("vanilla_call", 1.0)
        dt = p.grid.delta_t
        assert np.shares_memory(p.row(5 * dt), p.values[5])
        with pytest.raises(ValueError, match="grid time"):
            p.row(5.4321 * dt)

    def test_quote_outside_domain_rejected(self, indiff_solved):
        p, _ = indiff_solved("vanilla_call", 1.0)
        with pytest.raises(ValueError, match="domain"):
            p.quote(1e5)
        with pytest.raises(ValueError):
            p.quote(-3.0)

    def test_quote_reproduces_nodal_values(self, indiff_solved):
        p, _ = indiff_solved("vanilla_call", 1.0)
        nodes = p.grid.spot_nodes()
        j = p.grid.n_space // 2
        assert p.quote(nodes[j]) == pytest.approx(p.values[0, j], abs=1e-12)

    def test_delta_consistent_with_quote(self, indiff_solved):
        """delta is the derivative of the same local quadratic the quote
        uses; check against a finite difference of quote away from the
        strike (where the stencil is smooth)."""
        p, _ = indiff_solved("vanilla_call", 1.0)
        eps = 1e-6
        for s in (9.0, 11.5):
            fd = (p.quote(s + eps) - p.quote(s - eps)) / (2 * eps)
            assert p.delta(s) == pytest.approx(fd, abs=1e-7)


class TestNoShockDegeneracy:
    """With nu01 = 0 the shock never arrives: every solver must collapse
    to plain Black-Scholes up to discretization error."""

    def setup_method(self):
        self.quiet = make_params(nu01=0.0)
        self.grid = GridSpec.build(self.quiet, STRIKE)

    def test_buyer_is_black_scholes(self):
        payoff = Payoff("vanilla_call", STRIKE, 1.0)
        p, q = solve_buyer(self.quiet, payoff, self.grid)
        ref = float(bs_price(payoff, 1.0, 10.0, 0.3))
        assert p.quote(10.0) == pytest.approx(ref, abs=2e-4)
        # A regime-1 start still sits through one initial freeze, so the
        # shock-regime value prices a shorter effective maturity: q < p.
        assert 0.0 < q.quote(10.0) < p.quote(10.0)

    def test_single_shock_is_black_scholes(self):
        payoff = Payoff("digital_call", STRIKE, 1.0)
        p = solve_single_shock_buyer(self.quiet, payoff, self.grid)
        ref = float(bs_price(payoff, 1.0, 10.0, 0.3))
        assert p.quote(10.0) == pytest.approx(ref, abs=2e-4)


class TestExactInvariances:
    def test_nonlinear_march_preserves_constants(self, params):
        """A payoff worth 1 at every grid node (digital far in the money)
        must stay exactly 1: diffusion annihilates constants and the
        exponential sources cancel at q = p."""
        grid = GridSpec.build(params, STRIKE, n_time=400)
        payoff = Payoff("digital_call", 1.0, 1.0)
        assert np.all(payoff.value(grid.spot_nodes()) == 1.0)
        p, q = solve_buyer(params, payoff, grid)
        assert np.max(np.abs(p.values - 1.0)) < 1e-12
        assert np.max(np.abs(q.values - 1.0)) < 1e-12

    def test_quantity_folds_into_risk_aversion(self, params):
        """n contracts at gamma price identically (per contract) to one
        contract at n * gamma: the solver depends only on the product."""
        grid = GridSpec.build(params, STRIKE, n_time=300)
        five = solve_buyer(params, Payoff("vanilla_call", STRIKE, 5.0), grid)
        scaled = solve_buyer(make_params(gamma=5.0),
                             Payoff("vanilla_call", STRIKE, 1.0), grid)
        assert np.array_equal(five[0].values, scaled[0].values)
        assert np.array_equal(five[1].values, scaled[1].values)
        w_five = solve_writer(params, Payoff("vanilla_call", STRIKE, -5.0), grid)
        w_scaled = solve_writer(make_params(gamma=5.0),
                                Payoff("vanilla_call", STRIKE, -1.0), grid)
        assert np.array_equal(w_five[0].values, w_scaled[0].values)

    def test_terminal_rows_are_exact(self, params, indiff_solved):
        p, q = indiff_solved("digital_call", 10.0)
        h = Payoff("digital_call", STRIKE).value(p.grid.spot_nodes())
        assert np.array_equal(p.values[-1], h)
        assert np.array_equal(q.values[-1], h)


class TestAsymptoticExpansion:
    def test_zero_order_is_linear_memm(self, params, bundles, linear_solved):
        bund = bundles("digital_call")
        lin = linear_solved("MEMM", "digital_call")
        assert np.array_equal(bund.p0.values, lin.surface_p.values)
        assert np.array_equal(bund.q0.values, lin.surface_q.values)

    @pytest.mark.parametrize("kind", ["digital_call", "vanilla_call"])
    def test_first_order_terms_nonpositive(self, bundles, kind):
        """The leading risk correction is a buyer discount: p1 and q1 are
        nonpositive everywhere, and vanish at maturity."""
        bund = bundles(kind)
        assert np.all(bund.p1.values[-1] == 0.0)
        assert np.all(bund.q1.values[-1] == 0.0)
        assert bund.p1.values.max() <= 1e-10
        assert bund.q1.values.max() <= 1e-10

    def test_first_order_beats_zeroth_at_unit_aversion(self, params, bundles,
                                                       indiff_solved):
        bund = bundles("digital_call")
        exact_p, _ = indiff_solved("digital_call", 1.0)
        for spot in SPOTS:
            target = exact_p.quote(spot)
            err0 = abs(bund.p0.quote(spot) - target)
            err1 = abs(bund.first_order_quote(spot) - target)
            assert err1 < err0

    def test_custom_gamma_eff(self, bundles):
        bund = bundles("vanilla_call")
        assert bund.first_order_quote(10.0, gamma_eff=0.0) == bund.p0.quote(10.0)
        assert bund.gamma_eff == 1.0


class TestSingleShock:
    def test_buyer_only(self, params, grid_default):
        with pytest.raises(ValueError, match="quantity > 0"):
            solve_single_shock_buyer(params, Payoff("vanilla_call", STRIKE, -1.0),
                                     grid_default)

    def test_small_gamma_matches_quadrature(self):
        """Dual route at small risk aversion: the nonlinear march must land
        on the independent linear quadrature to first order."""
        small = make_params(gamma=1e-3)
        grid = GridSpec.build(small, STRIKE)
        surf = solve_single_shock_buyer(small, Payoff("digital_call", STRIKE, 1.0),
                                        grid)
        for spot in SPOTS:
            ref = single_shock_memm_price(small, Payoff("digital_call", STRIKE),
                                          0.0, spot)
            assert surf.quote(spot) == pytest.approx(ref, abs=1e-4)

    def test_sandwiched_between_full_buyer_and_linear(self, params, indiff_solved,
                                                      single_shock_solved,
                                                      linear_solved):
        """Pricing only the first shock discards some risk but not all:
        full buyer <= single-shock buyer <= linear price (10 contracts)."""
        full, _ = indiff_solved("digital_call", 10.0)
        single = single_shock_solved("digital_call", 10.0)
        lin = linear_solved("MEMM", "digital_call")
        for spot in SPOTS:
            lo, mid, hi = full.quote(spot), single.quote(spot), lin.quote(spot)
            assert lo <= mid + 1e-9
            assert mid <= hi + 1e-9

    def test_intensity_exponent_cap(self):
        fast = make_params(nu10=800.0)
        grid = GridSpec.build(fast, STRIKE, n_time=300)
        with pytest.raises(NumericalError, match="exponent cap"):
            solve_single_shock_buyer(fast, Payoff("digital_call", STRIKE, 1.0),
                                     grid)

    def test_risk_aversion_exponent_guard(self):
        hot = make_params(gamma=1e4)
        grid = GridSpec.build(hot, STRIKE, n_time=300)
        with pytest.raises(NumericalError, match="exponent guard"):
            solve_single_shock_buyer(hot, Payoff("digital_call", STRIKE, 1.0),
                                     grid)


class TestGammaSweep:
    def test_buyer_monotone_decreasing(self, params):
        grid = GridSpec.build(params, STRIKE, n_time=300)
        rows = gamma_sweep(params, Payoff("vanilla_call", STRIKE, 1.0), grid,
                           [0.25, 0.5, 1.0, 2.0])
        quotes = [q for _, q in rows]
        assert all(b < a for a, b in zip(quotes, quotes[1:]))

    def test_writer_monotone_increasing(self, params):
        grid = GridSpec.build(params, STRIKE, n_time=300)
        rows = gamma_sweep(params, Payoff("vanilla_call", STRIKE, -1.0), grid,
                           [0.25, 0.5, 1.0, 2.0])
        quotes = [q for _, q in rows]
        assert all(b > a for a, b in zip(quotes, quotes[1:]))

    def test_gamma_list_validated(self, params, grid_default):
        payoff = Payoff("vanilla_call", STRIKE, 1.0)
        with pytest.raises(ValueError):
            gamma_sweep(params, payoff, grid_default, [])
        with pytest.raises(ValueError):
            gamma_sweep(params, payoff, grid_default, [1.0, 0.5])
        with pytest.raises(ValueError):
            gamma_sweep(params, payoff, grid_default, [0.0, 1.0])


class TestHedgeReport:
    def test_decomposition_sums_exactly(self, params, indiff_solved):
        payoff = Payoff("vanilla_call", STRIKE, 1.0)
        p, _ = indiff_solved("vanilla_call", 1.0)
        rep = hedge_report(params, payoff, p, 0.0, 10.0)
        assert not rep.low_confidence
        total = (rep.base_delta + rep.adjusted_ttm_spread
                 + rep.implied_ttm_spread + rep.smile_correction)
        assert total == pytest.approx(rep.indiff_delta, abs=1e-14)
        assert rep.merton_dollar_position == pytest.approx(
            params.mu0 / (params.sigma0 ** 2 * params.gamma), rel=1e-14)
        assert 0.0 < rep.implied_ttm_value < params.T

    def test_digital_reports_base_plus_residual(self, params, indiff_solved):
        payoff = Payoff("digital_call", STRIKE, 1.0)
        p, _ = indiff_solved("digital_call", 1.0)
        rep = hedge_report(params, payoff, p, 0.0, 10.0)
        assert rep.adjusted_ttm_spread is None
        assert rep.implied_ttm_spread is None
        assert rep.implied_ttm_value is None
        assert rep.smile_correction == pytest.approx(
            rep.indiff_delta - rep.base_delta, abs=1e-14)

    def test_deep_in_the_money_flags_low_confidence(self, params, indiff_solved):
        """Deep in the money the residual time value (~1e-9 at S=58) falls
        below the liquidity-risk premium a 10-contract buyer demands, so the
        quote dips under intrinsic value and no implied clock exists; the
        report must degrade to base + residual and say so."""
        payoff = Payoff("vanilla_call", STRIKE, 10.0)
        p, _ = indiff_solved("vanilla_call", 10.0)
        assert p.quote(58.0) < 48.0  # below intrinsic: the trigger
        rep = hedge_report(params, payoff, p, 0.0, 58.0)
        assert rep.low_confidence
        assert rep.adjusted_ttm_spread is None
        assert rep.implied_ttm_value is None

    def test_no_shock_clock_spreads_vanish(self):
        quiet = make_params(nu01=0.0)
        grid = GridSpec.build(quiet, STRIKE, n_time=400)
        payoff = Payoff("vanilla_call", STRIKE, 1.0)
        p, _ = solve_buyer(quiet, payoff, grid)
        rep = hedge_report(quiet, payoff, p, 0.0, 10.0)
        assert rep.adjusted_ttm_spread == 0.0
        assert rep.implied_ttm_value == pytest.approx(quiet.T, abs=5e-3)
        assert abs(rep.implied_ttm_spread) < 1e-3
        assert abs(rep.smile_correction) < 1e-3

    def test_time_validated(self, params, indiff_solved):
        payoff = Payoff("vanilla_call", STRIKE, 1.0)
        p, _ = indiff_solved("vanilla_call", 1.0)
        with pytest.raises(ValueError):
            hedge_report(params, payoff, p, params.T, 10.0)


@settings(max_examples=15, deadline=None)
@given(mu0=st.floats(-0.3, 0.3), sigma0=st.floats(0.15, 0.6),
       nu01=st.floats(0.05, 3.0), nu10=st.floats(1.0, 20.0),
       gamma=st.floats(0.1, 3.0), T=st.floats(0.25, 2.0))
def test_buyer_linear_writer_sandwich(mu0, sigma0, nu01, nu10, gamma, T):
    """Random parameters: buyer indifference <= MEMM linear <= writer
    indifference at the strike (risk aversion only widens the spread)."""
    p = ModelParams(mu0=mu0, sigma0=sigma0, nu01=nu01, nu10=nu10,
                    gamma=gamma, T=T)
    grid = GridSpec.build(p, STRIKE, n_time=100)
    buyer, _ = solve_buyer(p, Payoff("vanilla_call", STRIKE, 1.0), grid)
    writer, _ = solve_writer(p, Payoff("vanilla_call", STRIKE, -1.0), grid)
    linear = linear_price(p, Payoff("vanilla_call", STRIKE), "MEMM", grid)
    b, e, w = buyer.quote(STRIKE), linear.quote(STRIKE), writer.quote(STRIKE)
    assert b <= e + 1e-8
    assert e <= w + 1e-8
