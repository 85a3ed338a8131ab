"""Pricing and hedging European options under liquidity shocks.

The market alternates between a liquid regime, where the asset follows a
geometric Brownian motion, and a shock regime, where trading halts and the
price freezes.  Because shocked periods contribute no diffusion, a European
claim effectively matures after the *realized liquid time* rather than the
calendar horizon, and the incomplete-market price depends on how shock risk
is charged.

The package provides

* closed forms: Black-Scholes prices/greeks, the exponential-utility
  discount factors of the regime chain, expected-liquid-time ("adjusted")
  and price-implied time-to-maturity (:mod:`liqshock.bs`,
  :mod:`liqshock.model`);
* linear prices under the minimal martingale and minimal entropy martingale
  measures, plus a single-shock quadrature oracle (:mod:`liqshock.emm`);
* exponential-utility indifference prices for buyers and writers via an
  implicit finite-difference march, their small-risk-aversion expansion,
  a single-shock variant, and a hedge decomposition (:mod:`liqshock.pde`);
* a Monte Carlo oracle on the realized-liquid-time representation
  (:mod:`liqshock.mc`);
* a CSV-reporting command line, ``liqshock`` (:mod:`liqshock.cli`).
"""

from .bs import (BSQuote, ImpliedTTM, adjusted_ttm, bs_greeks, bs_price,
                 implied_ttm)
from .emm import (LinearPriceResult, linear_price, memm_vs_mmm_spread,
                  single_shock_memm_price)
from .errors import NumericalError
from .mc import (MCEstimate, mc_linear_price, sample_realized_ttm,
                 single_shock_sampler)
from .model import (MEASURES, PAYOFF_KINDS, IntensityCurve, MertonFactors,
                    ModelParams, Payoff, SingleShockFactors, intensity_curve,
                    merton_factors, payoff_eval, single_shock_factors,
                    survival_factor)
from .pde import (AsymptoticBundle, GridSpec, HedgeReport, PriceSurface,
                  asymptotic_expansion, gamma_sweep, hedge_report,
                  single_shock_zero_order, solve_buyer,
                  solve_single_shock_buyer, solve_writer)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "NumericalError",
    # model primitives
    "ModelParams",
    "Payoff",
    "MertonFactors",
    "SingleShockFactors",
    "IntensityCurve",
    "merton_factors",
    "single_shock_factors",
    "intensity_curve",
    "survival_factor",
    "payoff_eval",
    "PAYOFF_KINDS",
    "MEASURES",
    # closed forms
    "BSQuote",
    "ImpliedTTM",
    "bs_price",
    "bs_greeks",
    "adjusted_ttm",
    "implied_ttm",
    # linear pricing
    "LinearPriceResult",
    "linear_price",
    "single_shock_memm_price",
    "memm_vs_mmm_spread",
    # indifference PDE
    "GridSpec",
    "PriceSurface",
    "AsymptoticBundle",
    "HedgeReport",
    "solve_buyer",
    "solve_writer",
    "solve_single_shock_buyer",
    "single_shock_zero_order",
    "asymptotic_expansion",
    "hedge_report",
    "gamma_sweep",
    # Monte Carlo oracle
    "MCEstimate",
    "sample_realized_ttm",
    "single_shock_sampler",
    "mc_linear_price",
]
