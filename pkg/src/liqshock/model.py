"""Market model primitives.

Two-regime market: regime 0 is liquid (the asset follows a geometric
Brownian motion with drift mu0 and volatility sigma0), regime 1 is a
liquidity shock (trading halts and the price is frozen).  The regime is a
continuous-time Markov chain with switch intensities nu01 (into the shock)
and nu10 (out of it).  Interest rates are zero.

The exponential-utility valuation of regime risk is carried by a pair of
discount factors (F0, F1) solving the terminal-value system

    F'(t) = (D - A) F(t),   F(T) = (1, 1),

with D = diag(d0, 0), d0 = mu0^2 / (2 sigma0^2), and A the chain generator.
F2(t) = exp(-d0 (T - t)) is the no-switching factor.  The minimal entropy
martingale measure (MEMM) tilts the intensities by the ratio of these
factors; the minimal martingale measure (MMM) keeps them unchanged.

A single-shock variant makes the first recovery absorbing: states
(0: liquid pre-shock, 1: in shock, 2: liquid post-shock, absorbing), with
discount factors (F0c, F1c, F2c) solving the analogous 3-state system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
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
]

PAYOFF_KINDS = ("vanilla_call", "vanilla_put", "digital_call", "digital_put")
MEASURES = ("physical", "MMM", "MEMM", "MEMM_single_shock")

# Uniform samples used to bound an intensity curve from above, and the
# safety factor applied to the sampled maximum (curves are smooth and slowly
# varying, so a 0.1% headroom over 2001 samples is a true upper bound).
_BOUND_SAMPLES = 2001
_BOUND_SAFETY = 1.001


@dataclass(frozen=True)
class ModelParams:
    """Market parameters.

    mu0, sigma0 : drift and volatility of the asset in the liquid regime
    nu01, nu10  : shock arrival and recovery intensities (nu01 >= 0, nu10 > 0)
    gamma       : absolute risk aversion of the exponential utility (> 0)
    T           : horizon in years (> 0)
    """

    mu0: float
    sigma0: float
    nu01: float
    nu10: float
    gamma: float
    T: float

    def __post_init__(self) -> None:
        for name in ("mu0", "sigma0", "nu01", "nu10", "gamma", "T"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.sigma0 <= 0.0:
            raise ValueError(f"sigma0 must be > 0, got {self.sigma0}")
        if self.nu01 < 0.0:
            raise ValueError(f"nu01 must be >= 0, got {self.nu01}")
        if self.nu10 <= 0.0:
            raise ValueError(f"nu10 must be > 0, got {self.nu10}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.T <= 0.0:
            raise ValueError(f"T must be > 0, got {self.T}")

    @property
    def d0(self) -> float:
        """Half squared Sharpe ratio of the liquid regime, mu0^2/(2 sigma0^2)."""
        return self.mu0 * self.mu0 / (2.0 * self.sigma0 * self.sigma0)

    def sharpe(self, regime: int) -> float:
        """Instantaneous Sharpe ratio in the given regime (0 in a shock)."""
        if regime == 0:
            return self.mu0 / self.sigma0
        if regime == 1:
            return 0.0
        raise ValueError(f"regime must be 0 or 1, got {regime}")


@dataclass(frozen=True)
class Payoff:
    """European payoff specification.

    ``value`` returns the per-contract payoff h(S); ``quantity`` (n > 0 for a
    buyer position, n < 0 for a writer) is consumed by the indifference
    solvers, which scale risk aversion rather than the payoff.  Digitals pay
    on strict inequality, so h(strike) = 0 for both digital kinds.
    """

    kind: str
    strike: float
    quantity: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in PAYOFF_KINDS:
            raise ValueError(f"kind must be one of {PAYOFF_KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.strike) and self.strike > 0.0):
            raise ValueError(f"strike must be positive and finite, got {self.strike}")
        if not math.isfinite(self.quantity) or self.quantity == 0.0:
            raise ValueError(f"quantity must be finite and nonzero, got {self.quantity}")

    @property
    def is_digital(self) -> bool:
        return self.kind in ("digital_call", "digital_put")

    def value(self, spot: np.ndarray | float) -> np.ndarray | float:
        """Per-contract payoff h(S), vectorized over ``spot``."""
        s = np.asarray(spot, dtype=float)
        k = self.strike
        if self.kind == "vanilla_call":
            out = np.maximum(s - k, 0.0)
        elif self.kind == "vanilla_put":
            out = np.maximum(k - s, 0.0)
        elif self.kind == "digital_call":
            out = np.where(s > k, 1.0, 0.0)
        else:  # digital_put
            out = np.where(s < k, 1.0, 0.0)
        if np.isscalar(spot) or (isinstance(spot, np.ndarray) and spot.ndim == 0):
            return float(out)
        return out


def payoff_eval(payoff: Payoff, spot: np.ndarray | float) -> np.ndarray | float:
    """Vectorized per-contract payoff evaluation (digitals pay on strict
    inequality, so the at-strike value is 0)."""
    return payoff.value(spot)


def _stable_roots(s: float, p: float) -> tuple[float, float]:
    """Roots of x^2 - s x + p = 0 with s, p >= 0 and s^2 >= 4p, computed
    without subtractive cancellation in the small root."""
    disc = s * s - 4.0 * p
    if disc < 0.0:
        # Guard against rounding pushing a true zero slightly negative.
        disc = 0.0
    big = 0.5 * (s + math.sqrt(disc))
    small = p / big if big > 0.0 else 0.0
    return big, small


@dataclass(frozen=True)
class MertonFactors:
    """Closed-form discount factors of the two-regime valuation system.

    F0(t) = a1 e^{-l1 (T-t)} + a2 e^{-l2 (T-t)} with l1 >= l2 the roots of
    l^2 - (d0 + nu01 + nu10) l + d0 nu10 = 0, and F1 carries the
    corresponding mixture for the shocked regime.  For d0 > 0 and nu01 > 0
    the roots straddle d0 (0 < l2 < d0 < l1) and F1 > F0 > F2 on [0, T).
    The nu01 = 0 case degenerates (F0 = F2; possibly a repeated root) and is
    evaluated by a dedicated branch.

    Reported fields: lambda1, lambda2 and the expansion coefficients c1, c2
    of F0(t) = c1 e^{l1 t} + c2 e^{l2 t}.  Evaluation uses the overflow-free
    a_k = c_k e^{l_k T} form throughout.
    """

    d0: float
    nu01: float
    nu10: float
    T: float
    lambda1: float
    lambda2: float
    c1: float
    c2: float

    # a_k = c_k e^{l_k T}; only meaningful on the nu01 > 0 code paths.
    @property
    def _a1(self) -> float:
        return (self.lambda2 - self.d0) / (self.lambda2 - self.lambda1)

    @property
    def _a2(self) -> float:
        return (self.lambda1 - self.d0) / (self.lambda1 - self.lambda2)

    def _tau(self, t: np.ndarray | float) -> np.ndarray:
        tau = self.T - np.asarray(t, dtype=float)
        return tau

    def F0(self, t: np.ndarray | float) -> np.ndarray | float:
        tau = self._tau(t)
        if self.nu01 == 0.0:
            out = np.exp(-self.d0 * tau)
        else:
            out = self._a1 * np.exp(-self.lambda1 * tau) + self._a2 * np.exp(-self.lambda2 * tau)
        return out if np.ndim(out) else float(out)

    def F1(self, t: np.ndarray | float) -> np.ndarray | float:
        tau = self._tau(t)
        if self.nu01 == 0.0:
            out = np.exp(-self.d0 * tau) * (1.0 + self.d0 * _one_minus_exp_over(self.nu10 - self.d0, tau))
        else:
            k = self.d0 + self.nu01
            w1 = self._a1 * (k - self.lambda1) / self.nu01
            w2 = self._a2 * (k - self.lambda2) / self.nu01
            out = w1 * np.exp(-self.lambda1 * tau) + w2 * np.exp(-self.lambda2 * tau)
        return out if np.ndim(out) else float(out)

    def F2(self, t: np.ndarray | float) -> np.ndarray | float:
        out = np.exp(-self.d0 * self._tau(t))
        return out if np.ndim(out) else float(out)

    def dF0(self, t: np.ndarray | float) -> np.ndarray | float:
        """Time derivative of F0 (term-by-term analytic form)."""
        tau = self._tau(t)
        if self.nu01 == 0.0:
            out = self.d0 * np.exp(-self.d0 * tau)
        else:
            out = (self._a1 * self.lambda1 * np.exp(-self.lambda1 * tau)
                   + self._a2 * self.lambda2 * np.exp(-self.lambda2 * tau))
        return out if np.ndim(out) else float(out)

    def dF1(self, t: np.ndarray | float) -> np.ndarray | float:
        """Time derivative of F1 (term-by-term analytic form)."""
        tau = self._tau(t)
        if self.nu01 == 0.0:
            out = self.d0 * self.nu10 * np.exp(-self.d0 * tau) * _one_minus_exp_over(self.nu10 - self.d0, tau)
        else:
            k = self.d0 + self.nu01
            w1 = self._a1 * (k - self.lambda1) / self.nu01
            w2 = self._a2 * (k - self.lambda2) / self.nu01
            out = (w1 * self.lambda1 * np.exp(-self.lambda1 * tau)
                   + w2 * self.lambda2 * np.exp(-self.lambda2 * tau))
        return out if np.ndim(out) else float(out)


def _one_minus_exp_over(delta: float, tau: np.ndarray) -> np.ndarray:
    """(1 - e^{-delta tau}) / delta, continuous through delta = 0 (-> tau)."""
    if delta == 0.0:
        return np.asarray(tau, dtype=float) + 0.0
    return -np.expm1(-delta * np.asarray(tau, dtype=float)) / delta


def merton_factors(params: ModelParams) -> MertonFactors:
    """Build the two-regime discount factors for the given parameters."""
    d0, nu01, nu10, T = params.d0, params.nu01, params.nu10, params.T
    if nu01 == 0.0:
        # Roots collapse to {d0, nu10}; F0 = F2 and F1 has its own closed form.
        l1, l2 = max(d0, nu10), min(d0, nu10)
        c1, c2 = 0.0, math.exp(-d0 * T)
        return MertonFactors(d0=d0, nu01=nu01, nu10=nu10, T=T,
                             lambda1=l1, lambda2=l2, c1=c1, c2=c2)
    s = d0 + nu01 + nu10
    l1, l2 = _stable_roots(s, d0 * nu10)
    a1 = (l2 - d0) / (l2 - l1)
    a2 = (l1 - d0) / (l1 - l2)
    c1 = a1 * math.exp(-l1 * T)
    c2 = a2 * math.exp(-l2 * T)
    return MertonFactors(d0=d0, nu01=nu01, nu10=nu10, T=T,
                         lambda1=l1, lambda2=l2, c1=c1, c2=c2)


@dataclass(frozen=True)
class SingleShockFactors:
    """Discount factors of the single-shock (first recovery absorbing) chain.

    States: 0 liquid pre-shock, 1 in shock, 2 liquid post-shock (absorbing).
    F2c(t) = e^{-d0 (T-t)};
    F1c(t) = [nu10 e^{-d0 tau} - d0 e^{-nu10 tau}] / (nu10 - d0), tau = T-t;
    F0c(t) = F1c(t) + d0/(d0 + nu01 - nu10) (e^{-(d0+nu01) tau} - e^{-nu10 tau}).

    The parameter combinations d0 = nu10 and d0 + nu01 = nu10 make these
    displays resonant and are rejected at construction.
    """

    d0: float
    nu01: float
    nu10: float
    T: float

    def _tau(self, t: np.ndarray | float) -> np.ndarray:
        return self.T - np.asarray(t, dtype=float)

    def F2(self, t: np.ndarray | float) -> np.ndarray | float:
        out = np.exp(-self.d0 * self._tau(t))
        return out if np.ndim(out) else float(out)

    def F1(self, t: np.ndarray | float) -> np.ndarray | float:
        tau = self._tau(t)
        d0, nu10 = self.d0, self.nu10
        out = (nu10 * np.exp(-d0 * tau) - d0 * np.exp(-nu10 * tau)) / (nu10 - d0)
        return out if np.ndim(out) else float(out)

    def F0(self, t: np.ndarray | float) -> np.ndarray | float:
        tau = self._tau(t)
        d0, nu01, nu10 = self.d0, self.nu01, self.nu10
        extra = d0 / (d0 + nu01 - nu10) * (np.exp(-(d0 + nu01) * tau) - np.exp(-nu10 * tau))
        out = np.asarray(self.F1(t)) + extra
        return out if np.ndim(out) else float(out)

    def dF2(self, t: np.ndarray | float) -> np.ndarray | float:
        out = self.d0 * np.exp(-self.d0 * self._tau(t))
        return out if np.ndim(out) else float(out)

    def dF1(self, t: np.ndarray | float) -> np.ndarray | float:
        tau = self._tau(t)
        d0, nu10 = self.d0, self.nu10
        out = d0 * nu10 * (np.exp(-d0 * tau) - np.exp(-nu10 * tau)) / (nu10 - d0)
        return out if np.ndim(out) else float(out)

    def dF0(self, t: np.ndarray | float) -> np.ndarray | float:
        tau = self._tau(t)
        d0, nu01, nu10 = self.d0, self.nu01, self.nu10
        extra = d0 / (d0 + nu01 - nu10) * ((d0 + nu01) * np.exp(-(d0 + nu01) * tau) - nu10 * np.exp(-nu10 * tau))
        out = np.asarray(self.dF1(t)) + extra
        return out if np.ndim(out) else float(out)


def single_shock_factors(params: ModelParams) -> SingleShockFactors:
    """Build the single-shock discount factors, rejecting resonant parameters."""
    d0, nu01, nu10 = params.d0, params.nu01, params.nu10
    scale = max(d0, nu10, 1.0)
    if abs(nu10 - d0) <= 1e-10 * scale:
        raise ValueError(
            f"single-shock factors are resonant at nu10 = d0 (nu10={nu10}, d0={d0}); "
            "perturb the parameters")
    if abs(d0 + nu01 - nu10) <= 1e-10 * max(scale, nu01):
        raise ValueError(
            f"single-shock factors are resonant at d0 + nu01 = nu10 "
            f"(d0={d0}, nu01={nu01}, nu10={nu10}); perturb the parameters")
    return SingleShockFactors(d0=d0, nu01=nu01, nu10=nu10, T=params.T)


class IntensityCurve:
    """Regime-switch intensities t -> (nu01(t), nu10(t)) under a measure.

    physical / MMM keep the market intensities (the MMM does not tilt the
    chain).  MEMM multiplies by the discount-factor ratio of the target
    regime over the current one; MEMM_single_shock does the same with the
    single-shock factors.  ``bound01``/``bound10`` are upper bounds for the
    curves on [0, T], used by the thinning sampler.
    """

    def __init__(self, measure: str, params: ModelParams, fn01, fn10, constant: bool):
        self.measure = measure
        self.params = params
        self._fn01 = fn01
        self._fn10 = fn10
        self.is_constant = constant
        if constant:
            self.bound01 = float(fn01(0.0))
            self.bound10 = float(fn10(0.0))
        else:
            ts = np.linspace(0.0, params.T, _BOUND_SAMPLES)
            self.bound01 = float(np.max(fn01(ts))) * _BOUND_SAFETY
            self.bound10 = float(np.max(fn10(ts))) * _BOUND_SAFETY

    def nu01(self, t: np.ndarray | float) -> np.ndarray | float:
        out = self._fn01(np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)

    def nu10(self, t: np.ndarray | float) -> np.ndarray | float:
        out = self._fn10(np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)

    def intensity(self, state: int, t: np.ndarray | float) -> np.ndarray | float:
        """Exit intensity of the given regime at time t."""
        if state == 0:
            return self.nu01(t)
        if state == 1:
            return self.nu10(t)
        raise ValueError(f"state must be 0 or 1, got {state}")


def intensity_curve(params: ModelParams, measure: str) -> IntensityCurve:
    """Build the intensity curve of one of the supported measures."""
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")
    if measure in ("physical", "MMM"):
        n01, n10 = params.nu01, params.nu10

        def fn01(t, _v=n01):
            return np.full_like(np.asarray(t, dtype=float), _v, dtype=float)

        def fn10(t, _v=n10):
            return np.full_like(np.asarray(t, dtype=float), _v, dtype=float)

        return IntensityCurve(measure, params, fn01, fn10, constant=True)
    if measure == "MEMM":
        fac = merton_factors(params)

        def fn01(t, _f=fac, _v=params.nu01):
            return _v * np.asarray(_f.F1(t)) / np.asarray(_f.F0(t))

        def fn10(t, _f=fac, _v=params.nu10):
            return _v * np.asarray(_f.F0(t)) / np.asarray(_f.F1(t))

        return IntensityCurve(measure, params, fn01, fn10, constant=params.d0 == 0.0)
    # MEMM_single_shock
    fac = single_shock_factors(params)

    def fn01(t, _f=fac, _v=params.nu01):
        return _v * np.asarray(_f.F1(t)) / np.asarray(_f.F0(t))

    def fn10(t, _f=fac, _v=params.nu10):
        return _v * np.asarray(_f.F2(t)) / np.asarray(_f.F1(t))

    return IntensityCurve(measure, params, fn01, fn10, constant=params.d0 == 0.0)


def survival_factor(curve: IntensityCurve, state: int, s: float, t: float) -> float:
    """No-switch probability exp(-int_s^t nu_{state,.}(u) du).

    Composite Simpson quadrature with 200 panels per unit time (at least 2),
    exact for constant curves.  Requires 0 <= s <= t <= T.
    """
    T = curve.params.T
    if not (0.0 <= s <= t <= T + 1e-12):
        raise ValueError(f"need 0 <= s <= t <= T, got s={s}, t={t}, T={T}")
    if t == s:
        return 1.0
    n = 2 * max(1, math.ceil(100.0 * (t - s)))
    u = np.linspace(s, t, n + 1)
    vals = np.asarray(curve.intensity(state, u), dtype=float)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = (t - s) / (3.0 * n) * float(np.dot(w, vals))
    return math.exp(-integral)
