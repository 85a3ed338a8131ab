"""Black-Scholes engine (zero rates) and time-to-maturity tools.

All option values here are classical Black-Scholes quantities; the liquidity
model enters only through the time argument.  ``adjusted_ttm`` maps a
calendar horizon to the expected liquid (tradeable) time accumulated over
it, and ``implied_ttm`` inverts the vanilla price in the maturity variable.
Throughout, ``ttm`` arguments are time-to-maturity in years; calendar-time
surfaces are converted by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import NumericalError
from .model import ModelParams, Payoff

__all__ = [
    "BSQuote",
    "ImpliedTTM",
    "bs_price",
    "bs_greeks",
    "adjusted_ttm",
    "implied_ttm",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Bisection stops when the reproduced price is within this of the target.
_IMPLIED_PRICE_TOL = 1e-10
_IMPLIED_MAX_ITER = 200


@dataclass(frozen=True)
class BSQuote:
    """Price and maturity-sensitivities of a Black-Scholes value.

    ``theta_ttm`` and ``charm_ttm`` are derivatives with respect to
    time-to-maturity (not calendar time): theta_ttm = dP/dttm,
    charm_ttm = d(delta)/dttm.
    """

    price: np.ndarray | float
    delta: np.ndarray | float
    theta_ttm: np.ndarray | float
    charm_ttm: np.ndarray | float


@dataclass(frozen=True)
class ImpliedTTM:
    """Result of inverting a vanilla price in the maturity variable."""

    ttm: float
    price_error: float
    low_confidence: bool


def _phi(x: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def _validate_sigma(sigma: float) -> None:
    if not (math.isfinite(sigma) and sigma > 0.0):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")


def bs_price(payoff: Payoff, ttm, spot, sigma: float):
    """Per-contract Black-Scholes price at zero rates.

    Vectorized over ``ttm`` and ``spot`` (numpy broadcasting).  ttm = 0
    returns the payoff itself, with the strict-inequality digital
    convention.
    """
    _validate_sigma(sigma)
    tau = np.asarray(ttm, dtype=float)
    s = np.asarray(spot, dtype=float)
    if np.any(tau < 0.0):
        raise ValueError("ttm must be >= 0")
    if np.any(s <= 0.0):
        raise ValueError("spot must be > 0")
    tau_b, s_b = np.broadcast_arrays(tau, s)
    out = np.empty(tau_b.shape, dtype=float)
    expired = tau_b == 0.0
    if np.any(expired):
        out[expired] = np.asarray(payoff.value(s_b[expired]), dtype=float)
    live = ~expired
    if np.any(live):
        t_l = tau_b[live]
        s_l = s_b[live]
        k = payoff.strike
        vol = sigma * np.sqrt(t_l)
        d1 = (np.log(s_l / k) + 0.5 * sigma * sigma * t_l) / vol
        d2 = d1 - vol
        if payoff.kind == "vanilla_call":
            val = s_l * ndtr(d1) - k * ndtr(d2)
        elif payoff.kind == "vanilla_put":
            val = k * ndtr(-d2) - s_l * ndtr(-d1)
        elif payoff.kind == "digital_call":
            val = ndtr(d2)
        else:  # digital_put
            val = ndtr(-d2)
        out[live] = val
    if out.ndim == 0 or (np.isscalar(ttm) and np.isscalar(spot)):
        return float(out.reshape(-1)[0]) if out.size == 1 else out
    return out


def bs_greeks(payoff: Payoff, ttm, spot, sigma: float) -> BSQuote:
    """Price, delta and maturity-sensitivities at zero rates.

    Rejects ttm = 0, where delta and the maturity derivatives are not
    defined for digital payoffs.
    """
    _validate_sigma(sigma)
    tau = np.asarray(ttm, dtype=float)
    s = np.asarray(spot, dtype=float)
    if np.any(tau <= 0.0):
        raise ValueError("bs_greeks requires ttm > 0")
    if np.any(s <= 0.0):
        raise ValueError("spot must be > 0")
    tau_b, s_b = np.broadcast_arrays(tau, s)
    k = payoff.strike
    vol = sigma * np.sqrt(tau_b)
    d1 = (np.log(s_b / k) + 0.5 * sigma * sigma * tau_b) / vol
    d2 = d1 - vol
    # d(d1)/dttm and d(d2)/dttm
    dd1 = -np.log(s_b / k) / (2.0 * sigma * tau_b ** 1.5) + sigma / (4.0 * np.sqrt(tau_b))
    dd2 = dd1 - sigma / (2.0 * np.sqrt(tau_b))
    if payoff.kind in ("vanilla_call", "vanilla_put"):
        price = (s_b * ndtr(d1) - k * ndtr(d2) if payoff.kind == "vanilla_call"
                 else k * ndtr(-d2) - s_b * ndtr(-d1))
        delta = ndtr(d1) if payoff.kind == "vanilla_call" else ndtr(d1) - 1.0
        theta = s_b * _phi(d1) * sigma / (2.0 * np.sqrt(tau_b))
        charm = _phi(d1) * dd1
    else:
        sign = 1.0 if payoff.kind == "digital_call" else -1.0
        price = ndtr(sign * d2)
        delta = sign * _phi(d2) / (s_b * vol)
        theta = sign * _phi(d2) * dd2
        charm = sign * _phi(d2) / (s_b * vol) * (-d2 * dd2 - 0.5 / tau_b)
    if tau_b.ndim == 0:
        return BSQuote(float(price), float(delta), float(theta), float(charm))
    return BSQuote(price, delta, theta, charm)


def adjusted_ttm(params: ModelParams, horizon, regime: int):
    """Expected liquid time accumulated over ``horizon`` calendar years.

    Closed form from the two-regime occupation time started in ``regime``.
    Vectorized over ``horizon``; 0 <= result <= horizon, with equality at
    horizon only when nu01 = 0 and regime = 0.
    """
    if regime not in (0, 1):
        raise ValueError(f"regime must be 0 or 1, got {regime}")
    h = np.asarray(horizon, dtype=float)
    if np.any(h < 0.0):
        raise ValueError("horizon must be >= 0")
    n01, n10 = params.nu01, params.nu10
    nu = n01 + n10
    decay = np.exp(-nu * h)
    if regime == 0:
        out = (n01 + n10 * nu * h - n01 * decay) / (nu * nu)
    else:
        out = (-n10 + n10 * nu * h + n10 * decay) / (nu * nu)
    out = np.minimum(out, h)  # clip fp overshoot at nu01 = 0
    return out if np.ndim(out) else float(out)


def implied_ttm(payoff: Payoff, spot: float, target_price: float, sigma: float,
                horizon: float) -> ImpliedTTM:
    """Invert the vanilla Black-Scholes price in time-to-maturity.

    The vanilla price at zero rates is strictly increasing in maturity, so
    bisection on [0, 10 * horizon] converges; digitals are rejected (their
    price is not monotone in maturity).  A target at or below intrinsic
    value has no positive-maturity solution: the bracket's lower end is
    returned with ``low_confidence`` set.
    """
    if payoff.is_digital:
        raise ValueError("implied ttm is defined for vanilla payoffs only")
    _validate_sigma(sigma)
    if not (math.isfinite(spot) and spot > 0.0):
        raise ValueError(f"spot must be positive and finite, got {spot}")
    if not math.isfinite(target_price):
        raise ValueError(f"target_price must be finite, got {target_price}")
    if not (math.isfinite(horizon) and horizon > 0.0):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    intrinsic = float(payoff.value(spot))
    if target_price < intrinsic - _IMPLIED_PRICE_TOL:
        raise ValueError(
            f"target price {target_price} is below intrinsic value {intrinsic}")
    lo, hi = 0.0, 10.0 * horizon
    f_lo = intrinsic - target_price
    if abs(f_lo) <= _IMPLIED_PRICE_TOL or target_price <= intrinsic:
        # Zero (or numerically zero) time value.  For an in-the-money payoff
        # the price is flat near ttm = 0, so the pinned answer carries little
        # information; flag it.
        return ImpliedTTM(ttm=0.0, price_error=f_lo, low_confidence=intrinsic > 0.0)
    f_hi = bs_price(payoff, hi, spot, sigma) - target_price
    if f_hi < 0.0:
        raise ValueError(
            f"target price {target_price} exceeds the Black-Scholes price "
            f"{target_price + f_hi:.6g} at the maximum bracket maturity {hi}")
    for _ in range(_IMPLIED_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = bs_price(payoff, mid, spot, sigma) - target_price
        if abs(f_mid) <= _IMPLIED_PRICE_TOL:
            return ImpliedTTM(ttm=mid, price_error=f_mid, low_confidence=False)
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    raise NumericalError(
        f"implied ttm bisection did not reach {_IMPLIED_PRICE_TOL} after "
        f"{_IMPLIED_MAX_ITER} iterations (spot={spot}, target={target_price})")
