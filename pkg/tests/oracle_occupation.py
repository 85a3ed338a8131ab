"""Closed-form occupation-time oracle for constant-intensity prices.

Under constant switching intensities the price of a European claim is
``E[P_BS(occ, S)]`` where ``occ`` is the realized liquid (diffusive) time
over the horizon.  For a two-state chain started in the liquid state the
law of ``occ`` is known in closed form: a Bessel-series density on
``(0, T)`` plus an atom ``e^{-nu01 T}`` at ``occ = T`` (no shock at all).
This gives machine-accurate reference prices by one-dimensional adaptive
quadrature — a route completely independent of both the lattice solver
and the Monte Carlo sampler, used to pin down their shared limit.

Only the liquid-start, constant-intensity case is covered, which is
exactly the MMM price; time-varying tilts (MEMM) have no comparably
simple density.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.special import i0e, i1e

from liqshock import ModelParams, Payoff, bs_price


def occupation_density(tau, nu01: float, nu10: float, horizon: float):
    """Density of realized liquid time on (0, horizon), liquid start.

    Exponentially scaled Bessel functions keep the evaluation stable for
    large ``nu10 * horizon``: I_k(2x) = i_ke(2x) e^{2x}.
    """
    tau = np.asarray(tau, dtype=float)
    frozen = horizon - tau
    x = np.sqrt(nu01 * nu10 * tau * frozen)
    expo = np.exp(-nu01 * tau - nu10 * frozen + 2.0 * x)
    safe = np.where(frozen > 0, frozen, 1.0)
    ratio = np.where(frozen > 0, np.sqrt(nu01 * nu10 * tau / safe), 0.0)
    return expo * (ratio * i1e(2.0 * x) + nu01 * i0e(2.0 * x))


def no_shock_atom(nu01: float, horizon: float) -> float:
    """Probability that no shock occurs, i.e. occupation equals horizon."""
    return float(np.exp(-nu01 * horizon))


def occupation_mean(nu01: float, nu10: float, horizon: float) -> float:
    """E[occupation] by quadrature against the density plus the atom."""
    val, _ = quad(
        lambda t: t * occupation_density(t, nu01, nu10, horizon),
        0.0, horizon, limit=400)
    return val + horizon * no_shock_atom(nu01, horizon)


def constant_intensity_price(params: ModelParams, payoff: Payoff,
                             spot: float) -> float:
    """Exact MMM price: quadrature of P_BS over the occupation law."""
    def integrand(t: float) -> float:
        dens = float(occupation_density(t, params.nu01, params.nu10, params.T))
        return dens * float(bs_price(payoff, t, spot, params.sigma0))

    val, _ = quad(integrand, 0.0, params.T, limit=400)
    tail = no_shock_atom(params.nu01, params.T) * float(
        bs_price(payoff, params.T, spot, params.sigma0))
    return val + tail
