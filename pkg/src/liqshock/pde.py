"""Finite-difference solvers for indifference prices under liquidity shocks.

The buyer's per-contract indifference price pair (p, q) solves, in log-price
z = ln S with L = (sigma0^2/2)(d_zz - d_z),

    p_t + L p + (nu01/g) (F1/F0)(t) (1 - e^{-g (q - p)}) = 0,
    q_t +       (nu10/g) (F0/F1)(t) (1 - e^{-g (p - q)}) = 0,
    p(T,.) = q(T,.) = h,

with g = n * gamma for n contracts (utility scaling folds quantity into risk
aversion, so the march always works per contract with the unit payoff).  The
writer's system is the same under g -> -g.  Constants solve both systems
exactly, and the discrete scheme below preserves that.

Scheme: backward Euler in time on a uniform grid, implicit and linearized in
p (one tridiagonal solve per step, exponential linearized at the known
level), followed by an exact integrating-factor update for q written in the
difference variable v = q - p so that all exponentials act on bounded
differences.  Space steps are tied to time steps by
dz^2 = sigma^2 dt + (sigma^2 dt / 2)^2, and the payoff kink is kept midway
between nodes so that digital terminal data carry no placement bias.
Boundaries impose linearity in S (p_SS = 0) by folding the ghost node into
the end rows, exact for the far fields of every supported payoff.

The same stepper drives the linear (small-gamma limit) prices, the
first-order expansion in gamma, and the single-shock variant, whose source
integral is precomputed on the whole grid by a cumulative Simpson rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.linalg import solve_banded

from . import bs as _bs
from .errors import NumericalError
from .model import (ModelParams, Payoff, merton_factors, single_shock_factors)

__all__ = [
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
]

# Hard cap on any exponent fed to exp(); beyond this the computation aborts
# rather than clamp (a clamped exponential silently changes the equation).
_EXP_CAP = 700.0

_DEFAULT_N_TIME = 2000
_DEFAULT_WIDTH = 6.0


def _check_exponent(x: np.ndarray | float, what: str) -> None:
    m = float(np.max(np.abs(x)))
    if not math.isfinite(m) or m > _EXP_CAP:
        raise NumericalError(
            f"exponent guard tripped: |{what}| reached {m:.6g} > {_EXP_CAP:.0f}; "
            "the requested risk aversion / quantity / payoff scale is outside "
            "the representable range of the scheme")


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid in (t, z = ln S).

    n_time  : number of time steps N (the grid has N + 1 time rows)
    n_space : number of space nodes M
    """

    n_time: int
    n_space: int
    z_min: float
    z_max: float
    delta_t: float
    delta_z: float

    def __post_init__(self) -> None:
        if self.n_time < 1:
            raise ValueError(f"n_time must be >= 1, got {self.n_time}")
        if self.n_space < 3:
            raise ValueError(f"n_space must be >= 3, got {self.n_space}")
        if not (self.delta_t > 0.0 and self.delta_z > 0.0):
            raise ValueError("grid steps must be positive")
        if self.delta_z >= 2.0:
            # The upwind-free discretization of -p_z keeps both off-diagonal
            # signs only for dz < 2; coarser grids are rejected outright.
            raise ValueError(f"delta_z must be < 2, got {self.delta_z}")
        span = self.z_max - self.z_min
        if not math.isclose(span, (self.n_space - 1) * self.delta_z,
                            rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("z_max - z_min inconsistent with n_space * delta_z")

    @staticmethod
    def build(params: ModelParams, strike: float, n_time: int = _DEFAULT_N_TIME,
              width: float = _DEFAULT_WIDTH) -> "GridSpec":
        """Strike-centered grid covering ln K +- width * sigma0 * sqrt(T).

        The strike log-price is placed exactly midway between two nodes, so
        discontinuous terminal data are sampled symmetrically around the
        kink; the midpoint alignment is preserved when n_time is scaled,
        which keeps convergence ladders clean.
        """
        if not (math.isfinite(strike) and strike > 0.0):
            raise ValueError(f"strike must be positive, got {strike}")
        if n_time < 1:
            raise ValueError(f"n_time must be >= 1, got {n_time}")
        if width <= 0.0:
            raise ValueError(f"width must be > 0, got {width}")
        dt = params.T / n_time
        s2dt = params.sigma0 * params.sigma0 * dt
        dz = math.sqrt(s2dt + 0.25 * s2dt * s2dt)
        zk = math.log(strike)
        half = width * params.sigma0 * math.sqrt(params.T)
        m = max(1, math.ceil(half / dz - 0.5))
        z_min = zk - (m + 0.5) * dz
        z_max = zk + (m + 0.5) * dz
        return GridSpec(n_time=n_time, n_space=2 * m + 2, z_min=z_min,
                        z_max=z_max, delta_t=dt, delta_z=dz)

    def times(self) -> np.ndarray:
        return np.arange(self.n_time + 1) * self.delta_t

    def z_nodes(self) -> np.ndarray:
        return self.z_min + np.arange(self.n_space) * self.delta_z

    def spot_nodes(self) -> np.ndarray:
        return np.exp(self.z_nodes())


@dataclass(frozen=True)
class PriceSurface:
    """Per-contract price surface on a GridSpec.

    ``values[i, j]`` is the price at calendar time i * delta_t and log-price
    z_min + j * delta_z.  ``regime`` tags which regime the surface quotes
    (0: tradeable regime, 1: shock regime).
    """

    values: np.ndarray
    grid: GridSpec
    payoff: Payoff
    regime: int
    label: str = ""

    def __post_init__(self) -> None:
        expected = (self.grid.n_time + 1, self.grid.n_space)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")
        if self.regime not in (0, 1):
            raise ValueError(f"regime must be 0 or 1, got {self.regime}")

    def _row_index(self, t: float) -> int:
        x = t / self.grid.delta_t
        i = round(x)
        if i < 0 or i > self.grid.n_time or abs(x - i) > 1e-6:
            raise ValueError(
                f"t={t} is not a grid time (delta_t={self.grid.delta_t})")
        return i

    def row(self, t: float) -> np.ndarray:
        """Price profile over z at grid time t."""
        return self.values[self._row_index(t)]

    def _locate(self, spot) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(spot, dtype=float)
        if np.any(s <= 0.0):
            raise ValueError("spot must be > 0")
        z = np.log(s)
        if np.any(z < self.grid.z_min) or np.any(z > self.grid.z_max):
            raise ValueError(
                f"spot {spot} outside the grid domain "
                f"[{math.exp(self.grid.z_min):.6g}, {math.exp(self.grid.z_max):.6g}]")
        j = np.rint((z - self.grid.z_min) / self.grid.delta_z).astype(int)
        j = np.clip(j, 1, self.grid.n_space - 2)
        return z, j

    def quote(self, spot, t: float = 0.0):
        """Price at (t, spot); quadratic interpolation on the three nearest
        nodes.  Vectorized over spot."""
        row = self.row(t)
        z, j = self._locate(spot)
        zj = self.grid.z_min + j * self.grid.delta_z
        x = z - zj
        dz = self.grid.delta_z
        pm, p0, pp = row[j - 1], row[j], row[j + 1]
        out = p0 + x * (pp - pm) / (2.0 * dz) + 0.5 * x * x * (pp - 2.0 * p0 + pm) / (dz * dz)
        return out if np.ndim(out) else float(out)

    def delta(self, spot, t: float = 0.0):
        """dP/dS at (t, spot) from the same local quadratic, divided by S."""
        row = self.row(t)
        z, j = self._locate(spot)
        zj = self.grid.z_min + j * self.grid.delta_z
        x = z - zj
        dz = self.grid.delta_z
        pm, p0, pp = row[j - 1], row[j], row[j + 1]
        dpdz = (pp - pm) / (2.0 * dz) + x * (pp - 2.0 * p0 + pm) / (dz * dz)
        s = np.asarray(spot, dtype=float)
        out = dpdz / s
        return out if np.ndim(out) else float(out)


class _Stepper:
    """One implicit step of v -> (1 - dt L + dt kappa) v = rhs with
    L = (sigma^2/2)(d_zz - d_z) and linear-in-S end conditions (p_SS = 0)
    folded into the first and last rows.

    Linearity is imposed in the price variable S = e^z, not in z: ghost
    values are p_ghost = (1 + e^{+-dz}) p_end - e^{+-dz} p_next, exact for
    any function affine in S.  That covers the true far fields of every
    supported payoff (vanilla ~ affine in S deep in the money, approaching
    0 or K elsewhere; digitals approach constants); linearity in z would
    instead flatten the vanilla call's e^z growth and leak an O(1) error
    layer in from the upper boundary."""

    def __init__(self, grid: GridSpec, sigma0: float):
        a_coef = 0.5 * sigma0 * sigma0 * grid.delta_t
        dz = grid.delta_z
        self.sub = -a_coef * (1.0 / (dz * dz) + 1.0 / (2.0 * dz))
        self.sup = -a_coef * (1.0 / (dz * dz) - 1.0 / (2.0 * dz))
        self.diag0 = 1.0 + 2.0 * a_coef / (dz * dz)
        m = grid.n_space
        ab = np.zeros((3, m))
        ab[0, 1] = self.sup - self.sub * math.exp(-dz)   # folded first row
        ab[0, 2:] = self.sup
        ab[2, : m - 2] = self.sub
        ab[2, m - 2] = self.sub - self.sup * math.exp(dz)  # folded last row
        self._ab = ab
        self._fold_lo = self.sub * (1.0 + math.exp(-dz))
        self._fold_hi = self.sup * (1.0 + math.exp(dz))

    def solve(self, dt_kappa, rhs: np.ndarray) -> np.ndarray:
        """Solve one implicit step; ``dt_kappa`` is dt * kappa (scalar or
        per-node vector, nonnegative for a well-posed step)."""
        ab = self._ab
        ab[1, :] = self.diag0 + dt_kappa
        ab[1, 0] += self._fold_lo
        ab[1, -1] += self._fold_hi
        return solve_banded((1, 1), ab, rhs, check_finite=False)


def _make_stepper(grid: GridSpec, params: ModelParams) -> _Stepper:
    return _Stepper(grid, params.sigma0)


def _terminal(payoff: Payoff, grid: GridSpec) -> np.ndarray:
    return np.asarray(payoff.value(grid.spot_nodes()), dtype=float)


def _march_nonlinear(params: ModelParams, payoff: Payoff, grid: GridSpec,
                     gamma_eff: float) -> tuple[np.ndarray, np.ndarray]:
    """Backward march of the (p, q) system at signed utility scale gamma_eff."""
    if gamma_eff == 0.0 or not math.isfinite(gamma_eff):
        raise ValueError(f"gamma_eff must be finite and nonzero, got {gamma_eff}")
    fac = merton_factors(params)
    times = grid.times()
    f0 = np.asarray(fac.F0(times), dtype=float)
    f1 = np.asarray(fac.F1(times), dtype=float)
    ratio10 = f1 / f0                     # nuhat01(t) / nu01
    nuhat10 = params.nu10 * f0 / f1       # shock-exit intensity under MEMM
    n = grid.n_time
    dt = grid.delta_t
    g = gamma_eff
    stepper = _make_stepper(grid, params)
    h = _terminal(payoff, grid)
    p_surf = np.empty((n + 1, grid.n_space))
    q_surf = np.empty_like(p_surf)
    p_surf[n] = h
    q_surf[n] = h
    p = h.copy()
    q = h.copy()
    for i in range(n - 1, -1, -1):
        x = g * (q - p)
        _check_exponent(x, "gamma_eff * (q - p)")
        kap01 = params.nu01 * ratio10[i]
        kappa = kap01 * np.exp(-x)
        rhs = p + dt * ((kap01 / g) - kappa / g + kappa * p)
        p = stepper.solve(dt * kappa, rhs)
        w = math.exp(-nuhat10[i] * dt)
        y = g * (q - p)
        _check_exponent(y, "gamma_eff * (q - p)")
        q = p - np.log1p(w * np.expm1(-y)) / g
        p_surf[i] = p
        q_surf[i] = q
    return p_surf, q_surf


def _measure_intensities(params: ModelParams, measure: str,
                         times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(nu01(t_i), nu10(t_i)) vectors under MMM or MEMM."""
    if measure == "MMM":
        n = times.shape[0]
        return (np.full(n, params.nu01), np.full(n, params.nu10))
    if measure == "MEMM":
        fac = merton_factors(params)
        f0 = np.asarray(fac.F0(times), dtype=float)
        f1 = np.asarray(fac.F1(times), dtype=float)
        return params.nu01 * f1 / f0, params.nu10 * f0 / f1
    raise ValueError(f"measure must be 'MMM' or 'MEMM', got {measure!r}")


def _march_linear(params: ModelParams, payoff: Payoff, grid: GridSpec,
                  measure: str, first_order: bool = False):
    """Linear pricing march (small-gamma limit) under MMM or MEMM intensities.

    With ``first_order`` the first-order coefficients (p1, q1) of the
    gamma-expansion are marched alongside.  Their update rules are the exact
    gamma-derivatives (at gamma = 0) of the nonlinear scheme's discrete
    update map, so p0 + gamma*p1 matches the marched nonlinear price to
    O(gamma^2) on the same grid -- the leftover is pure curvature with no
    discretisation cross-term.  Both coefficients stay <= 0 node by node
    (they measure the concave utility drag, which only subtracts value).
    """
    times = grid.times()
    nu01_t, nu10_t = _measure_intensities(params, measure, times)
    n = grid.n_time
    dt = grid.delta_t
    stepper = _make_stepper(grid, params)
    h = _terminal(payoff, grid)
    p0_surf = np.empty((n + 1, grid.n_space))
    q0_surf = np.empty_like(p0_surf)
    p0_surf[n] = h
    q0_surf[n] = h
    p0 = h.copy()
    q0 = h.copy()
    if first_order:
        p1_surf = np.zeros_like(p0_surf)
        q1_surf = np.zeros_like(p0_surf)
        p1 = np.zeros(grid.n_space)
        q1 = np.zeros(grid.n_space)
    for i in range(n - 1, -1, -1):
        k01 = float(nu01_t[i])
        w = math.exp(-float(nu10_t[i]) * dt)
        rhs = p0 + dt * k01 * q0
        p0_new = stepper.solve(dt * k01, rhs)
        vin = q0 - p0_new
        q0_new = p0_new + vin * w
        if first_order:
            # Differentiate the nonlinear updates in gamma at gamma = 0.
            # p-step: source picks up -(1/2) v^2 plus the linearisation
            # cross-term v * (p0_new - p0), both at the known time level.
            v = q0 - p0
            rhs1 = p1 + dt * k01 * (q1 - 0.5 * v**2 + v * (p0_new - p0))
            p1 = stepper.solve(dt * k01, rhs1)
            # q-step: relaxation of q1 toward p1 plus the second-order
            # term of the exact shock update, (1/2) w (w - 1) vin^2 <= 0.
            q1 = p1 + (q1 - p1) * w + 0.5 * w * (w - 1.0) * vin**2
            p1_surf[i] = p1
            q1_surf[i] = q1
        p0, q0 = p0_new, q0_new
        p0_surf[i] = p0
        q0_surf[i] = q0
    if first_order:
        return p0_surf, q0_surf, p1_surf, q1_surf
    return p0_surf, q0_surf


def _single_shock_tables(params: ModelParams, payoff: Payoff, grid: GridSpec,
                         gamma_eff: float | None):
    """Grid tables for the single-shock source integral.

    Returns (fac, h, CS, CS0) where for gamma_eff not None CS[k, j] =
    int_0^{m_k} nu10 e^{(nu10 - d0) m} e^{-gamma_eff (P_BS(m, S_j) - h_j)}
    dm, for gamma_eff None the payoff factor is P_BS itself (linear-limit
    table), and CS0[k] = int_0^{m_k} nu10 e^{(nu10 - d0) m} dm is the
    payoff-free weight integral.  CS0 matters because e^{-nu10 (T-t)}
    (CS0 + 1) is exactly the shock-regime discount factor F1 of this
    single-shock problem; assembling the 1/gamma constant from CS0 rather
    than the closed form makes the quadrature error cancel between the
    1/gamma terms instead of leaving an O(eps/gamma) residue.  m shares
    the time-grid spacing, so row N - i corresponds to time-to-maturity
    T - t_i.
    """
    fac = single_shock_factors(params)
    d0, nu10 = params.d0, params.nu10
    if abs(nu10 - d0) * params.T > _EXP_CAP:
        raise NumericalError(
            f"|nu10 - d0| * T = {abs(nu10 - d0) * params.T:.3g} exceeds the "
            f"exponent cap {_EXP_CAP:.0f}; the source integral is not "
            "representable in double precision")
    m_grid = grid.times()
    spots = grid.spot_nodes()
    pbs = np.asarray(_bs.bs_price(payoff, m_grid[:, None], spots[None, :],
                                  params.sigma0), dtype=float)
    h = pbs[0].copy()
    wgt = nu10 * np.exp((nu10 - d0) * m_grid)
    if gamma_eff is None:
        integrand = wgt[:, None] * pbs
    else:
        tv = pbs - h[None, :]
        _check_exponent(gamma_eff * tv, "gamma_eff * time value")
        integrand = wgt[:, None] * np.exp(-gamma_eff * tv)
    cs = cumulative_simpson(integrand, x=m_grid, axis=0, initial=0.0)
    cs0 = cumulative_simpson(wgt, x=m_grid, initial=0.0)
    return fac, h, cs, cs0


def _march_single_shock(params: ModelParams, payoff: Payoff, grid: GridSpec,
                        gamma_eff: float) -> np.ndarray:
    """Backward march of the single-shock buyer price (scalar PDE).

    The shock-regime value is an explicit functional of Black-Scholes
    prices (one recovery at most), entering the tradeable-regime equation
    through the source table; only p is marched.
    """
    if gamma_eff <= 0.0 or not math.isfinite(gamma_eff):
        raise ValueError(
            f"single-shock solver is buyer-only (gamma_eff > 0), got {gamma_eff}")
    fac, h, cs, cs0 = _single_shock_tables(params, payoff, grid, gamma_eff)
    times = grid.times()
    f0 = np.asarray(fac.F0(times), dtype=float)
    n = grid.n_time
    dt = grid.delta_t
    g = gamma_eff
    stepper = _make_stepper(grid, params)
    p_surf = np.empty((n + 1, grid.n_space))
    p_surf[n] = h
    p = h.copy()
    for i in range(n - 1, -1, -1):
        decay = math.exp(-params.nu10 * (params.T - times[i]))
        x = g * (p - h)
        _check_exponent(x, "gamma_eff * (p - h)")
        # g_source * e^{g p} assembled in shifted form: all exponents are
        # time-value sized.  The 1/g constant uses the same quadrature
        # table (decay * (cs0 + 1) == F1 of this problem), so the two
        # 1/g terms cancel exactly rather than to quadrature error.
        src = decay * np.exp(x) * (cs[n - i] + 1.0)
        kappa = params.nu01 * src / f0[i]
        c_lin = params.nu01 * decay * (cs0[n - i] + 1.0) / (f0[i] * g)
        rhs = p + dt * (c_lin - kappa / g + kappa * p)
        p = stepper.solve(dt * kappa, rhs)
        p_surf[i] = p
    return p_surf


def _march_single_shock_linear(params: ModelParams, payoff: Payoff,
                               grid: GridSpec) -> np.ndarray:
    """Small-gamma limit of the single-shock price (linear PDE route).

    The shock-regime value q0(t, S) is explicit:
    e^{-nu10 (T-t)} [int_0^{T-t} nu10 e^{(nu10-d0) m} P_BS(m, S) dm + h(S)]
    / F1(t); the tradeable-regime price is marched against it.  Every
    coefficient is assembled from the same quadrature tables as the
    nonlinear single-shock march, making this the exact gamma -> 0 limit
    of that scheme: the difference p_check(gamma) - p_check0 is then a
    pure gamma-order quantity with no discretisation floor.
    """
    fac, h, cs1, cs0 = _single_shock_tables(params, payoff, grid, None)
    times = grid.times()
    f0 = np.asarray(fac.F0(times), dtype=float)
    n = grid.n_time
    dt = grid.delta_t
    stepper = _make_stepper(grid, params)
    p_surf = np.empty((n + 1, grid.n_space))
    p_surf[n] = h
    p = h.copy()
    for i in range(n - 1, -1, -1):
        decay = math.exp(-params.nu10 * (params.T - times[i]))
        # diag uses kappa(gamma -> 0) = nu01 decay (cs0 + 1) / F0 and the
        # coupling uses the same decay/F0 scaling, mirroring the
        # nonlinear assembly term by term.
        k_hat = params.nu01 * decay * (cs0[n - i] + 1.0) / f0[i]
        rhs = p + dt * params.nu01 * decay * (cs1[n - i] + h) / f0[i]
        p = stepper.solve(dt * k_hat, rhs)
        p_surf[i] = p
    return p_surf


def _split_quantity(payoff: Payoff, buyer: bool) -> float:
    n = payoff.quantity
    if buyer:
        if n <= 0.0:
            raise ValueError(f"buyer solve requires quantity > 0, got {n}")
        return n
    return abs(n)


def solve_buyer(params: ModelParams, payoff: Payoff,
                grid: GridSpec) -> tuple[PriceSurface, PriceSurface]:
    """Per-contract buyer indifference surfaces (p, q) for payoff.quantity
    contracts; quantity scales risk aversion, so terminal data are exact."""
    n = _split_quantity(payoff, buyer=True)
    p, q = _march_nonlinear(params, payoff, grid, n * params.gamma)
    return (PriceSurface(p, grid, payoff, regime=0, label="buyer_p"),
            PriceSurface(q, grid, payoff, regime=1, label="buyer_q"))


def solve_writer(params: ModelParams, payoff: Payoff,
                 grid: GridSpec) -> tuple[PriceSurface, PriceSurface]:
    """Per-contract writer indifference surfaces; the writer system is the
    buyer system under gamma -> -gamma."""
    n = _split_quantity(payoff, buyer=False)
    p, q = _march_nonlinear(params, payoff, grid, -n * params.gamma)
    return (PriceSurface(p, grid, payoff, regime=0, label="writer_p"),
            PriceSurface(q, grid, payoff, regime=1, label="writer_q"))


def solve_single_shock_buyer(params: ModelParams, payoff: Payoff,
                             grid: GridSpec) -> PriceSurface:
    """Per-contract buyer price when only the first shock is priced
    (recovery is absorbing).  Buyer-only: the writer direction would need
    e^{+gamma h} inside the source integral, which overflows for unbounded
    payoffs."""
    n = _split_quantity(payoff, buyer=True)
    p = _march_single_shock(params, payoff, grid, n * params.gamma)
    return PriceSurface(p, grid, payoff, regime=0, label="single_shock_p")


def single_shock_zero_order(params: ModelParams, payoff: Payoff,
                            grid: GridSpec) -> PriceSurface:
    """Small-gamma limit of the single-shock price (per contract), by the
    PDE route; companion surface for spread attribution."""
    p = _march_single_shock_linear(params, payoff, grid)
    return PriceSurface(p, grid, payoff, regime=0, label="single_shock_p0")


@dataclass(frozen=True)
class AsymptoticBundle:
    """Zeroth- and first-order coefficient surfaces of the small-gamma
    expansion p = p0 + gamma_eff * p1 + O(gamma_eff^2) (per contract, unit
    payoff coefficients; quantity folds into gamma_eff)."""

    p0: PriceSurface
    q0: PriceSurface
    p1: PriceSurface
    q1: PriceSurface
    params: ModelParams
    payoff: Payoff

    @property
    def gamma_eff(self) -> float:
        return self.payoff.quantity * self.params.gamma

    def first_order_quote(self, spot, gamma_eff: float | None = None,
                          t: float = 0.0):
        """p0 + gamma_eff * p1 at (t, spot).  gamma_eff defaults to
        quantity * gamma (negative quantity gives the writer expansion)."""
        g = self.gamma_eff if gamma_eff is None else gamma_eff
        return self.p0.quote(spot, t) + g * self.p1.quote(spot, t)


def asymptotic_expansion(params: ModelParams, payoff: Payoff,
                         grid: GridSpec) -> AsymptoticBundle:
    """March the small-gamma expansion system (MEMM intensities): p0/q0 are
    the linear MEMM prices, p1/q1 carry source -(1/2) nu01(t) (q0 - p0)^2
    and are nonpositive node by node."""
    p0, q0, p1, q1 = _march_linear(params, payoff, grid, "MEMM", first_order=True)
    return AsymptoticBundle(
        PriceSurface(p0, grid, payoff, regime=0, label="p0"),
        PriceSurface(q0, grid, payoff, regime=1, label="q0"),
        PriceSurface(p1, grid, payoff, regime=0, label="p1"),
        PriceSurface(q1, grid, payoff, regime=1, label="q1"),
        params, payoff)


@dataclass(frozen=True)
class HedgeReport:
    """Hedge quantities at one (t, spot) point, per contract.

    ``merton_dollar_position`` is the option-independent investment demand
    mu0 / (sigma0^2 gamma); the stock offset of the option position is
    quantity * spot * indiff_delta.  The decomposition splits indiff_delta
    into a plain Black-Scholes delta at calendar time-to-maturity, the shift
    from moving to the expected-liquid-time clock, the shift from moving to
    the price-implied clock, and the residual; the terms sum to
    indiff_delta exactly.  For digitals (no implied clock) only base delta
    and the total residual are reported.
    """

    indiff_delta: float
    merton_dollar_position: float
    base_delta: float
    adjusted_ttm_spread: float | None
    implied_ttm_spread: float | None
    smile_correction: float
    implied_ttm_value: float | None
    low_confidence: bool


def hedge_report(params: ModelParams, payoff: Payoff, surface: PriceSurface,
                 t: float, spot: float) -> HedgeReport:
    """Delta decomposition of an indifference surface at (t, spot), t < T."""
    if not (0.0 <= t < params.T):
        raise ValueError(f"need 0 <= t < T={params.T}, got t={t}")
    ttm = params.T - t
    indiff_delta = float(surface.delta(spot, t))
    merton = params.mu0 / (params.sigma0 * params.sigma0 * params.gamma)
    base = float(_bs.bs_greeks(payoff, ttm, spot, params.sigma0).delta)
    if payoff.is_digital:
        return HedgeReport(
            indiff_delta=indiff_delta, merton_dollar_position=merton,
            base_delta=base, adjusted_ttm_spread=None, implied_ttm_spread=None,
            smile_correction=indiff_delta - base, implied_ttm_value=None,
            low_confidence=False)
    t_adj = float(_bs.adjusted_ttm(params, ttm, surface.regime))
    delta_adj = float(_bs.bs_greeks(payoff, t_adj, spot, params.sigma0).delta) \
        if t_adj > 0.0 else None
    price = float(surface.quote(spot, t))
    try:
        imp = _bs.implied_ttm(payoff, spot, price, params.sigma0, params.T)
    except ValueError:
        # Deep in the money at high risk aversion the indifference quote can
        # sit below intrinsic value, where no implied clock exists.
        imp = None
    if delta_adj is None or imp is None or imp.low_confidence or imp.ttm <= 0.0:
        # No usable intermediate clocks; collapse to base + residual.
        return HedgeReport(
            indiff_delta=indiff_delta, merton_dollar_position=merton,
            base_delta=base, adjusted_ttm_spread=None, implied_ttm_spread=None,
            smile_correction=indiff_delta - base,
            implied_ttm_value=None if imp is None else imp.ttm,
            low_confidence=True)
    delta_imp = float(_bs.bs_greeks(payoff, imp.ttm, spot, params.sigma0).delta)
    return HedgeReport(
        indiff_delta=indiff_delta, merton_dollar_position=merton,
        base_delta=base,
        adjusted_ttm_spread=delta_adj - base,
        implied_ttm_spread=delta_imp - delta_adj,
        smile_correction=indiff_delta - delta_imp,
        implied_ttm_value=imp.ttm, low_confidence=False)


def gamma_sweep(params: ModelParams, payoff: Payoff, grid: GridSpec,
                gammas, spot: float | None = None) -> list[tuple[float, float]]:
    """Per-contract indifference quotes at t = 0 across risk aversions.

    ``gammas`` must be positive and ascending; the payoff quantity's sign
    picks the side (positive: buyer, negative: writer).  Returns
    [(gamma, quote), ...] at ``spot`` (default: the strike).
    """
    gl = [float(g) for g in gammas]
    if not gl:
        raise ValueError("gammas must be nonempty")
    if any(g <= 0.0 for g in gl) or any(b <= a for a, b in zip(gl, gl[1:])):
        raise ValueError("gammas must be positive and strictly ascending")
    s = payoff.strike if spot is None else float(spot)
    out = []
    for g in gl:
        p, _ = _march_nonlinear(params, payoff, grid, payoff.quantity * g)
        surf = PriceSurface(p, grid, payoff, regime=0, label="sweep")
        out.append((g, float(surf.quote(s, 0.0))))
    return out
