"""Command-line front end: pricing jobs driven by a flat config file.

Subcommands
-----------
price     Price the configured payoff with every method (closed forms,
          linear measure prices, indifference solves, single-shock,
          first-order expansion) across the configured spots.
ttm       Adjusted and implied time-to-maturity sweeps (in calendar time at
          the anchor spot, and in spot at t = 0).  Vanilla payoffs only.
hedge     Spot sweep of the indifference delta next to the plain and
          adjusted-clock Black-Scholes deltas, with the decomposition terms.
converge  Evidence run: time-grid halving ladder plus PDE-vs-Monte-Carlo
          agreement checks, one PASS/FAIL row each.

Config file: flat ``key = value`` lines, ``#`` starts a comment, unknown or
duplicate keys are rejected.  Every key has a default (the worked example:
mu0 0.06, sigma0 0.3, nu01 1, nu10 12, strike 10, maturity 1, gamma 1), so
all commands run with no config at all.  Recognized keys:

    mu0 sigma0 nu01 nu10 gamma      model parameters
    strike maturity payoff          contract (payoff in {vanilla_call,
                                    vanilla_put, digital_call, digital_put})
    spots contracts spot            evaluation spots, signed quantity list
                                    (positive = buyer, negative = writer),
                                    and the anchor spot for time sweeps
    nsteps width                    time steps and half-width (in terminal
                                    standard deviations) of the PDE grid
    paths seed                      Monte Carlo controls
    out                             output path ('-' = stdout)

Flags override config values; ``--out -`` writes CSV to stdout.  All output
is RFC-4180 CSV with 10-significant-digit numbers, so a fixed config and
seed reproduce byte-identical reports.  The single-shock solver is
buyer-side only, so negative quantities produce no SingleShock rows.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure (guard or convergence), 4 convergence-evidence check failed.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bs as _bs
from .emm import linear_price
from .errors import NumericalError
from .mc import mc_linear_price
from .model import PAYOFF_KINDS, ModelParams, Payoff
from .pde import (GridSpec, asymptotic_expansion, hedge_report, solve_buyer,
                  solve_single_shock_buyer, solve_writer)

__all__ = ["RunConfig", "cmd_price", "cmd_ttm", "cmd_hedge", "cmd_converge",
           "main"]

# Numbers travel as 10-significant-digit decimal strings (stable goldens).
_FLOAT_FORMAT = ".10g"

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_NUMERICAL = 3
_EXIT_CHECK_FAILED = 4

# Points used by the default spot sweeps of `ttm` and `hedge` (0.5 K .. 1.5 K)
# and by the calendar sweep of `ttm` (21 rows, t = 0 .. T).
_SWEEP_SPOT_POINTS = 41
_SWEEP_TIME_POINTS = 21
# Quote changes below this are considered converged regardless of ordering
# (the ladder otherwise compares rounding noise when nu01 = 0).
_LADDER_FLOOR = 1e-10


def _fmt(x: float) -> str:
    return format(float(x) + 0.0, _FLOAT_FORMAT)


def _fmt_opt(x: float | None) -> str:
    return "" if x is None else _fmt(x)


def _flag(b: bool) -> str:
    return "1" if b else "0"


@dataclass(frozen=True)
class RunConfig:
    """One resolved run: model, contract, grids, sweeps, output.

    Defaults reproduce the worked example (mu0 0.06, sigma0 0.3, nu01 1,
    nu10 12, strike 10, maturity 1, gamma 1).  ``explicit`` records which
    keys were set by the config file or flags, so commands can tell a
    deliberate ``spots`` list from the default one.
    """

    mu0: float = 0.06
    sigma0: float = 0.3
    nu01: float = 1.0
    nu10: float = 12.0
    gamma: float = 1.0
    strike: float = 10.0
    maturity: float = 1.0
    payoff: str = "vanilla_call"
    spots: tuple[float, ...] = (8.0, 10.0, 12.0)
    contracts: tuple[float, ...] = (10.0, 5.0, 1.0, -1.0, -5.0, -10.0)
    spot: float = 10.0
    nsteps: int = 2000
    width: float = 6.0
    paths: int = 100_000
    seed: int = 0
    out: str = "-"
    explicit: frozenset[str] = field(default_factory=frozenset)

    def params(self) -> ModelParams:
        return ModelParams(mu0=self.mu0, sigma0=self.sigma0, nu01=self.nu01,
                           nu10=self.nu10, gamma=self.gamma, T=self.maturity)

    def make_payoff(self, quantity: float = 1.0) -> Payoff:
        return Payoff(kind=self.payoff, strike=self.strike, quantity=quantity)

    def grid(self, n_time: int | None = None) -> GridSpec:
        return GridSpec.build(self.params(), self.strike,
                              n_time=self.nsteps if n_time is None else n_time,
                              width=self.width)


def _parse_float(key: str, value: str) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ValueError(f"config key {key!r}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ValueError(f"config key {key!r}: value must be finite, got {value!r}")
    return out


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value, 10)
    except ValueError:
        raise ValueError(f"config key {key!r}: expected an integer, got {value!r}") from None


def _parse_float_list(key: str, value: str) -> tuple[float, ...]:
    items = [piece.strip() for piece in value.split(",")]
    if not any(items):
        raise ValueError(f"config key {key!r}: expected a comma-separated list")
    return tuple(_parse_float(key, piece) for piece in items if piece)


def _parse_payoff_kind(key: str, value: str) -> str:
    if value not in PAYOFF_KINDS:
        raise ValueError(
            f"config key {key!r}: must be one of {', '.join(PAYOFF_KINDS)}, got {value!r}")
    return value


def _parse_str(key: str, value: str) -> str:
    return value


_CONFIG_PARSERS = {
    "mu0": _parse_float,
    "sigma0": _parse_float,
    "nu01": _parse_float,
    "nu10": _parse_float,
    "gamma": _parse_float,
    "strike": _parse_float,
    "maturity": _parse_float,
    "payoff": _parse_payoff_kind,
    "spots": _parse_float_list,
    "contracts": _parse_float_list,
    "spot": _parse_float,
    "nsteps": _parse_int,
    "width": _parse_float,
    "paths": _parse_int,
    "seed": _parse_int,
    "out": _parse_str,
}


def parse_config_text(text: str, origin: str = "<config>") -> dict[str, object]:
    """Parse flat key=value config text into typed values.

    Unknown keys, duplicate keys, and malformed lines raise ValueError with
    the offending key/line named.
    """
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ValueError(
                f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"{origin}:{lineno}: unknown config key {key!r}")
        if key in out:
            raise ValueError(f"{origin}:{lineno}: duplicate config key {key!r}")
        out[key] = _CONFIG_PARSERS[key](key, value)
    return out


def load_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    values: dict[str, object] = {}
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ValueError(f"cannot read config file {args.config!r}: {exc}") from None
        values.update(parse_config_text(text, origin=args.config))
    for key in ("out", "gamma", "nsteps", "paths", "seed"):
        flag_value = getattr(args, key)
        if flag_value is not None:
            values[key] = flag_value
    for key in ("spots", "contracts"):
        flag_value = getattr(args, key)
        if flag_value is not None:
            values[key] = _parse_float_list(key, flag_value)
    cfg = RunConfig(**values, explicit=frozenset(values))
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: RunConfig) -> None:
    cfg.params()                      # model parameter validation
    for name in ("spots", "contracts"):
        if not getattr(cfg, name):
            raise ValueError(f"config key {name!r}: list must be nonempty")
    for s in cfg.spots:
        if s <= 0.0:
            raise ValueError(f"config key 'spots': spots must be > 0, got {s}")
    if cfg.spot <= 0.0:
        raise ValueError(f"config key 'spot': must be > 0, got {cfg.spot}")
    for n in cfg.contracts:
        if n == 0.0:
            raise ValueError("config key 'contracts': quantities must be nonzero")
    if cfg.nsteps < 1:
        raise ValueError(f"config key 'nsteps': must be >= 1, got {cfg.nsteps}")
    if cfg.width <= 0.0:
        raise ValueError(f"config key 'width': must be > 0, got {cfg.width}")
    if cfg.paths < 100:
        raise ValueError(f"config key 'paths': must be >= 100, got {cfg.paths}")


def _default_spot_sweep(strike: float) -> tuple[float, ...]:
    lo, hi = 0.5 * strike, 1.5 * strike
    return tuple(np.linspace(lo, hi, _SWEEP_SPOT_POINTS))


def _sweep_spots(cfg: RunConfig) -> tuple[float, ...]:
    return cfg.spots if "spots" in cfg.explicit else _default_spot_sweep(cfg.strike)


Report = tuple[list[str], list[list[str]]]


def cmd_price(cfg: RunConfig) -> Report:
    """Price table: every method at every configured spot.

    Linear methods (BS, AdjBS, MMM, MEMM) leave the n and gamma columns
    empty; the indifference blocks report per-contract prices for each
    signed quantity in ``contracts`` (buyers positive, writers negative).
    The SingleShock block covers the positive quantities only, and Asympt1
    is the first-order expansion p0 + n*gamma*p1 for every quantity.
    """
    params = cfg.params()
    unit = cfg.make_payoff(1.0)
    grid = cfg.grid()
    spots = cfg.spots
    gamma_s = _fmt(params.gamma)
    header = ["method", "spot", "n", "gamma", "price"]
    rows: list[list[str]] = []

    def linear_rows(method: str, prices) -> None:
        for s, v in zip(spots, prices):
            rows.append([method, _fmt(s), "", "", _fmt(v)])

    def contract_rows(method: str, n: float, prices) -> None:
        for s, v in zip(spots, prices):
            rows.append([method, _fmt(s), _fmt(n), gamma_s, _fmt(v)])

    linear_rows("BS", [_bs.bs_price(unit, params.T, s, params.sigma0) for s in spots])
    t_adj = float(_bs.adjusted_ttm(params, params.T, 0))
    linear_rows("AdjBS", [_bs.bs_price(unit, t_adj, s, params.sigma0) for s in spots])
    for measure in ("MMM", "MEMM"):
        result = linear_price(params, unit, measure, grid)
        linear_rows(measure, [result.quote(s) for s in spots])

    buyers = [n for n in cfg.contracts if n > 0.0]
    writers = [n for n in cfg.contracts if n < 0.0]
    for n in buyers:
        surf, _ = solve_buyer(params, cfg.make_payoff(n), grid)
        contract_rows("IndiffBuyer", n, [surf.quote(s) for s in spots])
    for n in writers:
        surf, _ = solve_writer(params, cfg.make_payoff(n), grid)
        contract_rows("IndiffWriter", n, [surf.quote(s) for s in spots])
    for n in buyers:
        surf = solve_single_shock_buyer(params, cfg.make_payoff(n), grid)
        contract_rows("SingleShock", n, [surf.quote(s) for s in spots])
    bundle = asymptotic_expansion(params, unit, grid)
    for n in cfg.contracts:
        g_eff = n * params.gamma
        contract_rows("Asympt1", n,
                      [bundle.first_order_quote(s, gamma_eff=g_eff) for s in spots])
    return header, rows


def cmd_ttm(cfg: RunConfig) -> Report:
    """Adjusted/implied time-to-maturity report (vanilla payoffs only).

    Block one sweeps calendar time at the anchor spot; block two sweeps the
    spot at t = 0 (the implied clock dips lowest near the strike).  The
    implied clock inverts the Black-Scholes price of the linear MEMM quote.
    """
    params = cfg.params()
    pay = cfg.make_payoff(1.0)
    if pay.is_digital:
        raise ValueError(
            "the ttm command needs a vanilla payoff: digital prices are not "
            "monotone in maturity, so no implied time-to-maturity exists")
    grid = cfg.grid()
    lin = linear_price(params, pay, "MEMM", grid)
    header = ["sweep", "x", "horizon", "adjusted_ttm_liquid",
              "adjusted_ttm_shock", "implied_ttm", "low_confidence"]
    rows: list[list[str]] = []

    n_t = grid.n_time
    indices = sorted({round(k * n_t / (_SWEEP_TIME_POINTS - 1))
                      for k in range(_SWEEP_TIME_POINTS)})
    for i in indices:
        t = i * grid.delta_t
        horizon = params.T - t
        adj0 = float(_bs.adjusted_ttm(params, horizon, 0))
        adj1 = float(_bs.adjusted_ttm(params, horizon, 1))
        if horizon <= 0.0:
            implied, low_conf = 0.0, float(pay.value(cfg.spot)) > 0.0
        else:
            price = float(lin.quote(cfg.spot, t=t))
            imp = _bs.implied_ttm(pay, cfg.spot, price, params.sigma0, horizon)
            implied, low_conf = imp.ttm, imp.low_confidence
        rows.append(["t", _fmt(t), _fmt(horizon), _fmt(adj0), _fmt(adj1),
                     _fmt(implied), _flag(low_conf)])

    adj0 = float(_bs.adjusted_ttm(params, params.T, 0))
    adj1 = float(_bs.adjusted_ttm(params, params.T, 1))
    for s in _sweep_spots(cfg):
        price = float(lin.quote(s, t=0.0))
        imp = _bs.implied_ttm(pay, s, price, params.sigma0, params.T)
        rows.append(["S", _fmt(s), _fmt(params.T), _fmt(adj0), _fmt(adj1),
                     _fmt(imp.ttm), _flag(imp.low_confidence)])
    return header, rows


def cmd_hedge(cfg: RunConfig) -> Report:
    """Spot sweep of deltas at t = 0 for the first configured quantity.

    Reports the indifference delta dp/dS next to the plain Black-Scholes
    delta and the adjusted-clock delta, plus the decomposition terms (the
    base delta, the two clock shifts, and the residual sum to the
    indifference delta; digitals carry base + residual only).
    """
    params = cfg.params()
    quantity = cfg.contracts[0]
    pay_n = cfg.make_payoff(quantity)
    grid = cfg.grid()
    if quantity > 0.0:
        surf, _ = solve_buyer(params, pay_n, grid)
    else:
        surf, _ = solve_writer(params, pay_n, grid)
    unit = cfg.make_payoff(1.0)
    t_adj = float(_bs.adjusted_ttm(params, params.T, 0))
    header = ["spot", "n", "delta_indiff", "delta_bs", "delta_bs_adjusted",
              "base_delta", "adjusted_ttm_spread", "implied_ttm_spread",
              "smile_correction", "implied_ttm", "merton_dollar_position",
              "low_confidence"]
    rows: list[list[str]] = []
    n_s = _fmt(quantity)
    for s in _sweep_spots(cfg):
        rep = hedge_report(params, pay_n, surf, 0.0, float(s))
        delta_adj = float(_bs.bs_greeks(unit, t_adj, s, params.sigma0).delta)
        rows.append([
            _fmt(s), n_s, _fmt(rep.indiff_delta), _fmt(rep.base_delta),
            _fmt(delta_adj), _fmt(rep.base_delta),
            _fmt_opt(rep.adjusted_ttm_spread), _fmt_opt(rep.implied_ttm_spread),
            _fmt(rep.smile_correction), _fmt_opt(rep.implied_ttm_value),
            _fmt(rep.merton_dollar_position), _flag(rep.low_confidence)])
    return header, rows


def cmd_converge(cfg: RunConfig) -> tuple[list[str], list[list[str]], bool]:
    """Convergence evidence: grid ladder plus PDE-vs-MC agreement.

    The ladder solves the linear MEMM price on time grids nsteps/4, /2, x1,
    x2 and checks that consecutive quote changes shrink; the MC block
    compares PDE quotes with the path oracle at 3 standard errors.  Returns
    the report plus an overall pass flag (exit code 4 on failure).
    """
    params = cfg.params()
    unit = cfg.make_payoff(1.0)
    header = ["check", "detail", "measured", "bound", "status"]
    rows: list[list[str]] = []
    all_ok = True

    base = max(1, cfg.nsteps // 4)
    ladder = [base, 2 * base, 4 * base, 8 * base]
    quotes = []
    for n_time in ladder:
        result = linear_price(params, unit, "MEMM", cfg.grid(n_time=n_time))
        quotes.append(float(result.quote(cfg.spot)))
    diffs = [abs(b - a) for a, b in zip(quotes, quotes[1:])]
    for (n_a, n_b), d in zip(zip(ladder, ladder[1:]), diffs):
        rows.append(["ladder", f"MEMM quote change N={n_a}->N={n_b}",
                     _fmt(d), "", ""])
    for k in range(1, len(diffs)):
        bound = max(diffs[k - 1], _LADDER_FLOOR)
        ok = diffs[k] <= bound
        all_ok &= ok
        rows.append(["ladder_monotone",
                     f"|change N={ladder[k]}->N={ladder[k + 1]}| shrinks",
                     _fmt(diffs[k]), _fmt(bound), "PASS" if ok else "FAIL"])

    grid = cfg.grid()
    cell = 0
    for measure in ("MMM", "MEMM"):
        result = linear_price(params, unit, measure, grid)
        for s in cfg.spots:
            est = mc_linear_price(params, unit, measure, float(s), cfg.paths,
                                  (cfg.seed + cell) % 2 ** 63)
            cell += 1
            diff = abs(float(result.quote(s)) - est.mean)
            bound = 3.0 * est.std_error
            ok = diff <= bound
            all_ok &= ok
            rows.append(["pde_vs_mc", f"{measure} S={_fmt(s)}", _fmt(diff),
                         _fmt(bound), "PASS" if ok else "FAIL"])
    return header, rows, all_ok


def _write_report(out: str, header: list[str], rows: list[list[str]]) -> None:
    if out == "-":
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liqshock",
        description="Option pricing under liquidity shocks: closed forms, "
                    "indifference PDE solves, and Monte Carlo cross-checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "price": "price the payoff with every method across the spot list",
        "ttm": "adjusted / implied time-to-maturity sweeps (vanilla only)",
        "hedge": "delta curves and hedge decomposition across a spot sweep",
        "converge": "grid-ladder and PDE-vs-MC evidence run (exit 4 on failure)",
    }
    for name, help_text in descriptions.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", metavar="PATH", default=None,
                       help="flat key=value config file ('#' comments)")
        p.add_argument("--out", metavar="PATH", default=None,
                       help="output CSV path ('-' = stdout, the default)")
        p.add_argument("--seed", type=int, default=None, metavar="U64",
                       help="Monte Carlo seed")
        p.add_argument("--spots", default=None, metavar="LIST",
                       help="comma-separated evaluation spots")
        p.add_argument("--contracts", default=None, metavar="LIST",
                       help="comma-separated signed quantities")
        p.add_argument("--gamma", type=float, default=None, metavar="F",
                       help="risk aversion")
        p.add_argument("--nsteps", type=int, default=None, metavar="N",
                       help="time steps of the PDE grid")
        p.add_argument("--paths", type=int, default=None, metavar="N",
                       help="Monte Carlo paths")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "price":
            header, rows = cmd_price(cfg)
            status = _EXIT_OK
        elif args.command == "ttm":
            header, rows = cmd_ttm(cfg)
            status = _EXIT_OK
        elif args.command == "hedge":
            header, rows = cmd_hedge(cfg)
            status = _EXIT_OK
        else:
            header, rows, ok = cmd_converge(cfg)
            status = _EXIT_OK if ok else _EXIT_CHECK_FAILED
        _write_report(cfg.out, header, rows)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL
    if status == _EXIT_CHECK_FAILED:
        print("convergence checks failed (see report)", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
