"""Exotic pricing: least-squares Monte Carlo American puts and lookback calls.

The American put runs the usual regression-based dynamic program in two
flavors.  The forward flavor pre-generates the full path matrix
(n_steps + 1 time slices alive at once); the backward flavor generates the
paths backward in time, in lockstep with the value recursion, so only two
time slices of process state are ever alive.  A :class:`SliceCounter` makes
that memory contract assertable.

Lookback calls are fixed-strike on the discretely monitored maximum.  A
plain Variance Gamma baseline (gamma clock instead of the Gamma++ clock) is
included for side-by-side comparisons on moment-matched parameters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import ept, gammapp, pricing, process
from ._parallel import map_batches
from .distributions import RngStream, _require
from .paths import validate_grid
from .pricing import MarketModel
from .process import VGPPParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LSMCConfig:
    """Regression Monte Carlo configuration for the American put."""

    n_paths: int = 100_000
    n_steps: int = 64
    basis_degree: int = 3
    direction: str = "forward"

    def __post_init__(self):
        _require(self.n_paths >= 10_000, "LSMC needs at least 10^4 paths")
        _require(self.n_steps >= 4, "LSMC needs at least 4 exercise steps")
        _require(2 <= self.basis_degree <= 5, "basis_degree must lie in [2, 5]")
        _require(self.direction in ("forward", "backward"),
                 "direction must be forward|backward")


class SliceCounter:
    """Counts simultaneously alive per-path state slices; tracks the peak."""

    def __init__(self):
        self.live = 0
        self.peak = 0

    def alloc(self, n: int = 1) -> None:
        self.live += n
        self.peak = max(self.peak, self.live)

    def free(self, n: int = 1) -> None:
        self.live -= n


def _regression_step(cash: np.ndarray, f_now: np.ndarray, intrinsic: np.ndarray,
                     discount: float, degree: int) -> np.ndarray:
    """One Bellman step: discount, regress continuation on ITM paths, exercise."""
    cont_value = discount * cash
    itm = intrinsic > 0
    if np.any(itm):
        poly = np.polynomial.Polynomial.fit(f_now[itm], cont_value[itm], degree)
        fitted = poly(f_now[itm])
        exercise = intrinsic[itm] >= fitted
        idx = np.flatnonzero(itm)[exercise]
        out = cont_value.copy()
        out[idx] = intrinsic[idx]
        return out
    # nothing in the money: continuation is just the discounted next value
    return cont_value


def _finish(cash: np.ndarray, t1: float, r: float, K: float, F0: float):
    value_now = np.exp(-r * t1) * cash
    price = max(float(value_now.mean()), max(K - F0, 0.0))
    stderr = float(value_now.std(ddof=1) / np.sqrt(len(value_now)))
    return price, stderr


def _forward_lsmc(params: VGPPParams, market: MarketModel, K: float, T: float,
                  cfg: LSMCConfig, rng: RngStream, counter: SliceCounter | None):
    w = pricing.omega(params)
    grid = np.linspace(0.0, T, cfg.n_steps + 1)
    dt = T / cfg.n_steps
    _, x = process.forward_values(params, grid, rng, cfg.n_paths)
    if counter is not None:
        counter.alloc(len(grid))  # the whole matrix lives until the recursion ends
    f = market.F0 * np.exp((market.r + w) * grid[:, None] + x)
    cash = np.maximum(K - f[-1], 0.0)
    european = np.exp(-market.r * T) * cash
    disc = np.exp(-market.r * dt)
    for j in range(cfg.n_steps - 1, 0, -1):
        cash = _regression_step(cash, f[j], np.maximum(K - f[j], 0.0), disc,
                                cfg.basis_degree)
    if counter is not None:
        counter.free(len(grid))
    price, stderr = _finish(cash, grid[1], market.r, K, market.F0)
    return price, stderr, float(european.mean()), float(european.std(ddof=1) / np.sqrt(cfg.n_paths))


def _backward_lsmc(params: VGPPParams, market: MarketModel, K: float, T: float,
                   cfg: LSMCConfig, rng: RngStream, counter: SliceCounter | None):
    w = pricing.omega(params)
    grid = np.linspace(0.0, T, cfg.n_steps + 1)
    dt = T / cfg.n_steps
    z_hi, s_hi, x_hi = process.terminal_state(params, T, rng, size=cfg.n_paths)
    if counter is not None:
        counter.alloc()
    f_hi = market.F0 * np.exp((market.r + w) * T + x_hi)
    cash = np.maximum(K - f_hi, 0.0)
    european = np.exp(-market.r * T) * cash
    disc = np.exp(-market.r * dt)
    for j in range(cfg.n_steps - 1, 0, -1):
        z_t, s_t, x_t = process.backward_step(params, grid[j], grid[j + 1],
                                              z_hi, s_hi, x_hi, rng)
        if counter is not None:
            counter.alloc()  # two slices alive: (j + 1) and j
        f_t = market.F0 * np.exp((market.r + w) * grid[j] + x_t)
        cash = _regression_step(cash, f_t, np.maximum(K - f_t, 0.0), disc,
                                cfg.basis_degree)
        z_hi, s_hi, x_hi = z_t, s_t, x_t
        if counter is not None:
            counter.free()  # slice (j + 1) is no longer needed
    if counter is not None:
        counter.free()
    price, stderr = _finish(cash, grid[1], market.r, K, market.F0)
    return price, stderr, float(european.mean()), float(european.std(ddof=1) / np.sqrt(cfg.n_paths))


def price_american_put_lsmc(params: VGPPParams, market: MarketModel, K: float,
                            T: float, cfg: LSMCConfig, rng: RngStream,
                            counter: SliceCounter | None = None) -> tuple[float, float]:
    """American put price and standard error by least-squares Monte Carlo.

    Exercise dates are the ``n_steps`` equispaced monitoring times (a
    Bermudan approximation, plus immediate exercise at t = 0).  Continuation
    values are fitted by ordinary polynomials of ``basis_degree`` on
    in-the-money paths only.
    """
    _require(K > 0 and T > 0, "strike and maturity must be positive")
    run = _forward_lsmc if cfg.direction == "forward" else _backward_lsmc
    price, stderr, _, _ = run(params, market, K, T, cfg, rng, counter)
    return price, stderr


def american_vs_european_put(params: VGPPParams, market: MarketModel, K: float,
                             T: float, cfg: LSMCConfig, rng: RngStream) -> dict:
    """American LSMC put and the European put off the same simulated paths.

    Sharing paths makes the early-exercise premium a common-random-numbers
    comparison rather than a noisy difference of independent estimates.
    """
    run = _forward_lsmc if cfg.direction == "forward" else _backward_lsmc
    price, stderr, euro, euro_se = run(params, market, K, T, cfg, rng, None)
    return {"american": price, "american_stderr": stderr,
            "european": euro, "european_stderr": euro_se}


# ---------------------------------------------------------------------------
# lookback calls
# ---------------------------------------------------------------------------


def lookback_price_from_monitors(f_monitor: np.ndarray, K: float, r: float,
                                 T: float) -> tuple[float, float]:
    """Discounted fixed-strike call on the maximum over the monitor rows."""
    payoff = np.exp(-r * T) * np.maximum(f_monitor.max(axis=0) - K, 0.0)
    return float(payoff.mean()), float(payoff.std(ddof=1) / np.sqrt(payoff.shape[0]))


def price_lookback_call_max(params: VGPPParams, market: MarketModel, K: float,
                            T: float, n_steps: int, n_paths: int,
                            rng: RngStream) -> tuple[float, float]:
    """Fixed-strike lookback call on the maximum, monitored on n_steps dates."""
    _require(K > 0 and T > 0, "strike and maturity must be positive")
    _require(n_steps >= 1, "need at least one monitoring date")
    w = pricing.omega(params)
    grid = np.linspace(0.0, T, n_steps + 1)

    def one_batch(stream: RngStream, size: int) -> np.ndarray:
        _, x = process.forward_values(params, grid, stream, size)
        f = market.F0 * np.exp((market.r + w) * grid[1:, None] + x[1:])
        return np.exp(-market.r * T) * np.maximum(f.max(axis=0) - K, 0.0)

    payoffs = map_batches(one_batch, n_paths, rng)
    return float(payoffs.mean()), float(payoffs.std(ddof=1) / np.sqrt(n_paths))


# ---------------------------------------------------------------------------
# Variance Gamma baseline (plain gamma clock)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VGParams:
    """Plain VG parameters: Brownian (theta, sigma) on a Gamma(alpha t, beta) clock."""

    theta: float
    sigma: float
    alpha: float
    beta: float

    def __post_init__(self):
        _require(self.sigma > 0, "sigma must be positive")
        _require(self.alpha > 0 and self.beta > 0, "alpha and beta must be positive")


def vg_martingale_omega(vg: VGParams) -> float:
    """Martingale correction for the plain VG model; requires M > 1."""
    G, M = ept.cgm_from_vg(vg.beta, vg.sigma, vg.theta)
    _require(M > 1.0, "VG martingale correction requires M > 1")
    return float(vg.alpha * np.log((1.0 - 1.0 / M) * (1.0 + 1.0 / G)))


def moment_matched_vg(params: VGPPParams) -> VGParams:
    """VG whose gamma clock matches the Gamma++ clock's mean and variance."""
    z = params.subordinator
    m1 = gammapp.cumulant(z, 1.0, 1)
    m2 = gammapp.cumulant(z, 1.0, 2)
    beta = m1 / m2
    return VGParams(params.theta, params.sigma, alpha=m1 * beta, beta=beta)


def vg_forward_values(vg: VGParams, grid, rng: RngStream, n_paths: int) -> np.ndarray:
    """Forward VG paths (X only) on the grid."""
    grid = validate_grid(grid)
    gen = rng.generator
    x = np.zeros((len(grid), n_paths))
    for i in range(1, len(grid)):
        dt = grid[i] - grid[i - 1]
        dg = gen.gamma(vg.alpha * dt, 1.0 / vg.beta, size=n_paths)
        x[i] = x[i - 1] + vg.theta * dg + vg.sigma * np.sqrt(dg) * gen.standard_normal(n_paths)
    return x


def price_european_vg_mc(vg: VGParams, market: MarketModel, K: float, T: float,
                         n_paths: int, rng: RngStream) -> tuple[float, float]:
    """Monte Carlo European call under the plain VG baseline."""
    _require(K > 0 and T > 0, "strike and maturity must be positive")
    w = vg_martingale_omega(vg)

    def one_batch(stream: RngStream, size: int) -> np.ndarray:
        gen = stream.generator
        g = gen.gamma(vg.alpha * T, 1.0 / vg.beta, size=size)
        x = vg.theta * g + vg.sigma * np.sqrt(g) * gen.standard_normal(size)
        f_t = market.F0 * np.exp((market.r + w) * T + x)
        return np.exp(-market.r * T) * np.maximum(f_t - K, 0.0)

    payoffs = map_batches(one_batch, n_paths, rng)
    return float(payoffs.mean()), float(payoffs.std(ddof=1) / np.sqrt(n_paths))


def price_lookback_call_max_vg(vg: VGParams, market: MarketModel, K: float,
                               T: float, n_steps: int, n_paths: int,
                               rng: RngStream) -> tuple[float, float]:
    """Fixed-strike lookback call on the maximum under the plain VG baseline."""
    w = vg_martingale_omega(vg)
    grid = np.linspace(0.0, T, n_steps + 1)

    def one_batch(stream: RngStream, size: int) -> np.ndarray:
        x = vg_forward_values(vg, grid, stream, size)
        f = market.F0 * np.exp((market.r + w) * grid[1:, None] + x[1:])
        return np.exp(-market.r * T) * np.maximum(f.max(axis=0) - K, 0.0)

    payoffs = map_batches(one_batch, n_paths, rng)
    return float(payoffs.mean()), float(payoffs.std(ddof=1) / np.sqrt(n_paths))


def lookback_model_comparison(params: VGPPParams, market: MarketModel, K: float,
                              T: float, n_steps: int, n_paths: int,
                              rng: RngStream) -> dict:
    """Lookback price under the Gamma++ clock vs the moment-matched VG clock.

    The ordering of the two prices is data dependent, so it is reported (and
    logged), never asserted.
    """
    vg = moment_matched_vg(params)
    pp_price, pp_se = price_lookback_call_max(params, market, K, T, n_steps,
                                              n_paths, rng.substream(0))
    vg_price, vg_se = price_lookback_call_max_vg(vg, market, K, T, n_steps,
                                                 n_paths, rng.substream(1))
    out = {"vgpp": pp_price, "vgpp_stderr": pp_se,
           "vg": vg_price, "vg_stderr": vg_se}
    log.info("lookback comparison K=%s T=%s: clock-with-atom %.6f vs plain %.6f",
             K, T, pp_price, vg_price)
    return out
