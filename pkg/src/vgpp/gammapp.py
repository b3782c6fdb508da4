"""The Gamma++ subordinator: exact laws, Levy triplet, forward and backward simulation.

The process Z(t) is the Levy process built from the residual ("a-remainder")
of the gamma law under self-decomposability: for Gamma(alpha, beta) and any
a in (0, 1),

    chf of Z(t):  ((beta - i u a) / (beta - i u)) ** (alpha t).

Z is a finite-activity subordinator.  Its time-t law is a Polya mixture of
Erlang laws with rate beta/a plus an atom a**(alpha t) at zero, which yields
two exact samplers:

* compound-Poisson: jump count Poisson(alpha t log(1/a)); each jump is
  exponential with a random rate drawn as ``beta * a**(-U)``, U uniform on
  [0, 1] (the log-uniform mixture of rates on [beta, beta/a]);
* Polya-Erlang: count S ~ Polya(alpha t, 1 - a), then Gamma(S, beta/a).

Backward simulation pins the terminal value and fills earlier times with the
Polya bridge (beta-binomial count) followed by the gamma bridge (beta ratio).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .distributions import PolyaParams, RngStream, _require, polya_sample
from .paths import SamplePath, validate_grid

#: Relative term-contribution threshold at which density series are truncated.
SERIES_RTOL = 1e-10


@dataclass(frozen=True)
class GammaPPParams:
    """Parameters of the Gamma++ subordinator.

    ``a`` in (0, 1) is the self-decomposability parameter (the liquidity
    indicator: the probability of a zero increment over dt is a**(alpha dt)),
    ``alpha`` the shape rate per unit time, ``beta`` the rate.
    """

    a: float
    alpha: float
    beta: float

    def __post_init__(self):
        _require(0.0 < self.a < 1.0, "a must lie in (0, 1)")
        _require(self.alpha > 0, "alpha must be positive")
        _require(self.beta > 0, "beta must be positive")


@dataclass(frozen=True)
class LevyTriplet:
    """Characteristic triplet (drift, diffusion, Levy density).

    The drift uses the |x| <= 1 truncation convention; for this pure-jump
    finite-variation process it equals the closed form
    (alpha/beta) * ((1 - e**-beta) - a (1 - e**(-beta/a))), which is exactly
    the integral of x * levy_density(x) over (0, 1].  The diffusion is zero.
    """

    drift: float
    diffusion: float
    levy_density: Callable


@dataclass(frozen=True)
class AtomicDensity:
    """A law with a point mass at zero plus an absolutely continuous part."""

    atom_weight: float
    continuous: Callable


def chf(params: GammaPPParams, t: float, u) -> complex | np.ndarray:
    """Characteristic function of Z(t) via the principal-branch logarithm.

    Accepts real or complex ``u`` (complex arguments give the analytic
    continuation, e.g. ``u = -1j`` evaluates E[exp(Z(t))]).
    """
    _require(t > 0, "t must be positive")
    a, alpha, beta = params.a, params.alpha, params.beta
    u = np.asarray(u, dtype=complex)
    val = np.exp(alpha * t * (np.log(beta - 1j * u * a) - np.log(beta - 1j * u)))
    return val if val.ndim else complex(val)


def atom_weight(params: GammaPPParams, t: float) -> float:
    """Mass at zero of the time-t law: a**(alpha t)."""
    _require(t > 0, "t must be positive")
    return float(params.a ** (params.alpha * t))


def _log_mixture_weights(a: float, shape: float, n: np.ndarray) -> np.ndarray:
    # Polya(shape, 1 - a) pmf at n, in logs: the Erlang mixture weights.
    return (
        gammaln(shape + n)
        - gammaln(n + 1.0)
        - gammaln(shape)
        + shape * np.log(a)
        + n * np.log1p(-a)
    )


def continuous_density(params: GammaPPParams, t: float, x) -> np.ndarray | float:
    """Absolutely continuous part of the time-t density, vectorized in x.

    Mixture over n >= 1 of Erlang(n, beta/a) densities with Polya weights;
    the series stops once a term's relative contribution drops below
    ``SERIES_RTOL``.  Negative x gives zero density.
    """
    _require(t > 0, "t must be positive")
    a, alpha, beta = params.a, params.alpha, params.beta
    shape = alpha * t
    rate = beta / a
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    pos = x >= 0
    xp = np.where(pos, x, 0.0)

    total = np.zeros_like(xp)
    n = 1
    while True:
        log_w = _log_mixture_weights(a, shape, np.asarray(float(n)))
        with np.errstate(divide="ignore", invalid="ignore"):
            log_erlang = (
                n * np.log(rate) + (n - 1) * np.log(xp) - rate * xp - gammaln(n)
            )
        if n == 1:
            log_erlang = np.where(xp > 0, log_erlang, np.log(rate) - rate * xp)
        term = np.exp(log_w + log_erlang)
        term[~pos] = 0.0
        total += term
        rel = term / np.maximum(total, np.finfo(float).tiny)
        if n > shape * (1.0 - a) / a + 1 and np.all(rel < SERIES_RTOL):
            break
        n += 1
        if n > 100_000:  # unreachable for sane parameters
            raise RuntimeError("Erlang mixture did not converge")
    total[~pos] = 0.0
    return float(total[0]) if scalar else total


def density(params: GammaPPParams, t: float) -> AtomicDensity:
    """Time-t law of Z as an atom at zero plus a continuous density."""
    return AtomicDensity(
        atom_weight=atom_weight(params, t),
        continuous=lambda x: continuous_density(params, t, x),
    )


def levy_density(params: GammaPPParams, x) -> np.ndarray | float:
    """Levy density (alpha/x)(e**(-beta x) - e**(-beta x / a)) on (0, inf)."""
    a, alpha, beta = params.a, params.alpha, params.beta
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    _require(bool(np.all(x > 0)), "the Levy density is supported on x > 0")
    out = alpha / x * (np.exp(-beta * x) - np.exp(-beta * x / a))
    return float(out[0]) if scalar else out


def levy_triplet(params: GammaPPParams) -> LevyTriplet:
    a, alpha, beta = params.a, params.alpha, params.beta
    drift = alpha / beta * ((1.0 - np.exp(-beta)) - a * (1.0 - np.exp(-beta / a)))
    return LevyTriplet(
        drift=float(drift),
        diffusion=0.0,
        levy_density=lambda x: levy_density(params, x),
    )


def jump_intensity(params: GammaPPParams) -> float:
    """Total Levy mass alpha * log(1/a): the compound-Poisson jump rate."""
    return float(params.alpha * np.log(1.0 / params.a))


def cumulant(params: GammaPPParams, t: float, n: int) -> float:
    """n-th cumulant of Z(t): (n-1)! * alpha t * (1 - a**n) / beta**n."""
    _require(t > 0, "t must be positive")
    _require(n in (1, 2, 3, 4), "cumulant order must be in {1, 2, 3, 4}")
    a, alpha, beta = params.a, params.alpha, params.beta
    return float(
        np.exp(gammaln(n)) * alpha * t * (1.0 - a**n) / beta**n
    )


# ---------------------------------------------------------------------------
# forward sampling
# ---------------------------------------------------------------------------


def sample_cp(params: GammaPPParams, t: float, rng: RngStream, size=None):
    """Compound-Poisson draw of Z(t).

    Jump count ~ Poisson(alpha t log(1/a)); each jump is exponential with
    rate ``beta * a**(-U)``, U uniform, i.e. a log-uniform rate on
    [beta, beta/a].  Returns exactly 0.0 on a zero jump count.
    """
    _require(t > 0, "t must be positive")
    a, alpha, beta = params.a, params.alpha, params.beta
    gen = rng.generator
    scalar = size is None
    m = 1 if scalar else int(size)
    counts = gen.poisson(alpha * t * np.log(1.0 / a), size=m)
    total = int(counts.sum())
    u = gen.random(total)
    rates = beta * a ** (-u)
    jumps = gen.standard_exponential(total) / rates
    idx = np.repeat(np.arange(m), counts)
    out = np.bincount(idx, weights=jumps, minlength=m)
    return float(out[0]) if scalar else out


def sample_polya(params: GammaPPParams, t: float, rng: RngStream, size=None):
    """Polya-Erlang draw of Z(t): S ~ Polya(alpha t, 1 - a), then Gamma(S, beta/a)."""
    z, _ = sample_polya_with_count(params, t, rng, size=size)
    return z


def sample_polya_with_count(params: GammaPPParams, t: float, rng: RngStream, size=None):
    """As :func:`sample_polya`, also returning the mixture count S."""
    _require(t > 0, "t must be positive")
    a, alpha, beta = params.a, params.alpha, params.beta
    gen = rng.generator
    scalar = size is None
    m = 1 if scalar else int(size)
    s = polya_sample(PolyaParams(alpha * t, 1.0 - a), rng, size=m)
    z = np.zeros(m)
    mask = s > 0
    if np.any(mask):
        z[mask] = gen.gamma(s[mask], a / beta)
    if scalar:
        return float(z[0]), int(s[0])
    return z, s


def forward_values(params: GammaPPParams, grid, rng: RngStream, n_paths: int) -> np.ndarray:
    """Forward paths of Z on ``grid``: array of shape (len(grid), n_paths).

    Each increment over [t_i, t_{i+1}] is an independent Gamma++ draw with
    shape alpha * (t_{i+1} - t_i).
    """
    grid = validate_grid(grid)
    z = np.zeros((len(grid), n_paths))
    for i in range(1, len(grid)):
        dt = grid[i] - grid[i - 1]
        z[i] = z[i - 1] + sample_polya(params, dt, rng, size=n_paths)
    return z


def path_forward(params: GammaPPParams, grid, rng: RngStream) -> SamplePath:
    """One forward trajectory of the subordinator."""
    z = forward_values(params, grid, rng, n_paths=1)[:, 0]
    return SamplePath(grid=np.asarray(grid, dtype=float), z_values=z,
                      seed_info=(rng.seed, rng.stream_id))


# ---------------------------------------------------------------------------
# backward (bridge) sampling
# ---------------------------------------------------------------------------


def _bridge_arrays(params: GammaPPParams, t: float, t_hi: float,
                   z_hi: np.ndarray, s_hi: np.ndarray, gen: np.random.Generator):
    # One bridge step anchored at (0, 0): count via beta-binomial thinning,
    # value via the gamma-bridge beta ratio.  Degenerate counts resolve to
    # the interval endpoints.
    alpha = params.alpha
    n = len(z_hi)
    p = gen.beta(alpha * t, alpha * (t_hi - t), size=n)
    s_t = gen.binomial(s_hi, p)
    ratio = np.zeros(n)
    interior = (s_t > 0) & (s_t < s_hi)
    if np.any(interior):
        ratio[interior] = gen.beta(s_t[interior], (s_hi - s_t)[interior])
    ratio[s_t == s_hi] = 1.0
    z_t = z_hi * ratio
    z_t[s_t == 0] = 0.0
    return z_t, s_t


def bridge(params: GammaPPParams, t: float, T: float, z_T, s_T, rng: RngStream):
    """Law of (Z(t), S(t)) given Z(0) = 0 and (Z(T), S(T)) = (z_T, s_T).

    Returns scalars for scalar input, arrays for array input.
    """
    _require(0.0 < t < T, "bridge time must satisfy 0 < t < T")
    z_T = np.atleast_1d(np.asarray(z_T, dtype=float))
    s_T = np.atleast_1d(np.asarray(s_T))
    scalar = z_T.size == 1 and np.ndim(s_T) <= 1 and s_T.size == 1
    _require(bool(np.all(z_T >= 0)), "z_T must be nonnegative")
    _require(bool(np.all(s_T >= 0)), "s_T must be nonnegative")
    _require(bool(np.all((z_T == 0) == (s_T == 0))),
             "z_T must be zero exactly when s_T is zero")
    z_t, s_t = _bridge_arrays(params, t, T, z_T, s_T.astype(np.int64), rng.generator)
    if scalar:
        return float(z_t[0]), int(s_t[0])
    return z_t, s_t


def backward_values(params: GammaPPParams, grid, rng: RngStream, n_paths: int):
    """Backward paths of Z: draw the terminal point, then bridge inward.

    Interior grid times are filled in strictly decreasing order, each point
    conditioned on the origin and the most recently simulated later point.
    Returns (Z, S) arrays of shape (len(grid), n_paths).
    """
    grid = validate_grid(grid)
    d = len(grid)
    z = np.zeros((d, n_paths))
    s = np.zeros((d, n_paths), dtype=np.int64)
    if d == 1:
        return z, s
    zT, sT = sample_polya_with_count(params, grid[-1], rng, size=n_paths)
    z[-1], s[-1] = zT, sT
    gen = rng.generator
    for j in range(d - 2, 0, -1):
        z[j], s[j] = _bridge_arrays(params, grid[j], grid[j + 1], z[j + 1], s[j + 1], gen)
    return z, s


def path_backward(params: GammaPPParams, grid, rng: RngStream) -> SamplePath:
    """One backward trajectory of the subordinator."""
    z, _ = backward_values(params, grid, rng, n_paths=1)
    return SamplePath(grid=np.asarray(grid, dtype=float), z_values=z[:, 0],
                      seed_info=(rng.seed, rng.stream_id))
