"""The VG++ process: Brownian motion with drift run on the Gamma++ clock.

X(t) = theta * Z(t) + sigma * W(Z(t)) where Z is the Gamma++ subordinator.
The module provides the characteristic function, the two-subordinator
decomposition, Levy measure, cumulants, the transition density (an atom
a**(alpha t) at zero plus a Polya mixture of integer-shape VG densities),
and three samplers that agree in law: forward subordination, the
compound-Polya difference-of-exponentials representation, and backward
bridge simulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from . import ept, gammapp
from .distributions import PolyaParams, RngStream, _require, polya_sample
from .gammapp import SERIES_RTOL, AtomicDensity, GammaPPParams
from .paths import SamplePath, validate_grid


@dataclass(frozen=True)
class VGPPParams:
    """VG++ parameters: Brownian drift/diffusion plus the subordinator triple."""

    theta: float
    sigma: float
    a: float
    alpha: float
    beta: float

    def __post_init__(self):
        _require(self.sigma > 0, "sigma must be positive")
        _require(0.0 < self.a < 1.0, "a must lie in (0, 1)")
        _require(self.alpha > 0, "alpha must be positive")
        _require(self.beta > 0, "beta must be positive")

    @property
    def subordinator(self) -> GammaPPParams:
        return GammaPPParams(self.a, self.alpha, self.beta)


@dataclass(frozen=True)
class DecomposedBetas:
    """Rates of the two-subordinator decomposition X = Z_p - Z_n.

    ``beta_p``/``beta_n`` are the rates of the positive/negative gamma
    components at rate ``beta``; the tilde rates are the same roots with
    ``beta/a`` in place of ``beta``.  The tilde rates are also the
    exponential rates of the single-jump difference in the compound-Polya
    representation (their defining quadratic is validated against the
    characteristic function in the test suite).
    """

    beta_p: float
    beta_n: float
    tbeta_p: float
    tbeta_n: float
    a_p: float
    a_n: float


def decompose(params: VGPPParams) -> DecomposedBetas:
    """Split the quadratic Brownian exponent into positive/negative rates.

    The roots solve 1/beta_p - 1/beta_n = theta/beta and
    1/(beta_p beta_n) = sigma^2 / (2 beta); tilde versions use beta/a.
    """
    theta, sigma = params.theta, params.sigma

    def roots(b: float) -> tuple[float, float]:
        disc = np.sqrt(theta**2 + 2.0 * sigma**2 * b)
        return (disc - theta) / sigma**2, (disc + theta) / sigma**2

    beta_p, beta_n = roots(params.beta)
    tbeta_p, tbeta_n = roots(params.beta / params.a)
    return DecomposedBetas(
        beta_p=beta_p, beta_n=beta_n, tbeta_p=tbeta_p, tbeta_n=tbeta_n,
        a_p=beta_p / tbeta_p, a_n=beta_n / tbeta_n,
    )


def chf(params: VGPPParams, t: float, u) -> complex | np.ndarray:
    """Characteristic function of X(t); complex ``u`` gives the analytic continuation."""
    _require(t > 0, "t must be positive")
    a, alpha, beta = params.a, params.alpha, params.beta
    u = np.asarray(u, dtype=complex)
    w = params.theta * u + 1j * u**2 * params.sigma**2 / 2.0
    val = np.exp(alpha * t * (np.log(beta - 1j * w * a) - np.log(beta - 1j * w)))
    return val if val.ndim else complex(val)


def levy_density(params: VGPPParams, x) -> np.ndarray | float:
    """Two-sided Levy density; difference of exponentials on each half line."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    _require(bool(np.all(x != 0)), "the Levy density is not defined at x = 0")
    d = decompose(params)
    alpha = params.alpha
    out = np.empty_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = alpha / xp * (np.exp(-xp * d.beta_p) - np.exp(-xp * d.beta_p / d.a_p))
    xn = -x[~pos]
    out[~pos] = alpha / xn * (np.exp(-xn * d.beta_n) - np.exp(-xn * d.beta_n / d.a_n))
    return float(out[0]) if scalar else out


def cumulant(params: VGPPParams, t: float, n: int) -> float:
    """n-th cumulant of X(t) from the decomposition rates."""
    _require(t > 0, "t must be positive")
    _require(n in (1, 2, 3, 4), "cumulant order must be in {1, 2, 3, 4}")
    d = decompose(params)
    sign = (-1.0) ** n
    pos = d.beta_p**-n - d.tbeta_p**-n
    neg = d.beta_n**-n - d.tbeta_n**-n
    return float(np.exp(gammaln(n)) * params.alpha * t * (pos + sign * neg))


def skewness(params: VGPPParams, t: float) -> float:
    return cumulant(params, t, 3) / cumulant(params, t, 2) ** 1.5


def kurtosis(params: VGPPParams, t: float) -> float:
    """Full (Pearson) kurtosis, 3 + c4/c2^2; the normal law has kurtosis 3."""
    return 3.0 + cumulant(params, t, 4) / cumulant(params, t, 2) ** 2


def prob_zero_increment(params: VGPPParams, dt: float) -> float:
    """P(X(t + dt) - X(t) = 0) = a**(alpha dt): the zero-trading-activity mass."""
    _require(dt > 0, "dt must be positive")
    return float(params.a ** (params.alpha * dt))


# ---------------------------------------------------------------------------
# transition density
# ---------------------------------------------------------------------------


def _log_polya_weights(params: VGPPParams, t: float, k: np.ndarray) -> np.ndarray:
    shape = params.alpha * t
    return (
        gammaln(shape + k)
        - gammaln(k + 1.0)
        - gammaln(shape)
        + shape * np.log(params.a)
        + k * np.log1p(-params.a)
    )


def _mixture_component_count(params: VGPPParams, t: float) -> int:
    # Truncate the Polya mixture once the omitted tail mass is negligible
    # relative to SERIES_RTOL.  Weights decay geometrically at rate (1 - a)
    # past the mean shape * (1 - a) / a.
    shape = params.alpha * t
    mean = shape * (1.0 - params.a) / params.a
    log_tail_target = np.log(SERIES_RTOL) - 10.0

    def log_tail_bound(k: int) -> float:
        # remaining mass past k, bounded by a geometric tail from weight k
        ratio = (shape + k) / (k + 1.0) * (1.0 - params.a)
        if ratio >= 1.0:
            return np.inf
        log_w = float(_log_polya_weights(params, t, np.asarray(float(k))))
        return log_w + np.log(ratio) - np.log1p(-ratio)

    k_max = int(np.ceil(mean)) + 10
    while log_tail_bound(k_max) >= log_tail_target:
        k_max = int(k_max * 1.3) + 5
        if k_max > 1_000_000:
            raise RuntimeError("Polya mixture truncation did not converge")
    return k_max


@lru_cache(maxsize=128)
def _log_mixture_poly(params: VGPPParams, t: float):
    # Every mixture component shares the exponential envelope exp(G x) /
    # exp(-M x), so the whole continuous density collapses to a single
    # polynomial: f(x) = envelope(x) * sum_s q_s |x|^s with
    # q_s = sum_{k > s} w_k c_s^(k) / s!, assembled once in log space.
    # Cached: quote calibration prices many strikes at the same (params, t).
    G, M = ept.cgm_from_vg(params.beta / params.a, params.sigma, params.theta)
    k_max = _mixture_component_count(params, t)
    k = np.arange(1, k_max + 1, dtype=float)[:, None]
    s = np.arange(k_max, dtype=float)[None, :]
    log_w = _log_polya_weights(params, t, k)
    with np.errstate(invalid="ignore"):
        log_c = (
            k * np.log(M * G)
            - gammaln(k)
            + gammaln(2.0 * k - 1.0 - s)
            - gammaln(k - s)
            - (2.0 * k - 1.0 - s) * np.log(G + M)
        )
    log_c = np.where(s < k, log_c, -np.inf)
    log_q = logsumexp(log_w + log_c - gammaln(s + 1.0), axis=0)
    return log_q, G, M


def log_density_continuous(params: VGPPParams, t: float, x) -> np.ndarray | float:
    """Log of the absolutely continuous part of the X(t) density.

    The Polya mixture over integer-shape VG components with rate beta/a is
    evaluated through its exponential-polynomial closed form; everything is
    assembled in log space so calibration-scale parameters (alpha of order
    10^3) stay finite.
    """
    _require(t > 0, "t must be positive")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    log_q, G, M = _log_mixture_poly(params, t)
    s = np.arange(len(log_q), dtype=float)[:, None]
    # |x| = 0 handled by a large negative stand-in: s = 0 contributes
    # log_q[0], every s >= 1 term underflows to zero.
    with np.errstate(divide="ignore"):
        log_abs = np.where(x == 0.0, -1e250, np.log(np.abs(x)))[None, :]
    mat = log_q[:, None] + s * log_abs
    peak = mat.max(axis=0)
    poly = peak + np.log(np.exp(mat - peak).sum(axis=0))
    out = np.where(x > 0, -M * x, G * x) + poly
    return float(out[0]) if scalar else out


def density(params: VGPPParams, t: float) -> AtomicDensity:
    """Time-t law of X: atom a**(alpha t) at zero plus the continuous mixture."""
    return AtomicDensity(
        atom_weight=float(params.a ** (params.alpha * t)),
        continuous=lambda x: np.exp(log_density_continuous(params, t, x)),
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _brownian_layer(theta, sigma, dz, gen, size):
    # N(theta dz, sigma^2 dz); exactly zero where the clock did not move.
    return theta * dz + sigma * np.sqrt(dz) * gen.standard_normal(size)


def sample(params: VGPPParams, t: float, rng: RngStream, size=None):
    """Terminal draw X(t) by forward subordination."""
    _require(t > 0, "t must be positive")
    scalar = size is None
    m = 1 if scalar else int(size)
    z = gammapp.sample_polya(params.subordinator, t, rng, size=m)
    x = _brownian_layer(params.theta, params.sigma, z, rng.generator, m)
    return float(x[0]) if scalar else x


def sample_compound(params: VGPPParams, t: float, rng: RngStream, size=None):
    """Terminal draw X(t) as a Polya sum of exponential differences.

    S ~ Polya(alpha t, 1 - a) terms, each Exp(tbeta_p) - Exp(tbeta_n) with
    the tilde rates of :func:`decompose`; returns exactly 0.0 when S = 0.
    """
    _require(t > 0, "t must be positive")
    d = decompose(params)
    gen = rng.generator
    scalar = size is None
    m = 1 if scalar else int(size)
    counts = polya_sample(PolyaParams(params.alpha * t, 1.0 - params.a), rng, size=m)
    total = int(counts.sum())
    pos = gen.standard_exponential(total) / d.tbeta_p
    neg = gen.standard_exponential(total) / d.tbeta_n
    idx = np.repeat(np.arange(m), counts)
    out = np.bincount(idx, weights=pos - neg, minlength=m)
    return float(out[0]) if scalar else out


def forward_values(params: VGPPParams, grid, rng: RngStream, n_paths: int):
    """Forward paths: returns (Z, X) arrays of shape (len(grid), n_paths)."""
    grid = validate_grid(grid)
    gen = rng.generator
    z = np.zeros((len(grid), n_paths))
    x = np.zeros((len(grid), n_paths))
    for i in range(1, len(grid)):
        dt = grid[i] - grid[i - 1]
        dz = gammapp.sample_polya(params.subordinator, dt, rng, size=n_paths)
        z[i] = z[i - 1] + dz
        x[i] = x[i - 1] + _brownian_layer(params.theta, params.sigma, dz, gen, n_paths)
    return z, x


def terminal_state(params: VGPPParams, T: float, rng: RngStream, size: int):
    """Joint draw of (Z(T), S(T), X(T)) used to seed backward simulation."""
    z, s = gammapp.sample_polya_with_count(params.subordinator, T, rng, size=size)
    x = _brownian_layer(params.theta, params.sigma, z, rng.generator, size)
    return z, s, x


def backward_step(params: VGPPParams, t: float, t_hi: float,
                  z_hi: np.ndarray, s_hi: np.ndarray, x_hi: np.ndarray,
                  rng: RngStream):
    """One backward step: the state at ``t`` given the state at ``t_hi``.

    The subordinator bridges through the Polya/gamma bridge; X then follows
    the Brownian bridge on the subordinated clock,
    N(x_hi z_t / z_hi, sigma^2 z_t (z_hi - z_t) / z_hi).  A path whose
    clock has not moved (z_hi = 0) stays identically zero.
    """
    gen = rng.generator
    z_t, s_t = gammapp._bridge_arrays(params.subordinator, t, t_hi, z_hi, s_hi, gen)
    frac = np.divide(z_t, z_hi, out=np.zeros_like(z_t), where=z_hi > 0)
    mean = x_hi * frac
    var = params.sigma**2 * z_t * (1.0 - frac)
    x_t = mean + np.sqrt(np.maximum(var, 0.0)) * gen.standard_normal(len(z_t))
    return z_t, s_t, x_t


def backward_values(params: VGPPParams, grid, rng: RngStream, n_paths: int):
    """Backward paths: terminal draw, then bridges in decreasing time order.

    Returns (Z, X) arrays of shape (len(grid), n_paths).
    """
    grid = validate_grid(grid)
    d = len(grid)
    z = np.zeros((d, n_paths))
    x = np.zeros((d, n_paths))
    if d == 1:
        return z, x
    zT, sT, xT = terminal_state(params, grid[-1], rng, size=n_paths)
    z[-1], x[-1] = zT, xT
    s_hi = sT
    for j in range(d - 2, 0, -1):
        z[j], s_hi, x[j] = backward_step(params, grid[j], grid[j + 1],
                                         z[j + 1], s_hi, x[j + 1], rng)
    return z, x


def path_forward(params: VGPPParams, grid, rng: RngStream) -> SamplePath:
    z, x = forward_values(params, grid, rng, n_paths=1)
    return SamplePath(grid=np.asarray(grid, dtype=float), z_values=z[:, 0],
                      x_values=x[:, 0], seed_info=(rng.seed, rng.stream_id))


def path_backward(params: VGPPParams, grid, rng: RngStream) -> SamplePath:
    z, x = backward_values(params, grid, rng, n_paths=1)
    return SamplePath(grid=np.asarray(grid, dtype=float), z_values=z[:, 0],
                      x_values=x[:, 0], seed_info=(rng.seed, rng.stream_id))
