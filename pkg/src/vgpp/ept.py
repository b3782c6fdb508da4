"""Two-sided exponential-polynomial (2-EPT) machinery for integer-shape VG laws.

A VG law with integer shape C and rates (G, M) has the two-branch density

    f(x) = c exp(A_N x) b   for x <= 0,      A_N =  G I - a,
    f(x) = c exp(A_P x) b   for x >  0,      A_P = -M I + a,

where ``a`` is the subdiagonal shift matrix, ``b`` the first unit vector and
``c`` a row of positive coefficients.  Because A_N and A_P are a scalar plus
a nilpotent shift, every matrix exponential reduces to a finite polynomial,
so densities and European call prices evaluate in closed form with no
numerical integration.  All coefficient work is done in log space, which
keeps shapes in the hundreds finite.

The (C, G, M) parameterization maps to the drift/diffusion/rate one through
GM = 2 beta / sigma^2 and M - G = -2 theta / sigma^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .distributions import _require


@dataclass(frozen=True)
class CGMParams:
    """Integer-shape VG parameters; pricing additionally requires M > 1."""

    C: int
    G: float
    M: float

    def __post_init__(self):
        _require(int(self.C) == self.C and self.C >= 1, "C must be an integer >= 1")
        _require(self.G > 0, "G must be positive")
        _require(self.M > 0, "M must be positive")


@dataclass(frozen=True)
class EPTRealization:
    """Matrix realization (A_N, b_N, c_N, A_P, b_P, c_P) of the two branches."""

    A_N: np.ndarray
    b_N: np.ndarray
    c_N: np.ndarray
    A_P: np.ndarray
    b_P: np.ndarray
    c_P: np.ndarray


def cgm_from_vg(beta: float, sigma: float, theta: float) -> tuple[float, float]:
    """Solve GM = 2 beta / sigma^2 and M - G = -2 theta / sigma^2 for (G, M).

    Both roots are always positive:
    G = (theta + sqrt(theta^2 + 2 beta sigma^2)) / sigma^2 and
    M = (-theta + sqrt(theta^2 + 2 beta sigma^2)) / sigma^2.
    """
    _require(beta > 0, "beta must be positive")
    _require(sigma > 0, "sigma must be positive")
    disc = np.sqrt(theta**2 + 2.0 * beta * sigma**2)
    return float((theta + disc) / sigma**2), float((-theta + disc) / sigma**2)


def _log_coeffs(C: int, G: float, M: float) -> np.ndarray:
    # log of the realization row vector c; the density polynomial on each
    # branch is sum_s (c_s / s!) |x|^s, the s! being supplied by exp(a x) b.
    s = np.arange(C, dtype=float)
    return (
        C * np.log(M * G)
        - gammaln(C)
        + gammaln(2.0 * C - 1.0 - s)
        - gammaln(C - s)
        - (2.0 * C - 1.0 - s) * np.log(G + M)
    )


def realization(params: CGMParams) -> EPTRealization:
    """Explicit matrices of the two-branch density; small-C reference object."""
    C, G, M = params.C, params.G, params.M
    shift = np.eye(C, k=-1)
    eye = np.eye(C)
    b = np.zeros(C)
    b[0] = 1.0
    c = np.exp(_log_coeffs(C, G, M))
    return EPTRealization(
        A_N=G * eye - shift, b_N=b.copy(), c_N=c.copy(),
        A_P=-M * eye + shift, b_P=b, c_P=c,
    )


def log_density(params: CGMParams, x) -> np.ndarray | float:
    """Log density of the integer-shape VG law, vectorized in x."""
    C, G, M = params.C, params.G, params.M
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x).astype(float)
    logc = _log_coeffs(C, G, M)
    s = np.arange(C, dtype=float)[:, None]
    # |x| = 0 handled by a large negative stand-in: s = 0 contributes logc[0],
    # every s >= 1 term underflows to zero.
    with np.errstate(divide="ignore"):
        log_abs = np.where(x == 0.0, -1e250, np.log(np.abs(x)))[None, :]
    poly = logsumexp(logc[:, None] - gammaln(s + 1.0) + s * log_abs, axis=0)
    out = np.where(x > 0, -M * x, G * x) + poly
    return float(out[0]) if scalar else out


def density(params: CGMParams, x) -> np.ndarray | float:
    """Density of the integer-shape VG law (exponential times polynomial)."""
    out = np.exp(log_density(params, x))
    return out if np.ndim(out) else float(out)


def density_from_realization(realz: EPTRealization, x) -> np.ndarray | float:
    """Reference density evaluation through the matrix exponentials."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    out = np.empty(len(xs))
    for i, xi in enumerate(xs):
        if xi <= 0:
            out[i] = realz.c_N @ mat_exp(realz.A_N * xi) @ realz.b_N
        else:
            out[i] = realz.c_P @ mat_exp(realz.A_P * xi) @ realz.b_P
    return float(out[0]) if scalar else out


def omega(params: CGMParams) -> float:
    """Martingale drift correction: C log((1 - 1/M)(1 + 1/G)); needs M > 1."""
    _require(params.M > 1.0, "martingale correction requires M > 1")
    return float(params.C * np.log((1.0 - 1.0 / params.M) * (1.0 + 1.0 / params.G)))


def expected_exp(params: CGMParams) -> float:
    """E[exp(X)] = (GM / ((M - 1)(G + 1)))**C; finite only for M > 1."""
    _require(params.M > 1.0, "E[exp(X)] requires M > 1")
    C, G, M = params.C, params.G, params.M
    return float((G * M / ((M - 1.0) * (G + 1.0))) ** C)


def _lse(values: np.ndarray) -> float:
    # logsumexp over all entries, tolerant of -inf padding
    m = values.max()
    if m == -np.inf:
        return m
    return float(m + np.log(np.exp(values - m).sum()))


def _log_resolvent(logc: np.ndarray, g: float) -> float:
    # log of c (g I - a)^{-1} b = log sum_i c_i g^{-(i+1)}
    i = np.arange(len(logc), dtype=float)
    return _lse(logc - (i + 1.0) * np.log(g))


def _log_resolvent_exp(logc: np.ndarray, g: float, d: float) -> float:
    # log of c (g I - a)^{-1} exp(-(g I - a) d) b for d >= 0:
    #   e^{-g d} sum_i c_i sum_{j<=i} g^{-(j+1)} d^{i-j} / (i-j)!
    # with every addend positive.  The j > i corner is killed by the
    # gammaln pole at nonpositive integers (-gammaln -> -inf).
    if d == 0.0:
        return _log_resolvent(logc, g)
    C = len(logc)
    i = np.arange(C, dtype=float)
    m = i[:, None] - i[None, :]
    mat = (logc[:, None] - (i[None, :] + 1.0) * np.log(g)
           + m * np.log(d) - gammaln(m + 1.0))
    return -g * d + _lse(mat)


def call_price_from_log_coeffs(logc: np.ndarray, G: float, M: float, F0: float,
                               K: float, r: float, T: float, omega: float,
                               norm: float = 1.0) -> float:
    """Call price for any two-branch density c e^(A_N x) b / c e^(A_P x) b.

    ``logc`` is the log coefficient row (shared by both branches), ``norm``
    the total mass the coefficients integrate to (1 for a plain density;
    the continuous mass when an atom has been split off).  With
    d = log(F0/K) + (r + omega) T the exercise region is x > -d, and both
    the e^x-weighted and plain tail integrals reduce to
    resolvent/exponential polynomials: no quadrature anywhere.
    """
    d = float(np.log(F0 / K) + (r + omega) * T)
    fwd = F0 * np.exp(omega * T)
    disc_k = K * np.exp(-r * T)
    if d > 0:
        # exp-weighted mass on (-d, 0] plus all of (0, inf)
        lq2 = _log_resolvent(logc, G + 1.0)
        lq3 = _log_resolvent_exp(logc, G + 1.0, d)
        exp_mass = np.exp(lq2) * -np.expm1(lq3 - lq2)
        exp_mass += np.exp(_log_resolvent(logc, M - 1.0))
        left_tail = np.exp(_log_resolvent_exp(logc, G, d))
        price = fwd * exp_mass - disc_k * (norm - left_tail)
    else:
        exp_mass = np.exp(_log_resolvent_exp(logc, M - 1.0, -d))
        prob_mass = np.exp(_log_resolvent_exp(logc, M, -d))
        price = fwd * exp_mass - disc_k * prob_mass
    return max(float(price), 0.0)


def call_price(params: CGMParams, F0: float, K: float, r: float, T: float,
               omega: float) -> float:
    """European call on F(T) = F0 exp((r + omega) T + X), X integer-shape VG.

    Closed form through :func:`call_price_from_log_coeffs`; the evaluation
    is a handful of O(C^2) array ops.
    """
    _require(F0 > 0 and K > 0, "F0 and K must be positive")
    _require(T > 0, "T must be positive")
    _require(params.G > 0 and params.M > 1.0,
             "call pricing needs G > 0 and M > 1 for the forward mass to exist")
    logc = _log_coeffs(params.C, params.G, params.M)
    return call_price_from_log_coeffs(logc, params.G, params.M, F0, K, r, T, omega)


def call_price_from_realization(realz: EPTRealization, F0: float, K: float,
                                r: float, T: float, omega: float) -> float:
    """Reference pricing through explicit matrix inverses and exponentials."""
    C = len(realz.b_N)
    eye = np.eye(C)
    d = float(np.log(F0 / K) + (r + omega) * T)
    fwd = F0 * np.exp(omega * T)
    disc_k = K * np.exp(-r * T)
    c, b = realz.c_N, realz.b_N
    if d > 0:
        an1 = realz.A_N + eye
        exp_mass = c @ mat_inv(an1) @ (eye - mat_exp(-an1 * d)) @ b
        exp_mass += -c @ mat_inv(realz.A_P + eye) @ b
        left_tail = c @ mat_inv(realz.A_N) @ mat_exp(-realz.A_N * d) @ b
        price = fwd * exp_mass - disc_k * (1.0 - left_tail)
    else:
        ap1 = realz.A_P + eye
        exp_mass = -c @ mat_inv(ap1) @ mat_exp(-ap1 * d) @ b
        prob_mass = -c @ mat_inv(realz.A_P) @ mat_exp(-realz.A_P * d) @ b
        price = fwd * exp_mass - disc_k * prob_mass
    return max(float(price), 0.0)


def mat_exp(a: np.ndarray) -> np.ndarray:
    """Exact exponential of a lower-triangular matrix with constant diagonal.

    Such a matrix is lam * I + N with N strictly lower triangular and
    nilpotent, so exp(a) = e^lam * sum_{j < dim} N^j / j! terminates.
    """
    a = np.asarray(a, dtype=float)
    _require(a.ndim == 2 and a.shape[0] == a.shape[1], "mat_exp needs a square matrix")
    dim = a.shape[0]
    lam = a[0, 0]
    _require(bool(np.all(np.diag(a) == lam)), "mat_exp needs a constant diagonal")
    _require(bool(np.all(np.triu(a, k=1) == 0.0)),
             "mat_exp supports lower-triangular matrices only")
    nil = a - lam * np.eye(dim)
    out = np.eye(dim)
    term = np.eye(dim)
    for j in range(1, dim):
        term = term @ nil / j
        out += term
    return np.exp(lam) * out


def mat_inv(a: np.ndarray) -> np.ndarray:
    """Matrix inverse; raises numpy.linalg.LinAlgError on singular input."""
    a = np.asarray(a, dtype=float)
    _require(a.ndim == 2 and a.shape[0] == a.shape[1], "mat_inv needs a square matrix")
    return np.linalg.inv(a)
