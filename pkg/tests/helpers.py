"""Shared test utilities: independent oracles and sampling-error estimates."""

from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.integrate import quad
from scipy.special import gammaln, kv

from vgpp import ept
from vgpp.ept import CGMParams

# ---------------------------------------------------------------------------
# sampling-error machinery
# ---------------------------------------------------------------------------


def raw_moments(x: np.ndarray, order: int) -> np.ndarray:
    """E-hat[X^j] for j = 1..order, accumulated in chunks."""
    out = np.zeros(order)
    n = len(x)
    for start in range(0, n, 500_000):
        chunk = x[start:start + 500_000]
        p = np.ones_like(chunk)
        for j in range(order):
            p = p * chunk
            out[j] += p.sum()
    return out / n


def _central_from_raw(m: np.ndarray) -> dict:
    m1, m2, m3, m4 = m[:4]
    mu2 = m2 - m1**2
    mu3 = m3 - 3 * m1 * m2 + 2 * m1**3
    mu4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
    return {"mean": m1, "mu2": mu2, "mu3": mu3, "mu4": mu4}


_STATS = {
    "mean": lambda c: c["mean"],
    "variance": lambda c: c["mu2"],
    "skewness": lambda c: c["mu3"] / c["mu2"] ** 1.5,
    "kurtosis": lambda c: c["mu4"] / c["mu2"] ** 2,
    "c1": lambda c: c["mean"],
    "c2": lambda c: c["mu2"],
    "c3": lambda c: c["mu3"],
    "c4": lambda c: c["mu4"] - 3 * c["mu2"] ** 2,
}


def stat_and_se(x: np.ndarray, name: str) -> tuple[float, float]:
    """Sample statistic and its delta-method standard error.

    The statistic is a smooth function of the first four raw moments; its
    asymptotic variance is g' Sigma g / n with Sigma the sample covariance
    of (X, X^2, X^3, X^4), estimated from raw moments up to order eight.
    """
    n = len(x)
    m = raw_moments(x, 8)
    f = _STATS[name]

    def of_raw(m4: np.ndarray) -> float:
        return f(_central_from_raw(m4))

    base = m[:4].copy()
    grad = np.empty(4)
    for i in range(4):
        h = 1e-6 * max(abs(base[i]), 1e-8)
        up, dn = base.copy(), base.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (of_raw(up) - of_raw(dn)) / (2 * h)
    cov = np.empty((4, 4))
    full = np.concatenate([[1.0], m])  # full[j] = E[X^j]
    for i in range(1, 5):
        for j in range(1, 5):
            cov[i - 1, j - 1] = full[i + j] - full[i] * full[j]
    var = grad @ cov @ grad / n
    return float(of_raw(base)), float(np.sqrt(max(var, 0.0)))


def cumulant_se_from_theory(ctheo, n: int, order: int) -> float:
    """Asymptotic se of the sample cumulant of given order from theoretical cumulants.

    ``ctheo(j)`` must return the j-th theoretical cumulant (j up to 8).
    """
    c = {j: ctheo(j) for j in range(2, 9)}
    if order == 1:
        var = c[2] / n
    elif order == 2:
        var = (c[4] + 2 * c[2] ** 2) / n
    elif order == 3:
        var = (c[6] + 9 * c[4] * c[2] + 9 * c[3] ** 2 + 6 * c[2] ** 3) / n
    elif order == 4:
        var = (c[8] + 16 * c[6] * c[2] + 48 * c[5] * c[3] + 34 * c[4] ** 2
               + 72 * c[4] * c[2] ** 2 + 144 * c[3] ** 2 * c[2] + 24 * c[2] ** 4) / n
    else:
        raise ValueError(order)
    return float(np.sqrt(var))


def gpp_cumulant_any_order(a: float, alpha: float, beta: float, t: float, n: int) -> float:
    """(n-1)! alpha t (1 - a^n) / beta^n for any order n (test-side closed form)."""
    return float(np.exp(gammaln(n)) * alpha * t * (1.0 - a**n) / beta**n)


def empirical_chf(x: np.ndarray, u: float) -> tuple[complex, float, float]:
    """Empirical characteristic function and standard errors of both parts."""
    n = len(x)
    re = np.cos(u * x)
    im = np.sin(u * x)
    return (complex(re.mean(), im.mean()),
            float(re.std(ddof=1) / np.sqrt(n)),
            float(im.std(ddof=1) / np.sqrt(n)))


# ---------------------------------------------------------------------------
# law comparison with an atom at zero
# ---------------------------------------------------------------------------


def assert_same_law(x: np.ndarray, y: np.ndarray, level: float = 0.01) -> None:
    """Two-sample equality check for laws with a point mass at zero.

    Compares the zero fractions by a two-proportion z-test and the nonzero
    parts by a two-sample Kolmogorov-Smirnov test, both at ``level``.
    """
    nx, ny = len(x), len(y)
    zx, zy = float(np.mean(x == 0.0)), float(np.mean(y == 0.0))
    pooled = (zx * nx + zy * ny) / (nx + ny)
    if 0.0 < pooled < 1.0:
        se = np.sqrt(pooled * (1 - pooled) * (1 / nx + 1 / ny))
        zstat = abs(zx - zy) / se
        p_atom = 2 * stats.norm.sf(zstat)
        assert p_atom > level, f"atom fractions differ: {zx} vs {zy} (p={p_atom:.2e})"
    ks = stats.ks_2samp(x[x != 0.0], y[y != 0.0])
    assert ks.pvalue > level, f"nonzero parts differ (KS p={ks.pvalue:.2e})"


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------


def vg_density_bessel(shape: float, rate: float, sigma: float, theta: float, x):
    """VG density via the modified Bessel function of the second kind.

    Law of theta * g + sigma * W(g) with g ~ Gamma(shape, rate); valid for
    any real shape, used as the independent check of the two-branch
    exponential-polynomial form.
    """
    x = np.asarray(x, dtype=float)
    spread = np.sqrt(theta**2 + 2 * sigma**2 * rate)
    return (2 * rate**shape * np.exp(theta * x / sigma**2)
            / (np.sqrt(2 * np.pi) * sigma * np.exp(gammaln(shape)))
            * (np.abs(x) / spread) ** (shape - 0.5)
            * kv(shape - 0.5, np.abs(x) * spread / sigma**2))


def ept_call_quadrature(params: CGMParams, F0: float, K: float, r: float,
                        T: float, omega: float) -> float:
    """Adaptive-quadrature price of the call payoff against the EPT density."""
    d = np.log(F0 / K) + (r + omega) * T
    fwd_log = np.log(F0) + (r + omega) * T

    def integrand(x):
        lf = ept.log_density(params, x)
        return np.exp(fwd_log + x + lf) - K * np.exp(lf)

    lo = -d
    kw = dict(epsabs=1e-13, epsrel=1e-13, limit=400)
    if lo < 0:
        total = quad(integrand, lo, 0, **kw)[0] + quad(integrand, 0, np.inf, **kw)[0]
    else:
        total = quad(integrand, lo, np.inf, **kw)[0]
    return float(np.exp(-r * T) * total)


def ept_put_quadrature(params: CGMParams, F0: float, K: float, r: float,
                       T: float, omega: float) -> float:
    """Adaptive-quadrature price of the put payoff against the EPT density."""
    d = np.log(F0 / K) + (r + omega) * T
    fwd_log = np.log(F0) + (r + omega) * T

    def integrand(x):
        lf = ept.log_density(params, x)
        return K * np.exp(lf) - np.exp(fwd_log + x + lf)

    hi = -d
    kw = dict(epsabs=1e-13, epsrel=1e-13, limit=400)
    if hi > 0:
        total = quad(integrand, -np.inf, 0, **kw)[0] + quad(integrand, 0, hi, **kw)[0]
    else:
        total = quad(integrand, -np.inf, hi, **kw)[0]
    return float(np.exp(-r * T) * total)


def vg_chf(shape: float, rate: float, sigma: float, theta: float, u):
    """chf of theta*g + sigma*W(g), g ~ Gamma(shape, rate)."""
    u = np.asarray(u, dtype=complex)
    return (1.0 - (1j * theta * u - sigma**2 * u**2 / 2.0) / rate) ** (-shape)
