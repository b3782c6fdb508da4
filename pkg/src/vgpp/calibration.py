"""Parameter estimation for VG++ models.

Three routes are provided: maximum likelihood on a log-return series using
the atom-plus-mixture transition density, a method-of-moments fit on the
first four standardized moments, and nonlinear least squares on quoted call
prices.  Throughout, the rate is pinned to beta = (1 - a) alpha so the
subordinator has unit mean speed (E[Z(t)] = t) and the remaining free
parameters are (theta, sigma, a, alpha).

Because a and alpha enter the zero-return probability only through
p_zero = a**(alpha dt), the pair is weakly identified individually; every
fit therefore reports p_zero alongside the raw parameters.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from . import pricing, process
from .distributions import _require
from .pricing import FFTConfig, MarketModel
from .process import VGPPParams

TRADING_DT = 1.0 / 252.0

#: Box bounds used when the caller does not supply any.
DEFAULT_BOUNDS: dict[str, tuple[float, float]] = {
    "theta": (-10.0, 10.0),
    "sigma": (1e-3, 5.0),
    "a": (0.01, 0.99),
    "alpha": (1e-2, 1e5),
}

_PARAM_ORDER = ("theta", "sigma", "a", "alpha")


def constrained_params(theta: float, sigma: float, a: float, alpha: float) -> VGPPParams:
    """VG++ parameters with the unit-speed constraint beta = (1 - a) alpha."""
    return VGPPParams(theta=theta, sigma=sigma, a=a, alpha=alpha,
                      beta=(1.0 - a) * alpha)


@dataclass(frozen=True)
class ReturnSeries:
    """A log-price series observed on equally spaced dates.

    ``dt`` is the year fraction between observations (defaults to one
    trading day).  Only increments of ``log_prices`` enter any estimator.
    """

    timestamps: tuple
    log_prices: np.ndarray
    dt: float = TRADING_DT

    def __post_init__(self):
        object.__setattr__(self, "log_prices", np.asarray(self.log_prices, dtype=float))
        _require(len(self.timestamps) == len(self.log_prices),
                 "timestamps and log_prices must have equal length")
        _require(len(self.log_prices) >= 2, "a return series needs at least 2 points")
        _require(all(b > a for a, b in zip(self.timestamps, self.timestamps[1:])),
                 "timestamps must be strictly increasing")
        _require(self.dt > 0, "dt must be positive")

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.log_prices)

    @classmethod
    def from_csv(cls, path, dt: float = TRADING_DT) -> "ReturnSeries":
        """Read a ``date,price`` CSV (ISO dates, positive price levels)."""
        stamps, prices = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["date", "price"]:
                raise ValueError(f"{path}: expected header 'date,price', got {reader.fieldnames}")
            for i, row in enumerate(reader, start=2):
                try:
                    stamps.append(_dt.date.fromisoformat(row["date"].strip()))
                    price = float(row["price"])
                except (ValueError, TypeError) as exc:
                    raise ValueError(f"{path}: bad row {i} ({row}): {exc}") from exc
                if price <= 0:
                    raise ValueError(f"{path}: row {i}: price must be positive")
                prices.append(price)
        return cls(timestamps=tuple(stamps), log_prices=np.log(prices), dt=dt)


@dataclass(frozen=True)
class QuoteSet:
    """Observed call quotes (strike, maturity, mid price) plus the market state."""

    quotes: tuple
    market: MarketModel

    def __post_init__(self):
        _require(len(self.quotes) >= 1, "quote set must be non-empty")
        for K, T, mid in self.quotes:
            _require(K > 0 and T > 0 and mid > 0, "quotes need positive K, T, mid")

    @classmethod
    def from_csv(cls, path, market: MarketModel) -> "QuoteSet":
        """Read a ``K,T,mid`` CSV."""
        quotes = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["K", "T", "mid"]:
                raise ValueError(f"{path}: expected header 'K,T,mid', got {reader.fieldnames}")
            for i, row in enumerate(reader, start=2):
                try:
                    quotes.append((float(row["K"]), float(row["T"]), float(row["mid"])))
                except (ValueError, TypeError) as exc:
                    raise ValueError(f"{path}: bad row {i} ({row}): {exc}") from exc
        return cls(quotes=tuple(quotes), market=market)


@dataclass
class CalibResult:
    """Fit outcome.  ``objective`` is the log-likelihood for MLE (maximized)
    and the minimized distance for GMM/NLLS.  ``p_zero`` is the implied
    zero-increment probability a**(alpha dt) at the fitting frequency."""

    params: VGPPParams
    objective: float
    converged: bool
    n_evals: int
    p_zero: float
    notes: str = ""
    residuals: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        out = {
            "theta": self.params.theta,
            "sigma": self.params.sigma,
            "a": self.params.a,
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "objective": self.objective,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "p_zero": self.p_zero,
            "notes": self.notes,
        }
        if self.residuals is not None:
            out["residuals"] = [float(r) for r in self.residuals]
        return out


# ---------------------------------------------------------------------------
# likelihood
# ---------------------------------------------------------------------------


def log_likelihood(params: VGPPParams, series: ReturnSeries,
                   atom_eps: float = 1e-10) -> float:
    """Censored-mixture log-likelihood of the increments.

    Increments with |dx| <= atom_eps take the atom mass a**(alpha dt) (they
    are read as realizations of the zero atom); all others take the
    continuous density.  No band renormalization is applied.  Returns -inf
    on any non-finite density so optimizers can reject the point.
    """
    _require(atom_eps >= 0, "atom_eps must be nonnegative")
    _require(abs(params.beta - (1.0 - params.a) * params.alpha)
             <= 1e-9 * max(1.0, params.beta),
             "log_likelihood expects the unit-speed constraint beta = (1 - a) alpha")
    inc = series.increments
    dt = series.dt
    zero = np.abs(inc) <= atom_eps
    total = float(np.sum(zero)) * params.alpha * dt * np.log(params.a)
    nonzero = inc[~zero]
    if nonzero.size:
        logpdf = process.log_density_continuous(params, dt, nonzero)
        if not np.all(np.isfinite(logpdf)):
            return -np.inf
        total += float(np.sum(logpdf))
    return total if np.isfinite(total) else -np.inf


def theoretical_moments(params: VGPPParams, t: float) -> np.ndarray:
    """(mean, variance, skewness, kurtosis) of X(t); kurtosis is the full one."""
    return np.array([
        process.cumulant(params, t, 1),
        process.cumulant(params, t, 2),
        process.skewness(params, t),
        process.kurtosis(params, t),
    ])


def sample_moments(increments: np.ndarray) -> np.ndarray:
    """Sample (mean, variance, skewness, kurtosis) matching the theoretical ones."""
    x = np.asarray(increments, dtype=float)
    m = x.mean()
    c = x - m
    m2 = float(np.mean(c**2))
    _require(m2 > 0, "sample variance is zero; moments are degenerate")
    m3 = float(np.mean(c**3))
    m4 = float(np.mean(c**4))
    return np.array([m, m2, m3 / m2**1.5, m4 / m2**2])


# ---------------------------------------------------------------------------
# box transform and multi-start driver
# ---------------------------------------------------------------------------


def _merged_bounds(bounds) -> dict[str, tuple[float, float]]:
    out = dict(DEFAULT_BOUNDS)
    if bounds:
        out.update(bounds)
    for name, (lo, hi) in out.items():
        _require(lo < hi, f"bounds for {name} must satisfy lo < hi")
    return out


def _to_unconstrained(values: np.ndarray, bounds: dict) -> np.ndarray:
    out = np.empty(len(_PARAM_ORDER))
    for i, name in enumerate(_PARAM_ORDER):
        lo, hi = bounds[name]
        frac = np.clip((values[i] - lo) / (hi - lo), 1e-12, 1.0 - 1e-12)
        out[i] = np.log(frac / (1.0 - frac))
    return out


def _from_unconstrained(x: np.ndarray, bounds: dict) -> np.ndarray:
    out = np.empty(len(_PARAM_ORDER))
    for i, name in enumerate(_PARAM_ORDER):
        lo, hi = bounds[name]
        out[i] = lo + (hi - lo) / (1.0 + np.exp(-np.clip(x[i], -60, 60)))
    return out


def _clip_to_bounds(values, bounds) -> np.ndarray:
    out = np.empty(len(_PARAM_ORDER))
    for i, name in enumerate(_PARAM_ORDER):
        lo, hi = bounds[name]
        width = hi - lo
        out[i] = np.clip(values[i], lo + 1e-9 * width, hi - 1e-9 * width)
    return out


def _minimize_multistart(objective, starts, bounds, max_evals: int = 10_000):
    """Nelder-Mead in sigmoid-transformed coordinates, best-of over starts.

    Terminates each run on relative objective change below 1e-8 or when its
    share of the total evaluation budget is spent; ties between starts break
    by start index.
    """
    best = None
    total_evals = 0
    per_start = max_evals // len(starts)
    for idx, start in enumerate(starts):
        x0 = _to_unconstrained(_clip_to_bounds(start, bounds), bounds)
        f0 = abs(objective(_from_unconstrained(x0, bounds)))
        res = minimize(
            lambda x: objective(_from_unconstrained(x, bounds)),
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": per_start,
                "fatol": max(1e-8 * max(f0, 1.0), 1e-12),
                "xatol": 1e-8,
            },
        )
        total_evals += res.nfev
        if best is None or res.fun < best[0]:
            best = (res.fun, _from_unconstrained(res.x, bounds), bool(res.success), idx)
    fun, values, success, _ = best
    return fun, values, success, total_evals


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


def _heuristic_starts(series: ReturnSeries, init: VGPPParams, bounds,
                      atom_eps: float) -> list[np.ndarray]:
    inc = series.increments
    dt = series.dt
    n = len(inc)
    p0 = np.clip(np.mean(np.abs(inc) <= atom_eps), 0.5 / n, 1.0 - 0.5 / n)
    theta0 = float(inc.mean() / dt)
    sigma0 = float(np.sqrt(max(inc.var() / dt * 0.8, 1e-6)))
    starts = [np.array([init.theta, init.sigma, init.a, init.alpha])]
    for a0 in (0.2, 0.5, 0.8):
        alpha0 = np.log(p0) / (dt * np.log(a0))
        starts.append(np.array([theta0, sigma0, a0, alpha0]))
    starts.append(np.array([theta0 + 0.1, sigma0 * 1.5, init.a, init.alpha * 2.0]))
    return [_clip_to_bounds(s, bounds) for s in starts]


def mle_fit(series: ReturnSeries, init: VGPPParams, bounds=None,
            atom_eps: float = 1e-10) -> CalibResult:
    """Maximize the censored-mixture log-likelihood with multi-start search."""
    bounds = _merged_bounds(bounds)
    inc = series.increments
    if np.all(np.abs(inc) <= atom_eps):
        # Pure-atom data: the likelihood increases toward the a -> 1 boundary.
        a_hi = bounds["a"][1]
        alpha_lo = bounds["alpha"][0]
        params = constrained_params(init.theta, init.sigma, a_hi, alpha_lo)
        return CalibResult(
            params=params,
            objective=log_likelihood(params, series, atom_eps),
            converged=False,
            n_evals=0,
            p_zero=process.prob_zero_increment(params, series.dt),
            notes="degenerate series: all increments in the atom band; "
                  "a pushed to its upper bound",
        )

    def objective(values: np.ndarray) -> float:
        params = constrained_params(*values)
        return -log_likelihood(params, series, atom_eps)

    starts = _heuristic_starts(series, init, bounds, atom_eps)
    fun, values, success, n_evals = _minimize_multistart(objective, starts, bounds)
    params = constrained_params(*values)
    return CalibResult(
        params=params,
        objective=-fun,
        converged=success,
        n_evals=n_evals,
        p_zero=process.prob_zero_increment(params, series.dt),
    )


def gmm_fit(series: ReturnSeries, init: VGPPParams, bounds=None,
            weighting: str = "relative") -> CalibResult:
    """Match the first four moments of the increments.

    Minimizes the squared distance between theoretical and sample
    (mean, variance, skewness, kurtosis); ``weighting`` is "relative"
    (componentwise division by the sample moment) or "equal".
    """
    _require(len(series.increments) >= 100, "GMM needs at least 100 increments")
    _require(weighting in ("relative", "equal"), "weighting must be relative|equal")
    bounds = _merged_bounds(bounds)
    target = sample_moments(series.increments)
    scale = np.maximum(np.abs(target), 1e-12) if weighting == "relative" else np.ones(4)

    def objective(values: np.ndarray) -> float:
        params = constrained_params(*values)
        diff = (theoretical_moments(params, series.dt) - target) / scale
        return float(diff @ diff)

    starts = _heuristic_starts(series, init, bounds, atom_eps=1e-10)
    fun, values, success, n_evals = _minimize_multistart(objective, starts, bounds)
    params = constrained_params(*values)
    return CalibResult(
        params=params,
        objective=fun,
        converged=success,
        n_evals=n_evals,
        p_zero=process.prob_zero_increment(params, series.dt),
    )


def nlls_fit(quotes: QuoteSet, init: VGPPParams, bounds=None,
             pricer: str = "closed", dt: float = TRADING_DT) -> CalibResult:
    """Least-squares fit to quoted call prices.

    ``pricer`` selects the closed formula (evaluated through the collapsed
    mixture polynomial, which is smooth in the parameters down to its
    truncation tolerance) or the FFT inversion for the model prices.
    Parameter points where the martingale correction does not exist get a
    large finite penalty residual instead of raising.  ``dt`` only sets the
    frequency at which the reported p_zero is quoted.
    """
    _require(pricer in ("closed", "fft"), "pricer must be closed|fft")
    bounds = _merged_bounds(bounds)
    mids = np.array([q[2] for q in quotes.quotes])
    penalty = 1e3 * (1.0 + float(np.mean(mids)))
    fft_cfg = FFTConfig()
    by_maturity: dict[float, list[int]] = {}
    for i, (_, T, _) in enumerate(quotes.quotes):
        by_maturity.setdefault(T, []).append(i)

    def model_prices(params: VGPPParams) -> np.ndarray:
        out = np.empty(len(quotes.quotes))
        if pricer == "closed":
            for i, (K, T, _) in enumerate(quotes.quotes):
                out[i] = pricing.price_call_closed_mixture(params, quotes.market, K, T)
        else:
            for T, idx in by_maturity.items():
                strikes = [quotes.quotes[i][0] for i in idx]
                out[idx] = pricing.price_call_fft(params, quotes.market, strikes,
                                                  T, fft_cfg)
        return out

    def residuals(values: np.ndarray) -> np.ndarray:
        params = constrained_params(*values)
        try:
            return model_prices(params) - mids
        except ValueError:
            return np.full(len(mids), penalty)

    lo = np.array([bounds[n][0] for n in _PARAM_ORDER])
    hi = np.array([bounds[n][1] for n in _PARAM_ORDER])
    starts = [
        np.array([init.theta, init.sigma, init.a, init.alpha]),
        np.array([init.theta * 0.5, init.sigma * 1.5, 0.3, init.alpha * 0.5]),
    ]
    # evaluation budget of 10^4 split across the starts plus a polish stage
    best = None
    total_evals = 0
    per_start = 10_000 // (len(starts) + 1)
    for idx, start in enumerate(starts):
        res = least_squares(
            residuals,
            np.clip(start, lo + 1e-9, hi - 1e-9),
            bounds=(lo, hi),
            xtol=1e-12, ftol=1e-10, gtol=1e-12,
            max_nfev=per_start,
        )
        total_evals += res.nfev
        if best is None or res.cost < best[0]:
            best = (res.cost, res, idx)
    _, res, _ = best
    # polish with the unbounded Levenberg-Marquardt solver, which tracks the
    # nearly flat (a, alpha) valley much closer to the least-squares optimum;
    # keep the polish only if it stays inside the box and improves the cost
    try:
        polished = least_squares(residuals, res.x, method="lm",
                                 xtol=1e-15, ftol=1e-12, max_nfev=per_start)
        total_evals += polished.nfev
        if (polished.cost < res.cost
                and bool(np.all(polished.x > lo)) and bool(np.all(polished.x < hi))):
            res = polished
    except ValueError:
        pass
    params = constrained_params(*res.x)
    notes = ""
    if len(quotes.quotes) < len(_PARAM_ORDER):
        notes = (f"under-identified: {len(quotes.quotes)} quotes for "
                 f"{len(_PARAM_ORDER)} free parameters")
    return CalibResult(
        params=params,
        objective=float(2.0 * res.cost),  # sum of squared residuals
        converged=bool(res.success),
        n_evals=total_evals,
        p_zero=process.prob_zero_increment(params, dt),
        notes=notes,
        residuals=res.fun.copy(),
    )
