"""Seedable random streams and the base sampling laws used across the package.

Conventions
-----------
* Every gamma-family law is shape--rate parameterized: ``Gamma(shape, rate)``
  has mean ``shape / rate``.  Erlang(n, rate) is the integer-shape special
  case, Exp(rate) the unit-shape one.
* The Polya distribution is the negative binomial with *real* shape::

      P(S = k) = C(shape + k - 1, k) * (1 - p)**shape * p**k,   k = 0, 1, ...

  where ``p`` is the success probability and ``C`` the generalized binomial
  coefficient.  Sampling works for any real shape through the gamma--Poisson
  mixture ``S | L ~ Poisson(L)`` with ``L ~ Gamma(shape, (1 - p) / p)``.
* Probability-mass evaluations go through log-gamma arithmetic so that
  shapes of order 10^3 do not overflow.

Samplers are pure given an explicit :class:`RngStream`; identical
``(seed, stream_id)`` reproduce identical draws bit-exactly and distinct
stream ids give statistically independent streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


class RngStream:
    """A deterministic, partitionable random stream keyed by (seed, stream_id).

    Streams are value-like: moving one into a worker and drawing from it
    there gives the same numbers as drawing locally.  ``substream(k)``
    derives an independent child stream, used to parallelize batch work
    without changing results.
    """

    def __init__(self, seed: int, stream_id: int = 0, _subkey: tuple[int, ...] = ()):
        _require(seed >= 0, "seed must be a nonnegative integer")
        _require(stream_id >= 0, "stream_id must be a nonnegative integer")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._subkey = tuple(int(k) for k in _subkey)
        sequence = np.random.SeedSequence(
            entropy=self.seed, spawn_key=(self.stream_id, *self._subkey)
        )
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def substream(self, k: int) -> "RngStream":
        """Independent child stream ``k``; deterministic given this stream's key."""
        return RngStream(self.seed, self.stream_id, self._subkey + (int(k),))

    def fresh(self) -> "RngStream":
        """A new stream with this stream's key, rewound to the start."""
        return RngStream(self.seed, self.stream_id, self._subkey)

    def __repr__(self) -> str:  # pragma: no cover
        sub = f", subkey={self._subkey}" if self._subkey else ""
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}{sub})"


@dataclass(frozen=True)
class PolyaParams:
    """Polya (real-shape negative binomial) parameters."""

    shape: float
    success_prob: float

    def __post_init__(self):
        _require(self.shape > 0, "Polya shape must be positive")
        _require(0.0 < self.success_prob < 1.0, "Polya success_prob must lie in (0, 1)")


def polya_logpmf(params: PolyaParams, k) -> np.ndarray | float:
    """Log pmf of the Polya law, valid for real shape and large arguments."""
    k = np.asarray(k)
    _require(np.all(k >= 0), "k must be nonnegative")
    shape, p = params.shape, params.success_prob
    out = (
        gammaln(shape + k)
        - gammaln(k + 1.0)
        - gammaln(shape)
        + shape * np.log1p(-p)
        + k * np.log(p)
    )
    return out if out.ndim else float(out)


def polya_pmf(params: PolyaParams, k) -> np.ndarray | float:
    """P(S = k) for the Polya law; sums to one over k = 0, 1, ..."""
    out = np.exp(polya_logpmf(params, k))
    return out if np.ndim(out) else float(out)


def polya_sample(params: PolyaParams, rng: RngStream, size=None):
    """Draw from the Polya law via the gamma--Poisson mixture.

    Exact for every real shape: ``S | L ~ Poisson(L)`` with
    ``L ~ Gamma(shape, rate=(1 - p)/p)`` marginalizes to the Polya pmf.
    """
    gen = rng.generator
    p = params.success_prob
    lam = gen.gamma(params.shape, p / (1.0 - p), size=size)
    out = gen.poisson(lam)
    return out if size is not None else int(out)


def beta_binomial_logpmf(a: float, b: float, k: int, j) -> np.ndarray | float:
    j = np.asarray(j)
    out = (
        gammaln(k + 1.0)
        - gammaln(j + 1.0)
        - gammaln(k - j + 1.0)
        + betaln(a + j, b + k - j)
        - betaln(a, b)
    )
    return out if out.ndim else float(out)


def beta_binomial_pmf(a: float, b: float, k: int, j) -> np.ndarray | float:
    """pmf C(k, j) B(a + j, b + k - j) / B(a, b) on j = 0..k."""
    out = np.exp(beta_binomial_logpmf(a, b, k, j))
    return out if np.ndim(out) else float(out)


def beta_binomial_sample(a: float, b: float, k: int, rng: RngStream, size=None):
    """Two-stage draw: p ~ Beta(a, b), then Binomial(k, p)."""
    _require(a > 0 and b > 0, "beta-binomial shapes must be positive")
    _require(k >= 0, "beta-binomial count k must be nonnegative")
    gen = rng.generator
    if k == 0:
        return np.zeros(size, dtype=np.int64) if size is not None else 0
    p = gen.beta(a, b, size=size)
    out = gen.binomial(k, p)
    return out if size is not None else int(out)


def gamma_sample(shape: float, rate: float, rng: RngStream, size=None):
    """Gamma(shape, rate) draw; mean shape/rate."""
    _require(shape > 0, "gamma shape must be positive")
    _require(rate > 0, "gamma rate must be positive")
    out = rng.generator.gamma(shape, 1.0 / rate, size=size)
    return out if size is not None else float(out)


def beta_sample(a: float, b: float, rng: RngStream, size=None):
    _require(a > 0 and b > 0, "beta shapes must be positive")
    out = rng.generator.beta(a, b, size=size)
    return out if size is not None else float(out)


def exp_sample(rate: float, rng: RngStream, size=None):
    """Exponential(rate) draw; mean 1/rate."""
    _require(rate > 0, "exponential rate must be positive")
    out = rng.generator.standard_exponential(size=size) / rate
    return out if size is not None else float(out)


def poisson_sample(mean: float, rng: RngStream, size=None):
    _require(mean >= 0, "Poisson mean must be nonnegative")
    out = rng.generator.poisson(mean, size=size)
    return out if size is not None else int(out)


def normal_sample(mean: float, variance: float, rng: RngStream, size=None):
    """Normal draw parameterized by mean and *variance*."""
    _require(variance > 0, "normal variance must be positive")
    out = rng.generator.normal(mean, np.sqrt(variance), size=size)
    return out if size is not None else float(out)


def binomial_sample(n: int, p: float, rng: RngStream, size=None):
    _require(n >= 0, "binomial count must be nonnegative")
    _require(0.0 <= p <= 1.0, "binomial probability must lie in [0, 1]")
    out = rng.generator.binomial(n, p, size=size)
    return out if size is not None else int(out)
