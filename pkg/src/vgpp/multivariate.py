"""Multivariate Gamma++ subordinator with a common factor.

Each component is H_i(t) = X_i(t) + c_i Z(t) with independent idiosyncratic
Gamma++ processes X_i ~ (a, alpha_i t, beta / c_i) and a shared factor
Z ~ (a, alpha t, beta).  The scaling law c Z ~ (a, alpha, beta / c) and the
shape-additivity of independent same-(a, beta) components give marginals
H_i(t) ~ Gamma++(a, (alpha_i + alpha) t, beta / c_i) exactly; dependence
comes solely from the common factor.

``sample_vgpp`` additionally subordinates per-asset Brownian motions by the
H_i clocks.  That layer is a natural extension of the univariate model, not
part of its pricing theory; no pricing claims are attached to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gammapp
from .distributions import RngStream, _require
from .gammapp import GammaPPParams
from .paths import SamplePath, validate_grid


@dataclass(frozen=True)
class MultiGPPParams:
    """Common factor (a, alpha_common, beta) plus per-asset (alpha_i, c_i).

    The self-decomposability parameter ``a`` is shared by every component;
    ``alpha_i`` may be zero (a pure common-factor asset), ``c_i`` must be
    positive.
    """

    a: float
    alpha_common: float
    beta: float
    assets: tuple

    def __post_init__(self):
        _require(0.0 < self.a < 1.0, "a must lie in (0, 1)")
        _require(self.alpha_common > 0, "alpha_common must be positive")
        _require(self.beta > 0, "beta must be positive")
        _require(len(self.assets) >= 1, "need at least one asset")
        for alpha_i, c_i in self.assets:
            _require(alpha_i >= 0, "idiosyncratic alpha_i must be nonnegative")
            _require(c_i > 0, "loading c_i must be positive")

    @property
    def n_assets(self) -> int:
        return len(self.assets)


def marginal_params(params: MultiGPPParams, i: int) -> GammaPPParams:
    """Exact marginal law of H_i: Gamma++(a, alpha_i + alpha_common, beta / c_i)."""
    _require(0 <= i < params.n_assets, f"asset index {i} out of range")
    alpha_i, c_i = params.assets[i]
    return GammaPPParams(params.a, alpha_i + params.alpha_common, params.beta / c_i)


def subordinator_values(params: MultiGPPParams, grid, rng: RngStream,
                        n_paths: int) -> np.ndarray:
    """Batch draw of H: array of shape (n_assets, len(grid), n_paths).

    The common factor uses substream 0, asset i uses substream i + 1, so the
    partition is deterministic and components can be extended without
    disturbing each other.
    """
    grid = validate_grid(grid)
    common = GammaPPParams(params.a, params.alpha_common, params.beta)
    z = gammapp.forward_values(common, grid, rng.substream(0), n_paths)
    out = np.empty((params.n_assets, len(grid), n_paths))
    for i, (alpha_i, c_i) in enumerate(params.assets):
        if alpha_i > 0:
            idio = GammaPPParams(params.a, alpha_i, params.beta / c_i)
            x_i = gammapp.forward_values(idio, grid, rng.substream(i + 1), n_paths)
        else:
            x_i = np.zeros((len(grid), n_paths))
        out[i] = x_i + c_i * z
    return out


def sample_subordinator(params: MultiGPPParams, grid, rng: RngStream) -> list[SamplePath]:
    """One coupled draw of all components, as a list of SamplePath."""
    h = subordinator_values(params, grid, rng, n_paths=1)
    grid = np.asarray(grid, dtype=float)
    return [
        SamplePath(grid=grid, z_values=h[i, :, 0],
                   seed_info=(rng.seed, rng.stream_id))
        for i in range(params.n_assets)
    ]


def vgpp_values(params: MultiGPPParams, brownian, grid, rng: RngStream,
                n_paths: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-asset Brownian motion run on the H_i clocks.

    ``brownian`` is a sequence of (theta_i, sigma_i).  Returns (H, X) arrays
    of shape (n_assets, len(grid), n_paths).  Increments of X_i are exactly
    zero whenever the H_i clock does not move.
    """
    _require(len(brownian) == params.n_assets,
             "need one (theta, sigma) pair per asset")
    for theta_i, sigma_i in brownian:
        _require(sigma_i > 0, "sigma_i must be positive")
    h = subordinator_values(params, grid, rng, n_paths)
    x = np.zeros_like(h)
    gen = rng.substream(params.n_assets + 1).generator
    for i, (theta_i, sigma_i) in enumerate(brownian):
        dh = np.diff(h[i], axis=0)
        dx = theta_i * dh + sigma_i * np.sqrt(dh) * gen.standard_normal(dh.shape)
        x[i, 1:] = np.cumsum(dx, axis=0)
    return h, x


def sample_vgpp(params: MultiGPPParams, brownian, grid, rng: RngStream) -> list[SamplePath]:
    """One coupled multivariate draw with the Brownian layer."""
    h, x = vgpp_values(params, brownian, grid, rng, n_paths=1)
    grid = np.asarray(grid, dtype=float)
    return [
        SamplePath(grid=grid, z_values=h[i, :, 0], x_values=x[i, :, 0],
                   seed_info=(rng.seed, rng.stream_id))
        for i in range(params.n_assets)
    ]


def write_multi_csv(paths: list[SamplePath], out_path) -> None:
    """Serialize coupled subordinator paths as ``t,h_1,...,h_n`` rows."""
    grid = paths[0].grid
    with_x = all(p.x_values is not None for p in paths)
    header = "t," + ",".join(f"h_{i + 1}" for i in range(len(paths)))
    if with_x:
        header += "," + ",".join(f"x_{i + 1}" for i in range(len(paths)))
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row_idx, t in enumerate(grid):
            cells = [format(t, ".17g")]
            cells += [format(p.z_values[row_idx], ".17g") for p in paths]
            if with_x:
                cells += [format(p.x_values[row_idx], ".17g") for p in paths]
            fh.write(",".join(cells) + "\n")
