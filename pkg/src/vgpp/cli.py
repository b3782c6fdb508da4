"""Command-line front-end: simulate, price, calibrate, exotics, multivariate runs.

Every stochastic command requires an explicit ``--seed``; given the same
configuration and seed, outputs are byte-identical.  Options can come from
a JSON config file (``--config``); explicitly passed flags take precedence
over config values, which take precedence over built-in defaults.  The
``VGPP_THREADS`` environment variable sets the Monte Carlo worker count and
never changes numerical output.  Exit codes: 0 success, 1 numerical
failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import calibration, exotics, gammapp, multivariate, pricing, process
from .calibration import QuoteSet, ReturnSeries, constrained_params
from .distributions import RngStream
from .exotics import LSMCConfig
from .gammapp import GammaPPParams
from .multivariate import MultiGPPParams
from .paths import SamplePath
from .pricing import MarketModel
from .process import VGPPParams

SCHEMA_VERSION = 1

PRICE_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "method", "params", "K", "T", "price"],
    "properties": {
        "schema_version": {"type": "integer"},
        "method": {"enum": ["closed", "fft", "mc"]},
        "params": {"type": "object"},
        "K": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "price": {"type": "number", "minimum": 0},
        "stderr": {"type": "number", "minimum": 0},
        "terms_used": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": True,
}

TRIANGLE_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "params", "grid", "max_abs_closed_fft"],
    "properties": {
        "schema_version": {"type": "integer"},
        "params": {"type": "object"},
        "grid": {"type": "array", "items": {"type": "object"}},
        "max_abs_closed_fft": {"type": "number"},
        "max_mc_deviation_se": {"type": "number"},
    },
}

CALIB_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "method", "theta", "sigma", "a", "alpha",
                 "beta", "objective", "converged", "n_evals", "p_zero"],
    "properties": {
        "schema_version": {"type": "integer"},
        "method": {"enum": ["mle", "gmm", "nlls"]},
        "p_zero": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "additionalProperties": True,
}

EXOTIC_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "contract", "params", "config", "price", "stderr"],
    "properties": {
        "schema_version": {"type": "integer"},
        "contract": {"enum": ["american_put", "lookback_call_max"]},
        "price": {"type": "number"},
        "stderr": {"type": "number", "minimum": 0},
    },
    "additionalProperties": True,
}

SIM_SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "process", "direction", "n_paths", "terminal"],
    "properties": {
        "schema_version": {"type": "integer"},
        "process": {"enum": ["gpp", "vgpp"]},
        "direction": {"enum": ["forward", "backward"]},
        "terminal": {"type": "object"},
    },
}


class UsageError(Exception):
    """Bad configuration or unreadable input; maps to exit code 2."""


class Options:
    """Option resolution: explicit flag > config file value > built-in default."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self._args = args
        self._config = config

    def get(self, name: str, default=None, required: bool = False, cast=None):
        value = getattr(self._args, name, None)
        if value is None:
            value = self._config.get(name, default)
        if value is None and required:
            raise UsageError(f"--{name.replace('_', '-')} is required "
                             f"(directly or via --config)")
        if cast is not None and value is not None:
            try:
                value = cast(value)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for --{name.replace('_', '-')}: {exc}")
        return value

    def flag(self, name: str) -> bool:
        return bool(getattr(self._args, name, False) or self._config.get(name, False))

    def seed(self) -> int:
        value = self.get("seed", required=False, cast=int)
        if value is None:
            raise UsageError("this command is stochastic: --seed is required")
        return value


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _write_json(payload: dict, path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _vgpp_params(raw: dict) -> VGPPParams:
    try:
        return VGPPParams(theta=float(raw["theta"]), sigma=float(raw["sigma"]),
                          a=float(raw["a"]), alpha=float(raw["alpha"]),
                          beta=float(raw["beta"]))
    except KeyError as exc:
        raise UsageError(f"params file is missing key {exc}") from exc


def _gpp_params(raw: dict) -> GammaPPParams:
    try:
        return GammaPPParams(a=float(raw["a"]), alpha=float(raw["alpha"]),
                             beta=float(raw["beta"]))
    except KeyError as exc:
        raise UsageError(f"params file is missing key {exc}") from exc


def _market(raw: dict, opt: Options) -> MarketModel:
    f0 = opt.get("f0", default=raw.get("F0"), cast=float)
    r = opt.get("rate", default=raw.get("r"), cast=float)
    if f0 is None or r is None:
        raise UsageError("market state requires F0 and r (flags --f0/--rate or params file)")
    return MarketModel(F0=f0, r=r)


def _params_dict(params: VGPPParams) -> dict:
    return {"theta": params.theta, "sigma": params.sigma, "a": params.a,
            "alpha": params.alpha, "beta": params.beta}


def _load_params(opt: Options) -> dict:
    return _load_json(opt.get("params", required=True))


def _grid(opt: Options) -> np.ndarray:
    steps = opt.get("steps", default=250, cast=int)
    horizon = opt.get("horizon", default=1.0, cast=float)
    if steps < 1:
        raise UsageError("--steps must be a positive integer")
    if horizon <= 0:
        raise UsageError("--horizon must be positive")
    return np.linspace(0.0, horizon, steps + 1)


def _moments(values: np.ndarray) -> dict:
    m = float(values.mean())
    c = values - m
    m2 = float(np.mean(c**2))
    out = {"mean": m, "variance": m2}
    if m2 > 0:
        out["skewness"] = float(np.mean(c**3) / m2**1.5)
        out["kurtosis"] = float(np.mean(c**4) / m2**2)
    out["zero_fraction"] = float(np.mean(values == 0.0))
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(opt: Options) -> int:
    raw = _load_params(opt)
    seed = opt.seed()
    n = opt.get("paths", required=True, cast=int)
    if n < 1:
        raise UsageError("--paths must be a positive integer")
    grid = _grid(opt)
    proc = opt.get("process", default="vgpp")
    direction = opt.get("direction", default="forward")
    summary_only = opt.flag("summary_only")
    out_dir = opt.get("out", default="paths")
    rng = RngStream(seed)
    if not summary_only and n > 10_000:
        raise UsageError("refusing to write more than 10000 path files; "
                         "use --summary-only for large batches")

    if proc == "gpp":
        params = _gpp_params(raw)
        if direction == "forward":
            z = gammapp.forward_values(params, grid, rng, n)
        else:
            z, _ = gammapp.backward_values(params, grid, rng, n)
        x = None
        terminal = z[-1]
    else:
        params = _vgpp_params(raw)
        runner = (process.forward_values if direction == "forward"
                  else process.backward_values)
        z, x = runner(params, grid, rng, n)
        terminal = x[-1]

    if not summary_only:
        os.makedirs(out_dir, exist_ok=True)
        for i in range(n):
            sp = SamplePath(grid=grid, z_values=z[:, i],
                            x_values=None if x is None else x[:, i],
                            seed_info=(seed, 0))
            sp.to_csv(os.path.join(out_dir, f"path_{i:06d}.csv"))

    summary = {
        "schema_version": SCHEMA_VERSION,
        "process": proc,
        "direction": direction,
        "n_paths": n,
        "horizon": float(grid[-1]),
        "steps": len(grid) - 1,
        "seed": seed,
        "terminal": _moments(terminal),
    }
    summary_path = opt.get("summary")
    if summary_path:
        _write_json(summary, summary_path)
    print(f"simulated {n} {proc} paths ({direction}); "
          f"terminal mean {summary['terminal']['mean']:.6f}")
    return 0


def cmd_price(opt: Options) -> int:
    raw = _load_params(opt)
    params = _vgpp_params(raw)
    market = _market(raw, opt)
    method = opt.get("method", required=True)
    K = opt.get("strike", required=True, cast=float)
    T = opt.get("maturity", required=True, cast=float)
    report = {
        "schema_version": SCHEMA_VERSION,
        "method": method,
        "params": _params_dict(params),
        "market": {"F0": market.F0, "r": market.r},
        "K": K,
        "T": T,
    }
    if method == "closed":
        cutoff = opt.get("cutoff", default=1e-4, cast=float)
        price, terms = pricing.price_call_closed_terms(params, market, K, T, cutoff)
        report["price"] = price
        report["terms_used"] = terms
    elif method == "fft":
        report["price"] = float(pricing.price_call_fft(params, market, [K], T)[0])
    else:
        seed = opt.seed()
        n = opt.get("mc_paths", default=1_000_000, cast=int)
        price, se = pricing.price_call_mc(params, market, K, T, n, RngStream(seed))
        report["price"] = price
        report["stderr"] = se
        report["seed"] = seed
    _write_json(report, opt.get("out", default="-"))
    return 0


def cmd_triangle(opt: Options) -> int:
    raw = _load_params(opt)
    params = _vgpp_params(raw)
    market = _market(raw, opt)
    seed = opt.seed()
    strikes = [float(s) for s in str(opt.get("strikes", default="80,90,100,110,120")).split(",")]
    maturities = [float(s) for s in str(opt.get("maturities", default="0.25,0.5,1.0")).split(",")]
    mc_paths = opt.get("mc_paths", default=1_000_000, cast=int)
    rng = RngStream(seed)
    rows = []
    worst_fft = 0.0
    worst_mc = 0.0
    for ti, T in enumerate(maturities):
        fft_prices = pricing.price_call_fft(params, market, strikes, T)
        for ki, (K, fp) in enumerate(zip(strikes, fft_prices)):
            cp = pricing.price_call_closed(params, market, K, T)
            mc, se = pricing.price_call_mc(params, market, K, T, mc_paths,
                                           rng.substream(ti * 1000 + ki))
            rows.append({"K": K, "T": T, "closed": cp, "fft": float(fp),
                         "mc": mc, "mc_stderr": se,
                         "err_fft": float(fp) - cp, "err_mc": mc - cp})
            worst_fft = max(worst_fft, abs(fp - cp))
            if se > 0:
                worst_mc = max(worst_mc, abs(mc - cp) / se)
    report = {
        "schema_version": SCHEMA_VERSION,
        "params": _params_dict(params),
        "market": {"F0": market.F0, "r": market.r},
        "mc_paths": mc_paths,
        "seed": seed,
        "grid": rows,
        "max_abs_closed_fft": worst_fft,
        "max_mc_deviation_se": worst_mc,
    }
    csv_path = opt.get("csv")
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("K,T,closed,fft,mc,mc_stderr,err_fft,err_mc\n")
            for row in rows:
                fh.write(",".join(format(row[k], ".17g") for k in
                                  ("K", "T", "closed", "fft", "mc", "mc_stderr",
                                   "err_fft", "err_mc")) + "\n")
    _write_json(report, opt.get("out", default="-"))
    print(f"triangle: max |closed-FFT| = {worst_fft:.2e}, "
          f"max |closed-MC|/se = {worst_mc:.2f}")
    return 0


def cmd_calibrate(opt: Options) -> int:
    method = opt.get("method", required=True)
    dt = opt.get("dt", default=1.0 / 252.0, cast=float)
    init = constrained_params(
        *(float(v) for v in str(opt.get("init", default="0.0,0.2,0.5,100.0")).split(",")))
    if method in ("mle", "gmm"):
        path = opt.get("input", required=True)
        try:
            series = ReturnSeries.from_csv(path, dt=dt)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        if method == "mle":
            atom_eps = opt.get("atom_eps", default=1e-10, cast=float)
            result = calibration.mle_fit(series, init, atom_eps=atom_eps)
        else:
            result = calibration.gmm_fit(series, init)
    else:
        quotes_path = opt.get("quotes", required=True)
        market = _market({}, opt)
        try:
            quotes = QuoteSet.from_csv(quotes_path, market)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        pricer = opt.get("pricer", default="closed")
        result = calibration.nlls_fit(quotes, init, pricer=pricer, dt=dt)
    report = {"schema_version": SCHEMA_VERSION, "method": method,
              "dt": dt, **result.as_dict()}
    _write_json(report, opt.get("out", default="-"))
    print(f"P(zero increment over dt={dt:g}) = {result.p_zero:.4f}")
    print(f"theta={result.params.theta:.6g} sigma={result.params.sigma:.6g} "
          f"a={result.params.a:.6g} alpha={result.params.alpha:.6g} "
          f"converged={result.converged}")
    return 0


def cmd_exotic(opt: Options) -> int:
    raw = _load_params(opt)
    params = _vgpp_params(raw)
    market = _market(raw, opt)
    seed = opt.seed()
    contract = opt.get("contract", required=True)
    K = opt.get("strike", required=True, cast=float)
    T = opt.get("maturity", required=True, cast=float)
    steps = opt.get("steps", default=64, cast=int)
    n_paths = opt.get("paths", default=100_000, cast=int)
    direction = opt.get("direction", default="forward")
    rng = RngStream(seed)
    report = {
        "schema_version": SCHEMA_VERSION,
        "contract": contract,
        "params": _params_dict(params),
        "market": {"F0": market.F0, "r": market.r},
        "config": {"K": K, "T": T, "steps": steps, "paths": n_paths,
                   "seed": seed, "direction": direction},
    }
    if contract == "american_put":
        cfg = LSMCConfig(n_paths=n_paths, n_steps=steps,
                         basis_degree=opt.get("basis_degree", default=3, cast=int),
                         direction=direction)
        price, se = exotics.price_american_put_lsmc(params, market, K, T, cfg, rng)
        report["price"], report["stderr"] = price, se
        sweep = opt.get("sweep")
        if sweep:
            try:
                lo, hi, count = str(sweep).split(":")
                f0_values = np.linspace(float(lo), float(hi), int(count))
            except ValueError as exc:
                raise UsageError(f"bad --sweep (want lo:hi:count): {exc}") from exc
            sweep_rows = []
            for i, f0 in enumerate(f0_values):
                mkt_i = MarketModel(F0=float(f0), r=market.r)
                p_i, se_i = exotics.price_american_put_lsmc(
                    params, mkt_i, K, T, cfg, rng.substream(i))
                sweep_rows.append({"F0": float(f0), "price": p_i, "stderr": se_i,
                                   "intrinsic": max(K - float(f0), 0.0)})
            report["sweep"] = sweep_rows
            csv_path = opt.get("csv")
            if csv_path:
                with open(csv_path, "w", encoding="utf-8") as fh:
                    fh.write("F0,price,stderr,intrinsic\n")
                    for row in sweep_rows:
                        fh.write(",".join(format(row[k], ".17g") for k in
                                          ("F0", "price", "stderr", "intrinsic")) + "\n")
    elif contract == "lookback_call_max":
        price, se = exotics.price_lookback_call_max(params, market, K, T,
                                                    steps, n_paths, rng)
        report["price"], report["stderr"] = price, se
    else:  # pragma: no cover - argparse already restricts choices
        raise UsageError(f"unknown contract {contract!r}; valid contracts: "
                         "american_put, lookback_call_max")
    _write_json(report, opt.get("out", default="-"))
    print(f"{contract}: price = {report['price']:.6f} +- {report['stderr']:.6f}")
    return 0


def cmd_multisim(opt: Options) -> int:
    raw = _load_params(opt)
    seed = opt.seed()
    n = opt.get("paths", required=True, cast=int)
    if n < 1:
        raise UsageError("--paths must be a positive integer")
    try:
        assets = tuple((float(a["alpha"]), float(a["c"])) for a in raw["assets"])
        params = MultiGPPParams(a=float(raw["a"]),
                                alpha_common=float(raw["alpha_common"]),
                                beta=float(raw["beta"]), assets=assets)
    except KeyError as exc:
        raise UsageError(f"multivariate params file is missing key {exc}") from exc
    brownian = None
    if "brownian" in raw:
        brownian = [(float(b["theta"]), float(b["sigma"])) for b in raw["brownian"]]
    grid = _grid(opt)
    out_dir = opt.get("out", default="multi_paths")
    os.makedirs(out_dir, exist_ok=True)
    for i in range(n):
        rng = RngStream(seed, stream_id=i)
        if brownian is None:
            sample_paths = multivariate.sample_subordinator(params, grid, rng)
        else:
            sample_paths = multivariate.sample_vgpp(params, brownian, grid, rng)
        multivariate.write_multi_csv(sample_paths,
                                     os.path.join(out_dir, f"multi_{i:06d}.csv"))
    print(f"wrote {n} multivariate paths to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_market_flags(sp):
    sp.add_argument("--f0", type=float, default=None, help="initial forward price")
    sp.add_argument("--rate", type=float, default=None, help="risk-free rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vgpp",
        description="Simulation, pricing and calibration for the Gamma++ clocked model",
    )
    parser.add_argument("--config", default=None,
                        help="JSON file of option defaults (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="simulate subordinator or price-process paths")
    sp.add_argument("--params", help="JSON parameter file")
    sp.add_argument("--process", choices=["gpp", "vgpp"], default=None)
    sp.add_argument("--direction", choices=["forward", "backward"], default=None)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--paths", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--summary", default=None, help="write moment summary JSON here")
    sp.add_argument("--summary-only", action="store_true",
                    help="skip per-path CSV files")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("price", help="price a European call")
    sp.add_argument("--params")
    sp.add_argument("--method", choices=["closed", "fft", "mc"], default=None)
    sp.add_argument("--strike", type=float, default=None)
    sp.add_argument("--maturity", type=float, default=None)
    sp.add_argument("--cutoff", type=float, default=None)
    sp.add_argument("--mc-paths", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    _add_market_flags(sp)
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("triangle",
                        help="closed vs FFT vs MC sweep over strikes and maturities")
    sp.add_argument("--params")
    sp.add_argument("--strikes", default=None)
    sp.add_argument("--maturities", default=None)
    sp.add_argument("--mc-paths", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--csv", default=None, help="plot-ready CSV output")
    _add_market_flags(sp)
    sp.set_defaults(func=cmd_triangle)

    sp = sub.add_parser("calibrate", help="fit parameters to returns or quotes")
    sp.add_argument("--method", choices=["mle", "gmm", "nlls"], default=None)
    sp.add_argument("--input", default=None, help="date,price CSV (mle/gmm)")
    sp.add_argument("--quotes", default=None, help="K,T,mid CSV (nlls)")
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--atom-eps", type=float, default=None)
    sp.add_argument("--init", default=None, help="starting theta,sigma,a,alpha")
    sp.add_argument("--pricer", choices=["closed", "fft"], default=None)
    sp.add_argument("--out", default=None)
    _add_market_flags(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("exotic", help="price an American put or lookback call")
    sp.add_argument("--contract", choices=["american_put", "lookback_call_max"],
                    default=None)
    sp.add_argument("--params")
    sp.add_argument("--strike", type=float, default=None)
    sp.add_argument("--maturity", type=float, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--paths", type=int, default=None)
    sp.add_argument("--basis-degree", type=int, default=None)
    sp.add_argument("--direction", choices=["forward", "backward"], default=None)
    sp.add_argument("--sweep", default=None, help="F0 sweep as lo:hi:count")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--csv", default=None)
    _add_market_flags(sp)
    sp.set_defaults(func=cmd_exotic)

    sp = sub.add_parser("multisim", help="simulate the coupled multivariate subordinator")
    sp.add_argument("--params", help="multivariate JSON parameter file")
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--paths", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_multisim)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_json(args.config) if args.config else {}
        if not isinstance(config, dict):
            raise UsageError("--config must contain a JSON object")
        config = {str(k).replace("-", "_"): v for k, v in config.items()}
        return args.func(Options(args, config))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
