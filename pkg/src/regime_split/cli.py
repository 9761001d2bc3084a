"""Command-line entry point: ``regime-split <command> [flags]``.

Every command loads the data, calls one builder in :mod:`regime_split.pipeline`
and writes the returned documents. Errors are reported as one JSON object on
standard error; the exit code is 2 for input problems, 3 for estimation
failures and 4 for contract violations.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .dataio import Quarter, load_dataset
from .errors import ContractError, InputError, RegimeSplitError
from .factorsplit import FactorSpec
from .multiplier import INSTRUMENTS
from .serialize import csv_text, dumps, atomic_write
from .simulate import DgpSpec
from .threshold import GridSpec

logger = logging.getLogger("regime_split")

# flag defaults; a value of None means "not given" so config entries can fill it
DEFAULTS = {
    "grid": "observed",
    "trim": None,
    "boot": None,  # 2000 for test-threshold, 499 inside simulate
    "level": 0.95,
    "lag_order": 4,
    "horizons": 19,
    "instrument": "all",
    "spend": 500.0,
    "tau_baseline": 6.5,
    "raw": False,
    "reps": 200,
    "estimator": "threshold",
    "T": 400,
    "tau_star": 7.0,
    "delta": 1.0,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--config", help="JSON file with flag values; flags win on conflict")
    g.add_argument("--data", help="input CSV")
    g.add_argument("--schema", help="JSON mapping of logical to actual column names")
    g.add_argument("--raw", action="store_true", default=None,
                   help="GDP, spending and news are raw levels; scale by a fitted trend")
    g.add_argument("--out", help="output directory")
    g.add_argument("--seed", type=int)
    g.add_argument("--grid", help="'observed' or 'equally-spaced:N'")
    g.add_argument("--trim", type=float, help="quantile trim on each side (default 0.05)")
    g.add_argument("--boot", type=int, help="bootstrap replications B")
    g.add_argument("--tau", type=float, help="threshold override")
    g.add_argument("--instrument", help=f"one of {', '.join(INSTRUMENTS)} or 'all'")
    g.add_argument("--spend", type=float, help="immediate spending for the counterfactual")
    g.add_argument("--threads", type=int, help="worker threads (default REGIME_SPLIT_THREADS)")
    g.add_argument("--lag-order", dest="lag_order", type=int)
    g.add_argument("--level", type=float, help="confidence level")
    g.add_argument("-v", "--verbose", action="store_true", default=None)

    p = argparse.ArgumentParser(prog="regime-split",
                                description="Threshold regression and state-dependent multipliers.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("estimate-threshold", parents=[common], help="profile the threshold")
    c.add_argument("--cap", type=float, help="also rescan below this value")
    c = sub.add_parser("test-threshold", parents=[common], help="bootstrap sup-Wald test")
    c.add_argument("--cap", type=float, help="restrict the sample to threshold values below cap")
    c = sub.add_parser("irf", parents=[common], help="state-dependent impulse responses")
    c.add_argument("--horizons", type=int, help="last horizon H")
    c = sub.add_parser("multipliers", parents=[common], help="cumulative multipliers")
    c.add_argument("--tau-baseline", dest="tau_baseline", type=float,
                   help="threshold of the second panel (default 6.5)")
    c = sub.add_parser("factor-split", parents=[common], help="time-varying threshold")
    c.add_argument("--break", dest="break_", help="dummy break quarter, e.g. 1945Q4")
    c.add_argument("--lam", type=float, help="penalty on the time factor")
    c = sub.add_parser("simulate", parents=[common], help="Monte Carlo on a synthetic DGP")
    c.add_argument("--reps", type=int)
    c.add_argument("--estimator", choices=("threshold", "supwald"))
    c.add_argument("--T", dest="T", type=int)
    c.add_argument("--tau-star", dest="tau_star", type=float)
    c.add_argument("--delta", type=float)
    return p


def _config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    if "break" in cfg:
        cfg["break_"] = cfg.pop("break")
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    return cfg


def _grid(cfg) -> GridSpec:
    try:
        return GridSpec.parse(str(cfg["grid"]), cfg.get("trim"))
    except ValueError as exc:
        raise ContractError(str(exc)) from None


def _need(cfg, key, why):
    if cfg.get(key) is None:
        raise ContractError(f"--{key} is required {why}")
    return cfg[key]


def _boot(cfg, default):
    B = default if cfg.get("boot") is None else int(cfg["boot"])
    if B < 1:
        raise ContractError("--boot must be at least 1")
    return B


def _dataset(cfg):
    path = Path(_need(cfg, "data", "for this command"))
    schema = None
    if cfg.get("schema"):
        try:
            schema = json.loads(Path(cfg["schema"]).read_text())
        except OSError as exc:
            raise InputError(f"cannot read schema {cfg['schema']}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"schema {cfg['schema']} is not valid JSON: {exc}") from None
    return load_dataset(path, schema, scaled=not cfg.get("raw"))


def _tau(cfg, dataset, grid):
    if cfg.get("tau") is not None:
        return float(cfg["tau"])
    doc, _, _ = pipeline.estimate_threshold(dataset, grid, lag_order=cfg["lag_order"])
    return doc["threshold"]["tau_hat"]


class _Writer:
    """Collects outputs and writes them only once the command has succeeded."""

    def __init__(self, out):
        self.out = Path(out)
        self.files = {}

    def json(self, name, obj):
        self.files[name] = dumps(obj)

    def csv(self, name, header, rows):
        self.files[name] = csv_text(header, rows)

    def commit(self):
        for name, text in self.files.items():
            atomic_write(self.out / name, text)
        return sorted(self.files)


def cmd_estimate_threshold(cfg, w):
    grid = _grid(cfg)
    doc, rows, sub_rows = pipeline.estimate_threshold(
        _dataset(cfg), grid, cfg["level"], cfg.get("cap"), cfg["lag_order"])
    w.json("threshold.json", doc)
    w.csv("profile.csv", pipeline.PROFILE_HEADER, rows)
    if sub_rows is not None:
        w.csv("profile_capped.csv", pipeline.PROFILE_HEADER, sub_rows)


def cmd_test_threshold(cfg, w):
    seed = _need(cfg, "seed", "for bootstrap commands")
    B = _boot(cfg, 2000)
    doc, rows = pipeline.test_threshold(_dataset(cfg), seed, B, _grid(cfg),
                                        cfg.get("cap"), cfg["lag_order"], cfg.get("threads"))
    w.json("supwald.json", doc)
    w.csv("waldcurve.csv", ("tau", "wald", "critical_95"), rows)


def cmd_irf(cfg, w):
    dataset = _dataset(cfg)
    tau = _tau(cfg, dataset, _grid(cfg))
    doc, tables = pipeline.impulse_responses(dataset, tau, cfg["horizons"], cfg["level"],
                                             cfg["lag_order"])
    w.json("irf.json", doc)
    for resp, rows in tables.items():
        w.csv(f"irf_{resp}.csv", pipeline.IRF_HEADER, rows)


def _instruments(cfg):
    inst = cfg["instrument"]
    if inst == "all":
        return INSTRUMENTS
    names = tuple(s.strip() for s in str(inst).split(","))
    for n in names:
        if n not in INSTRUMENTS:
            raise ContractError(f"unknown instrument {n!r}; choose from {INSTRUMENTS} or 'all'")
    return names


def cmd_multipliers(cfg, w):
    dataset = _dataset(cfg)
    tau = _tau(cfg, dataset, _grid(cfg))
    doc, t1, t2, f4 = pipeline.multipliers(dataset, tau, cfg["tau_baseline"], _instruments(cfg),
                                           cfg["spend"], cfg["lag_order"])
    w.json("multipliers.json", doc)
    w.csv("table1.csv", ("panel", "tau", "instrument", "years", "high", "high_se",
                         "low", "low_se", "diff_pvalue"), t1)
    w.csv("table2.csv", ("years", "gdp_high", "gdp_low", "difference"), t2)
    w.csv("fig4.csv", ("panel", "tau", "h", "state", "multiplier", "lo", "hi"), f4)


def cmd_factor_split(cfg, w):
    kw = {"grid": _grid(cfg)}
    if cfg.get("break_"):
        try:
            kw["dummy_break"] = Quarter.parse(str(cfg["break_"]))
        except ValueError as exc:
            raise ContractError(str(exc)) from None
    doc = pipeline.factor_split(_dataset(cfg), FactorSpec(**kw), cfg.get("lam"), cfg["lag_order"])
    w.json("factor.json", doc)


def cmd_simulate(cfg, w):
    seed = _need(cfg, "seed", "for simulation")
    dgp = dict(cfg.get("dgp") or {})
    dgp.setdefault("T", cfg["T"])
    dgp.setdefault("tau_star", cfg["tau_star"])
    dgp.setdefault("delta_star", cfg["delta"])
    dgp.setdefault("lag_order", cfg["lag_order"])
    if isinstance(dgp.get("start"), str):
        dgp["start"] = Quarter.parse(dgp["start"])
    try:
        spec = DgpSpec(seed=seed, **dgp)
    except TypeError as exc:
        raise ContractError(f"bad dgp entry: {exc}") from None
    doc, keys, rows = pipeline.simulate(spec, cfg["reps"], cfg["estimator"], _boot(cfg, 499),
                                        _grid(cfg), cfg.get("threads"))
    w.json("summary.json", doc)
    w.csv("traces.csv", keys, rows)


COMMANDS = {
    "estimate-threshold": cmd_estimate_threshold,
    "test-threshold": cmd_test_threshold,
    "irf": cmd_irf,
    "multipliers": cmd_multipliers,
    "factor-split": cmd_factor_split,
    "simulate": cmd_simulate,
}


def _error_json(exc) -> str:
    err = {"kind": getattr(exc, "kind", "error"), "type": type(exc).__name__,
           "message": str(exc)}
    for attr in ("row", "column"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    return json.dumps({"error": err}, sort_keys=True)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
        logging.basicConfig(level=logging.INFO if cfg.get("verbose") else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        w = _Writer(_need(cfg, "out", "to place results"))
        COMMANDS[cfg["command"]](cfg, w)
        written = w.commit()
    except RegimeSplitError as exc:
        print(_error_json(exc), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        exc.kind = "io"
        print(_error_json(exc), file=sys.stderr)
        return InputError.exit_code
    logger.info("wrote %s", ", ".join(written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
