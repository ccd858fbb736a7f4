"""Command-line entry point: simulate, sweep, and oracle-check subcommands.

Configuration is JSON with a schema_version field.  Scalar N and r give a
single cell; lists give the Cartesian product.  Missing seeds are drawn from
OS entropy and recorded in manifest.json so any run can be replayed.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys

import numpy as np

from .harness import (DEFAULT_DT, DEFAULT_T_CAP, SimulationConfig,
                      brute_force_oracle, model_tag, monte_carlo_sweep,
                      run_simulation, trial_seed, write_outputs)
from .motion import BilliardParams, BrownianParams, DOrsognaParams

SCHEMA_VERSION = 1
OUT_DIR_ENV = "EVADESIM_OUT_DIR"
VALID_KEYS = {"schema_version", "model", "N", "r", "dt", "t_cap", "trials",
              "mode", "seed"}
VALID_MODES = {"connected", "powerdown"}


class SchemaError(ValueError):
    """Config does not match the documented schema; message carries the
    JSON path of the offending key."""


class RangeError(ValueError):
    """A config value is outside its allowed range."""


def _model_params(obj, path="model"):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError(f"{path}: expected object with a 'kind' field")
    kind = obj["kind"]
    extra = {k: v for k, v in obj.items() if k != "kind"}
    try:
        if kind == "brownian":
            return BrownianParams(**extra)
        if kind == "billiard":
            return BilliardParams(**extra)
        if kind == "dorsogna":
            return DOrsognaParams(**extra)
    except TypeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    raise SchemaError(f"{path}.kind: unknown model kind {kind!r}")


def _check_r(value, path):
    try:
        r = float(value)
    except (TypeError, ValueError):
        raise SchemaError(f"{path}: expected a number, got {value!r}")
    if not 0.0 < r < 0.5:
        raise RangeError(f"{path}: r={r} outside (0, 0.5)")
    return r


def _as_list(value):
    return value if isinstance(value, list) else [value]


def apply_overrides(raw, overrides):
    """key=value strings patch top-level config keys; values parse as JSON
    with a plain-string fallback."""
    out = dict(raw)
    for item in overrides or []:
        if "=" not in item:
            raise SchemaError(f"override {item!r}: expected key=value")
        key, _, text = item.partition("=")
        if key not in VALID_KEYS:
            raise SchemaError(f"override {key}: not a config key")
        try:
            out[key] = json.loads(text)
        except json.JSONDecodeError:
            out[key] = text
    return out


def parse_config(path, overrides=None):
    """Validated config dict with defaults applied.

    Returns {"grid": [(N, r, params), ...], "dt": ..., "t_cap": ...,
    "trials": ..., "mode": ..., "seed": ...}; single-cell configs are a
    one-element grid.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})")
    if not isinstance(raw, dict):
        raise SchemaError("$: expected a JSON object")
    raw = apply_overrides(raw, overrides)

    for key in raw:
        if key not in VALID_KEYS:
            raise SchemaError(f"{key}: unknown config key")
    for key in ("model", "N", "r"):
        if key not in raw:
            raise SchemaError(f"{key}: required key missing")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"schema_version: unsupported version {version}")

    params = _model_params(raw["model"])
    ns = []
    for i, n in enumerate(_as_list(raw["N"])):
        if not isinstance(n, int) or n < 0:
            raise SchemaError(f"N[{i}]: expected a non-negative integer")
        ns.append(n)
    rs = [_check_r(v, f"r[{i}]") for i, v in enumerate(_as_list(raw["r"]))]

    dt = float(raw.get("dt", DEFAULT_DT))
    t_cap = float(raw.get("t_cap", DEFAULT_T_CAP))
    if not 0.0 < dt <= t_cap:
        raise RangeError(f"dt: need 0 < dt <= t_cap, got dt={dt}, t_cap={t_cap}")
    trials = raw.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        raise SchemaError("trials: expected a positive integer")
    mode = raw.get("mode", "connected")
    if not isinstance(mode, str) or mode.lower() not in VALID_MODES:
        raise SchemaError(f"mode: expected one of {sorted(VALID_MODES)}")
    seed = raw.get("seed")
    if seed is not None and not isinstance(seed, int):
        raise SchemaError("seed: expected an integer")

    grid = [(n, r, params) for n in ns for r in rs]
    return {"grid": grid, "dt": dt, "t_cap": t_cap, "trials": trials,
            "mode": mode.lower(), "seed": seed, "raw": raw}


def _resolve_seed(cfg, cli_seed):
    if cli_seed is not None:
        return int(cli_seed)
    if cfg["seed"] is not None:
        return int(cfg["seed"])
    return secrets.randbits(63)


def _resolve_out(cli_out):
    return cli_out or os.environ.get(OUT_DIR_ENV, "out")


def _manifest(cfg, seed, extra=None):
    m = {"config": cfg["raw"], "base_seed": seed,
         "schema_version": SCHEMA_VERSION}
    m.update(extra or {})
    return m


def cmd_simulate(args):
    cfg = parse_config(args.config, args.set)
    if len(cfg["grid"]) != 1:
        raise SchemaError("N/r: simulate needs a single-cell config")
    seed = _resolve_seed(cfg, args.seed)
    n, r, params = cfg["grid"][0]
    config = SimulationConfig(n_mobile=n, r=r, model=params,
                              dt_base=cfg["dt"], t_cap=cfg["t_cap"],
                              seed=seed, powerdown=cfg["mode"] == "powerdown")
    result = run_simulation(config)
    out_dir = _resolve_out(args.out)
    os.makedirs(out_dir, exist_ok=True)
    summary = {"t_max": result.t_max, "censored": result.censored,
               "static_coverage_at_t0": result.static_coverage_at_t0,
               "n_events": result.n_events,
               "fallback_count": result.fallback_count, "seed": seed}
    with open(os.path.join(out_dir, "result.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    with open(os.path.join(out_dir, "events.jsonl"), "w") as fh:
        for ev in result.events:
            fh.write(ev.to_json() + "\n")
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(_manifest(cfg, seed), fh, indent=2, sort_keys=True)
    print(json.dumps(summary))
    return 0


def cmd_sweep(args):
    cfg = parse_config(args.config, args.set)
    seed = _resolve_seed(cfg, args.seed)
    trials = args.trials if args.trials is not None else cfg["trials"]
    rows = monte_carlo_sweep(cfg["grid"], trials, seed,
                             parallelism=args.jobs, dt_base=cfg["dt"],
                             t_cap=cfg["t_cap"],
                             powerdown=cfg["mode"] == "powerdown")
    out_dir = _resolve_out(args.out)
    stats_path = write_outputs(rows, None, out_dir,
                               manifest=_manifest(cfg, seed,
                                                  {"trials": trials}))
    print(stats_path)
    return 0


def cmd_oracle_check(args):
    cfg = parse_config(args.config, args.set)
    seed = _resolve_seed(cfg, args.seed)
    trials = args.trials if args.trials is not None else cfg["trials"]
    agreements = 0
    reports = []
    for cell_index, (n, r, params) in enumerate(cfg["grid"]):
        for i in range(trials):
            config = SimulationConfig(
                n_mobile=n, r=r, model=params, dt_base=cfg["dt"],
                t_cap=cfg["t_cap"], seed=trial_seed(seed, cell_index, i),
                powerdown=cfg["mode"] == "powerdown")
            res = run_simulation(config, record_trace=True)
            labels = [s.evasion for s in res.trace]
            oracle = brute_force_oracle([s.active for s in res.trace],
                                        r, args.pitch)
            agree = labels == oracle
            agreements += agree
            reports.append({"cell": cell_index, "trial": i, "agree": agree,
                            "steps": len(labels)})
    total = len(reports)
    print(json.dumps({"model": model_tag(cfg["grid"][0][2]),
                      "trials": total, "agree": agreements,
                      "fraction": agreements / total if total else 1.0}))
    for rep in reports:
        if not rep["agree"]:
            print(json.dumps(rep))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evadesim",
        description="Coverage certification for mobile planar sensor networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a top-level config key")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None,
                       help=f"output dir (default ${OUT_DIR_ENV} or ./out)")

    p_sim = sub.add_parser("simulate", help="run one trial")
    common(p_sim)
    p_sim.set_defaults(fn=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo sweep over a grid")
    common(p_sweep)
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_oc = sub.add_parser("oracle-check",
                          help="compare label algorithm against the grid oracle")
    common(p_oc)
    p_oc.add_argument("--trials", type=int, default=None)
    p_oc.add_argument("--pitch", type=float, required=True,
                      help="oracle grid pitch h (must be <= r/10)")
    p_oc.set_defaults(fn=cmd_oracle_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (SchemaError, RangeError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
