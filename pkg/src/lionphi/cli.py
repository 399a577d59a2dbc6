"""Configuration-driven experiment runner.

Subcommands: trace, sweep-lambda, verify, distributed, conj-check.
Exit codes: 0 success, 2 config error, 3 numeric failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .csvio import fmt, write_csv
from .distributed import run_distributed
from .dynamics import DiscreteConfig
from .errors import NumericError
from .oracle import GridSpec, conj_grid_oracle, sample_in_dom
from .phi import PhiSpec, phi_conj_value
from .problems import (GaussianIID, MinibatchSubset, Objective,
                       StochasticOracle, load_logistic_csv,
                       logistic_regression, quadratic, synthetic_logistic)
from .runs import run_trace, sweep_lambda
from .verify import run_suite

TRACE_COLUMNS = ["step", "f", "H", "delta1", "delta2", "delta_total",
                 "dist_dom", "feasible", "linf_x", "phase"]


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def _build_objective(obj: dict) -> Objective:
    kind = obj.get("kind")
    if kind == "quadratic":
        return quadratic(obj["center"], obj.get("scale"))
    if kind == "logistic":
        X, y = load_logistic_csv(obj["csv"])
        return logistic_regression(X, y, obj.get("reg", 0.0))
    if kind == "logistic_synthetic":
        X, y = synthetic_logistic(obj.get("n", 200), obj.get("d", 20),
                                  obj.get("seed", 0))
        return logistic_regression(X, y, obj.get("reg", 0.0))
    raise ConfigError(f"unknown objective kind {kind!r}")


def _build_trace_inputs(cfg: dict):
    if ("discrete" in cfg) == ("continuous" in cfg):
        raise ConfigError("config must carry exactly one of 'discrete'/'continuous'")
    if "continuous" in cfg:
        raise ConfigError("the trace runner drives the discrete scheme; "
                          "use the library API for ODE integration")
    try:
        objective = _build_objective(cfg["objective"])
        spec = PhiSpec.from_json(cfg["phi"])
        dcfg = DiscreteConfig.from_json(cfg["discrete"])
        steps = int(cfg["steps"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    seed = int(cfg.get("seed", 0))
    if "x0" in cfg:
        x0 = np.asarray(cfg["x0"], dtype=float)
    else:
        rng = np.random.Generator(np.random.Philox(key=seed))
        x0 = rng.normal(size=objective.dim)
    return objective, spec, dcfg, steps, seed, x0


def _trace_rows(result) -> list[list]:
    rows = []
    for diag, x in zip(result.diagnostics, result.xs):
        rows.append([diag.step, diag.f, diag.h, diag.delta1, diag.delta2,
                     diag.delta_total, diag.dist_dom, diag.feasible,
                     diag.linf_x, diag.phase] + [float(v) for v in x])
    return rows


def cmd_trace(cfg: dict, out: str) -> int:
    objective, spec, dcfg, steps, _, x0 = _build_trace_inputs(cfg)
    result = run_trace(objective, spec, dcfg, x0, steps,
                       scheme=cfg.get("scheme", "explicit"),
                       diagnostics=bool(cfg.get("diagnostics", True)),
                       tail_frac=float(cfg.get("tail_frac", 0.1)))
    header = TRACE_COLUMNS + [f"x{i}" for i in range(objective.dim)]
    write_csv(out, header, _trace_rows(result))
    print(f"trace: {steps} steps, converged_f={fmt(result.converged_f)}, "
          f"converged_x={[fmt(float(v)) for v in result.converged_x]}")
    return 0


def cmd_sweep_lambda(cfg: dict, out: str, threads: int) -> int:
    objective, spec, dcfg, steps, _, x0 = _build_trace_inputs(cfg)
    lambdas = cfg.get("lambdas")
    if not lambdas or len(lambdas) < 2:
        raise ConfigError("sweep needs a 'lambdas' list with >= 2 entries")
    res = sweep_lambda(objective, spec, dcfg, x0, steps,
                       [float(v) for v in lambdas],
                       scheme=cfg.get("scheme", "explicit"),
                       tail_frac=float(cfg.get("tail_frac", 0.1)),
                       threads=threads)
    rows = [[lam, loss, feas, res["lambda0"]]
            for lam, loss, feas in zip(res["lambdas"], res["losses"],
                                       res["feasible"])]
    write_csv(out, ["lambda", "converged_f", "feasible", "lambda0"], rows)
    print(f"sweep: lambda0={fmt(res['lambda0'])}")
    return 0


def cmd_verify(suite: str, seed: int, out: str | None) -> int:
    try:
        report = run_suite(suite, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if report["all_pass"] else 4


def _json_default(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
        return str(v)
    raise TypeError(type(v))


def cmd_distributed(cfg: dict, out: str) -> int:
    objective, spec, dcfg, _, seed, x0 = _build_trace_inputs(cfg)
    n = int(cfg.get("workers", 1))
    rounds = int(cfg.get("rounds", cfg.get("steps", 100)))
    rule = cfg.get("rule", "average_signs")
    noise = cfg.get("noise", {"kind": "gaussian", "sigma": 0.0})
    n_batch = int(cfg.get("n_batch", 1))
    if n < 1:
        raise ConfigError("workers must be >= 1")
    if noise.get("kind") == "gaussian":
        model = GaussianIID(float(noise.get("sigma", 0.0)))
    elif noise.get("kind") == "minibatch":
        X, y = load_logistic_csv(noise["csv"])
        model = MinibatchSubset(X, y, float(noise.get("reg", 0.0)))
    else:
        raise ConfigError(f"unknown noise kind {noise.get('kind')!r}")
    oracles = [StochasticOracle(objective, model, n_batch) for _ in range(n)]
    try:
        res = run_distributed(dcfg, spec, rule, oracles, x0, rounds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    keys = ["round", "loss", "dist_dom", "bits_cum"]
    keys += [k for k in res.rows[0] if k not in keys] if res.rows else []
    rows = [[row[k] for k in keys] for row in res.rows]
    footer = ["comm", res.comm.bits_upstream_per_round,
              res.comm.bits_downstream_per_round, res.comm.rounds]
    footer += [math.nan] * (len(keys) - len(footer))
    rows.append(footer)
    write_csv(out, keys, rows)
    print(f"distributed: rule={rule}, workers={n}, "
          f"bits_up/round={res.comm.bits_upstream_per_round}")
    return 0


def cmd_conj_check(seed: int, out: str | None) -> int:
    """Cross-check analytic conjugates against the grid oracle in d = 2."""
    from .verify import catalog

    rng = np.random.Generator(np.random.Philox(key=seed))
    grid = GridSpec(5.0, 0.01, 2)
    report = {}
    worst_all = 0.0
    for spec in catalog(2):
        pts = (rng.uniform(-2, 2, size=(20, 2))
               if spec.kind == "half_squared_l2"
               else sample_in_dom(spec, 2, 20, rng, margin=0.05))
        worst = 0.0
        for y in pts:
            worst = max(worst, abs(phi_conj_value(spec, y)
                                   - conj_grid_oracle(spec, y, grid)))
        report[spec.kind] = {"worst": worst, "pass": worst <= 0.05}
        worst_all = max(worst_all, worst)
    ok = all(v["pass"] for v in report.values())
    text = json.dumps({"checks": report, "all_pass": ok}, sort_keys=True,
                      indent=2, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if ok else 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lionphi")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("trace", "sweep-lambda", "distributed"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
    pv = sub.add_parser("verify")
    pv.add_argument("suite", choices=["convex", "lyapunov", "stochastic",
                                      "distributed", "all"])
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--out", default=None)
    pv.add_argument("--threads", type=int, default=1)
    pc = sub.add_parser("conj-check")
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.suite, args.seed, args.out)
        if args.command == "conj-check":
            return cmd_conj_check(args.seed, args.out)
        cfg = _load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.command == "trace":
            return cmd_trace(cfg, args.out)
        if args.command == "sweep-lambda":
            return cmd_sweep_lambda(cfg, args.out, args.threads)
        if args.command == "distributed":
            return cmd_distributed(cfg, args.out)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
