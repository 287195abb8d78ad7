"""Command-line entry point: ``pgcompile <command> --config FILE [overrides]``.

A config file is one JSON object.  Keys naming ExperimentConfig fields set
the experiment; the remaining keys (``method``, ``methods``, ``seeds``,
``n_values``, ``repetitions``, ``noise_levels``, ``train_set_sizes``,
``T_test``) describe the run.  Command-line flags override the file.

Failures print one JSON object ``{"error": <class>, "message": ...}`` on
stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from ..fidelity import hoeffding_bound, hoeffding_required_m
from ..sim import SimulationError
from .config import DFO_METHODS, ConfigError, ExperimentConfig, load_json
from .io import (OutputError, ensure_dir, write_csv, write_manifest, write_traces)
from .sweeps import (GENERALIZATION_COLUMNS, RATIO_COLUMNS, SUMMARY_COLUMNS, SWEEP_COLUMNS,
                     run_generalization, run_noise_sweep, run_trainability_sweep, summarize)
from .training import METHODS, PG, build_problem, train

RUN_KEYS = {"method", "methods", "seeds", "n_values", "repetitions", "noise_levels",
            "train_set_sizes", "T_test"}
_EXIT = {"ConfigNotFound": 2, "ConfigError": 2, "InvalidArgument": 2, "OutputError": 3,
         "SimulationError": 4}

# flag -> (config key, type)
_OVERRIDES = {
    "n_qubits": int, "depth": int, "m_train": int, "n_rollouts": int, "iterations": int,
    "dfo_max_evals": int, "shots": int, "noise_p": float, "sigma_i": float, "sigma_f": float,
    "gamma": float, "eta": float, "epsilon_reg": float, "init": str, "master_seed": int,
    "initial_simplex_scale": float,
}
_SWITCHES = ("learn_sigma", "sample_one_state", "faults_per_shot", "record_timing")


def _int_list(text):
    return [int(x) for x in text.split(",") if x]


def _float_list(text):
    return [float(x) for x in text.split(",") if x]


def _reps_list(text):
    return [None if x == "exact" else int(x) for x in text.split(",") if x]


def _str_list(text):
    return [x for x in text.split(",") if x]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    for key, typ in _OVERRIDES.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None)
    for key in _SWITCHES:
        p.add_argument("--" + key.replace("_", "-"), dest=key, action="store_true", default=None)
    p.add_argument("--seeds", type=_int_list, help="comma-separated master seeds")
    p.add_argument("--workers", type=int, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgcompile",
                                     description="Policy-gradient compilation of variational circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="one PG or DFO training run")
    _add_common(p)
    p.add_argument("--method", choices=METHODS)

    p = sub.add_parser("compare", help="PG and DFO methods on the same target")
    _add_common(p)
    p.add_argument("--methods", type=_str_list)

    p = sub.add_parser("sweep", help="trainability sweep over qubit counts and repetitions")
    _add_common(p)
    p.add_argument("--methods", type=_str_list)
    p.add_argument("--n-values", dest="n_values", type=_int_list)
    p.add_argument("--repetitions", type=_reps_list, help="comma list; 'exact' for no sampling")

    p = sub.add_parser("noise-sweep", help="noisy vs noiseless PG with variance ratios")
    _add_common(p)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--n-values", dest="n_values", type=_int_list)
    p.add_argument("--repetitions", type=_int_list)
    p.add_argument("--noise-levels", dest="noise_levels", type=_float_list)

    p = sub.add_parser("generalize", help="test fidelity against training-set size")
    _add_common(p)
    p.add_argument("--train-set-sizes", dest="train_set_sizes", type=_int_list)
    p.add_argument("--t-test", dest="T_test", type=int)

    p = sub.add_parser("hoeffding", help="training-set size or failure bound")
    p.add_argument("--epsilon", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--delta", type=float, help="failure probability; prints required m")
    group.add_argument("--m", type=int, help="number of states; prints the bound")
    return parser


def resolve(args) -> tuple[ExperimentConfig, dict]:
    """Merge config file and flags into (experiment config, run options)."""
    data = load_json(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    exp_keys = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - exp_keys - RUN_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    exp = {k: v for k, v in data.items() if k in exp_keys}
    run = {k: v for k, v in data.items() if k in RUN_KEYS}
    for key in (*_OVERRIDES, *_SWITCHES):
        value = getattr(args, key, None)
        if value is not None:
            exp[key] = value
    for key in RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            run[key] = value
    config = ExperimentConfig.from_dict(exp)
    seeds = run.get("seeds", [config.master_seed])
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    if not isinstance(seeds, list) or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("seeds must be a count or a list of non-negative integers")
    run["seeds"] = seeds
    return config, run


def _methods(run, default):
    methods = run.get("methods", default)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
    return tuple(methods)


def _sweep_record(trace, config):
    return {
        "n_qubits": config.n_qubits, "depth": config.resolved_depth, "method": trace.method,
        "repetitions": "exact" if config.shots is None else config.shots,
        "noise_p": config.noise_p, "seed": config.master_seed, "J_inf": trace.J_inf,
        "J_inf_std": trace.J_inf_std, "iters_run": trace.iters_run, "evals_run": trace.evals_run,
        "wallclock_s": trace.wallclock_s if config.record_timing else None,
    }


def cmd_train(args, config, run, out):
    method = run.get("method", PG)
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    trace = train(config, method)
    trace_path = write_traces(out / "trace.csv", [trace], config.record_timing)
    result = {"method": method, "J_inf": trace.J_inf, "J_inf_std": trace.J_inf_std,
              "iters_run": trace.iters_run, "evals_run": trace.evals_run,
              "flags": list(trace.flags), "theta_star": trace.theta_star.tolist(), **trace.metadata}
    write_manifest(out / "manifest.json", "train", config.to_dict() | {"method": method},
                   [config.master_seed], {"trace": trace_path}, {"result": result})
    return {k: result[k] for k in ("method", "J_inf", "J_inf_std", "iters_run", "evals_run")}


def cmd_compare(args, config, run, out):
    methods = _methods(run, METHODS)
    traces, records = [], []
    for seed in run["seeds"]:
        cfg = config.with_(master_seed=seed)
        problem = build_problem(cfg)
        for method in methods:
            trace = train(cfg, method, problem)
            traces.append(trace)
            records.append(_sweep_record(trace, cfg))
    paths = {"trace": write_traces(out / "trace.csv", traces, config.record_timing),
             "results": write_csv(out / "results.csv", SWEEP_COLUMNS, records)}
    write_manifest(out / "manifest.json", "compare", config.to_dict() | {"methods": list(methods)},
                   run["seeds"], paths)
    return {"rows": len(records)}


def _n_configs(config, run):
    return [config.with_(n_qubits=n, depth=config.depth if n == config.n_qubits else None,
                         m_train=config.m_train if n == config.n_qubits else None)
            for n in run.get("n_values", [config.n_qubits])]


def cmd_sweep(args, config, run, out):
    methods = _methods(run, (PG,))
    reps = run.get("repetitions", [config.shots])
    configs = [c.with_(shots=r) for c in _n_configs(config, run) for r in reps]
    rows, failures = run_trainability_sweep(configs, methods, run["seeds"], args.workers)
    paths = {"results": write_csv(out / "results.csv", SWEEP_COLUMNS, rows),
             "summary": write_csv(out / "summary.csv", SUMMARY_COLUMNS, summarize(rows))}
    write_manifest(out / "manifest.json", "sweep", config.to_dict() | {
        "methods": list(methods), "repetitions": reps,
        "n_values": run.get("n_values", [config.n_qubits])}, run["seeds"], paths,
        {"failures": failures})
    return {"rows": len(rows), "failures": len(failures)}


def cmd_noise_sweep(args, config, run, out):
    method = run.get("method", PG)
    _methods({"methods": [method]}, ())
    reps = run.get("repetitions", [5000, 10000, 50000, 100000])
    levels = run.get("noise_levels", [0.0, 0.01])
    rows, ratios, failures = run_noise_sweep(_n_configs(config, run), levels, reps, run["seeds"],
                                             method, args.workers)
    paths = {"results": write_csv(out / "results.csv", SWEEP_COLUMNS, rows),
             "summary": write_csv(out / "summary.csv", SUMMARY_COLUMNS, summarize(rows)),
             "ratios": write_csv(out / "ratios.csv", RATIO_COLUMNS, ratios)}
    write_manifest(out / "manifest.json", "noise-sweep", config.to_dict() | {
        "method": method, "repetitions": reps, "noise_levels": levels,
        "n_values": run.get("n_values", [config.n_qubits])}, run["seeds"], paths,
        {"failures": failures})
    return {"rows": len(rows), "ratios": len(ratios), "failures": len(failures)}


def cmd_generalize(args, config, run, out):
    sizes = run.get("train_set_sizes", [config.resolved_m])
    T_test = run.get("T_test", 500)
    rows, failures = run_generalization(config, sizes, T_test, run["seeds"], args.workers)
    path = write_csv(out / "generalization.csv", GENERALIZATION_COLUMNS, rows)
    write_manifest(out / "manifest.json", "generalize", config.to_dict() | {
        "train_set_sizes": sizes, "T_test": T_test}, run["seeds"], {"results": path},
        {"failures": failures})
    return {"rows": len(rows), "failures": len(failures)}


def cmd_hoeffding(args):
    if args.delta is not None:
        m = hoeffding_required_m(args.epsilon, args.delta)
        print(f"m = {m}")
    else:
        print(f"bound = {hoeffding_bound(args.epsilon, args.m)!r}")


_COMMANDS = {"train": cmd_train, "compare": cmd_compare, "sweep": cmd_sweep,
             "noise-sweep": cmd_noise_sweep, "generalize": cmd_generalize}


def _fail(error_class: str, message: str) -> int:
    print(json.dumps({"error": error_class, "message": message}), file=sys.stderr)
    return _EXIT.get(error_class, 1)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "hoeffding":
            cmd_hoeffding(args)
            return 0
        config, run = resolve(args)
        out = ensure_dir(Path(args.out))
        summary = _COMMANDS[args.command](args, config, run, out)
        print(json.dumps(summary | {"out": str(out)}))
        return 0
    except FileNotFoundError as exc:
        return _fail("ConfigNotFound", str(exc))
    except ConfigError as exc:
        return _fail("ConfigError", str(exc))
    except OutputError as exc:
        return _fail("OutputError", str(exc))
    except SimulationError as exc:
        return _fail("SimulationError", str(exc))
    except ValueError as exc:
        return _fail("InvalidArgument", str(exc))


if __name__ == "__main__":
    sys.exit(main())
