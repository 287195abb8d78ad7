"""Multi-seed sweeps: trainability, noise robustness and generalization.

Every cell is a pure function of its config and seed, so cells may run in
worker processes without changing any output.  Rows always come back in
cell order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from statistics import fmean

import numpy as np

from ..fidelity import (TEST_GLOBAL_RANDOM, TEST_LOCAL_XZ, TEST_ZERO, TRAINING, generate_test_states,
                        generate_training_states)
from .config import STREAM_TEST_STATES, STREAM_TRAIN_STATES, ExperimentConfig, stream
from .training import PG, build_problem, train

SWEEP_COLUMNS = ["n_qubits", "depth", "method", "repetitions", "noise_p", "seed", "J_inf",
                 "J_inf_std", "iters_run", "evals_run", "wallclock_s"]
SUMMARY_COLUMNS = ["n_qubits", "depth", "method", "repetitions", "noise_p", "n_seeds", "n_failed",
                   "J_inf_mean", "J_inf_across_seeds_std", "J_inf_within_run_std"]
RATIO_COLUMNS = ["n_qubits", "depth", "repetitions", "noise_p", "J_inf_mean", "J_inf_ref_mean",
                 "sigma_within", "sigma_within_ref", "ratio_within",
                 "sigma_across", "sigma_across_ref", "ratio_across"]
GENERALIZATION_COLUMNS = ["n_qubits", "depth", "seed", "train_size", "set", "fidelity",
                          "fidelity_std", "n_states"]
TEST_KINDS = (TEST_ZERO, TEST_LOCAL_XZ, TEST_GLOBAL_RANDOM)
WORKERS_ENV = "PGCOMPILE_WORKERS"
EXACT = "exact"


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def _map(func, cells, workers):
    workers = resolve_workers(workers)
    if workers == 1 or len(cells) < 2:
        return [func(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(func, cells))


def _repetitions(config: ExperimentConfig):
    return EXACT if config.shots is None else config.shots


def _base_row(config: ExperimentConfig, method: str) -> dict:
    return {
        "n_qubits": config.n_qubits,
        "depth": config.resolved_depth,
        "method": method,
        "repetitions": _repetitions(config),
        "noise_p": config.noise_p,
        "seed": config.master_seed,
    }


def _run_cell(cell) -> list[tuple[dict, str | None]]:
    """Train every method on one (config, seed) problem; errors stay per row."""
    config, methods = cell
    try:
        problem = build_problem(config)
    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
        return [(_failed_row(config, m), f"{type(exc).__name__}: {exc}") for m in methods]
    out = []
    for method in methods:
        row = _base_row(config, method)
        try:
            trace = train(config, method, problem)
        except Exception as exc:  # noqa: BLE001
            out.append((_failed_row(config, method), f"{type(exc).__name__}: {exc}"))
            continue
        row.update(J_inf=trace.J_inf, J_inf_std=trace.J_inf_std, iters_run=trace.iters_run,
                   evals_run=trace.evals_run,
                   wallclock_s=trace.wallclock_s if config.record_timing else None)
        out.append((row, None))
    return out


def _failed_row(config, method) -> dict:
    row = _base_row(config, method)
    row.update(J_inf=math.nan, J_inf_std=math.nan, iters_run=0, evals_run=0)
    return row


def _collect(results):
    rows, failures = [], []
    for cell in results:
        for row, error in cell:
            rows.append(row)
            if error is not None:
                failures.append({k: row[k] for k in ("n_qubits", "method", "repetitions",
                                                     "noise_p", "seed")} | {"error": error})
    return rows, failures


def run_trainability_sweep(configs, methods=(PG,), seeds=range(10), workers=None) -> tuple[list, list]:
    """One row per (config, seed, method); returns (rows, failures)."""
    cells = [(config.with_(master_seed=int(seed)), tuple(methods))
             for config in configs for seed in seeds]
    return _collect(_map(_run_cell, cells, workers))


def _group(rows, keys):
    groups: dict = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    return groups


def summarize(rows) -> list[dict]:
    """Per-cell statistics across seeds; failed rows are counted, not averaged."""
    keys = ("n_qubits", "depth", "method", "repetitions", "noise_p")
    out = []
    for key, group in _group(rows, keys).items():
        ok = [r for r in group if not math.isnan(r["J_inf"])]
        J = np.array([r["J_inf"] for r in ok])
        out.append(dict(zip(keys, key)) | {
            "n_seeds": len(group),
            "n_failed": len(group) - len(ok),
            "J_inf_mean": float(J.mean()) if ok else math.nan,
            "J_inf_across_seeds_std": float(J.std()) if ok else math.nan,
            "J_inf_within_run_std": fmean(r["J_inf_std"] for r in ok) if ok else math.nan,
        })
    return out


def variance_ratios(rows) -> list[dict]:
    """Asymptotic fluctuation with noise over the same quantity without noise.

    Two fluctuation measures are reported: the mean within-run std of the
    final-window reward, and the std of J_inf across seeds.
    """
    stats = {(s["n_qubits"], s["depth"], s["repetitions"], s["noise_p"]): s
             for s in summarize(rows)}
    out = []
    for (n, depth, reps, p), s in stats.items():
        ref = stats.get((n, depth, reps, 0.0))
        if ref is None:
            continue
        out.append({
            "n_qubits": n, "depth": depth, "repetitions": reps, "noise_p": p,
            "J_inf_mean": s["J_inf_mean"], "J_inf_ref_mean": ref["J_inf_mean"],
            "sigma_within": s["J_inf_within_run_std"], "sigma_within_ref": ref["J_inf_within_run_std"],
            "ratio_within": _ratio(s["J_inf_within_run_std"], ref["J_inf_within_run_std"]),
            "sigma_across": s["J_inf_across_seeds_std"], "sigma_across_ref": ref["J_inf_across_seeds_std"],
            "ratio_across": _ratio(s["J_inf_across_seeds_std"], ref["J_inf_across_seeds_std"]),
        })
    return out


def _ratio(a, b):
    if a == b:
        return 1.0
    return a / b if b > 0 else math.nan


def run_noise_sweep(configs, noise_levels=(0.0, 0.01), repetitions=(5000, 10000, 50000, 100000),
                    seeds=range(10), method=PG, workers=None) -> tuple[list, list, list]:
    """PG (or a DFO method) over a noise x repetitions grid.

    The noiseless level is always included as the reference.  Returns
    (rows, variance-ratio rows, failures).
    """
    levels = list(dict.fromkeys([0.0, *map(float, noise_levels)]))
    grid = [config.with_(shots=int(reps), noise_p=p)
            for config in configs for reps in repetitions for p in levels]
    rows, failures = run_trainability_sweep(grid, (method,), seeds, workers)
    return rows, variance_ratios(rows), failures


def _test_sets(config: ExperimentConfig, T_test: int):
    return {kind: generate_test_states(config.n_qubits, kind, T_test,
                                       stream(config.master_seed, STREAM_TEST_STATES, i))
            for i, kind in enumerate(TEST_KINDS)}


def _generalization_cell(cell) -> tuple[list[dict], list]:
    config, sizes, T_test = cell
    base = {"n_qubits": config.n_qubits, "depth": config.resolved_depth, "seed": config.master_seed}
    try:
        pool = generate_training_states(config.n_qubits, max(sizes),
                                        stream(config.master_seed, STREAM_TRAIN_STATES))
        tests = _test_sets(config, T_test)
    except Exception as exc:  # noqa: BLE001
        return [], [base | {"error": f"{type(exc).__name__}: {exc}"}]
    rows, failures = [], []
    for size in sizes:
        try:
            problem = build_problem(config.with_(m_train=size), pool.subset(size))
            theta = train(config.with_(m_train=size), PG, problem).theta_star
            sets = {TRAINING: problem.train_states, **tests}
            for kind, states in sets.items():
                fid, fid_std = problem.exact_fidelity(theta, states)
                rows.append(base | {"train_size": size, "set": kind, "fidelity": fid,
                                    "fidelity_std": fid_std, "n_states": states.m})
        except Exception as exc:  # noqa: BLE001
            failures.append(base | {"train_size": size, "error": f"{type(exc).__name__}: {exc}"})
    return rows, failures


def run_generalization(config: ExperimentConfig, train_set_sizes, T_test: int = 500,
                       seeds=range(10), workers=None) -> tuple[list, list]:
    """Train on nested training sets of growing size and score the frozen θ*.

    Training sets for one seed are prefixes of a single draw, and the three
    test sets are fixed per seed, so sizes differ only in what was trained on.
    Returns (rows, failures); one row per (seed, size, set).
    """
    sizes = [int(s) for s in train_set_sizes]
    if not sizes or any(s < 1 for s in sizes) or sizes != sorted(set(sizes)):
        raise ValueError("train_set_sizes must be positive and strictly ascending")
    if T_test < 1:
        raise ValueError("T_test must be at least 1")
    cells = [(config.with_(master_seed=int(seed)), sizes, T_test) for seed in seeds]
    rows, failures = [], []
    for cell_rows, cell_failures in _map(_generalization_cell, cells, workers):
        rows.extend(cell_rows)
        failures.extend(cell_failures)
    return rows, failures
