"""RMSprop ascent for the policy mean and derivative-free baselines.

Nelder-Mead and Powell run through scipy behind a wrapper that maximizes by
negation, enforces a hard evaluation budget, and records every evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class RmsPropState:
    sigma_g: np.ndarray
    gamma: float = 0.9
    eta: float = 2.5e-3
    epsilon_reg: float = 1e-8

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if np.any(np.asarray(self.sigma_g) < 0):
            raise ValueError("gradient accumulator must be non-negative")

    @classmethod
    def fresh(cls, d: int, **kwargs) -> "RmsPropState":
        return cls(np.zeros(d), **kwargs)


def rmsprop_step(state: RmsPropState, params, grad) -> tuple[np.ndarray, RmsPropState]:
    """One ascent step; returns (new params, new state)."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if params.shape != grad.shape or grad.shape != np.shape(state.sigma_g):
        raise ValueError("params, grad and accumulator must have the same shape")
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient has non-finite entries")
    acc = state.gamma * state.sigma_g + (1.0 - state.gamma) * grad**2
    new_params = params + state.eta * grad / np.sqrt(acc + state.epsilon_reg)
    return new_params, replace(state, sigma_g=acc)


@dataclass(frozen=True)
class DfoOptions:
    max_iters: int = 10_000  # objective evaluations
    initial_simplex_scale: float = 0.1
    xtol: float = 1e-8
    ftol: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.initial_simplex_scale <= 0:
            raise ValueError("initial_simplex_scale must be positive")


@dataclass
class DfoResult:
    x: np.ndarray
    value: float
    trace: list = field(default_factory=list)  # (evaluation, value, best so far)
    n_evals: int = 0
    flags: tuple = ()

    def __iter__(self):
        return iter((self.x, self.value, self.trace))


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    def __init__(self, objective, budget):
        self.objective = objective
        self.budget = budget
        self.trace = []
        self.best_x = None
        self.best = -np.inf
        self.first = None

    def __call__(self, x):
        if len(self.trace) >= self.budget:
            raise _BudgetExhausted
        x = np.array(x, dtype=float)
        value = float(self.objective(x))
        if not np.isfinite(value):
            raise FloatingPointError(f"objective returned {value}")
        if self.first is None:
            self.first = value
        if value > self.best:
            self.best, self.best_x = value, x
        self.trace.append((len(self.trace) + 1, value, self.best))
        return -value

    def result(self, exhausted: bool) -> DfoResult:
        flags = []
        if exhausted:
            flags.append("budget_exhausted")
        if self.trace and all(v == self.first for _, v, _ in self.trace):
            flags.append("flat_objective")
        return DfoResult(self.best_x, self.best, self.trace, len(self.trace), tuple(flags))


def _run(method: str, objective: Callable, x0, opts: DfoOptions, options: dict) -> DfoResult:
    x0 = np.asarray(x0, dtype=float)
    tracker = _Tracker(objective, opts.max_iters)
    exhausted = False
    try:
        minimize(tracker, x0, method=method, options=options)
    except _BudgetExhausted:
        exhausted = True
    if not tracker.trace:
        raise RuntimeError(f"{method} finished without evaluating the objective")
    return tracker.result(exhausted)


def nelder_mead(objective: Callable, x0, opts: DfoOptions = DfoOptions()) -> DfoResult:
    """Maximize ``objective`` with the simplex method (coefficients 1, 2, 0.5, 0.5).

    The start simplex is x0 plus ``initial_simplex_scale`` along each axis.
    """
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0, x0 + opts.initial_simplex_scale * np.eye(x0.size)])
    options = {
        "initial_simplex": simplex,
        "maxfev": opts.max_iters + x0.size + 2,
        "maxiter": 10 * opts.max_iters,
        "xatol": opts.xtol,
        "fatol": opts.ftol,
        "adaptive": False,
    }
    return _run("Nelder-Mead", objective, x0, opts, options)


def powell(objective: Callable, x0, opts: DfoOptions = DfoOptions()) -> DfoResult:
    """Maximize ``objective`` with Powell's direction-set method (Brent line searches)."""
    options = {
        "maxfev": opts.max_iters + 1,
        "maxiter": 10 * opts.max_iters,
        "xtol": opts.xtol,
        "ftol": opts.ftol,
    }
    return _run("Powell", objective, x0, opts, options)
