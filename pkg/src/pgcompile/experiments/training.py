"""Policy-gradient and derivative-free training loops on one compilation problem."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..ansatz import AnsatzSpec, TargetUnitary, param_count, random_target
from ..batched import RolloutSimulator
from ..fidelity import InitialStateSet, generate_training_states, mean_pairwise_overlap
from ..optimizers import DfoOptions, RmsPropState, nelder_mead, powell, rmsprop_step
from ..policy import GaussianPolicy, collect_batch, sample, schedule_sigma
from ..sim import SimulationError
from .config import (DFO_METHODS, STREAM_DFO, STREAM_INIT, STREAM_ROLLOUTS, STREAM_TARGET,
                     STREAM_TRAIN_STATES, ExperimentConfig, stream)

PG = "pg"
METHODS = (PG,) + DFO_METHODS
ASYMPTOTIC_FRACTION = 0.05

_DFO_RUNNERS = {"nelder_mead": nelder_mead, "powell": powell}


@dataclass
class CompilationProblem:
    """A hidden target plus the training states used to score candidates."""
    spec: AnsatzSpec
    target: TargetUnitary
    train_states: InitialStateSet

    def simulator(self, config: ExperimentConfig) -> RolloutSimulator:
        return RolloutSimulator(self.target, self.train_states.matrix(), shots=config.shots,
                                noise=config.noise_model(), faults_per_shot=config.faults_per_shot)

    def exact_fidelity(self, theta, states: InitialStateSet | None = None) -> tuple[float, float]:
        """Noiseless, shot-free mean fidelity of ``theta`` and its spread over states."""
        states = self.train_states if states is None else states
        per_state = RolloutSimulator(self.target, states.matrix()).exact_rewards(theta)[0]
        return float(per_state.mean()), float(per_state.std())


def build_problem(config: ExperimentConfig, train_states: InitialStateSet | None = None) -> CompilationProblem:
    spec = config.ansatz_spec()
    target = random_target(spec, stream(config.master_seed, STREAM_TARGET))
    if train_states is None:
        train_states = generate_training_states(config.n_qubits, config.resolved_m,
                                                stream(config.master_seed, STREAM_TRAIN_STATES))
    return CompilationProblem(spec, target, train_states)


def initial_mean(config: ExperimentConfig) -> np.ndarray:
    """Starting angles: all zero (identity circuit) or uniform on [0, 2π)."""
    d = param_count(config.ansatz_spec())
    if config.init == "zero":
        return np.zeros(d)
    return stream(config.master_seed, STREAM_INIT).uniform(0.0, 2 * math.pi, d)


@dataclass
class TraceRow:
    iteration: int
    evals: int
    reward: float  # PG: mean over rollouts; DFO: best value so far
    objective: float  # value measured at this step
    reward_std: float | None = None
    sigma: float | None = None
    baseline: float | None = None
    grad_norm: float | None = None
    mean_fidelity: float | None = None  # PG: exact noiseless fidelity of the policy mean
    wall_ms: float = 0.0


@dataclass
class TrainingTrace:
    method: str
    config: ExperimentConfig
    rows: list
    theta_star: np.ndarray
    wallclock_s: float
    flags: tuple = ()
    metadata: dict = field(default_factory=dict)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([row.reward for row in self.rows])

    @property
    def iters_run(self) -> int:
        return len(self.rows)

    @property
    def evals_run(self) -> int:
        return self.rows[-1].evals if self.rows else 0

    def _window(self) -> np.ndarray:
        n = max(1, math.ceil(ASYMPTOTIC_FRACTION * len(self.rows)))
        return self.rewards[-n:]

    @property
    def J_inf(self) -> float:
        """Mean reward over the final 5% of rows."""
        return float(self._window().mean())

    @property
    def J_inf_std(self) -> float:
        return float(self._window().std())

    def first_reaching(self, threshold: float) -> int | None:
        """Iteration at which the reward first reaches ``threshold``."""
        for row in self.rows:
            if row.reward >= threshold:
                return row.iteration
        return None


def _problem_metadata(problem: CompilationProblem, theta) -> dict:
    fid, fid_std = problem.exact_fidelity(theta)
    return {
        "target_angle_distribution": "uniform[0, 2pi)",
        "m_train": problem.train_states.m,
        "train_mean_pairwise_overlap": mean_pairwise_overlap(problem.train_states),
        "exact_train_fidelity": fid,
        "exact_train_fidelity_std": fid_std,
    }


def train_pg(config: ExperimentConfig, problem: CompilationProblem | None = None) -> TrainingTrace:
    """REINFORCE with a Gaussian policy, mean baseline and RMSprop on the mean."""
    problem = build_problem(config) if problem is None else problem
    sim = problem.simulator(config)
    exact_sim = sim if sim.noise is None else RolloutSimulator(problem.target, sim.states)
    rng = stream(config.master_seed, STREAM_ROLLOUTS)
    schedule = config.schedule()
    N = config.n_rollouts
    mu = initial_mean(config)
    d = mu.size
    opt = RmsPropState.fresh(d, gamma=config.gamma, eta=config.eta, epsilon_reg=config.epsilon_reg)
    sigma = np.full(d, config.sigma_i)
    sigma_opt = RmsPropState.fresh(d, gamma=config.gamma, eta=config.eta, epsilon_reg=config.epsilon_reg)

    rows = []
    start = time.perf_counter()
    for t in range(1, config.iterations + 1):
        tick = time.perf_counter()
        if not config.learn_sigma:
            sigma = np.full(d, schedule_sigma(t, schedule))
        policy = GaussianPolicy(mu, sigma)
        thetas = sample(policy, rng, N)
        try:
            if config.sample_one_state:
                cols = rng.integers(sim.n_states, size=N)
                rewards = sim.rewards(thetas, rng, columns=cols)
            else:
                rewards = sim.rewards(thetas, rng).mean(axis=1)
        except SimulationError as exc:
            raise SimulationError(f"iteration {t}: {exc}") from exc
        if not np.all(np.isfinite(rewards)):
            raise SimulationError(f"iteration {t}: non-finite reward from the simulator")
        mean_fidelity = float(exact_sim.exact_rewards(mu).mean())
        batch = collect_batch(thetas, rewards, policy, config.gradient_normalization)
        mu, opt = rmsprop_step(opt, mu, batch.grad_mu)
        if config.learn_sigma:
            sigma, sigma_opt = rmsprop_step(sigma_opt, sigma, batch.grad_sigma)
            sigma = np.clip(sigma, config.sigma_f, config.sigma_i)
        mean = float(rewards.mean())
        rows.append(TraceRow(
            iteration=t, evals=t * N, reward=mean, objective=mean,
            reward_std=float(rewards.std()), sigma=float(policy.sigma.mean()),
            baseline=batch.baseline, grad_norm=float(np.linalg.norm(batch.grad_mu)),
            mean_fidelity=mean_fidelity,
            wall_ms=(time.perf_counter() - tick) * 1e3,
        ))
    elapsed = time.perf_counter() - start
    return TrainingTrace(PG, config, rows, mu, elapsed, metadata=_problem_metadata(problem, mu))


def train_dfo(config: ExperimentConfig, method: str, problem: CompilationProblem | None = None) -> TrainingTrace:
    """Maximize the same estimated fidelity directly over the angles."""
    if method not in _DFO_RUNNERS:
        raise ValueError(f"unknown derivative-free method {method!r}; choose from {DFO_METHODS}")
    problem = build_problem(config) if problem is None else problem
    sim = problem.simulator(config)
    rng = stream(config.master_seed, STREAM_DFO)
    durations = []

    def objective(x):
        tick = time.perf_counter()
        try:
            value = float(sim.rewards(x[None], rng).mean())
        except SimulationError as exc:
            raise SimulationError(f"evaluation {len(durations) + 1}: {exc}") from exc
        durations.append((time.perf_counter() - tick) * 1e3)
        return value

    opts = DfoOptions(max_iters=config.dfo_budget(method),
                      initial_simplex_scale=config.initial_simplex_scale)
    start = time.perf_counter()
    result = _DFO_RUNNERS[method](objective, initial_mean(config), opts)
    elapsed = time.perf_counter() - start
    rows = [TraceRow(iteration=i, evals=i, reward=best, objective=value, wall_ms=ms)
            for (i, value, best), ms in zip(result.trace, durations)]
    return TrainingTrace(method, config, rows, np.asarray(result.x), elapsed, result.flags,
                         metadata=_problem_metadata(problem, result.x))


def train(config: ExperimentConfig, method: str = PG, problem: CompilationProblem | None = None) -> TrainingTrace:
    if method == PG:
        return train_pg(config, problem)
    return train_dfo(config, method, problem)


def compare(config: ExperimentConfig, methods=METHODS) -> dict:
    """Run several methods on the same target and training states."""
    problem = build_problem(config)
    return {method: train(config, method, problem) for method in methods}
