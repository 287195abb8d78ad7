"""Run configuration, its JSON form, and seeded stream derivation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from ..ansatz import AnsatzSpec, default_depth
from ..fidelity import default_training_size
from ..policy import NORMALIZATIONS, CovarianceSchedule
from ..sim import NoiseModel

# sub-stream identifiers; never renumber, seeds of old runs depend on them
STREAM_TARGET = 1
STREAM_TRAIN_STATES = 2
STREAM_ROLLOUTS = 3
STREAM_TEST_STATES = 4
STREAM_DFO = 5
STREAM_INIT = 6

INIT_MODES = ("zero", "uniform")
DFO_METHODS = ("nelder_mead", "powell")
DFO_DEFAULT_EVALS = {"nelder_mead": 10_000, "powell": 50_000}


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (master_seed, *keys)."""
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=tuple(keys)))


@dataclass(frozen=True)
class ExperimentConfig:
    n_qubits: int = 5
    depth: int | None = None
    m_train: int | None = None
    n_rollouts: int = 20
    iterations: int = 2000
    dfo_max_evals: int | None = None
    shots: int | None = None
    noise_p: float = 0.0
    faults_per_shot: bool = False
    sigma_i: float = 1e-2
    sigma_f: float = 1e-5
    gamma: float = 0.9
    eta: float = 2.5e-3
    epsilon_reg: float = 1e-8
    learn_sigma: bool = False
    gradient_normalization: str = "unbiased"
    sample_one_state: bool = False
    init: str = "zero"
    initial_simplex_scale: float = 0.1
    master_seed: int = 0
    record_timing: bool = False

    def __post_init__(self):
        checks = [
            (self.n_qubits >= 1, "n_qubits must be >= 1"),
            (self.depth is None or self.depth >= 1, "depth must be >= 1"),
            (self.m_train is None or self.m_train >= 1, "m_train must be >= 1"),
            (self.n_rollouts >= 2, "n_rollouts must be >= 2 (the baseline is a batch mean)"),
            (self.iterations >= 1, "iterations must be >= 1"),
            (self.dfo_max_evals is None or self.dfo_max_evals >= 1, "dfo_max_evals must be >= 1"),
            (self.shots is None or self.shots >= 1, "shots must be >= 1 or null for exact mode"),
            (0.0 <= self.noise_p <= 1.0, "noise_p must lie in [0, 1]"),
            (self.sigma_i >= self.sigma_f > 0, "need sigma_i >= sigma_f > 0"),
            (0 < self.gamma < 1, "gamma must lie in (0, 1)"),
            (self.eta > 0, "eta must be positive"),
            (self.epsilon_reg > 0, "epsilon_reg must be positive"),
            (self.gradient_normalization in NORMALIZATIONS,
             f"gradient_normalization must be one of {NORMALIZATIONS}"),
            (self.init in INIT_MODES, f"init must be one of {INIT_MODES}"),
            (self.initial_simplex_scale > 0, "initial_simplex_scale must be positive"),
            (self.master_seed >= 0, "master_seed must be non-negative"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    @property
    def resolved_depth(self) -> int:
        return self.depth if self.depth is not None else default_depth(self.n_qubits)

    @property
    def resolved_m(self) -> int:
        return self.m_train if self.m_train is not None else default_training_size(self.n_qubits)

    def dfo_budget(self, method: str) -> int:
        """Objective evaluations allowed for a derivative-free method."""
        if self.dfo_max_evals is not None:
            return self.dfo_max_evals
        return DFO_DEFAULT_EVALS[method]

    def ansatz_spec(self) -> AnsatzSpec:
        return AnsatzSpec(self.n_qubits, self.resolved_depth)

    def noise_model(self) -> NoiseModel | None:
        return NoiseModel(self.noise_p) if self.noise_p > 0 else None

    def schedule(self) -> CovarianceSchedule:
        return CovarianceSchedule(self.sigma_i, self.sigma_f, self.iterations)

    def with_(self, **changes) -> "ExperimentConfig":
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
