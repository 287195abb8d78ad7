"""Gaussian policy over circuit angles and the REINFORCE gradient estimator.

The policy is N(μ, diag(σ)), with σ holding variances (radians²).  The
score functions are the usual ones for a normal density:

    d/dμ_j log π = (x_j - μ_j) / σ_j
    d/dσ_j log π = -(1 / (2 σ_j)) (1 - (x_j - μ_j)² / σ_j)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .sim import ensure_rng


@dataclass
class GaussianPolicy:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).copy()
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = np.full(self.mu.shape, float(sigma))
        self.sigma = sigma.copy()
        if self.mu.ndim != 1 or self.sigma.shape != self.mu.shape:
            raise ValueError("mu and sigma must be vectors of equal length")
        if not np.all(np.isfinite(self.mu)):
            raise ValueError("mu must be finite")
        if not np.all(self.sigma > 0):
            raise ValueError("every covariance entry must be positive")

    @property
    def d(self) -> int:
        return self.mu.shape[0]


def sample(policy: GaussianPolicy, rng=None, size: int | None = None) -> np.ndarray:
    """θ = μ + √σ z; one vector, or a (size, d) batch."""
    rng = ensure_rng(rng)
    shape = (policy.d,) if size is None else (size, policy.d)
    return policy.mu + np.sqrt(policy.sigma) * rng.standard_normal(shape)


def log_density(policy: GaussianPolicy, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    diff = x - policy.mu
    return -0.5 * np.sum(np.log(2 * math.pi * policy.sigma) + diff**2 / policy.sigma, axis=-1)


def _diff(policy, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != policy.d:
        raise ValueError(f"expected vectors of length {policy.d}, got {x.shape[-1]}")
    return x - policy.mu


def log_grad_mu(policy: GaussianPolicy, x) -> np.ndarray:
    return _diff(policy, x) / policy.sigma


def log_grad_sigma(policy: GaussianPolicy, x) -> np.ndarray:
    diff = _diff(policy, x)
    return -(1.0 / (2.0 * policy.sigma)) * (1.0 - diff**2 / policy.sigma)


@dataclass(frozen=True)
class CovarianceSchedule:
    sigma_i: float = 1e-2
    sigma_f: float = 1e-5
    T: int = 2000

    def __post_init__(self):
        if not self.sigma_i >= self.sigma_f > 0:
            raise ValueError("need sigma_i >= sigma_f > 0")
        if self.T < 1:
            raise ValueError("T must be at least 1")


def schedule_sigma(t: int, schedule: CovarianceSchedule) -> float:
    """Diagonal covariance value at iteration t: linear from sigma_i to sigma_f."""
    if t < 0:
        raise ValueError("iteration index must be non-negative")
    if t > schedule.T:
        warnings.warn(f"iteration {t} beyond schedule length {schedule.T}; using sigma_f",
                      RuntimeWarning, stacklevel=2)
        t = schedule.T
    frac = t / schedule.T
    return (1.0 - frac) * schedule.sigma_i + frac * schedule.sigma_f


@dataclass
class RolloutBatch:
    samples: np.ndarray
    rewards: np.ndarray
    baseline: float
    grad_mu: np.ndarray
    grad_sigma: np.ndarray
    degenerate: bool = False


NORMALIZATIONS = ("unbiased", "mean")


def estimate_policy_gradient(samples, rewards, policy: GaussianPolicy,
                             normalization: str = "unbiased") -> tuple[np.ndarray, np.ndarray]:
    """REINFORCE gradient with the batch-mean reward as baseline.

    Returns (grad_mu, grad_sigma).  Identical rewards give exactly zero.
    """
    batch = collect_batch(samples, rewards, policy, normalization)
    return batch.grad_mu, batch.grad_sigma


def collect_batch(samples, rewards, policy: GaussianPolicy, normalization: str = "unbiased") -> RolloutBatch:
    """Advantage-weighted score average over a batch of N rollouts.

    The batch mean includes each rollout's own reward, which shrinks the
    plain 1/N average by (N - 1)/N in expectation.  ``unbiased`` divides by
    N - 1 instead, the same as giving every rollout the mean of the other
    rewards as its baseline; ``mean`` keeps the plain 1/N average.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    rewards = np.asarray(rewards, dtype=float)
    N = samples.shape[0]
    if N < 2:
        raise ValueError("at least two rollouts are needed for a mean baseline")
    if rewards.shape != (N,):
        raise ValueError("one reward per rollout is required")
    baseline = float(rewards.mean())
    if np.all(rewards == rewards[0]):
        zero = np.zeros(policy.d)
        return RolloutBatch(samples, rewards, baseline, zero, zero.copy(), degenerate=True)
    adv = (rewards - baseline)[:, None]
    scale = 1.0 / (N - 1) if normalization == "unbiased" else 1.0 / N
    grad_mu = scale * np.sum(adv * log_grad_mu(policy, samples), axis=0)
    grad_sigma = scale * np.sum(adv * log_grad_sigma(policy, samples), axis=0)
    if not (np.all(np.isfinite(grad_mu)) and np.all(np.isfinite(grad_sigma))):
        raise FloatingPointError("policy gradient is not finite")
    return RolloutBatch(samples, rewards, baseline, grad_mu, grad_sigma)
