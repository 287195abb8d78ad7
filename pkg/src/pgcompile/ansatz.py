"""Layered nearest-neighbour ansatz and random hidden targets.

Each layer applies RZZ on every connectivity pair (brick order on a chain:
even pairs, then odd pairs) followed by RY on every qubit.  Inside a layer
the parameter vector lists the RY angles first (qubit order), then the RZZ
angles (pair order), so for one layer on n qubits with P pairs:

    params[0:n]      -> RY on qubits 0..n-1
    params[n:n + P]  -> RZZ on pairs[0..P-1]

Layer l occupies params[l * (n + P):(l + 1) * (n + P)].  This ordering is a
stable contract; serialized circuits and saved parameter vectors rely on it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sim import Circuit, Gate, ensure_rng

DEPTH_PRESETS = {5: 2, 10: 3, 15: 4, 20: 5}


def default_depth(n_qubits: int) -> int:
    if n_qubits in DEPTH_PRESETS:
        return DEPTH_PRESETS[n_qubits]
    # same trend as the presets for in-between sizes
    return max(1, round(n_qubits / 5) + 1)


def chain_pairs(n_qubits: int) -> tuple[tuple[int, int], ...]:
    even = [(i, i + 1) for i in range(0, n_qubits - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n_qubits - 1, 2)]
    return tuple(even + odd)


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    depth: int
    pairs: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.pairs is None:
            pairs = chain_pairs(self.n_qubits)
        else:
            pairs = tuple((int(a), int(b)) if a < b else (int(b), int(a)) for a, b in self.pairs)
        seen = set()
        for a, b in pairs:
            if a == b or a < 0 or b >= self.n_qubits:
                raise ValueError(f"pair {(a, b)} is invalid for {self.n_qubits} qubits")
            if (a, b) in seen:
                raise ValueError(f"pair {(a, b)} listed twice")
            seen.add((a, b))
        object.__setattr__(self, "pairs", pairs)

    @property
    def layer_size(self) -> int:
        return self.n_qubits + len(self.pairs)

    @property
    def connectivity(self) -> frozenset:
        return frozenset(self.pairs)

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "depth": self.depth,
                "pairs": [list(p) for p in self.pairs]}


def param_count(spec: AnsatzSpec) -> int:
    return spec.depth * spec.layer_size


def layer_params(spec: AnsatzSpec, params) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a parameter vector (or an (R, d) batch) into per-layer (ry, rzz) blocks."""
    params = np.asarray(params, dtype=float)
    n, size = spec.n_qubits, spec.layer_size
    out = []
    for layer in range(spec.depth):
        block = params[..., layer * size:(layer + 1) * size]
        out.append((block[..., :n], block[..., n:]))
    return out


def build_ansatz(spec: AnsatzSpec, params) -> Circuit:
    params = np.asarray(params, dtype=float)
    if params.shape != (param_count(spec),):
        raise ValueError(f"expected {param_count(spec)} parameters, got shape {params.shape}")
    gates = []
    for ry, rzz in layer_params(spec, params):
        gates.extend(Gate("RZZ", pair, theta) for pair, theta in zip(spec.pairs, rzz))
        gates.extend(Gate("RY", (q,), theta) for q, theta in enumerate(ry))
    return Circuit(spec.n_qubits, tuple(gates), spec.connectivity)


def adjoint(circuit: Circuit) -> Circuit:
    return Circuit(circuit.n_qubits, tuple(g.inverse() for g in reversed(circuit.gates)),
                   circuit.connectivity)


@dataclass(frozen=True)
class TargetUnitary:
    """A hidden circuit U together with the angles that generated it."""

    spec: AnsatzSpec
    hidden_params: np.ndarray
    circuit: Circuit

    @classmethod
    def from_params(cls, spec: AnsatzSpec, params) -> "TargetUnitary":
        params = np.array(params, dtype=float)
        return cls(spec, params, build_ansatz(spec, params))


def random_target(spec: AnsatzSpec, rng=None) -> TargetUnitary:
    """Hidden angles i.i.d. uniform on [0, 2π); V(θ*) = U has perfect fidelity."""
    rng = ensure_rng(rng)
    hidden = rng.uniform(0.0, 2 * math.pi, size=param_count(spec))
    return TargetUnitary.from_params(spec, hidden)


def wrap_angles(params) -> np.ndarray:
    """Map angles to [0, 2π) for reporting; optimization uses raw reals."""
    return np.mod(np.asarray(params, dtype=float), 2 * math.pi)


def dump_circuit(circuit: Circuit, path) -> None:
    Path(path).write_text(json.dumps(circuit.to_dict(), indent=2) + "\n")


def load_circuit(path) -> Circuit:
    return Circuit.from_dict(json.loads(Path(path).read_text()))
