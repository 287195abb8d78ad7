"""Dense statevector simulation of the RY/RX/RZZ/X/Y/Z/H gate set.

Qubit 0 is the most significant bit of a basis index, i.e. amplitudes are
laid out for the product q0 ⊗ q1 ⊗ ... ⊗ q_{n-1}.  Rotations use the
half-angle-free convention R_P(θ) = exp(-i P θ), so RY(π/2)|0> = |1>.

Depolarizing noise is realized by Pauli trajectories: after every gate, each
qubit the gate touched independently suffers a fault with probability p, the
fault being X, Y or Z (uniform unless the model says otherwise).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ROTATION_KINDS = ("RY", "RX", "RZZ")
FIXED_KINDS = ("X", "Y", "Z", "H")
GATE_KINDS = ROTATION_KINDS + FIXED_KINDS

_SQ2 = 1 / math.sqrt(2)
_FIXED_MATRICES = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
}
PAULIS = ("X", "Y", "Z")


class SimulationError(RuntimeError):
    """Raised when a simulation produces a non-finite or otherwise invalid result."""


def ensure_rng(rng=None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        width = 2 if self.kind == "RZZ" else 1
        if len(targets) != width:
            raise ValueError(f"{self.kind} acts on {width} qubit(s), got targets {targets}")
        if width == 2 and targets[0] == targets[1]:
            raise ValueError(f"RZZ needs two distinct targets, got {targets}")
        if any(t < 0 for t in targets):
            raise ValueError(f"negative qubit index in {targets}")
        if self.kind in ROTATION_KINDS:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle, got {self.angle}")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    def inverse(self) -> "Gate":
        if self.kind in ROTATION_KINDS:
            return Gate(self.kind, self.targets, -self.angle)
        return self

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "targets": list(self.targets)}
        if self.angle is not None:
            d["angle"] = self.angle
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        return cls(d["kind"], tuple(d["targets"]), d.get("angle"))


def gate_matrix(gate: Gate) -> np.ndarray:
    """2x2 matrix of a single-qubit gate."""
    if gate.kind in FIXED_KINDS:
        return _FIXED_MATRICES[gate.kind]
    c, s = math.cos(gate.angle), math.sin(gate.angle)
    if gate.kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if gate.kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    raise ValueError(f"{gate.kind} is not a single-qubit gate")


def _norm_pair(pair) -> tuple[int, int]:
    a, b = (int(q) for q in pair)
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    connectivity: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        conn = frozenset(_norm_pair(p) for p in self.connectivity)
        object.__setattr__(self, "connectivity", conn)
        for a, b in conn:
            if a == b or b >= self.n_qubits:
                raise ValueError(f"connectivity pair {(a, b)} invalid for {self.n_qubits} qubits")
        for g in self.gates:
            if max(g.targets) >= self.n_qubits:
                raise ValueError(f"{g} targets a qubit outside 0..{self.n_qubits - 1}")
            if len(g.targets) == 2 and _norm_pair(g.targets) not in conn:
                raise ValueError(f"{g} acts on a pair outside the connectivity graph")

    def __len__(self):
        return len(self.gates)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "connectivity": [list(p) for p in sorted(self.connectivity)],
            "gates": [g.to_dict() for g in self.gates],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        return cls(
            int(d["n_qubits"]),
            tuple(Gate.from_dict(g) for g in d["gates"]),
            frozenset(tuple(p) for p in d.get("connectivity", [])),
        )


@dataclass
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        size = amps.shape[0]
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude count {size} is not a power of two >= 2")
        self.amplitudes = amps

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        return cls(amps / np.linalg.norm(amps))

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True)
class NoiseModel:
    """Single-qubit depolarizing noise with total fault probability ``p``.

    ``pauli_weights`` gives the relative odds of X, Y and Z faults; the default
    uniform split is the depolarizing channel (p/3 per Pauli).
    """

    p: float
    pauli_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"fault probability must lie in [0, 1], got {self.p}")
        w = np.asarray(self.pauli_weights, dtype=float)
        if w.shape != (3,) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("pauli_weights must be three non-negative numbers")
        object.__setattr__(self, "pauli_weights", tuple(float(x) for x in w / w.sum()))

    @property
    def active(self) -> bool:
        return self.p > 0


# in-place kernels on a flat amplitude array --------------------------------

def _apply_1q(amps: np.ndarray, n: int, q: int, mat: np.ndarray) -> None:
    view = amps.reshape(1 << q, 2, 1 << (n - q - 1))
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = mat[0, 0] * a0 + mat[0, 1] * a1
    view[:, 1, :] = mat[1, 0] * a0 + mat[1, 1] * a1


def _apply_rzz(amps: np.ndarray, n: int, qa: int, qb: int, theta: float) -> None:
    a, b = (qa, qb) if qa < qb else (qb, qa)
    view = amps.reshape(1 << a, 2, 1 << (b - a - 1), 2, 1 << (n - b - 1))
    same = complex(math.cos(theta), -math.sin(theta))
    diff = same.conjugate()
    view[:, 0, :, 0, :] *= same
    view[:, 1, :, 1, :] *= same
    view[:, 0, :, 1, :] *= diff
    view[:, 1, :, 0, :] *= diff


def _apply_inplace(amps: np.ndarray, n: int, gate: Gate) -> None:
    if gate.kind == "RZZ":
        _apply_rzz(amps, n, gate.targets[0], gate.targets[1], gate.angle)
    else:
        _apply_1q(amps, n, gate.targets[0], gate_matrix(gate))


def _check_targets(gate: Gate, n: int) -> None:
    if max(gate.targets) >= n:
        raise ValueError(f"{gate} targets a qubit outside 0..{n - 1}")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    _check_targets(gate, n)
    amps = state.amplitudes.copy()
    _apply_inplace(amps, n, gate)
    return StateVector(amps)


def apply_circuit(state: StateVector, circuit: Circuit, noise: NoiseModel | None = None,
                  rng=None) -> StateVector:
    """Run ``circuit`` on ``state``; with ``noise``, sample one Pauli trajectory."""
    n = state.n_qubits
    if circuit.n_qubits != n:
        raise ValueError(f"circuit has {circuit.n_qubits} qubits, state has {n}")
    noisy = noise is not None and noise.active
    if noisy:
        rng = ensure_rng(rng)
    amps = state.amplitudes.copy()
    for gate in circuit.gates:
        _apply_inplace(amps, n, gate)
        if noisy:
            for q in gate.targets:
                if rng.random() < noise.p:
                    pauli = PAULIS[rng.choice(3, p=noise.pauli_weights)]
                    _apply_1q(amps, n, q, _FIXED_MATRICES[pauli])
    return StateVector(amps)


def overlap_probability(a: StateVector, b: StateVector) -> float:
    if a.amplitudes.shape != b.amplitudes.shape:
        raise ValueError("states have different dimensions")
    value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(max(value, 0.0), 1.0))


def sample_zero_outcome(state: StateVector, shots: int, rng=None) -> float:
    """Fraction of ``shots`` computational-basis samples that read all zeros."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rng = ensure_rng(rng)
    probs = np.abs(state.amplitudes) ** 2
    probs /= probs.sum()
    counts = rng.multinomial(int(shots), probs)
    return counts[0] / shots


def product_state(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of single-qubit vectors, qubit 0 first."""
    out = np.ones(1, dtype=np.complex128)
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=np.complex128))
    return out


def random_state(n_qubits: int, rng=None) -> StateVector:
    rng = ensure_rng(rng)
    dim = 2**n_qubits
    return StateVector.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def concat(*circuits: Circuit) -> Circuit:
    """Sequential composition; connectivity is the union of the parts."""
    n = circuits[0].n_qubits
    gates: list[Gate] = []
    conn: set = set()
    for c in circuits:
        if c.n_qubits != n:
            raise ValueError("cannot concatenate circuits of different widths")
        gates.extend(c.gates)
        conn |= c.connectivity
    return Circuit(n, tuple(gates), frozenset(conn))
