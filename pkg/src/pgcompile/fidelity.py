"""Initial-state sets, per-state rewards, averaged fidelity and Hoeffding sizing."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .ansatz import TargetUnitary
from .sim import (
    Circuit,
    Gate,
    NoiseModel,
    StateVector,
    apply_circuit,
    concat,
    ensure_rng,
    gate_matrix,
    overlap_probability,
    product_state,
    sample_zero_outcome,
)

TRAINING = "training"
TEST_ZERO = "test_zero"
TEST_LOCAL_XZ = "test_local_xz"
TEST_GLOBAL_RANDOM = "test_global_random"
PRODUCT_BASIS = "product_basis"  # all products of Pauli eigenstates, the full-fidelity reference
SET_KINDS = (TRAINING, TEST_ZERO, TEST_LOCAL_XZ, TEST_GLOBAL_RANDOM, PRODUCT_BASIS)

LOCAL_OPS = ("I", "X", "Y", "Z", "H", "RX", "RY")

DEFAULT_MEMORY_BUDGET = 1 << 30  # bytes allowed for an explicit state family


def default_training_size(n_qubits: int) -> int:
    return max(15 * n_qubits, n_qubits**2)


@dataclass(frozen=True)
class PrepCircuit:
    """Single-qubit gates that prepare |k> from |0...0>."""

    n_qubits: int
    gates: tuple[Gate, ...]
    label: str

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if len(g.targets) != 1:
                raise ValueError("preparation circuits hold single-qubit gates only")
            if g.targets[0] >= self.n_qubits:
                raise ValueError(f"{g} outside a {self.n_qubits}-qubit register")

    @property
    def circuit(self) -> Circuit:
        return Circuit(self.n_qubits, self.gates)

    def amplitudes(self) -> np.ndarray:
        # product of per-qubit factors; equals apply_circuit(|0..0>, circuit)
        factors = [np.array([1, 0], dtype=complex) for _ in range(self.n_qubits)]
        for g in self.gates:
            q = g.targets[0]
            factors[q] = gate_matrix(g) @ factors[q]
        return product_state(factors)

    def state(self) -> StateVector:
        return StateVector(self.amplitudes())

    def to_dict(self) -> dict:
        return {"label": self.label, "gates": [g.to_dict() for g in self.gates]}

    @classmethod
    def from_dict(cls, d: dict, n_qubits: int) -> "PrepCircuit":
        return cls(n_qubits, tuple(Gate.from_dict(g) for g in d["gates"]), d["label"])


Member = Union[PrepCircuit, StateVector]


def _member_amplitudes(member: Member) -> np.ndarray:
    if isinstance(member, PrepCircuit):
        return member.amplitudes()
    return member.amplitudes


@dataclass
class InitialStateSet:
    kind: str
    n_qubits: int
    members: list

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise ValueError(f"unknown state-set kind {self.kind!r}")
        if not self.members:
            raise ValueError("a state set needs at least one member")

    @property
    def m(self) -> int:
        return len(self.members)

    def matrix(self) -> np.ndarray:
        """Members as columns of a (2**n, m) complex array."""
        return np.stack([_member_amplitudes(k) for k in self.members], axis=1)

    def subset(self, count: int) -> "InitialStateSet":
        return InitialStateSet(self.kind, self.n_qubits, list(self.members[:count]))

    def to_dict(self) -> dict:
        out = []
        for k in self.members:
            if isinstance(k, PrepCircuit):
                out.append(k.to_dict())
            else:
                out.append({"real": k.amplitudes.real.tolist(), "imag": k.amplitudes.imag.tolist()})
        return {"kind": self.kind, "n_qubits": self.n_qubits, "members": out}

    @classmethod
    def from_dict(cls, d: dict) -> "InitialStateSet":
        n = int(d["n_qubits"])
        members = []
        for k in d["members"]:
            if "gates" in k:
                members.append(PrepCircuit.from_dict(k, n))
            else:
                members.append(StateVector(np.asarray(k["real"]) + 1j * np.asarray(k["imag"])))
        return cls(d["kind"], n, members)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "InitialStateSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def mean_pairwise_overlap(states: InitialStateSet) -> float:
    """Mean of |<k_i|k_j>|^2 over distinct pairs (0 for a single member)."""
    if states.m < 2:
        return 0.0
    K = states.matrix()
    G = np.abs(K.conj().T @ K) ** 2
    off = G.sum() - np.trace(G)
    return float(off / (states.m * (states.m - 1)))


def _local_op(q: int, rng) -> tuple[list[Gate], str]:
    op = LOCAL_OPS[rng.integers(len(LOCAL_OPS))]
    if op == "I":
        return [], "I"
    if op in ("RX", "RY"):
        phi = float(rng.uniform(0.0, 2 * math.pi))
        return [Gate(op, (q,), phi)], f"{op}({phi!r})"
    return [Gate(op, (q,))], op


def generate_training_states(n: int, m: int, rng=None, max_attempts: int | None = None) -> InitialStateSet:
    """Random local deformations of |0...0>, distinct by label.

    Every qubit independently receives one of I, X, Y, Z, H, RX(φ), RY(φ)
    with φ uniform on [0, 2π).  A draw whose label was already produced is
    discarded and redrawn.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    rng = ensure_rng(rng)
    max_attempts = max_attempts or 1000 * m
    members: list[PrepCircuit] = []
    seen: set[str] = set()
    attempts = 0
    while len(members) < m:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError(f"could not draw {m} distinct training states on {n} qubits")
        gates, labels = [], []
        for q in range(n):
            g, lab = _local_op(q, rng)
            gates.extend(g)
            labels.append(lab)
        label = "|".join(labels)
        if label in seen:
            continue
        seen.add(label)
        members.append(PrepCircuit(n, tuple(gates), label))
    return InitialStateSet(TRAINING, n, members)


def generate_test_states(n: int, kind: str, T: int, rng=None,
                         memory_budget: int = DEFAULT_MEMORY_BUDGET) -> InitialStateSet:
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = ensure_rng(rng)
    if kind == TEST_ZERO:
        return InitialStateSet(kind, n, [PrepCircuit(n, (), "zero")])
    if kind == TEST_LOCAL_XZ:
        members = []
        for t in range(T):
            phis = rng.uniform(0.0, 2 * math.pi, size=n)
            gates = tuple(Gate("RY", (q,), float(phi)) for q, phi in enumerate(phis))
            members.append(PrepCircuit(n, gates, f"xz{t}"))
        return InitialStateSet(kind, n, members)
    if kind == TEST_GLOBAL_RANDOM:
        need = T * (2**n) * 16
        if need > memory_budget:
            raise MemoryError(f"{T} dense states on {n} qubits need {need} bytes, "
                              f"budget is {memory_budget}")
        vecs = rng.standard_normal((T, 2**n))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        return InitialStateSet(kind, n, [StateVector(v.astype(complex)) for v in vecs])
    raise ValueError(f"unknown test-set kind {kind!r}")


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    per_state: np.ndarray
    mode: str

    @property
    def std(self) -> float:
        return float(np.std(self.per_state))


def mode_name(shots: int | None) -> str:
    return "exact" if shots is None else f"shots({shots})"


def reward_for_state(target: TargetUnitary, v_dagger: Circuit, prep: Member,
                     shots: int | None = None, noise: NoiseModel | None = None,
                     rng=None, faults_per_shot: bool = False) -> float:
    """|<k|V† U|k>|^2 for one initial state, exactly or from ``shots`` samples.

    In shot mode the preparation is undone after V† and the all-zeros
    frequency is counted, so only PrepCircuit members qualify.  Noise acts on
    U and V†; preparation and its inverse are ideal.
    """
    n = target.spec.n_qubits
    if v_dagger.n_qubits != n:
        raise ValueError("V† and U act on different registers")
    if noise is not None and noise.active:
        rng = ensure_rng(rng)
    if shots is None:
        k = prep.state() if isinstance(prep, PrepCircuit) else prep
        if k.n_qubits != n:
            raise ValueError("initial state does not match the register size")
        psi = apply_circuit(apply_circuit(k, target.circuit, noise, rng), v_dagger, noise, rng)
        return overlap_probability(k, psi)
    if not isinstance(prep, PrepCircuit):
        raise TypeError("shot mode needs a preparation circuit to invert; got a raw state vector")
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rng = ensure_rng(rng)
    k = prep.state()
    unprep = Circuit(n, tuple(g.inverse() for g in reversed(prep.gates)))
    body = concat(target.circuit, v_dagger)

    def run_once():
        psi = apply_circuit(k, body, noise, rng)
        return apply_circuit(psi, unprep)

    if faults_per_shot and noise is not None and noise.active:
        hits = sum(sample_zero_outcome(run_once(), 1, rng) for _ in range(shots))
        return hits / shots
    return sample_zero_outcome(run_once(), shots, rng)


def estimate_fidelity(target: TargetUnitary, v_dagger: Circuit, states: InitialStateSet,
                      shots: int | None = None, noise: NoiseModel | None = None,
                      rng=None, faults_per_shot: bool = False) -> FidelityEstimate:
    """Uniformly weighted mean of per-state rewards over ``states``."""
    if states.m < 1:
        raise ValueError("empty state set")
    rng = ensure_rng(rng) if (shots is not None or noise is not None) else rng
    per = np.array([reward_for_state(target, v_dagger, k, shots, noise, rng, faults_per_shot)
                    for k in states.members])
    return FidelityEstimate(float(per.mean()), per, mode_name(shots))


_PRODUCT_FACTORS = {
    "0": (), "1": (("X", None),), "+": (("H", None),), "-": (("X", None), ("H", None)),
    "+i": (("RX", -math.pi / 4),), "-i": (("RX", math.pi / 4),),
}
PRODUCT_FAMILIES = {
    "tomographic": ("0", "1", "+", "+i"),  # 4**n states, tomographically complete
    "pauli": ("0", "1", "+", "-", "+i", "-i"),  # 6**n states, a product 2-design
}


def full_fidelity_states(n: int, family: str = "tomographic") -> InitialStateSet:
    """Every product of the family's single-qubit states.

    ``tomographic`` uses |0>, |1>, |+>, |+i> per qubit (4**n states), the
    reference for the full fidelity.  ``pauli`` uses all six Pauli
    eigenstates, whose average equals the Haar average over product states.
    """
    if family not in PRODUCT_FAMILIES:
        raise ValueError(f"unknown product family {family!r}")
    if n > 6:
        raise ValueError("the complete product-state family is only built for n <= 6")
    singles = PRODUCT_FAMILIES[family]
    members = []
    for combo in np.ndindex(*([len(singles)] * n)):
        gates, labels = [], []
        for q, c in enumerate(combo):
            label = singles[c]
            gates.extend(Gate(kind, (q,), angle) for kind, angle in _PRODUCT_FACTORS[label])
            labels.append(label)
        members.append(PrepCircuit(n, tuple(gates), "|".join(labels)))
    return InitialStateSet(PRODUCT_BASIS, n, members)


def hoeffding_bound(epsilon: float, m: int) -> float:
    """2 exp(-2 ε² m): bound on P(|F̂ - F| >= ε) for m independent samples in [0, 1]."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if m < 1:
        raise ValueError("m must be a positive integer")
    return 2.0 * math.exp(-2.0 * epsilon**2 * m)


def hoeffding_required_m(epsilon: float, delta: float) -> int:
    """Smallest m with 2 exp(-2 ε² m) <= δ."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    m = math.ceil(math.log(2.0 / delta) / (2.0 * epsilon**2))
    # guard against the ceiling landing one short through rounding
    while 2.0 * math.exp(-2.0 * epsilon**2 * m) > delta:
        m += 1
    return m
