import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pgcompile.ansatz import (DEPTH_PRESETS, AnsatzSpec, adjoint, build_ansatz, default_depth,
                              dump_circuit, load_circuit, param_count, random_target, wrap_angles)
from pgcompile.sim import Circuit, Gate, StateVector, apply_circuit, overlap_probability, random_state


@pytest.mark.parametrize("n,depth,d", [(2, 1, 3), (5, 2, 18), (10, 3, 57)])
def test_param_count(n, depth, d):
    assert param_count(AnsatzSpec(n, depth)) == d


def test_depth_presets():
    assert [default_depth(n) for n in (5, 10, 15, 20)] == [2, 3, 4, 5]
    assert DEPTH_PRESETS == {5: 2, 10: 3, 15: 4, 20: 5}
    assert default_depth(1) >= 1


def test_brick_order_and_layer_layout():
    spec = AnsatzSpec(5, 1)
    assert spec.pairs == ((0, 1), (2, 3), (1, 2), (3, 4))
    c = build_ansatz(spec, np.arange(9, dtype=float))
    kinds = [g.kind for g in c.gates]
    assert kinds == ["RZZ"] * 4 + ["RY"] * 5
    # RY angles come first in the parameter vector, RZZ angles after
    assert [g.angle for g in c.gates if g.kind == "RY"] == [0, 1, 2, 3, 4]
    assert [g.angle for g in c.gates if g.kind == "RZZ"] == [5, 6, 7, 8]


def test_zero_params_is_identity():
    spec = AnsatzSpec(4, 3)
    psi = random_state(4, 0)
    out = apply_circuit(psi, build_ansatz(spec, np.zeros(param_count(spec))))
    assert overlap_probability(psi, out) == pytest.approx(1.0, abs=1e-12)


def test_single_flip_example():
    spec = AnsatzSpec(2, 1)
    out = apply_circuit(StateVector.zero(2), build_ansatz(spec, [math.pi / 2, 0, 0]))
    assert overlap_probability(out, StateVector.basis(2, 0b10)) == pytest.approx(1.0)


def test_length_mismatch():
    with pytest.raises(ValueError):
        build_ansatz(AnsatzSpec(3, 2), np.zeros(5))


def test_spec_validation():
    with pytest.raises(ValueError):
        AnsatzSpec(3, 0)
    with pytest.raises(ValueError):
        AnsatzSpec(3, 1, ((0, 3),))
    with pytest.raises(ValueError):
        AnsatzSpec(3, 1, ((0, 1), (1, 0)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_build_then_adjoint_roundtrip(n, depth, seed):
    rng = np.random.default_rng(seed)
    spec = AnsatzSpec(n, depth)
    c = build_ansatz(spec, rng.uniform(-7, 7, param_count(spec)))
    for g in c.gates:
        if len(g.targets) == 2:
            assert tuple(sorted(g.targets)) in spec.connectivity
    psi = random_state(n, rng)
    back = apply_circuit(apply_circuit(psi, c), adjoint(c))
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-10


def test_adjoint_is_involution():
    spec = AnsatzSpec(4, 2)
    c = build_ansatz(spec, np.random.default_rng(1).normal(size=param_count(spec)))
    assert adjoint(adjoint(c)) == c
    single = Circuit(1, [Gate("RY", (0,), 0.3)])
    assert adjoint(single).gates == (Gate("RY", (0,), -0.3),)


def test_adjoint_of_mixed_circuit():
    rng = np.random.default_rng(2)
    gates = [Gate("H", (0,)), Gate("RX", (1,), 0.4), Gate("RZZ", (2, 3), 1.2), Gate("Y", (3,)),
             Gate("RY", (2,), -0.8), Gate("Z", (1,)), Gate("X", (0,))]
    c = Circuit(4, gates, frozenset({(2, 3)}))
    psi = random_state(4, rng)
    back = apply_circuit(apply_circuit(psi, c), adjoint(c))
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-10


def test_random_target_determinism_and_range():
    spec = AnsatzSpec(5, 2)
    a = random_target(spec, np.random.default_rng(3))
    b = random_target(spec, np.random.default_rng(3))
    assert a.circuit == b.circuit
    assert np.all((a.hidden_params >= 0) & (a.hidden_params < 2 * math.pi))


def test_hidden_params_compile_perfectly():
    spec = AnsatzSpec(3, 2)
    target = random_target(spec, 4)
    v_dag = adjoint(build_ansatz(spec, target.hidden_params))
    for seed in range(5):
        psi = random_state(3, seed)
        out = apply_circuit(apply_circuit(psi, target.circuit), v_dag)
        assert overlap_probability(psi, out) == pytest.approx(1.0, abs=1e-12)


def test_serialization_roundtrip(tmp_path):
    spec = AnsatzSpec(4, 2)
    c = build_ansatz(spec, np.random.default_rng(5).normal(size=param_count(spec)))
    dump_circuit(c, tmp_path / "c.json")
    assert load_circuit(tmp_path / "c.json") == c


def test_wrap_angles():
    np.testing.assert_allclose(wrap_angles([-0.5, 7.0]), [2 * math.pi - 0.5, 7.0 - 2 * math.pi])
