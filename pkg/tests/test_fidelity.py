import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pgcompile.ansatz import AnsatzSpec, TargetUnitary, adjoint, build_ansatz, param_count, random_target
from pgcompile.batched import RolloutSimulator
from pgcompile.fidelity import (TEST_GLOBAL_RANDOM, TEST_LOCAL_XZ, TEST_ZERO, InitialStateSet, PrepCircuit,
                                default_training_size, estimate_fidelity, full_fidelity_states,
                                generate_test_states, generate_training_states, hoeffding_bound,
                                hoeffding_required_m, mean_pairwise_overlap, reward_for_state)
from pgcompile.sim import Gate, StateVector, apply_circuit


def test_default_training_size():
    assert [default_training_size(n) for n in (2, 5, 15, 20)] == [30, 75, 225, 400]


def test_identity_prep_is_zero_state():
    k = PrepCircuit(1, (), "I")
    assert abs(k.amplitudes()[0]) == 1


def test_prep_amplitudes_match_simulation():
    gates = (Gate("H", (0,)), Gate("RX", (1,), 0.7), Gate("Y", (2,)), Gate("RY", (0,), 1.3))
    k = PrepCircuit(3, gates, "x")
    ref = apply_circuit(StateVector.zero(3), k.circuit)
    np.testing.assert_allclose(k.amplitudes(), ref.amplitudes, atol=1e-14)


def test_prep_rejects_two_qubit_gates():
    with pytest.raises(ValueError):
        PrepCircuit(2, (Gate("RZZ", (0, 1), 0.1),), "bad")


def test_training_states_deterministic_and_distinct():
    a = generate_training_states(3, 40, 1)
    b = generate_training_states(3, 40, 1)
    assert [k.label for k in a.members] == [k.label for k in b.members]
    assert len({k.label for k in a.members}) == 40
    for k in a.members:
        assert len(k.label.split("|")) == 3


def test_training_states_nearly_orthogonal():
    states = generate_training_states(10, 100, 2)
    assert mean_pairwise_overlap(states) < 0.05


def test_training_state_pool_exhaustion_is_reported():
    # one qubit has only five distinct fixed-op labels plus continuous rotations,
    # so a tiny attempt budget must trip the guard
    with pytest.raises(RuntimeError):
        generate_training_states(1, 50, 0, max_attempts=10)


def test_zero_test_set():
    s = generate_test_states(4, TEST_ZERO, 500, 0)
    assert s.m == 1
    assert s.matrix()[0, 0] == 1


def test_local_xz_states_are_real():
    s = generate_test_states(4, TEST_LOCAL_XZ, 50, 0)
    assert s.m == 50
    assert np.all(s.matrix().imag == 0)


def test_global_random_overlap_statistics():
    s = generate_test_states(10, TEST_GLOBAL_RANDOM, 500, 3)
    K = s.matrix()
    assert np.all(K.imag == 0)
    G = np.abs(K.T @ K) ** 2
    off = G[~np.eye(500, dtype=bool)]
    # random real unit vectors: E|<a|b>|^2 = 1/dim, Var ≈ 2/dim^2 per pair
    sigma = math.sqrt(2) / 1024 / math.sqrt(off.size / 2)
    assert abs(off.mean() - 1 / 1024) < 3 * sigma * 10  # pairs are dependent; generous


def test_global_random_memory_budget():
    with pytest.raises(MemoryError):
        generate_test_states(12, TEST_GLOBAL_RANDOM, 500, 0, memory_budget=1 << 20)


def test_state_set_json_roundtrip(tmp_path):
    train = generate_training_states(3, 5, 0)
    rand = generate_test_states(3, TEST_GLOBAL_RANDOM, 4, 0)
    for s in (train, rand):
        s.dump(tmp_path / "s.json")
        back = InitialStateSet.load(tmp_path / "s.json")
        np.testing.assert_allclose(back.matrix(), s.matrix(), atol=1e-15)


def test_perfect_compilation_gives_one():
    spec = AnsatzSpec(3, 2)
    target = random_target(spec, 0)
    v_dag = adjoint(target.circuit)
    for k in generate_training_states(3, 10, 1).members:
        assert reward_for_state(target, v_dag, k) == pytest.approx(1.0, abs=1e-12)


def test_identity_against_identity():
    spec = AnsatzSpec(2, 1)
    target = TargetUnitary.from_params(spec, np.zeros(3))
    v_dag = adjoint(build_ansatz(spec, np.zeros(3)))
    k = generate_training_states(2, 1, 0).members[0]
    assert reward_for_state(target, v_dag, k) == pytest.approx(1.0, abs=1e-12)


def test_shot_mode_needs_prep_circuit():
    spec = AnsatzSpec(2, 1)
    target = random_target(spec, 0)
    with pytest.raises(TypeError):
        reward_for_state(target, adjoint(target.circuit), StateVector.zero(2), shots=10)


def test_shot_estimate_within_binomial_band():
    spec = AnsatzSpec(2, 1)
    target = random_target(spec, 1)
    rng = np.random.default_rng(2)
    for k in generate_training_states(2, 5, 3).members:
        v_dag = adjoint(build_ansatz(spec, rng.normal(size=3)))
        exact = reward_for_state(target, v_dag, k)
        est = reward_for_state(target, v_dag, k, shots=100_000, rng=rng)
        assert abs(est - exact) <= 3 * math.sqrt(exact * (1 - exact) / 100_000) + 1e-12


def test_shot_estimator_unbiased_over_repeats():
    spec = AnsatzSpec(2, 1)
    target = random_target(spec, 4)
    v_dag = adjoint(build_ansatz(spec, [0.3, -0.2, 0.5]))
    states = generate_training_states(2, 4, 5)
    rng = np.random.default_rng(6)
    exact = estimate_fidelity(target, v_dag, states).value
    draws = [estimate_fidelity(target, v_dag, states, shots=200, rng=rng).value for _ in range(100)]
    se = np.std(draws) / math.sqrt(100)
    assert abs(np.mean(draws) - exact) < 3 * se


def test_estimate_is_uniform_mean():
    spec = AnsatzSpec(1, 1)
    target = TargetUnitary.from_params(spec, [math.pi / 2])  # maps |0> to |1>
    states = InitialStateSet("training", 1, [PrepCircuit(1, (), "I"), PrepCircuit(1, (Gate("H", (0,)),), "H")])
    # identity V: |0> gives 0, |+> -> RY(π/2)|+> = -|-> gives 0; use V = U for 1s
    est = estimate_fidelity(target, adjoint(target.circuit), states)
    assert est.value == pytest.approx(1.0)
    assert est.mode == "exact"
    est0 = estimate_fidelity(target, adjoint(build_ansatz(spec, [0.0])), states)
    assert est0.value == pytest.approx(np.mean(est0.per_state))
    mixed = InitialStateSet("training", 1, [PrepCircuit(1, (), "I"), PrepCircuit(1, (Gate("X", (0,)),), "X")])
    two = TargetUnitary.from_params(spec, [0.0])
    assert estimate_fidelity(two, adjoint(two.circuit), mixed).value == 1.0


def test_rewards_in_unit_interval():
    spec = AnsatzSpec(3, 2)
    target = random_target(spec, 7)
    states = generate_training_states(3, 9, 8)
    sim = RolloutSimulator(target, states.matrix())
    r = sim.exact_rewards(np.random.default_rng(9).normal(size=(50, param_count(spec))) * 3)
    assert np.all((r >= 0) & (r <= 1))


def test_local_estimate_tracks_full_fidelity():
    # one fixed 3-qubit instance, m = n^2 training states, 20 uniformly random angle vectors
    n = 3
    spec = AnsatzSpec(n, 2)
    target = random_target(spec, 0)
    full = RolloutSimulator(target, full_fidelity_states(n).matrix())
    local = RolloutSimulator(target, generate_training_states(n, n * n, 1).matrix())
    thetas = np.random.default_rng(2).uniform(0, 2 * math.pi, size=(20, param_count(spec)))
    diff = local.exact_rewards(thetas).mean(axis=1) - full.exact_rewards(thetas).mean(axis=1)
    assert np.max(np.abs(diff)) < 0.1


def test_tomographic_family_size_and_labels():
    s = full_fidelity_states(2)
    assert s.m == 16
    assert len({k.label for k in s.members}) == 16
    assert full_fidelity_states(2, "pauli").m == 36
    with pytest.raises(ValueError):
        full_fidelity_states(2, "bogus")


def test_tomographic_family_spans_operator_space():
    # the projectors |k><k| of a tomographically complete set span all 4^n operators
    K = full_fidelity_states(2).matrix()
    projectors = np.stack([np.outer(K[:, i], K[:, i].conj()).ravel() for i in range(K.shape[1])])
    assert np.linalg.matrix_rank(projectors) == 16


def test_full_fidelity_basis_is_a_two_design_average():
    # for a random unitary W on one qubit, the 6-state average equals (|tr W|^2 + 2) / 6
    rng = np.random.default_rng(13)
    spec = AnsatzSpec(1, 1)
    target = TargetUnitary.from_params(spec, [rng.uniform(0, 6)])
    W_angle = target.hidden_params[0]
    sim = RolloutSimulator(target, full_fidelity_states(1, "pauli").matrix())
    avg = sim.exact_rewards([0.0]).mean()
    tr = 2 * math.cos(W_angle)
    assert avg == pytest.approx((tr**2 + 2) / 6, abs=1e-12)


def test_hoeffding_spot_values():
    assert hoeffding_bound(0.1, 500) == pytest.approx(2 * math.exp(-10))
    assert hoeffding_bound(0.1, 500) == pytest.approx(9.08e-5, rel=1e-3)
    assert hoeffding_required_m(0.05, 0.01) == 1060
    assert hoeffding_required_m(0.1, 1e-4) == 496


@pytest.mark.parametrize("eps,delta", [(0.1, 2.0), (0.0, 0.1), (1.0, 0.1), (0.1, 0.0)])
def test_hoeffding_rejects_out_of_range(eps, delta):
    with pytest.raises(ValueError):
        hoeffding_required_m(eps, delta)


@settings(max_examples=200)
@given(st.floats(1e-3, 0.999), st.floats(1e-12, 0.999))
def test_hoeffding_m_is_minimal(eps, delta):
    m = hoeffding_required_m(eps, delta)
    assert hoeffding_bound(eps, m) <= delta
    if m > 1:
        assert hoeffding_bound(eps, m - 1) > delta


def test_hoeffding_empirical_coverage():
    n = 3
    spec = AnsatzSpec(n, 2)
    target = random_target(spec, 14)
    pool = RolloutSimulator(target, full_fidelity_states(n, "pauli").matrix())
    rng = np.random.default_rng(15)
    for scale in (0.3, 1.0):
        theta = target.hidden_params + scale * rng.normal(size=param_count(spec))
        per_state = pool.exact_rewards(theta)[0]
        F_full = per_state.mean()
        for m, eps in [(9, 0.3), (30, 0.2), (60, 0.15)]:
            draws = np.array([per_state[rng.choice(per_state.size, m, replace=False)].mean()
                              for _ in range(1000)])
            frac = np.mean(np.abs(draws - F_full) >= eps)
            assert frac <= hoeffding_bound(eps, m)
