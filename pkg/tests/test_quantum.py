import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridlip import numerics as nx
from hybridlip import quantum as qm
from hybridlip.errors import DimensionMismatch, InvalidPovm, InvalidState, UnboundParameter, ValidationError

from conftest import random_density, random_unitary

KET0 = np.diag([1.0, 0.0]).astype(complex)
KET1 = np.diag([0.0, 1.0]).astype(complex)
PLUS = 0.5 * np.ones((2, 2), dtype=complex)


def one_qubit(*gates, povm=None):
    return qm.CircuitSpec(1, gates, povm or qm.Povm.computational(1))


def test_identity_circuit_leaves_state(rng):
    c = qm.CircuitSpec(2, (), qm.Povm.computational(2))
    rho = random_density(4, rng)
    np.testing.assert_allclose(qm.apply_circuit(c, rho), rho, atol=1e-15)


def test_x_flips_ground_state():
    out = qm.apply_circuit(one_qubit(qm.Gate("x", 0)), KET0)
    np.testing.assert_allclose(out, KET1, atol=1e-15)


def test_circuit_preserves_spectrum():
    for seed in range(20):
        c = qm.random_circuit(3, 12, seed)
        rho = random_density(8, np.random.default_rng(seed))
        out = qm.apply_circuit(c, rho)
        assert abs(np.trace(out).real - 1) <= 1e-12
        np.testing.assert_allclose(nx.eigvalsh(out), nx.eigvalsh(rho), atol=1e-9)


def test_unbound_parameter_raises():
    c = one_qubit(qm.Gate("ry", 0, slot=0))
    with pytest.raises(UnboundParameter):
        qm.apply_circuit(c, KET0)
    out = qm.apply_circuit(c.bind([np.pi]), KET0)
    np.testing.assert_allclose(out, KET1, atol=1e-15)
    assert c.params is None  # binding does not mutate


def test_gate_validation():
    with pytest.raises(ValidationError):
        qm.Gate("cnot", 0, control=0)
    with pytest.raises(ValidationError):
        qm.Gate("ry", 0)
    with pytest.raises(ValidationError):
        qm.Gate("swap", 0)
    with pytest.raises(ValidationError):
        qm.CircuitSpec(2, (qm.Gate("x", 2),), qm.Povm.computational(2))


def test_cnot_truth_table():
    u = qm.cnot(0, 1, 2)
    # |10> -> |11>, |11> -> |10>
    assert u[3, 2] == 1 and u[2, 3] == 1 and u[0, 0] == 1 and u[1, 1] == 1


def test_measure_probs_examples():
    np.testing.assert_allclose(qm.measure_probs(one_qubit(), KET0), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(qm.measure_probs(one_qubit(qm.Gate("h", 0)), KET0), [0.5, 0.5], atol=1e-12)


def test_measure_probs_normalized():
    for seed in range(100):
        c = qm.random_circuit(3, 10, seed, outcomes=int(np.random.default_rng(seed).integers(1, 9)))
        p = qm.measure_probs(c, random_density(8, np.random.default_rng(seed + 1)))
        assert abs(p.sum() - 1) <= 1e-8
        assert np.all(p >= 0)


def test_invalid_povm_rejected():
    with pytest.raises(InvalidPovm):
        qm.Povm((KET0,))
    with pytest.raises(InvalidPovm):
        qm.Povm.from_groups(1, [[0], [0, 1]])
    with pytest.raises(DimensionMismatch):
        qm.CircuitSpec(1, (), qm.Povm.computational(2))


def test_heisenberg_identity_circuit():
    a = qm.heisenberg_observables(qm.CircuitSpec(2, (), qm.Povm.computational(2)))
    for i in range(4):
        expected = np.zeros((4, 4))
        expected[i, i] = 1
        np.testing.assert_allclose(a[i], expected, atol=1e-15)


def test_heisenberg_matches_schrodinger():
    for seed in range(30):
        kind = "general" if seed % 2 else "groups"
        c = qm.random_circuit(3, 10, seed, outcomes=4, povm_kind=kind)
        a = qm.heisenberg_observables(c)
        np.testing.assert_allclose(a.sum(axis=0), np.eye(8), atol=1e-8)
        rho = random_density(8, np.random.default_rng(seed))
        dual = np.einsum("kij,ji->k", a, rho).real
        np.testing.assert_allclose(dual, qm.measure_probs(c, rho), atol=1e-10)


def test_trace_distance_examples(rng):
    rho = random_density(4, rng)
    assert qm.trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)
    assert qm.trace_distance(KET0, KET1) == pytest.approx(1.0, abs=1e-14)
    overlap = abs(np.array([1, 0]) @ np.array([1, 1]) / np.sqrt(2)) ** 2
    closed_form = np.sqrt(1 - overlap)
    assert closed_form == pytest.approx(0.70710678, abs=1e-8)
    assert qm.trace_distance(KET0, PLUS) == pytest.approx(closed_form, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        qm.trace_distance(KET0, np.eye(4) / 4)


def test_total_variation_examples():
    assert qm.total_variation([1, 0], [0, 1]) == 1.0
    assert qm.total_variation([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert qm.total_variation([0.5, 0.5], [0.75, 0.25]) == 0.25
    with pytest.raises(DimensionMismatch):
        qm.total_variation([1.0], [0.5, 0.5])


def test_angle_encode_examples():
    np.testing.assert_allclose(qm.angle_encode([0, 0, 0], 3), np.diag([1.0] + [0.0] * 7), atol=1e-15)
    np.testing.assert_allclose(qm.angle_encode([np.pi], 1), KET1, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        qm.angle_encode([0.1, 0.2], 3)


def test_angle_encode_matches_ry_circuit(rng):
    x = rng.uniform(0, np.pi, 3)
    c = qm.CircuitSpec(3, tuple(qm.Gate("ry", j, value=x[j]) for j in range(3)), qm.Povm.computational(3))
    ground = np.zeros((8, 8), dtype=complex)
    ground[0, 0] = 1
    np.testing.assert_allclose(qm.angle_encode(x, 3), qm.apply_circuit(c, ground), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=5))
def test_angle_encode_is_pure(x):
    rho = qm.angle_encode(x, len(x))
    assert abs(np.trace(rho @ rho).real - 1) <= 1e-9


def test_random_pure_state():
    for seed in range(5):
        rho = qm.random_pure_state(4, seed)
        assert abs(np.trace(rho).real - 1) <= 1e-12
        assert nx.eigvalsh(rho)[-2] < 1e-10
    np.testing.assert_array_equal(qm.random_pure_state(4, 9), qm.random_pure_state(4, 9))
    mean = sum(qm.random_pure_state(3, s) for s in range(10_000)) / 10_000
    assert np.max(np.abs(mean - np.eye(3) / 3)) < 0.05


def test_check_density_rejects():
    with pytest.raises(InvalidState):
        qm.check_density(np.diag([1.5, -0.5]))
    with pytest.raises(InvalidState):
        qm.check_density(np.diag([0.5, 0.4]))


# properties -----------------------------------------------------------------

def _triple(seed):
    rng = np.random.default_rng(seed)
    qubits = int(rng.integers(1, 4))
    c = qm.random_circuit(qubits, 8, seed, outcomes=int(rng.integers(1, 2**qubits + 1)),
                          povm_kind=("general" if seed % 3 == 0 else "groups"))
    d = 2**qubits
    rank = lambda: int(rng.integers(1, d + 1))
    return c, random_density(d, rng, rank()), random_density(d, rng, rank())


@pytest.mark.parametrize("seed", range(120))
def test_contractivity(seed):
    c, rho, sigma = _triple(seed)
    tv = qm.total_variation(qm.measure_probs(c, rho), qm.measure_probs(c, sigma))
    assert tv <= qm.trace_distance(rho, sigma) + 1e-8


def test_unitary_invariance(rng):
    for _ in range(20):
        rho, sigma, u = random_density(4, rng), random_density(4, rng), random_unitary(4, rng)
        d = qm.trace_distance(u @ rho @ u.conj().T, u @ sigma @ u.conj().T)
        assert d == pytest.approx(qm.trace_distance(rho, sigma), abs=1e-9)


def test_tau_decomposition(rng):
    for _ in range(20):
        rho, sigma = random_density(8, rng), random_density(8, rng)
        w, v = nx.herm_eig(rho - sigma)
        tp = v @ np.diag(np.clip(w, 0, None)) @ v.conj().T
        tm = v @ np.diag(np.clip(-w, 0, None)) @ v.conj().T
        assert abs(np.trace(tp) - np.trace(tm)) <= 1e-9
        assert np.max(np.abs(tp @ tm)) <= 1e-9
        assert abs(nx.trace_norm(rho - sigma) - 2 * np.trace(tp).real) <= 1e-9


def test_circuit_json_roundtrip():
    doc = {
        "qubits": 2,
        "gates": [
            {"name": "ry", "target": 0, "param": {"kind": "trainable", "index": 0}},
            {"name": "rx", "target": 1, "param": {"kind": "fixed", "value": 1.5708}},
            {"name": "cnot", "control": 0, "target": 1},
        ],
        "povm": {"groups": [[0, 1], [2, 3]]},
        "params": [0.3],
    }
    c = qm.circuit_from_json(doc)
    assert c.n_params == 1 and c.n_outcomes == 2
    again = qm.circuit_from_json(json.loads(json.dumps(qm.circuit_to_json(c))))
    np.testing.assert_allclose(again.unitary, c.unitary)
    general = qm.random_circuit(1, 3, 0, outcomes=3, povm_kind="general")
    again = qm.circuit_from_json(qm.circuit_to_json(general))
    np.testing.assert_allclose(again.povm.effects, general.povm.effects, atol=1e-15)
    assert qm.circuit_from_json({"qubits": 1, "gates": [], "povm": "computational"}).n_outcomes == 2
