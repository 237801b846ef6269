import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridlip import classical as cl
from hybridlip import hybrid as hy
from hybridlip.errors import DimensionMismatch, UnsupportedEncoding
from hybridlip.norms import NormTag, vector_norm
from hybridlip.quantum import CircuitSpec, Gate, Povm, angle_encode, measure_probs, random_circuit


def identity_circuit(qubits, outcomes=None):
    return CircuitSpec(qubits, (), Povm.computational(qubits, outcomes))


def dense_identity(n):
    return cl.DenseNet((cl.Layer(np.eye(n), np.zeros(n), "none"),))


def test_identity_blocks_give_encoded_probabilities(rng):
    c = identity_circuit(2)
    m = hy.HybridModel((dense_identity(2), hy.QuantumBlock(c), dense_identity(4)))
    for _ in range(10):
        x = rng.uniform(0, np.pi, 2)
        np.testing.assert_allclose(hy.hybrid_forward(m, x), measure_probs(c, angle_encode(x, 2)), atol=1e-12)


def test_zero_input_hits_ground_state():
    m = hy.HybridModel((hy.QuantumBlock(identity_circuit(3)),))
    np.testing.assert_allclose(hy.hybrid_forward(m, np.zeros(3)), np.eye(8)[0], atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_quantum_output_is_distribution(seed):
    f1 = cl.random_dense_net([4, 6, 3], seed)
    m = hy.HybridModel((f1, hy.QuantumBlock(random_circuit(3, 8, seed, outcomes=5))))
    out = hy.hybrid_forward(m, np.random.default_rng(seed).uniform(0, 3, (50, 4)))
    assert np.all(out >= 0)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)


def test_batch_matches_rows(rng):
    m = hy.random_hybrid_model(1)
    x = rng.uniform(0, 3, (7, 3))
    np.testing.assert_allclose(hy.hybrid_forward(m, x), np.stack([hy.hybrid_forward(m, r) for r in x]), atol=1e-14)


def test_chaining_violation():
    with pytest.raises(DimensionMismatch):
        hy.HybridModel((dense_identity(3), hy.QuantumBlock(identity_circuit(2))))
    with pytest.raises(DimensionMismatch):
        hy.HybridModel((hy.QuantumBlock(identity_circuit(2)), dense_identity(3)))
    m = hy.HybridModel((dense_identity(2),))
    with pytest.raises(DimensionMismatch):
        hy.hybrid_forward(m, np.ones(3))


def test_unsupported_encoding():
    with pytest.raises(UnsupportedEncoding):
        hy.QuantumBlock(identity_circuit(1), encoding="amplitude")
    with pytest.raises(UnsupportedEncoding):
        hy.encoder_constant(2, "l2", encoding="amplitude")


def test_encoder_constant_values():
    assert hy.encoder_constant(1, "l1") == 0.5
    assert hy.encoder_constant(3, "l2") == pytest.approx(np.sqrt(3) / 2)
    assert hy.encoder_constant(3, "linf") == pytest.approx(1.5)


def _encoded_distance(a, b):
    # product pure states: D = sqrt(1 - prod cos^2(d_j / 2))
    # 1 - prod(1 - s_j^2) evaluated without cancellation for small gaps
    s2 = np.sin((a - b) / 2) ** 2
    return np.sqrt(-np.expm1(np.log1p(-np.minimum(s2, 1 - 1e-300)).sum(axis=-1)))


def test_encoder_single_qubit_closed_form(rng):
    a, b = rng.uniform(-np.pi, np.pi, (2, 100_000, 1))
    d = _encoded_distance(a, b)
    np.testing.assert_allclose(d, np.abs(np.sin((a - b) / 2))[:, 0], atol=1e-12)
    assert np.all(d <= hy.encoder_constant(1, "l1") * np.abs(a - b)[:, 0] + 1e-12)
    assert _encoded_distance(a, a).max() == 0.0


@pytest.mark.parametrize("norm", ["l1", "l2", "linf"])
@pytest.mark.parametrize("qubits", [1, 2, 3])
def test_encoder_constant_sampling(norm, qubits, rng):
    a = rng.uniform(0, np.pi, (100_000, qubits))
    b = a + rng.normal(size=a.shape) * rng.uniform(1e-4, 3, (100_000, 1))
    ratio = _encoded_distance(a, b) / vector_norm(a - b, norm)
    assert ratio.max() <= hy.encoder_constant(qubits, norm) + 1e-12


def test_encoder_distance_against_density_matrices(rng):
    from hybridlip.quantum import trace_distance
    for _ in range(20):
        a, b = rng.uniform(0, np.pi, (2, 3))
        assert trace_distance(angle_encode(a, 3), angle_encode(b, 3)) == pytest.approx(_encoded_distance(a, b), abs=1e-9)


def test_readout_factors(rng):
    for _ in range(200):
        p, q = rng.dirichlet(np.ones(5), 2)
        tv = 0.5 * np.abs(p - q).sum()
        assert np.linalg.norm(p - q, 1) <= hy.readout_factor("l1") * tv + 1e-12
        assert np.linalg.norm(p - q, 2) <= hy.readout_factor("l2") * tv + 1e-12
        assert np.abs(p - q).max() <= hy.readout_factor("linf") * tv + 1e-12


def test_compose_arithmetic():
    assert hy.compose_bounds([2.0, 0.5, 1.0]) == 1.0
    assert hy.compose_bounds([2.0], [2.0, 1.0]) == 4.0


def test_single_outcome_kills_sensitivity():
    q = hy.QuantumBlock(CircuitSpec(2, (Gate("h", 0),), Povm.computational(2, 1)))
    m = hy.HybridModel((cl.random_dense_net([3, 4, 2], 0), q, dense_identity(1)))
    assert hy.hybrid_lip_bound(m).total == 0.0
    assert hy.hybrid_lip_lower(m, 100, 0) == 0.0


def test_identity_pipeline_bound():
    # encoder sqrt(n)/2, circuit 1, readout 2: the constant for one qubit is 1
    m = hy.HybridModel((hy.QuantumBlock(identity_circuit(1)),))
    rep = hy.hybrid_lip_bound(m)
    assert rep.total == pytest.approx(1.0, abs=1e-9)
    assert hy.hybrid_lip_lower(m, 500, 0) == pytest.approx(np.sqrt(2) / 2, rel=1e-3)


@pytest.mark.parametrize("norm", ["l1", "l2", "linf"])
def test_report_consistency(norm):
    m = hy.random_hybrid_model(4)
    rep = hy.hybrid_lip_bound(m, norm)
    assert abs(rep.product() - rep.total) <= 1e-12 * max(1.0, rep.total)
    assert rep.stage_product("dense") * rep.stage_product("quantum") == pytest.approx(rep.total, rel=1e-12)
    for b in rep.per_block:
        assert isinstance(b.in_tag, NormTag) and isinstance(b.out_tag, NormTag)
    tags = [(b.in_tag, b.out_tag) for b in rep.per_block]
    assert (NormTag.TRACE, NormTag.TV) in tags
    doc = json.loads(json.dumps(rep.to_json()))
    assert doc["total"] == rep.total
    if norm == "l2":
        assert [c["factor"] for c in doc["conversions"]] == [2.0, 1.0]


@pytest.mark.parametrize("seed", range(20))
def test_soundness_random_models(seed):
    m = hy.random_hybrid_model(seed, qubits=2 + seed % 2)
    rep = hy.hybrid_lip_bound(m, samples=400, seed=seed)
    assert rep.lower_witness <= rep.total + 1e-8
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(0, np.pi, (5000, 3))
    x2 = x1 + rng.normal(size=x1.shape) * rng.uniform(1e-4, 2, (5000, 1))
    lhs = np.linalg.norm(hy.hybrid_forward(m, x1) - hy.hybrid_forward(m, x2), axis=1)
    assert np.all(lhs <= rep.total * np.linalg.norm(x1 - x2, axis=1) + 1e-8)


@pytest.mark.parametrize("norm", ["l1", "linf"])
def test_soundness_other_norms(norm):
    for seed in range(5):
        m = hy.random_hybrid_model(seed)
        total = hy.hybrid_lip_bound(m, norm).total
        assert hy.hybrid_lip_lower(m, 300, seed, norm) <= total + 1e-8


def test_lower_affine_identity():
    m = hy.HybridModel((dense_identity(3),))
    assert hy.hybrid_lip_lower(m, 50, 0) == pytest.approx(1.0, rel=0.05)
    scaled = hy.HybridModel((cl.DenseNet((cl.Layer(np.diag([3.0, 1.0]), np.zeros(2)),)),))
    assert hy.hybrid_lip_lower(scaled, 50, 0) == pytest.approx(3.0, rel=0.05)


def test_lower_constant_model():
    zero = cl.DenseNet((cl.Layer(np.zeros((2, 3)), np.ones(2), "relu"),))
    assert hy.hybrid_lip_lower(hy.HybridModel((zero,)), 100, 0) == 0.0


@given(c=st.floats(1.01, 10.0), seed=st.integers(0, 50))
@settings(max_examples=25, deadline=None)
def test_scaling_monotonicity(c, seed):
    m = hy.random_hybrid_model(seed)
    f1 = m.blocks[0]
    params = f1.params()
    params[0] = (c * params[0][0], params[0][1])
    scaled = m.replace_block(0, f1.replace_params(params))
    a = hy.hybrid_lip_bound(m, classical_method="product").per_block[0].constant
    b = hy.hybrid_lip_bound(scaled, classical_method="product").per_block[0].constant
    assert b == pytest.approx(c * a, rel=1e-9)


def test_input_jacobian_matches_finite_differences(rng):
    m = hy.random_hybrid_model(7, qubits=3)
    for _ in range(5):
        x = rng.uniform(0, np.pi, 3)
        h = 1e-6
        fd = np.stack([(hy.hybrid_forward(m, x + h * e) - hy.hybrid_forward(m, x - h * e)) / (2 * h)
                       for e in np.eye(3)], axis=1)
        np.testing.assert_allclose(hy.hybrid_jacobian(m, x), fd, atol=1e-7)


def test_json_roundtrip(rng):
    m = hy.default_model(3)
    doc = json.loads(json.dumps(m.to_json()))
    kinds = [b.get("type") for b in doc["blocks"]]
    assert kinds == ["dense", "dense", "quantum", "dense"]
    assert doc["blocks"][2]["encoding"] == "angle-ry" and "params" in doc["blocks"][2]
    again = hy.HybridModel.from_json(doc)
    assert len(again.blocks) == 3
    x = rng.uniform(0, np.pi, (5, 4))
    np.testing.assert_array_equal(hy.hybrid_forward(again, x), hy.hybrid_forward(m, x))
