import numpy as np
import pytest

from hybridlip import qlip
from hybridlip import quantum as qm
from hybridlip.errors import OutcomeLimitExceeded

from conftest import random_density


def identity_1q():
    return qm.CircuitSpec(1, (), qm.Povm.computational(1))


def single_outcome(qubits=2):
    return qm.CircuitSpec(qubits, (qm.Gate("h", 0),), qm.Povm.computational(qubits, 1))


def random_case(seed, qubits=None):
    rng = np.random.default_rng(seed)
    q = qubits or int(rng.integers(2, 4))
    o = int(rng.integers(2, min(8, 2**q) + 1))
    return qm.random_circuit(q, 12, seed, outcomes=o, povm_kind="general" if seed % 2 else "groups")


def test_exact_forced_values():
    rep = qlip.lipschitz_exact(identity_1q())
    assert rep.k_star == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(np.abs(rep.sign_pattern), [1, 1])
    assert rep.sign_pattern[0] == -rep.sign_pattern[1]
    assert qlip.lipschitz_exact(single_outcome()).k_star == pytest.approx(0.0, abs=1e-12)


def test_exact_outcome_cap():
    c = qm.CircuitSpec(5, (), qm.Povm.computational(5, 17))
    with pytest.raises(OutcomeLimitExceeded):
        qlip.lipschitz_exact(c)
    assert 0 <= qlip.lipschitz_exact(c.with_povm(qm.Povm.computational(5, 16))).k_star <= 1 + 1e-9


def bloch_grid_oracle(c, n_theta=400, n_phi=800):
    """Brute force over the sphere: on one qubit every vertex is (n . sigma)/2."""
    paulis = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    a = qm.heisenberg_observables(c)
    coef = np.array([[np.trace(ai @ p).real for p in paulis] for ai in a])
    th, ph = np.meshgrid(np.linspace(0, np.pi, n_theta), np.linspace(0, 2 * np.pi, n_phi))
    n = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    return 0.5 * np.abs(n @ coef.T).sum(axis=1).max()


@pytest.mark.parametrize("seed", range(8))
def test_exact_matches_sphere_brute_force(seed):
    c = qm.random_circuit(1, 6, seed, outcomes=int(2 + seed % 3), povm_kind="general")
    exact = qlip.lipschitz_exact(c).k_star
    brute = bloch_grid_oracle(c)
    assert brute <= exact + 1e-9
    assert exact - brute < 2e-4


@pytest.mark.parametrize("seed", range(10))
def test_cross_oracle_agreement(seed):
    c = random_case(seed)
    exact = qlip.lipschitz_exact(c).k_star
    sub = qlip.lipschitz_subgradient(c, seed=seed).k_star
    samp = qlip.lipschitz_sampling(c, 2000, seed).k_star
    assert exact - 1e-3 <= sub <= exact + 1e-6
    assert samp <= sub + 1e-6
    assert sub <= exact + 2e-6


def test_subgradient_trivial_cases():
    assert qlip.lipschitz_subgradient(identity_1q()).k_star == pytest.approx(1.0, abs=1e-4)
    assert qlip.lipschitz_subgradient(single_outcome()).k_star == pytest.approx(0.0, abs=1e-9)


def test_sampling_cases():
    assert qlip.lipschitz_sampling(identity_1q(), 10_000, 0).k_star >= 0.95
    assert qlip.lipschitz_sampling(single_outcome(), 100, 0).k_star == 0.0
    c = random_case(3)
    assert qlip.lipschitz_sampling(c, 3000, 5).k_star == qlip.lipschitz_sampling(c, 3000, 5).k_star
    with pytest.raises(ValueError):
        qlip.lipschitz_sampling(c, 0)


def test_sampling_ratio_matches_general_distances():
    c = random_case(11)
    rep = qlip.lipschitz_sampling(c, 500, 2)
    rho, sigma = rep.witness
    tv = qm.total_variation(qm.measure_probs(c, rho), qm.measure_probs(c, sigma))
    assert tv / qm.trace_distance(rho, sigma) == pytest.approx(rep.k_star, abs=1e-9)


@pytest.mark.parametrize("seed", range(50))
def test_sampling_never_exceeds_exact(seed):
    c = random_case(seed + 500)
    assert qlip.lipschitz_sampling(c, 1000, seed).k_star <= qlip.lipschitz_exact(c).k_star + 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_witnesses_reproduce_k_star(seed):
    c = random_case(seed + 40)
    for rep in (qlip.lipschitz_exact(c), qlip.lipschitz_subgradient(c, seed=seed)):
        rho, sigma = rep.witness
        qm.check_density(rho)
        qm.check_density(sigma)
        assert rep.witness_ratio(c) == pytest.approx(rep.k_star, abs=1e-8)


def test_exact_bound_is_contractive():
    for seed in range(30):
        c = random_case(seed + 900)
        k = qlip.lipschitz_exact(c).k_star
        assert 0 <= k <= 1 + 1e-9
        rng = np.random.default_rng(seed)
        rho, sigma = random_density(c.dim, rng), random_density(c.dim, rng)
        tv = qm.total_variation(qm.measure_probs(c, rho), qm.measure_probs(c, sigma))
        assert tv <= k * qm.trace_distance(rho, sigma) + 1e-9


def test_sign_pattern_symmetry(rng):
    c = random_case(7)
    a = qm.heisenberg_observables(c)
    for _ in range(20):
        s = rng.choice([-1.0, 1.0], size=c.n_outcomes)
        w1 = np.linalg.eigvalsh(np.einsum("k,kij->ij", s, a))
        w2 = np.linalg.eigvalsh(np.einsum("k,kij->ij", -s, a))
        assert w1[-1] - w1[0] == pytest.approx(w2[-1] - w2[0], abs=1e-12)


def test_sign_patterns_enumeration():
    p = qlip.sign_patterns(3)
    assert p.shape == (4, 3)
    assert np.all(p[:, 0] == 1)
    assert len({tuple(r) for r in p}) == 4


def test_projection_against_convex_solver(rng):
    cp = pytest.importorskip("cvxpy")
    for _ in range(10):
        y = rng.normal(scale=rng.uniform(0.05, 2), size=6)
        x = cp.Variable(6)
        cp.Problem(cp.Minimize(cp.sum_squares(x - y)), [cp.sum(x) == 0, cp.norm1(x) <= 1]).solve()
        np.testing.assert_allclose(qlip.project_traceless_ball(y), x.value, atol=1e-5)


def test_projection_fixes_feasible_points():
    y = np.array([0.2, -0.1, -0.1])
    np.testing.assert_allclose(qlip.project_traceless_ball(y), y)
    vertex = np.array([0.5, 0.0, -0.5])
    np.testing.assert_allclose(qlip.project_traceless_ball(vertex), vertex)
