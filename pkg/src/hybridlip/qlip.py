"""Lipschitz constant of a quantum circuit from trace distance to total variation.

The constant is the supremum of ``TV(C(rho), C(sigma)) / D(rho, sigma)``.
Writing ``Delta = rho - sigma`` and ``A_i`` for the Heisenberg observables,
the ratio is ``sum_i |tr(A_i Delta)| / ||Delta||_1``, a homogeneous function,
so the constant equals ``max sum_i |tr(A_i Delta)|`` over Hermitian,
traceless ``Delta`` with unit trace norm.

Three routes are provided:

* :func:`lipschitz_exact` enumerates sign patterns ``s`` and takes half the
  spectral spread of ``sum_i s_i A_i``. A convex function is maximized at an
  extreme point of the feasible set, and those are ``(uu^H - vv^H)/2`` for
  orthonormal ``u, v``.
* :func:`lipschitz_subgradient` runs projected subgradient ascent directly on
  the convex program. It never exceeds the exact value.
* :func:`lipschitz_sampling` evaluates the ratio on random pure-state pairs.

Note on normalization: with the trace-norm ball of radius one, the optimum
of ``(1/2) sum_i |tr(A_i Delta)|`` is half the ratio above. Every function
here reports the ratio itself.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .errors import OutcomeLimitExceeded
from .quantum import CircuitSpec, heisenberg_observables, probs_from_states, random_statevectors

MAX_EXACT_OUTCOMES = 16
_EIG_CHUNK = 2048


@dataclass(frozen=True, eq=False)
class QuantumBoundReport:
    k_star: float
    method: str
    witness: tuple | None = None
    sign_pattern: np.ndarray | None = None

    def witness_ratio(self, c: CircuitSpec) -> float:
        """TV / trace-distance ratio realized by the stored witness pair."""
        if self.witness is None:
            raise ValueError("report carries no witness")
        return state_pair_ratio(heisenberg_observables(c), *self.witness)

    def to_json(self) -> dict:
        return {"k_star": self.k_star, "method": self.method}


def state_pair_ratio(observables: np.ndarray, rho: np.ndarray, sigma: np.ndarray) -> float:
    delta = rho - sigma
    tn = nx.trace_norm(delta)
    if tn == 0.0:
        return 0.0
    return float(np.abs(np.einsum("kij,ji->k", observables, delta).real).sum() / tn)


def sign_patterns(n: int) -> np.ndarray:
    """All ``{+1,-1}^n`` vectors with the first entry fixed to ``+1``."""
    if n == 0:
        return np.zeros((1, 0))
    tails = np.array(list(itertools.product((1.0, -1.0), repeat=n - 1))).reshape(2 ** (n - 1), n - 1)
    return np.hstack([np.ones((tails.shape[0], 1)), tails])


def lipschitz_exact(c: CircuitSpec) -> QuantumBoundReport:
    """Exact constant by sign-pattern enumeration.

    Each pattern costs one Hermitian eigenproblem of size ``2^qubits``;
    there are ``2^(outcomes - 1)`` of them.

    Raises:
        OutcomeLimitExceeded: for more than 16 outcomes.
    """
    n_out = c.n_outcomes
    if n_out > MAX_EXACT_OUTCOMES:
        raise OutcomeLimitExceeded(
            f"{n_out} outcomes exceeds the exact-method cap of {MAX_EXACT_OUTCOMES}; "
            "use lipschitz_subgradient"
        )
    a = heisenberg_observables(c)
    patterns = sign_patterns(n_out)
    best_spread, best_idx = -1.0, 0
    for start in range(0, len(patterns), _EIG_CHUNK):
        h = np.einsum("pk,kij->pij", patterns[start:start + _EIG_CHUNK], a)
        w = np.linalg.eigvalsh(h)
        spread = w[:, -1] - w[:, 0]
        i = int(np.argmax(spread))
        if spread[i] > best_spread:
            best_spread, best_idx = float(spread[i]), start + i
    s = patterns[best_idx]
    w, v = nx.herm_eig(np.einsum("k,kij->ij", s, a), method="lapack")
    u_top, u_bot = v[:, -1], v[:, 0]
    witness = (np.outer(u_top, u_top.conj()), np.outer(u_bot, u_bot.conj()))
    k = 0.5 * float(w[-1] - w[0])
    return QuantumBoundReport(k, "exact", witness, s)


def project_traceless_ball(eigenvalues: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{x : sum(x) = 0, ||x||_1 <= 1}``.

    Works row-wise on a 2-d array.
    """
    y = np.asarray(eigenvalues, dtype=float)
    y = y - y.mean(axis=-1, keepdims=True)
    inside = np.abs(y).sum(axis=-1, keepdims=True) <= 1.0
    # positive part sums to 1/2 above threshold a, negative part to 1/2 below b
    a = _mass_threshold(y, 0.5)
    b = -_mass_threshold(-y, 0.5)
    out = np.maximum(y - a, 0.0) - np.maximum(b - y, 0.0)
    return np.where(inside, y, out)


def _mass_threshold(y: np.ndarray, mass: float) -> np.ndarray:
    """Per-row threshold ``t`` with ``sum(max(y - t, 0)) == mass``."""
    z = -np.sort(-y, axis=-1)
    css = np.cumsum(z, axis=-1) - mass
    k = np.arange(1, z.shape[-1] + 1)
    count = np.sum(z - css / k > 0, axis=-1, keepdims=True)
    return np.take_along_axis(css, count - 1, axis=-1) / count


def _project(delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project a stack of Hermitian iterates; also return their trace norms."""
    w, v = np.linalg.eigh(delta)
    x = project_traceless_ball(w)
    return (v * x[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2)), np.abs(x).sum(axis=-1)


def lipschitz_subgradient(
    c: CircuitSpec,
    iters: int = 150,
    seed: int = 0,
    restarts: int = 128,
    step: float = 1.0,
) -> QuantumBoundReport:
    """Projected subgradient ascent on the trace-norm-ball program.

    All restarts advance together as one stack of iterates, with step size
    ``step / sqrt(t)``. The program maximizes a convex function, so plain
    ascent stalls at local maxima; many cheap random restarts are the
    remedy. The best iterate is reported as a ratio, which makes the value
    a certified lower estimate of :func:`lipschitz_exact`. The witness is
    the normalized positive/negative eigenspace split of the best iterate.
    """
    a = heisenberg_observables(c)
    d = c.dim
    rng = np.random.default_rng(seed)
    # start at random extreme points (uu^H - vv^H)/2
    g = rng.standard_normal((restarts, d, 2)) + 1j * rng.standard_normal((restarts, d, 2))
    q, _ = np.linalg.qr(g)
    u, v = q[..., 0], q[..., 1]
    delta = 0.5 * (np.einsum("ri,rj->rij", u, u.conj()) - np.einsum("ri,rj->rij", v, v.conj()))
    tn = np.ones(restarts)
    best_val, best_delta = 0.0, None
    for t in range(1, iters + 1):
        coeffs = np.einsum("kij,rji->rk", a, delta).real
        vals = np.abs(coeffs).sum(axis=1) / np.maximum(tn, 1e-300)
        vals[tn <= 1e-15] = 0.0
        r = int(np.argmax(vals))
        if vals[r] > best_val:
            best_val, best_delta = float(vals[r]), delta[r]
        signs = np.where(coeffs >= 0, 1.0, -1.0)
        delta, tn = _project(delta + (step / np.sqrt(t)) * np.einsum("rk,kij->rij", signs, a))
    if best_delta is None:
        return QuantumBoundReport(0.0, "subgradient")
    w, v = nx.herm_eig(best_delta, method="lapack")
    plus = (v * np.clip(w, 0, None)) @ v.conj().T
    minus = (v * np.clip(-w, 0, None)) @ v.conj().T
    witness = (plus / np.trace(plus).real, minus / np.trace(minus).real)
    signs = np.where(np.einsum("kij,ji->k", a, best_delta).real >= 0, 1.0, -1.0)
    return QuantumBoundReport(best_val, "subgradient", witness, signs)


def lipschitz_sampling(c: CircuitSpec, pairs: int = 10_000, seed: int = 0, chunk: int = 1024) -> QuantumBoundReport:
    """Largest TV / trace-distance ratio over random pure-state pairs.

    Chunk ``k`` draws from ``default_rng([seed, k])``, so the result depends
    only on ``(seed, pairs, chunk)``.
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    a = heisenberg_observables(c)
    best, witness = 0.0, None
    for k, start in enumerate(range(0, pairs, chunk)):
        n = min(chunk, pairs - start)
        rng = np.random.default_rng([seed, k])
        psi = random_statevectors(n, c.dim, rng)
        phi = random_statevectors(n, c.dim, rng)
        tv = 0.5 * np.abs(probs_from_states(a, psi) - probs_from_states(a, phi)).sum(axis=1)
        dist = np.sqrt(np.clip(1.0 - np.abs(np.einsum("bi,bi->b", psi.conj(), phi)) ** 2, 0.0, None))
        ratio = np.where(dist > 1e-12, tv / np.maximum(dist, 1e-12), 0.0)
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best = float(ratio[i])
            witness = (np.outer(psi[i], psi[i].conj()), np.outer(phi[i], phi[i].conj()))
    return QuantumBoundReport(best, "sampling", witness)
