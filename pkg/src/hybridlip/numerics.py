"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects (complex128 unless the caller
hands in real data). Every routine here is a pure function of its inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidOperator, NumericalError

HERMITIAN_ATOL = 1e-9
SPECTRAL_SEED = 20240611


class HermEigResult(NamedTuple):
    """Eigenvalues in ascending order and the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a)
    if m.ndim != 2 or m.size == 0:
        raise InvalidOperator(f"{name} must be a nonempty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidOperator(f"{name} has non-finite entries")
    return m


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(
        np.max(np.abs(a - a.conj().T), initial=0.0) <= atol
    )


def hermitian_part(a, name: str = "matrix") -> np.ndarray:
    """Validate Hermiticity and return ``(a + a†)/2`` as complex128."""
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise InvalidOperator(f"{name} must be square, got shape {m.shape}")
    if not is_hermitian(m):
        dev = np.max(np.abs(m - m.conj().T))
        raise InvalidOperator(f"{name} is not Hermitian (max |a - a^H| = {dev:.3e})")
    m = m.astype(complex)
    return 0.5 * (m + m.conj().T)


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _jacobi(a: np.ndarray, tol: float, max_sweeps: int) -> HermEigResult:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return HermEigResult(np.zeros(n), v)
    target = tol * scale
    for _ in range(max_sweeps):
        if _off_norm(a) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # phase rotation making a[p, q] real, then a real Jacobi rotation
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    else:
        if _off_norm(a) > target:
            raise NumericalError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return HermEigResult(w[order], v[:, order])


def herm_eig(a, tol: float = 1e-12, *, method: str = "jacobi", max_sweeps: int = 60) -> HermEigResult:
    """Eigendecomposition of a Hermitian matrix.

    Args:
        a: square matrix with ``max|a - a^H| <= 1e-9``. It is symmetrized
            before solving.
        tol: convergence threshold on the off-diagonal Frobenius norm,
            relative to ``||a||_F`` (Jacobi only).
        method: ``"jacobi"`` for the cyclic complex Jacobi sweep, or
            ``"lapack"`` to delegate to ``numpy.linalg.eigh`` in hot loops.

    Returns:
        :class:`HermEigResult` with ascending eigenvalues.

    Raises:
        InvalidOperator: for non-square or non-Hermitian input.
    """
    h = hermitian_part(a)
    if method == "jacobi":
        return _jacobi(h, tol, max_sweeps)
    if method == "lapack":
        w, v = np.linalg.eigh(h)
        return HermEigResult(w, v)
    raise ValueError(f"unknown eigensolver method {method!r}")


def eigvalsh(a) -> np.ndarray:
    return herm_eig(a).eigenvalues


def spectral_norm(a, iters: int = 1000, tol: float = 1e-13, seed: int = SPECTRAL_SEED) -> float:
    """Largest singular value by power iteration on ``a^H a``.

    The start vector is drawn from a fixed seed so repeated calls agree
    bit-for-bit. Returns 0 for the zero matrix.
    """
    m = as_matrix(a)
    if not np.any(m):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(m.shape[1])
    if np.iscomplexobj(m):
        x = x + 1j * rng.standard_normal(m.shape[1])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = m.conj().T @ (m @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # start vector fell into the null space; restart along the heaviest column
            x = np.zeros(m.shape[1], dtype=m.dtype)
            x[np.argmax(np.linalg.norm(m, axis=0))] = 1.0
            continue
        x = y / ny
        new = np.linalg.norm(m @ x)
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(est)


def trace_norm(a) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(herm_eig(a).eigenvalues)))


def psd_feasible(a, shift: float | None = None) -> bool:
    """True iff ``a + shift*I`` has a Cholesky factorization.

    ``shift`` defaults to ``1e-9 * max(1, max|a_ij|)``.
    """
    h = hermitian_part(a)
    if shift is None:
        shift = 1e-9 * max(1.0, float(np.max(np.abs(h))))
    try:
        np.linalg.cholesky(h + shift * np.eye(h.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def matrix_to_json(a) -> list:
    """Nested row-major list of ``[re, im]`` pairs."""
    m = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InvalidOperator("complex matrix JSON must be rows of [re, im] pairs")
    return as_matrix(arr[..., 0] + 1j * arr[..., 1])
