"""Density-matrix simulation of small variational circuits.

Qubit 0 is the most significant tensor factor, so basis state ``|b0 b1 ... b_{n-1}>``
has index ``sum_j b_j 2^(n-1-j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import numerics as nx
from .errors import (
    DimensionMismatch,
    InvalidPovm,
    InvalidState,
    NumericalError,
    UnboundParameter,
    UnsupportedGateParam,
    ValidationError,
)

MAX_QUBITS = 6
ROTATIONS = ("rx", "ry", "rz")
GATE_NAMES = ROTATIONS + ("h", "x", "z", "cnot")
POVM_ATOL = 1e-8
STATE_ATOL = 1e-9
NEG_PROB_FLOOR = -1e-10

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)


def rotation(name: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if name == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if name == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "rz":
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    raise ValueError(f"{name!r} is not a rotation gate")


def embed(u: np.ndarray, target: int, qubits: int) -> np.ndarray:
    """Lift a single-qubit operator onto ``target`` of an n-qubit register."""
    return nx.kron_all([u if j == target else _I2 for j in range(qubits)])


def cnot(control: int, target: int, qubits: int) -> np.ndarray:
    on0 = [_P0 if j == control else _I2 for j in range(qubits)]
    on1 = [_P1 if j == control else (_X if j == target else _I2) for j in range(qubits)]
    return nx.kron_all(on0) + nx.kron_all(on1)


@dataclass(frozen=True)
class Gate:
    """One gate. Rotations carry either a fixed angle ``value`` or a trainable ``slot``."""

    name: str
    target: int
    control: int | None = None
    value: float | None = None
    slot: int | None = None

    def __post_init__(self):
        if self.name not in GATE_NAMES:
            raise ValidationError(f"unknown gate {self.name!r}; expected one of {GATE_NAMES}")
        if self.name == "cnot":
            if self.control is None or self.control == self.target:
                raise ValidationError("cnot needs a control distinct from its target")
        elif self.control is not None:
            raise ValidationError(f"{self.name} takes no control qubit")
        if self.name in ROTATIONS:
            if (self.value is None) == (self.slot is None):
                raise ValidationError(f"{self.name} needs exactly one of a fixed value or a slot")
        elif self.value is not None or self.slot is not None:
            raise UnsupportedGateParam(f"{self.name} takes no parameter")

    @property
    def trainable(self) -> bool:
        return self.slot is not None

    def angle(self, params) -> float:
        if self.slot is None:
            return float(self.value)
        if params is None or self.slot >= len(params):
            raise UnboundParameter(f"trainable slot {self.slot} of {self.name} is unbound")
        return float(params[self.slot])

    def single(self, params=None) -> np.ndarray:
        """The 2x2 matrix of a single-qubit gate."""
        if self.name in ROTATIONS:
            return rotation(self.name, self.angle(params))
        return {"h": _H, "x": _X, "z": _Z}[self.name]

    def matrix(self, qubits: int, params=None) -> np.ndarray:
        if self.name == "cnot":
            return cnot(self.control, self.target, qubits)
        return embed(self.single(params), self.target, qubits)


@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement operators ``M_i`` with ``sum_i M_i^H M_i = I``."""

    ops: tuple
    labels: tuple = ()

    def __post_init__(self):
        if not self.ops:
            raise InvalidPovm("a POVM needs at least one operator")
        mats = []
        for m in self.ops:
            m = np.asarray(m, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.all(np.isfinite(m)):
                raise InvalidPovm("POVM operators must be finite square matrices")
            mats.append(m)
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise InvalidPovm(f"POVM operators have mixed dimensions {sorted(dims)}")
        total = sum(m.conj().T @ m for m in mats)
        dev = np.max(np.abs(total - np.eye(mats[0].shape[0])))
        if dev > POVM_ATOL:
            raise InvalidPovm(f"POVM is incomplete: max |sum M^H M - I| = {dev:.3e}")
        object.__setattr__(self, "ops", tuple(mats))
        labels = tuple(self.labels) or tuple(str(i) for i in range(len(mats)))
        if len(labels) != len(mats):
            raise InvalidPovm("one label per outcome is required")
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.ops)

    @cached_property
    def effects(self) -> np.ndarray:
        """Stack of ``M_i^H M_i`` with shape ``(outcomes, dim, dim)``."""
        return np.stack([m.conj().T @ m for m in self.ops])

    @cached_property
    def groups(self) -> tuple | None:
        """Basis-index groups when every operator is a diagonal 0/1 projector."""
        out = []
        for m in self.ops:
            d = np.diag(m)
            if np.any(np.abs(m - np.diag(d)) > 0) or not np.all((d == 0) | (d == 1)):
                return None
            out.append(tuple(int(k) for k in np.flatnonzero(d == 1)))
        return tuple(out)

    @classmethod
    def from_groups(cls, qubits: int, groups: Sequence[Sequence[int]]) -> "Povm":
        dim = 2**qubits
        seen = sorted(k for g in groups for k in g)
        if seen != list(range(dim)):
            raise InvalidPovm(f"groups must partition the {dim} basis states exactly once")
        ops = []
        for g in groups:
            d = np.zeros(dim)
            d[list(g)] = 1.0
            ops.append(np.diag(d).astype(complex))
        return cls(tuple(ops))

    @classmethod
    def computational(cls, qubits: int, outcomes: int | None = None) -> "Povm":
        """Basis projectors, optionally coarse-grained into contiguous index groups."""
        dim = 2**qubits
        outcomes = dim if outcomes is None else outcomes
        if not 1 <= outcomes <= dim:
            raise InvalidPovm(f"cannot split {dim} basis states into {outcomes} outcomes")
        groups = [tuple(int(k) for k in g) for g in np.array_split(np.arange(dim), outcomes)]
        return cls.from_groups(qubits, groups)


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    """A gate list acting on ``qubits`` qubits followed by ``povm``.

    ``params`` holds the values of trainable slots. Binding returns a new
    spec; an instance is never mutated.
    """

    qubits: int
    gates: tuple
    povm: Povm
    params: tuple | None = None

    def __post_init__(self):
        if not 1 <= self.qubits <= MAX_QUBITS:
            raise ValidationError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.qubits}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            used = [g.target] + ([g.control] if g.control is not None else [])
            if any(not 0 <= q < self.qubits for q in used):
                raise ValidationError(f"gate {g.name} addresses a qubit outside 0..{self.qubits - 1}")
        if self.povm.dim != self.dim:
            raise DimensionMismatch(f"POVM acts on dim {self.povm.dim}, circuit on dim {self.dim}")
        if self.params is not None:
            object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def dim(self) -> int:
        return 2**self.qubits

    @property
    def n_params(self) -> int:
        slots = [g.slot for g in self.gates if g.slot is not None]
        return max(slots) + 1 if slots else 0

    @property
    def n_outcomes(self) -> int:
        return self.povm.n_outcomes

    def bind(self, params) -> "CircuitSpec":
        params = tuple(float(p) for p in np.asarray(params, dtype=float).ravel())
        if len(params) < self.n_params:
            raise UnboundParameter(f"circuit has {self.n_params} slots, got {len(params)} values")
        return replace(self, params=params)

    def with_povm(self, povm: Povm) -> "CircuitSpec":
        return replace(self, povm=povm)

    @cached_property
    def unitary(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=complex)
        for g in self.gates:
            if g.name == "cnot":
                u = _cnot_cached(g.control, g.target, self.qubits) @ u
            else:
                u = _apply_1q(g.single(self.params), g.target, self.qubits, u)
        return u


@lru_cache(maxsize=None)
def _cnot_cached(control: int, target: int, qubits: int) -> np.ndarray:
    return cnot(control, target, qubits)


def _apply_1q(m: np.ndarray, target: int, qubits: int, u: np.ndarray) -> np.ndarray:
    """``embed(m, target) @ u`` without forming the embedded matrix."""
    t = u.reshape(2**target, 2, 2 ** (qubits - target - 1), u.shape[1])
    return np.einsum("ab,ibjk->iajk", m, t).reshape(u.shape)


def check_density(rho, dim: int | None = None) -> np.ndarray:
    """Validate a density operator and return it as a complex array."""
    m = np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidState(f"density operator must be square, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise DimensionMismatch(f"state has dim {m.shape[0]}, expected {dim}")
    if not nx.is_hermitian(m, STATE_ATOL):
        raise InvalidState("density operator is not Hermitian")
    if abs(np.trace(m).real - 1.0) > STATE_ATOL:
        raise InvalidState(f"density operator has trace {np.trace(m).real:.12g}")
    if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -STATE_ATOL:
        raise InvalidState("density operator has a negative eigenvalue")
    return m


def apply_circuit(c: CircuitSpec, rho) -> np.ndarray:
    """Evolve ``rho`` to ``U rho U^H``."""
    rho = check_density(rho, c.dim)
    u = c.unitary
    return u @ rho @ u.conj().T


def _finish_probs(p: np.ndarray) -> np.ndarray:
    if np.any(p < NEG_PROB_FLOOR):
        raise NumericalError(f"negative outcome probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    return p / p.sum(axis=-1, keepdims=True)


def measure_probs(c: CircuitSpec, rho) -> np.ndarray:
    """Outcome distribution ``p_i = tr(M_i E(rho) M_i^H)``."""
    out = apply_circuit(c, rho)
    p = np.array([np.trace(m @ out @ m.conj().T).real for m in c.povm.ops])
    return _finish_probs(p)


def heisenberg_observables(c: CircuitSpec) -> np.ndarray:
    """``A_i = U^H M_i^H M_i U`` stacked as ``(outcomes, dim, dim)``; ``p_i = tr(A_i rho)``."""
    u = c.unitary
    a = u.conj().T[None] @ c.povm.effects @ u[None]
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def probs_from_states(observables: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Outcome probabilities for a batch of pure states ``psi`` (rows)."""
    p = np.einsum("bi,kij,bj->bk", psi.conj(), observables, psi).real
    return _finish_probs(p)


def trace_distance(rho, sigma) -> float:
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"states have shapes {rho.shape} and {sigma.shape}")
    return 0.5 * nx.trace_norm(rho - sigma)


def total_variation(p, q) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionMismatch(f"distributions have lengths {p.shape} and {q.shape}")
    for v in (p, q):
        if abs(v.sum() - 1.0) > 1e-6:
            raise ValidationError(f"probability vector sums to {v.sum():.9g}")
    return 0.5 * float(np.abs(p - q).sum())


def angle_states(x) -> np.ndarray:
    """Product statevectors ``(x) RY(x_j)|0>`` for a batch of angle vectors (rows)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    psi = np.ones((x.shape[0], 1), dtype=complex)
    for j in range(x.shape[1]):
        q = np.stack([np.cos(x[:, j] / 2), np.sin(x[:, j] / 2)], axis=1)
        psi = (psi[:, :, None] * q[:, None, :]).reshape(x.shape[0], -1)
    return psi


def angle_encode(x, qubits: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != qubits:
        raise DimensionMismatch(f"angle encoding of {x.size} features onto {qubits} qubits")
    psi = angle_states(x)[0]
    return np.outer(psi, psi.conj())


def random_pure_state(dim: int, seed: int) -> np.ndarray:
    if dim < 2:
        raise ValidationError("dim must be at least 2")
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_statevectors(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


def random_povm(dim: int, outcomes: int, rng: np.random.Generator) -> Povm:
    """General (non-projective) POVM from a random isometry split into blocks."""
    g = rng.standard_normal((outcomes * dim, dim)) + 1j * rng.standard_normal((outcomes * dim, dim))
    v, _ = np.linalg.qr(g)
    return Povm(tuple(v[k * dim:(k + 1) * dim] for k in range(outcomes)))


def random_circuit(
    qubits: int,
    depth: int,
    seed: int,
    outcomes: int | None = None,
    povm_kind: str = "groups",
    trainable: bool = False,
) -> CircuitSpec:
    """Random gate sequence over the full gate set, for tests and demos.

    ``povm_kind`` is ``"groups"`` (random partition of basis states) or
    ``"general"`` (random non-projective POVM).
    """
    rng = np.random.default_rng(seed)
    gates = []
    slot = 0
    params = []
    for _ in range(depth):
        name = GATE_NAMES[rng.integers(len(GATE_NAMES))] if qubits > 1 else GATE_NAMES[rng.integers(6)]
        target = int(rng.integers(qubits))
        if name == "cnot":
            control = int((target + 1 + rng.integers(qubits - 1)) % qubits)
            gates.append(Gate("cnot", target, control=control))
        elif name in ROTATIONS:
            angle = float(rng.uniform(0, 2 * np.pi))
            if trainable:
                gates.append(Gate(name, target, slot=slot))
                params.append(angle)
                slot += 1
            else:
                gates.append(Gate(name, target, value=angle))
        else:
            gates.append(Gate(name, target))
    dim = 2**qubits
    outcomes = dim if outcomes is None else outcomes
    if povm_kind == "general":
        povm = random_povm(dim, outcomes, rng)
    else:
        perm = rng.permutation(dim)
        cuts = np.sort(rng.choice(np.arange(1, dim), size=outcomes - 1, replace=False))
        povm = Povm.from_groups(qubits, [tuple(int(k) for k in g) for g in np.split(perm, cuts)])
    return CircuitSpec(qubits, tuple(gates), povm, tuple(params) if trainable else None)


def layered_ansatz(qubits: int, layers: int, outcomes: int | None = None) -> CircuitSpec:
    """RY on every qubit followed by a CNOT ring, repeated ``layers`` times (unbound)."""
    gates = []
    for layer in range(layers):
        for q in range(qubits):
            gates.append(Gate("ry", q, slot=layer * qubits + q))
        if qubits > 1:
            for q in range(qubits if qubits > 2 else 1):
                gates.append(Gate("cnot", (q + 1) % qubits, control=q))
    return CircuitSpec(qubits, tuple(gates), Povm.computational(qubits, outcomes))


# JSON ----------------------------------------------------------------------

def _gate_from_json(g: dict) -> Gate:
    name = g.get("name")
    param = g.get("param")
    value = slot = None
    if param is not None:
        kind = param.get("kind")
        if kind == "fixed":
            value = float(param["value"])
        elif kind == "trainable":
            slot = int(param["index"])
        else:
            raise ValidationError(f"unknown param kind {kind!r}")
    return Gate(name, int(g["target"]), control=g.get("control"), value=value, slot=slot)


def _gate_to_json(g: Gate) -> dict:
    out = {"name": g.name, "target": g.target}
    if g.control is not None:
        out["control"] = g.control
    if g.value is not None:
        out["param"] = {"kind": "fixed", "value": g.value}
    elif g.slot is not None:
        out["param"] = {"kind": "trainable", "index": g.slot}
    return out


def povm_from_json(spec, qubits: int) -> Povm:
    if spec is None or spec == "computational":
        return Povm.computational(qubits)
    if isinstance(spec, dict):
        labels = tuple(spec.get("labels", ()))
        if "groups" in spec:
            p = Povm.from_groups(qubits, spec["groups"])
            return Povm(p.ops, labels) if labels else p
        if "ops" in spec:
            return Povm(tuple(nx.matrix_from_json(m) for m in spec["ops"]), labels)
    raise InvalidPovm(f"unrecognized POVM description {spec!r}")


def povm_to_json(povm: Povm):
    if povm.groups is not None:
        return {"groups": [list(g) for g in povm.groups]}
    return {"ops": [nx.matrix_to_json(m) for m in povm.ops]}


def circuit_from_json(data: dict) -> CircuitSpec:
    try:
        qubits = int(data["qubits"])
        gates = tuple(_gate_from_json(g) for g in data.get("gates", []))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed circuit description: {exc}") from exc
    c = CircuitSpec(qubits, gates, povm_from_json(data.get("povm"), qubits))
    if data.get("params") is not None:
        c = c.bind(data["params"])
    return c


def circuit_to_json(c: CircuitSpec) -> dict:
    out = {"qubits": c.qubits, "gates": [_gate_to_json(g) for g in c.gates], "povm": povm_to_json(c.povm)}
    if c.params is not None:
        out["params"] = list(c.params)
    return out
