"""Hybrid models: dense segments and measured quantum blocks chained together.

A quantum block angle-encodes its input (``RY(x_j)`` on qubit ``j``), runs a
circuit and returns the outcome probabilities of its POVM. The certified
bound of a model is a product over blocks, with each hop between vector
norms, trace distance and total variation written out explicitly:

* dense segment: ``l2 -> l2`` via :func:`~hybridlip.classical.lip_sdp`
  (product bound when the segment has no hidden activation);
* encoder: ``lp -> trace`` via :func:`encoder_constant`;
* circuit: ``trace -> total_variation`` via
  :func:`~hybridlip.qlip.lipschitz_exact`;
* readout: ``total_variation -> lp`` conversion (2 for ``l1`` and ``l2``,
  1 for ``linf``).

The bound is an upper estimate; :func:`hybrid_lip_lower` gives a sampled
lower estimate so the gap between the two is visible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import classical as cl
from .errors import DimensionMismatch, UnsupportedEncoding, UseProductBound, ValidationError
from .norms import NormTag, conversion_factor, euclidean, vector_norm
from .qlip import lipschitz_exact, lipschitz_subgradient, MAX_EXACT_OUTCOMES
from .quantum import (
    CircuitSpec,
    angle_states,
    circuit_from_json,
    circuit_to_json,
    heisenberg_observables,
    probs_from_states,
    random_circuit,
)

ENCODINGS = ("angle-ry",)


@dataclass(frozen=True, eq=False)
class QuantumBlock:
    """Angle encoder, circuit and POVM readout as one ``R^qubits -> R^outcomes`` map."""

    circuit: CircuitSpec
    encoding: str = "angle-ry"

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise UnsupportedEncoding(f"unsupported encoding {self.encoding!r}; expected one of {ENCODINGS}")

    @property
    def in_dim(self) -> int:
        return self.circuit.qubits

    @property
    def out_dim(self) -> int:
        return self.circuit.n_outcomes

    def observables(self) -> np.ndarray:
        return heisenberg_observables(self.circuit)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise DimensionMismatch(f"quantum block expects {self.in_dim} angles, got {x.shape[-1]}")
        p = probs_from_states(self.observables(), angle_states(x.reshape(-1, self.in_dim)))
        return p.reshape(x.shape[:-1] + (self.out_dim,))

    def input_jacobian(self, x) -> np.ndarray:
        """Exact ``dp/dx`` at one input, by shifting each encoder angle by ``pi/2``."""
        x = np.asarray(x, dtype=float).ravel()
        shifts = 0.5 * np.pi * np.eye(self.in_dim)
        plus, minus = self(x + shifts), self(x - shifts)
        return 0.5 * (plus - minus).T

    def to_json(self) -> dict:
        return {"type": "quantum", "encoding": self.encoding, **circuit_to_json(self.circuit)}

    @classmethod
    def from_json(cls, data: dict) -> "QuantumBlock":
        return cls(circuit_from_json(data), data.get("encoding", "angle-ry"))


@dataclass(frozen=True, eq=False)
class HybridModel:
    """Ordered blocks, each a :class:`~hybridlip.classical.DenseNet` or :class:`QuantumBlock`."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValidationError("a hybrid model needs at least one block")
        for b in blocks:
            if not isinstance(b, (cl.DenseNet, QuantumBlock)):
                raise ValidationError(f"unsupported block type {type(b).__name__}")
        for i, (prev, nxt) in enumerate(zip(blocks, blocks[1:])):
            if prev.out_dim != nxt.in_dim:
                raise DimensionMismatch(
                    f"block {i} outputs {prev.out_dim} values but block {i + 1} expects {nxt.in_dim}"
                )
        object.__setattr__(self, "blocks", blocks)

    @property
    def in_dim(self) -> int:
        return self.blocks[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.blocks[-1].out_dim

    def replace_block(self, i: int, block) -> "HybridModel":
        blocks = list(self.blocks)
        blocks[i] = block
        return replace(self, blocks=tuple(blocks))

    def to_json(self) -> dict:
        out = []
        for b in self.blocks:
            if isinstance(b, QuantumBlock):
                out.append(b.to_json())
            else:
                out.extend(cl.layer_to_json(l) for l in b.layers)
        return {"blocks": out}

    @classmethod
    def from_json(cls, data: dict) -> "HybridModel":
        """Consecutive dense layers are merged into one segment."""
        try:
            items = data["blocks"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed hybrid model: {exc}") from exc
        blocks, dense = [], []
        for d in items:
            kind = d.get("type", "dense")
            if kind == "dense":
                dense.append(cl.layer_from_json(d))
            elif kind == "quantum":
                if dense:
                    blocks.append(cl.DenseNet(tuple(dense)))
                    dense = []
                blocks.append(QuantumBlock.from_json(d))
            else:
                raise ValidationError(f"unknown block type {kind!r}")
        if dense:
            blocks.append(cl.DenseNet(tuple(dense)))
        return cls(tuple(blocks))


def _apply(block, h):
    return block(h) if isinstance(block, QuantumBlock) else cl.forward(block, h)


def hybrid_forward(m: HybridModel, x) -> np.ndarray:
    """Evaluate the model on one input vector or a batch of rows."""
    h = np.asarray(x, dtype=float)
    if h.shape[-1] != m.in_dim:
        raise DimensionMismatch(f"input has {h.shape[-1]} features, model expects {m.in_dim}")
    for b in m.blocks:
        h = _apply(b, h)
    return h


def hybrid_jacobian(m: HybridModel, x) -> np.ndarray:
    """Jacobian of the model at one input, exact for both block kinds."""
    h = np.asarray(x, dtype=float).ravel()
    j = np.eye(h.size)
    for b in m.blocks:
        jb = b.input_jacobian(h) if isinstance(b, QuantumBlock) else cl.jacobian(b, h)
        j = jb @ j
        h = _apply(b, h)
    return j


# bounds ----------------------------------------------------------------------

def encoder_constant(qubits: int, in_norm="l2", encoding: str = "angle-ry") -> float:
    """Certified constant from ``in_norm`` on the angles to trace distance.

    For one qubit the encoded states are ``|sin(d/2)|`` apart, at most
    ``|d|/2``; trace distance is subadditive over product states, giving
    ``||d||_1 / 2``. The other norms follow from ``l1`` by the usual vector
    norm comparisons: ``sqrt(n)/2`` for ``l2`` and ``n/2`` for ``linf``.
    """
    if encoding not in ENCODINGS:
        raise UnsupportedEncoding(f"no encoder constant for encoding {encoding!r}")
    if qubits < 1:
        raise ValidationError("qubits must be >= 1")
    return 0.5 * conversion_factor(in_norm, NormTag.L1, qubits)


def readout_factor(out_norm) -> float:
    """Constant from total variation to ``out_norm`` on a difference of distributions."""
    # ||p - q||_1 = 2 TV, and max |p_i - q_i| <= TV because p - q sums to zero
    return 1.0 if euclidean(out_norm) is NormTag.LINF else 2.0


@dataclass(frozen=True)
class BlockBound:
    block: int
    stage: str
    constant: float
    method: str
    in_tag: NormTag
    out_tag: NormTag

    def to_json(self) -> dict:
        return {"block": self.block, "stage": self.stage, "constant": self.constant, "method": self.method,
                "in": str(self.in_tag), "out": str(self.out_tag)}


@dataclass(frozen=True)
class Conversion:
    block: int
    in_tag: NormTag
    out_tag: NormTag
    factor: float

    def to_json(self) -> dict:
        return {"block": self.block, "in": str(self.in_tag), "out": str(self.out_tag), "factor": self.factor}


@dataclass(frozen=True, eq=False)
class HybridBoundReport:
    total: float
    norm: NormTag
    per_block: tuple
    conversions: tuple
    lower_witness: float = 0.0

    def product(self) -> float:
        """Recompute the total from the recorded pieces."""
        out = 1.0
        for b in self.per_block:
            out *= b.constant
        for c in self.conversions:
            out *= c.factor
        return out

    def stage_product(self, kind: str) -> float:
        """Product of the entries for one block kind (``"dense"`` or ``"quantum"``)."""
        out = 1.0
        for b in self.per_block:
            if (b.stage == "dense") == (kind == "dense"):
                out *= b.constant
        if kind != "dense":
            for c in self.conversions:
                out *= c.factor
        return out

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "norm": str(self.norm),
            "per_block": [b.to_json() for b in self.per_block],
            "conversions": [c.to_json() for c in self.conversions],
            "lower_witness": self.lower_witness,
        }


def dense_bound(net: cl.DenseNet, norm="l2", method: str = "auto") -> cl.ClassicalBoundReport:
    """``lip_sdp`` for ``l2`` when possible, otherwise the product bound."""
    tag = euclidean(norm)
    if method not in ("auto", "sdp", "product"):
        raise ValidationError(f"unknown classical method {method!r}")
    if method == "product" or tag is not NormTag.L2:
        return cl.lip_product(net, tag)
    try:
        return cl.lip_sdp(net)
    except UseProductBound:
        if method == "sdp":
            raise
        return cl.lip_product(net, tag)


def quantum_constant(block: QuantumBlock) -> tuple[float, str]:
    if block.out_dim <= MAX_EXACT_OUTCOMES:
        return lipschitz_exact(block.circuit).k_star, "exact"
    # subgradient values are lower estimates; fall back to the trivial bound K <= 1
    return 1.0, "contractive"


def hybrid_lip_bound(m: HybridModel, norm="l2", classical_method: str = "auto",
                     samples: int = 0, seed: int = 0) -> HybridBoundReport:
    """Certified Lipschitz bound of the whole model in one vector norm.

    Args:
        norm: vector norm used on the input, on every intermediate vector
            and on the output.
        classical_method: ``"auto"`` (SDP for ``l2`` with product fallback),
            ``"sdp"`` or ``"product"``.
        samples: when positive, also run :func:`hybrid_lip_lower` and store
            the value as ``lower_witness``.
    """
    tag = euclidean(norm)
    per_block, conversions = [], []
    for i, b in enumerate(m.blocks):
        if isinstance(b, QuantumBlock):
            per_block.append(BlockBound(i, "encoder", encoder_constant(b.in_dim, tag, b.encoding), b.encoding,
                                        tag, NormTag.TRACE))
            k, method = quantum_constant(b)
            per_block.append(BlockBound(i, "circuit", k, method, NormTag.TRACE, NormTag.TV))
            if tag is NormTag.LINF:
                conversions.append(Conversion(i, NormTag.TV, NormTag.LINF, readout_factor(tag)))
            else:
                conversions.append(Conversion(i, NormTag.TV, NormTag.L1, 2.0))
                if tag is NormTag.L2:
                    conversions.append(Conversion(i, NormTag.L1, NormTag.L2, 1.0))
        else:
            rep = dense_bound(b, tag, classical_method)
            per_block.append(BlockBound(i, "dense", rep.bound, rep.method, tag, tag))
    report = HybridBoundReport(0.0, tag, tuple(per_block), tuple(conversions))
    report = replace(report, total=report.product())
    if samples > 0:
        report = replace(report, lower_witness=hybrid_lip_lower(m, samples, seed, tag))
    return report


def compose_bounds(constants, factors=()) -> float:
    out = 1.0
    for c in list(constants) + list(factors):
        out *= float(c)
    return out


def hybrid_lip_lower(m: HybridModel, samples: int = 1000, seed: int = 0, norm="l2",
                     low: float = 0.0, high: float = np.pi, step: float = 1e-5) -> float:
    """Largest observed ``||f(x1) - f(x2)|| / ||x1 - x2||`` over sampled pairs.

    Half the pairs are short steps along the worst direction of the exact
    Jacobian at a random point; the other half are random pairs, some
    short and some far apart. Each value is a genuine pair ratio.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    tag = euclidean(norm)
    rng = np.random.default_rng(seed)
    n = m.in_dim
    x1 = rng.uniform(low, high, size=(samples, n))
    dirs = rng.standard_normal((samples, n))
    for k in range(0, samples, 2):
        dirs[k] = cl._worst_direction(hybrid_jacobian(m, x1[k]), tag)
    dirs /= np.maximum(vector_norm(dirs, tag)[:, None], 1e-300)
    scale = np.where(np.arange(samples) % 4 == 3, rng.uniform(0.05, 1.0, samples) * (high - low), step)
    x2 = x1 + scale[:, None] * dirs
    dx = vector_norm(x2 - x1, tag)
    dy = vector_norm(hybrid_forward(m, x2) - hybrid_forward(m, x1), tag)
    return float(np.max(np.where(dx > 0, dy / np.maximum(dx, 1e-300), 0.0)))


# builders --------------------------------------------------------------------

def random_hybrid_model(seed: int, in_dim: int = 3, qubits: int = 2, hidden: int = 5, out_dim: int = 2,
                        outcomes: int | None = None, depth: int = 6, act: str = "tanh") -> HybridModel:
    """Dense -> quantum -> dense model with random weights and gates."""
    rng = np.random.default_rng(seed)
    outcomes = 2**qubits if outcomes is None else outcomes
    s = [int(v) for v in rng.integers(0, 2**31, size=3)]
    f1 = cl.random_dense_net([in_dim, hidden, qubits], s[0], act=act)
    q = QuantumBlock(random_circuit(qubits, depth, s[1], outcomes))
    f2 = cl.random_dense_net([outcomes, hidden, out_dim], s[2], act=act, scale=2.0)
    return HybridModel((f1, q, f2))


def default_model(seed: int = 0, qubits: int = 3, layers: int = 2, hidden: int = 8,
                  features: int = 4, classes: int = 3) -> HybridModel:
    """Iris-sized architecture: dense 4-8-3, a trainable 3-qubit ansatz, dense 8-3."""
    from .quantum import layered_ansatz

    rng = np.random.default_rng(seed)
    s = [int(v) for v in rng.integers(0, 2**31, size=2)]
    f1 = cl.random_dense_net([features, hidden, qubits], s[0], act="relu")
    circuit = layered_ansatz(qubits, layers)
    circuit = circuit.bind(rng.uniform(0, 2 * np.pi, circuit.n_params))
    f2 = cl.random_dense_net([circuit.n_outcomes, classes], s[1], scale=4.0)
    return HybridModel((f1, QuantumBlock(circuit), f2))
