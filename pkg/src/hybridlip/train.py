"""Training hybrid models: plain SGD, PGD adversarial training, Lipschitz-regularized SGD.

Gradients are exact. Dense segments use reverse accumulation; quantum blocks
use the parameter-shift rule, both for trainable rotation angles and for the
encoder angles that carry the block's input. Every epoch logs a freshly
recomputed certified bound of the current model.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import classical as cl
from . import numerics as nx
from .data import Dataset
from .errors import InvalidConfig, UnboundParameter, UnsupportedGateParam
from .hybrid import HybridModel, QuantumBlock, hybrid_forward, hybrid_lip_bound
from .norms import NormTag, euclidean
from .quantum import (
    CircuitSpec,
    Gate,
    ROTATIONS,
    angle_states,
    heisenberg_observables,
    measure_probs,
    probs_from_states,
)

METHODS = ("naive", "pgd", "lipreg")
COLUMNS = ("epoch", "method", "norm", "loss", "train_acc", "test_acc",
           "lip_classical", "lip_quantum", "lip_hybrid", "lambda", "seed")
FEATURE_BOX = (0.0, np.pi)
PENALTY_POWER_STEPS = 5


@dataclass(frozen=True)
class TrainConfig:
    method: str = "naive"
    epochs: int = 200
    lr: float = 0.05
    batch: int = 16
    lam: float = 0.0
    eps: float = 0.1
    pgd_steps: int = 7
    step_size: float | None = None
    norm: str = "l2"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidConfig(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise InvalidConfig("epochs must be a non-negative integer")
        if self.batch < 1:
            raise InvalidConfig("batch must be >= 1")
        if not self.lr > 0:
            raise InvalidConfig("lr must be positive")
        if not self.lam >= 0:
            raise InvalidConfig("lambda must be >= 0")
        if not self.eps >= 0:
            raise InvalidConfig("eps must be >= 0")
        if self.method == "pgd" and self.pgd_steps < 1:
            raise InvalidConfig("pgd_steps must be >= 1 for method pgd")
        if self.step_size is not None and not self.step_size >= 0:
            raise InvalidConfig("step_size must be >= 0")
        try:
            object.__setattr__(self, "norm", str(euclidean(self.norm)))
        except Exception as exc:
            raise InvalidConfig(str(exc)) from None

    @property
    def pgd_step(self) -> float:
        return self.eps / 4 if self.step_size is None else self.step_size


@dataclass(eq=False)
class MetricsLog:
    """One row per epoch in :data:`COLUMNS` order; ``model`` is the trained model."""

    rows: list = field(default_factory=list)
    model: HybridModel | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def extend(self, other: "MetricsLog") -> "MetricsLog":
        self.rows.extend(other.rows)
        return self

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r[c])) if isinstance(r[c], float) else r[c] for c in COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as f:
                f.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "MetricsLog":
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        out = []
        for r in rows:
            out.append({c: (r[c] if c in ("method", "norm") else
                            int(r[c]) if c in ("epoch", "seed") else float(r[c])) for c in COLUMNS if c in r})
        return cls(out)


# losses ----------------------------------------------------------------------

def softmax_xent(logits: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample cross-entropy and its gradient w.r.t. the logits."""
    z = np.atleast_2d(logits)
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    y = np.atleast_1d(y)
    rows = np.arange(z.shape[0])
    grad = np.exp(logp)
    grad[rows, y] -= 1.0
    return -logp[rows, y], grad


def _loss(out, target, loss):
    if loss == "xent":
        return softmax_xent(out, target)
    if loss == "mse":
        diff = np.atleast_2d(out) - np.reshape(target, np.shape(np.atleast_2d(out)))
        return (diff**2).sum(axis=1), 2 * diff
    raise ValueError(f"unknown loss {loss!r}")


def classical_grads(net: cl.DenseNet, x, target, loss: str = "xent"):
    """Gradients of the batch-mean loss w.r.t. every ``(W, b)`` of ``net``.

    ``target`` is a class index (or array of them) for ``"xent"`` and a real
    target vector for ``"mse"``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out, cache = cl.forward_cache(net, x)
    _, g = _loss(out, target, loss)
    grads, _ = cl.backward(net, cache, g / x.shape[0])
    return grads


# quantum gradients -----------------------------------------------------------

def _rotation_sites(c: CircuitSpec, slots=None):
    sites = [(i, g) for i, g in enumerate(c.gates) if g.slot is not None]
    if slots is not None:
        for s in slots:
            if not any(g.slot == s for _, g in sites):
                raise UnsupportedGateParam(f"slot {s} is not the angle of any rotation gate")
    if any(g.name not in ROTATIONS for _, g in sites):
        raise UnsupportedGateParam("the shift rule only applies to rx, ry and rz angles")
    return sites


def _shifted(c: CircuitSpec, site: int, delta: float) -> CircuitSpec:
    g = c.gates[site]
    gates = list(c.gates)
    gates[site] = Gate(g.name, g.target, value=g.angle(c.params) + delta)
    return replace(c, gates=tuple(gates))


def _check_bound(c: CircuitSpec):
    if c.n_params and (c.params is None or len(c.params) < c.n_params):
        raise UnboundParameter("bind every trainable slot before differentiating")


def quantum_grads(c: CircuitSpec, rho, upstream, slots=None) -> np.ndarray:
    """Gradient of ``upstream . p(theta)`` over trainable slots, by parameter shift.

    ``dp_i/dtheta = (p_i(theta + pi/2) - p_i(theta - pi/2)) / 2`` for each
    rotation occurrence; a slot used by several gates sums their terms.

    Raises:
        UnsupportedGateParam: if a requested slot is not a rotation angle.
        UnboundParameter: if the circuit has unbound slots.
    """
    _check_bound(c)
    upstream = np.asarray(upstream, dtype=float)
    grad = np.zeros(c.n_params)
    for i, g in _rotation_sites(c, slots):
        dp = 0.5 * (measure_probs(_shifted(c, i, np.pi / 2), rho) - measure_probs(_shifted(c, i, -np.pi / 2), rho))
        grad[g.slot] += upstream @ dp
    if slots is not None:
        return grad[list(slots)]
    return grad


def _quantum_backward(block: QuantumBlock, h: np.ndarray, g: np.ndarray, want_params: bool = True):
    """Batched shift-rule backward pass: ``(param gradient, input gradient)``."""
    c = block.circuit
    a = heisenberg_observables(c)
    n = block.in_dim
    g_in = np.zeros_like(h)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 0.5 * np.pi
        dp = 0.5 * (probs_from_states(a, angle_states(h + e)) - probs_from_states(a, angle_states(h - e)))
        g_in[:, j] = np.einsum("bk,bk->b", g, dp)
    if not want_params or not c.n_params:
        return np.zeros(c.n_params), g_in
    _check_bound(c)
    psi = angle_states(h)
    grad = np.zeros(c.n_params)
    for i, gate in _rotation_sites(c):
        ap = heisenberg_observables(_shifted(c, i, np.pi / 2))
        am = heisenberg_observables(_shifted(c, i, -np.pi / 2))
        dp = 0.5 * (probs_from_states(ap, psi) - probs_from_states(am, psi))
        grad[gate.slot] += np.einsum("bk,bk->", g, dp)
    return grad, g_in


# whole-model passes ----------------------------------------------------------

def forward_cache(m: HybridModel, x):
    h = np.atleast_2d(np.asarray(x, dtype=float))
    caches = []
    for b in m.blocks:
        if isinstance(b, QuantumBlock):
            caches.append(h)
            h = b(h)
        else:
            h, cache = cl.forward_cache(b, h)
            caches.append(cache)
    return h, caches


def backward(m: HybridModel, caches, g, want_params: bool = True):
    """Reverse pass; returns per-block parameter gradients and the input gradient.

    Dense blocks get ``[(dW, db), ...]``, quantum blocks a vector over slots.
    """
    grads = [None] * len(m.blocks)
    for i in range(len(m.blocks) - 1, -1, -1):
        b = m.blocks[i]
        if isinstance(b, QuantumBlock):
            grads[i], g = _quantum_backward(b, caches[i], g, want_params)
        else:
            grads[i], g = cl.backward(b, caches[i], g)
    return grads, g


def loss_and_grads(m: HybridModel, x, y, loss: str = "xent"):
    """Batch-mean loss, per-block parameter gradients and input gradients."""
    out, caches = forward_cache(m, x)
    per, g = _loss(out, y, loss)
    n = per.shape[0]
    grads, g_in = backward(m, caches, g / n)
    return float(per.mean()), grads, g_in * n


def input_grad(m: HybridModel, x, y, loss: str = "xent"):
    """Per-sample losses and their gradients w.r.t. the inputs."""
    out, caches = forward_cache(m, x)
    per, g = _loss(out, y, loss)
    _, g_in = backward(m, caches, g, want_params=False)
    return per, g_in


def pgd_attack(m: HybridModel, x, target, eps: float, steps: int = 7, step_size: float | None = None,
               box=FEATURE_BOX) -> np.ndarray:
    """Sign-gradient ascent on the loss inside the ``linf`` ball of radius ``eps`` and the feature box.

    Each sample keeps its highest-loss iterate, so the attacked loss is never
    below the clean loss.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x0 = np.atleast_2d(x)
    if eps <= 0:
        return x.copy()
    step = eps / 4 if step_size is None else step_size
    lo, hi = np.maximum(x0 - eps, box[0]), np.minimum(x0 + eps, box[1])
    cur = x0.copy()
    best = x0.copy()
    best_loss, g = input_grad(m, cur, target)
    for k in range(steps):
        cur = np.clip(cur + step * np.sign(g), lo, hi)
        val, g = input_grad(m, cur, target)
        better = val > best_loss
        best[better], best_loss[better] = cur[better], val[better]
    return best[0] if single else best


# regularization --------------------------------------------------------------

def _penalty_term(w: np.ndarray, tag: NormTag):
    """``||W||^2`` in the induced norm and a (sub)gradient."""
    if not np.any(w):
        return 0.0, np.zeros_like(w)
    if tag is NormTag.L2:
        rng = np.random.default_rng(nx.SPECTRAL_SEED)
        v = rng.standard_normal(w.shape[1])
        for _ in range(PENALTY_POWER_STEPS):
            v = w.T @ (w @ v)
            v /= np.linalg.norm(v)
        wv = w @ v
        s = np.linalg.norm(wv)
        # direction held fixed: d(s^2) = 2 s u v^T
        return float(s * s), 2.0 * np.outer(wv, v)
    if tag is NormTag.L1:
        sums = np.abs(w).sum(axis=0)
        j = int(np.argmax(sums))
        g = np.zeros_like(w)
        g[:, j] = np.sign(w[:, j])
        return float(sums[j] ** 2), 2.0 * sums[j] * g
    sums = np.abs(w).sum(axis=1)
    i = int(np.argmax(sums))
    g = np.zeros_like(w)
    g[i] = np.sign(w[i])
    return float(sums[i] ** 2), 2.0 * sums[i] * g


def lip_penalty_grads(m: HybridModel, norm="l2"):
    """Penalty value and per-block gradients matching :func:`backward`'s layout."""
    tag = euclidean(norm)
    total = 0.0
    grads = []
    for b in m.blocks:
        if isinstance(b, QuantumBlock):
            grads.append(np.zeros(b.circuit.n_params))
            continue
        block = []
        for l in b.layers:
            v, g = _penalty_term(l.weights, tag)
            total += v
            block.append((g, np.zeros_like(l.bias)))
        grads.append(block)
    return total, grads


def lip_penalty(m: HybridModel, norm="l2") -> float:
    """Sum of squared induced norms of all classical weight matrices."""
    return lip_penalty_grads(m, norm)[0]


# training loop -------------------------------------------------------------

def apply_update(m: HybridModel, grads, lr: float) -> HybridModel:
    blocks = []
    for b, g in zip(m.blocks, grads):
        if isinstance(b, QuantumBlock):
            c = b.circuit
            if c.n_params:
                c = c.bind(np.asarray(c.params[:c.n_params]) - lr * g)
            blocks.append(replace(b, circuit=c))
        else:
            blocks.append(b.replace_params([(w - lr * dw, bias - lr * db)
                                            for (w, bias), (dw, db) in zip(b.params(), g)]))
    return HybridModel(tuple(blocks))


def _add(a, b, scale: float):
    out = []
    for ga, gb in zip(a, b):
        if isinstance(ga, np.ndarray):
            out.append(ga + scale * gb)
        else:
            out.append([(w + scale * dw, v + scale * dv) for (w, v), (dw, dv) in zip(ga, gb)])
    return out


def accuracy(m: HybridModel, x, y) -> float:
    return float(np.mean(np.argmax(hybrid_forward(m, x), axis=1) == y))


def evaluate(m: HybridModel, d: Dataset, cfg: TrainConfig, epoch: int) -> dict:
    per, _ = softmax_xent(hybrid_forward(m, d.x_train), d.y_train)
    rep = hybrid_lip_bound(m, cfg.norm)
    return {
        "epoch": epoch,
        "method": cfg.method,
        "norm": cfg.norm,
        "loss": float(per.mean()),
        "train_acc": accuracy(m, d.x_train, d.y_train),
        "test_acc": accuracy(m, d.x_test, d.y_test),
        "lip_classical": rep.stage_product("dense"),
        "lip_quantum": rep.stage_product("quantum"),
        "lip_hybrid": rep.total,
        "lambda": float(cfg.lam),
        "seed": cfg.seed,
    }


def train(m: HybridModel, d: Dataset, cfg: TrainConfig, on_epoch=None) -> MetricsLog:
    """Mini-batch SGD with the chosen method; returns a row per epoch plus epoch 0.

    ``on_epoch(row, model)`` is called after each logged row. Batches are
    drawn from ``default_rng(cfg.seed)``, which makes the run deterministic.
    """
    if m.in_dim != d.n_features:
        raise InvalidConfig(f"model takes {m.in_dim} features, dataset has {d.n_features}")
    if m.out_dim < d.n_classes:
        raise InvalidConfig(f"model has {m.out_dim} outputs for {d.n_classes} classes")
    rng = np.random.default_rng(cfg.seed)
    log = MetricsLog()

    def record(epoch):
        row = evaluate(m, d, cfg, epoch)
        log.rows.append(row)
        if on_epoch is not None:
            on_epoch(row, m)

    record(0)
    n = d.x_train.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch):
            idx = order[start:start + cfg.batch]
            xb, yb = d.x_train[idx], d.y_train[idx]
            if cfg.method == "pgd":
                xb = pgd_attack(m, xb, yb, cfg.eps, cfg.pgd_steps, cfg.pgd_step)
            _, grads, _ = loss_and_grads(m, xb, yb)
            if cfg.method == "lipreg" and cfg.lam > 0:
                _, pgrads = lip_penalty_grads(m, cfg.norm)
                grads = _add(grads, pgrads, cfg.lam)
            m = apply_update(m, grads, cfg.lr)
        record(epoch)
    log.model = m
    return log
