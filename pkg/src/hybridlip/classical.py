"""Feed-forward networks and their Lipschitz certificates.

A :class:`DenseNet` applies ``x -> act(W x + b)`` layer by layer; the final
layer usually has activation ``"none"``. Three bounds are available:

* :func:`lip_product`: product of induced norms times activation slopes.
* :func:`lip_sdp`: the LipSDP certificate for ``l2``, built from the sector
  bounds ``[alpha, beta]`` of each activation.
* :func:`lip_empirical`: a lower bound from finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .errors import DimensionMismatch, UseProductBound, ValidationError
from .norms import NormTag, euclidean, induced_norm, vector_norm


@dataclass(frozen=True)
class Activation:
    """Slope-restricted scalar nonlinearity: difference quotients lie in ``[alpha, beta]``."""

    name: str
    alpha: float
    beta: float

    @property
    def lipschitz(self) -> float:
        return max(abs(self.alpha), abs(self.beta))

    def __call__(self, z):
        if self.name == "relu":
            return np.maximum(z, 0.0)
        if self.name == "sigmoid":
            return 0.5 * (1.0 + np.tanh(0.5 * z))
        if self.name == "tanh":
            return np.tanh(z)
        return z

    def derivative(self, z):
        if self.name == "relu":
            return (z > 0).astype(float)
        if self.name == "sigmoid":
            s = self(z)
            return s * (1.0 - s)
        if self.name == "tanh":
            return 1.0 - np.tanh(z) ** 2
        return np.ones_like(z)


ACTIVATIONS = {
    "relu": Activation("relu", 0.0, 1.0),
    "sigmoid": Activation("sigmoid", 0.0, 0.25),
    "tanh": Activation("tanh", 0.0, 1.0),
    "none": Activation("none", 1.0, 1.0),
}


def activation(name) -> Activation:
    if isinstance(name, Activation):
        return name
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValidationError(f"unknown activation {name!r}; expected one of {sorted(ACTIVATIONS)}") from None


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    act: Activation = ACTIVATIONS["none"]

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        b = np.asarray(self.bias, dtype=float).ravel()
        if b.size != w.shape[0]:
            raise DimensionMismatch(f"bias of length {b.size} for weights of shape {w.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValidationError("layer parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "act", activation(self.act))


@dataclass(frozen=True, eq=False)
class DenseNet:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("a network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weights.shape[1] != prev.weights.shape[0]:
                raise DimensionMismatch(
                    f"layer of width {prev.weights.shape[0]} feeds weights of shape {nxt.weights.shape}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    def replace_params(self, params) -> "DenseNet":
        """New net with ``[(W, b), ...]`` swapped in, activations kept."""
        return DenseNet(tuple(Layer(w, b, l.act) for (w, b), l in zip(params, self.layers)))

    def params(self) -> list:
        return [(l.weights, l.bias) for l in self.layers]

    def to_json(self) -> dict:
        return {"layers": [layer_to_json(l) for l in self.layers]}

    @classmethod
    def from_json(cls, data: dict) -> "DenseNet":
        try:
            return cls(tuple(layer_from_json(d) for d in data["layers"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed network description: {exc}") from exc


def layer_to_json(l: Layer) -> dict:
    return {"type": "dense", "weights": l.weights.tolist(), "bias": l.bias.tolist(), "activation": l.act.name}


def layer_from_json(d: dict) -> Layer:
    if d.get("type", "dense") != "dense":
        raise ValidationError(f"expected a dense layer, got type {d.get('type')!r}")
    return Layer(np.asarray(d["weights"], dtype=float), np.asarray(d["bias"], dtype=float), d.get("activation", "none"))


def random_dense_net(sizes, seed: int, act: str = "relu", out_act: str = "none", scale: float = 1.0) -> DenseNet:
    """Gaussian weights with variance ``scale^2 / fan_in`` and small biases."""
    rng = np.random.default_rng(seed)
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = rng.standard_normal((n_out, n_in)) * scale / np.sqrt(n_in)
        b = 0.1 * rng.standard_normal(n_out)
        layers.append(Layer(w, b, act if i < len(sizes) - 2 else out_act))
    return DenseNet(tuple(layers))


# forward / backward ----------------------------------------------------------

def forward(net: DenseNet, x) -> np.ndarray:
    """Evaluate the net on one input vector or a batch of rows."""
    return forward_cache(net, x)[0]


def forward_cache(net: DenseNet, x):
    """Output plus ``(input, preactivation)`` per layer for :func:`backward`."""
    h = np.asarray(x, dtype=float)
    if h.shape[-1] != net.in_dim:
        raise DimensionMismatch(f"input has {h.shape[-1]} features, net expects {net.in_dim}")
    cache = []
    for l in net.layers:
        z = h @ l.weights.T + l.bias
        cache.append((h, z))
        h = l.act(z)
    return h, cache


def backward(net: DenseNet, cache, grad_out):
    """Reverse accumulation through the net.

    Args:
        cache: second result of :func:`forward_cache` on a batch (rows).
        grad_out: gradient of the loss w.r.t. the outputs, same shape.

    Returns:
        ``([(dW, db), ...], grad_input)`` with parameter gradients summed
        over the batch.
    """
    g = np.asarray(grad_out, dtype=float)
    grads = []
    for l, (h, z) in zip(reversed(net.layers), reversed(cache)):
        g = g * l.act.derivative(z)
        grads.append((np.atleast_2d(g).T @ np.atleast_2d(h), np.atleast_2d(g).sum(axis=0)))
        g = g @ l.weights
    return grads[::-1], g


def jacobian(net: DenseNet, x) -> np.ndarray:
    """Jacobian ``df/dx`` at a single input."""
    _, cache = forward_cache(net, np.asarray(x, dtype=float))
    j = np.eye(net.in_dim)
    for l, (_, z) in zip(net.layers, cache):
        j = l.act.derivative(z)[:, None] * (l.weights @ j)
    return j


# bounds ------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassicalBoundReport:
    bound: float
    norm: NormTag
    method: str
    multipliers: list | None = None
    iterations: int = 0

    def to_json(self) -> dict:
        out = {"bound": self.bound, "norm": str(self.norm), "method": self.method}
        if self.multipliers is not None:
            out["multipliers"] = [np.asarray(m).tolist() for m in self.multipliers]
        return out


def lip_product(net: DenseNet, norm="l2") -> ClassicalBoundReport:
    tag = euclidean(norm)
    bound = 1.0
    for l in net.layers:
        bound *= l.act.lipschitz * induced_norm(l.weights, tag)
    return ClassicalBoundReport(float(bound), tag, "product")


def lipsdp_matrix(gamma: float, t: np.ndarray, w0: np.ndarray, w1: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Negated LipSDP matrix for ``x -> w1 act(w0 x)``; PSD certifies ``gamma``.

    Blocks are ``[[gamma^2 I + 2 a b W0^T T W0, -(a+b) W0^T T], [-(a+b) T W0, 2T - W1^T W1]]``.
    """
    tw0 = t[:, None] * w0
    top_left = gamma**2 * np.eye(w0.shape[1]) + 2 * alpha * beta * (w0.T @ tw0)
    off = -(alpha + beta) * tw0
    bottom = 2 * np.diag(t) - w1.T @ w1
    return np.block([[top_left, off.T], [off, bottom]])


def _gamma_sq(t, w0, w1, alpha, beta) -> float:
    """Smallest certified ``gamma^2`` for a fixed multiplier, via the Schur complement."""
    s = 2 * np.diag(t) - w1.T @ w1
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return np.inf
    tw0 = t[:, None] * w0
    y = np.linalg.solve(chol, (alpha + beta) * tw0)
    m = y.T @ y - 2 * alpha * beta * (w0.T @ tw0)
    return max(float(np.linalg.eigvalsh(0.5 * (m + m.T))[-1]), 0.0)


def _lmi_basis(w0, w1, alpha, beta):
    """``M(rho, t) = base + rho * F[0] + sum_j t_j * F[1 + j]``."""
    n1, n0 = w0.shape
    m = n0 + n1
    base = np.zeros((m, m))
    base[n0:, n0:] = -w1.T @ w1
    f = np.zeros((1 + n1, m, m))
    f[0, :n0, :n0] = np.eye(n0)
    for j in range(n1):
        row = w0[j]
        f[1 + j, :n0, :n0] = 2 * alpha * beta * np.outer(row, row)
        f[1 + j, :n0, n0 + j] = f[1 + j, n0 + j, :n0] = -(alpha + beta) * row
        f[1 + j, n0 + j, n0 + j] = 2.0
    return base, f


def _barrier_search(t0, rho0, w0, w1, alpha, beta, budget):
    """Minimize ``rho`` subject to ``M(rho, T) >= 0`` by log-det barrier Newton steps.

    Starts from the strictly feasible ``(rho0, t0)`` and spends at most
    ``budget`` Newton steps. Returns the multiplier of the last iterate.
    """
    base, f = _lmi_basis(w0, w1, alpha, beta)
    m = base.shape[0]
    cost = np.zeros(f.shape[0])
    cost[0] = 1.0
    x = np.concatenate([[rho0], t0])

    def logdet(z):
        try:
            chol = np.linalg.cholesky(base + np.einsum("k,kij->ij", z, f))
        except np.linalg.LinAlgError:
            return None, None
        return 2 * np.log(np.diag(chol)).sum(), chol

    weight = m / max(rho0, 1e-12)
    steps = 0
    while steps < budget and m / weight > 1e-10 * max(x[0], 1e-12):
        while steps < budget:
            ld, chol = logdet(x)
            if chol is None:
                return x[1:]
            try:
                inv = np.linalg.inv(chol)
            except np.linalg.LinAlgError:
                return x[1:]
            g = inv[None] @ f @ inv.T[None]
            grad = weight * cost - np.einsum("kii->k", g)
            hess = np.einsum("kij,lji->kl", g, g)
            try:
                dx = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                return x[1:]
            dec = -grad @ dx
            steps += 1
            if dec < 1e-10:
                break
            value = weight * x[0] - ld
            step = 1.0
            while step > 1e-12:
                ld_new, _ = logdet(x + step * dx)
                if ld_new is not None and weight * (x[0] + step * dx[0]) - ld_new <= value - 0.25 * step * dec:
                    break
                step *= 0.5
            else:
                break
            x = x + step * dx
        weight *= 20.0
    return x[1:]


def _certify_block(w0, w1, act: Activation, budget: int, rel_tol: float, max_bisect: int):
    """Certified ``gamma`` and multiplier ``T`` for ``x -> w1 act(w0 x)``.

    The LMI is homogeneous: with ``w0 = a u0``, ``w1 = b u1`` and
    ``T = b^2 T'``, a congruence maps it to the LMI for ``(u0, u1)`` at level
    ``gamma / (a b)``. Working with unit-norm weights keeps the barrier
    well conditioned for weights near zero.
    """
    a, b = nx.spectral_norm(w0), nx.spectral_norm(w1)
    if a == 0.0 or b == 0.0:
        return 0.0, np.zeros(w0.shape[0]), 0
    g, t, steps = _certify_unit(w0 / a, w1 / b, act, budget, rel_tol, max_bisect)
    return g * a * b, t * b * b, steps


def _certify_unit(w0, w1, act: Activation, budget: int, rel_tol: float, max_bisect: int):
    alpha, beta = act.alpha, act.beta
    n1 = w0.shape[0]
    w1_sq = nx.spectral_norm(w1) ** 2
    # scalar multipliers first; t = ||W1||^2 reproduces the norm-product certificate
    grid = np.unique(np.append(w1_sq * np.logspace(-1, 1, 19), w1_sq))
    scores = [_gamma_sq(np.full(n1, t), w0, w1, alpha, beta) for t in grid]
    best_t = np.full(n1, grid[int(np.argmin(scores))])
    best_val = float(np.min(scores))
    if budget > 0:
        t = _barrier_search(best_t, 2.0 * best_val + 1e-9 * w1_sq + 1e-12, w0, w1, alpha, beta, budget)
        val = _gamma_sq(t, w0, w1, alpha, beta)
        if val < best_val:
            best_t, best_val = t, val

    feasible = lambda g: nx.psd_feasible(lipsdp_matrix(g, best_t, w0, w1, alpha, beta), 0.0)
    lo, hi = 0.0, np.sqrt(best_val) * (1 + 1e-6) + 1e-12
    steps = 0
    while not feasible(hi):
        lo, hi = hi, 2 * hi
        steps += 1
        if steps > max_bisect:
            raise UseProductBound("could not find a feasible LipSDP level")
    while hi - lo > rel_tol * hi and steps < max_bisect:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        steps += 1
    return float(hi), best_t, steps


def lip_sdp(net: DenseNet, budget: int = 200, rel_tol: float = 1e-7, max_bisect: int = 60) -> ClassicalBoundReport:
    """LipSDP upper bound on the ``l2`` Lipschitz constant.

    Each activated layer is paired with the layer after it into a block
    ``x -> W1 act(W0 x + b0)``. For a block, the diagonal multiplier ``T``
    starts at the best of 20 scalar choices ``T = tI`` and is refined by a
    log-det barrier method on the LMI (at most ``budget`` Newton steps);
    ``gamma`` is then certified by bisection on the LMI with that ``T``. Blocks multiply with the slopes of the activations
    between them; leftover unpaired layers contribute their norm product.

    Raises:
        UseProductBound: when the net has no activated layer followed by
            another layer.
    """
    layers = net.layers
    bound, mults, iters = 1.0, [], 0
    i, paired = 0, False
    while i < len(layers):
        l = layers[i]
        if l.act.name != "none" and i + 1 < len(layers):
            g, t, steps = _certify_block(l.weights, layers[i + 1].weights, l.act, budget, rel_tol, max_bisect)
            bound *= g * layers[i + 1].act.lipschitz
            mults.append(t)
            iters = max(iters, steps)
            paired = True
            i += 2
        else:
            bound *= l.act.lipschitz * nx.spectral_norm(l.weights)
            i += 1
    if not paired:
        raise UseProductBound("network has no hidden activation; the product bound is exact-enough")
    return ClassicalBoundReport(float(bound), NormTag.L2, "sdp", mults, iters)


def _worst_direction(j: np.ndarray, tag: NormTag) -> np.ndarray:
    if tag is NormTag.L2:
        return np.linalg.svd(j)[2][0]
    if tag is NormTag.L1:
        e = np.zeros(j.shape[1])
        e[np.argmax(np.abs(j).sum(axis=0))] = 1.0
        return e
    row = j[np.argmax(np.abs(j).sum(axis=1))]
    return np.where(row >= 0, 1.0, -1.0)


def lip_empirical(net: DenseNet, samples: int = 1000, seed: int = 0, norm="l2",
                  low: float = -1.0, high: float = 1.0, step: float = 1e-6) -> ClassicalBoundReport:
    """Largest observed ``||f(x) - f(x + d)|| / ||d||`` over sampled pairs.

    Half of the perturbations follow the worst-case direction of the local
    Jacobian, the rest are random; every value is a genuine pair ratio, so
    the result is a lower bound on the Lipschitz constant.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    tag = euclidean(norm)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(low, high, size=(samples, net.in_dim))
    dirs = rng.standard_normal((samples, net.in_dim))
    for k in range(0, samples, 2):
        dirs[k] = _worst_direction(jacobian(net, xs[k]), tag)
    dirs /= np.maximum(vector_norm(dirs, tag)[:, None], 1e-300)
    d = step * dirs
    ratios = vector_norm(forward(net, xs + d) - forward(net, xs), tag) / vector_norm(d, tag)
    return ClassicalBoundReport(float(np.max(ratios)), tag, "empirical_lower")
