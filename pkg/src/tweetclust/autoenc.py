"""Deep autoencoder over tweet vectors, trained with Adadelta.

Fully-connected tanh layers taper symmetrically down to a narrow
bottleneck and back up, with a sigmoid on the output layer so binary
cross-entropy against the L1-normalized inputs is well-posed. Gradients
are hand-derived backprop; the encoder half alone produces the
compressed codes used for final clustering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._math import sigmoid

BCE_EPSILON = 1e-7
ADADELTA_RHO = 0.95
ADADELTA_EPSILON = 1e-6
MODEL_FORMAT = "tweetclust-autoencoder 1"


@dataclass
class NetworkSpec:
    """Symmetric layer widths, strictly tapering to the bottleneck.

    ``layer_sizes`` lists every layer including input and output, e.g.
    [200, 128, 64, 20, 64, 128, 200]. Hidden activations are tanh, the
    output activation is sigmoid.
    """

    layer_sizes: list[int]

    def __post_init__(self):
        sizes = list(self.layer_sizes)
        if len(sizes) < 3 or len(sizes) % 2 == 0:
            raise ValueError("layer_sizes must be an odd-length list of >= 3 sizes")
        if any(s <= 0 for s in sizes):
            raise ValueError("layer sizes must be positive")
        if sizes != sizes[::-1]:
            raise ValueError("layer_sizes must be mirror-symmetric")
        mid = len(sizes) // 2
        for i in range(mid):
            if sizes[i] <= sizes[i + 1]:
                raise ValueError(
                    "layer sizes must strictly decrease to the bottleneck"
                )
        self.layer_sizes = sizes

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def bottleneck(self) -> int:
        return self.layer_sizes[len(self.layer_sizes) // 2]

    @property
    def encoder_layers(self) -> int:
        return len(self.layer_sizes) // 2


@dataclass
class NetworkState:
    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class AdadeltaState:
    """Exponential moving averages of squared gradients and squared updates."""

    sq_grads: list[np.ndarray]
    sq_updates: list[np.ndarray]
    rho: float = ADADELTA_RHO
    epsilon: float = ADADELTA_EPSILON

    @classmethod
    def zeros_like(cls, params: list[np.ndarray], rho: float = ADADELTA_RHO,
                   epsilon: float = ADADELTA_EPSILON) -> "AdadeltaState":
        return cls(
            sq_grads=[np.zeros_like(p) for p in params],
            sq_updates=[np.zeros_like(p) for p in params],
            rho=rho,
            epsilon=epsilon,
        )


@dataclass
class TrainReport:
    final_loss: float
    epoch_losses: list[float] = field(default_factory=list)


def init_network(spec: NetworkSpec, rng: np.random.Generator) -> NetworkState:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetworkState(spec=spec, weights=weights, biases=biases)


def forward(net: NetworkState, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Full reconstruction pass; returns (output, per-layer activations).

    Accepts one vector or a (batch, C) matrix. activations[0] is the input,
    activations[-1] the sigmoid output.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.spec.input_dim:
        raise ValueError(
            f"input dimension {x.shape[-1]} != network input {net.spec.input_dim}"
        )
    activations = [x]
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        a = sigmoid(z) if i == last else np.tanh(z)
        activations.append(a)
    return a, activations


def encode(net: NetworkState, x: np.ndarray) -> np.ndarray:
    """Encoder half only; output has the bottleneck dimensionality."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.spec.input_dim:
        raise ValueError(
            f"input dimension {x.shape[-1]} != network input {net.spec.input_dim}"
        )
    a = x
    for i in range(net.spec.encoder_layers):
        a = np.tanh(a @ net.weights[i] + net.biases[i])
    return a


def bce_loss(prediction: np.ndarray, target: np.ndarray) -> float:
    """Mean binary cross-entropy; predictions clamped to [eps, 1-eps]."""
    p = np.asarray(prediction, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    p = np.clip(p, BCE_EPSILON, 1.0 - BCE_EPSILON)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))


def backward(net: NetworkState, activations: list[np.ndarray],
             target: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Analytic gradients of bce_loss w.r.t. every weight and bias.

    For batched activations the gradients are means over the batch,
    matching the mean-over-everything convention of :func:`bce_loss`.
    """
    target = np.asarray(target, dtype=np.float64)
    output = activations[-1]
    batched = output.ndim == 2
    batch = output.shape[0] if batched else 1
    scale = 1.0 / (batch * output.shape[-1])
    # sigmoid output + BCE: delta simplifies to (p - t)
    delta = (output - target) * scale

    grads_w: list[np.ndarray] = [None] * len(net.weights)
    grads_b: list[np.ndarray] = [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        a_prev = activations[layer]
        if batched:
            grads_w[layer] = a_prev.T @ delta
            grads_b[layer] = delta.sum(axis=0)
        else:
            grads_w[layer] = np.outer(a_prev, delta)
            grads_b[layer] = delta.copy()
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (1.0 - activations[layer] ** 2)
    return grads_w, grads_b


def adadelta_step(params: list[np.ndarray], grads: list[np.ndarray],
                  state: AdadeltaState) -> None:
    """One in-place Adadelta update.

    E[g2] <- rho E[g2] + (1-rho) g2
    delta  = -(sqrt(E[d2] + eps) / sqrt(E[g2] + eps)) g
    E[d2] <- rho E[d2] + (1-rho) delta2
    """
    rho, eps = state.rho, state.epsilon
    for p, g, eg, ed in zip(params, grads, state.sq_grads, state.sq_updates):
        eg *= rho
        eg += (1.0 - rho) * g * g
        delta = -np.sqrt(ed + eps) / np.sqrt(eg + eps) * g
        ed *= rho
        ed += (1.0 - rho) * delta * delta
        p += delta


def train(spec: NetworkSpec, data, epochs: int = 100, batch_size: int = 32,
          seed: int = 1, rho: float = ADADELTA_RHO,
          epsilon: float = ADADELTA_EPSILON) -> tuple[NetworkState, TrainReport]:
    """Mini-batch reconstruction training (target == input).

    ``data`` is a (n, C) matrix or a list of TweetVector; entries must lie
    in [0, 1] and all-zero rows are expected to be filtered out upstream.
    Sample order is reshuffled every epoch from the seeded generator, so a
    fixed seed reproduces the run exactly.
    """
    if not isinstance(data, np.ndarray):
        data = np.vstack([tv.weights for tv in data]) if data else np.zeros((0, 0))
    if data.size == 0:
        raise ValueError("cannot train on empty data")
    if data.ndim != 2 or data.shape[1] != spec.input_dim:
        raise ValueError(f"data shape {data.shape} incompatible with spec")
    if data.min() < 0.0 or data.max() > 1.0:
        raise ValueError("data entries must lie in [0, 1]")
    if batch_size <= 0 or epochs < 0:
        raise ValueError("batch_size must be positive and epochs non-negative")

    rng = np.random.default_rng(seed)
    net = init_network(spec, rng)
    params = net.weights + net.biases
    state = AdadeltaState.zeros_like(params, rho=rho, epsilon=epsilon)

    n = len(data)
    epoch_losses: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = data[order[start:start + batch_size]]
            _, activations = forward(net, batch)
            grads_w, grads_b = backward(net, activations, batch)
            adadelta_step(params, grads_w + grads_b, state)
        output, _ = forward(net, data)
        epoch_losses.append(bce_loss(output, data))

    if epoch_losses:
        final_loss = epoch_losses[-1]
    else:
        output, _ = forward(net, data)
        final_loss = bce_loss(output, data)
    return net, TrainReport(final_loss=final_loss, epoch_losses=epoch_losses)


def save_model(net: NetworkState, path: str | Path) -> None:
    """Versioned text container: header, layer sizes, then row-major
    weight matrices and bias vectors at full float64 precision."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(MODEL_FORMAT + "\n")
        fh.write("layers " + " ".join(str(s) for s in net.spec.layer_sizes) + "\n")
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            fh.write(f"W{i} {w.shape[0]} {w.shape[1]}\n")
            for row in w:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
            fh.write(f"b{i} {b.shape[0]}\n")
            fh.write(" ".join(f"{v:.17g}" for v in b) + "\n")


def load_model(path: str | Path) -> NetworkState:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT!r} file")
    if not lines[1].startswith("layers "):
        raise ValueError(f"{path}: missing layer sizes")
    spec = NetworkSpec([int(x) for x in lines[1].split()[1:]])
    weights, biases = [], []
    pos = 2
    for i in range(len(spec.layer_sizes) - 1):
        tag, rows, cols = lines[pos].split()
        if tag != f"W{i}":
            raise ValueError(f"{path}: expected W{i}, found {tag}")
        rows, cols = int(rows), int(cols)
        w = np.array(
            [[float(v) for v in lines[pos + 1 + r].split()] for r in range(rows)]
        )
        if w.shape != (rows, cols):
            raise ValueError(f"{path}: W{i} shape mismatch")
        pos += 1 + rows
        tag, size = lines[pos].split()
        if tag != f"b{i}":
            raise ValueError(f"{path}: expected b{i}, found {tag}")
        b = np.array([float(v) for v in lines[pos + 1].split()])
        if b.shape != (int(size),):
            raise ValueError(f"{path}: b{i} shape mismatch")
        pos += 2
        weights.append(w)
        biases.append(b)
    return NetworkState(spec=spec, weights=weights, biases=biases)
