"""Small feed-forward networks with hand-written backpropagation.

Everything is float64 numpy. Weight matrices are stored as (out, in) so a
layer computes ``a @ W.T + b``. Hidden layers use ReLU; the output layer is
either linear (MI critic) or sigmoid (IND-CPA classifier).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, NumericFailure, UsageError

BCE_EPS = 1e-12
_MAGIC = b"CAUD"
_FORMAT_VERSION = 1
_ACTIVATION_CODES = {"linear": 0, "sigmoid": 1}


@dataclass
class MlpNetwork:
    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "linear"
    hidden_activation: str = "relu"

    def __post_init__(self):
        dims = list(self.layer_dims)
        if len(dims) < 2 or dims[-1] != 1 or any(d < 1 for d in dims):
            raise ConfigurationError(f"invalid layer_dims {dims}")
        if self.output_activation not in _ACTIVATION_CODES:
            raise ConfigurationError(f"unknown output activation {self.output_activation!r}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ConfigurationError("one weight matrix and bias vector per layer required")
        for ell, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[ell + 1], dims[ell]) or b.shape != (dims[ell + 1],):
                raise ConfigurationError(
                    f"layer {ell}: weight {w.shape} / bias {b.shape} do not match {dims}"
                )
        self.layer_dims = dims

    @property
    def input_width(self) -> int:
        return self.layer_dims[0]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.output_activation,
        )

    def parameters(self):
        """Yield every parameter array, weights and biases interleaved by layer."""
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters())


@dataclass
class GradientBuffer:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def parameters(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b


@dataclass
class TrainConfig:
    """Hyperparameters shared by the MI critic and the IND-CPA classifier."""

    epochs: int = 200
    batch_size: int = 2000
    learning_rate: float = 1e-3
    hidden_layers: int = 2
    hidden_width: int = 100
    seed: int = 0
    stabilizer_coeff: float = 0.1
    optimizer: str = "adam"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.optimizer not in Optimizer.KINDS:
            raise UsageError(f"unknown optimizer {self.optimizer!r}")
        if self.epochs < 1:
            raise UsageError("epochs must be >= 1")
        if self.batch_size < 1:
            raise UsageError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise UsageError("learning_rate must be > 0")
        if self.hidden_layers < 0 or (self.hidden_layers > 0 and self.hidden_width < 1):
            raise UsageError("hidden_layers must be >= 0 and hidden_width >= 1")
        if self.stabilizer_coeff < 0:
            raise UsageError("stabilizer_coeff must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must fit in 64 unsigned bits")

    def layer_dims(self, input_width: int) -> list[int]:
        return [input_width] + [self.hidden_width] * self.hidden_layers + [1]

    def to_dict(self) -> dict:
        d = {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "hidden_layers": self.hidden_layers,
            "hidden_width": self.hidden_width,
            "seed": self.seed,
            "stabilizer_coeff": self.stabilizer_coeff,
            "optimizer": self.optimizer,
        }
        d.update(self.extra)
        return d


def init_network(layer_dims, seed, output_activation="linear") -> MlpNetwork:
    """Uniform(+-sqrt(6/fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(list(layer_dims), weights, biases, output_activation)


def zero_network(layer_dims, output_activation="linear") -> MlpNetwork:
    return MlpNetwork(
        list(layer_dims),
        [np.zeros((o, i)) for i, o in zip(layer_dims[:-1], layer_dims[1:])],
        [np.zeros(o) for o in layer_dims[1:]],
        output_activation,
    )


def sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward_cached(net: MlpNetwork, batch) -> list[np.ndarray]:
    """Return the activations of every layer, input first, pre-sigmoid logits last.

    The final entry is the output *before* the output nonlinearity so that
    backpropagation can use the logit directly.
    """
    a = np.asarray(batch, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != net.input_width:
        raise ConfigurationError(
            f"batch has shape {a.shape}, network expects {net.input_width} columns"
        )
    acts = [a]
    last = net.n_layers - 1
    for ell, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        if ell < last:
            a = np.maximum(z, 0.0)
        else:
            a = z
        if not np.isfinite(a).all():
            raise NumericFailure(f"non-finite activation in layer {ell}", layer=ell)
        acts.append(a)
    return acts


def forward(net: MlpNetwork, batch) -> np.ndarray:
    z = forward_cached(net, batch)[-1][:, 0]
    if net.output_activation == "sigmoid":
        return sigmoid(z)
    return z


def _log_mean_exp(scores: np.ndarray) -> float:
    m = float(np.max(scores))
    return m + float(np.log(np.mean(np.exp(scores - m))))


def dv_objective(joint_scores, marginal_scores, stabilizer_coeff=0.1):
    """Donsker-Varadhan MI estimate and the stabilized training loss.

    Returns ``(mi_estimate, training_loss)``. The estimate is the plain DV
    value ``mean(joint) - log mean exp(marginal)`` in nats; the loss is the
    negated objective with the ``-coeff * (log mean exp)^2`` stabilizer.
    """
    joint = np.asarray(joint_scores, dtype=np.float64).ravel()
    marg = np.asarray(marginal_scores, dtype=np.float64).ravel()
    if joint.size == 0 or marg.size == 0:
        raise UsageError("dv_objective needs nonempty score vectors")
    lme = _log_mean_exp(marg)
    mi = float(np.mean(joint)) - lme
    loss = -(mi - stabilizer_coeff * lme * lme)
    return mi, loss


def bce_objective(predictions, labels) -> float:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise UsageError(f"predictions ({p.size}) and labels ({y.size}) differ in length")
    p = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log1p(-p))))


def _backprop(net: MlpNetwork, acts, d_out) -> GradientBuffer:
    """Push d(loss)/d(output logit) back through the cached activations."""
    grad_w = [None] * net.n_layers
    grad_b = [None] * net.n_layers
    delta = d_out.reshape(-1, 1)
    for ell in range(net.n_layers - 1, -1, -1):
        grad_w[ell] = delta.T @ acts[ell]
        grad_b[ell] = delta.sum(axis=0)
        if ell > 0:
            delta = (delta @ net.weights[ell]) * (acts[ell] > 0)
    return GradientBuffer(grad_w, grad_b)


def loss_and_gradients(net: MlpNetwork, batch, loss_kind, **loss_args):
    """Evaluate the selected objective and its exact gradient.

    ``loss_kind="bce"`` needs ``labels``; ``loss_kind="dv"`` treats ``batch``
    as the joint pairs and needs ``marginal`` (the product-of-marginals pairs)
    and optionally ``stabilizer_coeff``.

    Returns ``(loss, aux, grads)`` where ``aux`` is the unstabilized MI
    estimate for ``dv`` and the predictions for ``bce``.
    """
    if loss_kind == "bce":
        labels = np.asarray(loss_args["labels"], dtype=np.float64).ravel()
        acts = forward_cached(net, batch)
        z = acts[-1][:, 0]
        if labels.shape != z.shape:
            raise UsageError("labels must have one entry per batch row")
        p = sigmoid(z)
        loss = bce_objective(p, labels)
        grads = _backprop(net, acts, (p - labels) / z.size)
        aux = p
    elif loss_kind == "dv":
        marginal = np.asarray(loss_args["marginal"], dtype=np.float64)
        coeff = float(loss_args.get("stabilizer_coeff", 0.1))
        joint = np.asarray(batch, dtype=np.float64)
        n_joint = joint.shape[0]
        # one pass over both halves keeps the matmuls large
        acts = forward_cached(net, np.vstack([joint, marginal]))
        scores = acts[-1][:, 0]
        t_joint, t_marg = scores[:n_joint], scores[n_joint:]
        aux, loss = dv_objective(t_joint, t_marg, coeff)
        lme = _log_mean_exp(t_marg)
        w = np.exp(t_marg - t_marg.max())
        w /= w.sum()
        d_out = np.concatenate([np.full(n_joint, -1.0 / n_joint), (1.0 + 2.0 * coeff * lme) * w])
        grads = _backprop(net, acts, d_out)
    else:
        raise UsageError(f"unknown loss kind {loss_kind!r}")
    for ell, g in enumerate(grads.parameters()):
        if not np.isfinite(g).all():
            raise NumericFailure(f"non-finite gradient in layer {ell // 2}", layer=ell // 2)
    return loss, aux, grads


def backward(net: MlpNetwork, batch, loss_kind, **loss_args) -> GradientBuffer:
    return loss_and_gradients(net, batch, loss_kind, **loss_args)[2]


def loss_value(net: MlpNetwork, batch, loss_kind, **loss_args) -> float:
    """Objective value only; used by the finite-difference oracle."""
    if loss_kind == "bce":
        z = forward_cached(net, batch)[-1][:, 0]
        return bce_objective(sigmoid(z), loss_args["labels"])
    if loss_kind == "dv":
        coeff = float(loss_args.get("stabilizer_coeff", 0.1))
        return dv_objective(
            forward(net, batch), forward(net, loss_args["marginal"]), coeff
        )[1]
    raise UsageError(f"unknown loss kind {loss_kind!r}")


def sgd_step(net: MlpNetwork, grads: GradientBuffer, learning_rate) -> MlpNetwork:
    """Plain SGD: ``p <- p - lr * g`` for every parameter. Returns a new network."""
    if len(grads.weights) != net.n_layers:
        raise UsageError("gradient buffer has the wrong number of layers")
    new_w, new_b = [], []
    for w, b, gw, gb in zip(net.weights, net.biases, grads.weights, grads.biases):
        if gw.shape != w.shape or gb.shape != b.shape:
            raise UsageError(f"gradient shape {gw.shape} does not match weight {w.shape}")
        new_w.append(w - learning_rate * gw)
        new_b.append(b - learning_rate * gb)
    out = MlpNetwork(list(net.layer_dims), new_w, new_b, net.output_activation)
    if not out.is_finite():
        raise NumericFailure("SGD step produced non-finite parameters")
    return out


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, net: MlpNetwork) -> "AdamState":
        return cls([np.zeros_like(p) for p in net.parameters()], [np.zeros_like(p) for p in net.parameters()])


def adam_step(net: MlpNetwork, grads: GradientBuffer, state: AdamState, learning_rate) -> MlpNetwork:
    """Bias-corrected Adam update. ``state`` is advanced in place."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1**state.t, 1.0 - b2**state.t
    new_params = []
    for p, g, m, v in zip(net.parameters(), grads.parameters(), state.m, state.v):
        if g.shape != p.shape:
            raise UsageError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        new_params.append(p - learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps))
    out = MlpNetwork(list(net.layer_dims), new_params[0::2], new_params[1::2], net.output_activation)
    if not out.is_finite():
        raise NumericFailure("Adam step produced non-finite parameters")
    return out


class Optimizer:
    """Applies ``sgd`` or ``adam`` updates with a fixed learning rate."""

    KINDS = ("sgd", "adam")

    def __init__(self, kind, learning_rate, net: MlpNetwork):
        if kind not in self.KINDS:
            raise UsageError(f"unknown optimizer {kind!r}; choose from {self.KINDS}")
        self.kind = kind
        self.learning_rate = learning_rate
        self.state = AdamState.for_network(net) if kind == "adam" else None

    def step(self, net, grads):
        if self.kind == "sgd":
            return sgd_step(net, grads, self.learning_rate)
        return adam_step(net, grads, self.state, self.learning_rate)


def save_network(net: MlpNetwork, path) -> None:
    dims = net.layer_dims
    parts = [
        _MAGIC,
        struct.pack("<I", _FORMAT_VERSION),
        struct.pack("<I", len(dims)),
        struct.pack(f"<{len(dims)}I", *dims),
        struct.pack("<B", _ACTIVATION_CODES[net.output_activation]),
    ]
    for w, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_network(path) -> MlpNetwork:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise FormatError(f"{path}: not a network snapshot (bad magic)")
    try:
        (version,) = struct.unpack_from("<I", data, 4)
        if version != _FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported snapshot version {version}")
        (n_dims,) = struct.unpack_from("<I", data, 8)
        dims = list(struct.unpack_from(f"<{n_dims}I", data, 12))
        off = 12 + 4 * n_dims
        (act_code,) = struct.unpack_from("<B", data, off)
        off += 1
    except struct.error as exc:
        raise FormatError(f"{path}: truncated header") from exc
    activation = {v: k for k, v in _ACTIVATION_CODES.items()}.get(act_code)
    if activation is None:
        raise FormatError(f"{path}: unknown activation code {act_code}")
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        nw, nb = fan_in * fan_out * 8, fan_out * 8
        if off + nw + nb > len(data):
            raise FormatError(f"{path}: truncated parameter block")
        weights.append(np.frombuffer(data, "<f8", fan_in * fan_out, off).reshape(fan_out, fan_in).copy())
        off += nw
        biases.append(np.frombuffer(data, "<f8", fan_out, off).copy())
        off += nb
    if off != len(data):
        raise FormatError(f"{path}: trailing bytes after parameters")
    return MlpNetwork(dims, weights, biases, activation)
