"""Small fully-connected networks trained with plain full-batch gradient descent.

Critics use an identity head (unbounded Q-values), the actor a softmax head.
Everything is float64 numpy so that training is bit-reproducible and the
analytic gradients can be checked against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ContractViolation, TrainingDivergence

ACTIVATIONS = ("relu", "identity", "softmax")
LOSSES = ("mse", "cross_entropy")
MAGIC = "BDPI-NET-1"


@dataclass
class Layer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray | None
    activation: str

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TrainSpec:
    learning_rate: float
    epochs: int = 1
    loss: str = "mse"

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ContractViolation(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ContractViolation(f"epochs must be >= 1, got {self.epochs}")
        if self.loss not in LOSSES:
            raise ContractViolation(f"unknown loss {self.loss!r}")


class Network:
    """A stack of dense layers. Not thread-safe; one user at a time."""

    def __init__(self, layers: Sequence[Layer]):
        if not layers:
            raise ContractViolation("a network needs at least one layer")
        for k, layer in enumerate(layers):
            if layer.activation not in ACTIVATIONS:
                raise ContractViolation(f"unknown activation {layer.activation!r}")
            if layer.activation == "softmax" and k != len(layers) - 1:
                raise ContractViolation("softmax is only allowed on the final layer")
            if layer.bias is not None and layer.bias.shape != (layer.fan_out,):
                raise ContractViolation(f"layer {k}: bias shape {layer.bias.shape} != ({layer.fan_out},)")
            if k and layers[k - 1].fan_out != layer.fan_in:
                raise ContractViolation(
                    f"layer {k - 1} outputs {layers[k - 1].fan_out} values "
                    f"but layer {k} expects {layer.fan_in}"
                )
        self.layers = list(layers)

    @classmethod
    def build(
        cls,
        sizes: Sequence[int],
        rng: np.random.Generator,
        hidden_activation: str = "relu",
        output_activation: str = "identity",
        bias: bool = True,
    ) -> "Network":
        """Create a network with weights uniform in +-1/sqrt(fan_in).

        ``sizes`` lists every width, input first, e.g. ``(8, 100, 5)``.
        """
        if len(sizes) < 2:
            raise ContractViolation("sizes needs an input and an output width")
        layers = []
        for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            bound = 1.0 / math.sqrt(n_in)
            w = rng.uniform(-bound, bound, size=(n_in, n_out))
            b = rng.uniform(-bound, bound, size=n_out) if bias else None
            last = k == len(sizes) - 2
            layers.append(Layer(w, b, output_activation if last else hidden_activation))
        return cls(layers)

    @classmethod
    def zeros(cls, sizes: Sequence[int], output_activation: str = "identity", bias: bool = True) -> "Network":
        layers = []
        for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = k == len(sizes) - 2
            layers.append(Layer(
                np.zeros((n_in, n_out)),
                np.zeros(n_out) if bias else None,
                output_activation if last else "relu",
            ))
        return cls(layers)

    @property
    def input_width(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_width(self) -> int:
        return self.layers[-1].fan_out

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [layer.weights.shape for layer in self.layers]

    def parameters(self) -> list[np.ndarray]:
        """Weight and bias arrays in layer order (views, not copies)."""
        params = []
        for layer in self.layers:
            params.append(layer.weights)
            if layer.bias is not None:
                params.append(layer.bias)
        return params

    def copy(self) -> "Network":
        return Network([
            Layer(l.weights.copy(), None if l.bias is None else l.bias.copy(), l.activation)
            for l in self.layers
        ])

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.parameters())

    def __call__(self, x) -> np.ndarray:
        return forward(self, x)

    def __repr__(self) -> str:
        widths = [self.input_width] + [l.fan_out for l in self.layers]
        return f"Network({'-'.join(map(str, widths))}, head={self.layers[-1].activation})"


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "softmax":
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)
    return z


def _as_batch(net: Network, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_width:
        raise ContractViolation(f"expected input width {net.input_width}, got shape {x.shape}")
    return x, single


def _forward_cached(net: Network, x: np.ndarray):
    inputs, pre = [], []
    a = x
    for layer in net.layers:
        inputs.append(a)
        z = a @ layer.weights
        if layer.bias is not None:
            z = z + layer.bias
        pre.append(z)
        a = _activate(z, layer.activation)
    return a, inputs, pre


def forward(net: Network, x) -> np.ndarray:
    """Evaluate the network on one input vector or on a batch (rows)."""
    batch, single = _as_batch(net, x)
    out = _forward_cached(net, batch)[0]
    return out[0] if single else out


def _check_targets(net: Network, x, t) -> tuple[np.ndarray, np.ndarray]:
    x, _ = _as_batch(net, x)
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 1:
        t = t[None, :]
    if t.shape != (x.shape[0], net.output_width):
        raise ContractViolation(f"targets shape {t.shape} does not match ({x.shape[0]}, {net.output_width})")
    if x.shape[0] == 0:
        raise ContractViolation("empty batch")
    return x, t


def _loss(out: np.ndarray, pre_last: np.ndarray, t: np.ndarray, loss: str, head: str) -> float:
    if loss == "mse":
        return float(np.mean((out - t) ** 2))
    if head != "softmax":
        raise ContractViolation("cross-entropy needs a softmax head")
    z = pre_last - pre_last.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-np.sum(t * log_p) / t.shape[0])


def _output_delta(out: np.ndarray, t: np.ndarray, loss: str, head: str) -> np.ndarray:
    """Gradient of the loss with respect to the final pre-activation."""
    n = t.shape[0]
    if loss == "cross_entropy":
        if head != "softmax":
            raise ContractViolation("cross-entropy needs a softmax head")
        return (out * t.sum(axis=1, keepdims=True) - t) / n
    g = 2.0 * (out - t) / t.size
    if head == "softmax":
        return out * (g - np.sum(out * g, axis=1, keepdims=True))
    if head == "relu":
        return g * (out > 0)
    return g


def _backward(net: Network, delta: np.ndarray, inputs, pre) -> list[np.ndarray]:
    grads: list[np.ndarray] = []
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        if layer.bias is not None:
            grads.append(delta.sum(axis=0))
        grads.append(inputs[k].T @ delta)
        if k:
            delta = delta @ layer.weights.T
            below = net.layers[k - 1].activation
            if below == "relu":
                delta = delta * (pre[k - 1] > 0)
    grads.reverse()
    return grads


def loss_value(net: Network, x, t, loss: str = "mse") -> float:
    x, t = _check_targets(net, x, t)
    out, _, pre = _forward_cached(net, x)
    return _loss(out, pre[-1], t, loss, net.layers[-1].activation)


def gradients(net: Network, x, t, loss: str = "mse") -> list[np.ndarray]:
    """Analytic loss gradients, aligned with ``net.parameters()``."""
    x, t = _check_targets(net, x, t)
    out, inputs, pre = _forward_cached(net, x)
    delta = _output_delta(out, t, loss, net.layers[-1].activation)
    return _backward(net, delta, inputs, pre)


def train(net: Network, inputs, targets, spec: TrainSpec) -> float:
    """Run ``spec.epochs`` full-batch descent steps in place.

    Returns the batch loss measured after the last update. Raises
    TrainingDivergence when that loss (or any weight) is not finite.
    """
    x, t = _check_targets(net, inputs, targets)
    head = net.layers[-1].activation
    if spec.loss == "cross_entropy" and head != "softmax":
        raise ContractViolation("cross-entropy needs a softmax head")
    params = net.parameters()
    lr = spec.learning_rate
    # overflow is reported below as TrainingDivergence, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(spec.epochs):
            out, acts, pre = _forward_cached(net, x)
            grads = _backward(net, _output_delta(out, t, spec.loss, head), acts, pre)
            for p, g in zip(params, grads):
                p -= lr * g
        out, _, pre = _forward_cached(net, x)
        value = _loss(out, pre[-1], t, spec.loss, head)
    if not math.isfinite(value) or not net.is_finite():
        raise TrainingDivergence(f"training produced a non-finite loss ({value})")
    return value


def gradient_check(net: Network, x, t, loss: str = "mse", eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    The error of each parameter is |analytic - numeric| / |numeric|, with
    denominators below 1e-7 floored so that 0/0 counts as agreement.
    """
    analytic = gradients(net, x, t, loss)
    worst = 0.0
    for p, g in zip(net.parameters(), analytic):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            up = loss_value(net, x, t, loss)
            flat[i] = saved - eps
            down = loss_value(net, x, t, loss)
            flat[i] = saved
            numeric = (up - down) / (2.0 * eps)
            err = abs(gflat[i] - numeric) / max(abs(numeric), 1e-7)
            worst = max(worst, err)
    return worst


def dumps(net: Network) -> str:
    lines = [MAGIC, f"layers {len(net.layers)}"]
    for layer in net.layers:
        has_bias = "bias" if layer.bias is not None else "nobias"
        lines.append(f"layer {layer.fan_in} {layer.fan_out} {layer.activation} {has_bias}")
        for row in layer.weights:
            lines.append(" ".join(map(float.hex, row.tolist())))
        if layer.bias is not None:
            lines.append(" ".join(map(float.hex, layer.bias.tolist())))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Network:
    lines = iter(text.splitlines())
    if next(lines, None) != MAGIC:
        raise ContractViolation(f"not a {MAGIC} checkpoint")
    try:
        n_layers = int(next(lines).split()[1])
        layers = []
        for _ in range(n_layers):
            _, n_in, n_out, activation, has_bias = next(lines).split()
            n_in, n_out = int(n_in), int(n_out)
            w = np.array([[float.fromhex(v) for v in next(lines).split()] for _ in range(n_in)])
            if w.shape != (n_in, n_out):
                raise ContractViolation(f"weight block has shape {w.shape}, header says ({n_in}, {n_out})")
            b = None
            if has_bias == "bias":
                b = np.array([float.fromhex(v) for v in next(lines).split()])
            layers.append(Layer(w, b, activation))
    except (StopIteration, IndexError, ValueError) as exc:
        if isinstance(exc, ContractViolation):
            raise
        raise ContractViolation(f"truncated or malformed checkpoint: {exc}") from exc
    return Network(layers)


def save(net: Network, path) -> None:
    Path(path).write_text(dumps(net))


def load(path) -> Network:
    return loads(Path(path).read_text())
