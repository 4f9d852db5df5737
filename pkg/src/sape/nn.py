"""Dense feed-forward network with manual backpropagation and Adam.

ReLU hidden layers, linear or sigmoid output, float64 throughout.
Everything is deterministic given a seed; there is no hidden state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import binfmt


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient becomes non-finite.

    Carries the iteration (or optimizer step) index at which it happened.
    """

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


OUTPUT_ACTIVATIONS = ("linear", "sigmoid")


@dataclass
class MlpParams:
    """Weights and biases of a dense ReLU network.

    weights[k] has shape (out_k, in_k) with out_k == in_{k+1}; biases[k]
    has shape (out_k,).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "linear"

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def depth(self) -> int:
        """Number of hidden layers."""
        return len(self.weights) - 1

    @property
    def hidden_width(self) -> int:
        return self.weights[0].shape[0] if self.depth > 0 else 0

    def copy(self) -> "MlpParams":
        return MlpParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.output_activation,
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(w).all() for w in self.weights) and all(
            np.isfinite(b).all() for b in self.biases
        )


@dataclass
class Gradients:
    """Parameter gradients, shaped exactly like MlpParams."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class AdamState:
    """Adam moment estimates plus hyperparameters.

    Moment arrays mirror the parameter shapes; step_count increases by
    exactly one per optimizer step.
    """

    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: MlpParams, lr: float = 1e-3, beta1: float = 0.9,
             beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        zw = [np.zeros_like(w) for w in params.weights]
        zb = [np.zeros_like(b) for b in params.biases]
        return cls([z.copy() for z in zw], zw, [z.copy() for z in zb], zb,
                   0, lr, beta1, beta2, eps)


@dataclass
class Batch:
    """One training batch: inputs, targets, and indices into the sample table.

    sample_ids route per-sample losses back to the spatial mask grid.
    """

    inputs: np.ndarray
    targets: np.ndarray
    sample_ids: np.ndarray

    def __post_init__(self):
        if not (len(self.inputs) == len(self.targets) == len(self.sample_ids)):
            raise ValueError("batch arrays must have equal length")


@dataclass
class ForwardCache:
    """Activations saved by mlp_forward for the matching backward pass."""

    inputs: list[np.ndarray]    # input to each affine layer
    preacts: list[np.ndarray]   # pre-activation of each layer
    outputs: np.ndarray         # post output-activation


def init_params(in_dim: int, hidden_width: int, depth: int, out_dim: int,
                seed: int, output_activation: str = "linear") -> MlpParams:
    """Create network parameters with fan-in-scaled uniform initialization.

    Weights and biases of a layer with fan_in inputs are drawn i.i.d. from
    U(-1/sqrt(fan_in), 1/sqrt(fan_in)). Identical seeds give bit-identical
    parameters.
    """
    for name, v in (("in_dim", in_dim), ("hidden_width", hidden_width),
                    ("depth", depth), ("out_dim", out_dim)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    if output_activation not in OUTPUT_ACTIVATIONS:
        raise ValueError(f"unknown output activation {output_activation!r}")

    rng = np.random.default_rng(seed)
    dims = [in_dim] + [hidden_width] * depth + [out_dim]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(weights, biases, output_activation)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # numerically stable on both tails
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on a (batch, in_dim) array.

    Returns (outputs, cache); the cache feeds mlp_backward.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.in_dim:
        raise ValueError(
            f"expected input of shape (batch, {params.in_dim}), got {x.shape}")

    inputs, preacts = [], []
    a = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ w.T + b
        preacts.append(z)
        if k < last:
            a = np.maximum(z, 0.0)
    if params.output_activation == "sigmoid":
        y = _sigmoid(preacts[-1])
    else:
        y = preacts[-1]
    return y, ForwardCache(inputs, preacts, y)


def mlp_backward(params: MlpParams, cache: ForwardCache,
                 d_output: np.ndarray) -> Gradients:
    """Exact gradients w.r.t. all weights and biases.

    d_output is the derivative of the scalar loss w.r.t. the network
    outputs. The ReLU subgradient at exactly zero is taken as 0.
    """
    if len(cache.inputs) != len(params.weights):
        raise ValueError("cache does not match network depth")
    if cache.inputs[0].shape[1] != params.in_dim:
        raise ValueError("cache was produced for a different network")
    d_output = np.asarray(d_output, dtype=np.float64)
    if d_output.shape != cache.outputs.shape:
        raise ValueError("d_output shape does not match cached outputs")

    if params.output_activation == "sigmoid":
        s = cache.outputs
        delta = d_output * s * (1.0 - s)
    else:
        delta = d_output

    gw: list[np.ndarray | None] = [None] * len(params.weights)
    gb: list[np.ndarray | None] = [None] * len(params.biases)
    for k in range(len(params.weights) - 1, -1, -1):
        gw[k] = delta.T @ cache.inputs[k]
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ params.weights[k]) * (cache.preacts[k - 1] > 0.0)
    return Gradients(gw, gb)  # type: ignore[arg-type]


def adam_step(params: MlpParams, grads: Gradients, state: AdamState) -> None:
    """One Adam update with bias correction, in place.

    Raises TrainingDiverged if any gradient entry is non-finite.
    """
    for g in grads.weights + grads.biases:
        if not np.isfinite(g).all():
            raise TrainingDiverged("non-finite gradient", state.step_count)

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t

    def update(p, g, m, v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)

    for p, g, m, v in zip(params.weights, grads.weights,
                          state.m_weights, state.v_weights):
        update(p, g, m, v)
    for p, g, m, v in zip(params.biases, grads.biases,
                          state.m_biases, state.v_biases):
        update(p, g, m, v)


def per_sample_squared_error(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Squared error of each sample, averaged over output channels."""
    return np.mean((pred - target) ** 2, axis=1)


def mse_output_gradient(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d/d_pred of mean((pred - target)^2) over all batch entries and channels."""
    return (2.0 / pred.size) * (pred - target)


def params_to_bytes(params: MlpParams) -> bytes:
    """Serialize as a JSON shape header plus flat little-endian float64 data."""
    header = {
        "kind": "mlp",
        "output_activation": params.output_activation,
        "shapes": [list(w.shape) for w in params.weights],
    }
    arrays = []
    for w, b in zip(params.weights, params.biases):
        arrays.extend([w, b])
    return binfmt.pack(header, arrays)


def params_from_bytes(blob: bytes) -> MlpParams:
    header, arrays = binfmt.unpack(blob)
    if header.get("kind") != "mlp":
        raise ValueError("not an MLP checkpoint")
    weights, biases = [], []
    it = iter(arrays)
    for shape in header["shapes"]:
        out_d, in_d = shape
        weights.append(next(it).reshape(out_d, in_d))
        biases.append(next(it).reshape(out_d))
    return MlpParams(weights, biases, header["output_activation"])
