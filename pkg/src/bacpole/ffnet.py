"""One-hidden-layer Gaussian network with backprop to weights and inputs.

Hidden units apply g(a) = exp(-a**2), the width being absorbed into the
incoming weights; the output layer is linear.  Every gradient routine is
phrased against the scalar objective ``e . y`` formed by dotting an
output-error vector ``e`` into the network output ``y``, so a single
backward pass yields the weight gradient, the input gradient, and the
hidden-unit deltas.  With ``e = [1]`` on a scalar-output network this is
literally the gradient of the network output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericFault

WEIGHT_FIELDS = ("hidden_weights", "hidden_bias", "output_weights", "output_bias")


@dataclass(frozen=True)
class NetworkConfig:
    n_in: int
    n_hidden: int = 7
    n_out: int = 1

    def __post_init__(self):
        for name in ("n_in", "n_hidden", "n_out"):
            value = getattr(self, name)
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")


@dataclass
class NetworkWeights:
    """Parameters of one network; also the shape of its gradients."""

    hidden_weights: np.ndarray  # (n_hidden, n_in)
    hidden_bias: np.ndarray  # (n_hidden,)
    output_weights: np.ndarray  # (n_out, n_hidden)
    output_bias: np.ndarray  # (n_out,)

    @property
    def n_in(self) -> int:
        return self.hidden_weights.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.hidden_weights.shape[0]

    @property
    def n_out(self) -> int:
        return self.output_weights.shape[0]

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(*(getattr(self, f).copy() for f in WEIGHT_FIELDS))

    def zeros_like(self) -> "NetworkWeights":
        return NetworkWeights(*(np.zeros_like(getattr(self, f)) for f in WEIGHT_FIELDS))

    def scaled(self, factor: float) -> "NetworkWeights":
        return NetworkWeights(*(factor * getattr(self, f) for f in WEIGHT_FIELDS))

    def as_vector(self) -> np.ndarray:
        """All parameters flattened in field order (for checks and probes)."""
        return np.concatenate([getattr(self, f).ravel() for f in WEIGHT_FIELDS])

    def set_vector(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.as_vector().size,):
            raise ConfigError("parameter vector has wrong length")
        offset = 0
        for f in WEIGHT_FIELDS:
            arr = getattr(self, f)
            arr[...] = vec[offset : offset + arr.size].reshape(arr.shape)
            offset += arr.size

    def allfinite(self) -> bool:
        return all(np.isfinite(getattr(self, f)).all() for f in WEIGHT_FIELDS)


def zero_weights(config: NetworkConfig) -> NetworkWeights:
    return NetworkWeights(
        hidden_weights=np.zeros((config.n_hidden, config.n_in)),
        hidden_bias=np.zeros(config.n_hidden),
        output_weights=np.zeros((config.n_out, config.n_hidden)),
        output_bias=np.zeros(config.n_out),
    )


def init_weights(config: NetworkConfig, rng: np.random.Generator, scale: float = 0.3) -> NetworkWeights:
    """Uniform init in [-scale, scale]; keeps hidden nets near the Gaussian peak."""
    return NetworkWeights(
        hidden_weights=rng.uniform(-scale, scale, (config.n_hidden, config.n_in)),
        hidden_bias=rng.uniform(-scale, scale, config.n_hidden),
        output_weights=rng.uniform(-scale, scale, (config.n_out, config.n_hidden)),
        output_bias=rng.uniform(-scale, scale, config.n_out),
    )


@dataclass
class ForwardCache:
    """Activities of one forward pass, kept for the backward pass."""

    input: np.ndarray
    hidden_net: np.ndarray  # pre-activation
    hidden_act: np.ndarray  # exp(-net**2), in (0, 1]
    output: np.ndarray


def forward(weights: NetworkWeights, input: np.ndarray) -> ForwardCache:
    x = np.asarray(input, dtype=float)
    if x.shape != (weights.n_in,):
        raise ConfigError(f"input has shape {x.shape}, expected ({weights.n_in},)")
    net = weights.hidden_weights @ x + weights.hidden_bias
    act = np.exp(-net * net)
    out = weights.output_weights @ act + weights.output_bias
    return ForwardCache(input=x, hidden_net=net, hidden_act=act, output=out)


@dataclass
class BackpropGrads:
    """Gradients of the scalar objective e . output."""

    weights: NetworkWeights
    input: np.ndarray
    hidden_delta: np.ndarray  # delta at each hidden unit, Rumelhart convention


def backprop(weights: NetworkWeights, cache: ForwardCache, output_error: np.ndarray) -> BackpropGrads:
    e = np.asarray(output_error, dtype=float)
    if e.shape != (weights.n_out,):
        raise ConfigError(f"output_error has shape {e.shape}, expected ({weights.n_out},)")
    # d g / d net = -2 net exp(-net^2)
    upstream = weights.output_weights.T @ e
    hidden_delta = upstream * (-2.0 * cache.hidden_net * cache.hidden_act)
    grads = NetworkWeights(
        hidden_weights=np.outer(hidden_delta, cache.input),
        hidden_bias=hidden_delta.copy(),
        output_weights=np.outer(e, cache.hidden_act),
        output_bias=e.copy(),
    )
    input_grad = weights.hidden_weights.T @ hidden_delta
    return BackpropGrads(weights=grads, input=input_grad, hidden_delta=hidden_delta)


def backprop_weight_grad(weights: NetworkWeights, cache: ForwardCache, output_error) -> NetworkWeights:
    return backprop(weights, cache, output_error).weights


def backprop_input_grad(weights: NetworkWeights, cache: ForwardCache, output_error) -> np.ndarray:
    return backprop(weights, cache, output_error).input


@dataclass
class TrainingHyper:
    """Learning rate plus a momentum accumulator shaped like the weights."""

    learning_rate: float
    momentum_coeff: float = 0.0
    velocity: NetworkWeights | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum_coeff < 1.0:
            raise ConfigError(f"momentum_coeff must be in [0, 1), got {self.momentum_coeff}")


def apply_update(weights: NetworkWeights, grad: NetworkWeights, hyper: TrainingHyper, sign: float = 1.0) -> None:
    """In-place step: velocity <- m*velocity + sign*lr*grad; weights += velocity."""
    if not grad.allfinite():
        raise NumericFault("non-finite gradient in weight update")
    if hyper.velocity is None:
        hyper.velocity = weights.zeros_like()
    for f in WEIGHT_FIELDS:
        v = getattr(hyper.velocity, f)
        v *= hyper.momentum_coeff
        v += sign * hyper.learning_rate * getattr(grad, f)
        getattr(weights, f)[...] += v
