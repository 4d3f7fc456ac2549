"""Small fully connected networks: tanh hidden layers, identity output."""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from .tape import Tape, Var, affine, tanh


class Mlp:
    """Feed-forward net defined by layer widths, e.g. [50, 32, 16, 8, 4].

    Weights are (out, in) matrices; tanh is applied after every layer except
    the last. Parameters are plain float64 arrays owned by the instance.
    """

    def __init__(self, layer_dims, weights, biases):
        layer_dims = [int(d) for d in layer_dims]
        if len(weights) != len(layer_dims) - 1 or len(biases) != len(weights):
            raise InputError("Mlp: parameter count does not match layer_dims")
        for i, (w, b) in enumerate(zip(weights, biases)):
            want = (layer_dims[i + 1], layer_dims[i])
            if w.shape != want or b.shape != (layer_dims[i + 1],):
                raise InputError(f"Mlp: layer {i} shapes {w.shape}/{b.shape}, expected {want}")
        self.layer_dims = layer_dims
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @classmethod
    def init(cls, layer_dims, rng: np.random.Generator) -> "Mlp":
        """Glorot-uniform weights, zero biases."""
        weights, biases = [], []
        for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = np.sqrt(6.0 / (d_in + d_out))
            weights.append(rng.uniform(-bound, bound, size=(d_out, d_in)))
            biases.append(np.zeros(d_out))
        return cls(layer_dims, weights, biases)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def infer(self, x: np.ndarray) -> np.ndarray:
        """Forward pass without tape recording."""
        h = np.asarray(x, dtype=np.float64)
        if h.shape[-1] != self.layer_dims[0]:
            raise InputError(
                f"Mlp input width {h.shape[-1]} != layer 0 width {self.layer_dims[0]}"
            )
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if i < self.n_layers - 1:
                h = np.tanh(h)
        return h

    def param_dict(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {}
        for i in range(self.n_layers):
            out[f"{prefix}w{i}"] = self.weights[i]
            out[f"{prefix}b{i}"] = self.biases[i]
        return out

    def load_param_dict(self, params: dict[str, np.ndarray], prefix: str = "") -> None:
        for i in range(self.n_layers):
            self.weights[i] = np.asarray(params[f"{prefix}w{i}"], dtype=np.float64)
            self.biases[i] = np.asarray(params[f"{prefix}b{i}"], dtype=np.float64)


def forward_mlp(net: Mlp, x, tape: Tape, prefix: str = "mlp.") -> Var:
    """Record the forward pass of `net` on the tape; returns the output Var.

    `x` may be an ndarray (treated as a constant input) or an existing Var,
    letting networks chain on one tape. Parameters register as leaves named
    ``{prefix}w{i}`` / ``{prefix}b{i}``.
    """
    h = x if isinstance(x, Var) else tape.constant(np.atleast_2d(x))
    if h.value.shape[-1] != net.layer_dims[0]:
        raise InputError(
            f"forward_mlp: input width {h.value.shape[-1]} != layer 0 width {net.layer_dims[0]}"
        )
    for i in range(net.n_layers):
        w = tape.leaf(net.weights[i], f"{prefix}w{i}")
        b = tape.leaf(net.biases[i], f"{prefix}b{i}")
        h = affine(h, w, b)
        if i < net.n_layers - 1:
            h = tanh(h)
    return h
