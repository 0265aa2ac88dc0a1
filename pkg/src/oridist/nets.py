"""Small feedforward networks with hand-derived gradients.

Nothing here is clever: dense layers, ReLU hidden units, a configurable
output activation, optional inverted dropout, and Adam.  Gradients are
exact reverse-mode and are checked against finite differences in the test
suite.
"""
import base64
import json

import numpy as np

_ACTIVATIONS = {
    "linear": (lambda x: x, lambda x, y: np.ones_like(y)),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0).astype(float)),
    "sigmoid": (lambda x: 1.0 / (1.0 + np.exp(-x)), lambda x, y: y * (1.0 - y)),
    "softplus": (lambda x: np.logaddexp(0.0, x), lambda x, y: 1.0 / (1.0 + np.exp(-x))),
}


class Mlp:
    """Dense feedforward network.

    Parameters
    ----------
    widths : sequence of int
        Layer sizes including input and output, e.g. ``(9, 256, 256, 1)``.
    output_activation : str
        One of linear, relu, sigmoid, softplus.
    dropout : sequence of float or None
        Per-layer input dropout rates (length ``len(widths) - 1``); applied
        only when masks are supplied to :meth:`forward`.
    rng : numpy.random.Generator
        Source for the (He-scaled) weight initialization.
    """

    def __init__(self, widths, output_activation="sigmoid", dropout=None,
                 rng=None):
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if output_activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {output_activation!r}")
        self.widths = [int(w) for w in widths]
        self.output_activation = output_activation
        n_layers = len(widths) - 1
        self.dropout = list(dropout) if dropout is not None else [0.0] * n_layers
        if len(self.dropout) != n_layers:
            raise ValueError("one dropout rate per layer required")
        rng = rng or np.random.default_rng(0)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_layers(self):
        return len(self.weights)

    def _activation(self, layer):
        return self.output_activation if layer == self.n_layers - 1 else "relu"

    def make_dropout_masks(self, batch, rng):
        """Inverted-dropout masks for one stochastic forward pass."""
        masks = []
        for layer, rate in enumerate(self.dropout):
            if rate > 0.0:
                keep = rng.uniform(size=(batch, self.widths[layer])) >= rate
                masks.append(keep / (1.0 - rate))
            else:
                masks.append(None)
        return masks

    def forward(self, x, dropout_masks=None):
        out, _ = self.forward_cached(x, dropout_masks)
        return out

    def forward_cached(self, x, dropout_masks=None):
        """Forward pass returning ``(output, cache)`` for backprop."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.widths[0]:
            raise ValueError(f"input width {x.shape[1]} != {self.widths[0]}")
        cache = {"inputs": [], "pre": [], "post": [], "masks": dropout_masks}
        h = x
        for layer in range(self.n_layers):
            if dropout_masks is not None and dropout_masks[layer] is not None:
                h = h * dropout_masks[layer]
            cache["inputs"].append(h)
            z = h @ self.weights[layer] + self.biases[layer]
            act, _ = _ACTIVATIONS[self._activation(layer)]
            h = act(z)
            cache["pre"].append(z)
            cache["post"].append(h)
        return h, cache

    def backward(self, cache, grad_out):
        """Gradients of a scalar loss given ``d loss / d output``.

        Returns ``(weight_grads, bias_grads)`` aligned with the layers.
        """
        grad_w = [None] * self.n_layers
        grad_b = [None] * self.n_layers
        delta = np.atleast_2d(np.asarray(grad_out, dtype=float))
        masks = cache["masks"]
        for layer in range(self.n_layers - 1, -1, -1):
            _, deriv = _ACTIVATIONS[self._activation(layer)]
            delta = delta * deriv(cache["pre"][layer], cache["post"][layer])
            grad_w[layer] = cache["inputs"][layer].T @ delta
            grad_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = delta @ self.weights[layer].T
                if masks is not None and masks[layer] is not None:
                    delta = delta * masks[layer]
        return grad_w, grad_b

    def parameters(self):
        return self.weights + self.biases

    def to_payload(self):
        """JSON-safe dict: layer shapes plus base64 little-endian float64."""
        return {
            "widths": self.widths,
            "output_activation": self.output_activation,
            "dropout": self.dropout,
            "arrays": [_encode(a) for a in self.parameters()],
        }

    @classmethod
    def from_payload(cls, payload):
        net = cls(payload["widths"], payload["output_activation"],
                  payload["dropout"])
        arrays = [_decode(a) for a in payload["arrays"]]
        n = net.n_layers
        for i in range(n):
            net.weights[i] = arrays[i].reshape(net.weights[i].shape)
            net.biases[i] = arrays[n + i].reshape(net.biases[i].shape)
        return net


def _encode(a):
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode()


def _decode(s):
    return np.frombuffer(base64.b64decode(s), dtype="<f8").copy()


class Adam:
    """Adam optimizer over a list of parameter arrays (updated in place)."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
