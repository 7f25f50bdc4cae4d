"""Desk-scale differentiable reference models with hand-derived gradients.

Samples carry their numeric payload as text: ``query`` is a JSON array of
features and ``answer`` is a JSON number (regression target or 0/1 label).
Three reference models are provided so gradient-based scoring can be
verified end to end without any deep-learning dependency:

* linear regression with squared-error loss,
* logistic regression with binary cross-entropy,
* a one-hidden-layer tanh network with squared-error loss.

Each model may carry an optional boolean parameter mask restricting
gradients to a subspace; masked-out coordinates get zero gradient.
"""

from __future__ import annotations

import json

import numpy as np

from .data import Sample

__all__ = [
    "ReferenceModel",
    "LinearModel",
    "LogisticModel",
    "TanhNetModel",
    "MODEL_REGISTRY",
    "make_model",
    "encode_sample",
    "decode_sample",
    "gradient_check",
]


def encode_sample(sample_id: str, x, y) -> Sample:
    """Pack a feature vector / target pair into a text sample."""
    return Sample(
        id=sample_id,
        query=json.dumps([float(v) for v in np.asarray(x).ravel()]),
        answer=json.dumps(float(y)),
    )


def decode_sample(sample: Sample) -> tuple[np.ndarray, float]:
    x = np.asarray(json.loads(sample.query), dtype=float)
    y = float(json.loads(sample.answer))
    return x, y


class ReferenceModel:
    """Base class: scalar loss plus analytic gradient over a flat parameter vector."""

    param_dim: int

    def __init__(self, param_dim: int, mask=None):
        self.param_dim = int(param_dim)
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != (self.param_dim,):
                raise ValueError("mask shape must match param_dim")
        self.mask = mask

    def loss(self, params: np.ndarray, sample: Sample) -> float:
        raise NotImplementedError

    def _raw_gradient(self, params: np.ndarray, sample: Sample) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, params: np.ndarray, sample: Sample) -> np.ndarray:
        g = self._raw_gradient(np.asarray(params, dtype=float), sample)
        if self.mask is not None:
            g = np.where(self.mask, g, 0.0)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for sample {sample.id!r}")
        return g

    def init_params(self, seed: int | None = None, scale: float = 0.0) -> np.ndarray:
        if scale == 0.0 or seed is None:
            return np.zeros(self.param_dim)
        rng = np.random.default_rng(seed)
        return scale * rng.standard_normal(self.param_dim)

    def _check_params(self, params: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.param_dim,):
            raise ValueError(
                f"expected parameter vector of dim {self.param_dim}, got shape {params.shape}"
            )
        return params


class LinearModel(ReferenceModel):
    """f(x) = w.x with squared-error loss (w.x - y)^2 / 2."""

    def __init__(self, feature_dim: int, mask=None):
        super().__init__(feature_dim, mask=mask)

    def loss(self, params, sample):
        params = self._check_params(params)
        x, y = decode_sample(sample)
        r = float(params @ x) - y
        return 0.5 * r * r

    def _raw_gradient(self, params, sample):
        params = self._check_params(params)
        x, y = decode_sample(sample)
        return (float(params @ x) - y) * x


def _sigmoid(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + np.exp(-t))
    e = np.exp(t)
    return e / (1.0 + e)


def _softplus(t: float) -> float:
    # log(1 + exp(t)), overflow-safe
    return float(np.logaddexp(0.0, t))


class LogisticModel(ReferenceModel):
    """p = sigmoid(w.x) with binary cross-entropy on labels in {0, 1}."""

    def __init__(self, feature_dim: int, mask=None):
        super().__init__(feature_dim, mask=mask)

    def loss(self, params, sample):
        params = self._check_params(params)
        x, y = decode_sample(sample)
        s = float(params @ x)
        return _softplus(s) - y * s

    def _raw_gradient(self, params, sample):
        params = self._check_params(params)
        x, y = decode_sample(sample)
        return (_sigmoid(float(params @ x)) - y) * x


class TanhNetModel(ReferenceModel):
    """One-hidden-layer tanh network, scalar output, squared-error loss.

    Flat parameter layout: [W1 (hidden*dim), b1 (hidden), w2 (hidden), b2 (1)].
    """

    def __init__(self, feature_dim: int, hidden: int = 8, mask=None):
        self.feature_dim = int(feature_dim)
        self.hidden = int(hidden)
        super().__init__(hidden * feature_dim + 2 * hidden + 1, mask=mask)

    def _unpack(self, params):
        d, h = self.feature_dim, self.hidden
        W1 = params[: h * d].reshape(h, d)
        b1 = params[h * d : h * d + h]
        w2 = params[h * d + h : h * d + 2 * h]
        b2 = params[-1]
        return W1, b1, w2, b2

    def _forward(self, params, x):
        W1, b1, w2, b2 = self._unpack(params)
        a = np.tanh(W1 @ x + b1)
        return float(w2 @ a + b2), a

    def loss(self, params, sample):
        params = self._check_params(params)
        x, y = decode_sample(sample)
        f, _ = self._forward(params, x)
        return 0.5 * (f - y) ** 2

    def _raw_gradient(self, params, sample):
        params = self._check_params(params)
        x, y = decode_sample(sample)
        W1, b1, w2, b2 = self._unpack(params)
        a = np.tanh(W1 @ x + b1)
        f = float(w2 @ a + b2)
        r = f - y
        # d loss / d f = r; backprop through the single hidden layer
        g_w2 = r * a
        g_b2 = r
        da = r * w2 * (1.0 - a * a)
        g_W1 = np.outer(da, x)
        g_b1 = da
        return np.concatenate([g_W1.ravel(), g_b1, g_w2, [g_b2]])

    def init_params(self, seed: int | None = None, scale: float = 0.5):
        rng = np.random.default_rng(seed if seed is not None else 0)
        return scale * rng.standard_normal(self.param_dim)


MODEL_REGISTRY = {
    "linear": LinearModel,
    "logistic": LogisticModel,
    "mlp": TanhNetModel,
}


def make_model(name: str, feature_dim: int, **kwargs) -> ReferenceModel:
    try:
        cls = MODEL_REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; choose from {sorted(MODEL_REGISTRY)}"
        ) from None
    return cls(feature_dim, **kwargs)


def gradient_check(
    model: ReferenceModel,
    params: np.ndarray,
    sample: Sample,
    h: float = 1e-5,
) -> float:
    """Max per-coordinate relative error of the analytic gradient vs central differences."""
    if h <= 0:
        raise ValueError("step size h must be positive")
    params = np.asarray(params, dtype=float)
    analytic = model.gradient(params, sample)
    worst = 0.0
    eps = 1e-12
    for i in range(params.size):
        step = np.zeros_like(params)
        step[i] = h
        lo = model.loss(params - step, sample)
        hi = model.loss(params + step, sample)
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise FloatingPointError(f"non-finite loss at perturbed coordinate {i}")
        central = (hi - lo) / (2.0 * h)
        if model.mask is not None and not model.mask[i]:
            central = 0.0
        err = abs(analytic[i] - central) / (abs(analytic[i]) + abs(central) + eps)
        worst = max(worst, err)
    return worst
