"""Prototype classifier over a small ReLU MLP, plus an optional linear head.

Layer weights are stored ``(fan_in, fan_out)`` so a batch ``X`` maps to
``X @ W + b``. Prototype logits are ``g_i = -xi * (||f - mu_i||^2 - tau_i)``.
"""

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InitializationError, InputError, ParameterError
from .rng import Xoshiro256

THRESHOLD_MODES = ("constant_shared", "learnable_shared", "learnable_per_class")
SHARED_MODES = ("constant_shared", "learnable_shared")


@dataclass
class ModelParams:
    weights: list
    biases: list
    prototypes: np.ndarray
    thresholds: np.ndarray
    temperature: float
    threshold_mode: str = "learnable_per_class"
    head_weight: np.ndarray = None
    head_bias: np.ndarray = None

    def __post_init__(self):
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ConfigurationError(f"unknown threshold_mode {self.threshold_mode!r}")
        if not self.temperature > 0:
            raise ConfigurationError("temperature must be > 0")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigurationError("need one bias per layer and at least one layer")
        if self.prototypes.shape[0] != self.thresholds.shape[0]:
            raise ConfigurationError("prototype and threshold counts differ")
        if self.prototypes.shape[1] != self.weights[-1].shape[1]:
            raise ConfigurationError("prototype dimension differs from feature dimension")
        if (self.head_weight is None) != (self.head_bias is None):
            raise ConfigurationError("linear head needs both weight and bias")

    @property
    def num_classes(self):
        return self.prototypes.shape[0]

    @property
    def dim_in(self):
        return self.weights[0].shape[0]

    @property
    def feat_dim(self):
        return self.prototypes.shape[1]

    @property
    def has_linear_head(self):
        return self.head_weight is not None

    def copy(self):
        return copy.deepcopy(self)

    def to_dict(self):
        doc = {
            "dim_in": self.dim_in,
            "hidden_sizes": [w.shape[1] for w in self.weights[:-1]],
            "feat_dim": self.feat_dim,
            "num_classes": self.num_classes,
            "threshold_mode": self.threshold_mode,
            "temperature": self.temperature,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "prototypes": self.prototypes.ravel().tolist(),
            "thresholds": self.thresholds.tolist(),
            "head_weight": None if self.head_weight is None else self.head_weight.ravel().tolist(),
            "head_bias": None if self.head_bias is None else self.head_bias.tolist(),
        }
        return doc

    @classmethod
    def from_dict(cls, doc):
        sizes = [doc["dim_in"], *doc["hidden_sizes"], doc["feat_dim"]]
        k, m = doc["num_classes"], doc["feat_dim"]
        weights = [np.array(w, dtype=np.float64).reshape(sizes[i], sizes[i + 1])
                   for i, w in enumerate(doc["weights"])]
        head_w = doc.get("head_weight")
        return cls(
            weights=weights,
            biases=[np.array(b, dtype=np.float64) for b in doc["biases"]],
            prototypes=np.array(doc["prototypes"], dtype=np.float64).reshape(k, m),
            thresholds=np.array(doc["thresholds"], dtype=np.float64),
            temperature=float(doc["temperature"]),
            threshold_mode=doc["threshold_mode"],
            head_weight=None if head_w is None else np.array(head_w, dtype=np.float64).reshape(k, m),
            head_bias=None if head_w is None else np.array(doc["head_bias"], dtype=np.float64),
        )


def save_checkpoint(params, path):
    # json writes floats with repr(), which round-trips float64 exactly
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params.to_dict(), fh, indent=1)
        fh.write("\n")


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        return ModelParams.from_dict(json.load(fh))


@dataclass
class ForwardTrace:
    """Intermediates of one forward pass (rows = samples)."""

    activations: list  # input, then each hidden activation
    pre_activations: list  # one per layer; the last one is the feature
    features: np.ndarray = None
    sq_distances: np.ndarray = None
    logits: np.ndarray = None
    extra: dict = field(default_factory=dict)


def _gaussian_layers(rng, sizes):
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        std = math.sqrt(2.0 / fan_in)
        weights.append(std * rng.normals((fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def init_params(dim_in, hidden_sizes, feat_dim, num_classes, xi, mode, warmup, seed,
                linear_head=False):
    """He-initialised MLP with prototypes warm-started from ``warmup``.

    Prototypes are per-class feature means under the fresh extractor and each
    threshold is the class's mean squared distance to its prototype (shared
    modes take the mean over classes).
    """
    if feat_dim < 1 or dim_in < 1 or num_classes < 1:
        raise ParameterError("dim_in, feat_dim and num_classes must be >= 1")
    if mode not in THRESHOLD_MODES:
        raise ParameterError(f"unknown threshold mode {mode!r}")
    if not xi > 0:
        raise ParameterError("xi must be > 0")
    if warmup.dim != dim_in:
        raise InitializationError(f"warmup has dim {warmup.dim}, expected {dim_in}")
    rng = Xoshiro256(seed)
    sizes = [dim_in, *hidden_sizes, feat_dim]
    weights, biases = _gaussian_layers(rng, sizes)
    head_w = head_b = None
    if linear_head:
        head_w = math.sqrt(2.0 / feat_dim) * rng.normals((num_classes, feat_dim))
        head_b = np.zeros(num_classes)

    feats = mlp_forward(weights, biases, warmup.features)[0]
    prototypes = np.zeros((num_classes, feat_dim))
    thresholds = np.zeros(num_classes)
    for k in range(num_classes):
        rows = feats[warmup.labels == k]
        if rows.shape[0] == 0:
            raise InitializationError(f"warmup contains no sample of class {k}")
        prototypes[k] = rows.mean(axis=0)
        thresholds[k] = np.mean(np.sum((rows - prototypes[k]) ** 2, axis=1))
    if mode in SHARED_MODES:
        thresholds[:] = thresholds.mean()
    return ModelParams(weights, biases, prototypes, thresholds, float(xi), mode, head_w, head_b)


def mlp_forward(weights, biases, X):
    """Returns ``(features, activations, pre_activations)`` for a batch."""
    acts = [X]
    pres = []
    h = X
    last = len(weights) - 1
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        pres.append(z)
        if i < last:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            h = z
    return h, acts, pres


def forward_batch(p, X):
    """Feature extraction and prototype logits for a batch, with trace."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != p.dim_in:
        raise InputError(f"expected inputs of shape (n, {p.dim_in}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("inputs must be finite")
    f, acts, pres = mlp_forward(p.weights, p.biases, X)
    sq = squared_distances(f, p.prototypes)
    logits = -p.temperature * (sq - p.thresholds)
    return ForwardTrace(acts, pres, f, sq, logits)


def squared_distances(F, prototypes):
    diff = F[:, None, :] - prototypes[None, :, :]
    return np.einsum("nkm,nkm->nk", diff, diff)


def extract_features(p, x):
    """Single-sample forward pass: ``(feature vector, ForwardTrace)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.dim_in,):
        raise InputError(f"expected {p.dim_in} inputs, got shape {x.shape}")
    trace = forward_batch(p, x[None, :])
    return trace.features[0], trace


def discriminant_cpn(p, f):
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != p.feat_dim:
        raise InputError(f"feature must have {p.feat_dim} entries")
    diff = f[..., None, :] - p.prototypes
    sq = np.sum(diff * diff, axis=-1)
    return -p.temperature * (sq - p.thresholds)


def discriminant_linear(p, f):
    if not p.has_linear_head:
        raise ConfigurationError("model has no linear head")
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != p.feat_dim:
        raise InputError(f"feature must have {p.feat_dim} entries")
    return f @ p.head_weight.T + p.head_bias


def logits_batch(p, X, head=None):
    """Logits for every row of ``X``.

    ``head=None`` picks the linear head when the model has one (CE baseline)
    and the prototype head otherwise.
    """
    trace = forward_batch(p, X)
    if head is None:
        head = "linear" if p.has_linear_head else "cpn"
    if head == "linear":
        return discriminant_linear(p, trace.features)
    return trace.logits
