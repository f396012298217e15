"""Closed-set softmax, one-vs-all sigmoids and their evidence-theoretic fusion.

All functions accept a single logit vector or a batch (rows = samples).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

PROB_FLOOR = 1e-12
PROB_CEIL = 1.0 - 1e-12


@dataclass
class PosteriorK1:
    """K known-class probabilities plus the OOD probability."""

    known: np.ndarray
    ood: np.ndarray

    def total(self):
        return np.sum(self.known, axis=-1) + self.ood


def _logits(g):
    g = np.asarray(g, dtype=np.float64)
    if g.ndim == 0 or g.shape[-1] < 1:
        raise InputError("need at least one logit")
    if not np.all(np.isfinite(g)):
        raise InputError("logits must be finite")
    return g


def clamp_prob(p):
    return np.clip(p, PROB_FLOOR, PROB_CEIL)


def softmax_closed(g):
    g = _logits(g)
    e = np.exp(g - np.max(g, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def sigmoid(g):
    """Branch-stable logistic function (unclamped)."""
    g = np.asarray(g, dtype=np.float64)
    e = np.exp(-np.abs(g))
    return np.where(g >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid_ova(g):
    """Per-class binary probabilities, clamped into ``[1e-12, 1 - 1e-12]``."""
    return clamp_prob(sigmoid(_logits(g)))


def dste_combine(g):
    """Fused (K+1)-class posterior from one-vs-all logits (closed form).

    The implicit OOD logit 0 takes part in the max-shift.
    """
    g = _logits(g)
    m = np.maximum(np.max(g, axis=-1, keepdims=True), 0.0)
    e = np.exp(g - m)
    e_ood = np.exp(-m)
    denom = e_ood + np.sum(e, axis=-1, keepdims=True)
    return PosteriorK1(e / denom, (e_ood / denom)[..., 0])


def dste_combine_oracle(binary):
    """Literal product-form evidence combination of binary probabilities.

    Used as an independent check on :func:`dste_combine`; no algebraic
    simplification is applied.
    """
    pb = np.asarray(binary, dtype=np.float64)
    if pb.ndim == 0 or pb.shape[-1] < 1:
        raise InputError("need at least one probability")
    if np.any(pb <= 0.0) or np.any(pb >= 1.0) or not np.all(np.isfinite(pb)):
        raise DomainError("binary probabilities must lie strictly inside (0, 1)")
    if pb.ndim == 1:
        known, ood = _oracle_one(pb)
        return PosteriorK1(known, ood)
    flat = pb.reshape(-1, pb.shape[-1])
    out = [_oracle_one(row) for row in flat]
    known = np.array([o[0] for o in out]).reshape(pb.shape)
    ood = np.array([o[1] for o in out]).reshape(pb.shape[:-1])
    return PosteriorK1(known, ood)


def _oracle_one(pb):
    k = len(pb)
    evidence = np.empty(k)
    for i in range(k):
        prod = pb[i]
        for j in range(k):
            if j != i:
                prod *= 1.0 - pb[j]
        evidence[i] = prod
    none = 1.0
    for j in range(k):
        none *= 1.0 - pb[j]
    A = evidence.sum() + none
    return evidence / A, none / A


def argmax_lowest(values):
    """Argmax along the last axis; ties go to the lowest index."""
    return np.argmax(np.asarray(values), axis=-1)
