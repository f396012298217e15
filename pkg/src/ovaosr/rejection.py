"""Rejection scores and the three-way accept / OOD / misclassification rule.

Every entry in :data:`RULES` is oriented so that a higher score means
"more in-distribution / more likely correct".
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .posterior import argmax_lowest, dste_combine, sigmoid, softmax_closed

DEFAULT_EPS = 0.05
DEFAULT_DELTA = 0.5

ACCEPT = "accept"
REJECT_OOD = "reject_ood"
REJECT_MIS = "reject_misclassification"


@dataclass(frozen=True)
class Decision:
    verdict: str
    score: float
    label: int = None  # accepted class, set only for ACCEPT


def score_msp(g):
    return np.max(softmax_closed(g), axis=-1)


def score_energy(g):
    """``-log sum_i exp(g_i)``; lower means more in-distribution."""
    g = np.asarray(g, dtype=np.float64)
    m = np.max(g, axis=-1)
    return -(m + np.log(np.sum(np.exp(g - m[..., None]), axis=-1)))


def score_maxlogit(g):
    return np.max(np.asarray(g, dtype=np.float64), axis=-1)


def score_binary_max(g):
    return sigmoid(score_maxlogit(g))


def score_unified(post, eps=DEFAULT_EPS):
    if eps < 0:
        raise ParameterError("eps must be >= 0")
    return np.minimum(1.0 - post.ood, np.max(post.known, axis=-1) + eps)


def unified_selects_known_mass(post, eps=DEFAULT_EPS):
    """True where the unified score takes its ``1 - p_OOD`` branch."""
    return (1.0 - post.ood) < np.max(post.known, axis=-1) + eps


def decide(post, delta=DEFAULT_DELTA, eps=DEFAULT_EPS):
    """Three-way decision for one posterior."""
    if not 0.0 <= delta <= 1.0:
        raise ParameterError("delta must lie in [0, 1]")
    known = np.asarray(post.known, dtype=np.float64)
    top = float(np.max(known))
    score = float(min(1.0 - float(post.ood), top + eps))
    if float(post.ood) >= top:
        return Decision(REJECT_OOD, score)
    if top <= delta:
        return Decision(REJECT_MIS, score)
    return Decision(ACCEPT, score, int(argmax_lowest(known)))


def decide_batch(post, delta=DEFAULT_DELTA):
    """Vectorised :func:`decide` returning verdict strings and predicted classes."""
    top = np.max(post.known, axis=-1)
    verdict = np.where(post.ood >= top, REJECT_OOD,
                       np.where(top <= delta, REJECT_MIS, ACCEPT))
    return verdict, argmax_lowest(post.known)


def _energy_ind(g):
    return -score_energy(g)


# name -> (function of logits, eps) returning an InD-oriented score
RULES = {
    "msp": lambda g, eps: score_msp(g),
    # energy as printed rises for OOD inputs; flip it for the registry
    "energy": lambda g, eps: _energy_ind(g),
    "maxlogit": lambda g, eps: score_maxlogit(g),
    "binary_max": lambda g, eps: score_binary_max(g),
    "unified": lambda g, eps: score_unified(dste_combine(g), eps),
    "known_mass": lambda g, eps: 1.0 - dste_combine(g).ood,
    "max_known": lambda g, eps: np.max(dste_combine(g).known, axis=-1),
}
DEFAULT_RULES = ("msp", "energy", "maxlogit", "binary_max", "unified")


def compute_scores(g, rule, eps=DEFAULT_EPS):
    if rule not in RULES:
        raise ParameterError(f"unknown rule {rule!r}; choose from {sorted(RULES)}")
    return np.asarray(RULES[rule](np.asarray(g, dtype=np.float64), eps), dtype=np.float64)
