"""Ranking metrics for OOD detection and misclassification detection.

Conventions: a sample is predicted positive when its score is at or above
the threshold, and samples sharing a score always move together.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, MetricUndefinedError


@dataclass
class ScoreSet:
    scores: np.ndarray
    is_positive: np.ndarray = None
    correctness: np.ndarray = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64).ravel()
        if self.scores.size < 1:
            raise InputError("score set is empty")
        if self.is_positive is not None:
            self.is_positive = np.asarray(self.is_positive, dtype=bool).ravel()
            if self.is_positive.shape != self.scores.shape:
                raise InputError("is_positive must match scores")
        if self.correctness is not None:
            self.correctness = np.asarray(self.correctness, dtype=bool).ravel()
            if self.correctness.shape != self.scores.shape:
                raise InputError("correctness must match scores")


@dataclass(frozen=True)
class RCPoint:
    coverage: float
    risk: float


def _threshold_counts(scores, flags):
    """Cumulative (flagged, unflagged) counts at each distinct score, descending."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    f = flags[order]
    tp = np.cumsum(f)
    fp = np.cumsum(~f)
    # last index of every tie group
    last = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    return tp[last], fp[last], s[last]


def _both_classes(s):
    if s.is_positive is None:
        raise InputError("is_positive is required")
    n_pos = int(s.is_positive.sum())
    n_neg = s.is_positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("need at least one positive and one negative sample")
    return n_pos, n_neg


def auroc(s):
    """Mann-Whitney AUROC with ties counted as one half."""
    n_pos, n_neg = _both_classes(s)
    scores, pos = s.scores, s.is_positive
    _, inv, counts = np.unique(scores, return_inverse=True, return_counts=True)
    # midranks, 1-based
    ends = np.cumsum(counts)
    midrank = ends - (counts - 1) / 2.0
    ranks = midrank[inv]
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(s):
    """(fpr, tpr) arrays starting at (0, 0), one point per distinct score."""
    n_pos, n_neg = _both_classes(s)
    tp, fp, _ = _threshold_counts(s.scores, s.is_positive)
    return np.r_[0.0, fp / n_neg], np.r_[0.0, tp / n_pos]


def aupr(s):
    """Average precision: sum over thresholds of recall gain times precision."""
    if s.is_positive is None:
        raise InputError("is_positive is required")
    n_pos = int(s.is_positive.sum())
    if n_pos == 0:
        raise MetricUndefinedError("AUPR needs at least one positive sample")
    tp, fp, _ = _threshold_counts(s.scores, s.is_positive)
    precision = tp / (tp + fp)
    recall_gain = np.diff(np.r_[0, tp]) / n_pos
    return float(np.sum(recall_gain * precision))


def fpr_at_tpr(s, tpr_target=0.95):
    if not 0.0 < tpr_target <= 1.0:
        raise InputError("tpr_target must lie in (0, 1]")
    n_pos, n_neg = _both_classes(s)
    tp, fp, _ = _threshold_counts(s.scores, s.is_positive)
    reached = np.nonzero(tp / n_pos >= tpr_target)[0]
    return float(fp[reached[0]] / n_neg)


def risk_coverage(s):
    """Risk-coverage points, one per distinct score threshold (descending)."""
    if s.correctness is None or s.correctness.size == 0:
        raise InputError("correctness is required")
    n = s.scores.size
    ok, err, _ = _threshold_counts(s.scores, s.correctness)
    accepted = ok + err
    return [RCPoint(float(a / n), float(e / a)) for a, e in zip(accepted, err)]


def _per_sample_risk(scores, correct):
    """Risk seen by each accepted position; tied samples share their group's risk."""
    ok, err, _ = _threshold_counts(scores, correct)
    accepted = ok + err
    group_risk = err / accepted
    sizes = np.diff(np.r_[0, accepted])
    return np.repeat(group_risk, sizes)


def aurc_eaurc(s):
    """Discrete AURC and its excess over the hindsight-optimal ordering."""
    if s.correctness is None or s.correctness.size == 0:
        raise InputError("correctness is required")
    n = s.correctness.size
    aurc = float(np.mean(_per_sample_risk(s.scores, s.correctness)))
    n_correct = int(s.correctness.sum())
    k = np.arange(1, n + 1)
    best = np.maximum(k - n_correct, 0) / k
    optimal = float(np.mean(best))
    return aurc, aurc - optimal


def closed_set_accuracy(pred, labels):
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if pred.size == 0:
        raise InputError("no samples")
    return float(np.mean(pred == labels))
