"""Model evaluation, score dumps and curve export.

``evaluate`` first builds a :class:`ScoreTable` and then derives every
reported number from it, so ``metrics.json`` can always be recomputed from
``scores.csv``.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import metrics as M
from .data import OOD_LABEL
from .errors import FormatError, InputError, MetricUndefinedError
from .model import logits_batch
from .posterior import argmax_lowest
from .rejection import DEFAULT_DELTA, DEFAULT_EPS, DEFAULT_RULES, compute_scores

SCORE_HEADER = ["sample_index", "true_label", "pred_label", "score_rule", "score_value"]


@dataclass
class ScoreTable:
    true_label: np.ndarray
    pred_label: np.ndarray
    scores: dict  # rule -> array aligned with the labels

    @property
    def is_ood(self):
        return self.true_label == OOD_LABEL


def score_table(p, ind_test, ood_test, rules=DEFAULT_RULES, eps=DEFAULT_EPS, head=None):
    if len(ind_test) == 0 or len(ood_test) == 0:
        raise InputError("evaluation sets must be non-empty")
    if np.any(ind_test.labels == OOD_LABEL):
        raise InputError("in-distribution test set contains OOD labels")
    if np.any(ood_test.labels != OOD_LABEL):
        raise InputError("OOD test set must be labelled -1")
    X = np.vstack([ind_test.features, ood_test.features])
    g = logits_batch(p, X, head)
    labels = np.r_[ind_test.labels, ood_test.labels]
    return ScoreTable(labels, argmax_lowest(g), {r: compute_scores(g, r, eps) for r in rules})


def _safe(fn, *args):
    try:
        return fn(*args)
    except MetricUndefinedError:
        return None


def metrics_from_table(table):
    ind = ~table.is_ood
    correct = table.pred_label[ind] == table.true_label[ind]
    per_rule = {}
    for rule, s in table.scores.items():
        # OOD task: AUROC/AUPR with InD positive, FPR95 with OOD positive
        ood_ind_pos = M.ScoreSet(s, is_positive=ind)
        ood_ood_pos = M.ScoreSet(-s, is_positive=~ind)
        s_ind = s[ind]
        misd_auc = M.ScoreSet(s_ind, is_positive=correct)
        misd_fpr = M.ScoreSet(-s_ind, is_positive=~correct)
        aurc, eaurc = M.aurc_eaurc(M.ScoreSet(s_ind, correctness=correct))
        per_rule[rule] = {
            "ood": {
                "auroc": _safe(M.auroc, ood_ind_pos),
                "aupr": _safe(M.aupr, ood_ind_pos),
                "fpr95": _safe(M.fpr_at_tpr, ood_ood_pos, 0.95),
            },
            "misd": {
                "auroc": _safe(M.auroc, misd_auc),
                "fpr95": _safe(M.fpr_at_tpr, misd_fpr, 0.95),
                "aurc": aurc,
                "e_aurc": eaurc,
                "aurc_x1000": aurc * 1e3,
                "e_aurc_x1000": eaurc * 1e3,
            },
        }
    return {"accuracy": M.closed_set_accuracy(table.pred_label[ind], table.true_label[ind]),
            "per_rule": per_rule}


def evaluate(p, ind_test, ood_test, rules=DEFAULT_RULES, eps=DEFAULT_EPS,
             delta=DEFAULT_DELTA, head=None):
    """Metrics report plus the score table it was computed from."""
    table = score_table(p, ind_test, ood_test, rules, eps, head)
    report = metrics_from_table(table)
    report["metadata"] = {"eps": eps, "delta": delta, "rules": list(rules),
                          "n_ind": int(len(ind_test)), "n_ood": int(len(ood_test))}
    return report, table


def write_scores(table, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCORE_HEADER)
        for i in range(table.true_label.size):
            for rule, s in table.scores.items():
                w.writerow([i, int(table.true_label[i]), int(table.pred_label[i]), rule,
                            format(float(s[i]), ".17g")])


def read_scores(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCORE_HEADER:
            raise FormatError(f"malformed header {header!r}", line=1)
        labels, preds, scores = {}, {}, {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise FormatError(f"expected 5 cells, found {len(row)}", line=lineno)
            try:
                i, y, pr, v = int(row[0]), int(row[1]), int(row[2]), float(row[4])
            except ValueError:
                raise FormatError(f"bad cell in {row!r}", line=lineno) from None
            labels[i] = y
            preds[i] = pr
            scores.setdefault(row[3], {})[i] = v
    if not labels:
        raise FormatError("no samples")
    idx = sorted(labels)
    if idx != list(range(len(idx))):
        raise FormatError("sample indices are not contiguous from 0")
    table = {r: np.array([vals[i] for i in idx]) for r, vals in scores.items()}
    return ScoreTable(np.array([labels[i] for i in idx]), np.array([preds[i] for i in idx]), table)


def write_curves(table, roc_path, rc_path):
    """ROC (OOD task, InD positive) and risk-coverage (InD only) points per rule."""
    ind = ~table.is_ood
    correct = table.pred_label[ind] == table.true_label[ind]
    with open(roc_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rule", "fpr", "tpr"])
        for rule, s in table.scores.items():
            fpr, tpr = M.roc_curve(M.ScoreSet(s, is_positive=ind))
            for a, b in zip(fpr, tpr):
                w.writerow([rule, format(a, ".17g"), format(b, ".17g")])
    with open(rc_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rule", "coverage", "risk"])
        for rule, s in table.scores.items():
            for pt in M.risk_coverage(M.ScoreSet(s[ind], correctness=correct)):
                w.writerow([rule, format(pt.coverage, ".17g"), format(pt.risk, ".17g")])


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
