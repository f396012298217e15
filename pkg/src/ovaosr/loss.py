"""Training losses, their batch gradients, and a finite-difference checker.

Objectives:

* ``hybrid``: ``beta * L_ova + (1 - beta) * L_reg + lam * L_pl``
* ``ova``:    ``L_ova + lam * L_pl``
* ``dce``:    ``L_dce + lam * L_pl`` (distance softmax, thresholds unused)
* ``ce``:     closed-softmax cross-entropy of the linear head, ``+ lam * L_pl``

Batch losses and gradients are arithmetic means over samples. The training
path evaluates every loss from logits with softplus / log-sum-exp, so the
analytic gradients are exact even where a probability would hit the clamp.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LabelError, ParameterError
from .model import SHARED_MODES, forward_batch
from .posterior import clamp_prob, dste_combine, sigmoid, softmax_closed

OBJECTIVES = ("dce", "ova", "hybrid", "ce")


@dataclass
class LossBreakdown:
    l_ova: float = 0.0
    l_reg: float = 0.0
    l_pl: float = 0.0
    l_dce: float = 0.0
    l_ce: float = 0.0
    total: float = 0.0

    def as_dict(self):
        return {"l_ova": self.l_ova, "l_reg": self.l_reg, "l_pl": self.l_pl,
                "l_dce": self.l_dce, "l_ce": self.l_ce, "total": self.total}


@dataclass
class GradientSet:
    weights: list
    biases: list
    prototypes: np.ndarray
    thresholds: np.ndarray
    head_weight: np.ndarray = None
    head_bias: np.ndarray = None


def _check_label(y, k):
    if not 0 <= int(y) < k:
        raise LabelError(f"label {y} outside 0..{k - 1}")
    return int(y)


def ova_loss(binary, y):
    p = clamp_prob(np.asarray(binary, dtype=np.float64))
    y = _check_label(y, p.shape[-1])
    neg = np.log1p(-p)
    return float(-(np.log(p[y]) + neg.sum() - neg[y]))


def reg_loss(post, y):
    known = np.asarray(post.known, dtype=np.float64)
    y = _check_label(y, known.shape[-1])
    return float(-np.log(clamp_prob(known[y])))


def prototype_loss(f, p, y):
    y = _check_label(y, p.num_classes)
    diff = np.asarray(f, dtype=np.float64) - p.prototypes[y]
    return float(diff @ diff)


def dce_loss(distances, xi, y):
    d = np.asarray(distances, dtype=np.float64)
    if np.any(d < 0):
        raise ParameterError("distances must be >= 0")
    if not xi > 0:
        raise ParameterError("xi must be > 0")
    y = _check_label(y, d.shape[-1])
    s = -xi * d
    m = s.max()
    return float(m + np.log(np.sum(np.exp(s - m))) - s[y])


def softplus(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def ova_loss_from_logits(G, y):
    """Row-wise ``-log s(g_y) - sum_{i != y} log(1 - s(g_i))``."""
    rows = np.arange(G.shape[0])
    negatives = softplus(G)
    negatives[rows, y] = 0.0
    return softplus(-G[rows, y]) + negatives.sum(axis=1)


def reg_loss_from_logits(G, y):
    """Row-wise ``-log p^m_y`` with the implicit OOD logit 0."""
    m = np.maximum(G.max(axis=1), 0.0)
    lse = m + np.log(np.exp(-m) + np.exp(G - m[:, None]).sum(axis=1))
    return lse - G[np.arange(G.shape[0]), y]


def _xent_from_logits(S, y):
    m = S.max(axis=1)
    lse = m + np.log(np.exp(S - m[:, None]).sum(axis=1))
    return lse - S[np.arange(S.shape[0]), y]


def _check_objective(objective, beta, lam):
    if objective not in OBJECTIVES:
        raise ParameterError(f"unknown objective {objective!r}")
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta must lie in [0, 1], got {beta}")
    if not lam >= 0.0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")


def total_loss(p, x, y, objective="hybrid", beta=0.95, lam=0.05):
    """Loss breakdown for a single sample."""
    _check_objective(objective, beta, lam)
    y = _check_label(y, p.num_classes)
    trace = forward_batch(p, np.asarray(x, dtype=np.float64)[None, :])
    f, g, dist = trace.features[0], trace.logits[0], trace.sq_distances[0]
    out = LossBreakdown(l_pl=prototype_loss(f, p, y))
    if objective in ("ova", "hybrid"):
        out.l_ova = float(ova_loss_from_logits(g[None, :], [y])[0])
        out.l_reg = float(reg_loss_from_logits(g[None, :], [y])[0])
        if objective == "ova":
            out.total = out.l_ova + lam * out.l_pl
        else:
            out.total = beta * out.l_ova + (1.0 - beta) * out.l_reg + lam * out.l_pl
    elif objective == "dce":
        out.l_dce = float(_xent_from_logits(-p.temperature * dist[None, :], [y])[0])
        out.total = out.l_dce + lam * out.l_pl
    else:
        g_lin = f @ p.head_weight.T + p.head_bias
        out.l_ce = float(_xent_from_logits(g_lin[None, :], [y])[0])
        out.total = out.l_ce + lam * out.l_pl
    return out


def total_loss_grad(p, batch, objective="hybrid", beta=0.95, lam=0.05):
    """Batch-mean loss breakdown and analytic gradients for every parameter group."""
    _check_objective(objective, beta, lam)
    y = np.asarray(batch.labels)
    n = y.shape[0]
    if n == 0:
        raise ParameterError("empty batch")
    k = p.num_classes
    if np.any(y < 0) or np.any(y >= k):
        raise LabelError("training batch must contain known-class labels only")
    if objective == "ce" and not p.has_linear_head:
        raise ParameterError("objective 'ce' needs a model with a linear head")

    trace = forward_batch(p, batch.features)
    F, D, G = trace.features, trace.sq_distances, trace.logits
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0
    rows = np.arange(n)
    xi = p.temperature

    l_pl = D[rows, y]
    out = LossBreakdown(l_pl=float(l_pl.mean()))
    dF = np.zeros_like(F)
    d_head_w = d_head_b = None
    # dL/dG for prototype logits, and direct dL/dD contributions
    dG = np.zeros((n, k))
    dD = lam * onehot

    if objective in ("ova", "hybrid"):
        l_ova = ova_loss_from_logits(G, y)
        l_reg = reg_loss_from_logits(G, y)
        post = dste_combine(G)
        b = 1.0 if objective == "ova" else beta
        out.l_ova = float(l_ova.mean())
        out.l_reg = float(l_reg.mean())
        per_sample = b * l_ova + (1.0 - b) * l_reg + lam * l_pl
        dG = b * (sigmoid(G) - onehot) + (1.0 - b) * (post.known - onehot)
    elif objective == "dce":
        s = -xi * D
        q = softmax_closed(s)
        l_dce = _xent_from_logits(s, y)
        out.l_dce = float(l_dce.mean())
        per_sample = l_dce + lam * l_pl
        dD = dD - xi * (q - onehot)
    else:
        g_lin = F @ p.head_weight.T + p.head_bias
        q = softmax_closed(g_lin)
        l_ce = _xent_from_logits(g_lin, y)
        out.l_ce = float(l_ce.mean())
        per_sample = l_ce + lam * l_pl
        dG_lin = (q - onehot) / n
        d_head_w = dG_lin.T @ F
        d_head_b = dG_lin.sum(axis=0)
        dF += dG_lin @ p.head_weight
    out.total = float(per_sample.mean())

    # G = -xi (D - tau)
    dD = (dD - xi * dG) / n
    d_tau = xi * dG.sum(axis=0) / n
    dF += 2.0 * (dD.sum(axis=1)[:, None] * F - dD @ p.prototypes)
    d_mu = -2.0 * (dD.T @ F - dD.sum(axis=0)[:, None] * p.prototypes)

    if p.threshold_mode == "constant_shared":
        d_tau = np.zeros(k)
    elif p.threshold_mode in SHARED_MODES:
        d_tau = np.full(k, d_tau.sum())

    d_w, d_b = _mlp_backward(p, trace, dF)
    grads = GradientSet(d_w, d_b, d_mu, d_tau, d_head_w, d_head_b)
    if p.has_linear_head and d_head_w is None:
        grads.head_weight = np.zeros_like(p.head_weight)
        grads.head_bias = np.zeros_like(p.head_bias)
    return out, grads


def _mlp_backward(p, trace, dF):
    n_layers = len(p.weights)
    d_w = [None] * n_layers
    d_b = [None] * n_layers
    delta = dF
    for i in range(n_layers - 1, -1, -1):
        d_w[i] = trace.activations[i].T @ delta
        d_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ p.weights[i].T) * (trace.pre_activations[i - 1] > 0)
    return d_w, d_b


def finite_diff_grad(scalar_fn, params_flat, h=1e-5):
    """Central-difference gradient of ``scalar_fn`` at ``params_flat``."""
    theta = np.array(params_flat, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        old = theta[i]
        theta[i] = old + h
        f_plus = scalar_fn(theta.copy())
        theta[i] = old - h
        f_minus = scalar_fn(theta.copy())
        theta[i] = old
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


# Flat views over the trainable parameters. Shared thresholds contribute one
# coordinate and constant thresholds none.

def _trainable_groups(p):
    groups = list(p.weights) + list(p.biases) + [p.prototypes]
    if p.has_linear_head:
        groups += [p.head_weight, p.head_bias]
    return groups


def params_to_vector(p):
    parts = [g.ravel() for g in _trainable_groups(p)]
    if p.threshold_mode == "learnable_per_class":
        parts.append(p.thresholds)
    elif p.threshold_mode == "learnable_shared":
        parts.append(p.thresholds[:1])
    return np.concatenate(parts)


def vector_to_params(p, vec):
    q = p.copy()
    pos = 0
    for g in _trainable_groups(q):
        g[...] = vec[pos:pos + g.size].reshape(g.shape)
        pos += g.size
    if q.threshold_mode == "learnable_per_class":
        q.thresholds[:] = vec[pos:pos + q.num_classes]
        pos += q.num_classes
    elif q.threshold_mode == "learnable_shared":
        q.thresholds[:] = vec[pos]
        pos += 1
    if pos != len(vec):
        raise ParameterError(f"vector length {len(vec)} does not match {pos} parameters")
    return q


def gradient_to_vector(p, grads):
    groups = list(grads.weights) + list(grads.biases) + [grads.prototypes]
    if p.has_linear_head:
        groups += [grads.head_weight, grads.head_bias]
    parts = [g.ravel() for g in groups]
    if p.threshold_mode == "learnable_per_class":
        parts.append(grads.thresholds)
    elif p.threshold_mode == "learnable_shared":
        parts.append(grads.thresholds[:1])
    return np.concatenate(parts)
