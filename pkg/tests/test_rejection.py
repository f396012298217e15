import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ovaosr.model import ModelParams, discriminant_cpn
from ovaosr.posterior import PosteriorK1, dste_combine, sigmoid
from ovaosr.rejection import (ACCEPT, REJECT_MIS, REJECT_OOD, RULES, compute_scores, decide,
                              decide_batch, score_binary_max, score_energy, score_maxlogit,
                              score_msp, score_unified, unified_selects_known_mass)

logits = st.integers(1, 8).flatmap(lambda k: arrays(np.float64, k, elements=st.floats(-10, 10)))


def test_msp_examples():
    assert score_msp([0.3] * 4) == pytest.approx(0.25)
    assert score_msp([1000.0, 0.0]) == pytest.approx(1.0)


@settings(max_examples=50, deadline=None)
@given(logits, st.floats(-50, 50))
def test_msp_shift_invariant(g, c):
    assert score_msp(g + c) == pytest.approx(score_msp(g), abs=1e-12)


def test_energy_examples():
    assert score_energy([0.0, 0.0]) == pytest.approx(-math.log(2), abs=1e-15)
    assert score_energy([0.0]) == 0.0


@settings(max_examples=50, deadline=None)
@given(logits, st.floats(-20, 20))
def test_energy_shift(g, c):
    assert score_energy(g + c) == pytest.approx(score_energy(g) - c, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(logits, st.randoms())
def test_maxlogit(g, rnd):
    perm = list(range(g.size))
    rnd.shuffle(perm)
    assert score_maxlogit(g) == g.max() == score_maxlogit(g[perm])
    assert score_maxlogit([-1.0, 3.0, 0.0]) == 3.0
    assert score_binary_max(g) == sigmoid(score_maxlogit(g))


def test_binary_max_examples():
    assert score_binary_max([0.0, 0.0]) == 0.5
    assert score_binary_max([math.log(3), -5.0]) == pytest.approx(0.75, abs=1e-15)


def test_unified_examples():
    post = dste_combine([-800.0, -800.0])
    assert score_unified(post, 0.05) == pytest.approx(0.0, abs=1e-300)
    assert score_unified(dste_combine([60.0, 0.0]), 0.05) == pytest.approx(1.0)
    assert score_unified(dste_combine([math.log(2), 0.0, 0.0]), 0.05) == pytest.approx(0.45, abs=1e-15)


@pytest.mark.parametrize("known, ood, verdict", [
    ([0.2, 0.2], 0.6, REJECT_OOD),
    ([0.9, 0.05], 0.05, ACCEPT),
    ([0.4, 0.3], 0.3, REJECT_MIS),
])
def test_decide_examples(known, ood, verdict):
    d = decide(PosteriorK1(np.array(known), ood), delta=0.5)
    assert d.verdict == verdict
    if verdict == ACCEPT:
        assert d.label == 0


def test_decide_batch_matches_single():
    g = np.random.default_rng(3).uniform(-4, 4, (300, 3))
    post = dste_combine(g)
    verdicts, pred = decide_batch(post, 0.5)
    for i in range(300):
        d = decide(PosteriorK1(post.known[i], post.ood[i]), 0.5)
        assert d.verdict == verdicts[i]
        if d.verdict == ACCEPT:
            assert d.label == pred[i]


@settings(max_examples=200, deadline=None)
@given(logits, st.floats(0.0, 0.5))
def test_unified_branch_rule(g, eps):
    post = dste_combine(g)
    top = int(np.argmax(post.known))
    secondary = post.known.sum() - post.known[top]
    picks_known_mass = bool(unified_selects_known_mass(post, eps))
    if abs(secondary - eps) > 1e-12:
        assert picks_known_mass == (secondary < eps)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (30, 3), elements=st.floats(-6, 6)))
def test_binary_max_and_maxlogit_rank_identically(g):
    a = score_binary_max(g)
    b = score_maxlogit(g)
    for i in range(30):
        for j in range(30):
            if b[i] < b[j]:
                assert a[i] <= a[j]


def _shared_cpn(rng, k):
    return ModelParams([np.eye(3)], [np.zeros(3)], rng.normal(size=(k, 3)), np.full(k, 0.7), 1.3,
                       "learnable_shared")


def test_energy_ordering_equals_nearest_prototype_for_single_class(rng):
    p = _shared_cpn(rng, 1)
    feats = rng.normal(size=(200, 3))
    nearest = ((feats[:, None, :] - p.prototypes) ** 2).sum(-1).min(axis=1)
    energy = score_energy(discriminant_cpn(p, feats))
    np.testing.assert_array_equal(np.argsort(energy, kind="stable"), np.argsort(nearest, kind="stable"))


def test_energy_respects_nearest_prototype_beyond_log_k_gap(rng):
    # max <= logsumexp <= max + log K, so distance gaps above log(K)/xi fix the order
    k = 4
    p = _shared_cpn(rng, k)
    feats = rng.normal(size=(150, 3)) * 2
    nearest = ((feats[:, None, :] - p.prototypes) ** 2).sum(-1).min(axis=1)
    energy = score_energy(discriminant_cpn(p, feats))
    gap = math.log(k) / p.temperature
    for i in range(150):
        for j in range(150):
            if nearest[i] + gap < nearest[j]:
                assert energy[i] < energy[j]


def test_registry_orientation():
    # a strongly in-distribution logit vector must outscore a weak one under every rule
    strong, weak = np.array([[6.0, -4.0, -4.0]]), np.array([[-5.0, -5.0, -5.5]])
    for rule in RULES:
        assert compute_scores(strong, rule)[0] > compute_scores(weak, rule)[0], rule
