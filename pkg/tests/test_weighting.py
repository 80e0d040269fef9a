import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import central_difference, class_weights_exact

from colorclass.weighting import (
    BatchStats,
    WeightTable,
    argmax_classes,
    batch_weights,
    psi_threshold,
    regression_losses,
    softmax,
    uniform_weights,
    weighted_ce_from_logits,
    weighted_ce_grad_logits,
    weighted_ce_grad_probs,
    weighted_ce_loss,
)


def test_uniform_weights():
    np.testing.assert_array_equal(uniform_weights(4).weights, [0.25] * 4)
    w = uniform_weights(532).weights
    assert w[0] == pytest.approx(0.0018797, abs=1e-7)
    assert math.fsum(w) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        uniform_weights(0)


def test_toy_batch_weights():
    t = batch_weights(BatchStats([70, 20, 8, 2]), p_percent=10)
    assert t.psi == 2.5
    expected = [float(x) for x in class_weights_exact([70, 20, 8, 2], 10)]
    np.testing.assert_allclose(t.weights, expected, rtol=0, atol=1e-12)
    np.testing.assert_allclose(t.weights, [1.020408, 2.083333, 2.777778, 3.278689], atol=1e-6)


def test_equal_counts_give_equal_weights():
    w = batch_weights(BatchStats([25, 25, 25, 25])).weights
    assert np.all(w == w[0])


def test_threshold_boundary_no_clamp():
    # psi = 20/4 * 10% = 0.5 ; a count equal to psi is left as is.
    counts = [0.5, 9.5, 5, 5]
    t = batch_weights(BatchStats(counts), p_percent=10)
    assert t.psi == 0.5
    assert t.weights[0] == pytest.approx(20 / (0.5 + 9.5 / 0.5))


def test_psi_override_and_errors():
    t = batch_weights(BatchStats([70, 20, 8, 2]), psi=30)
    expected = [float(x) for x in class_weights_exact([70, 20, 8, 2], 10, psi=30)]
    np.testing.assert_allclose(t.weights, expected)
    with pytest.raises(ValueError):
        batch_weights(BatchStats([0, 0]))
    with pytest.raises(ValueError):
        batch_weights(BatchStats([1, 2]), p_percent=0)


def test_paper_scale_psi():
    assert psi_threshold(56 * 56 * 64, 532, 10) == pytest.approx(37.726, abs=1e-3)


counts_st = st.lists(st.integers(0, 10_000), min_size=2, max_size=40).filter(lambda c: sum(c) > 0)


@given(counts_st, st.floats(0.5, 100))
def test_rarer_class_never_lighter(counts, p):
    w = batch_weights(BatchStats(counts), p).weights
    order = np.argsort(counts, kind="stable")
    assert np.all(np.diff(w[order]) <= 1e-12 * w.max())


@given(counts_st, st.floats(0.5, 100), st.integers(2, 50))
def test_count_scaling_law(counts, p, k):
    # Scaling counts by k scales total, psi and the adjusted counts by k but
    # leaves max/psi fixed: w_k = k*T / (k*N_adj + max/psi).
    t1 = batch_weights(BatchStats(counts), p)
    t2 = batch_weights(BatchStats(np.array(counts) * k), p)
    c = np.array(counts, dtype=float)
    n_adj = np.maximum(c, t1.psi)
    assert t2.psi == pytest.approx(k * t1.psi, rel=1e-12)
    np.testing.assert_allclose(t2.weights, k * c.sum() / (k * n_adj + c.max() / t1.psi), rtol=1e-12)
    # ordering of classes by weight is unchanged
    np.testing.assert_array_equal(np.argsort(-t1.weights, kind="stable"), np.argsort(-t2.weights, kind="stable"))


@given(counts_st, st.floats(0.5, 100))
def test_weight_cap(counts, p):
    t = batch_weights(BatchStats(counts), p)
    c = np.array(counts, dtype=float)
    cap = c.sum() / (t.psi + c.max() / t.psi)
    assert t.weights.max() <= cap * (1 + 1e-12)
    np.testing.assert_allclose(t.weights[c <= t.psi], cap, rtol=1e-12)


def test_batch_stats_from_targets():
    s = BatchStats.from_targets(np.array([[[0, 1], [1, 3]]]), 4)
    assert s.counts.tolist() == [1, 2, 0, 1] and s.total == 4 and s.batch_shape == (1, 2, 2)
    with pytest.raises(ValueError):
        BatchStats.from_targets(np.array([5]), 4)


def test_ce_perfect_prediction_is_zero():
    probs = np.eye(4)[[0, 2, 3]]
    assert weighted_ce_loss(probs, np.array([0, 2, 3]), uniform_weights(4)) == 0.0


def test_ce_uniform_prediction():
    n = 7
    probs = np.full((3, 5, n), 1 / n)
    targets = np.random.default_rng(1).integers(0, n, size=(3, 5))
    loss = weighted_ce_loss(probs, targets, uniform_weights(n))
    assert loss == pytest.approx(math.log(n) / n, rel=1e-12)
    assert weighted_ce_loss(probs, targets, uniform_weights(n), reduction="sum") == pytest.approx(15 * math.log(n) / n)


def test_ce_linear_in_weights(rng):
    probs = softmax(rng.normal(size=(4, 4, 6)))
    targets = rng.integers(0, 6, size=(4, 4))
    w = WeightTable(rng.uniform(0.1, 3, size=6))
    assert weighted_ce_loss(probs, targets, WeightTable(2 * w.weights)) == pytest.approx(2 * weighted_ce_loss(probs, targets, w))


def test_ce_matches_mean_ce_with_uniform_weights(rng):
    probs = softmax(rng.normal(size=(5, 6, 9)))
    targets = rng.integers(0, 9, size=(5, 6))
    plain = -np.mean(np.log(np.take_along_axis(probs, targets[..., None], -1)))
    assert weighted_ce_loss(probs, targets, uniform_weights(9)) == pytest.approx(plain / 9)


def test_ce_floor_and_shape_errors():
    probs = np.array([[0.0, 1.0]])
    assert math.isfinite(weighted_ce_loss(probs, np.array([0]), uniform_weights(2)))
    with pytest.raises(ValueError):
        weighted_ce_loss(np.ones((2, 3)), np.array([0, 1, 2]), uniform_weights(3))
    with pytest.raises(ValueError):
        weighted_ce_loss(np.ones((1, 3)) / 3, np.array([0]), uniform_weights(3), reduction="max")


def _rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-12))


@pytest.mark.parametrize("reduction", ["mean", "sum"])
def test_gradient_wrt_probs(rng, reduction):
    probs = softmax(rng.normal(size=(4, 4, 6)))
    targets = rng.integers(0, 6, size=(4, 4))
    w = WeightTable(rng.uniform(0.1, 3, size=6))
    num = central_difference(lambda p: weighted_ce_loss(p, targets, w, reduction), probs, 1e-7)
    assert _rel_err(weighted_ce_grad_probs(probs, targets, w, reduction), num) < 1e-5


@pytest.mark.parametrize("reduction", ["mean", "sum"])
def test_gradient_through_softmax(rng, reduction):
    logits = rng.normal(size=(4, 4, 6))
    targets = rng.integers(0, 6, size=(4, 4))
    w = WeightTable(rng.uniform(0.1, 3, size=6))
    num = central_difference(lambda z: weighted_ce_loss(softmax(z), targets, w, reduction), logits, 1e-5)
    assert _rel_err(weighted_ce_grad_logits(logits, targets, w, reduction), num) < 1e-5
    assert weighted_ce_from_logits(logits, targets, w, reduction) == pytest.approx(
        weighted_ce_loss(softmax(logits), targets, w, reduction), rel=1e-12
    )


def test_softmax_properties():
    np.testing.assert_allclose(softmax(np.zeros((2, 5))), 0.2)
    x = np.random.default_rng(3).normal(size=(3, 4))
    np.testing.assert_allclose(softmax(x + 123.4), softmax(x), atol=1e-15)
    np.testing.assert_allclose(softmax(np.array([0.0, math.log(3)])), [0.25, 0.75])
    big = softmax(np.array([1000.0, 0.0]))
    assert np.isfinite(big).all() and big.sum() == pytest.approx(1.0)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_softmax_normalized(xs):
    p = softmax(np.array(xs))
    assert (p >= 0).all() and abs(p.sum() - 1) < 1e-6


def test_argmax_against_linear_scan(rng):
    for _ in range(20):
        d = rng.integers(0, 5, size=(8, 8, 16)).astype(float)  # many ties
        got = argmax_classes(d)
        for i in range(8):
            for j in range(8):
                best = 0
                for k in range(16):
                    if d[i, j, k] > d[i, j, best]:
                        best = k
                assert got[i, j] == best
        logits = rng.normal(size=(8, 8, 16))
        np.testing.assert_array_equal(argmax_classes(logits), argmax_classes(softmax(logits)))
    assert argmax_classes(np.eye(5)[[3]])[0] == 3


def test_regression_losses():
    x = np.random.default_rng(2).normal(size=(3, 3, 2))
    assert regression_losses(x, x) == {"l1": 0.0, "l2": 0.0, "huber": 0.0, "log_cosh": 0.0}
    e = 0.5
    r = regression_losses(x, x + e, huber_delta=1.0)
    assert r["l1"] == pytest.approx(e) and r["l2"] == pytest.approx(e**2) and r["huber"] == pytest.approx(e**2 / 2)
    r = regression_losses(np.zeros(4), np.full(4, 3.0))
    assert r["log_cosh"] == pytest.approx(2.3093285, abs=1e-7)
    assert r["huber"] == pytest.approx(1.0 * (3 - 0.5))
    # sign of the error does not matter
    assert regression_losses(np.zeros(4), np.full(4, -3.0)) == r
    with pytest.raises(ValueError):
        regression_losses(np.zeros(3), np.zeros(4))
