import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relsmart.core import Sample
from relsmart.unitest import (
    SampleTooSmallError,
    TesterParams,
    block_collisions,
    block_collisions_bincount,
    collision_statistic,
    m_test_sample_bound,
    m_test_unif,
    run_m_test_unif,
    run_test_unif,
    test_unif as standard_test,
)


def test_collision_examples():
    assert collision_statistic(["a", "a", "b"]) == pytest.approx(1 / 3)
    assert collision_statistic(["a", "b", "c", "d"]) == 0
    assert collision_statistic(["a"] * 4) == 1
    with pytest.raises(SampleTooSmallError):
        collision_statistic(["a"])


def test_threshold_and_blocks():
    p = TesterParams(0.5, 0.1)
    assert p.threshold(4) == pytest.approx(0.375)
    assert p.blocks == math.ceil(18 * math.log(20))
    with pytest.raises(ValueError):
        TesterParams(1.0, 0.1)
    with pytest.raises(ValueError):
        TesterParams(0.1, 0.0)


def test_sample_bound_examples():
    assert abs(m_test_sample_bound(100, 0.1, 0.1) - 3451084) <= 1
    base = m_test_sample_bound(100, 0.2, 0.05)
    assert m_test_sample_bound(400, 0.2, 0.05) == pytest.approx(2 * base, abs=2)
    assert m_test_sample_bound(100, 0.1, 0.05) == pytest.approx(4 * base, abs=4)


def test_too_small_sample_is_an_error():
    p = TesterParams(0.5, 0.1)
    with pytest.raises(SampleTooSmallError):
        standard_test(4, p, Sample.from_points(list(range(4)) * 10))


def test_off_support_rejects():
    Y = set(range(4))
    S = Sample.from_points([0, 1, 2, 3] * 1000 + [7])
    out = run_m_test_unif(Y, TesterParams(0.5, 0.1), S)
    assert out.accepted == 0 and out.off_support


def test_outcome_majority_vote():
    p = TesterParams(0.5, 0.1)
    codes = np.random.default_rng(1).integers(0, 4, size=p.blocks * 50)
    out = run_test_unif(4, p, Sample(tuple(range(4)), codes))
    assert len(out.sub_decisions) == p.blocks == len(out.statistics)
    assert out.accepted == int(sum(out.sub_decisions) >= p.blocks / 2)


@given(st.lists(st.integers(0, 6), min_size=2, max_size=40), st.randoms())
@settings(max_examples=80, deadline=None)
def test_shuffle_within_block(block, rnd):
    shuffled = block[:]
    rnd.shuffle(shuffled)
    assert collision_statistic(block) == collision_statistic(shuffled)


@given(st.integers(1, 6), st.integers(0, 30), st.integers(1, 9), st.integers(0, 2**16))
@settings(max_examples=80, deadline=None)
def test_bincount_matches_sorting(rows, width, k, seed):
    blocks = np.random.default_rng(seed).integers(0, k, size=(rows, width))
    expected = [sum(math.comb(int(c), 2) for c in np.bincount(r, minlength=k)) for r in blocks]
    assert block_collisions(blocks).tolist() == expected
    assert block_collisions_bincount(blocks, k).tolist() == expected


def test_threshold_monotone():
    rng = np.random.default_rng(4)
    codes = rng.integers(0, 5, size=40 * 55)
    S = Sample(tuple(range(5)), codes)
    prev = None
    for xi in (0.05, 0.1, 0.2, 0.4, 0.8):
        acc = np.array(run_test_unif(5, TesterParams(xi, 0.1), S).sub_decisions)
        if prev is not None:
            assert np.all(acc >= prev)
        prev = acc


N, XI, DELTA, TRIALS = 4, 0.5, 0.1, 100


def _rates(weights, support=None):
    """Acceptance rate of the support-aware tester at its mandated sample size."""
    size = m_test_sample_bound(N, XI / 2, DELTA)
    pts = support if support is not None else list(range(N))
    book = tuple(pts)
    p = np.asarray(weights, dtype=float) / np.sum(weights)
    hits = []
    for t in range(TRIALS):
        codes = np.random.default_rng([7, t]).choice(len(book), size=size, p=p)
        hits.append(m_test_unif(set(range(N)), TesterParams(XI, DELTA), Sample(book, codes)))
    rate = float(np.mean(hits))
    return rate, math.sqrt(max(rate * (1 - rate), 1e-12) / TRIALS)


def test_uniform_accepted():
    rate, se = _rates([1, 1, 1, 1])
    assert rate >= 1 - DELTA - 3 * se


@pytest.mark.parametrize("weights,support", [
    ([1, 1, 0, 0], None),  # uniform on half of Y, TV 1/2
    ([1, 0, 0, 0], None),  # point mass, TV 3/4
    ([1, 1, 1, 1, 4], [0, 1, 2, 3, 9]),  # half the mass off Y
])
def test_far_distributions_rejected(weights, support):
    w = np.array(weights, dtype=float)
    if support is None:
        keep = w > 0
        w, support = w[keep], [i for i, k in enumerate(keep) if k]
    rate, se = _rates(w, support)
    assert 1 - rate >= 1 - DELTA - 3 * se
