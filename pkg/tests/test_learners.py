import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relsmart.construct import RowClass, row_distribution, row_points
from relsmart.core import DiscreteDistribution, LabeledSample, RandomSource, loss_sample
from relsmart.hypotheses import Constant, FiniteClass, RealizabilityError, TableHypothesis
from relsmart.learners import (
    ADVERSARIAL,
    AdversarialERM,
    ERMLearner,
    MajorityLearner,
    MixtureLearner,
    RandomGuess,
    SmartnessParams,
    ValidationLearner,
    adversarial_erm_error,
    erm_train,
    estimate_error_rate,
    majority_train,
    mixture_learner_train,
    mixture_probability,
    validation_learner_train,
)


def pairs(*labels):
    return LabeledSample.from_pairs([(i, y) for i, y in enumerate(labels)])


def test_majority_examples():
    assert majority_train(pairs(1, 1, 0)) == Constant(1)
    assert majority_train(pairs(0, 0, 0)) == Constant(0)
    assert majority_train(pairs(1, 0)) == Constant(1)  # tie goes to 1
    assert majority_train(pairs()) == Constant(1)


@given(st.lists(st.integers(0, 1), max_size=20), st.randoms())
@settings(max_examples=50, deadline=None)
def test_majority_permutation_invariant(labels, rnd):
    shuffled = labels[:]
    rnd.shuffle(shuffled)
    assert majority_train(pairs(*labels)) == majority_train(pairs(*shuffled))


def test_erm_lexicographic_examples():
    full = FiniteClass.full(["x1", "x2"])
    h = erm_train(full, LabeledSample.from_pairs([("x1", 0)]))
    assert (h("x1"), h("x2")) == (0, 0)
    single = FiniteClass(["x1", "x2"], [[1, 0]])
    assert erm_train(single, LabeledSample.from_pairs([("x2", 0)])) == next(single.members())
    with pytest.raises(RealizabilityError):
        erm_train(single, LabeledSample.from_pairs([("x2", 1)]))


def test_erm_on_row_class():
    R = RowClass(10, 2)
    T = LabeledSample.from_pairs([((10, 1), 0), ((10, 4), 0), ((10, 9), 0)])
    h = erm_train(R, T)
    assert loss_sample(h, T) == 0
    vec = h.row_vector()
    assert min((vec == 0).sum(), (vec == 1).sum()) == 2


@given(st.lists(st.lists(st.integers(0, 1), min_size=4, max_size=4), min_size=1, max_size=10),
       st.lists(st.integers(0, 3), max_size=6), st.integers(0, 9))
@settings(max_examples=60, deadline=None)
def test_erm_lex_fits_training_data(rows, idx, pick):
    cls = FiniteClass(range(4), rows)
    truth = list(cls.members())[pick % cls.size()]
    T = LabeledSample.from_pairs([(i, truth(i)) for i in idx])
    assert loss_sample(erm_train(cls, T), T) == 0


def test_adversarial_erm_examples():
    full = FiniteClass.full(["x1", "x2"])
    D = DiscreteDistribution.uniform(["x1", "x2"])
    truth = TableHypothesis({"x1": 0, "x2": 1})
    # whichever point is seen, the worst consistent labeling flips the other one
    est = adversarial_erm_error(full, D, truth, 1, 50, 4)
    assert est.mean == 0.5 and est.se == 0
    single = FiniteClass(["x1", "x2"], [[0, 1]])
    assert adversarial_erm_error(single, D, truth, 3, 40, 4).mean == 0


def test_adversarial_erm_row_class():
    R = RowClass(10000, 100)
    est = adversarial_erm_error(R, row_distribution(10000), R.canonical(1), 50, 200, 11)
    assert est.mean >= 0.98 - 3 * est.se


def test_adversarial_dominates_lexicographic():
    rng = np.random.default_rng(3)
    for trial in range(10):
        rows = rng.integers(0, 2, size=(8, 4))
        cls = FiniteClass(range(4), rows)
        D = DiscreteDistribution.from_weights(list(zip(range(4), rng.dirichlet(np.ones(4)) + 0.05)))
        truth = list(cls.members())[trial % cls.size()]
        adv = estimate_error_rate(AdversarialERM(cls), cls, D, [truth], 2, 200, RandomSource(trial)).estimate
        lex = estimate_error_rate(ERMLearner(cls), cls, D, [truth], 2, 200, RandomSource(trial)).estimate
        assert adv.mean >= lex.mean - 2 * (adv.ci_half_width + lex.ci_half_width)


def test_adversarial_policy_needs_evaluation_pair():
    with pytest.raises(ValueError):
        erm_train(FiniteClass.full([0]), pairs(1), ADVERSARIAL)


def test_validation_examples():
    h_S = TableHypothesis({i: i % 2 for i in range(8)})
    consistent = LabeledSample.from_pairs([(i, i % 2) for i in range(8)])
    assert validation_learner_train(h_S, consistent, 1) is h_S
    assert validation_learner_train(h_S, LabeledSample.from_pairs([(3, 0)]), 1) is h_S
    # labels all 1: h_S errs on even points, majority(T1) = 1 never errs
    ones = LabeledSample.from_pairs([(i, 1) for i in range(8)])
    assert validation_learner_train(h_S, ones, 1) == Constant(1)


def test_validation_tie_keeps_target():
    # T2 will hold one point each of two kinds; both candidates make one mistake there
    h_S = TableHypothesis({0: 0, 1: 0, 2: 0, 3: 0})
    T = LabeledSample.from_pairs([(0, 1), (1, 1), (2, 0), (3, 1)])
    for seed in range(30):
        gen = np.random.default_rng(seed)
        order = gen.permutation(4)
        T2 = T.take(order[2:])
        maj = majority_train(T.take(order[:2]))
        if loss_sample(h_S, T2) == loss_sample(maj, T2):
            assert validation_learner_train(h_S, T, np.random.default_rng(seed)) is h_S


@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.integers(0, 2**16))
@settings(max_examples=60, deadline=None)
def test_validation_picks_better_on_holdout(labels, seed):
    h_S = TableHypothesis({i: (i * 7) % 3 % 2 for i in range(len(labels))})
    T = pairs(*labels)
    order = np.random.default_rng(seed).permutation(len(T))
    cut = math.ceil(len(T) / 2)
    T2 = T.take(order[cut:])
    best = min(loss_sample(h_S, T2), loss_sample(majority_train(T.take(order[:cut])), T2))
    chosen = validation_learner_train(h_S, T, np.random.default_rng(seed))
    assert loss_sample(chosen, T2) == best


def test_mixture_examples():
    base = MajorityLearner()
    for seed in range(20):
        assert mixture_learner_train(base, 0.0, pairs(1), seed) == Constant(1)
        assert isinstance(mixture_learner_train(base, 0.3, pairs(), seed), RandomGuess)
    assert mixture_probability(0.5, 0) == 1.0
    assert mixture_probability(0.5, 3) == 0.25


def test_mixture_random_guess_frequency():
    c, m = 0.8, 3
    T = pairs(*([1] * m))
    src = RandomSource(99)
    hits = np.array([isinstance(mixture_learner_train(MajorityLearner(), c, T, src.child(j).generator()), RandomGuess)
                     for j in range(10_000)], dtype=float)
    p = mixture_probability(c, m)
    se = math.sqrt(p * (1 - p) / len(hits))
    assert abs(hits.mean() - p) <= 3 * se


def test_mixture_error_bound_any_distribution():
    c = 0.5
    D = DiscreteDistribution.uniform(range(6))
    truth = TableHypothesis({i: int(i < 2) for i in range(6)})
    for m in (1, 2, 4):
        est = estimate_error_rate(MixtureLearner(MajorityLearner(), c), None, D, [truth], m, 2000, RandomSource(m)).estimate
        assert est.mean <= 1 - c**m + 3 * est.se


def test_estimate_error_rate_singleton_class():
    cls = FiniteClass(range(3), [[1, 0, 1]])
    D = DiscreteDistribution.uniform(range(3))
    rate = estimate_error_rate(ERMLearner(cls), cls, D, list(cls.members()), 4, 30, 0)
    assert rate.estimate.mean == 0


def test_estimate_error_rate_reports_worst_truth():
    D = row_distribution(20)
    R = RowClass(20, 2)
    far = ERMLearner(FiniteClass(row_points(20), [R.canonical(0).row_vector()]))
    truths = [R.canonical(0), R.canonical(1)]
    rate = estimate_error_rate(MajorityLearner(), R, D, truths, 8, 40, 1)
    assert rate.estimate is rate.per_truth[rate.worst_index]
    assert len(rate.per_truth) == 2
    del far


def test_worker_pool_matches_serial():
    R = RowClass(200, 10)
    D = row_distribution(200)
    args = (R, D, [R.canonical(1)], 10, 12, RandomSource(5))
    a = estimate_error_rate(ValidationLearner(R.canonical(1)), *args, workers=1).estimate
    b = estimate_error_rate(ValidationLearner(R.canonical(1)), *args, workers=2).estimate
    assert a == b


def test_smartness_params_validation():
    SmartnessParams(1.0, 0.1)
    with pytest.raises(ValueError):
        SmartnessParams(0.5, 0.1)
    with pytest.raises(ValueError):
        SmartnessParams(2.0, 1.5)
