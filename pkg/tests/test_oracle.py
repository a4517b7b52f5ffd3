import math

import numpy as np
import pytest

from relsmart.core import DiscreteDistribution, RandomSource
from relsmart.hypotheses import FiniteClass
from relsmart.learners import estimate_error_rate
from relsmart.oig import OIGLearner, build_one_inclusion_graph, min_max_fractional_orientation, project_behaviors
from relsmart.oracle import (
    CapExceededError,
    GameInstance,
    best_transductive_value,
    enumerate_deterministic_learners,
    expected_empirical_optimal_error,
    optimal_error_value,
    optimal_fixed_error,
)


def instance(domain, rows, D, m):
    return GameInstance(tuple(domain), np.array(rows), D, m)


def test_learner_counts():
    one = instance(["a"], [[0], [1]], DiscreteDistribution.point_mass("a"), 0)
    raw, learners = enumerate_deterministic_learners(one)
    assert raw == 2 and len(learners) == 2
    two = instance(["a", "b"], [[0, 0], [0, 1], [1, 0], [1, 1]], DiscreteDistribution.uniform(["a", "b"]), 0)
    raw, learners = enumerate_deterministic_learners(two)
    assert raw == 4 and len(learners) == 4


def test_singleton_class_has_zero_loss_learner():
    inst = instance(["a", "b"], [[1, 0]], DiscreteDistribution.uniform(["a", "b"]), 2)
    _, learners = enumerate_deterministic_learners(inst)
    assert min(row.max() for row, _ in learners) == 0
    assert optimal_fixed_error(inst).value == pytest.approx(0)


def test_game_values():
    pennies = instance(["a"], [[0], [1]], DiscreteDistribution.point_mass("a"), 0)
    sol = optimal_fixed_error(pennies)
    assert sol.value == pytest.approx(0.5)
    assert sol.pure_value == pytest.approx(0.5)
    full2 = instance(["a", "b"], [[0, 0], [0, 1], [1, 0], [1, 1]], DiscreteDistribution.uniform(["a", "b"]), 1)
    sol = optimal_fixed_error(full2)
    # half the test draws hit the seen point (no error), the other half are a coin flip
    assert sol.value == pytest.approx(0.25)
    assert sol.certified()
    assert math.isclose(sum(sol.adversary_mixture), 1.0, abs_tol=1e-9)
    assert math.isclose(sum(w for w, _ in sol.learner_mixture), 1.0, abs_tol=1e-9)


def test_caps():
    D = DiscreteDistribution.uniform(range(5))
    with pytest.raises(CapExceededError):
        instance(range(5), [[0] * 5], D, 1)
    with pytest.raises(CapExceededError):
        instance(range(2), [[0, 0]], DiscreteDistribution.uniform(range(2)), 4)
    full = FiniteClass.full(range(5))
    with pytest.raises(CapExceededError):
        best_transductive_value(full, list(range(5)))


def test_json_roundtrip():
    inst = instance([0, 1], [[0, 1], [1, 1]], DiscreteDistribution.from_weights({0: 0.25, 1: 0.75}), 1)
    back = GameInstance.from_json(inst.to_json())
    assert np.array_equal(back.table, inst.table) and back.m == inst.m
    assert optimal_fixed_error(back).value == pytest.approx(optimal_fixed_error(inst).value)


def _random_instances(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        d = int(rng.integers(1, 4))
        rows = np.unique(rng.integers(0, 2, size=(int(rng.integers(1, 9)), d)), axis=0)
        w = rng.dirichlet(np.ones(d)) + 0.05
        D = DiscreteDistribution.from_weights(list(zip(range(d), w)))
        yield FiniteClass(range(d), rows), D


def test_monotone_in_sample_size():
    for cls, D in _random_instances(3, 25):
        vals = [optimal_error_value(cls, D, m) for m in range(4)]
        for a, b in zip(vals, vals[1:]):
            assert b <= a + 1e-9


def test_best_transductive_examples():
    assert best_transductive_value(FiniteClass(["a", "b"], [[1, 0]]), ["a", "b"]) == 0
    assert best_transductive_value(FiniteClass.full(["a", "b"]), ["a", "b"]) == pytest.approx(0.5, abs=1e-6)
    path = FiniteClass(["a", "b"], [[0, 0], [0, 1], [1, 1]])
    assert best_transductive_value(path, ["a", "b"]) == pytest.approx(1 / 3, abs=1e-6)


def test_best_transductive_agrees_with_orientation_lp():
    rng = np.random.default_rng(8)
    for cls, _ in _random_instances(5, 30):
        d = len(cls.domain)
        S = rng.choice(d, size=int(rng.integers(1, d + 1)), replace=True).tolist()
        g = build_one_inclusion_graph(project_behaviors(cls, S))
        lp = min_max_fractional_orientation(g).value / len(S)
        assert best_transductive_value(cls, S) == pytest.approx(lp, abs=1e-6)


def test_oig_error_chain_on_tiny_instances():
    M = 3
    for i, (cls, D) in enumerate(_random_instances(11, 6)):
        bound = math.e * expected_empirical_optimal_error(cls, D, M)
        rate = estimate_error_rate(OIGLearner(cls), cls, D, list(cls.members()), M - 1, 2000, RandomSource(i))
        est = rate.estimate
        assert est.mean <= bound + 3 * est.se
