import math

import numpy as np
import pytest

from relsmart.certify import (
    ConstantCertifier,
    MajorityCertifier,
    SetCertifier,
    WellSeparatedCertifier,
    certifier_majority,
    certifier_set,
    certifier_wellsep,
    expected_certificate,
    soundness_audit,
)
from relsmart.construct import RowClass, SeparationError, row_distribution, row_points
from relsmart.core import DiscreteDistribution, LabeledSample, RandomSource, Sample, Tagged
from relsmart.harness import majority_battery
from relsmart.hypotheses import FiniteClass
from relsmart.learners import ERMLearner, MajorityLearner

N, M, GATE = 100, 10, 80000
XI = M / N


def majority_cert():
    return MajorityCertifier(N, M=M, xi=XI, m_gate=GATE)


def test_majority_gate():
    cert = majority_cert()
    S = row_distribution(N).sample(GATE - 1, 1)
    assert cert(S) == 1.0
    assert certifier_majority(N, {"M": M, "m_gate": GATE}, S) == 1.0


def test_majority_off_row_point():
    cert = majority_cert()
    pts = list(row_distribution(N).sample(GATE, 2)) + [(N + 1, 1)]
    assert cert(Sample.from_points(pts)) == 1.0


def test_majority_in_regime_outputs_low_level():
    cert = majority_cert()
    D = row_distribution(N)
    vals = np.array([cert(D.sample(GATE, RandomSource(5).child(j))) for j in range(40)])
    assert set(vals.tolist()) <= {3 * XI, 1.0}
    rate = np.mean(vals == 3 * XI)
    assert rate >= 1 - XI - 3 * math.sqrt(max(rate * (1 - rate), 1e-12) / len(vals))


def test_expected_certificate_levels():
    cert = majority_cert()
    est = expected_certificate(cert, row_distribution(N), GATE, 40, 6)
    assert 3 * XI - 3 * est.se <= est.mean <= 4 * XI + 3 * est.se
    far = DiscreteDistribution.uniform(row_points(N)[: 2 * M])
    est = expected_certificate(cert, far, GATE, 40, 7)
    assert est.mean >= 1 - XI - 3 * est.se
    const = expected_certificate(ConstantCertifier(), far, 5, 30, 8)
    assert const.mean == 1 and const.se == 0
    with pytest.raises(ValueError):
        expected_certificate(cert, far, 5, 29, 8)


def test_two_output_levels_and_label_independence():
    cert = majority_cert()
    D = row_distribution(N)
    for j in range(10):
        S = D.sample(GATE if j % 2 else 30, RandomSource(9).child(j))
        a = LabeledSample(S, np.zeros(len(S), dtype=np.int8))
        b = LabeledSample(S, np.ones(len(S), dtype=np.int8))
        assert cert(a.sample) == cert(b.sample) in (3 * XI, 1.0)


def test_set_certifier():
    S_set = [Tagged("u", i) for i in range(32)]
    cert = SetCertifier(S_set, xi=0.05, m_gate=60000)
    U = DiscreteDistribution.uniform(S_set)
    assert cert(U.sample(100, 1)) == 1.0
    assert cert.level == pytest.approx(0.3)
    vals = [cert(U.sample(60000, RandomSource(2).child(j))) for j in range(30)]
    assert set(vals) <= {cert.level, 1.0}
    assert np.mean(np.array(vals) == cert.level) >= 1 - 0.05 - 3 * 0.05
    leak = Sample.from_points(list(U.sample(60000, 3)) + [Tagged("v", 0)])
    assert cert(leak) == 1.0
    assert certifier_set(S_set, {"xi": 0.05, "m_gate": 60000}, leak) == 1.0


def test_schedule_parameters():
    cert = MajorityCertifier(10000, 0.1)
    assert cert.M == math.ceil(10000**0.9)
    assert cert.m_gate == math.floor(10000**0.8)
    assert cert.xi == pytest.approx(cert.M / 10000)
    s = SetCertifier(range(64), 0.5)
    assert s.xi == pytest.approx(64**-0.25)
    with pytest.raises(ValueError):
        MajorityCertifier(100)


def _family():
    A = DiscreteDistribution.uniform(["a", "b"], name="A")
    B = DiscreteDistribution.uniform(["c", "d"], name="B")
    return [A, B]


def test_wellsep_examples():
    fam = _family()
    cert = WellSeparatedCertifier(fam, 0, 0.5, lambda m: 0.0)
    assert cert(Sample.from_points(["a", "b", "a"])) == pytest.approx(0.125)
    assert certifier_wellsep(fam, 0, 0.5, lambda m: 0.0, 3, ["a", "b", "a"]) == pytest.approx(0.125)
    assert cert(Sample.from_points(["a", "c", "a"])) == 1.0
    # large m: the certificate tends to the learner's error
    err = 0.2
    far = WellSeparatedCertifier(fam, 0, 0.5, lambda m: err)
    assert abs(far.value_at(60) - err) < 1e-12
    assert far.value_at(0) == pytest.approx(0.5)


def test_wellsep_separation_violation():
    A = DiscreteDistribution.uniform(["a", "b"], name="A")
    B = DiscreteDistribution.uniform(["b", "c"], name="B")
    with pytest.raises(SeparationError):
        WellSeparatedCertifier([A, B], 0, 0.5, lambda m: 0.0)
    WellSeparatedCertifier([A, B], 0, 0.6, lambda m: 0.0)


def test_constant_certifier_audit_sound():
    R = RowClass(40, 4)
    battery = majority_battery(R, R.xi)
    report = soundness_audit(ConstantCertifier(), MajorityLearner(), battery, [0, 3, 20], 30, 1)
    assert report.sound and len(report.rows) == 12
    assert report.to_json()["verdict"] == "statistical"


def test_zero_error_learner_audit_sound():
    cls = FiniteClass(["a", "b"], [[1, 0]])
    D = DiscreteDistribution.uniform(["a", "b"])
    report = soundness_audit(ConstantCertifier(0.0), ERMLearner(cls), [(D, list(cls.members()))], [1, 4], 30, 2)
    assert report.sound
    assert all(r.error.mean == 0 for r in report.rows)


def test_audit_flags_unsound_certifier():
    R = RowClass(40, 4)
    D = DiscreteDistribution.uniform(row_points(40)[:8])
    truths = R.truth_set(D)
    report = soundness_audit(ConstantCertifier(0.0), MajorityLearner(), [(D, truths)], [10], 60, 3)
    assert not report.sound
    with pytest.raises(ValueError):
        soundness_audit(ConstantCertifier(), MajorityLearner(), [], [1], 30, 0)
