import json
import math

import numpy as np
import pytest

from robot_ot.core import InvalidInputError, make_measure
from robot_ot.cost import CostSpec
from robot_ot.semidiscrete import SgdConfig
from robot_ot import diagnostics


def test_union_support_merges_coincident_points():
    a = make_measure([[0.0], [1.0]], [0.25, 0.75])
    b = make_measure([[1.0], [2.0]])
    points, (wa, wb) = diagnostics.union_support(a, b)
    np.testing.assert_allclose(points.ravel(), [0.0, 1.0, 2.0])
    np.testing.assert_allclose(wa, [0.25, 0.75, 0.0])
    np.testing.assert_allclose(wb, [0.0, 0.5, 0.5])


def test_contaminate_mixes_weights():
    mu = make_measure([[0.0]])
    mu_c = make_measure([[5.0]])
    mixed = diagnostics.contaminate(mu, mu_c, 0.2)
    np.testing.assert_allclose(mixed.points.ravel(), [0.0, 5.0])
    np.testing.assert_allclose(mixed.weights, [0.8, 0.2])
    assert diagnostics.contaminate(mu, mu_c, 0.0).n == 1
    with pytest.raises(InvalidInputError):
        diagnostics.contaminate(mu, mu_c, 1.0)


def test_bounds_zero_when_measures_coincide():
    mu = make_measure([[0.0], [1.0]], [0.3, 0.7])
    check = diagnostics.robot_upper_bounds(mu, make_measure([[9.0]]), mu, 0.0, CostSpec(), 0.5)
    assert check.bound_tv == pytest.approx(0.0)
    assert check.robot_value == pytest.approx(0.0, abs=1e-12)
    assert check.holds


def test_no_contamination_bounds_equal_ot():
    mu = make_measure([[0.0], [1.0]])
    nu = make_measure([[0.5], [3.0]])
    check = diagnostics.robot_upper_bounds(mu, make_measure([[7.0]]), nu, 0.0, CostSpec(), 1.0)
    assert check.bound_clean == pytest.approx(check.bound_ot)
    assert check.robot_value <= check.bound_ot + 1e-9


def test_tv_bound_is_tight_for_disjoint_diracs():
    mu = make_measure([[0.0]])
    nu = make_measure([[5.0]])
    check = diagnostics.robot_upper_bounds(mu, make_measure([[1.0]]), nu, 0.0, CostSpec(), 0.5)
    assert check.robot_value == pytest.approx(1.0)
    assert check.bound_tv == pytest.approx(1.0)
    assert check.holds


def test_bound_suite_small():
    report = diagnostics.bound_suite(seed=3, trials=10, max_size=4)
    assert report.violations == 0
    assert report.max_excess <= 1e-8


def test_equivalence_suite_small():
    report = diagnostics.equivalence_suite(seed=1, trials=12, max_size=4)
    assert report.failures == []
    assert report.max_gap <= 1e-7
    assert report.reconstruction_gap <= 1e-9
    assert report.passed()


def test_equivalence_suite_deterministic():
    first = diagnostics.equivalence_suite(seed=5, trials=4, max_size=3)
    second = diagnostics.equivalence_suite(seed=5, trials=4, max_size=3)
    assert first.gap_f1_f2 == second.gap_f1_f2
    assert first.reconstruction_gap == second.reconstruction_gap


def test_equivalence_suite_validation():
    with pytest.raises(InvalidInputError):
        diagnostics.equivalence_suite(trials=0)
    with pytest.raises(InvalidInputError):
        diagnostics.equivalence_suite(max_size=1)


def test_entropic_solution_approaches_exact():
    report = diagnostics.entropic_convergence(seed=0, n=6, alphas=(1.0, 0.01))
    assert report.plan_distances[1] < report.plan_distances[0]
    assert report.lam > 0


def test_monotonicity_suite_small():
    report = diagnostics.monotonicity_suite(seed=0, instances=3, size=8, grid=(0.25, 1.0, 4.0))
    assert report.pairs == 6
    assert 0.0 <= report.violation_rate <= 1.0


def test_gradient_check():
    assert diagnostics.gradient_check(seed=1, trials=5) <= 1e-5


def test_mean_estimation_study_rows():
    sgd = SgdConfig(outer_iters=20, inner_iters=3)
    study = diagnostics.mean_estimation_study(lambdas=(0.5, math.inf), seeds=(0, 1), n=40, d=2,
                                              sgd=sgd)
    assert [(r['lambda'], r['seed']) for r in study.rows] == [(0.5, 0), (0.5, 1), (math.inf, 0), (math.inf, 1)]
    assert set(study.medians) == {0.5, math.inf}
    assert "inf" in study.to_dict()['medians']


def test_mean_estimation_study_rejects_unknown_family():
    with pytest.raises(InvalidInputError):
        diagnostics.mean_estimation_study(contamination="laplace")


def test_detection_accuracy_small():
    result = diagnostics.detection_accuracy(seeds=(0,), n_clean=60, n_out=15, separation=8.0)
    assert result.rows[0]['flagged'] >= 15
    assert result.min_accuracy >= 0.9


def test_equivalence_suite_checks_f1_solutions():
    report = diagnostics.equivalence_suite(seed=2, trials=8, max_size=4)
    assert report.f1_violation <= 1e-9
    assert 'f1_violation' in report.to_dict()
    assert not diagnostics.EquivalenceReport(trials=1, f1_violation=1e-3).passed()


def test_convergence_report_serializes_infinite_lambda():
    report = diagnostics.entropic_convergence(seed=0, n=4, lam=math.inf, alphas=(1.0, 0.1))
    out = report.to_dict()
    assert out['lam'] == "inf"
    json.dumps(out, allow_nan=False)
