"""
Full-scale acceptance runs. Deselected by default; run with `pytest -m slow`.
"""

import math

import pytest

from robot_ot import diagnostics

pytestmark = pytest.mark.slow


def test_formulations_agree():
    report = diagnostics.equivalence_suite(seed=1, trials=200, max_size=8)
    assert report.failures == []
    assert report.max_gap <= 1e-7
    assert report.reconstruction_gap <= 1e-9


def test_contamination_bounds_hold():
    report = diagnostics.bound_suite(seed=0, trials=100, max_size=10)
    assert report.violations == 0


def test_entropic_plans_converge():
    report = diagnostics.entropic_convergence(seed=0, n=10)
    assert report.monotone
    assert report.plan_distances[-1] <= 1e-2
    assert report.slack_distances[-1] <= 1e-2


def test_gaussian_contamination_mean_estimate():
    study = diagnostics.mean_estimation_study(lambdas=(0.5, math.inf), seeds=range(10),
                                              n=1000, d=5, eps=0.2, eta1=2.0)
    medians = study.medians
    assert medians[0.5] <= 0.25
    assert medians[math.inf] >= 2 * medians[0.5]


def test_cauchy_contamination_mean_estimate():
    study = diagnostics.mean_estimation_study(lambdas=(0.5,), seeds=range(10), n=1000, d=5,
                                              eps=0.2, eta1=2.0, contamination="cauchy")
    assert study.medians[0.5] <= 0.4


@pytest.mark.parametrize("method", ["exact", "sinkhorn"])
def test_cluster_detection_accuracy(method):
    result = diagnostics.detection_accuracy(seeds=range(5), method=method)
    assert result.min_accuracy >= 0.95


def test_lambda_scan_mostly_nested():
    report = diagnostics.monotonicity_suite(seed=0, instances=100, size=20)
    assert report.violation_rate <= 0.02


def test_theta_gradient_matches_finite_differences():
    assert diagnostics.gradient_check(seed=0, trials=50) <= 1e-5
