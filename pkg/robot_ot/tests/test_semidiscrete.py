import numpy as np
import pytest

from robot_ot.core import InvalidInputError, make_measure
from robot_ot.semidiscrete import SgdConfig, dual_inner_update, theta_gradient, estimate_mean


def test_inner_update_fixed_point():
    v = np.zeros(3)
    w = np.full(3, 1 / 3)
    v_tilde, v_bar = dual_inner_update(v, v, np.zeros(3), w, alpha=0.5, gamma=1.0, step=1)
    np.testing.assert_allclose(v_tilde, 0.0, atol=1e-15)
    np.testing.assert_allclose(v_bar, 0.0, atol=1e-15)


def test_inner_update_two_points():
    v = np.zeros(2)
    v_tilde, v_bar = dual_inner_update(v, v, np.array([0.0, 1.0]), np.array([0.5, 0.5]),
                                       alpha=1.0, gamma=1.0, step=1)
    np.testing.assert_allclose(v_tilde, [-0.2311, 0.2311], atol=1e-4)
    np.testing.assert_allclose(v_bar, v_tilde)


def test_inner_update_zero_step_is_noop():
    v = np.array([0.3, -0.1])
    v_tilde, _ = dual_inner_update(v, v, np.array([0.0, 1.0]), np.array([0.5, 0.5]),
                                   alpha=1.0, gamma=0.0, step=1)
    np.testing.assert_array_equal(v_tilde, v)


def test_inner_update_running_average():
    v_bar = np.array([1.0, 1.0])
    v_tilde, v_bar = dual_inner_update(np.zeros(2), v_bar, np.zeros(2), np.array([0.5, 0.5]),
                                       alpha=1.0, gamma=1.0, step=4)
    np.testing.assert_allclose(v_bar, [0.75, 0.75])


def test_inner_update_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        dual_inner_update(np.zeros(2), np.zeros(3), np.zeros(2), np.full(2, 0.5), 1.0, 1.0, 1)
    with pytest.raises(InvalidInputError):
        dual_inner_update(np.zeros(2), np.zeros(2), np.zeros(2), np.full(2, 0.5), 1.0, 1.0, 0)


def test_gradient_vanishes_at_matched_sample():
    X = np.array([[0.0, 1.0], [2.0, 3.0]])
    np.testing.assert_allclose(theta_gradient(X[1], np.array([0.0, 1.0]), X), 0.0)


def test_gradient_of_truncated_sample_is_zero():
    X = np.array([[0.0], [2.0]])
    np.testing.assert_allclose(theta_gradient(np.array([7.0]), np.zeros(2), X), 0.0)


def test_gradient_symmetric_pull_cancels():
    X = np.array([[0.0], [2.0]])
    np.testing.assert_allclose(theta_gradient(np.array([1.0]), np.array([0.5, 0.5]), X), [0.0])


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((6, 3))
    Pi = rng.uniform(0, 1, 6) / 6
    noise = rng.standard_normal(3)
    theta = rng.standard_normal(3)

    def objective(th):
        return float(np.sum(Pi * np.sum((X - (noise + th)) ** 2, axis=1)))

    h = 1e-5
    numeric = np.array([(objective(theta + h * e) - objective(theta - h * e)) / (2 * h)
                        for e in np.eye(3)])
    np.testing.assert_allclose(theta_gradient(noise + theta, Pi, X), numeric, rtol=1e-5, atol=1e-8)


def test_gradient_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        theta_gradient(np.zeros(2), np.zeros(3), np.zeros((3, 3)))


@pytest.mark.parametrize("kwargs", [
    dict(lam=0.0), dict(alpha=-1.0), dict(tau=0.0), dict(gamma=0.0),
    dict(outer_iters=0), dict(inner_iters=0), dict(noise="laplace"),
])
def test_config_validation(kwargs):
    with pytest.raises(InvalidInputError):
        SgdConfig(**kwargs).validate()


def test_single_point_stays_near_its_location():
    x0 = np.array([1.0, -2.0])
    data = make_measure(x0[None, :])
    cfg = SgdConfig(lam=1e6, outer_iters=100, inner_iters=5, tau=0.01, theta_init=x0, seed=3)
    trace = estimate_mean(data, cfg)
    assert trace.thetas.shape == (100, 2)
    assert np.max(np.linalg.norm(trace.thetas - x0, axis=1)) < 1.0


def test_estimate_mean_is_deterministic():
    rng = np.random.default_rng(1)
    data = make_measure(rng.standard_normal((30, 2)))
    cfg = SgdConfig(outer_iters=40, inner_iters=5, seed=11)
    first = estimate_mean(data, cfg)
    second = estimate_mean(data, cfg)
    np.testing.assert_array_equal(first.thetas, second.thetas)
    np.testing.assert_array_equal(first.dual, second.dual)


def test_seed_changes_trace():
    rng = np.random.default_rng(1)
    data = make_measure(rng.standard_normal((30, 2)))
    a = estimate_mean(data, SgdConfig(outer_iters=20, inner_iters=3, seed=1))
    b = estimate_mean(data, SgdConfig(outer_iters=20, inner_iters=3, seed=2))
    assert not np.array_equal(a.thetas, b.thetas)


def test_default_start_is_coordinate_median():
    data = make_measure(np.array([[0.0, 10.0], [1.0, 20.0], [50.0, 30.0]]))
    cfg = SgdConfig(outer_iters=1, inner_iters=1, tau=1e-12)
    trace = estimate_mean(data, cfg)
    np.testing.assert_allclose(trace.theta, [1.0, 20.0], atol=1e-6)


def test_truncation_drops_far_mass():
    # all data far away from theta: every cost exceeds 2*lambda
    data = make_measure(np.array([[100.0], [101.0]]))
    cfg = SgdConfig(lam=0.5, outer_iters=10, inner_iters=2, theta_init=np.zeros(1))
    trace = estimate_mean(data, cfg)
    np.testing.assert_array_equal(trace.kept_mass, 0.0)
    np.testing.assert_allclose(trace.theta, [0.0])


def test_infinite_lambda_and_cauchy_noise_run():
    rng = np.random.default_rng(2)
    data = make_measure(rng.standard_normal((20, 3)))
    trace = estimate_mean(data, SgdConfig(lam=float('inf'), outer_iters=10, inner_iters=2,
                                          noise="cauchy", tau=0.01))
    assert np.all(np.isfinite(trace.thetas))
    np.testing.assert_allclose(trace.kept_mass, 1.0)


def test_theta_init_dimension_checked():
    data = make_measure(np.zeros((3, 2)))
    with pytest.raises(InvalidInputError):
        estimate_mean(data, SgdConfig(theta_init=np.zeros(3), outer_iters=1))


def test_trace_error():
    data = make_measure(np.array([[3.0, 4.0]]))
    trace = estimate_mean(data, SgdConfig(outer_iters=1, inner_iters=1, tau=1e-12))
    assert trace.error([0.0, 0.0]) == pytest.approx(5.0, abs=1e-6)
