import numpy as np
import pytest

from robot_ot.core import InvalidInputError
from robot_ot.datagen import gen_huber_gaussian, gen_huber_cauchy, gen_cluster_outliers


@pytest.mark.parametrize("generator", [gen_huber_gaussian, gen_huber_cauchy])
def test_no_contamination(generator):
    measure, mask = generator(200, 3, 0.0, np.zeros(3), np.full(3, 2.0), seed=1)
    assert measure.points.shape == (200, 3)
    assert not mask.any()


@pytest.mark.parametrize("generator", [gen_huber_gaussian, gen_huber_cauchy])
def test_seed_determinism(generator):
    a, mask_a = generator(50, 2, 0.2, 0.0, 2.0, seed=7)
    b, mask_b = generator(50, 2, 0.2, 0.0, 2.0, seed=7)
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(mask_a, mask_b)


def test_contaminated_fraction_centered_on_eta1():
    n, d, eps = 10_000, 5, 0.2
    measure, mask = gen_huber_gaussian(n, d, eps, np.zeros(d), np.full(d, 2.0), seed=3)
    outliers = measure.points[mask]
    stderr = 1.0 / np.sqrt(outliers.shape[0])
    assert np.all(np.abs(outliers.mean(axis=0) - 2.0) < 3 * stderr + 1e-12)

    expected, sd = n * eps, np.sqrt(n * eps * (1 - eps))
    assert abs(mask.sum() - expected) < 5 * sd


def test_cauchy_clean_median_near_eta0():
    measure, mask = gen_huber_cauchy(5000, 3, 0.2, np.full(3, 1.0), np.full(3, 2.0), seed=4)
    median = np.median(measure.points[~mask], axis=0)
    np.testing.assert_allclose(median, 1.0, atol=0.1)


def test_fixed_count_mode():
    _, mask = gen_huber_gaussian(101, 2, 0.2, 0.0, 2.0, seed=0, fixed_count=True)
    assert mask.sum() == 20


@pytest.mark.parametrize("eps", [-0.1, 1.0])
def test_invalid_eps(eps):
    with pytest.raises(InvalidInputError):
        gen_huber_gaussian(10, 2, eps, 0.0, 2.0)


def test_location_length_checked():
    with pytest.raises(InvalidInputError):
        gen_huber_gaussian(10, 3, 0.1, np.zeros(2), 2.0)


def test_cluster_outliers():
    contaminated, clean, mask = gen_cluster_outliers(80, 20, 2, 6.0, seed=5)
    assert contaminated.n == 100 and clean.n == 80
    assert mask.sum() == 20
    # outliers sit around separation * 1
    np.testing.assert_allclose(contaminated.points[mask].mean(axis=0), 6.0, atol=1.0)
    np.testing.assert_allclose(contaminated.points[~mask].mean(axis=0), 0.0, atol=0.5)

    again = gen_cluster_outliers(80, 20, 2, 6.0, seed=5)
    np.testing.assert_array_equal(contaminated.points, again[0].points)
    np.testing.assert_array_equal(clean.points, again[1].points)


def test_cluster_reference_size_and_separation():
    _, clean, _ = gen_cluster_outliers(10, 2, 1, 3.0, seed=0, n_reference=4)
    assert clean.n == 4
    with pytest.raises(InvalidInputError):
        gen_cluster_outliers(10, 2, 1, 0.0)
