"""
Synthetic Data
==============

Seeded generators for the contamination families used by the experiments:

- Huber Gaussian:  (1 - eps) N(eta0, I) + eps N(eta1, I)
- Huber Cauchy:    same mixture with independent standard-Cauchy coordinates
- Clusters:        N(0, I) inliers plus N(separation * 1, I) outliers, with a
                   separate clean reference sample

Every generator returns the ground-truth contamination mask next to the data.
"""

import logging
from typing import Tuple, Optional

import numpy as np

from .core import DiscreteMeasure, InvalidInputError, make_measure

logger = logging.getLogger(__name__)


def _check_eps(eps: float):
    if not (0.0 <= eps < 1.0):
        raise InvalidInputError(f"eps must lie in [0, 1), got {eps}")


def _location(vec, d: int, name: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64).ravel()
    if vec.size == 1:
        vec = np.full(d, vec[0])
    if vec.size != d:
        raise InvalidInputError(f"{name} has length {vec.size}, expected d={d}")
    return vec


def _contamination_mask(rng: np.random.Generator, n: int, eps: float, fixed_count: bool) -> np.ndarray:
    if fixed_count:
        mask = np.zeros(n, dtype=bool)
        mask[rng.permutation(n)[:int(np.floor(eps * n))]] = True
        return mask
    return rng.random(n) < eps


def _huber(n, d, eps, eta0, eta1, seed, fixed_count, sampler) -> Tuple[DiscreteMeasure, np.ndarray]:
    _check_eps(eps)
    if n < 1 or d < 1:
        raise InvalidInputError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    eta0 = _location(eta0, d, "eta0")
    eta1 = _location(eta1, d, "eta1")
    rng = np.random.default_rng(seed)

    mask = _contamination_mask(rng, n, eps, fixed_count)
    noise = sampler(rng, (n, d))
    points = noise + np.where(mask[:, None], eta1, eta0)
    logger.debug(f"Generated {n} points in d={d}, {int(mask.sum())} contaminated")
    return make_measure(points), mask


def gen_huber_gaussian(n: int, d: int, eps: float, eta0, eta1, seed: int = 0,
                       fixed_count: bool = False) -> Tuple[DiscreteMeasure, np.ndarray]:
    """Huber Gaussian sample; points contaminated independently with probability eps."""
    return _huber(n, d, eps, eta0, eta1, seed, fixed_count,
                  lambda rng, shape: rng.standard_normal(shape))


def gen_huber_cauchy(n: int, d: int, eps: float, eta0, eta1, seed: int = 0,
                     fixed_count: bool = False) -> Tuple[DiscreteMeasure, np.ndarray]:
    """Huber Cauchy sample with independent standard-Cauchy coordinates."""
    return _huber(n, d, eps, eta0, eta1, seed, fixed_count,
                  lambda rng, shape: rng.standard_cauchy(shape))


def gen_cluster_outliers(n_clean: int, n_out: int, d: int, separation: float, seed: int = 0,
                         n_reference: Optional[int] = None
                         ) -> Tuple[DiscreteMeasure, DiscreteMeasure, np.ndarray]:
    """
    Contaminated sample of n_clean inliers and n_out outliers (shuffled),
    plus an independent clean reference of n_reference points (default n_clean).
    """
    if not (separation > 0):
        raise InvalidInputError(f"separation must be > 0, got {separation}")
    if n_clean < 1 or n_out < 0 or d < 1:
        raise InvalidInputError("need n_clean >= 1, n_out >= 0, d >= 1")
    n_reference = n_clean if n_reference is None else n_reference
    if n_reference < 1:
        raise InvalidInputError("clean reference must be non-empty")
    rng = np.random.default_rng(seed)

    inliers = rng.standard_normal((n_clean, d))
    outliers = rng.standard_normal((n_out, d)) + separation
    points = np.vstack([inliers, outliers])
    mask = np.concatenate([np.zeros(n_clean, dtype=bool), np.ones(n_out, dtype=bool)])
    order = rng.permutation(points.shape[0])
    reference = rng.standard_normal((n_reference, d))

    logger.debug(f"Generated clusters: {n_clean} inliers, {n_out} outliers at separation {separation:g}")
    return make_measure(points[order]), make_measure(reference), mask[order]
