"""
Robust Mean Estimation
======================

Semi-discrete ROBOT with the shift generator g_theta(x) = x + theta.

Each outer step draws one generator sample z, runs a few stochastic
ascent steps on the entropic semi-discrete dual over the data support
(truncated costs), reads the soft assignment of z off the averaged dual,
zeroes the truncated entries and takes a gradient step on theta.

Noise comes from numpy's PCG64 generator (np.random.default_rng(seed)),
one draw per outer step.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import softmax

from .core import DiscreteMeasure, InvalidInputError
from .cost import CostSpec, CostKind

logger = logging.getLogger(__name__)

NOISE_FAMILIES = ("gaussian", "cauchy")


@dataclass
class SgdConfig:
    """Algorithm settings; lam may be inf for the untruncated baseline."""
    lam: float = 0.5
    alpha: float = 0.05
    outer_iters: int = 2000
    inner_iters: int = 20
    tau: float = 0.05
    gamma: float = 0.5
    seed: int = 7
    theta_init: Optional[np.ndarray] = None  # None: coordinate-wise median of the data
    noise: str = "gaussian"
    log_every: int = 500

    def validate(self):
        if math.isnan(self.lam) or self.lam <= 0:
            raise InvalidInputError(f"lambda must be > 0, got {self.lam}")
        if not (self.alpha > 0):
            raise InvalidInputError(f"alpha must be > 0, got {self.alpha}")
        if not (self.tau > 0) or not (self.gamma > 0):
            raise InvalidInputError("step sizes tau and gamma must be > 0")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise InvalidInputError("outer_iters and inner_iters must be >= 1")
        if self.noise not in NOISE_FAMILIES:
            raise InvalidInputError(f"noise must be one of {NOISE_FAMILIES}, got {self.noise!r}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise InvalidInputError("seed must be a 64-bit unsigned integer")

    @property
    def truncated(self) -> bool:
        return math.isfinite(self.lam)


@dataclass
class EstimateTrace:
    """theta after every outer step, the final theta and the averaged dual."""
    thetas: np.ndarray  # (M, d)
    theta: np.ndarray  # (d,)
    dual: np.ndarray  # (n,)
    kept_mass: np.ndarray = field(default_factory=lambda: np.zeros(0))  # sum of Pi after zeroing, per step

    def __post_init__(self):
        if self.thetas.ndim != 2 or self.thetas.shape[1] != self.theta.size:
            raise InvalidInputError("trace must be M x d")

    def error(self, true_mean) -> float:
        return float(np.linalg.norm(self.theta - np.asarray(true_mean, dtype=np.float64)))


def dual_inner_update(v_tilde: np.ndarray, v_bar: np.ndarray, c: np.ndarray,
                      weights: np.ndarray, alpha: float, gamma: float,
                      step: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    One stochastic ascent step on the semi-discrete dual.

    step is the global (1-based) count of inner updates so far; the running
    average is v_bar' = v_tilde'/step + (step - 1)/step * v_bar.
    """
    if not (v_tilde.shape == v_bar.shape == c.shape == weights.shape):
        raise InvalidInputError("dual, cost and weight vectors must share length n")
    if step < 1:
        raise InvalidInputError("step counts from 1")
    u = softmax((v_tilde - c) / alpha)
    v_tilde = v_tilde + gamma * (weights - u)
    v_bar = v_tilde / step + (step - 1) / step * v_bar
    if not np.all(np.isfinite(v_tilde)):
        raise InvalidInputError("dual update produced non-finite values")
    return v_tilde, v_bar


def theta_gradient(z: np.ndarray, Pi: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Gradient 2 * (z * sum(Pi) - X^T Pi) of sum_k Pi(k) |X_k - z|^2 w.r.t. theta."""
    z = np.asarray(z, dtype=np.float64).ravel()
    Pi = np.asarray(Pi, dtype=np.float64).ravel()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape != (Pi.size, z.size):
        raise InvalidInputError(f"expected X of shape ({Pi.size}, {z.size}), got {X.shape}")
    return 2.0 * (z * Pi.sum() - X.T @ Pi)


def _draw(rng: np.random.Generator, noise: str, d: int) -> np.ndarray:
    if noise == "cauchy":
        return rng.standard_cauchy(d)
    return rng.standard_normal(d)


def estimate_mean(data: DiscreteMeasure, cfg: SgdConfig) -> EstimateTrace:
    """Robust location estimate of data with the shift generator."""
    cfg.validate()
    X = data.points
    n, d = X.shape
    weights = data.weights
    spec = CostSpec(CostKind.SQUARED_EUCLIDEAN)

    if cfg.theta_init is None:
        theta = np.median(X, axis=0)
    else:
        theta = np.asarray(cfg.theta_init, dtype=np.float64).ravel().copy()
        if theta.size != d:
            raise InvalidInputError(f"theta_init has length {theta.size}, data has d={d}")

    rng = np.random.default_rng(int(cfg.seed))
    cap = 2.0 * cfg.lam
    v_tilde = np.zeros(n)
    v_bar = np.zeros(n)
    thetas = np.empty((cfg.outer_iters, d))
    kept = np.empty(cfg.outer_iters)
    step = 0

    logger.info(f"Estimating mean: n={n}, d={d}, lambda={cfg.lam:g}, alpha={cfg.alpha:g}, "
                f"M={cfg.outer_iters}, L={cfg.inner_iters}, noise={cfg.noise}")
    for j in range(cfg.outer_iters):
        z = _draw(rng, cfg.noise, d) + theta
        raw = spec.pairwise(X, z[None, :])[:, 0]
        c = np.minimum(raw, cap)

        for _ in range(cfg.inner_iters):
            step += 1
            v_tilde, v_bar = dual_inner_update(v_tilde, v_bar, c, weights,
                                               cfg.alpha, cfg.gamma, step)

        Pi = softmax((v_bar - c) / cfg.alpha)
        if cfg.truncated:
            Pi[raw > cap] = 0.0

        theta = theta - cfg.tau * theta_gradient(z, Pi, X)
        thetas[j] = theta
        kept[j] = Pi.sum()

        if cfg.log_every and (j + 1) % cfg.log_every == 0:
            logger.debug(f"Outer step {j + 1}/{cfg.outer_iters}: theta={np.round(theta, 4)}, "
                         f"kept mass={kept[j]:.3f}")

    logger.info(f"Final theta: {np.round(theta, 6)}")
    return EstimateTrace(thetas=thetas, theta=theta.copy(), dual=v_bar.copy(), kept_mass=kept)
