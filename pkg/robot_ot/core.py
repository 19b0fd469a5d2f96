"""
Core Domain Types
=================

Measures, cost matrices, transport plans and solver reports shared by every
solver in the package, plus the exception hierarchy and elementary measure
arithmetic.

All types are immutable after construction: array fields are copied and
flagged read-only, so instances can be shared freely between threads.
"""

import os
import math
import logging
from dataclasses import dataclass, field, asdict
from typing import Optional, Dict, Any

import numpy as np

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12
MASS_TOL = 1e-9
THREADS_ENV = "ROBOT_NUM_THREADS"


# ==================== Errors ====================

class RobotError(Exception):
    """Base class for every error raised by robot_ot."""


class InvalidInputError(RobotError, ValueError):
    """A precondition on the inputs does not hold."""


class SolverError(RobotError):
    """A solver failed (infeasible, unbounded, pivot limit, backend warning)."""


class ReconstructionError(SolverError):
    """An F2 plan is too far from its marginals to be mapped to F1."""


class DataFormatError(RobotError):
    """Input data file could not be parsed."""


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def check_lambda(lam: float, allow_inf: bool = True) -> float:
    """Validate a truncation level; returns it as float."""
    try:
        lam = float(lam)
    except (TypeError, ValueError):
        raise InvalidInputError(f"lambda must be a real number, got {lam!r}")
    if math.isnan(lam) or lam <= 0:
        raise InvalidInputError(f"lambda must be > 0, got {lam}")
    if math.isinf(lam) and not allow_inf:
        raise InvalidInputError("lambda must be finite for this solver")
    return lam


# ==================== Domain types ====================

@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point cloud on R^d."""
    points: np.ndarray  # (n, d)
    weights: np.ndarray  # (n,), on the simplex

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise InvalidInputError(f"points must be a non-empty n x d matrix, got shape {points.shape}")
        if weights.shape != (points.shape[0],):
            raise InvalidInputError(
                f"weights length {weights.shape} does not match {points.shape[0]} points")
        if np.any(weights < 0):
            raise InvalidInputError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidInputError(f"weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, 'points', _frozen(points))
        object.__setattr__(self, 'weights', _frozen(weights))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class CostMatrix:
    """Nonnegative n x m cost matrix with its ground cost and truncation level."""
    values: np.ndarray
    ground: str
    truncation: Optional[float] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidInputError(f"cost matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("cost matrix has non-finite entries")
        if np.any(values < 0):
            raise InvalidInputError("cost matrix must be nonnegative")
        if self.truncation is not None and math.isfinite(self.truncation):
            if np.any(values > 2 * self.truncation):
                raise InvalidInputError("truncated cost exceeds 2*lambda")
        object.__setattr__(self, 'values', _frozen(values))

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix with L1 deviations from its target marginals."""
    mass: np.ndarray
    row_residual: float = 0.0
    col_residual: float = 0.0

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.ndim != 2:
            raise InvalidInputError(f"plan must be 2-D, got shape {mass.shape}")
        if np.any(mass < 0):
            raise InvalidInputError("plan has negative entries")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise InvalidInputError(f"plan total mass {mass.sum()!r} is not 1")
        if self.row_residual < 0 or self.col_residual < 0:
            raise InvalidInputError("residuals must be nonnegative")
        object.__setattr__(self, 'mass', _frozen(mass))

    @classmethod
    def from_marginals(cls, mass: np.ndarray, mu: 'DiscreteMeasure',
                       nu: 'DiscreteMeasure') -> 'TransportPlan':
        """Build a plan and measure its marginal residuals against mu, nu."""
        mass = np.asarray(mass, dtype=np.float64)
        row_res, col_res = marginal_residuals(mass, mu.weights, nu.weights)
        return cls(mass, row_res, col_res)

    @property
    def shape(self):
        return self.mass.shape


@dataclass(frozen=True)
class RobotSolution:
    """
    Formulation-1 solution: augmented (n+m) x (n+m) plan and slacks.

    Only shapes are validated here. Sign, balance and marginal constraints
    are checked by reconstruct.check_f1_feasibility.
    """
    plan: np.ndarray
    s1: np.ndarray
    t1: np.ndarray
    objective: float
    lam: float

    def __post_init__(self):
        plan = np.asarray(self.plan, dtype=np.float64)
        s1 = np.asarray(self.s1, dtype=np.float64).ravel()
        t1 = np.asarray(self.t1, dtype=np.float64).ravel()
        size = s1.size + t1.size
        if plan.shape != (size, size):
            raise InvalidInputError(
                f"plan shape {plan.shape} does not match slacks ({s1.size} + {t1.size})")
        object.__setattr__(self, 'plan', _frozen(plan))
        object.__setattr__(self, 's1', _frozen(s1))
        object.__setattr__(self, 't1', _frozen(t1))
        object.__setattr__(self, 'objective', float(self.objective))
        object.__setattr__(self, 'lam', float(self.lam))

    @property
    def n(self) -> int:
        return self.s1.size

    @property
    def m(self) -> int:
        return self.t1.size

    @property
    def transport_block(self) -> np.ndarray:
        """Top-right n x m block: the mass actually transported."""
        return self.plan[:self.n, self.n:]

    @property
    def slack_l1(self) -> float:
        return float(np.abs(self.s1).sum() + np.abs(self.t1).sum())


@dataclass
class SolveReport:
    """Solver bookkeeping returned next to every solution."""
    objective: float
    iterations: int = 0
    row_residual: float = 0.0
    col_residual: float = 0.0
    converged: bool = True
    seconds: float = 0.0
    regularized_objective: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.iterations < 0:
            raise InvalidInputError("iterations must be >= 0")
        if self.row_residual < 0 or self.col_residual < 0:
            raise InvalidInputError("residuals must be >= 0")

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out.update(out.pop('extra'))
        return out


# ==================== Operations ====================

def make_measure(points, weights=None) -> DiscreteMeasure:
    """
    Build a DiscreteMeasure, defaulting to uniform weights.

    A 1-D points array is read as n points in dimension 1. Provided weights
    are renormalized to sum to one.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InvalidInputError("point set is empty")
    n = points.shape[0]
    if weights is None:
        return DiscreteMeasure(points, np.full(n, 1.0 / n))

    weights = np.asarray(weights, dtype=np.float64).ravel()
    if weights.size != n:
        raise InvalidInputError(f"got {weights.size} weights for {n} points")
    if not np.all(np.isfinite(weights)):
        raise InvalidInputError("weights must be finite")
    if np.any(weights < 0):
        raise InvalidInputError("weights must be nonnegative")
    total = weights.sum()
    if total <= 0:
        raise InvalidInputError("weights sum to zero")
    return DiscreteMeasure(points, weights / total)


def tv_distance(a, b) -> float:
    """Total-variation distance 0.5 * sum |a - b| on a common support."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.size} vs {b.size}")
    return 0.5 * float(np.abs(a - b).sum())


def marginal_residuals(mass: np.ndarray, row_target: np.ndarray, col_target: np.ndarray):
    """L1 deviations of a plan's row and column sums from the targets."""
    row = float(np.abs(mass.sum(axis=1) - row_target).sum())
    col = float(np.abs(mass.sum(axis=0) - col_target).sum())
    return row, col


def worker_count() -> int:
    """Thread-pool size for batch runs, from ROBOT_NUM_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if count < 1:
        raise InvalidInputError(f"{THREADS_ENV} must be >= 1, got {count}")
    return count
