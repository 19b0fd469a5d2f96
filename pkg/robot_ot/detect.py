"""
Outlier Detection
=================

Flags points of a contaminated sample whose whole mass ROBOT moves into the
slack when transporting to a clean reference:

    outliers = { i : mu(i) + s1(i) < threshold }

with s1 read off the Formulation-2 plan of the truncated cost. Also holds
the matched-cost percentile heuristic for choosing lambda and a scan over
a lambda grid that reports whether the outlier sets are nested.

Usage:
    result = detect_outliers(contaminated, clean, CostSpec(), lam=1.0)
    lam = select_lambda(clean, percentile=99, seed=0)
    report = scan_lambda(contaminated, clean, CostSpec(), [0.1, 0.5, 1.0])
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple, List, Sequence, Dict, Any

import numpy as np

from .core import DiscreteMeasure, InvalidInputError, check_lambda, make_measure, worker_count
from .cost import CostSpec, cost_matrix, truncate
from .lp_exact import solve_transport
from .reconstruct import f2_to_f1_slacks, DEFAULT_GATE
from .sinkhorn import SinkhornConfig, sinkhorn_solve

logger = logging.getLogger(__name__)

METHODS = ("exact", "sinkhorn")
EXACT_THRESHOLD = 1e-9
PLAN_SUPPORT_TOL = 1e-12
LAMBDA_FLOOR = 1e-6


@dataclass
class DetectConfig:
    """Solver settings for detect_outliers."""
    method: str = "exact"
    alpha: float = 0.01
    threshold: Optional[float] = None  # None: 1e-9 (exact) or 1/n^2 (sinkhorn)
    tol: float = 1e-9
    max_iter: int = 10000
    epsilon_scaling: bool = True

    def validate(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.threshold is not None and not (self.threshold > 0):
            raise InvalidInputError(f"threshold must be > 0, got {self.threshold}")
        if self.method == "sinkhorn":
            self.sinkhorn.validate()

    @property
    def sinkhorn(self) -> SinkhornConfig:
        return SinkhornConfig(alpha=self.alpha, tol=self.tol, max_iter=self.max_iter,
                              epsilon_scaling=self.epsilon_scaling)

    def threshold_for(self, n: int) -> float:
        if self.threshold is not None:
            return self.threshold
        return EXACT_THRESHOLD if self.method == "exact" else 1.0 / n ** 2


@dataclass(frozen=True)
class DetectionResult:
    """Detected outliers (0-based indices into the contaminated support)."""
    outlier_indices: Tuple[int, ...]
    s1: np.ndarray
    lam: float
    method: str
    threshold: float

    @property
    def count(self) -> int:
        return len(self.outlier_indices)

    def mask(self) -> np.ndarray:
        out = np.zeros(self.s1.size, dtype=bool)
        out[list(self.outlier_indices)] = True
        return out


def detect_outliers(contaminated: DiscreteMeasure, clean: DiscreteMeasure,
                    spec: CostSpec = CostSpec(), lam: float = 0.5,
                    method: Optional[str] = None, alpha: Optional[float] = None,
                    config: Optional[DetectConfig] = None) -> DetectionResult:
    """
    Outlier indices of contaminated relative to clean at truncation lam.

    method/alpha override the corresponding fields of config.
    """
    lam = check_lambda(lam)
    config = DetectConfig() if config is None else DetectConfig(**vars(config))
    if method is not None:
        config.method = method
    if alpha is not None:
        config.alpha = alpha
    config.validate()

    C = cost_matrix(contaminated.points, clean.points, spec)
    C_trunc = truncate(C, lam)
    if config.method == "exact":
        plan, _ = solve_transport(contaminated, clean, C_trunc)
        gate = DEFAULT_GATE
    else:
        sk = config.sinkhorn
        plan, _ = sinkhorn_solve(contaminated, clean, C_trunc, config=sk)
        gate = max(sk.tol, DEFAULT_GATE)
    s1, _ = f2_to_f1_slacks(plan, C, lam, gate=gate)

    threshold = config.threshold_for(contaminated.n)
    remaining = contaminated.weights + s1
    flagged = tuple(int(i) for i in np.flatnonzero(remaining < threshold))
    logger.info(f"Detected {len(flagged)}/{contaminated.n} outliers at lambda={lam:g} "
                f"({config.method}, threshold={threshold:.1e})")
    return DetectionResult(flagged, s1, lam, config.method, threshold)


def select_lambda(clean: DiscreteMeasure, subsample_size: Optional[int] = None,
                  percentile: float = 99.0, spec: CostSpec = CostSpec(), seed: int = 0) -> float:
    """
    Half the given percentile of matched costs between two disjoint random
    halves of the clean data, floored at LAMBDA_FLOOR.
    """
    n = clean.n
    if n < 2:
        raise InvalidInputError(f"need at least 2 clean points to split, got {n}")
    size = n // 2 if subsample_size is None else int(subsample_size)
    if not (1 <= size <= n // 2):
        raise InvalidInputError(f"subsample_size must lie in [1, {n // 2}], got {size}")
    if not (0 < percentile <= 100):
        raise InvalidInputError(f"percentile must lie in (0, 100], got {percentile}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    first = make_measure(clean.points[order[:size]])
    second = make_measure(clean.points[order[size:2 * size]])
    C = cost_matrix(first.points, second.points, spec)
    plan, _ = solve_transport(first, second, C)

    matched = C.values[plan.mass > PLAN_SUPPORT_TOL]
    lam = max(float(np.percentile(matched, percentile)) / 2.0, LAMBDA_FLOOR)
    logger.info(f"Selected lambda={lam:.6g} from {matched.size} matched pairs "
                f"(subsample {size}, percentile {percentile:g})")
    return lam


@dataclass
class ScanReport:
    """Outlier sets along an ascending lambda grid and their nesting."""
    lambdas: List[float]
    outlier_sets: List[Tuple[int, ...]]
    nested: List[bool] = field(default_factory=list)  # one per adjacent pair

    @property
    def violations(self) -> List[Dict[str, Any]]:
        out = []
        for k, ok in enumerate(self.nested):
            if not ok:
                extra = sorted(set(self.outlier_sets[k + 1]) - set(self.outlier_sets[k]))
                out.append({'lambda_a': self.lambdas[k], 'lambda_b': self.lambdas[k + 1],
                            'not_nested': extra})
        return out

    @property
    def violation_rate(self) -> float:
        return sum(not ok for ok in self.nested) / len(self.nested) if self.nested else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambdas': [lam if math.isfinite(lam) else "inf" for lam in self.lambdas],
            'outlier_sets': [list(s) for s in self.outlier_sets],
            'nested': list(self.nested),
            'violations': [{**v, 'lambda_b': v['lambda_b'] if math.isfinite(v['lambda_b']) else "inf"}
                           for v in self.violations],
            'violation_rate': self.violation_rate,
        }


def scan_lambda(contaminated: DiscreteMeasure, clean: DiscreteMeasure,
                spec: CostSpec, grid: Sequence[float], method: Optional[str] = None,
                config: Optional[DetectConfig] = None) -> ScanReport:
    """Run detect_outliers for every lambda in an ascending grid and check nesting."""
    lambdas = [check_lambda(lam) for lam in grid]
    if len(lambdas) < 2:
        raise InvalidInputError("lambda grid needs at least 2 values")
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidInputError("lambda grid must be strictly ascending")

    def run(lam):
        return detect_outliers(contaminated, clean, spec, lam, method=method, config=config)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(run, lambdas))

    sets = [r.outlier_indices for r in results]
    nested = [set(b) <= set(a) for a, b in zip(sets, sets[1:])]
    report = ScanReport(lambdas, sets, nested)
    if report.violations:
        logger.warning(f"Outlier sets not nested on {len(report.violations)} of {len(nested)} pairs")
    return report
