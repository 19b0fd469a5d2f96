"""
Diagnostics
===========

Executable checks of the ROBOT theory, used as oracles by the test suite and
by `robot bench`:

- robot_upper_bounds / bound_suite: the contamination upper bounds
- equivalence_suite: Formulations 1-4 share one optimal value and the
  F2 -> F1 reconstruction is exact
- entropic_convergence: entropic solutions approach the exact one as alpha -> 0
- monotonicity_suite: outlier sets nest along ascending lambda
- mean_estimation_study: robust mean error per lambda and seed
- gradient_check: theta gradient against central differences
- detection_accuracy: outlier classification on separated clusters

Every suite is seeded through np.random.SeedSequence; trials run on a thread
pool (ROBOT_NUM_THREADS) and are aggregated in trial order.
"""

import math
import time
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import List, Dict, Any, Sequence, Tuple, Optional, Callable

import numpy as np

from .core import (DiscreteMeasure, InvalidInputError, RobotError, make_measure,
                   tv_distance, worker_count)
from .cost import CostSpec, cost_matrix, truncate
from .lp_exact import solve_transport, solve_f1, solve_f3, solve_f4, vanilla_ot
from .reconstruct import f2_to_f1, check_f1_feasibility
from .sinkhorn import SinkhornConfig, robot_sinkhorn
from .semidiscrete import SgdConfig, estimate_mean, theta_gradient
from .detect import DetectConfig, detect_outliers, select_lambda, scan_lambda
from .datagen import gen_huber_gaussian, gen_huber_cauchy, gen_cluster_outliers

logger = logging.getLogger(__name__)

SUPPORT_TOL = 1e-12
BOUND_SLACK = 1e-8


def _map_trials(fn: Callable, items: Sequence) -> List:
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(fn, items))


def _child_rngs(seed: int, count: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _child_seeds(seed: int, count: int) -> List[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _json_float(value: float):
    return value if math.isfinite(value) else "inf"


# ==================== Union support ====================

def union_support(*measures: DiscreteMeasure) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Merge the supports of several measures (coordinates equal within
    SUPPORT_TOL are one point) and embed each measure's weights on it.
    """
    if not measures:
        raise InvalidInputError("need at least one measure")
    d = measures[0].d
    if any(m.d != d for m in measures):
        raise InvalidInputError("measures live in different dimensions")

    support: List[np.ndarray] = []
    index_maps = []
    for measure in measures:
        indices = []
        for point in measure.points:
            for k, existing in enumerate(support):
                if np.all(np.abs(existing - point) <= SUPPORT_TOL):
                    indices.append(k)
                    break
            else:
                support.append(point)
                indices.append(len(support) - 1)
        index_maps.append(indices)

    points = np.vstack(support)
    embedded = []
    for measure, indices in zip(measures, index_maps):
        weights = np.zeros(points.shape[0])
        np.add.at(weights, indices, measure.weights)
        embedded.append(weights)
    return points, embedded


def contaminate(mu: DiscreteMeasure, mu_c: DiscreteMeasure, eps: float) -> DiscreteMeasure:
    """(1 - eps) mu + eps mu_c on the merged support, zero-weight points dropped."""
    if not (0.0 <= eps < 1.0):
        raise InvalidInputError(f"eps must lie in [0, 1), got {eps}")
    points, (w_mu, w_c) = union_support(mu, mu_c)
    weights = (1.0 - eps) * w_mu + eps * w_c
    keep = weights > 0
    return make_measure(points[keep], weights[keep])


# ==================== Upper bounds ====================

@dataclass
class BoundCheck:
    """ROBOT value of a contaminated measure against its three upper bounds."""
    robot_value: float
    bound_clean: float  # OT(mu, nu) + 2 lambda eps tv(mu, mu_c)
    bound_tv: float  # 2 lambda tv(mu_tilde, nu)
    bound_ot: float  # OT(mu_tilde, nu)
    holds: bool

    @property
    def excess(self) -> float:
        return self.robot_value - min(self.bound_clean, self.bound_tv, self.bound_ot)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['excess'] = self.excess
        return out


def robot_upper_bounds(mu: DiscreteMeasure, mu_c: DiscreteMeasure, nu: DiscreteMeasure,
                       eps: float, spec: CostSpec = CostSpec(), lam: float = 0.5) -> BoundCheck:
    """
    ROBOT(mu_tilde, nu) for mu_tilde = (1 - eps) mu + eps mu_c, checked against
    OT(mu, nu) + 2 lambda eps tv(mu, mu_c), 2 lambda tv(mu_tilde, nu) and
    OT(mu_tilde, nu). TV terms are taken on the union of all supports.
    """
    mu_tilde = contaminate(mu, mu_c, eps)
    _, (w_mu, w_c, w_tilde, w_nu) = union_support(mu, mu_c, mu_tilde, nu)

    solution, _ = solve_f1(mu_tilde, nu, spec, lam)
    robot_value = solution.objective
    bound_clean = vanilla_ot(mu, nu, spec) + 2.0 * lam * eps * tv_distance(w_mu, w_c)
    bound_tv = 2.0 * lam * tv_distance(w_tilde, w_nu)
    bound_ot = vanilla_ot(mu_tilde, nu, spec)
    holds = robot_value <= min(bound_clean, bound_tv, bound_ot) + BOUND_SLACK
    if not holds:
        logger.warning(f"Upper bound violated: ROBOT={robot_value:.10g}, bounds="
                       f"({bound_clean:.10g}, {bound_tv:.10g}, {bound_ot:.10g})")
    return BoundCheck(robot_value, bound_clean, bound_tv, bound_ot, holds)


@dataclass
class BoundSuiteReport:
    trials: int
    violations: int
    max_excess: float
    seconds: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _random_measure(rng: np.random.Generator, size: int, d: int, shift: float = 0.0,
                    scale: float = 1.0) -> DiscreteMeasure:
    points = scale * rng.standard_normal((size, d)) + shift
    weights = rng.uniform(0.1, 1.0, size)
    return make_measure(points, weights)


def bound_suite(seed: int = 0, trials: int = 100, max_size: int = 10,
                eps_set: Sequence[float] = (0.0, 0.1, 0.2),
                lambdas: Sequence[float] = (0.1, 0.5, 1.0),
                spec: CostSpec = CostSpec()) -> BoundSuiteReport:
    """robot_upper_bounds on random instances with n, m <= max_size."""
    if trials < 1 or max_size < 1:
        raise InvalidInputError("trials and max_size must be >= 1")
    start = time.perf_counter()

    def trial(rng: np.random.Generator) -> BoundCheck:
        d = int(rng.integers(1, 3))
        mu = _random_measure(rng, int(rng.integers(1, max_size + 1)), d)
        mu_c = _random_measure(rng, int(rng.integers(1, max_size + 1)), d, shift=3.0)
        nu = _random_measure(rng, int(rng.integers(1, max_size + 1)), d)
        eps = float(rng.choice(eps_set))
        lam = float(rng.choice(lambdas))
        return robot_upper_bounds(mu, mu_c, nu, eps, spec, lam)

    checks = _map_trials(trial, _child_rngs(seed, trials))
    report = BoundSuiteReport(trials=trials,
                              violations=sum(not c.holds for c in checks),
                              max_excess=max(c.excess for c in checks),
                              seconds=time.perf_counter() - start)
    logger.info(f"Bound suite: {report.violations}/{trials} violations, "
                f"max excess {report.max_excess:.3e}")
    return report


# ==================== Formulation equivalence ====================

@dataclass
class EquivalenceReport:
    """Largest objective gaps between formulations over random instances."""
    trials: int
    gap_f1_f2: float = 0.0
    gap_f1_f3: float = 0.0
    gap_f1_f4: float = 0.0
    reconstruction_gap: float = 0.0
    f1_violation: float = 0.0  # feasibility and slack signs of the F1 LP solutions
    failures: List[Dict[str, Any]] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def max_gap(self) -> float:
        return max(self.gap_f1_f2, self.gap_f1_f3, self.gap_f1_f4)

    def passed(self, tol: float = 1e-7, reconstruction_tol: float = 1e-9) -> bool:
        return (not self.failures and self.max_gap <= tol
                and self.reconstruction_gap <= reconstruction_tol and self.f1_violation <= reconstruction_tol)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['max_gap'] = self.max_gap
        return out


def _equivalence_trial(rng: np.random.Generator, max_size: int, lambdas, costs) -> Dict[str, Any]:
    n = int(rng.integers(2, max_size + 1))
    m = int(rng.integers(2, max_size + 1))
    d = int(rng.integers(1, 3))
    mu = _random_measure(rng, n, d, scale=1.5)
    nu = _random_measure(rng, m, d, scale=1.5)
    lam = float(rng.choice(lambdas))
    spec = CostSpec.parse(str(rng.choice(costs)))

    C = cost_matrix(mu.points, nu.points, spec)
    plan, f2 = solve_transport(mu, nu, truncate(C, lam), method="simplex")
    f1, _ = solve_f1(mu, nu, spec, lam)
    f3, _ = solve_f3(mu, nu, spec, lam)
    f4, _ = solve_f4(mu, nu, C, lam)

    rebuilt = f2_to_f1(plan, C, lam)
    feasibility = check_f1_feasibility(rebuilt, mu, nu).max_violation
    return {
        'f1_f2': abs(f1.objective - f2.objective),
        'f1_f3': abs(f1.objective - f3.objective),
        'f1_f4': abs(f1.objective - f4.objective),
        'reconstruction': max(abs(rebuilt.objective - f2.objective), feasibility),
        'f1_violation': check_f1_feasibility(f1, mu, nu).max_violation,
    }


def equivalence_suite(seed: int = 1, trials: int = 200, max_size: int = 8,
                      lambdas: Sequence[float] = (0.1, 0.5, 1.0, 2.0),
                      costs: Sequence[str] = ("sqeuclidean", "euclidean")) -> EquivalenceReport:
    """Solve Formulations 1-4 on random instances and report the largest gaps."""
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if max_size < 2:
        raise InvalidInputError(f"max_size must be >= 2, got {max_size}")
    start = time.perf_counter()

    def trial(item):
        index, rng = item
        try:
            return _equivalence_trial(rng, max_size, lambdas, costs)
        except RobotError as e:
            logger.error(f"Equivalence trial {index} failed: {e}")
            return {'trial': index, 'error': type(e).__name__, 'detail': str(e)}

    results = _map_trials(trial, list(enumerate(_child_rngs(seed, trials))))
    report = EquivalenceReport(trials=trials)
    for result in results:
        if 'error' in result:
            report.failures.append(result)
            continue
        report.gap_f1_f2 = max(report.gap_f1_f2, result['f1_f2'])
        report.gap_f1_f3 = max(report.gap_f1_f3, result['f1_f3'])
        report.gap_f1_f4 = max(report.gap_f1_f4, result['f1_f4'])
        report.reconstruction_gap = max(report.reconstruction_gap, result['reconstruction'])
        report.f1_violation = max(report.f1_violation, result['f1_violation'])
    report.seconds = time.perf_counter() - start
    logger.info(f"Equivalence suite: {trials} trials, max gap {report.max_gap:.3e}, "
                f"reconstruction gap {report.reconstruction_gap:.3e}, {len(report.failures)} failures")
    return report


# ==================== Entropic convergence ====================

@dataclass
class ConvergenceReport:
    lam: float
    alphas: List[float]
    plan_distances: List[float]
    slack_distances: List[float]

    @property
    def monotone(self) -> bool:
        d = self.plan_distances
        return all(b <= a + 1e-12 for a, b in zip(d, d[1:]))

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['monotone'] = self.monotone
        out['lam'] = _json_float(self.lam)
        return out


def entropic_convergence(seed: int = 0, n: int = 10, lam: Optional[float] = None,
                         alphas: Sequence[float] = (1.0, 0.1, 0.01, 0.001),
                         spec: CostSpec = CostSpec(), d: int = 2) -> ConvergenceReport:
    """
    Distance of entropic ROBOT solutions to the exact one along a decreasing
    alpha sequence. lam defaults to half the median cost so that part of the
    cost matrix is truncated.
    """
    rng = np.random.default_rng(seed)
    mu = _random_measure(rng, n, d)
    nu = _random_measure(rng, n, d)
    C = cost_matrix(mu.points, nu.points, spec)
    if lam is None:
        lam = float(np.median(C.values)) / 2.0

    plan, _ = solve_transport(mu, nu, truncate(C, lam), method="simplex")
    exact = f2_to_f1(plan, C, lam)

    plan_distances, slack_distances = [], []
    for alpha in alphas:
        config = SinkhornConfig(alpha=alpha, tol=1e-10, max_iter=200000, epsilon_scaling=True)
        entropic, _ = robot_sinkhorn(mu, nu, spec, lam, config=config)
        plan_distances.append(float(np.linalg.norm(entropic.plan - exact.plan)))
        slack_distances.append(float(np.sqrt(np.sum((entropic.s1 - exact.s1) ** 2)
                                             + np.sum((entropic.t1 - exact.t1) ** 2))))
        logger.debug(f"alpha={alpha:g}: plan distance {plan_distances[-1]:.3e}, "
                     f"slack distance {slack_distances[-1]:.3e}")
    return ConvergenceReport(lam, list(alphas), plan_distances, slack_distances)


# ==================== Lambda monotonicity ====================

@dataclass
class MonotonicityReport:
    instances: int
    pairs: int
    violations: int
    seconds: float

    @property
    def violation_rate(self) -> float:
        return self.violations / self.pairs if self.pairs else 0.0

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out['violation_rate'] = self.violation_rate
        return out


def monotonicity_suite(seed: int = 0, instances: int = 100, size: int = 20,
                       grid: Sequence[float] = (0.1, 0.25, 0.5, 1.0, 2.0),
                       eps: float = 0.2, d: int = 2, method: str = "exact") -> MonotonicityReport:
    """scan_lambda over seeded Huber instances against clean references."""
    start = time.perf_counter()
    seeds = _child_seeds(seed, 2 * instances)

    def trial(k: int):
        contaminated, _ = gen_huber_gaussian(size, d, eps, 0.0, 3.0, seed=seeds[2 * k])
        clean, _ = gen_huber_gaussian(size, d, 0.0, 0.0, 0.0, seed=seeds[2 * k + 1])
        return scan_lambda(contaminated, clean, CostSpec(), grid, method=method)

    # grid points run inside each scan; the suite itself stays sequential
    reports = [trial(k) for k in range(instances)]
    pairs = sum(len(r.nested) for r in reports)
    violations = sum(len(r.violations) for r in reports)
    report = MonotonicityReport(instances, pairs, violations, time.perf_counter() - start)
    logger.info(f"Monotonicity suite: {violations}/{pairs} adjacent pairs not nested")
    return report


# ==================== Robust mean estimation ====================

@dataclass
class MeanStudy:
    """Long-format rows (lambda, seed, error) plus per-lambda medians."""
    rows: List[Dict[str, Any]]

    @property
    def medians(self) -> Dict[float, float]:
        out = {}
        for lam in dict.fromkeys(r['lambda'] for r in self.rows):
            out[lam] = float(np.median([r['error'] for r in self.rows if r['lambda'] == lam]))
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rows': [{**r, 'lambda': _json_float(r['lambda'])} for r in self.rows],
            'medians': {str(_json_float(lam)): err for lam, err in self.medians.items()},
        }


def mean_estimation_study(lambdas: Sequence[float] = (0.5, math.inf), seeds: Sequence[int] = range(10),
                          n: int = 1000, d: int = 5, eps: float = 0.2, eta1: float = 2.0,
                          contamination: str = "gaussian",
                          sgd: Optional[SgdConfig] = None) -> MeanStudy:
    """
    estimate_mean on Huber samples with clean location 0, for every
    (lambda, seed) pair. With contamination="cauchy" both the data and the
    generator noise are Cauchy.
    """
    generators = {"gaussian": gen_huber_gaussian, "cauchy": gen_huber_cauchy}
    if contamination not in generators:
        raise InvalidInputError(f"contamination must be one of {sorted(generators)}")
    base = sgd if sgd is not None else SgdConfig()
    eta0 = np.zeros(d)

    def run(item):
        lam, seed = item
        data, _ = generators[contamination](n, d, eps, eta0, eta1, seed=seed)
        cfg = SgdConfig(**{**vars(base), 'lam': lam, 'seed': seed, 'noise': contamination})
        trace = estimate_mean(data, cfg)
        return {'lambda': float(lam), 'seed': int(seed), 'error': trace.error(eta0)}

    rows = _map_trials(run, [(lam, seed) for lam in lambdas for seed in seeds])
    study = MeanStudy(rows)
    for lam, err in study.medians.items():
        logger.info(f"lambda={lam:g}: median error {err:.4f} over {len(list(seeds))} seeds")
    return study


# ==================== Gradient check ====================

def gradient_check(seed: int = 0, trials: int = 50, n: int = 8, d: int = 3,
                   step: float = 1e-5) -> float:
    """Max relative error of theta_gradient against central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        X = rng.standard_normal((n, d))
        z_noise = rng.standard_normal(d)
        theta = rng.standard_normal(d)
        Pi = rng.uniform(0.0, 1.0, n) / n

        def objective(th):
            return float(np.sum(Pi * np.sum((X - (z_noise + th)) ** 2, axis=1)))

        analytic = theta_gradient(z_noise + theta, Pi, X)
        numeric = np.empty(d)
        for k in range(d):
            e = np.zeros(d)
            e[k] = step
            numeric[k] = (objective(theta + e) - objective(theta - e)) / (2 * step)
        scale = max(np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    logger.info(f"Gradient check: max relative error {worst:.3e} over {trials} trials")
    return worst


# ==================== Detection accuracy ====================

@dataclass
class DetectionAccuracy:
    method: str
    rows: List[Dict[str, Any]]

    @property
    def min_accuracy(self) -> float:
        return min(r['accuracy'] for r in self.rows)

    def to_dict(self) -> Dict[str, Any]:
        return {'method': self.method, 'rows': self.rows, 'min_accuracy': self.min_accuracy}


def detection_accuracy(seeds: Sequence[int] = range(5), method: str = "exact",
                       n_clean: int = 800, n_out: int = 200, d: int = 2,
                       separation: float = 6.0, percentile: float = 99.0,
                       config: Optional[DetectConfig] = None) -> DetectionAccuracy:
    """Per-seed accuracy of detect_outliers (lambda from select_lambda) on cluster data."""
    rows = []
    for seed in seeds:
        contaminated, clean, mask = gen_cluster_outliers(n_clean, n_out, d, separation, seed=seed)
        lam = select_lambda(clean, percentile=percentile, seed=seed)
        result = detect_outliers(contaminated, clean, CostSpec(), lam, method=method, config=config)
        accuracy = float(np.mean(result.mask() == mask))
        rows.append({'seed': int(seed), 'lambda': lam, 'flagged': result.count, 'accuracy': accuracy})
        logger.info(f"Detection seed {seed}: lambda={lam:.4g}, flagged {result.count}, accuracy {accuracy:.4f}")
    return DetectionAccuracy(method, rows)
