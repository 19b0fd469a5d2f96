"""
Exact Solvers
=============

Two exact engines:

- TransportSimplex: the transportation-polytope simplex (northwest-corner
  start, MODI potentials on the basis spanning tree, stepping-stone cycles)
  used for Formulation 2 and vanilla OT. Large instances can be handed to
  POT's network simplex instead.
- DenseSimplex: a dense two-phase primal simplex with Bland's rule over
  equality-form LPs, used as the oracle for Formulations 1, 3 and 4.

Formulation-1 slacks are sign-constrained (s1 <= 0, t1 >= 0) and enter the
LP as nonnegative removed/added masses. Slacks of Formulations 3 and 4 are
free and modelled with the usual positive/negative split, both parts
carrying the lambda penalty.
"""

import time
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, List, Dict

import numpy as np

from .core import (DiscreteMeasure, CostMatrix, TransportPlan, RobotSolution,
                   SolveReport, InvalidInputError, SolverError, check_lambda,
                   marginal_residuals)
from .cost import CostSpec, augmented_cost, cost_matrix

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-10
OPT_TOL = 1e-9
PIVOT_TOL = 1e-12

# n*m at or below which method="auto" uses the in-repo simplex
AUTO_SIMPLEX_CELLS = 2500


# ==================== General LP ====================

@dataclass
class LpProblem:
    """min c.x  s.t.  A x = b,  x >= lower_bounds (each 0 or -inf)."""
    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    lower_bounds: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=np.float64).ravel()
        self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=np.float64))
        self.eq_rhs = np.asarray(self.eq_rhs, dtype=np.float64).ravel()
        if self.lower_bounds is None:
            self.lower_bounds = np.zeros(self.objective.size)
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=np.float64).ravel()

        M, N = self.eq_matrix.shape
        if self.objective.size != N or self.lower_bounds.size != N:
            raise InvalidInputError(
                f"objective/bounds length must equal {N} columns of the constraint matrix")
        if self.eq_rhs.size != M:
            raise InvalidInputError(f"rhs length {self.eq_rhs.size} does not match {M} rows")
        ok = (self.lower_bounds == 0) | np.isneginf(self.lower_bounds)
        if not np.all(ok):
            raise InvalidInputError("lower bounds must be 0 or -inf")

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_constraints(self) -> int:
        return self.eq_rhs.size


class DenseSimplex:
    """Two-phase tableau simplex with Bland's anti-cycling rule."""

    def __init__(self, problem: LpProblem, max_pivots: Optional[int] = None,
                 feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL):
        self.problem = problem
        M, N = problem.n_constraints, problem.n_vars
        self.max_pivots = max_pivots if max_pivots is not None else 10 * (M + N) ** 2
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.pivots = 0

    @staticmethod
    def _pivot(T: np.ndarray, row: int, col: int):
        T[row, :] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row, :])

    def _iterate(self, T: np.ndarray, basis: List[int], ncols: int) -> str:
        while True:
            reduced = T[-1, :ncols]
            entering = np.flatnonzero(reduced < -self.opt_tol)
            if entering.size == 0:
                return 'optimal'
            if self.pivots >= self.max_pivots:
                raise SolverError(f"simplex pivot limit ({self.max_pivots}) exceeded")
            j = int(entering[0])

            column = T[:-1, j]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return 'unbounded'
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_TOL * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: basis[i]))

            self._pivot(T, r, j)
            basis[r] = j
            self.pivots += 1

    def solve(self) -> Tuple[np.ndarray, float]:
        p = self.problem
        free = np.isneginf(p.lower_bounds)
        A = np.hstack([p.eq_matrix, -p.eq_matrix[:, free]])
        c = np.concatenate([p.objective, -p.objective[free]])
        b = p.eq_rhs.copy()

        flip = b < 0
        A[flip] *= -1
        b[flip] *= -1
        M, N = A.shape

        # Phase 1: one artificial per row
        T = np.zeros((M + 1, N + M + 1))
        T[:M, :N] = A
        T[:M, N:N + M] = np.eye(M)
        T[:M, -1] = b
        T[-1, :N] = -A.sum(axis=0)
        T[-1, -1] = -b.sum()
        basis = list(range(N, N + M))

        status = self._iterate(T, basis, N + M)
        if status != 'optimal':
            raise SolverError(f"phase 1 ended {status}")
        infeasibility = -T[-1, -1]
        if infeasibility > self.feas_tol * max(1.0, np.abs(b).sum()):
            raise SolverError(f"LP infeasible (phase 1 residual {infeasibility:.3e})")

        # Drive artificials out of the basis; rows with no pivot left are redundant
        redundant = []
        for r in range(M):
            if basis[r] < N:
                continue
            candidates = np.flatnonzero(np.abs(T[r, :N]) > 1e-9)
            if candidates.size:
                self._pivot(T, r, int(candidates[0]))
                basis[r] = int(candidates[0])
            else:
                redundant.append(r)
        keep = [r for r in range(M) if r not in set(redundant)]
        if redundant:
            logger.debug(f"Dropping {len(redundant)} redundant constraint rows")

        T2 = np.zeros((len(keep) + 1, N + 1))
        T2[:-1, :N] = T[keep, :N]
        T2[:-1, -1] = T[keep, -1]
        basis = [basis[r] for r in keep]
        cb = c[basis]
        T2[-1, :N] = c - cb @ T2[:-1, :N]
        T2[-1, -1] = -cb @ T2[:-1, -1]

        status = self._iterate(T2, basis, N)
        if status == 'unbounded':
            raise SolverError("LP unbounded")

        x_std = np.zeros(N)
        x_std[basis] = T2[:-1, -1]
        x_std = np.maximum(x_std, 0.0)
        x = x_std[:p.n_vars].copy()
        x[free] -= x_std[p.n_vars:]

        violation = float(np.abs(p.eq_matrix @ x - p.eq_rhs).max()) if p.n_constraints else 0.0
        if violation > self.feas_tol:
            logger.warning(f"LP constraint violation {violation:.3e} above {self.feas_tol:.0e}")
        objective = float(p.objective @ x)
        logger.debug(f"Simplex finished: {self.pivots} pivots, objective {objective:.12g}")
        return x, objective


def simplex_solve(problem: LpProblem, max_pivots: Optional[int] = None) -> Tuple[np.ndarray, float]:
    """Solve an equality-form LP; returns (x, objective)."""
    return DenseSimplex(problem, max_pivots=max_pivots).solve()


# ==================== Transportation simplex ====================

class TransportSimplex:
    """
    Transportation-polytope simplex.

    The basis is a spanning tree over n row nodes and m column nodes
    (n + m - 1 cells, degenerate zeros included). Entering cells follow
    Dantzig's rule; after a run of degenerate pivots the solver switches to
    Bland's rule until the next nondegenerate pivot.
    """

    DEGENERATE_RUN = 50

    def __init__(self, a: np.ndarray, b: np.ndarray, C: np.ndarray,
                 max_pivots: Optional[int] = None):
        self.a = np.asarray(a, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.C = np.asarray(C, dtype=np.float64)
        self.n, self.m = self.C.shape
        self.max_pivots = max_pivots if max_pivots is not None else 20 * (self.n + self.m) ** 2 + 100
        self.opt_tol = 1e-10 * max(1.0, float(np.abs(self.C).max(initial=0.0)))
        self.pivots = 0

    def _northwest_corner(self):
        n, m = self.n, self.m
        a, b = self.a.copy(), self.b.copy()
        x = np.zeros((n, m))
        basis = []
        i = j = 0
        for _ in range(n + m - 1):
            q = max(min(a[i], b[j]), 0.0)
            x[i, j] = q
            basis.append((i, j))
            a[i] -= q
            b[j] -= q
            if i == n - 1:
                j += 1
            elif j == m - 1:
                i += 1
            elif a[i] <= b[j]:
                i += 1
            else:
                j += 1
        return x, basis

    def _adjacency(self, basis) -> List[List[int]]:
        adj = [[] for _ in range(self.n + self.m)]
        for i, j in basis:
            adj[i].append(self.n + j)
            adj[self.n + j].append(i)
        return adj

    def _potentials(self, adj) -> Tuple[np.ndarray, np.ndarray]:
        n = self.n
        pot = np.full(n + self.m, np.nan)
        pot[0] = 0.0
        stack = [0]
        while stack:
            node = stack.pop()
            for other in adj[node]:
                if not np.isnan(pot[other]):
                    continue
                if node < n:
                    pot[other] = self.C[node, other - n] - pot[node]
                else:
                    pot[other] = self.C[other, node - n] - pot[node]
                stack.append(other)
        return pot[:n], pot[n:]

    def _tree_path(self, adj, row: int, col: int) -> List[Tuple[int, int]]:
        """Cells along the tree path from row node `row` to column node `col`."""
        n = self.n
        target = n + col
        parent = {row: None}
        queue = [row]
        while queue:
            node = queue.pop()
            if node == target:
                break
            for other in adj[node]:
                if other not in parent:
                    parent[other] = node
                    queue.append(other)
        nodes = []
        node = target
        while node is not None:
            nodes.append(node)
            node = parent[node]
        nodes.reverse()
        cells = []
        for u, w in zip(nodes[:-1], nodes[1:]):
            cells.append((u, w - n) if u < n else (w, u - n))
        return cells

    def solve(self) -> np.ndarray:
        x, basis = self._northwest_corner()
        index = {cell: k for k, cell in enumerate(basis)}
        degenerate_run = 0

        while True:
            adj = self._adjacency(basis)
            u, v = self._potentials(adj)
            reduced = self.C - u[:, None] - v[None, :]

            if degenerate_run >= self.DEGENERATE_RUN:
                candidates = np.flatnonzero(reduced.ravel() < -self.opt_tol)
                if candidates.size == 0:
                    break
                flat = int(candidates[0])
            else:
                flat = int(np.argmin(reduced))
                if reduced.flat[flat] >= -self.opt_tol:
                    break
            if self.pivots >= self.max_pivots:
                raise SolverError(
                    f"transport simplex pivot limit ({self.max_pivots}) exceeded; degenerate cycling")

            p, q = divmod(flat, self.m)
            path = self._tree_path(adj, p, q)
            minus = path[0::2]
            plus = path[1::2]
            theta = min(x[c] for c in minus)
            leaving = min((c for c in minus if x[c] <= theta), key=lambda c: c[0] * self.m + c[1])

            for c in minus:
                x[c] -= theta
            for c in plus:
                x[c] += theta
            x[p, q] = theta
            x[leaving] = 0.0

            k = index.pop(leaving)
            basis[k] = (p, q)
            index[(p, q)] = k
            self.pivots += 1
            degenerate_run = degenerate_run + 1 if theta <= 1e-15 else 0

        logger.debug(f"Transport simplex finished after {self.pivots} pivots")
        return np.maximum(x, 0.0)


def _check_sizes(mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix):
    if C.shape != (mu.n, nu.n):
        raise InvalidInputError(f"cost shape {C.shape} does not match measures ({mu.n}, {nu.n})")


def _emd(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> np.ndarray:
    import ot

    G, log = ot.emd(a, b, np.ascontiguousarray(C), numItermax=max(100000, 50 * C.size), log=True)
    if log.get('warning') is not None:
        raise SolverError(f"POT emd: {log['warning']}")
    return np.maximum(np.asarray(G, dtype=np.float64), 0.0)


def solve_transport(mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix,
                    method: str = "auto",
                    max_pivots: Optional[int] = None) -> Tuple[TransportPlan, SolveReport]:
    """
    Exact optimal coupling of mu and nu under cost C.

    method: "simplex" (in-repo transportation simplex), "emd" (POT network
    simplex) or "auto" (simplex up to AUTO_SIMPLEX_CELLS cells).
    """
    _check_sizes(mu, nu, C)
    if method == "auto":
        method = "simplex" if C.values.size <= AUTO_SIMPLEX_CELLS else "emd"
    start = time.perf_counter()

    if method == "simplex":
        solver = TransportSimplex(mu.weights, nu.weights, C.values, max_pivots=max_pivots)
        mass = solver.solve()
        iterations = solver.pivots
    elif method == "emd":
        mass = _emd(mu.weights, nu.weights, C.values)
        iterations = 0
    else:
        raise InvalidInputError(f"unknown transport method {method!r}")

    plan = TransportPlan.from_marginals(mass, mu, nu)
    objective = float(np.sum(C.values * plan.mass))
    report = SolveReport(objective=objective, iterations=iterations,
                         row_residual=plan.row_residual, col_residual=plan.col_residual,
                         converged=True, seconds=time.perf_counter() - start,
                         extra={'method': method})
    logger.info(f"Transport ({method}) {mu.n}x{nu.n}: objective={objective:.10g}, "
                f"pivots={iterations}, residuals=({plan.row_residual:.1e}, {plan.col_residual:.1e})")
    return plan, report


def transport_lp(mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix) -> LpProblem:
    """Formulation 2 (or vanilla OT) written as a general LP over vec(Pi)."""
    _check_sizes(mu, nu, C)
    n, m = C.shape
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return LpProblem(C.values.ravel(), A, np.concatenate([mu.weights, nu.weights]))


# ==================== Formulations 1, 3, 4 ====================

@dataclass(frozen=True)
class TwoSidedSolution:
    """Formulation-3 solution."""
    plan: np.ndarray
    s1: np.ndarray
    t1: np.ndarray
    s2: np.ndarray
    t2: np.ndarray
    objective: float
    lam: float


@dataclass(frozen=True)
class AuxiliarySolution:
    """Formulation-4 solution."""
    plan: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    objective: float
    lam: float


class _Columns:
    """Hands out contiguous variable blocks of an LP."""

    def __init__(self):
        self.size = 0
        self.blocks: Dict[str, slice] = {}

    def add(self, name: str, count: int) -> slice:
        block = slice(self.size, self.size + count)
        self.blocks[name] = block
        self.size += count
        return block


def _lp_report(objective: float, pivots: int, row_res: float, col_res: float,
               start: float) -> SolveReport:
    return SolveReport(objective=objective, iterations=pivots, row_residual=row_res,
                       col_residual=col_res, converged=True,
                       seconds=time.perf_counter() - start)


def solve_f1(mu: DiscreteMeasure, nu: DiscreteMeasure, spec: CostSpec,
             lam: float) -> Tuple[RobotSolution, SolveReport]:
    """
    Formulation 1 by the general LP.

    The first n columns of the augmented plan are forced to zero by the
    column constraint, so they are left out of the LP.
    """
    lam = check_lambda(lam, allow_inf=False)
    if mu.d != nu.d:
        raise InvalidInputError(f"dimension mismatch: {mu.d} vs {nu.d}")
    start = time.perf_counter()
    n, m = mu.n, nu.n
    C_aug = augmented_cost(mu.points, nu.points, spec).values

    cols = _Columns()
    P = cols.add('plan', (n + m) * m)
    removed = cols.add('removed', n)  # s1 = -removed
    added = cols.add('added', m)  # t1 = added

    c = np.zeros(cols.size)
    c[P] = C_aug[:, n:].ravel()
    c[removed.start:added.stop] = lam

    A = np.zeros((n + 2 * m + 1, cols.size))
    for r in range(n + m):
        A[r, P.start + r * m:P.start + (r + 1) * m] = 1.0
    A[np.arange(n), np.arange(removed.start, removed.stop)] = 1.0
    A[n + np.arange(m), np.arange(added.start, added.stop)] = -1.0
    for j in range(m):
        A[n + m + j, P.start + j:P.stop:m] = 1.0
    A[-1, removed] = -1.0
    A[-1, added] = 1.0
    rhs = np.concatenate([mu.weights, np.zeros(m), nu.weights, [0.0]])

    solver = DenseSimplex(LpProblem(c, A, rhs))
    x, objective = solver.solve()

    plan = np.zeros((n + m, n + m))
    plan[:, n:] = x[P].reshape(n + m, m)
    s1 = -x[removed]
    t1 = x[added].copy()
    row_res, col_res = marginal_residuals(
        plan, np.concatenate([mu.weights + s1, t1]), np.concatenate([np.zeros(n), nu.weights]))

    solution = RobotSolution(plan, s1, t1, objective, lam)
    report = _lp_report(objective, solver.pivots, row_res, col_res, start)
    logger.info(f"F1 LP {n}x{m} lambda={lam:g}: objective={objective:.10g}, pivots={solver.pivots}")
    return solution, report


def solve_f3(mu: DiscreteMeasure, nu: DiscreteMeasure, spec: CostSpec,
             lam: float) -> Tuple[TwoSidedSolution, SolveReport]:
    """Two-sided Formulation 3 by the general LP."""
    lam = check_lambda(lam, allow_inf=False)
    if mu.d != nu.d:
        raise InvalidInputError(f"dimension mismatch: {mu.d} vs {nu.d}")
    start = time.perf_counter()
    n, m = mu.n, nu.n
    k = n + m
    C_aug = augmented_cost(mu.points, nu.points, spec).values

    cols = _Columns()
    P = cols.add('plan', k * k)
    parts = {name: cols.add(name, size) for name, size in
             (('s1+', n), ('s1-', n), ('t1+', m), ('t1-', m),
              ('s2+', n), ('s2-', n), ('t2+', m), ('t2-', m))}

    c = np.zeros(cols.size)
    c[P] = C_aug.ravel()
    c[P.stop:] = lam

    A = np.zeros((2 * k + 2, cols.size))
    for r in range(k):
        A[r, P.start + r * k:P.start + (r + 1) * k] = 1.0
        A[k + r, P.start + r:P.stop:k] = 1.0

    def couple(rows, plus, minus):
        A[rows, np.arange(plus.start, plus.stop)] = -1.0
        A[rows, np.arange(minus.start, minus.stop)] = 1.0

    couple(np.arange(n), parts['s1+'], parts['s1-'])
    couple(n + np.arange(m), parts['t1+'], parts['t1-'])
    couple(k + np.arange(n), parts['s2+'], parts['s2-'])
    couple(k + n + np.arange(m), parts['t2+'], parts['t2-'])
    for side, row in (('1', 2 * k), ('2', 2 * k + 1)):
        for name, sign in ((f's{side}+', 1.0), (f's{side}-', -1.0),
                           (f't{side}+', 1.0), (f't{side}-', -1.0)):
            A[row, parts[name]] = sign
    rhs = np.concatenate([mu.weights, np.zeros(m), np.zeros(n), nu.weights, [0.0, 0.0]])

    solver = DenseSimplex(LpProblem(c, A, rhs))
    x, objective = solver.solve()

    plan = x[P].reshape(k, k)

    def slack(name):
        return x[parts[name + '+']] - x[parts[name + '-']]

    s1, t1, s2, t2 = slack('s1'), slack('t1'), slack('s2'), slack('t2')
    row_res, col_res = marginal_residuals(
        plan, np.concatenate([mu.weights + s1, t1]), np.concatenate([s2, nu.weights + t2]))
    solution = TwoSidedSolution(plan, s1, t1, s2, t2, objective, lam)
    report = _lp_report(objective, solver.pivots, row_res, col_res, start)
    logger.info(f"F3 LP {n}x{m} lambda={lam:g}: objective={objective:.10g}, pivots={solver.pivots}")
    return solution, report


def solve_f4(mu: DiscreteMeasure, nu: DiscreteMeasure, C: CostMatrix, lam: float,
             nonpositive_slacks: bool = False) -> Tuple[AuxiliarySolution, SolveReport]:
    """
    Auxiliary Formulation 4: both marginals relaxed by L1-penalized slacks.

    With nonpositive_slacks the slacks may only remove mass.
    """
    lam = check_lambda(lam, allow_inf=False)
    _check_sizes(mu, nu, C)
    start = time.perf_counter()
    n, m = C.shape

    cols = _Columns()
    P = cols.add('plan', n * m)
    s1p = None if nonpositive_slacks else cols.add('s1+', n)
    s1n = cols.add('s1-', n)
    s2p = None if nonpositive_slacks else cols.add('s2+', m)
    s2n = cols.add('s2-', m)

    c = np.full(cols.size, lam)
    c[P] = C.values.ravel()

    A = np.zeros((n + m, cols.size))
    for i in range(n):
        A[i, P.start + i * m:P.start + (i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, P.start + j:P.stop:m] = 1.0
    if s1p is not None:
        A[np.arange(n), np.arange(s1p.start, s1p.stop)] = -1.0
        A[n + np.arange(m), np.arange(s2p.start, s2p.stop)] = -1.0
    A[np.arange(n), np.arange(s1n.start, s1n.stop)] = 1.0
    A[n + np.arange(m), np.arange(s2n.start, s2n.stop)] = 1.0
    rhs = np.concatenate([mu.weights, nu.weights])

    solver = DenseSimplex(LpProblem(c, A, rhs))
    x, objective = solver.solve()

    plan = x[P].reshape(n, m)
    s1 = -x[s1n] + (x[s1p] if s1p is not None else 0.0)
    s2 = -x[s2n] + (x[s2p] if s2p is not None else 0.0)
    row_res, col_res = marginal_residuals(plan, mu.weights + s1, nu.weights + s2)
    solution = AuxiliarySolution(plan, s1, s2, objective, lam)
    report = _lp_report(objective, solver.pivots, row_res, col_res, start)
    logger.info(f"F4 LP {n}x{m} lambda={lam:g}: objective={objective:.10g}, pivots={solver.pivots}")
    return solution, report


def vanilla_ot(mu: DiscreteMeasure, nu: DiscreteMeasure, spec: CostSpec = CostSpec(),
               method: str = "auto") -> float:
    """Untruncated OT value between two measures."""
    _, report = solve_transport(mu, nu, cost_matrix(mu.points, nu.points, spec), method=method)
    return report.objective
