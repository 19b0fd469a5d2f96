"""
F2 -> F1 Reconstruction
=======================

Maps a plan of the truncated-cost problem (Formulation 2) to a
Formulation-1 solution: mass sitting on truncated entries
I = {(i, j): C[i, j] > 2*lambda} is removed from the transported block and
parked on the diagonal of the target-target block, the removal recorded in
s1 and the parking in t1.

Works on exact and entropic plans alike; the only gate is how far the input
plan is from its marginals.
"""

import logging
from dataclasses import dataclass, asdict
from typing import Tuple, Dict

import numpy as np

from .core import (TransportPlan, CostMatrix, RobotSolution, DiscreteMeasure,
                   InvalidInputError, ReconstructionError, check_lambda)
from .cost import outlier_mask

logger = logging.getLogger(__name__)

DEFAULT_GATE = 1e-6


def _gated_mass(plan: TransportPlan, C: CostMatrix, lam: float, gate: float):
    lam = check_lambda(lam)
    if plan.shape != C.shape:
        raise InvalidInputError(f"plan shape {plan.shape} does not match cost shape {C.shape}")
    worst = max(plan.row_residual, plan.col_residual)
    if worst > gate:
        raise ReconstructionError(f"plan marginal residual {worst:.3e} exceeds gate {gate:.1e}")
    mask = outlier_mask(C, lam)
    return plan.mass, mask, lam


def f2_to_f1_slacks(plan: TransportPlan, C: CostMatrix, lam: float,
                    gate: float = DEFAULT_GATE) -> Tuple[np.ndarray, np.ndarray]:
    """Slack vectors (s1, t1) only, without materializing the augmented plan."""
    mass, mask, _ = _gated_mass(plan, C, lam, gate)
    dropped = np.where(mask, mass, 0.0)
    return -dropped.sum(axis=1), dropped.sum(axis=0)


def f2_to_f1(plan: TransportPlan, C: CostMatrix, lam: float,
             gate: float = DEFAULT_GATE) -> RobotSolution:
    """
    Build the Formulation-1 solution from an F2 plan.

    C is the untruncated ground cost. The objective is
    <C_aug, Pi_1> + lambda * (|s1|_1 + |t1|_1); C_aug vanishes on the
    diagonal, so only the kept transported mass pays ground cost.
    """
    mass, mask, lam = _gated_mass(plan, C, lam, gate)
    n, m = mass.shape

    kept = np.where(mask, 0.0, mass)
    dropped = mass - kept
    s1 = -dropped.sum(axis=1)
    t1 = dropped.sum(axis=0)

    augmented = np.zeros((n + m, n + m))
    augmented[:n, n:] = kept
    augmented[n + np.arange(m), n + np.arange(m)] = t1

    slack = float(np.abs(s1).sum() + np.abs(t1).sum())
    # lambda may be inf, in which case nothing is dropped
    objective = float(np.sum(C.values * kept)) + (lam * slack if slack > 0 else 0.0)
    logger.debug(f"Reconstructed F1 solution: {int(mask.sum())} truncated entries, "
                 f"moved mass {t1.sum():.6g}, objective {objective:.10g}")
    return RobotSolution(augmented, s1, t1, objective, lam)


@dataclass
class FeasibilityReport:
    """Largest violation of each Formulation-1 constraint."""
    row_residual: float
    col_residual: float
    negativity: float
    balance: float
    marginal_negativity: float
    slack_sign: float = 0.0  # positive part of s1, negative part of t1

    @property
    def max_violation(self) -> float:
        return max(self.row_residual, self.col_residual, self.negativity,
                   self.balance, self.marginal_negativity, self.slack_sign)

    def to_dict(self) -> Dict[str, float]:
        out = asdict(self)
        out['max_violation'] = self.max_violation
        return out


def check_f1_feasibility(sol: RobotSolution, mu: DiscreteMeasure,
                         nu: DiscreteMeasure) -> FeasibilityReport:
    """Report (never raise) how far sol is from Formulation-1 feasibility."""
    n, m = mu.n, nu.n
    if sol.n != n or sol.m != m:
        raise InvalidInputError(f"solution is {sol.n}+{sol.m}, measures are {n}+{m}")
    plan = sol.plan
    rows = np.concatenate([mu.weights + sol.s1, sol.t1])
    cols = np.concatenate([np.zeros(n), nu.weights])
    return FeasibilityReport(
        row_residual=float(np.abs(plan.sum(axis=1) - rows).max()),
        col_residual=float(np.abs(plan.sum(axis=0) - cols).max()),
        negativity=float(max(0.0, -plan.min())),
        balance=float(abs(sol.s1.sum() + sol.t1.sum())),
        marginal_negativity=float(max(0.0, -(mu.weights + sol.s1).min())),
        slack_sign=float(max(0.0, sol.s1.max(), -sol.t1.min())),
    )
