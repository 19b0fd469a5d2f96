"""Outlier-robust optimal transport: exact and entropic solvers, outlier detection
and robust mean estimation."""

from .core import (RobotError, InvalidInputError, SolverError, ReconstructionError,
                   DataFormatError, DiscreteMeasure, CostMatrix, TransportPlan,
                   RobotSolution, SolveReport, make_measure, tv_distance)
from .cost import CostKind, CostSpec, cost_matrix, truncate, augmented_cost, outlier_index_set
from .lp_exact import solve_transport, solve_f1, solve_f3, solve_f4, vanilla_ot
from .reconstruct import f2_to_f1, f2_to_f1_slacks, check_f1_feasibility
from .sinkhorn import SinkhornConfig, sinkhorn_solve, robot_sinkhorn
from .semidiscrete import SgdConfig, EstimateTrace, estimate_mean
from .detect import DetectConfig, DetectionResult, detect_outliers, select_lambda, scan_lambda

__version__ = "0.1.0"
