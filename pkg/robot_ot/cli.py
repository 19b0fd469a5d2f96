#!/usr/bin/env python3
"""
ROBOT Command Line
==================

Front end for the robust optimal transport toolkit. Every command reads
point clouds from CSV, prints one JSON object on standard output and logs
to standard error.

Commands:
- solve          ROBOT value (and plan) between two measures
- detect         outlier detection against a clean reference
- estimate-mean  robust mean estimation with the shift generator
- gen            synthetic contaminated data
- bench          diagnostics suites (equivalence, bounds, convergence, ...)
- scan-lambda    outlier sets along a lambda grid

CSV format: a header row `x1,...,xd` (uniform weights) or `w,x1,...,xd`
(weights renormalized), then one point per row.

Exit codes: 0 success, 1 malformed input file, 2 invalid arguments,
3 solver failure.

Usage:
    uv run main.py solve --source A.csv --target B.csv --lambda 0.5
    uv run main.py detect --contaminated X.csv --clean Y.csv --lambda auto
    uv run main.py estimate-mean --data X.csv --true-mean "0,0,0,0,0"
    uv run main.py bench equivalence --trials 200 --max-size 8 --seed 1
"""

import sys
import json
import math
import time
import logging
import argparse
from pathlib import Path
from typing import Optional, List, Dict, Any, Sequence

import numpy as np

from .core import (DiscreteMeasure, RobotError, InvalidInputError, DataFormatError,
                   make_measure, check_lambda)
from .cost import CostSpec, cost_matrix, truncate
from .lp_exact import solve_transport
from .reconstruct import f2_to_f1
from .sinkhorn import SinkhornConfig, robot_sinkhorn
from .semidiscrete import SgdConfig, estimate_mean, NOISE_FAMILIES
from .detect import DetectConfig, detect_outliers, select_lambda, scan_lambda
from .datagen import gen_huber_gaussian, gen_huber_cauchy, gen_cluster_outliers
from . import diagnostics

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


# ==================== CSV I/O ====================

class MeasureCsvReader:
    """Reads a weighted or unweighted point cloud from CSV."""

    def __init__(self, filename: str):
        self.filename = filename
        self.file = None
        self.columns: List[str] = []

    def open(self):
        """Open file and parse the header row."""
        if not Path(self.filename).exists():
            raise DataFormatError(f"file not found: {self.filename}")
        self.file = open(self.filename, 'r', encoding='utf-8')
        header = self.file.readline().strip()
        if not header:
            raise DataFormatError(f"{self.filename}: missing header row")
        self.columns = [c.strip() for c in header.split(',')]
        coords = self.columns[1:] if self.weighted else self.columns
        if not coords or coords != [f"x{k + 1}" for k in range(len(coords))]:
            raise DataFormatError(f"{self.filename}: header must be x1,...,xd or w,x1,...,xd, "
                                  f"got {header!r}")
        logging.debug(f"Opened {self.filename}: {len(coords)} coordinates, weighted={self.weighted}")

    @property
    def weighted(self) -> bool:
        return bool(self.columns) and self.columns[0] == 'w'

    def read(self) -> DiscreteMeasure:
        """Read all rows into a measure."""
        try:
            values = np.loadtxt(self.file, delimiter=',', ndmin=2, dtype=np.float64)
        except ValueError as e:
            raise DataFormatError(f"{self.filename}: {e}")
        if values.size == 0:
            raise DataFormatError(f"{self.filename}: no data rows")
        if values.shape[1] != len(self.columns):
            raise DataFormatError(f"{self.filename}: rows have {values.shape[1]} fields, "
                                  f"header has {len(self.columns)}")
        if not np.all(np.isfinite(values)):
            raise DataFormatError(f"{self.filename}: non-finite values")
        try:
            if self.weighted:
                return make_measure(values[:, 1:], values[:, 0])
            return make_measure(values)
        except InvalidInputError as e:
            raise DataFormatError(f"{self.filename}: {e}")

    def close(self):
        if self.file:
            self.file.close()
            self.file = None

    def __enter__(self):
        self.open()
        return self

    def __exit__(self, *exc):
        self.close()


class MeasureCsvWriter:
    """Writes point clouds in the reader's format, 17 significant digits."""

    def __init__(self, filename: str, weighted: bool = False):
        self.filename = filename
        self.weighted = weighted
        self.file = None
        self.rows_written = 0

    def open(self):
        self.file = sys.stdout if self.filename == '-' else open(self.filename, 'w', encoding='utf-8')

    def write(self, measure: DiscreteMeasure):
        header = [f"x{k + 1}" for k in range(measure.d)]
        values = measure.points
        if self.weighted:
            header = ['w'] + header
            values = np.column_stack([measure.weights, values])
        np.savetxt(self.file, values, delimiter=',', fmt='%.17g',
                   header=','.join(header), comments='')
        self.rows_written += measure.n
        logging.info(f"Wrote {measure.n} points to {self.filename}")

    def close(self):
        if self.file and self.file is not sys.stdout:
            self.file.close()
        self.file = None

    def __enter__(self):
        self.open()
        return self

    def __exit__(self, *exc):
        self.close()


def read_measure(filename: str) -> DiscreteMeasure:
    with MeasureCsvReader(filename) as reader:
        return reader.read()


def write_matrix(filename: str, values: np.ndarray, header: Optional[Sequence[str]] = None):
    """Dense matrix as CSV, optionally with a header row."""
    np.savetxt(filename, np.atleast_2d(values), delimiter=',', fmt='%.17g',
               header=','.join(header) if header else '', comments='')
    logging.info(f"Wrote {values.shape[0]} rows to {filename}")


def write_rows(filename: str, rows: List[Dict[str, Any]], columns: Sequence[str]):
    """Long-format CSV for external plotting."""
    with open(filename, 'w', encoding='utf-8') as f:
        f.write(','.join(columns) + '\n')
        for row in rows:
            f.write(','.join(_csv_value(row[c]) for c in columns) + '\n')
    logging.info(f"Wrote {len(rows)} rows to {filename}")


def _csv_value(value) -> str:
    if isinstance(value, float):
        return format(value, '.17g')
    return str(value)


# ==================== Argument types ====================

def parse_lambda(text: str) -> float:
    """Positive real or 'inf'."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive real or 'inf', got {text!r}")
    if math.isnan(value):
        raise argparse.ArgumentTypeError("lambda must not be NaN")
    return value


def parse_lambda_or_auto(text: str):
    return 'auto' if text == 'auto' else parse_lambda(text)


def parse_vector(text: str) -> np.ndarray:
    """Comma-separated reals."""
    try:
        return np.array([float(v) for v in text.split(',') if v.strip()], dtype=np.float64)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def parse_grid(text: str) -> List[float]:
    return [parse_lambda(v) for v in text.split(',') if v.strip()]


def _json_float(value: float):
    return value if math.isfinite(value) else "inf"


class JsonArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as one-line JSON, exit 2."""

    def error(self, message):
        sys.stderr.write(json.dumps({'error': 'UsageError', 'detail': message}) + '\n')
        sys.exit(EXIT_USAGE)


# ==================== Application ====================

class RobotCli:
    """Runs one parsed command."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self._setup_logging()

    def _setup_logging(self):
        """Setup logging; stdout carries the JSON result only."""
        level = logging.DEBUG if self.args.verbose else logging.INFO
        handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
        if self.args.log_file:
            handlers.append(logging.FileHandler(self.args.log_file))
        logging.basicConfig(
            level=level,
            format='%(asctime)s - %(levelname)s - %(message)s',
            handlers=handlers,
            force=True
        )

    def run(self) -> int:
        """Dispatch the command and map failures to exit codes."""
        start = time.perf_counter()
        try:
            result = self.args.handler(self)
        except DataFormatError as e:
            return self._fail(e, EXIT_DATA)
        except InvalidInputError as e:
            return self._fail(e, EXIT_USAGE)
        except RobotError as e:
            return self._fail(e, EXIT_SOLVER)
        except Exception as e:
            logging.error(f"Unexpected failure: {e}", exc_info=True)
            return self._fail(e, EXIT_SOLVER)

        if result is not None:
            result['seconds'] = time.perf_counter() - start
            sys.stdout.write(json.dumps(result, sort_keys=True) + '\n')
            sys.stdout.flush()
        return EXIT_OK

    @staticmethod
    def _fail(error: Exception, code: int) -> int:
        logging.debug(f"Exiting with code {code}")
        sys.stderr.write(json.dumps({'error': type(error).__name__, 'detail': str(error)}) + '\n')
        return code

    # ---------- solve ----------

    def cmd_solve(self) -> Dict[str, Any]:
        args = self.args
        mu = read_measure(args.source)
        nu = read_measure(args.target)
        spec = CostSpec.parse(args.cost)
        lam = check_lambda(args.lam)

        if args.method == 'exact':
            C = cost_matrix(mu.points, nu.points, spec)
            plan, report = solve_transport(mu, nu, truncate(C, lam), method=args.transport)
            solution = f2_to_f1(plan, C, lam)
            report.objective = solution.objective
        else:
            config = SinkhornConfig(alpha=args.alpha, tol=args.tol, max_iter=args.max_iter,
                                    epsilon_scaling=args.epsilon_scaling)
            solution, report = robot_sinkhorn(mu, nu, spec, lam, config=config)

        if args.plan_out:
            write_matrix(args.plan_out, solution.plan)
        return {
            'objective': solution.objective,
            'lambda': _json_float(lam),
            'method': args.method,
            'iterations': report.iterations,
            'row_residual': report.row_residual,
            'col_residual': report.col_residual,
            'slack_l1': solution.slack_l1,
            'converged': report.converged,
        }

    # ---------- detect ----------

    def _detect_config(self) -> DetectConfig:
        args = self.args
        return DetectConfig(method=args.method, alpha=args.alpha, threshold=args.threshold,
                            tol=args.tol, max_iter=args.max_iter)

    def cmd_detect(self) -> Dict[str, Any]:
        args = self.args
        contaminated = read_measure(args.contaminated)
        clean = read_measure(args.clean)
        spec = CostSpec.parse(args.cost)

        if args.lam == 'auto':
            lam = select_lambda(clean, subsample_size=args.subsample, percentile=args.percentile,
                                spec=spec, seed=args.seed)
        else:
            lam = args.lam
        result = detect_outliers(contaminated, clean, spec, lam, config=self._detect_config())
        return {
            'outlier_indices': list(result.outlier_indices),
            'lambda': _json_float(result.lam),
            'lambda_source': 'auto' if args.lam == 'auto' else 'given',
            'method': result.method,
            'threshold': result.threshold,
            'slack': result.s1.tolist(),
        }

    # ---------- estimate-mean ----------

    def cmd_estimate_mean(self) -> Dict[str, Any]:
        args = self.args
        data = read_measure(args.data)
        cfg = SgdConfig(lam=args.lam, alpha=args.alpha, outer_iters=args.outer,
                        inner_iters=args.inner, tau=args.tau, gamma=args.gamma, seed=args.seed,
                        theta_init=args.theta_init, noise=args.noise, log_every=args.log_every)
        trace = estimate_mean(data, cfg)

        if args.trace_out:
            write_matrix(args.trace_out, trace.thetas,
                         header=[f"theta{k + 1}" for k in range(trace.theta.size)])
        out = {
            'theta': trace.theta.tolist(),
            'lambda': _json_float(cfg.lam),
            'seed': cfg.seed,
            'trace_path': args.trace_out,
        }
        if args.true_mean is not None:
            if args.true_mean.size != trace.theta.size:
                raise InvalidInputError(f"--true-mean has {args.true_mean.size} entries, "
                                        f"data has d={trace.theta.size}")
            out['error_vs'] = trace.error(args.true_mean)
        return out

    # ---------- gen ----------

    def cmd_gen(self) -> Optional[Dict[str, Any]]:
        args = self.args
        reference = None
        if args.model == 'clusters':
            if not args.clean_out:
                raise InvalidInputError("--clean-out is required for the clusters model")
            measure, reference, mask = gen_cluster_outliers(
                args.n_clean, args.n_out, args.d, args.separation, seed=args.seed,
                n_reference=args.n_reference)
        else:
            generator = gen_huber_gaussian if args.model == 'gaussian-huber' else gen_huber_cauchy
            measure, mask = generator(args.n, args.d, args.eps, args.eta0, args.eta1,
                                      seed=args.seed, fixed_count=args.fixed_count)

        with MeasureCsvWriter(args.out) as writer:
            writer.write(measure)
        if reference is not None:
            with MeasureCsvWriter(args.clean_out) as writer:
                writer.write(reference)
        if args.mask_out:
            write_matrix(args.mask_out, mask.astype(int).reshape(-1, 1), header=['outlier'])

        if args.out == '-':
            return None
        return {
            'model': args.model,
            'n': measure.n,
            'd': measure.d,
            'contaminated': int(mask.sum()),
            'out': args.out,
            'clean_out': args.clean_out,
            'seed': args.seed,
        }

    # ---------- bench ----------

    def cmd_bench(self) -> Dict[str, Any]:
        args = self.args
        suite = args.suite
        if suite == 'equivalence':
            report = diagnostics.equivalence_suite(seed=args.seed, trials=args.trials,
                                                   max_size=args.max_size)
            return {'suite': suite, 'passed': report.passed(), **report.to_dict()}
        if suite == 'bounds':
            report = diagnostics.bound_suite(seed=args.seed, trials=args.trials,
                                             max_size=args.max_size)
            return {'suite': suite, 'passed': report.violations == 0, **report.to_dict()}
        if suite == 'convergence':
            report = diagnostics.entropic_convergence(seed=args.seed, n=args.n, lam=args.lam)
            return {'suite': suite, **report.to_dict()}
        if suite == 'monotonicity':
            report = diagnostics.monotonicity_suite(seed=args.seed, instances=args.instances,
                                                    size=args.size, grid=args.grid)
            return {'suite': suite, **report.to_dict()}
        if suite == 'sensitivity':
            sgd = SgdConfig(alpha=args.alpha, outer_iters=args.outer, inner_iters=args.inner,
                            tau=args.tau, gamma=args.gamma)
            study = diagnostics.mean_estimation_study(
                lambdas=args.lambdas, seeds=range(args.seeds), n=args.n, d=args.d,
                eps=args.eps, eta1=args.eta1, contamination=args.contamination, sgd=sgd)
            if args.csv_out:
                write_rows(args.csv_out, study.rows, ('lambda', 'seed', 'error'))
            return {'suite': suite, **study.to_dict()}
        if suite == 'gradient':
            error = diagnostics.gradient_check(seed=args.seed, trials=args.trials)
            return {'suite': suite, 'max_relative_error': error}
        if suite == 'detection':
            config = DetectConfig(method=args.method, alpha=args.alpha)
            result = diagnostics.detection_accuracy(seeds=range(args.seeds), method=args.method,
                                                    separation=args.separation, config=config)
            return {'suite': suite, **result.to_dict()}
        raise InvalidInputError(f"unknown bench suite {suite!r}")

    # ---------- scan-lambda ----------

    def cmd_scan(self) -> Dict[str, Any]:
        args = self.args
        contaminated = read_measure(args.contaminated)
        clean = read_measure(args.clean)
        report = scan_lambda(contaminated, clean, CostSpec.parse(args.cost), args.grid,
                             config=self._detect_config())
        if args.csv_out:
            rows = [{'lambda': lam, 'index': i}
                    for lam, indices in zip(report.lambdas, report.outlier_sets) for i in indices]
            write_rows(args.csv_out, rows, ('lambda', 'index'))
        return report.to_dict()


# ==================== Parser ====================

def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument('--verbose', action='store_true',
                        help='Enable verbose logging')
    parser.add_argument('--log-file', type=str, default=None,
                        help='Also write the log to this file')


def _add_cost(parser: argparse.ArgumentParser):
    parser.add_argument('--cost', choices=['sqeuclidean', 'euclidean'], default='sqeuclidean',
                        help='Ground cost')


def _add_detect_flags(parser: argparse.ArgumentParser):
    defaults = DetectConfig()
    parser.add_argument('--method', choices=['exact', 'sinkhorn'], default=defaults.method,
                        help='Transport solver')
    parser.add_argument('--alpha', type=float, default=defaults.alpha,
                        help='Entropic regularization (sinkhorn)')
    parser.add_argument('--threshold', type=float, default=None,
                        help='Outlier threshold on mu + s1 (default 1e-9 exact, 1/n^2 sinkhorn)')
    parser.add_argument('--tol', type=float, default=defaults.tol,
                        help='Sinkhorn marginal tolerance')
    parser.add_argument('--max-iter', type=int, default=defaults.max_iter,
                        help='Sinkhorn iteration limit per stage')


def build_parser() -> argparse.ArgumentParser:
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = JsonArgumentParser(
        prog='robot',
        description="Outlier-robust optimal transport",
        formatter_class=formatter
    )
    commands = parser.add_subparsers(dest='command', required=True, metavar='command')

    # solve
    p = commands.add_parser('solve', help='ROBOT value between two measures', formatter_class=formatter)
    p.add_argument('--source', required=True, help='Source measure CSV')
    p.add_argument('--target', required=True, help='Target measure CSV')
    p.add_argument('--lambda', dest='lam', type=parse_lambda, required=True,
                   help="Truncation level (positive real or 'inf')")
    p.add_argument('--method', choices=['exact', 'sinkhorn'], default='exact',
                   help='Transport solver')
    p.add_argument('--transport', choices=['auto', 'simplex', 'emd'], default='auto',
                   help='Exact transport backend')
    p.add_argument('--alpha', type=float, default=SinkhornConfig.alpha,
                   help='Entropic regularization (sinkhorn)')
    p.add_argument('--tol', type=float, default=SinkhornConfig.tol,
                   help='Sinkhorn marginal tolerance')
    p.add_argument('--max-iter', type=int, default=SinkhornConfig.max_iter,
                   help='Sinkhorn iteration limit per stage')
    p.add_argument('--epsilon-scaling', action='store_true',
                   help='Anneal alpha geometrically down to --alpha')
    p.add_argument('--plan-out', default=None,
                   help='Write the (n+m) x (n+m) Formulation-1 plan to this CSV')
    _add_cost(p)
    _add_common(p)
    p.set_defaults(handler=RobotCli.cmd_solve)

    # detect
    p = commands.add_parser('detect', help='Outlier detection', formatter_class=formatter)
    p.add_argument('--contaminated', required=True, help='Contaminated sample CSV')
    p.add_argument('--clean', required=True, help='Clean reference CSV')
    p.add_argument('--lambda', dest='lam', type=parse_lambda_or_auto, required=True,
                   help="Truncation level, 'inf' or 'auto' (matched-cost percentile)")
    p.add_argument('--percentile', type=float, default=99.0,
                   help="Matched-cost percentile for --lambda auto")
    p.add_argument('--subsample', type=int, default=None,
                   help="Subsample size for --lambda auto (default n/2)")
    p.add_argument('--seed', type=int, default=0, help='Seed for --lambda auto')
    _add_detect_flags(p)
    _add_cost(p)
    _add_common(p)
    p.set_defaults(handler=RobotCli.cmd_detect)

    # estimate-mean
    sgd = SgdConfig()
    p = commands.add_parser('estimate-mean', help='Robust mean estimation', formatter_class=formatter)
    p.add_argument('--data', required=True, help='Data CSV')
    p.add_argument('--lambda', dest='lam', type=parse_lambda, default=sgd.lam,
                   help="Truncation level (positive real or 'inf')")
    p.add_argument('--alpha', type=float, default=sgd.alpha, help='Entropic regularization')
    p.add_argument('--outer', type=int, default=sgd.outer_iters, help='Outer iterations M')
    p.add_argument('--inner', type=int, default=sgd.inner_iters, help='Inner dual steps L')
    p.add_argument('--tau', type=float, default=sgd.tau, help='Theta step size')
    p.add_argument('--gamma', type=float, default=sgd.gamma, help='Dual step size')
    p.add_argument('--seed', type=int, default=sgd.seed, help='Noise seed')
    p.add_argument('--noise', choices=list(NOISE_FAMILIES), default=sgd.noise,
                   help='Generator noise family')
    p.add_argument('--theta-init', type=parse_vector, default=None,
                   help='Initial theta (default: coordinate-wise median)')
    p.add_argument('--true-mean', type=parse_vector, default=None,
                   help='Report the L2 error against this vector')
    p.add_argument('--trace-out', default=None, help='Write theta per outer step to this CSV')
    p.add_argument('--log-every', type=int, default=sgd.log_every,
                   help='Progress log interval (outer steps)')
    _add_common(p)
    p.set_defaults(handler=RobotCli.cmd_estimate_mean)

    # gen
    p = commands.add_parser('gen', help='Generate synthetic data', formatter_class=formatter)
    p.add_argument('--model', choices=['gaussian-huber', 'cauchy-huber', 'clusters'],
                   default='gaussian-huber', help='Data family')
    p.add_argument('--n', type=int, default=1000, help='Sample size (huber models)')
    p.add_argument('--d', type=int, default=5, help='Dimension')
    p.add_argument('--eps', type=float, default=0.2, help='Contamination probability')
    p.add_argument('--eta0', type=parse_vector, default=np.zeros(1),
                   help='Clean location (scalar or d values)')
    p.add_argument('--eta1', type=parse_vector, default=np.full(1, 2.0),
                   help='Contamination location (scalar or d values)')
    p.add_argument('--fixed-count', action='store_true',
                   help='Contaminate exactly floor(eps*n) points')
    p.add_argument('--n-clean', type=int, default=800, help='Inliers (clusters)')
    p.add_argument('--n-out', type=int, default=200, help='Outliers (clusters)')
    p.add_argument('--n-reference', type=int, default=None,
                   help='Clean reference size (clusters, default n-clean)')
    p.add_argument('--separation', type=float, default=6.0, help='Outlier shift (clusters)')
    p.add_argument('--seed', type=int, default=0, help='Random seed')
    p.add_argument('--out', default='-', help="Output CSV ('-' for stdout)")
    p.add_argument('--clean-out', default=None, help='Clean reference CSV (clusters)')
    p.add_argument('--mask-out', default=None, help='Ground-truth contamination mask CSV')
    _add_common(p)
    p.set_defaults(handler=RobotCli.cmd_gen)

    # bench
    p = commands.add_parser('bench', help='Diagnostics suites', formatter_class=formatter)
    suites = p.add_subparsers(dest='suite', required=True, metavar='suite')

    s = suites.add_parser('equivalence', help='Formulation equivalence', formatter_class=formatter)
    s.add_argument('--trials', type=int, default=200)
    s.add_argument('--max-size', type=int, default=8)
    s.add_argument('--seed', type=int, default=1)
    _add_common(s)

    s = suites.add_parser('bounds', help='Contamination upper bounds', formatter_class=formatter)
    s.add_argument('--trials', type=int, default=100)
    s.add_argument('--max-size', type=int, default=10)
    s.add_argument('--seed', type=int, default=0)
    _add_common(s)

    s = suites.add_parser('convergence', help='Entropic convergence', formatter_class=formatter)
    s.add_argument('--n', type=int, default=10)
    s.add_argument('--lambda', dest='lam', type=parse_lambda, default=None,
                   help='Truncation level (default: half the median cost)')
    s.add_argument('--seed', type=int, default=0)
    _add_common(s)

    s = suites.add_parser('monotonicity', help='Lambda monotonicity', formatter_class=formatter)
    s.add_argument('--instances', type=int, default=100)
    s.add_argument('--size', type=int, default=20)
    s.add_argument('--grid', type=parse_grid, default=[0.1, 0.25, 0.5, 1.0, 2.0])
    s.add_argument('--seed', type=int, default=0)
    _add_common(s)

    s = suites.add_parser('sensitivity', help='Mean estimation error per lambda',
                          formatter_class=formatter)
    s.add_argument('--lambdas', type=parse_grid, default=[0.5, math.inf])
    s.add_argument('--seeds', type=int, default=10, help='Number of seeds (0..seeds-1)')
    s.add_argument('--n', type=int, default=1000)
    s.add_argument('--d', type=int, default=5)
    s.add_argument('--eps', type=float, default=0.2)
    s.add_argument('--eta1', type=float, default=2.0)
    s.add_argument('--contamination', choices=['gaussian', 'cauchy'], default='gaussian')
    s.add_argument('--alpha', type=float, default=sgd.alpha)
    s.add_argument('--outer', type=int, default=sgd.outer_iters)
    s.add_argument('--inner', type=int, default=sgd.inner_iters)
    s.add_argument('--tau', type=float, default=sgd.tau)
    s.add_argument('--gamma', type=float, default=sgd.gamma)
    s.add_argument('--csv-out', default=None, help='Long-format lambda,seed,error CSV')
    _add_common(s)

    s = suites.add_parser('gradient', help='Theta gradient check', formatter_class=formatter)
    s.add_argument('--trials', type=int, default=50)
    s.add_argument('--seed', type=int, default=0)
    _add_common(s)

    s = suites.add_parser('detection', help='Detection accuracy on clusters',
                          formatter_class=formatter)
    s.add_argument('--seeds', type=int, default=5, help='Number of seeds (0..seeds-1)')
    s.add_argument('--method', choices=['exact', 'sinkhorn'], default='exact')
    s.add_argument('--alpha', type=float, default=DetectConfig.alpha)
    s.add_argument('--separation', type=float, default=6.0)
    _add_common(s)
    p.set_defaults(handler=RobotCli.cmd_bench)

    # scan-lambda
    p = commands.add_parser('scan-lambda', help='Outlier sets along a lambda grid',
                            formatter_class=formatter)
    p.add_argument('--contaminated', required=True, help='Contaminated sample CSV')
    p.add_argument('--clean', required=True, help='Clean reference CSV')
    p.add_argument('--grid', type=parse_grid, required=True,
                   help="Ascending comma-separated lambda values ('inf' allowed)")
    p.add_argument('--csv-out', default=None, help='Long-format lambda,index CSV')
    _add_detect_flags(p)
    _add_cost(p)
    _add_common(p)
    p.set_defaults(handler=RobotCli.cmd_scan)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    return RobotCli(args).run()


if __name__ == "__main__":
    sys.exit(main())
