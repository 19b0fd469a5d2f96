"""
Ground Costs
============

Cost-matrix assembly, truncation at 2*lambda, the augmented cost over the
concatenated supports, and the index set of truncated (outlier) matches.

Both supported ground costs satisfy c(x, x) = 0 and c >= 0.
"""

import math
from enum import Enum
from dataclasses import dataclass
from typing import Set, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from .core import CostMatrix, InvalidInputError, check_lambda


class CostKind(str, Enum):
    SQUARED_EUCLIDEAN = "sqeuclidean"
    EUCLIDEAN = "euclidean"


_ALIASES = {
    "sqeuclidean": CostKind.SQUARED_EUCLIDEAN,
    "squared_euclidean": CostKind.SQUARED_EUCLIDEAN,
    "sq_euclidean": CostKind.SQUARED_EUCLIDEAN,
    "euclidean": CostKind.EUCLIDEAN,
}


@dataclass(frozen=True)
class CostSpec:
    """Ground cost c(x, y)."""
    kind: CostKind = CostKind.SQUARED_EUCLIDEAN

    @classmethod
    def parse(cls, name: Union[str, 'CostSpec', CostKind]) -> 'CostSpec':
        if isinstance(name, CostSpec):
            return name
        if isinstance(name, CostKind):
            return cls(name)
        try:
            return cls(_ALIASES[str(name).lower()])
        except KeyError:
            raise InvalidInputError(f"unknown cost {name!r}, expected one of {sorted(_ALIASES)}")

    @property
    def symmetric(self) -> bool:
        return True

    def pairwise(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X = _as_points(X)
        Y = _as_points(Y)
        if X.shape[1] != Y.shape[1]:
            raise InvalidInputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        return cdist(X, Y, metric=self.kind.value)

    def __call__(self, x, y) -> float:
        return float(self.pairwise(np.atleast_2d(x), np.atleast_2d(y))[0, 0])


def _as_points(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X


def cost_matrix(X, Y, spec: CostSpec = CostSpec()) -> CostMatrix:
    """values[i, j] = c(X_i, Y_j); truncation unset."""
    spec = CostSpec.parse(spec)
    return CostMatrix(spec.pairwise(X, Y), spec.kind.value)


def truncate(C: CostMatrix, lam: float) -> CostMatrix:
    """Elementwise min with 2*lambda. lambda = inf returns C unchanged."""
    lam = check_lambda(lam)
    if math.isinf(lam):
        return C
    return CostMatrix(np.minimum(C.values, 2.0 * lam), C.ground, truncation=lam)


def augmented_cost(X, Y, spec: CostSpec = CostSpec()) -> CostMatrix:
    """Cost over the concatenated support [X; Y], zero diagonal."""
    spec = CostSpec.parse(spec)
    X = _as_points(X)
    Y = _as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise InvalidInputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    Z = np.vstack([X, Y])
    values = spec.pairwise(Z, Z)
    np.fill_diagonal(values, 0.0)
    return CostMatrix(values, spec.kind.value)


def outlier_mask(C: CostMatrix, lam: float) -> np.ndarray:
    """Boolean n x m mask of entries with C[i, j] > 2*lambda (strict)."""
    lam = check_lambda(lam)
    if C.truncation is not None and math.isfinite(C.truncation):
        raise InvalidInputError("outlier index set needs the untruncated cost")
    if math.isinf(lam):
        return np.zeros(C.shape, dtype=bool)
    return C.values > 2.0 * lam


def outlier_index_set(C: CostMatrix, lam: float) -> Set[Tuple[int, int]]:
    """Indices (i, j), 0-based, whose cost exceeds 2*lambda."""
    rows, cols = np.nonzero(outlier_mask(C, lam))
    return {(int(i), int(j)) for i, j in zip(rows, cols)}
