"""Abstract base class for block solvers and the shared sensing operator."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from radarcs.errors import DimensionError
from radarcs.sensing import (
    DctOperator,
    MeasurementMatrix,
    MeasurementVector,
    apply_adjoint,
    apply_matrix,
)


@dataclass(frozen=True, eq=False)
class Recovery:
    """DCT coefficients recovered for one block."""

    coefficients: np.ndarray
    residual: float
    iterations_used: int
    converged: bool


class SensingOperator:
    """A = phi theta^T, applied without ever forming the dense product."""

    def __init__(self, matrix: MeasurementMatrix, dct: DctOperator) -> None:
        if matrix.n != dct.n:
            raise DimensionError(
                f"matrix has {matrix.n} columns but the DCT block holds {dct.n} values"
            )
        self.matrix = matrix
        self.dct = dct

    @property
    def m(self) -> int:
        return self.matrix.m

    @property
    def n(self) -> int:
        return self.matrix.n

    def forward(self, coefficients: np.ndarray) -> np.ndarray:
        return apply_matrix(self.matrix, self.dct.inverse(coefficients))

    def adjoint(self, measurements: np.ndarray) -> np.ndarray:
        return self.dct.forward(apply_adjoint(self.matrix, measurements))

    def gram(self) -> np.ndarray:
        """A A^T, which equals phi phi^T since theta is orthonormal."""
        phi = self.matrix.operator
        return (phi @ phi.T).toarray()

    def dense(self) -> np.ndarray:
        """Explicit (m, n) matrix; only for oracles and OMP."""
        return self.dct.forward_columns(self.matrix.operator.T.toarray()).T

    def residual(self, coefficients: np.ndarray, y: np.ndarray) -> float:
        return float(np.linalg.norm(self.forward(coefficients) - y))

    def measurements(self, y: MeasurementVector | np.ndarray) -> np.ndarray:
        values = y.values if isinstance(y, MeasurementVector) else np.asarray(y, dtype=np.float64)
        if values.size != self.m:
            raise DimensionError(f"measurement vector has length {values.size}, matrix has m={self.m}")
        return values


class BlockSolver(ABC):
    """Base class for all block recovery backends."""

    @abstractmethod
    def recover(
        self,
        matrix: MeasurementMatrix,
        dct: DctOperator,
        y: MeasurementVector,
    ) -> Recovery:
        """Recover DCT coefficients of one block from its measurements."""

    def reconstruct(
        self,
        matrix: MeasurementMatrix,
        dct: DctOperator,
        y: MeasurementVector,
    ) -> tuple[np.ndarray, Recovery]:
        recovery = self.recover(matrix, dct, y)
        return dct.inverse(recovery.coefficients), recovery
