"""Orthogonal matching pursuit, used as an oracle and as an alternative backend."""

from __future__ import annotations

import numpy as np
from sklearn.linear_model import orthogonal_mp

from radarcs.errors import ParameterError
from radarcs.models import SolverConfig
from radarcs.sensing import DctOperator, MeasurementMatrix, MeasurementVector
from radarcs.solvers.base import BlockSolver, Recovery, SensingOperator


def omp(
    matrix: MeasurementMatrix,
    dct: DctOperator,
    y: MeasurementVector,
    sparsity_k: int | None = None,
    residual_tol: float | None = None,
) -> Recovery:
    """Greedy recovery of DCT coefficients.

    Stops after ``sparsity_k`` atoms, or once the residual norm drops to
    ``residual_tol`` when that is given.
    """
    if sparsity_k is None and residual_tol is None:
        raise ParameterError("omp needs sparsity_k or residual_tol")
    if sparsity_k is not None and not 1 <= sparsity_k <= matrix.m:
        raise ParameterError(f"sparsity_k must lie in [1, m={matrix.m}], got {sparsity_k}")

    op = SensingOperator(matrix, dct)
    values = op.measurements(y)
    if not values.any():
        return Recovery(coefficients=np.zeros(op.n), residual=0.0, iterations_used=0, converged=True)

    a = op.dense()
    norms = np.linalg.norm(a, axis=0)
    norms[norms == 0] = 1.0
    if residual_tol is not None:
        coef = orthogonal_mp(a / norms, values, tol=residual_tol**2)
    else:
        coef = orthogonal_mp(a / norms, values, n_nonzero_coefs=sparsity_k)
    coefficients = np.asarray(coef, dtype=np.float64).ravel() / norms

    residual = op.residual(coefficients, values)
    support = int(np.count_nonzero(coefficients))
    if residual_tol is not None:
        converged = residual <= residual_tol * (1 + 1e-9)
    else:
        converged = support >= int(sparsity_k) or residual <= 1e-12 * np.linalg.norm(values)
    return Recovery(
        coefficients=coefficients,
        residual=residual,
        iterations_used=support,
        converged=bool(converged),
    )


class OmpSolver(BlockSolver):
    """Block solver backed by OMP; sparsity defaults to a quarter of m."""

    def __init__(self, config: SolverConfig | None = None) -> None:
        self._config = config or SolverConfig()

    def recover(
        self,
        matrix: MeasurementMatrix,
        dct: DctOperator,
        y: MeasurementVector,
    ) -> Recovery:
        cfg = self._config
        if cfg.omp_residual_tol is not None:
            return omp(matrix, dct, y, residual_tol=cfg.omp_residual_tol)
        k = min(cfg.omp_sparsity or max(1, matrix.m // 4), matrix.m)
        return omp(matrix, dct, y, sparsity_k=k)
