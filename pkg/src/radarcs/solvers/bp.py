"""Basis pursuit in the DCT coefficient domain, solved with ADMM.

    minimize ||s||_1  subject to  ||phi theta^T s - y||_2 <= eps

The x-step is an exact projection onto the feasible set, so every x-iterate
satisfies the constraint; the z-step is a soft threshold. The penalty is
re-balanced against the primal/dual residual ratio during the first
iterations.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg, optimize

from radarcs.models import SolverConfig
from radarcs.sensing import DctOperator, MeasurementMatrix, MeasurementVector
from radarcs.solvers.base import BlockSolver, Recovery, SensingOperator

_PENALTY_GAP = 10.0
_PENALTY_FACTOR = 2.0
_ADAPT_EVERY = 10
_ADAPT_UNTIL = 500
_MAX_BRACKET = 400
_TINY = np.finfo(np.float64).tiny


def _soft(v: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


class _BallProjector:
    """Euclidean projection onto {s : ||A s - y|| <= eps}.

    With A A^T = Q diag(lam) Q^T the projection of v is v - mu A^T w where
    w = (I + mu A A^T)^-1 (A v - y) and mu makes ||w|| = eps. When eps is at
    or below the part of the residual A cannot reach, mu -> inf and the
    projection becomes the least-squares one.
    """

    def __init__(self, op: SensingOperator, y: np.ndarray, eps: float) -> None:
        self._op = op
        self._y = y
        self._eps = eps
        lam, q = linalg.eigh(op.gram())
        top = float(lam[-1]) if lam.size else 0.0
        self._pos = lam > max(top, 0.0) * 1e-12 if top > 0 else np.zeros(lam.size, dtype=bool)
        self._lam = np.where(self._pos, lam, 0.0)
        self._q = q
        self._mu = 1.0 / top if top > 0 else 1.0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        r0 = self._op.forward(v) - self._y
        if np.linalg.norm(r0) <= self._eps:
            return v
        c = self._q.T @ r0
        floor = float(np.linalg.norm(c[~self._pos]))
        if self._eps <= floor:
            return self._least_squares(v, c)
        mu = self._multiplier(c * c)
        if mu is None:
            return self._least_squares(v, c)
        w = self._q @ (c / (1.0 + mu * self._lam))
        return v - mu * self._op.adjoint(w)

    def _least_squares(self, v: np.ndarray, c: np.ndarray) -> np.ndarray:
        pos = self._pos
        return v - self._op.adjoint(self._q[:, pos] @ (c[pos] / self._lam[pos]))

    def _multiplier(self, c2: np.ndarray) -> float | None:
        lam, eps = self._lam, self._eps

        def excess(mu: float) -> float:
            return float(np.sqrt(np.sum(c2 / (1.0 + mu * lam) ** 2))) - eps

        lo, hi = self._mu / 8.0, self._mu * 8.0
        if excess(lo) <= 0:
            lo = 0.0
        for _ in range(_MAX_BRACKET):
            if excess(hi) <= 0:
                break
            lo, hi = hi, hi * 8.0
        else:
            return None
        self._mu = optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=1e-12)
        return self._mu


def basis_pursuit(
    matrix: MeasurementMatrix,
    dct: DctOperator,
    y: MeasurementVector,
    cfg: SolverConfig | None = None,
) -> Recovery:
    """Approximately minimize ||s||_1 subject to ||A s - y||_2 <= eps.

    Non-convergence is reported through ``Recovery.converged``; the lowest-l1
    feasible iterate seen is returned either way.
    """
    cfg = cfg or SolverConfig()
    op = SensingOperator(matrix, dct)
    values = op.measurements(y)
    y_norm = float(np.linalg.norm(values))
    if y_norm == 0.0:
        return Recovery(coefficients=np.zeros(op.n), residual=0.0, iterations_used=0, converged=True)

    eps = cfg.epsilon(y_norm)
    project = _BallProjector(op, values, eps)
    tol = cfg.convergence_tol
    gap = float(np.sqrt(tol))

    x = project(np.zeros(op.n))
    rho = 10.0 / max(float(np.max(np.abs(x))), _TINY)
    z = _soft(x, 1.0 / rho)
    u = x - z
    best, best_obj = x, float(np.abs(x).sum())
    prev_obj = best_obj
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iterations + 1):
        x = project(z - u)
        z_old = z
        z = _soft(x + u, 1.0 / rho)
        u = u + x - z

        obj = float(np.abs(x).sum())
        if obj < best_obj:
            best, best_obj = x, obj

        primal = float(np.linalg.norm(x - z))
        dual = rho * float(np.linalg.norm(z - z_old))
        change = abs(obj - prev_obj) / max(obj, _TINY)
        prev_obj = obj
        if (
            change < tol
            and primal <= gap * max(float(np.linalg.norm(x)), _TINY)
            and dual <= gap * max(rho * float(np.linalg.norm(u)), _TINY)
        ):
            converged = True
            break

        if iterations % _ADAPT_EVERY == 0 and iterations <= _ADAPT_UNTIL:
            if primal > _PENALTY_GAP * dual:
                rho *= _PENALTY_FACTOR
                u = u / _PENALTY_FACTOR
            elif dual > _PENALTY_GAP * primal:
                rho /= _PENALTY_FACTOR
                u = u * _PENALTY_FACTOR

    # eps below the part of y that A cannot reach leaves only least-squares iterates.
    residual = op.residual(best, values)
    feasible = residual <= eps + 1e-9 * max(1.0, y_norm)
    return Recovery(
        coefficients=best,
        residual=residual,
        iterations_used=iterations,
        converged=converged and feasible,
    )


def reconstruct_block(
    matrix: MeasurementMatrix,
    dct: DctOperator,
    y: MeasurementVector,
    cfg: SolverConfig | None = None,
) -> np.ndarray:
    """Basis pursuit followed by DCT synthesis."""
    return dct.inverse(basis_pursuit(matrix, dct, y, cfg).coefficients)


class BasisPursuitSolver(BlockSolver):
    """Block solver backed by ADMM basis pursuit."""

    def __init__(self, config: SolverConfig | None = None) -> None:
        self._config = config or SolverConfig()

    def recover(
        self,
        matrix: MeasurementMatrix,
        dct: DctOperator,
        y: MeasurementVector,
    ) -> Recovery:
        return basis_pursuit(matrix, dct, y, self._config)
