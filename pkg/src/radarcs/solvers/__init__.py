"""Block recovery backends."""

from radarcs.solvers.base import BlockSolver, Recovery, SensingOperator
from radarcs.solvers.bp import basis_pursuit, reconstruct_block
from radarcs.solvers.omp import omp
from radarcs.solvers.registry import get_solver

__all__ = [
    "BlockSolver",
    "Recovery",
    "SensingOperator",
    "basis_pursuit",
    "get_solver",
    "omp",
    "reconstruct_block",
]
