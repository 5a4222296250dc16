"""Backend name → block solver mapping."""

from __future__ import annotations

from radarcs.errors import ConfigurationError
from radarcs.models import SolverBackend, SolverConfig
from radarcs.solvers.base import BlockSolver
from radarcs.solvers.bp import BasisPursuitSolver
from radarcs.solvers.omp import OmpSolver

_REGISTRY: dict[SolverBackend, type[BlockSolver]] = {
    SolverBackend.BP: BasisPursuitSolver,
    SolverBackend.OMP: OmpSolver,
}


def get_solver(backend: SolverBackend, config: SolverConfig | None = None) -> BlockSolver:
    """Create a block solver for the given backend."""
    solver_cls = _REGISTRY.get(backend)
    if solver_cls is None:
        raise ConfigurationError(f"Unknown solver backend: {backend}")
    return solver_cls(config)
