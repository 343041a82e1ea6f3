"""Variational linear-solver time stepping for evolution PDEs on a statevector simulator."""

from .evolution import (
    AxisBC,
    BoundarySpec,
    GridSpec,
    TimeSeries,
    evolve,
    evolve_2d,
    exact_heat,
    trace_error,
)
from .navier_stokes import FlowState, cavity_grid, evolve_ns
from .operators import Boundary, DecomposedOperator, HamiltonianTerm
from .reaction import RDSystem, evolve_rd, evolve_rd_implicit_linear
from .state import StateVector, encode
from .vqls import AnsatzParams, SolveResult, vqls_solve

__version__ = "0.1.0"

__all__ = [
    "AnsatzParams",
    "AxisBC",
    "Boundary",
    "BoundarySpec",
    "DecomposedOperator",
    "FlowState",
    "GridSpec",
    "HamiltonianTerm",
    "RDSystem",
    "SolveResult",
    "StateVector",
    "TimeSeries",
    "cavity_grid",
    "encode",
    "evolve",
    "evolve_2d",
    "evolve_ns",
    "evolve_rd",
    "evolve_rd_implicit_linear",
    "exact_heat",
    "trace_error",
    "vqls_solve",
]
