# Import main classes for easy access
from .config import RunConfig, SolverConfig
from .conic import ConicProgram, ProgramBuilder, solve
from .sets import SetRepresentation
from .types import (
    DensityOperator, DivergenceKind, HermitianOperator, QuantumChannel, SandwichReport,
    SolverError,
)

__all__ = [
    "RunConfig",
    "SolverConfig",
    "ConicProgram",
    "ProgramBuilder",
    "solve",
    "SetRepresentation",
    "DensityOperator",
    "DivergenceKind",
    "HermitianOperator",
    "QuantumChannel",
    "SandwichReport",
    "SolverError",
]
