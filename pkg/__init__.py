from .src.config import RunConfig, SolverConfig
from .src.divergences import divergence
from .src.estimators import required_level, sandwich
from .src.sets import SetRepresentation, support_function
from .src.symmetry import block_decompose
from .src.types import DensityOperator, DivergenceKind, HermitianOperator, QuantumChannel

__version__ = "0.1.0"
__all__ = [
    "RunConfig",
    "SolverConfig",
    "divergence",
    "required_level",
    "sandwich",
    "SetRepresentation",
    "support_function",
    "block_decompose",
    "DensityOperator",
    "DivergenceKind",
    "HermitianOperator",
    "QuantumChannel",
]
