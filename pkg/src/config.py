import os
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple


@dataclass
class SolverConfig:
    tol: float = 1e-7
    solver: str = 'CLARABEL'
    quad_order: Tuple[int, int] = (3, 3)
    max_quad_order: int = 10
    max_iterations: int = 500
    t_floor: float = 1e-9
    escalate: bool = True
    verbose: bool = False

    def __post_init__(self):
        if not 1e-9 <= self.tol <= 1e-3:
            raise ValueError("Tolerance must lie in [1e-9, 1e-3]")
        if len(self.quad_order) != 2 or min(self.quad_order) < 1:
            raise ValueError("Quadrature order must be a pair of positive integers")
        if self.max_quad_order < max(self.quad_order):
            raise ValueError("max_quad_order must not be below the starting order")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.t_floor <= 0:
            raise ValueError("t_floor must be positive")
        self.quad_order = (int(self.quad_order[0]), int(self.quad_order[1]))


def default_threads() -> int:
    value = os.environ.get('REGENT_THREADS', '1')
    try:
        return max(1, int(value))
    except ValueError:
        return 1


@dataclass
class RunConfig:
    subcommand: str = ''
    inputs: List[str] = field(default_factory=list)
    tol: float = 1e-7
    seed: int = 0
    symmetry: bool = True
    output_format: Literal['json', 'csv'] = 'json'
    samples: Optional[int] = None
    threads: int = field(default_factory=default_threads)
    out_dir: Optional[str] = None

    def __post_init__(self):
        if not 1e-9 <= self.tol <= 1e-3:
            raise ValueError("Tolerance must lie in [1e-9, 1e-3]")
        if self.output_format not in ('json', 'csv'):
            raise ValueError("Output format must be json or csv")
        if self.samples is not None and self.samples < 1:
            raise ValueError("Sample count must be positive")
        if self.threads < 1:
            raise ValueError("Thread count must be positive")

    def solver_config(self) -> SolverConfig:
        return SolverConfig(tol=self.tol)

    def header(self) -> dict:
        return {
            'subcommand': self.subcommand,
            'inputs': list(self.inputs),
            'tol': self.tol,
            'seed': self.seed,
            'symmetry': self.symmetry,
            'format': self.output_format,
            'samples': self.samples,
        }


HERMITIAN_TOLERANCE = 1e-8
SYMMETRIZE_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-10
RANK_TOLERANCE = 1e-9
SUPPORT_TOLERANCE = 1e-8
POLAR_TOLERANCE = 1e-8
SYMMETRY_PROBE_TOLERANCE = 1e-9
EIGENVALUE_CLUSTER_TOLERANCE = 1e-8

MAX_TWIRL_COPIES = 6
MAX_BLOCK_DIM = 1024
MAX_DECOMPOSITION_ATTEMPTS = 5

VERSION = '0.1.0'
