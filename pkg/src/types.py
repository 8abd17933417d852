import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import (
    HERMITIAN_TOLERANCE, PSD_TOLERANCE, TRACE_TOLERANCE,
)


class DivergenceKind(Enum):
    UMEGAKI = 'umegaki'
    MIN = 'min'
    MAX = 'max'
    MEASURED = 'measured'
    MEASURED_HALF = 'measured_half'


class ConeKind(Enum):
    PSD = 'psd'
    NONNEG = 'nonneg'
    FREE = 'free'
    QRE = 'qre'
    ORE = 'ore'


class SolveStatus(Enum):
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    MAX_ITERATIONS = 'max_iterations'
    INACCURATE = 'inaccurate'


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense complex Hermitian matrix with optional tensor structure.

    The entries are symmetrized on construction; inputs whose asymmetry
    exceeds HERMITIAN_TOLERANCE are rejected.
    """
    entries: np.ndarray
    subsystem_dims: Tuple[int, ...] = ()

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"Expected a nonempty square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOLERANCE * scale:
            raise ValueError("Matrix is not Hermitian")
        a = (a + a.conj().T) / 2
        a.setflags(write=False)
        dims = tuple(int(d) for d in self.subsystem_dims)
        if dims and int(np.prod(dims)) != a.shape[0]:
            raise ValueError(
                f"Subsystem dims {dims} do not multiply to dimension {a.shape[0]}"
            )
        if any(d < 1 for d in dims):
            raise ValueError("Subsystem dims must be positive")
        object.__setattr__(self, 'entries', a)
        object.__setattr__(self, 'subsystem_dims', dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.subsystem_dims or (self.dim,)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def is_psd(self, tol: float = PSD_TOLERANCE) -> bool:
        return bool(self.eigenvalues()[0] >= -tol)

    def with_dims(self, dims: Sequence[int]) -> 'HermitianOperator':
        return HermitianOperator(self.entries, tuple(dims))

    def __add__(self, other: 'HermitianOperator') -> 'HermitianOperator':
        return HermitianOperator(self.entries + other.entries, self.subsystem_dims)

    def __sub__(self, other: 'HermitianOperator') -> 'HermitianOperator':
        return HermitianOperator(self.entries - other.entries, self.subsystem_dims)

    def scaled(self, factor: float) -> 'HermitianOperator':
        return HermitianOperator(float(factor) * self.entries, self.subsystem_dims)


@dataclass(frozen=True, eq=False)
class DensityOperator(HermitianOperator):
    """Positive semidefinite operator of unit trace."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_psd():
            raise ValueError("Density operator must be positive semidefinite")
        if abs(self.trace() - 1.0) > TRACE_TOLERANCE:
            raise ValueError(f"Density operator must have unit trace, got {self.trace()}")

    @classmethod
    def from_operator(cls, op: HermitianOperator) -> 'DensityOperator':
        return cls(op.entries, op.subsystem_dims)

    @classmethod
    def from_vector(cls, psi: np.ndarray, dims: Sequence[int] = ()) -> 'DensityOperator':
        v = np.asarray(psi, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("State vector must be nonzero")
        v = v / norm
        return cls(np.outer(v, v.conj()), tuple(dims))


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    kraus_ops: Tuple[np.ndarray, ...]
    trace_preserving: bool = True
    name: str = 'channel'

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("A channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must share one shape")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, 'kraus_ops', ops)
        if self.trace_preserving:
            completeness = sum(k.conj().T @ k for k in ops)
            if np.max(np.abs(completeness - np.eye(shape[1]))) > TRACE_TOLERANCE:
                raise ValueError("Kraus operators are not trace preserving")

    @property
    def dim_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops[0].shape[0]

    def apply_matrix(self, x: np.ndarray) -> np.ndarray:
        return sum(k @ x @ k.conj().T for k in self.kraus_ops)

    def __call__(self, rho: HermitianOperator) -> HermitianOperator:
        return HermitianOperator(self.apply_matrix(rho.entries))


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    kind: DivergenceKind

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to_json(self) -> Dict[str, Any]:
        return {'value': 'inf' if self.is_infinite else float(self.value),
                'kind': self.kind.value}

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class Partition:
    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise ValueError("Partition parts must be positive")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError("Partition parts must be weakly decreasing")
        object.__setattr__(self, 'parts', parts)

    @property
    def m(self) -> int:
        return sum(self.parts)

    @property
    def height(self) -> int:
        return len(self.parts)

    def cells(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, row in enumerate(self.parts) for j in range(row)]

    def conjugate(self) -> 'Partition':
        if not self.parts:
            return Partition(())
        return Partition(tuple(sum(1 for p in self.parts if p > j)
                               for j in range(self.parts[0])))

    def __str__(self) -> str:
        return '(' + ','.join(str(p) for p in self.parts) + ')'


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Block basis of the permutation-invariant operators on (C^d)^{(x) m}.

    ``isometries[k]`` has shape (multiplicity, d^m, size): one isometry per
    copy of block k. An invariant X satisfies V_j^dag X V_j = X_k for every
    copy j, and X = sum_k sum_j V_j X_k V_j^dag.
    """
    d: int
    m: int
    partitions: Tuple[Partition, ...]
    sizes: Tuple[int, ...]
    multiplicities: Tuple[int, ...]
    isometries: Tuple[np.ndarray, ...]
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.d ** self.m

    @property
    def commutant_dim(self) -> int:
        return sum(s * s for s in self.sizes)

    def unitary(self) -> np.ndarray:
        columns = [v[j] for v in self.isometries for j in range(v.shape[0])]
        return np.hstack(columns)

    def forward(self, x: np.ndarray) -> List[np.ndarray]:
        out = []
        for v in self.isometries:
            blocks = np.einsum('jak,ab,jbl->jkl', v.conj(), x, v)
            out.append(blocks.mean(axis=0))
        return out

    def inverse(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        x = np.zeros((self.dim, self.dim), dtype=complex)
        for v, y in zip(self.isometries, blocks):
            x += np.einsum('jak,kl,jbl->ab', v, y, v.conj())
        return x

    def describe(self) -> List[Dict[str, Any]]:
        return [{'partition': list(p.parts), 'size': s, 'multiplicity': f}
                for p, s, f in zip(self.partitions, self.sizes, self.multiplicities)]


@dataclass(frozen=True)
class ConeSpec:
    kind: ConeKind
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("Cone block dimension must be at least 1")

    @property
    def size(self) -> int:
        """Number of real coordinates of the block."""
        if self.kind == ConeKind.PSD:
            return self.n * self.n
        if self.kind in (ConeKind.NONNEG, ConeKind.FREE):
            return self.n
        if self.kind == ConeKind.QRE:
            return 2 * self.n * self.n + 1
        return 3 * self.n * self.n


@dataclass
class Solution:
    status: SolveStatus
    value: float
    blocks: List[Any] = field(default_factory=list)
    accuracy: float = math.inf
    residual: float = math.inf
    quad_order: Optional[Tuple[int, int]] = None
    solver: str = ''
    x: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


class SolverError(RuntimeError):
    def __init__(self, message: str, solution: Optional[Solution] = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class SandwichReport:
    level: int
    lower: float
    upper: float
    gap_bound: float
    d: int
    lower_accuracy: float = 0.0
    upper_accuracy: float = 0.0
    assumptions_certified: bool = False
    symmetry: bool = False
    label: str = ''

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def certificate_holds(self, slack: float = 1e-5) -> bool:
        if math.isinf(self.upper) or not self.assumptions_certified:
            return True
        return self.gap <= self.gap_bound + slack

    def to_json(self) -> Dict[str, Any]:
        def enc(x: float) -> Any:
            return 'inf' if math.isinf(x) else float(x)
        return {
            'label': self.label,
            'level': self.level,
            'lower': enc(self.lower),
            'upper': enc(self.upper),
            'gap_bound': enc(self.gap_bound),
            'd': self.d,
            'lower_accuracy': self.lower_accuracy,
            'upper_accuracy': self.upper_accuracy,
            'assumptions_certified': self.assumptions_certified,
            'symmetry': self.symmetry,
        }


@dataclass
class BoundReport:
    descriptor: str
    values: Dict[str, float] = field(default_factory=dict)
    parameters: Dict[str, float] = field(default_factory=dict)

    def ordering_holds(self, slack: float = 1e-6) -> bool:
        v = self.values
        if 'd_m_pptk' not in v:
            return True
        below = [v[k] for k in ('e_wd1', 'e_wd2', 'e_wjz') if k in v]
        ok = all(b <= v['d_m_pptk'] + slack for b in below)
        if 'pptk_upper' in v:
            ok = ok and v['d_m_pptk'] <= v['pptk_upper'] + slack
        return ok

    def to_json(self) -> Dict[str, Any]:
        return {'descriptor': self.descriptor,
                'values': {k: ('inf' if math.isinf(x) else x) for k, x in self.values.items()},
                'parameters': dict(self.parameters)}
