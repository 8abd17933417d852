"""Real coordinates for block-diagonal Hermitian spaces.

A BlockSpace is a direct sum of blocks. A 'herm' block holds an n x n
Hermitian matrix, a 'diag' block a real vector of length n (a diagonal
matrix). Coordinates are orthonormal for the weighted Hilbert-Schmidt
inner product sum_b w_b tr[X_b Y_b], so the adjoint of a linear map between
two spaces is the transpose of its coordinate matrix.

Blocks that carry a permutation action record the single-copy dimension
(`local_dim`) and the number of copies; the action permutes tensor factors
of (C^local_dim)^{(x) copies} for 'herm' blocks and index tuples of
[local_dim]^copies for 'diag' blocks.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

BlockValue = np.ndarray
BlockValues = List[np.ndarray]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Block:
    kind: str
    size: int
    weight: Union[float, Tuple[float, ...]] = 1.0
    local_dim: Optional[int] = None
    copies: int = 1
    label: str = ''

    def __post_init__(self):
        if self.kind not in ('herm', 'diag'):
            raise ValueError(f"Unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("Block size must be positive")
        if self.kind == 'diag' and not isinstance(self.weight, (int, float)):
            if len(self.weight) != self.size:
                raise ValueError("Diagonal block weights must match the block size")
        if self.kind == 'herm' and not isinstance(self.weight, (int, float)):
            raise ValueError("Hermitian blocks carry a scalar weight")
        if self.local_dim is not None and self.local_dim ** self.copies != self.size:
            raise ValueError(
                f"Block of size {self.size} cannot carry {self.copies} copies "
                f"of dimension {self.local_dim}"
            )

    @property
    def coord_dim(self) -> int:
        return self.size * self.size if self.kind == 'herm' else self.size

    @property
    def symmetric(self) -> bool:
        return self.local_dim is not None and self.copies > 1

    def weights(self) -> np.ndarray:
        if self.kind == 'diag':
            if isinstance(self.weight, (int, float)):
                return np.full(self.size, float(self.weight))
            return np.asarray(self.weight, dtype=float)
        return np.array([float(self.weight)])

    def zero(self) -> np.ndarray:
        if self.kind == 'herm':
            return np.zeros((self.size, self.size), dtype=complex)
        return np.zeros(self.size)


def herm_block(size: int, weight: float = 1.0, local_dim: Optional[int] = None,
               copies: int = 1, label: str = '') -> Block:
    return Block('herm', size, float(weight), local_dim, copies, label)


def diag_block(size: int, weight=1.0, local_dim: Optional[int] = None,
               copies: int = 1, label: str = '') -> Block:
    if not isinstance(weight, (int, float)):
        weight = tuple(float(w) for w in weight)
    return Block('diag', size, weight, local_dim, copies, label)


def scalar_block(label: str = '') -> Block:
    return Block('diag', 1, 1.0, None, 1, label)


@lru_cache(maxsize=None)
def _upper_indices(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def hvec(x: np.ndarray) -> np.ndarray:
    """Orthonormal real coordinates of a Hermitian matrix."""
    n = x.shape[0]
    iu, ju = _upper_indices(n)
    upper = x[iu, ju]
    return np.concatenate([np.real(np.diag(x)), _SQRT2 * upper.real, _SQRT2 * upper.imag])


def unhvec(v: np.ndarray, n: int) -> np.ndarray:
    iu, ju = _upper_indices(n)
    k = len(iu)
    x = np.zeros((n, n), dtype=complex)
    x[np.arange(n), np.arange(n)] = v[:n]
    upper = (v[n:n + k] + 1j * v[n + k:n + 2 * k]) / _SQRT2
    x[iu, ju] = upper
    x[ju, iu] = upper.conj()
    return x


@lru_cache(maxsize=None)
def hvec_operators(n: int) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse (R, I) with hvec(X) = R @ vec(Re X) + I @ vec(Im X), column-major vec."""
    iu, ju = _upper_indices(n)
    k = len(iu)
    rows_r = list(range(n)) + list(range(n, n + k))
    cols_r = [i + i * n for i in range(n)] + list(iu + ju * n)
    vals_r = [1.0] * n + [_SQRT2] * k
    real_part = sp.csr_matrix((vals_r, (rows_r, cols_r)), shape=(n * n, n * n))
    rows_i = list(range(n + k, n + 2 * k))
    cols_i = list(iu + ju * n)
    imag_part = sp.csr_matrix(([_SQRT2] * k, (rows_i, cols_i)), shape=(n * n, n * n))
    return real_part, imag_part


@dataclass(frozen=True, eq=False)
class BlockSpace:
    blocks: Tuple[Block, ...]
    offsets: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("A block space needs at least one block")
        offsets = [0]
        for b in blocks:
            offsets.append(offsets[-1] + b.coord_dim)
        object.__setattr__(self, 'blocks', blocks)
        object.__setattr__(self, 'offsets', tuple(offsets))

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    def __len__(self) -> int:
        return len(self.blocks)

    def zeros(self) -> BlockValues:
        return [b.zero() for b in self.blocks]

    def block_coords(self, index: int, value: np.ndarray) -> np.ndarray:
        b = self.blocks[index]
        if b.kind == 'herm':
            return math.sqrt(b.weight) * hvec(np.asarray(value))
        return np.sqrt(b.weights()) * np.real(np.asarray(value, dtype=complex)).reshape(-1)

    def to_coords(self, values: Sequence[np.ndarray]) -> np.ndarray:
        if len(values) != len(self.blocks):
            raise ValueError(f"Expected {len(self.blocks)} blocks, got {len(values)}")
        return np.concatenate([self.block_coords(i, v) for i, v in enumerate(values)])

    def from_coords(self, vec: np.ndarray) -> BlockValues:
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if vec.shape[0] != self.dim:
            raise ValueError(f"Expected {self.dim} coordinates, got {vec.shape[0]}")
        out = []
        for i, b in enumerate(self.blocks):
            chunk = vec[self.offsets[i]:self.offsets[i + 1]]
            if b.kind == 'herm':
                out.append(unhvec(chunk / math.sqrt(b.weight), b.size))
            else:
                out.append(chunk / np.sqrt(b.weights()))
        return out

    def basis_element(self, k: int) -> BlockValues:
        e = np.zeros(self.dim)
        e[k] = 1.0
        return self.from_coords(e)

    def inner(self, x: Sequence[np.ndarray], y: Sequence[np.ndarray]) -> float:
        return float(self.to_coords(x) @ self.to_coords(y))

    def identity(self) -> BlockValues:
        return [np.eye(b.size, dtype=complex) if b.kind == 'herm' else np.ones(b.size)
                for b in self.blocks]

    def trace_weights(self) -> np.ndarray:
        """Coordinates t with t . coords(X) = weighted trace of X."""
        return self.to_coords(self.identity())

    def random_values(self, rng: np.random.Generator) -> BlockValues:
        out = []
        for b in self.blocks:
            if b.kind == 'herm':
                g = rng.normal(size=(b.size, b.size)) + 1j * rng.normal(size=(b.size, b.size))
                out.append((g + g.conj().T) / 2)
            else:
                out.append(rng.normal(size=b.size))
        return out

    def describe(self) -> List[dict]:
        return [{'kind': b.kind, 'size': b.size, 'label': b.label,
                 'local_dim': b.local_dim, 'copies': b.copies} for b in self.blocks]


LinearMap = Callable[[BlockValues], BlockValues]


def materialize(fn: LinearMap, source: BlockSpace, target: BlockSpace,
                drop: float = 1e-14) -> sp.csr_matrix:
    """Coordinate matrix of a linear map, assembled column by column."""
    rows, cols, vals = [], [], []
    for k in range(source.dim):
        column = target.to_coords(fn(source.basis_element(k)))
        nz = np.nonzero(np.abs(column) > drop)[0]
        rows.extend(nz.tolist())
        cols.extend([k] * len(nz))
        vals.extend(column[nz].tolist())
    return sp.csr_matrix((vals, (rows, cols)), shape=(target.dim, source.dim))


def is_linear(fn: LinearMap, source: BlockSpace, target: BlockSpace,
              rng: np.random.Generator, trials: int = 3, tol: float = 1e-9) -> bool:
    """Additivity and homogeneity probe on random inputs."""
    for _ in range(trials):
        x = source.random_values(rng)
        y = source.random_values(rng)
        a = float(rng.normal())
        lhs = target.to_coords(fn([a * xi + yi for xi, yi in zip(x, y)]))
        rhs = a * target.to_coords(fn(x)) + target.to_coords(fn(y))
        scale = max(1.0, np.max(np.abs(rhs), initial=0.0))
        if np.max(np.abs(lhs - rhs), initial=0.0) > tol * scale:
            return False
    return True
