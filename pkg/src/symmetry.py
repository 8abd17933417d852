"""Permutation symmetry of m-fold tensor powers.

Copy permutations act on (C^d)^{(x) m} by relabelling tensor factors. The
operators commuting with that action split, by Schur-Weyl duality, into
blocks labelled by partitions of m with at most d rows: block lambda has
size #SSYT(lambda, d) and appears #SYT(lambda) times. This module builds
that block basis numerically and uses it to shrink symmetric set
representations.
"""
import itertools
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .blockspace import Block, BlockSpace, BlockValues, diag_block, herm_block
from .config import (
    EIGENVALUE_CLUSTER_TOLERANCE, MAX_BLOCK_DIM, MAX_DECOMPOSITION_ATTEMPTS,
    MAX_TWIRL_COPIES, SYMMETRY_PROBE_TOLERANCE,
)
from .types import BlockDecomposition, HermitianOperator, Partition

logger = logging.getLogger(__name__)

Permutation = Tuple[int, ...]


def enumerate_partitions(d: int, m: int) -> List[Partition]:
    """Partitions of m with at most d parts, in decreasing lexicographic order."""
    if d < 1 or m < 1:
        raise ValueError("enumerate_partitions needs d, m >= 1")

    def build(remaining: int, largest: int, rows: int):
        if remaining == 0:
            yield ()
            return
        if rows == 0:
            return
        for part in range(min(remaining, largest), 0, -1):
            for rest in build(remaining - part, part, rows - 1):
                yield (part,) + rest

    return [Partition(p) for p in build(m, m, d)]


def _hooks(shape: Partition) -> List[int]:
    conj = shape.conjugate().parts
    return [shape.parts[i] - j + conj[j] - i - 1 for i, j in shape.cells()]


def syt_count(shape: Partition) -> int:
    """Standard tableaux count by the hook length formula."""
    return math.factorial(shape.m) // math.prod(_hooks(shape))


def ssyt_count(shape: Partition, d: int) -> int:
    """Semistandard tableaux with entries in [d], by the hook-content formula."""
    if shape.height > d:
        return 0
    value = Fraction(1)
    for (i, j), hook in zip(shape.cells(), _hooks(shape)):
        value *= Fraction(d + j - i, hook)
    return int(value)


def cycle_type(perm: Sequence[int]) -> Tuple[int, ...]:
    seen = [False] * len(perm)
    lengths = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        length, k = 0, start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


@lru_cache(maxsize=None)
def _murnaghan_nakayama(beta: Tuple[int, ...], cycles: Tuple[int, ...]) -> int:
    if not cycles:
        return 1
    r, rest = cycles[0], cycles[1:]
    beads = set(beta)
    total = 0
    for b in beta:
        target = b - r
        if target < 0 or target in beads:
            continue
        sign = -1 if sum(1 for c in beta if target < c < b) % 2 else 1
        moved = tuple(sorted((beads - {b}) | {target}, reverse=True))
        total += sign * _murnaghan_nakayama(moved, rest)
    return total


def character(shape: Partition, cycles: Sequence[int]) -> int:
    """Irreducible S_m character of ``shape`` on the class with cycle type ``cycles``."""
    h = shape.height
    beta = tuple(shape.parts[i] + h - 1 - i for i in range(h))
    return _murnaghan_nakayama(beta, tuple(sorted(cycles, reverse=True)))


@lru_cache(maxsize=None)
def permutation_indices(local_dim: int, m: int, perm: Permutation) -> np.ndarray:
    """Index map p with P X P^T = X[p][:, p] for the factor relabelling ``perm``."""
    digits = np.indices((local_dim,) * m).reshape(m, -1)
    moved = digits[list(perm)]
    p = np.ravel_multi_index(tuple(moved), (local_dim,) * m)
    p.setflags(write=False)
    return p


def _permutations(m: int) -> List[Permutation]:
    if m > MAX_TWIRL_COPIES:
        raise ValueError(f"Permutation sums are limited to m <= {MAX_TWIRL_COPIES}, got {m}")
    return list(itertools.permutations(range(m)))


def twirl_array(x: np.ndarray, d: int, m: int) -> np.ndarray:
    if x.shape[0] != d ** m:
        raise ValueError(f"Expected dimension {d ** m}, got {x.shape[0]}")
    perms = _permutations(m)
    out = np.zeros_like(x, dtype=complex)
    for perm in perms:
        p = permutation_indices(d, m, perm)
        out += x[np.ix_(p, p)]
    return out / len(perms)


def twirl(x: HermitianOperator, d: int, m: int) -> HermitianOperator:
    return HermitianOperator(twirl_array(x.entries, d, m), x.subsystem_dims)


def commutant_dimension(d: int, m: int) -> int:
    """Number of orbits of matrix units under simultaneous copy permutation."""
    orbits = set()
    for row in itertools.product(range(d), repeat=m):
        for col in itertools.product(range(d), repeat=m):
            orbits.add(tuple(sorted(zip(row, col))))
    return len(orbits)


class _DegenerateSample(Exception):
    pass


def _group_sum(d: int, m: int, perms: Sequence[Permutation], coeffs: Sequence[float],
               symmetric: bool = False) -> np.ndarray:
    dim = d ** m
    out = np.zeros((dim, dim))
    rows = np.arange(dim)
    for perm, c in zip(perms, coeffs):
        p = permutation_indices(d, m, perm)
        out[rows, p] += c
        if symmetric:
            out[p, rows] += c
    return out


def _cluster(values: np.ndarray, size: int, count: int) -> List[np.ndarray]:
    scale = max(1.0, float(np.max(np.abs(values))))
    tol = EIGENVALUE_CLUSTER_TOLERANCE * scale
    chunks = [np.arange(k * size, (k + 1) * size) for k in range(count)]
    for k, chunk in enumerate(chunks):
        if values[chunk[-1]] - values[chunk[0]] > tol:
            raise _DegenerateSample("eigenvalue cluster too wide")
        if k and values[chunk[0]] - values[chunks[k - 1][-1]] <= tol:
            raise _DegenerateSample("eigenvalue clusters overlap")
    return chunks


def _decompose(d: int, m: int, rng: np.random.Generator, seed: int) -> BlockDecomposition:
    perms = _permutations(m)
    n_perm = len(perms)
    generic = _group_sum(d, m, perms, rng.normal(size=n_perm), symmetric=True)
    mixer = _group_sum(d, m, perms, rng.normal(size=n_perm))
    classes = [cycle_type(p) for p in perms]

    partitions, sizes, mults, isometries = [], [], [], []
    for shape in enumerate_partitions(d, m):
        size, mult = ssyt_count(shape, d), syt_count(shape)
        chars = [character(shape, c) for c in classes]
        projector = _group_sum(d, m, perms, chars) * mult / n_perm
        w, v = np.linalg.eigh((projector + projector.T) / 2)
        basis = v[:, w > 0.5]
        if basis.shape[1] != size * mult:
            raise ValueError(
                f"Isotypic component {shape} has dimension {basis.shape[1]}, "
                f"expected {size * mult}"
            )
        restricted = basis.T @ generic @ basis
        values, vectors = np.linalg.eigh((restricted + restricted.T) / 2)
        chunks = _cluster(values, size, mult)
        copies = [basis @ vectors[:, chunk] for chunk in chunks]
        first = copies[0].astype(complex)
        pushed = mixer @ first
        aligned = [first]
        for q in copies[1:]:
            w_j = q @ (q.T @ pushed)
            norm = math.sqrt(float(np.real(np.trace(w_j.conj().T @ w_j))) / size)
            if norm < 1e-6:
                raise _DegenerateSample("mixing element misses a copy")
            aligned.append(w_j / norm)
        partitions.append(shape)
        sizes.append(size)
        mults.append(mult)
        stacked = np.stack(aligned)
        stacked.setflags(write=False)
        isometries.append(stacked)

    if sum(s * f for s, f in zip(sizes, mults)) != d ** m:
        raise ValueError("Isotypic components do not span the tensor space")
    return BlockDecomposition(d, m, tuple(partitions), tuple(sizes), tuple(mults),
                              tuple(isometries), seed)


@lru_cache(maxsize=None)
def block_decompose(d: int, m: int, seed: int = 0) -> BlockDecomposition:
    if d ** m > MAX_BLOCK_DIM:
        raise ValueError(f"d^m = {d ** m} exceeds the limit {MAX_BLOCK_DIM}")
    for attempt in range(MAX_DECOMPOSITION_ATTEMPTS):
        rng = np.random.default_rng(seed + attempt)
        try:
            dec = _decompose(d, m, rng, seed + attempt)
        except _DegenerateSample as exc:
            logger.warning("Block decomposition d=%d m=%d seed=%d resampled: %s",
                           d, m, seed + attempt, exc)
            continue
        logger.debug("Block decomposition d=%d m=%d: sizes %s multiplicities %s",
                     d, m, dec.sizes, dec.multiplicities)
        return dec
    raise ValueError(
        f"Could not resolve the block structure for d={d}, m={m} "
        f"after {MAX_DECOMPOSITION_ATTEMPTS} samples"
    )


def act(block: Block, value: np.ndarray, perm: Permutation) -> np.ndarray:
    """Copy permutation acting on one block value."""
    if not block.symmetric:
        return value
    p = permutation_indices(block.local_dim, block.copies, perm)
    if block.kind == 'herm':
        return value[np.ix_(p, p)]
    return value[p]


def act_space(space: BlockSpace, values: BlockValues, perm: Permutation) -> BlockValues:
    return [act(b, v, perm) for b, v in zip(space.blocks, values)]


def _max_gap(space: BlockSpace, x: BlockValues, y: BlockValues) -> float:
    diff = space.to_coords(x) - space.to_coords(y)
    return float(np.max(np.abs(diff), initial=0.0))


def check_symmetry(rep, trials: int = 3, seed: int = 0,
                   tol: float = SYMMETRY_PROBE_TOLERANCE) -> None:
    """Numerically check the three equivariance conditions on random inputs.

    Raises ValueError naming the first violated condition.
    """
    rng = np.random.default_rng(seed)
    perms = _permutations(rep.copies)
    g_scale = max(1.0, float(np.max(np.abs(rep.constraint.to_coords(rep.g)))))
    for perm in perms:
        gap = _max_gap(rep.constraint, act_space(rep.constraint, rep.g, perm), rep.g)
        if gap > tol * g_scale:
            raise ValueError(f"{rep.name}: g is not invariant under {perm} (gap {gap:.2e})")
    for _ in range(trials):
        perm = perms[rng.integers(len(perms))]
        x = rep.lift.random_values(rng)
        moved = act_space(rep.lift, x, perm)
        for label, fn, space in (('projection', rep.projection, rep.ambient),
                                 ('constraint map', rep.constraint_map, rep.constraint)):
            lhs = fn(moved)
            rhs = act_space(space, fn(x), perm)
            scale = max(1.0, float(np.max(np.abs(space.to_coords(rhs)))))
            gap = _max_gap(space, lhs, rhs)
            if gap > tol * scale:
                raise ValueError(
                    f"{rep.name}: {label} does not commute with copy permutation "
                    f"{perm} (gap {gap:.2e})"
                )


class _BlockReducer:
    """phi and its inverse for one block of a BlockSpace."""

    def __init__(self, block: Block, decomposition: Optional[BlockDecomposition] = None):
        self.block = block
        self.decomposition = decomposition
        if not block.symmetric:
            self.blocks = [block]
        elif block.kind == 'herm':
            dec = decomposition
            self.blocks = [
                herm_block(size, block.weight * mult, label=f"{block.label}{shape}")
                for shape, size, mult in zip(dec.partitions, dec.sizes, dec.multiplicities)
            ]
        else:
            orbit_ids, counts = _orbits(block.local_dim, block.copies)
            self.orbit_ids, self.counts = orbit_ids, counts
            self.blocks = [diag_block(len(counts), block.weight * counts,
                                      label=f"{block.label}/orbits")]

    def forward(self, value: np.ndarray) -> List[np.ndarray]:
        if not self.block.symmetric:
            return [value]
        if self.block.kind == 'herm':
            return self.decomposition.forward(value)
        sums = np.bincount(self.orbit_ids, weights=np.real(value), minlength=len(self.counts))
        return [sums / self.counts]

    def inverse(self, values: Sequence[np.ndarray]) -> np.ndarray:
        if not self.block.symmetric:
            return values[0]
        if self.block.kind == 'herm':
            return self.decomposition.inverse(values)
        return np.asarray(values[0])[self.orbit_ids]


@lru_cache(maxsize=None)
def _orbits(local_dim: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    digits = np.indices((local_dim,) * m).reshape(m, -1).T
    keys: Dict[Tuple[int, ...], int] = {}
    ids = np.empty(len(digits), dtype=int)
    for k, row in enumerate(digits):
        ids[k] = keys.setdefault(tuple(sorted(row)), len(keys))
    counts = np.bincount(ids).astype(float)
    return ids, counts


class SpaceReducer:
    def __init__(self, space: BlockSpace, decompose: Callable[[int, int], BlockDecomposition]):
        self.space = space
        self.reducers = [
            _BlockReducer(b, decompose(b.local_dim, b.copies)
                          if b.symmetric and b.kind == 'herm' else None)
            for b in space.blocks
        ]
        self.reduced = BlockSpace(tuple(b for r in self.reducers for b in r.blocks))

    def forward(self, values: BlockValues) -> BlockValues:
        out: BlockValues = []
        for r, v in zip(self.reducers, values):
            out.extend(r.forward(v))
        return out

    def inverse(self, values: BlockValues) -> BlockValues:
        out, k = [], 0
        for r in self.reducers:
            n = len(r.blocks)
            out.append(r.inverse(values[k:k + n]))
            k += n
        return out


def reduce_setrep(rep, dec_ambient: Optional[BlockDecomposition] = None,
                  dec_lift: Optional[BlockDecomposition] = None, seed: int = 0):
    """Restrict a symmetric representation to invariant operators in block form.

    The reduced representation has lift blocks PSD(m_lambda) with weight
    f_lambda, projection phi o Pi o phi^{-1}, constraint map
    phi o F o phi^{-1} and g' = phi(g). Supplied decompositions are used for
    blocks whose (local_dim, copies) match; others are computed with ``seed``.
    """
    from .sets import SetRepresentation

    if not rep.symmetry_certified:
        raise ValueError(f"{rep.name} is not declared permutation symmetric")
    if rep.copies < 2:
        return rep
    check_symmetry(rep, seed=seed)

    def for_space(given: Optional[BlockDecomposition]):
        def decompose(local_dim: int, copies: int) -> BlockDecomposition:
            if given is not None and (given.d, given.m) == (local_dim, copies):
                return given
            return block_decompose(local_dim, copies, seed)
        return decompose

    lift = SpaceReducer(rep.lift, for_space(dec_lift))
    ambient = SpaceReducer(rep.ambient, for_space(dec_ambient))
    constraint = SpaceReducer(rep.constraint, for_space(dec_lift))

    def projection(ys: BlockValues) -> BlockValues:
        return ambient.forward(rep.projection(lift.inverse(ys)))

    def constraint_map(ys: BlockValues) -> BlockValues:
        return constraint.forward(rep.constraint_map(lift.inverse(ys)))

    def embed(x: np.ndarray) -> BlockValues:
        return ambient.forward(rep.embed(x))

    reduced = SetRepresentation(
        name=f"{rep.name}/reduced",
        lift=lift.reduced,
        ambient=ambient.reduced,
        constraint=constraint.reduced,
        projection=projection,
        constraint_map=constraint_map,
        g=constraint.forward(rep.g),
        local_dim=rep.local_dim,
        copies=rep.copies,
        subsystem_dims=rep.subsystem_dims,
        symmetry_certified=True,
        assumptions_certified=rep.assumptions_certified,
        trace_normalized=rep.trace_normalized,
        point=ambient.forward(rep.point) if rep.point is not None else None,
        embed_map=embed,
        deduplicate=True,
        reduced=True,
    )
    logger.info("Reduced %s: lift %d -> %d real coordinates, ambient %d -> %d",
                rep.name, rep.lift.dim, reduced.lift.dim, rep.ambient.dim, reduced.ambient.dim)
    return reduced
