"""Discrete Wigner functions for systems of odd prime dimension."""
import logging
import math
from functools import lru_cache
from typing import List

import numpy as np

from .linalg import kron_arrays
from .types import DensityOperator, HermitianOperator

logger = logging.getLogger(__name__)


def check_odd_prime(d: int) -> None:
    if d < 3 or d % 2 == 0 or any(d % p == 0 for p in range(3, int(math.isqrt(d)) + 1, 2)):
        raise ValueError(f"Wigner functions need an odd prime dimension, got {d}")


def shift(d: int) -> np.ndarray:
    return np.roll(np.eye(d), 1, axis=0)


def clock(d: int) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def displacement(d: int, a: int, b: int) -> np.ndarray:
    tau = np.exp((d + 1) * np.pi * 1j / d)
    x, z = np.linalg.matrix_power(shift(d), a), np.linalg.matrix_power(clock(d), b)
    return tau ** ((a * b) % d) * x @ z


@lru_cache(maxsize=None)
def _single_phase_points(d: int) -> np.ndarray:
    check_odd_prime(d)
    a0 = sum(displacement(d, a, b) for a in range(d) for b in range(d)) / d
    ops = np.empty((d * d, d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            t = displacement(d, a, b)
            ops[a * d + b] = t @ a0 @ t.conj().T
    ops.setflags(write=False)
    return ops


@lru_cache(maxsize=None)
def phase_point_operators(d: int, m: int = 1) -> np.ndarray:
    """Phase-point operators of (C^d)^{(x) m}, indexed row-major over the copies."""
    single = _single_phase_points(d)
    if m == 1:
        return single
    ops = np.empty((d ** (2 * m), d ** m, d ** m), dtype=complex)
    for index in range(d ** (2 * m)):
        digits = np.unravel_index(index, (d * d,) * m)
        ops[index] = kron_arrays([single[u] for u in digits])
    ops.setflags(write=False)
    return ops


def copies_of(dim: int, d: int) -> int:
    m = round(math.log(dim, d))
    if d ** m != dim:
        raise ValueError(f"Dimension {dim} is not a power of {d}")
    return m


def wigner_array(x: np.ndarray, d: int) -> np.ndarray:
    m = copies_of(x.shape[0], d)
    ops = phase_point_operators(d, m)
    return np.real(np.einsum('uij,ji->u', ops, x)) / d ** m


def wigner_function(rho: HermitianOperator, d: int) -> np.ndarray:
    return wigner_array(rho.entries, d)


def wigner_trace_norm(rho: HermitianOperator, d: int) -> float:
    return float(np.sum(np.abs(wigner_function(rho, d))))


def wigner_spectral_norm(gamma: HermitianOperator, d: int) -> float:
    m = copies_of(gamma.dim, d)
    return float(np.max(np.abs(wigner_function(gamma, d)))) * d ** m


def mana(rho: HermitianOperator, d: int) -> float:
    return math.log2(wigner_trace_norm(rho, d))


def stabilizer_states(d: int) -> List[DensityOperator]:
    """The d(d+1) pure stabilizer states: eigenvectors of Z and of X Z^k."""
    check_odd_prime(d)
    states = [DensityOperator.from_vector(np.eye(d)[j]) for j in range(d)]
    x, z = shift(d), clock(d)
    for k in range(d):
        u = x @ np.linalg.matrix_power(z, k)
        _, vecs = np.linalg.eig(u)
        q, _ = np.linalg.qr(vecs)
        states.extend(DensityOperator.from_vector(q[:, j]) for j in range(d))
    return states


def strange_state() -> DensityOperator:
    return DensityOperator.from_vector(np.array([0.0, 1.0, -1.0]))
