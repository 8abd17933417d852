"""Dense Hermitian linear algebra on tensor-product spaces.

Subsystem indices in the public functions are 1-based, so
``partial_transpose(kron(A, B), 2)`` transposes the second factor. The
``*_array`` helpers work on raw numpy arrays with 0-based system lists and
are what the set builders use inside their linear maps.
"""
import logging
import math
from functools import reduce
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .config import RANK_TOLERANCE, SolverConfig
from .types import DensityOperator, HermitianOperator, QuantumChannel

logger = logging.getLogger(__name__)

Subsystems = Union[int, Sequence[int]]


def _as_systems(index: Subsystems, count: int) -> List[int]:
    indices = [index] if isinstance(index, (int, np.integer)) else list(index)
    if not indices:
        raise ValueError("At least one subsystem index is required")
    systems = []
    for i in indices:
        if not 1 <= int(i) <= count:
            raise ValueError(f"Subsystem index {i} out of range 1..{count}")
        systems.append(int(i) - 1)
    return systems


def _structured_dims(x: HermitianOperator) -> Tuple[int, ...]:
    if len(x.subsystem_dims) < 2:
        raise ValueError("Operation requires an operator with at least two subsystems")
    return x.subsystem_dims


def transpose_subsystems_array(x: np.ndarray, dims: Sequence[int],
                               systems: Iterable[int]) -> np.ndarray:
    dims = list(dims)
    n = len(dims)
    total = int(np.prod(dims))
    perm = list(range(2 * n))
    for s in systems:
        perm[s], perm[n + s] = n + s, s
    return x.reshape(dims + dims).transpose(perm).reshape(total, total)


def trace_subsystems_array(x: np.ndarray, dims: Sequence[int],
                           systems: Iterable[int]) -> Tuple[np.ndarray, List[int]]:
    dims = list(dims)
    t = x.reshape(dims + dims)
    for s in sorted(set(systems), reverse=True):
        n = len(dims)
        t = np.trace(t, axis1=s, axis2=n + s)
        del dims[s]
    size = int(np.prod(dims)) if dims else 1
    return t.reshape(size, size), dims


def permute_subsystems_array(x: np.ndarray, dims: Sequence[int],
                             order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor k is old factor order[k]."""
    dims = list(dims)
    n = len(dims)
    total = int(np.prod(dims))
    perm = list(order) + [n + o for o in order]
    return x.reshape(dims + dims).transpose(perm).reshape(total, total)


def kron(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    return HermitianOperator(np.kron(a.entries, b.entries), a.dims + b.dims)


def tensor_power(a: HermitianOperator, n: int) -> HermitianOperator:
    if n < 1:
        raise ValueError("Tensor power needs n >= 1")
    result = reduce(lambda acc, _: kron(acc, a), range(n - 1), a)
    if isinstance(a, DensityOperator):
        return DensityOperator(result.entries, result.subsystem_dims)
    return result


def kron_arrays(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)


def partial_transpose(x: HermitianOperator, subsystem_index: Subsystems) -> HermitianOperator:
    dims = _structured_dims(x)
    systems = _as_systems(subsystem_index, len(dims))
    return HermitianOperator(transpose_subsystems_array(x.entries, dims, systems), dims)


def partial_trace(x: HermitianOperator, subsystem_index: Subsystems) -> HermitianOperator:
    dims = _structured_dims(x)
    systems = _as_systems(subsystem_index, len(dims))
    out, remaining = trace_subsystems_array(x.entries, dims, systems)
    return HermitianOperator(out, tuple(remaining) if len(remaining) > 1 else ())


def _eigh(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh((a + a.conj().T) / 2)


def apply_spectral(a: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    w, v = _eigh(a)
    return (v * fn(w)) @ v.conj().T


def _support_mask(w: np.ndarray, tol: float = RANK_TOLERANCE) -> np.ndarray:
    top = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
    if top == 0.0:
        return np.zeros_like(w, dtype=bool)
    return w > tol * top


def matrix_function(a: HermitianOperator, f: str, base: float = 2.0) -> HermitianOperator:
    """Apply ``f`` to the spectrum of ``a``.

    ``log`` and ``exp`` use the same base (2 by default), so they are inverse
    to each other. ``log``, ``sqrt``, ``inverse`` and ``inverse_sqrt`` act on the
    support and send zero eigenvalues to zero; the caller checks supports.
    """
    ln_base = math.log(base)
    w, v = _eigh(a.entries)
    if f in ('log', 'sqrt', 'inverse', 'inverse_sqrt'):
        scale = max(float(np.max(np.abs(w))), 1.0)
        if w[0] < -RANK_TOLERANCE * scale:
            raise ValueError(f"matrix_function({f!r}) requires a positive semidefinite input")
    mask = _support_mask(w)
    if f == 'log':
        values = np.where(mask, np.log(np.where(mask, w, 1.0)) / ln_base, 0.0)
    elif f == 'exp':
        values = np.exp(w * ln_base)
    elif f == 'sqrt':
        values = np.sqrt(np.clip(w, 0.0, None))
    elif f == 'inverse':
        values = np.where(mask, 1.0 / np.where(mask, w, 1.0), 0.0)
    elif f == 'inverse_sqrt':
        values = np.where(mask, 1.0 / np.sqrt(np.where(mask, w, 1.0)), 0.0)
    else:
        raise ValueError(f"Unknown matrix function {f!r}")
    return HermitianOperator((v * values) @ v.conj().T, a.subsystem_dims)


def norms(x: HermitianOperator) -> Dict[str, float]:
    w = x.eigenvalues()
    return {'trace_norm': float(np.sum(np.abs(w))),
            'spectral_norm': float(np.max(np.abs(w)))}


def trace_norm_variational(x: HermitianOperator, config: Optional[SolverConfig] = None) -> float:
    """min tr Y subject to -Y <= X <= Y."""
    import cvxpy as cp

    from .conic import solve_problem

    n = x.dim
    y = cp.Variable((n, n), hermitian=True)
    problem = cp.Problem(cp.Minimize(cp.real(cp.trace(y))),
                         [y - x.entries >> 0, y + x.entries >> 0])
    return solve_problem(problem, config, 'variational trace norm')


def support_projector_array(x: np.ndarray, tol: float = RANK_TOLERANCE) -> np.ndarray:
    w, v = _eigh(x)
    keep = v[:, _support_mask(w, tol)]
    return keep @ keep.conj().T


def support_projector(rho: HermitianOperator, tol: float = RANK_TOLERANCE) -> HermitianOperator:
    return HermitianOperator(support_projector_array(rho.entries, tol), rho.subsystem_dims)


def rank(rho: HermitianOperator, tol: float = RANK_TOLERANCE) -> int:
    return int(np.count_nonzero(_support_mask(rho.eigenvalues(), tol)))


def sqrtm_psd(x: np.ndarray) -> np.ndarray:
    return apply_spectral(x, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def fidelity(rho: HermitianOperator, sigma: HermitianOperator) -> float:
    """Root fidelity F = || sqrt(rho) sqrt(sigma) ||_1."""
    if rho.dim != sigma.dim:
        raise ValueError("Fidelity needs operators of equal dimension")
    product = sqrtm_psd(rho.entries) @ sqrtm_psd(sigma.entries)
    return float(np.sum(scipy.linalg.svdvals(product)))


def random_density(dim: int, rank: Optional[int] = None, seed: int = 0,
                   dims: Sequence[int] = ()) -> DensityOperator:
    """Hilbert-Schmidt-type random state G G^dag / tr(G G^dag)."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"Rank must lie in 1..{dim}, got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return DensityOperator(rho / np.trace(rho).real, tuple(dims))


def random_unitary(dim: int, seed: int = 0) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    rng = np.random.default_rng(seed)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_channel(d_in: int, d_out: int, n_kraus: int = 2, seed: int = 0) -> QuantumChannel:
    """Random CPTP map from a Haar isometry C^d_in -> C^d_out (x) C^n_kraus."""
    u = random_unitary(d_out * n_kraus, seed)[:, :d_in]
    kraus = tuple(u[k * d_out:(k + 1) * d_out, :] for k in range(n_kraus))
    return QuantumChannel(kraus, name='random')


def apply_channel(channel: QuantumChannel, x: HermitianOperator) -> HermitianOperator:
    if x.dim != channel.dim_in:
        raise ValueError(
            f"Channel expects input dimension {channel.dim_in}, got {x.dim}"
        )
    return HermitianOperator(channel.apply_matrix(x.entries))


def tensor_kraus(channel: QuantumChannel, m: int) -> List[np.ndarray]:
    ops = list(channel.kraus_ops)
    result = ops
    for _ in range(m - 1):
        result = [np.kron(a, b) for a in result for b in ops]
    return result


def maximally_entangled_vector(d: int) -> np.ndarray:
    v = np.zeros(d * d, dtype=complex)
    v[[i * d + i for i in range(d)]] = 1.0 / math.sqrt(d)
    return v


def maximally_entangled(d: int) -> DensityOperator:
    return DensityOperator.from_vector(maximally_entangled_vector(d), (d, d))


def choi_state(channel: QuantumChannel) -> DensityOperator:
    """(id (x) N)(Phi) on A (x) B with A the reference copy of the input."""
    d_in, d_out = channel.dim_in, channel.dim_out
    phi = np.outer(maximally_entangled_vector(d_in), maximally_entangled_vector(d_in).conj())
    out = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in channel.kraus_ops:
        lifted = np.kron(np.eye(d_in), k)
        out += lifted @ phi @ lifted.conj().T
    out /= np.trace(out).real
    return DensityOperator(out, (d_in, d_out))


def swap_operator(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s


def symmetric_projector(d: int) -> np.ndarray:
    return (np.eye(d * d) + swap_operator(d)) / 2


def antisymmetric_projector(d: int) -> np.ndarray:
    return (np.eye(d * d) - swap_operator(d)) / 2
