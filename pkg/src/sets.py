"""SDP-representable convex sets and their support functions.

A set is stored as C = {Pi(x) : x in K, F(x) = g} where K is the cone of the
lift BlockSpace (PSD for 'herm' blocks, nonnegative for 'diag' blocks). The
maps are plain Python callables on lists of block values; their coordinate
matrices are materialized on first use.

Bipartite m-copy sets order the tensor factors A1 B1 A2 B2 ... so that one
copy of the single-system space is A_i B_i.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .blockspace import (
    Block, BlockSpace, BlockValues, LinearMap, diag_block, herm_block, materialize, scalar_block,
)
from .config import POLAR_TOLERANCE, SolverConfig
from .conic import ProgramBuilder, require_optimal, solve, solve_problem
from .linalg import kron_arrays, random_density, tensor_kraus, transpose_subsystems_array
from .types import (
    ConeKind, DensityOperator, HermitianOperator, QuantumChannel, SolveStatus,
)
from .wigner import check_odd_prime, phase_point_operators

logger = logging.getLogger(__name__)

Witness = Union[HermitianOperator, np.ndarray, BlockValues]

MEMBERSHIP_TOLERANCE = 1e-5


@dataclass(frozen=True, eq=False)
class SetRepresentation:
    name: str
    lift: BlockSpace
    ambient: BlockSpace
    constraint: BlockSpace
    projection: LinearMap
    constraint_map: LinearMap
    g: BlockValues
    local_dim: int = 1
    copies: int = 1
    subsystem_dims: Tuple[int, ...] = ()
    symmetry_certified: bool = False
    assumptions_certified: bool = False
    trace_normalized: bool = False
    point: Optional[BlockValues] = None
    embed_map: Optional[Callable[[np.ndarray], BlockValues]] = None
    deduplicate: bool = False
    reduced: bool = False

    @property
    def lift_dim(self) -> int:
        return sum(b.size for b in self.lift.blocks)

    @property
    def ambient_dim(self) -> int:
        return sum(b.size for b in self.ambient.blocks)

    @property
    def size(self) -> int:
        return self.lift.dim

    def embed(self, x: np.ndarray) -> BlockValues:
        if self.embed_map is not None:
            return self.embed_map(x)
        return [x]

    def witness_coords(self, omega: Witness) -> np.ndarray:
        if isinstance(omega, HermitianOperator):
            omega = omega.entries
        if isinstance(omega, list):
            return self.ambient.to_coords(omega)
        omega = np.asarray(omega)
        if omega.shape != (self.ambient_dim, self.ambient_dim) and not self.reduced:
            raise ValueError(
                f"{self.name}: witness of shape {omega.shape} does not match "
                f"ambient dimension {self.ambient_dim}"
            )
        return self.ambient.to_coords(self.embed(omega))

    @cached_property
    def projection_matrix(self) -> sp.csr_matrix:
        return materialize(self.projection, self.lift, self.ambient)

    @cached_property
    def constraint_matrix(self) -> sp.csr_matrix:
        return materialize(self.constraint_map, self.lift, self.constraint)

    @cached_property
    def g_coords(self) -> np.ndarray:
        return self.constraint.to_coords(self.g)

    def constraint_system(self) -> Tuple[sp.csr_matrix, np.ndarray]:
        """F and g in coordinates, with linearly dependent rows dropped if requested."""
        return self._constraint_system

    @cached_property
    def _constraint_system(self) -> Tuple[sp.csr_matrix, np.ndarray]:
        f, g = self.constraint_matrix, self.g_coords
        if not self.deduplicate or f.shape[0] < 2:
            return f, g
        stacked = np.hstack([f.toarray(), g.reshape(-1, 1)])
        _, r, pivots = scipy.linalg.qr(stacked.T, mode='economic', pivoting=True)
        diag = np.abs(np.diag(r))
        if diag.size == 0 or diag[0] == 0:
            return f[:0], g[:0]
        rank = int(np.sum(diag > 1e-10 * diag[0]))
        keep = np.sort(pivots[:rank])
        if rank < f.shape[0]:
            logger.debug("%s: dropped %d dependent constraint rows", self.name, f.shape[0] - rank)
        return sp.csr_matrix(f[keep]), g[keep]

    def epigraph(self) -> 'EpigraphRepresentation':
        return EpigraphRepresentation(self)

    def describe(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'lift_dim': self.lift_dim,
            'ambient_dim': self.ambient_dim,
            'real_coordinates': self.size,
            'copies': self.copies,
            'symmetry_certified': self.symmetry_certified,
            'assumptions_certified': self.assumptions_certified,
            'reduced': self.reduced,
        }


class EpigraphRepresentation:
    """h_C(w) <= t as conic constraints, by strong duality of the support-function SDP.

    h_C(w) = min{g.z : F^T z - Pi^T w in K}, so h_C(w) <= t holds iff some z
    and S in K satisfy F^T z - Pi^T w - S = 0 and g.z <= t.
    """

    def __init__(self, rep: SetRepresentation):
        self.rep = rep
        f, g = rep.constraint_system()
        self.f_adjoint = sp.csr_matrix(f.T)
        self.pi_adjoint = sp.csr_matrix(rep.projection_matrix.T)
        self.g = g

    def impose(self, builder: ProgramBuilder, w_terms: Sequence[Tuple[int, Any]],
               t_terms: Sequence[Tuple[int, Any]], t_const: float = 0.0) -> None:
        """Add h_C(sum_i M_i x_i) <= sum_j T_j y_j + t_const.

        ``w_terms`` are (column offset, M) pairs with M mapping program
        coordinates to ambient coordinates; ``t_terms`` are (column offset, T)
        pairs with T a 1 x k row.
        """
        z = builder.add_cone(ConeKind.FREE, self.g.shape[0]) if self.g.shape[0] else None
        slack = builder.add_space(self.rep.lift)
        n = self.rep.lift.dim
        terms = [(slack, -sp.identity(n, format='csr'))]
        if z is not None:
            terms.append((z, self.f_adjoint))
        for offset, m in w_terms:
            terms.append((offset, -(self.pi_adjoint @ sp.csr_matrix(m))))
        builder.equality(terms, np.zeros(n))
        s = builder.add_cone(ConeKind.NONNEG, 1)
        row = [(s, [[1.0]])]
        if z is not None:
            row.append((z, self.g.reshape(1, -1)))
        row.extend((offset, -np.atleast_2d(np.asarray(t, dtype=float))) for offset, t in t_terms)
        builder.equality(row, [t_const])


def _finite_or_raise(value: float, status: SolveStatus, what: str) -> float:
    if status == SolveStatus.INFEASIBLE:
        raise ValueError(f"{what}: the set is empty")
    if status == SolveStatus.UNBOUNDED:
        return math.inf
    return value


def support_function(rep: SetRepresentation, omega: Witness,
                     config: Optional[SolverConfig] = None) -> float:
    """h_C(omega) = sup{tr[sigma omega] : sigma in C}, from the primal SDP."""
    w = rep.witness_coords(omega)
    builder = ProgramBuilder(f"support[{rep.name}]")
    x = builder.add_space(rep.lift)
    f, g = rep.constraint_system()
    builder.equality([(x, f)], g)
    builder.objective(x, rep.projection_matrix.T @ w)
    solution = solve(builder.build('max'), config)
    return _finite_or_raise(require_optimal(solution, builder.name), solution.status, rep.name)


def support_function_dual(rep: SetRepresentation, omega: Witness,
                          config: Optional[SolverConfig] = None) -> float:
    """min{g.z : F^T z - Pi^T omega in K}."""
    w = rep.witness_coords(omega)
    f, g = rep.constraint_system()
    builder = ProgramBuilder(f"support-dual[{rep.name}]")
    z = builder.add_cone(ConeKind.FREE, g.shape[0])
    s = builder.add_space(rep.lift)
    builder.equality([(z, f.T), (s, -sp.identity(rep.lift.dim))], rep.projection_matrix.T @ w)
    builder.objective(z, g)
    solution = solve(builder.build('min'), config)
    if solution.status == SolveStatus.INFEASIBLE:
        return math.inf
    return require_optimal(solution, builder.name)


def epigraph_value(rep: SetRepresentation, omega: Witness,
                   config: Optional[SolverConfig] = None) -> float:
    """min t subject to h_C(omega) <= t, through the epigraph constraints."""
    w = rep.witness_coords(omega)
    builder = ProgramBuilder(f"epigraph[{rep.name}]")
    t = builder.add_cone(ConeKind.FREE, 1)
    fixed = builder.add_cone(ConeKind.FREE, w.shape[0])
    builder.equality([(fixed, sp.identity(w.shape[0]))], w)
    rep.epigraph().impose(builder, [(fixed, sp.identity(w.shape[0]))], [(t, [[1.0]])])
    builder.objective(t, [1.0])
    return require_optimal(solve(builder.build('min'), config), builder.name)


def support_certificate(rep: SetRepresentation, omega: Witness,
                        config: Optional[SolverConfig] = None) -> Dict[str, float]:
    primal = support_function(rep, omega, config)
    dual = support_function_dual(rep, omega, config)
    return {'primal': primal, 'dual': dual, 'gap': dual - primal}


def polar_membership(rep: SetRepresentation, omega: Witness,
                     config: Optional[SolverConfig] = None) -> bool:
    return support_function(rep, omega, config) <= 1.0 + POLAR_TOLERANCE


def membership_residual(rep: SetRepresentation, x: Witness,
                        config: Optional[SolverConfig] = None) -> float:
    """min ||Pi(y) - x||_1 in coordinates over feasible lifts y."""
    target = rep.witness_coords(x)
    n = target.shape[0]
    builder = ProgramBuilder(f"membership[{rep.name}]")
    y = builder.add_space(rep.lift)
    f, g = rep.constraint_system()
    builder.equality([(y, f)], g)
    above = builder.add_cone(ConeKind.NONNEG, n)
    below = builder.add_cone(ConeKind.NONNEG, n)
    builder.equality([(y, rep.projection_matrix), (above, -sp.identity(n)),
                      (below, sp.identity(n))], target)
    builder.objective(above, np.ones(n))
    builder.objective(below, np.ones(n))
    solution = solve(builder.build('min'), config)
    if solution.status == SolveStatus.INFEASIBLE:
        raise ValueError(f"{rep.name}: the set is empty")
    return require_optimal(solution, builder.name)


def membership(rep: SetRepresentation, x: Witness, config: Optional[SolverConfig] = None,
               tol: float = MEMBERSHIP_TOLERANCE) -> bool:
    return membership_residual(rep, x, config) <= tol


def submultiplicativity_probe(c1: SetRepresentation, c2: SetRepresentation,
                              c12: SetRepresentation, trials: int = 20, seed: int = 0,
                              witnesses: Optional[Sequence[Tuple[np.ndarray, np.ndarray]]] = None,
                              config: Optional[SolverConfig] = None) -> Dict[str, Any]:
    """Largest h_C12(w1 (x) w2) - h_C1(w1) h_C2(w2) over random or supplied PSD witnesses."""
    if c12.ambient_dim != c1.ambient_dim * c2.ambient_dim:
        raise ValueError(
            f"{c12.name} has dimension {c12.ambient_dim}, expected "
            f"{c1.ambient_dim} x {c2.ambient_dim}"
        )
    if witnesses is None:
        witnesses = [(random_density(c1.ambient_dim, seed=seed + 2 * k).entries,
                      random_density(c2.ambient_dim, seed=seed + 2 * k + 1).entries)
                     for k in range(trials)]
    gaps = []
    for w1, w2 in witnesses:
        joint = support_function(c12, np.kron(w1, w2), config)
        product = support_function(c1, w1, config) * support_function(c2, w2, config)
        gaps.append(joint - product)
        logger.debug("submultiplicativity probe: joint %.8f product %.8f", joint, product)
    return {'max_violation': max(gaps), 'violations': gaps, 'trials': len(gaps)}


def _b_systems(m: int) -> List[int]:
    return [2 * i + 1 for i in range(m)]


def _bipartite_dims(d_a: int, d_b: int, m: int) -> Tuple[int, ...]:
    if d_a < 1 or d_b < 1:
        raise ValueError("Local dimensions must be positive")
    if m < 1:
        raise ValueError("Number of copies must be at least 1")
    return (d_a, d_b) * m


def _check_copies(m: int) -> None:
    if m < 1:
        raise ValueError("Number of copies must be at least 1")


def _build_chain(d_a: int, d_b: int, levels: int, m: int, name: str) -> SetRepresentation:
    """omega_1 >= 0 with -omega_{i+1} <= omega_i^{T_B} <= omega_{i+1}, tr omega_{L+1} <= 1."""
    dims = _bipartite_dims(d_a, d_b, m)
    n, local = d_a * d_b, d_a * d_b
    size = n ** m
    b_systems = _b_systems(m)

    def herm() -> Block:
        return herm_block(size, local_dim=local, copies=m)

    omegas = [herm() for _ in range(levels + 1)]
    slacks = [herm() for _ in range(2 * levels)]
    lift = BlockSpace(tuple(omegas + slacks + [scalar_block('s')]))
    constraint = BlockSpace(tuple([herm() for _ in range(2 * levels)] + [scalar_block('trace')]))
    ambient = BlockSpace((herm_block(size, local_dim=local, copies=m),))

    def pt(x: np.ndarray) -> np.ndarray:
        return transpose_subsystems_array(x, dims, b_systems)

    def constraint_map(xs: BlockValues) -> BlockValues:
        omega = xs[:levels + 1]
        plus, minus = xs[levels + 1:3 * levels + 1:2], xs[levels + 2:3 * levels + 2:2]
        out = []
        for i in range(levels):
            t = pt(omega[i])
            out.append(plus[i] - omega[i + 1] + t)
            out.append(minus[i] - omega[i + 1] - t)
        out.append(np.array([np.trace(omega[levels]).real + float(np.real(xs[-1][0]))]))
        return out

    g = [np.zeros((size, size), dtype=complex) for _ in range(2 * levels)] + [np.ones(1)]
    return SetRepresentation(
        name=name, lift=lift, ambient=ambient, constraint=constraint,
        projection=lambda xs: [xs[0]], constraint_map=constraint_map, g=g,
        local_dim=local, copies=m, subsystem_dims=dims,
        symmetry_certified=True, assumptions_certified=True,
    )


def build_rains(d_a: int, d_b: int, m: int = 1) -> SetRepresentation:
    """{sigma >= 0 : ||sigma^{T_B}||_1 <= 1} on m copies."""
    return _build_chain(d_a, d_b, 1, m, f"rains({d_a}x{d_b})^{m}")


def build_pptk(d_a: int, d_b: int, k: int, m: int = 1) -> SetRepresentation:
    if k < 2:
        raise ValueError(f"PPT_k needs k >= 2, got {k}")
    return _build_chain(d_a, d_b, k, m, f"ppt{k}({d_a}x{d_b})^{m}")


def build_ppt(d_a: int, d_b: int, m: int = 1) -> SetRepresentation:
    """{sigma >= 0 : sigma^{T_B} >= 0, tr sigma <= 1}."""
    dims = _bipartite_dims(d_a, d_b, m)
    local = d_a * d_b
    size = local ** m
    b_systems = _b_systems(m)
    lift = BlockSpace((herm_block(size, local_dim=local, copies=m),
                       herm_block(size, local_dim=local, copies=m), scalar_block('s')))
    constraint = BlockSpace((herm_block(size, local_dim=local, copies=m), scalar_block('trace')))
    ambient = BlockSpace((herm_block(size, local_dim=local, copies=m),))

    def constraint_map(xs: BlockValues) -> BlockValues:
        sigma, q, s = xs
        return [q - transpose_subsystems_array(sigma, dims, b_systems),
                np.array([np.trace(sigma).real + float(np.real(s[0]))])]

    return SetRepresentation(
        name=f"ppt({d_a}x{d_b})^{m}", lift=lift, ambient=ambient, constraint=constraint,
        projection=lambda xs: [xs[0]], constraint_map=constraint_map,
        g=[np.zeros((size, size), dtype=complex), np.ones(1)],
        local_dim=local, copies=m, subsystem_dims=dims,
        symmetry_certified=True, assumptions_certified=False,
    )


def build_wigner_set(d: int, m: int = 1) -> SetRepresentation:
    """{sigma >= 0 : sum_u |W_sigma(u)| <= 1}, with W split as p - n."""
    check_odd_prime(d)
    _check_copies(m)
    size, points = d ** m, d ** (2 * m)
    ops = phase_point_operators(d, m)
    lift = BlockSpace((herm_block(size, local_dim=d, copies=m),
                       diag_block(points, local_dim=d * d, copies=m, label='p'),
                       diag_block(points, local_dim=d * d, copies=m, label='n'),
                       scalar_block('s')))
    constraint = BlockSpace((diag_block(points, local_dim=d * d, copies=m),
                             scalar_block('norm')))
    ambient = BlockSpace((herm_block(size, local_dim=d, copies=m),))

    def constraint_map(xs: BlockValues) -> BlockValues:
        sigma, p, n, s = xs
        w = np.real(np.einsum('uij,ji->u', ops, sigma)) / size
        return [w - np.real(p) + np.real(n),
                np.array([np.sum(np.real(p)) + np.sum(np.real(n)) + float(np.real(s[0]))])]

    return SetRepresentation(
        name=f"wigner({d})^{m}", lift=lift, ambient=ambient, constraint=constraint,
        projection=lambda xs: [xs[0]], constraint_map=constraint_map,
        g=[np.zeros(points), np.ones(1)],
        local_dim=d, copies=m, subsystem_dims=(d,) * m if m > 1 else (),
        symmetry_certified=True, assumptions_certified=True,
    )


def build_channel_image(channel: QuantumChannel, m: int = 1) -> SetRepresentation:
    """{N^{(x) m}(rho) : rho >= 0, tr rho = 1}."""
    _check_copies(m)
    d_in, d_out = channel.dim_in, channel.dim_out
    kraus = tensor_kraus(channel, m)
    kraus_h = [k.conj().T for k in kraus]
    lift = BlockSpace((herm_block(d_in ** m, local_dim=d_in, copies=m),))
    ambient = BlockSpace((herm_block(d_out ** m, local_dim=d_out, copies=m),))
    constraint = BlockSpace((scalar_block('trace'),))

    def projection(xs: BlockValues) -> BlockValues:
        return [sum(k @ xs[0] @ kh for k, kh in zip(kraus, kraus_h))]

    return SetRepresentation(
        name=f"image[{channel.name}]^{m}", lift=lift, ambient=ambient, constraint=constraint,
        projection=projection,
        constraint_map=lambda xs: [np.array([np.trace(xs[0]).real])],
        g=[np.ones(1)], local_dim=d_out, copies=m,
        subsystem_dims=(d_out,) * m if m > 1 else (),
        symmetry_certified=True, assumptions_certified=True,
        trace_normalized=channel.trace_preserving,
    )


def build_density_set(d: int, m: int = 1) -> SetRepresentation:
    identity = QuantumChannel((np.eye(d),), name=f"id{d}")
    return build_channel_image(identity, m)


def build_point(rho: HermitianOperator, local_dim: Optional[int] = None, m: int = 1,
                name: str = 'point') -> SetRepresentation:
    """The one-point set {rho} on an m-copy space with single-copy dimension ``local_dim``."""
    x = np.array(rho.entries)
    local_dim = local_dim or x.shape[0]
    if local_dim ** m != x.shape[0]:
        raise ValueError(f"Dimension {x.shape[0]} is not {local_dim}^{m}")
    lift = BlockSpace((scalar_block('s'),))
    ambient = BlockSpace((herm_block(x.shape[0], local_dim=local_dim, copies=m),))
    trace = float(np.trace(x).real)
    return SetRepresentation(
        name=name, lift=lift, ambient=ambient, constraint=BlockSpace((scalar_block('s'),)),
        projection=lambda xs: [float(np.real(xs[0][0])) * x],
        constraint_map=lambda xs: [np.real(np.asarray(xs[0]))],
        g=[np.ones(1)], local_dim=local_dim, copies=m, subsystem_dims=rho.subsystem_dims,
        symmetry_certified=True, assumptions_certified=True,
        trace_normalized=abs(trace - 1.0) <= 1e-9,
        point=[x],
    )


def build_singleton(rho: DensityOperator, m: int = 1) -> SetRepresentation:
    """{rho^{(x) m}}."""
    _check_copies(m)
    power = kron_arrays([rho.entries] * m)
    dims = tuple(rho.dims) * m if len(rho.dims) > 1 or m > 1 else ()
    op = HermitianOperator(power, dims)
    return build_point(op, rho.dim, m, name=f"singleton^{m}")


def _b_axes(dims: Sequence[int]) -> List[int]:
    return list(range(1, len(dims), 2))


def _witness_array(omega: Witness) -> np.ndarray:
    if isinstance(omega, HermitianOperator):
        return omega.entries
    return np.asarray(omega, dtype=complex)


def rains_dual_value(omega: Witness, d_a: int, d_b: int, m: int = 1,
                     config: Optional[SolverConfig] = None) -> float:
    """inf{||gamma^{T_B}||_inf : gamma >= omega}, independent of the lifted representation."""
    w = _witness_array(omega)
    dims = list(_bipartite_dims(d_a, d_b, m))
    n = w.shape[0]
    gamma = cp.Variable((n, n), hermitian=True)
    t = cp.Variable()
    transposed = gamma
    for axis in _b_axes(dims):
        transposed = cp.partial_transpose(transposed, dims, axis)
    transposed = (transposed + transposed.H) / 2
    constraints = [gamma - w >> 0,
                   t * np.eye(n) - transposed >> 0,
                   t * np.eye(n) + transposed >> 0]
    problem = cp.Problem(cp.Minimize(t), constraints)
    return solve_problem(problem, config, 'rains dual')


def wigner_dual_value(omega: Witness, d: int, m: int = 1,
                      config: Optional[SolverConfig] = None) -> float:
    """inf{max_u |tr[A_u gamma]| : gamma >= omega}."""
    w = _witness_array(omega)
    ops = phase_point_operators(d, m)
    n = w.shape[0]
    gamma = cp.Variable((n, n), hermitian=True)
    t = cp.Variable()
    values = cp.hstack([cp.real(cp.trace(a @ gamma)) for a in ops])
    problem = cp.Problem(cp.Minimize(t), [gamma - w >> 0, values <= t, -values <= t])
    return solve_problem(problem, config, 'wigner dual')


SET_BUILDERS: Dict[str, Callable[..., SetRepresentation]] = {
    'rains': build_rains,
    'pptk': build_pptk,
    'ppt': build_ppt,
    'wigner': build_wigner_set,
}
