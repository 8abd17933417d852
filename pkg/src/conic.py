"""Linear conic programs over PSD, relative entropy and operator relative entropy cones.

A ConicProgram is plain data: a list of cone blocks, a linear objective over
their stacked real coordinates and sparse equalities ``E x = b``. Block
coordinates are:

    PSD(n)     hvec(X)                     n^2
    NONNEG(n)  x >= 0                      n
    FREE(n)    x                           n
    QRE(n)     hvec(X), hvec(Y), t         2 n^2 + 1   with t >= D(X||Y) in nats
    ORE(n)     hvec(X), hvec(Y), hvec(Z)   3 n^2       with Z >= D_op(X||Y)

The reported value is ``scale * (c.x + offset)``.
"""
import json
import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np
import scipy.sparse as sp
from cvxpy.constraints import OpRelEntrConeQuad
from cvxpy.error import SolverError as CvxpySolverError

from .blockspace import BlockSpace, unhvec
from .config import SolverConfig
from .types import ConeKind, ConeSpec, Solution, SolveStatus, SolverError

if TYPE_CHECKING:
    from .sets import SetRepresentation

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
SOLVER_TOLERANCE_FLOOR = 1e-10

_STATUS = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.INACCURATE,
    cp.INFEASIBLE: SolveStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
}


@dataclass(eq=False)
class ConicProgram:
    cones: Tuple[ConeSpec, ...]
    c: np.ndarray
    equalities: sp.csr_matrix
    rhs: np.ndarray
    sense: str = 'min'
    offset: float = 0.0
    scale: float = 1.0
    name: str = ''

    def __post_init__(self):
        self.cones = tuple(self.cones)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.equalities = sp.csr_matrix(self.equalities)
        if self.sense not in ('min', 'max'):
            raise ValueError(f"Program sense must be 'min' or 'max', got {self.sense!r}")
        n = self.size
        if self.c.shape[0] != n:
            raise ValueError(f"Objective has {self.c.shape[0]} entries for {n} coordinates")
        if self.equalities.shape != (self.rhs.shape[0], n):
            raise ValueError(
                f"Equalities of shape {self.equalities.shape} do not match "
                f"{self.rhs.shape[0]} right-hand sides and {n} coordinates"
            )

    @property
    def size(self) -> int:
        return sum(cone.size for cone in self.cones)

    @property
    def offsets(self) -> List[int]:
        out = [0]
        for cone in self.cones:
            out.append(out[-1] + cone.size)
        return out

    @property
    def has_entropy_cones(self) -> bool:
        return any(cone.kind in (ConeKind.QRE, ConeKind.ORE) for cone in self.cones)

    def scaled(self, factor: float) -> 'ConicProgram':
        return ConicProgram(self.cones, self.c, self.equalities, self.rhs, self.sense,
                            self.offset, self.scale * factor, self.name)

    def to_json(self) -> Dict[str, Any]:
        coo = self.equalities.tocoo()
        return {
            'name': self.name,
            'sense': self.sense,
            'offset': self.offset,
            'scale': self.scale,
            'cones': [{'kind': cone.kind.value, 'n': cone.n} for cone in self.cones],
            'objective': self.c.tolist(),
            'equalities': {'shape': list(coo.shape), 'rows': coo.row.tolist(),
                           'cols': coo.col.tolist(), 'vals': coo.data.tolist()},
            'rhs': self.rhs.tolist(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> 'ConicProgram':
        try:
            cones = [ConeSpec(ConeKind(c['kind']), int(c['n'])) for c in data['cones']]
            eq = data['equalities']
            matrix = sp.csr_matrix((eq['vals'], (eq['rows'], eq['cols'])),
                                   shape=tuple(eq['shape']))
            return cls(cones, np.array(data['objective']), matrix, np.array(data['rhs']),
                       data.get('sense', 'min'), float(data.get('offset', 0.0)),
                       float(data.get('scale', 1.0)), data.get('name', ''))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"Malformed program JSON: {exc}") from exc


class ProgramBuilder:
    """Incremental assembly of a ConicProgram."""

    def __init__(self, name: str = ''):
        self.name = name
        self.cones: List[ConeSpec] = []
        self._size = 0
        self._rows: List[np.ndarray] = []
        self._cols: List[np.ndarray] = []
        self._vals: List[np.ndarray] = []
        self._rhs: List[np.ndarray] = []
        self._n_rows = 0
        self._objective: Dict[int, float] = {}

    def add_cone(self, kind: ConeKind, n: int = 1) -> int:
        cone = ConeSpec(kind, n)
        offset = self._size
        self.cones.append(cone)
        self._size += cone.size
        return offset

    def add_space(self, space: BlockSpace) -> int:
        """Cone blocks for a lift space; returns the offset of its first coordinate."""
        offset = self._size
        for block in space.blocks:
            kind = ConeKind.PSD if block.kind == 'herm' else ConeKind.NONNEG
            self.add_cone(kind, block.size)
        return offset

    def equality(self, terms: Sequence[Tuple[int, Any]], rhs) -> None:
        """Add rows sum_k M_k x[offset_k : offset_k + M_k.shape[1]] = rhs."""
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float)).reshape(-1)
        n_rows = rhs.shape[0]
        for offset, matrix in terms:
            m = sp.coo_matrix(np.atleast_2d(matrix) if not sp.issparse(matrix) else matrix)
            if m.shape[0] != n_rows:
                raise ValueError(f"Equality term has {m.shape[0]} rows, expected {n_rows}")
            self._rows.append(m.row + self._n_rows)
            self._cols.append(m.col + offset)
            self._vals.append(m.data)
        self._rhs.append(rhs)
        self._n_rows += n_rows

    def objective(self, offset: int, coeffs) -> None:
        for k, value in enumerate(np.atleast_1d(np.asarray(coeffs, dtype=float))):
            if value:
                self._objective[offset + k] = self._objective.get(offset + k, 0.0) + value

    def build(self, sense: str = 'min', offset: float = 0.0, scale: float = 1.0) -> ConicProgram:
        c = np.zeros(self._size)
        for k, value in self._objective.items():
            c[k] = value
        if self._rows:
            rows, cols, vals = (np.concatenate(a) for a in (self._rows, self._cols, self._vals))
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
        matrix = sp.csr_matrix((vals, (rows, cols)), shape=(self._n_rows, self._size))
        rhs = np.concatenate(self._rhs) if self._rhs else np.zeros(0)
        return ConicProgram(self.cones, c, matrix, rhs, sense, offset, scale, self.name)


def _selector(n: int) -> sp.csr_matrix:
    """Rows picking hvec(X) out of vec_F of the real embedding [[Re, -Im], [Im, Re]]."""
    iu, ju = np.triu_indices(n, k=1)
    k = len(iu)
    rows = np.arange(n + 2 * k)
    cols = np.concatenate([np.arange(n) * (2 * n + 1), iu + ju * 2 * n, (n + iu) + ju * 2 * n])
    vals = np.concatenate([np.ones(n), np.full(2 * k, math.sqrt(2.0))])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * n, 4 * n * n))


def _embedded(n: int, constraints: List) -> Tuple[cp.Variable, cp.Expression]:
    s = cp.Variable((2 * n, 2 * n), symmetric=True)
    constraints.append(s[:n, :n] == s[n:, n:])
    constraints.append(s[n:, :n] + s[n:, :n].T == 0)
    return s, _selector(n) @ cp.vec(s, order='F')


def _model(program: ConicProgram, order: Optional[Tuple[int, int]]):
    constraints: List = []
    pieces = []
    for cone in program.cones:
        n = cone.n
        if cone.kind == ConeKind.PSD:
            s, coords = _embedded(n, constraints)
            constraints.append(s >> 0)
            pieces.append(coords)
        elif cone.kind == ConeKind.NONNEG:
            pieces.append(cp.Variable(n, nonneg=True))
        elif cone.kind == ConeKind.FREE:
            pieces.append(cp.Variable(n))
        elif cone.kind == ConeKind.QRE:
            x, x_coords = _embedded(n, constraints)
            y, y_coords = _embedded(n, constraints)
            t = cp.Variable(1)
            constraints.extend([x >> 0, y >> 0])
            constraints.append(2 * t >= cp.quantum_rel_entr(x, y, quad_approx=order))
            pieces.extend([x_coords, y_coords, t])
        else:
            x, x_coords = _embedded(n, constraints)
            y, y_coords = _embedded(n, constraints)
            z, z_coords = _embedded(n, constraints)
            constraints.extend([x >> 0, y >> 0, OpRelEntrConeQuad(x, y, z, order[0], order[1])])
            pieces.extend([x_coords, y_coords, z_coords])
    x = cp.hstack(pieces)
    if program.equalities.shape[0]:
        constraints.append(program.equalities @ x == program.rhs)
    objective = program.c @ x
    goal = cp.Minimize(objective) if program.sense == 'min' else cp.Maximize(objective)
    return cp.Problem(goal, constraints), x


def _blocks(program: ConicProgram, x: np.ndarray) -> List[Any]:
    out: List[Any] = []
    for cone, start in zip(program.cones, program.offsets):
        n, chunk = cone.n, x[start:start + cone.size]
        if cone.kind == ConeKind.PSD:
            out.append(unhvec(chunk, n))
        elif cone.kind in (ConeKind.NONNEG, ConeKind.FREE):
            out.append(chunk.copy())
        elif cone.kind == ConeKind.QRE:
            out.append((unhvec(chunk[:n * n], n), unhvec(chunk[n * n:2 * n * n], n),
                        float(chunk[-1])))
        else:
            out.append(tuple(unhvec(chunk[k * n * n:(k + 1) * n * n], n) for k in range(3)))
    return out


def _solver_options(config: SolverConfig) -> Dict[str, Any]:
    """Interior point tolerances two decades below the reporting tolerance."""
    if config.solver.upper() != 'CLARABEL':
        return {}
    inner = max(config.tol / 100, SOLVER_TOLERANCE_FLOOR)
    return {'max_iter': config.max_iterations, 'tol_gap_abs': inner,
            'tol_gap_rel': inner, 'tol_feas': inner}


def _run(problem: cp.Problem, config: SolverConfig, name: str) -> SolveStatus:
    try:
        problem.solve(solver=config.solver, verbose=config.verbose, **_solver_options(config))
    except CvxpySolverError as exc:
        raise SolverError(f"{name}: solver failed ({exc})") from exc
    status = _STATUS.get(problem.status, SolveStatus.MAX_ITERATIONS)
    if status == SolveStatus.INACCURATE:
        logger.warning("%s: solver reported an inaccurate optimum", name)
    return status


def solve_problem(problem: cp.Problem, config: Optional[SolverConfig] = None,
                  name: str = 'problem') -> float:
    """Solve a cvxpy problem with the configured solver and return its optimal value."""
    config = config or SolverConfig()
    status = _run(problem, config, name)
    if status != SolveStatus.OPTIMAL:
        raise SolverError(f"{name}: solver stopped with status {status.value}")
    return float(problem.value)


def _solve_once(program: ConicProgram, order: Optional[Tuple[int, int]],
                config: SolverConfig) -> Solution:
    problem, x = _model(program, order)
    status = _run(problem, config, program.name or 'program')
    sign = 1.0 if program.sense == 'min' else -1.0
    if status == SolveStatus.INFEASIBLE:
        return Solution(status, sign * math.inf, quad_order=order, solver=config.solver)
    if status == SolveStatus.UNBOUNDED:
        return Solution(status, -sign * math.inf, quad_order=order, solver=config.solver)
    if x.value is None:
        raise SolverError(f"{program.name or 'program'}: solver returned no iterate "
                          f"(status {problem.status})")
    coords = np.asarray(x.value, dtype=float).reshape(-1)
    residual = float(np.max(np.abs(program.equalities @ coords - program.rhs), initial=0.0))
    value = program.scale * (float(program.c @ coords) + program.offset)
    solution = Solution(status, value, _blocks(program, coords), accuracy=residual,
                        residual=residual, quad_order=order, solver=config.solver, x=coords)
    if status == SolveStatus.MAX_ITERATIONS:
        logger.warning("%s: stopped with status %s, returning last iterate",
                       program.name or 'program', problem.status)
    return solution


def next_order(order: Tuple[int, int]) -> Tuple[int, int]:
    """Add a quadrature node every step and a square-root level every other step."""
    m, k = order
    return m + 1, k + 1 if m > k else k


def solve(program: ConicProgram, config: Optional[SolverConfig] = None) -> Solution:
    """Solve, raising the quadrature order until the optimum settles below tol/10.

    If the largest order is reached first, the result stays optimal when the last
    change is within tol and is marked inaccurate otherwise.
    """
    config = config or SolverConfig()
    if not program.has_entropy_cones:
        return _solve_once(program, None, config)
    order = config.quad_order
    previous: Optional[Solution] = None
    while True:
        solution = _solve_once(program, order, config)
        logger.debug("%s at quadrature order %s: %s", program.name, order, solution.value)
        if not solution.optimal or not config.escalate:
            return solution
        change = math.inf
        if previous is not None:
            change = abs(solution.value - previous.value)
            solution.accuracy = max(change, solution.residual)
            if change < config.tol / 10:
                return solution
        if max(order) >= config.max_quad_order:
            if previous is not None and change > config.tol:
                logger.warning("%s: quadrature escalation exhausted at order %s with change %.2e",
                               program.name, order, change)
                solution.status = SolveStatus.INACCURATE
            elif previous is not None:
                logger.warning("%s: quadrature escalation stopped at order %s with change %.2e",
                               program.name, order, change)
            return solution
        previous = solution
        order = next_order(order)


def require_optimal(solution: Solution, what: str) -> float:
    if solution.status == SolveStatus.MAX_ITERATIONS:
        raise SolverError(f"{what}: iteration limit reached", solution)
    if solution.status == SolveStatus.INACCURATE:
        raise SolverError(f"{what}: optimum not resolved to tolerance "
                          f"(accuracy {solution.accuracy:.2e})", solution)
    return solution.value


def dump_program(program: ConicProgram, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(program.to_json(), f)


def load_program(path: str) -> ConicProgram:
    with open(path) as f:
        return ConicProgram.from_json(json.load(f))


def solve_program_file(path: str, config: Optional[SolverConfig] = None) -> Solution:
    return solve(load_program(path), config)


def check_compatible(a: 'SetRepresentation', b: 'SetRepresentation') -> None:
    left, right = a.ambient.blocks, b.ambient.blocks
    if len(left) != len(right) or any(
            (x.kind, x.size, x.weight) != (y.kind, y.size, y.weight) for x, y in zip(left, right)):
        raise ValueError(f"{a.name} and {b.name} live in different ambient spaces")
    if any(block.kind != 'herm' for block in left):
        raise ValueError("Relative entropy programs need Hermitian ambient blocks")


def _block_rows(space: BlockSpace, index: int) -> slice:
    return slice(space.offsets[index], space.offsets[index + 1])


def _add_set(builder: ProgramBuilder, rep: 'SetRepresentation') -> int:
    offset = builder.add_space(rep.lift)
    f, g = rep.constraint_system()
    builder.equality([(offset, f)], g)
    return offset


def _link(builder: ProgramBuilder, rep: 'SetRepresentation', lift_offset: int,
          index: int, coord_offset: int) -> None:
    """Ambient block ``index`` of Pi(x) equals the unweighted hvec at ``coord_offset``."""
    block = rep.ambient.blocks[index]
    n2 = block.size * block.size
    rows = rep.projection_matrix[_block_rows(rep.ambient, index)]
    builder.equality([(lift_offset, rows),
                      (coord_offset, -math.sqrt(block.weight) * sp.identity(n2))],
                     np.zeros(n2))


def _fix_identity(builder: ProgramBuilder, n: int, offset: int) -> None:
    builder.equality([(offset, sp.identity(n * n))],
                     np.concatenate([np.ones(n), np.zeros(n * n - n)]))


def _entropy_offset(point: Sequence[np.ndarray], space: BlockSpace) -> float:
    total = 0.0
    for block, rho in zip(space.blocks, point):
        w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
        w = w[w > 0]
        total += block.weight * float(np.sum(w * np.log(w)))
    return total


def build_umegaki_program(a: 'SetRepresentation', b: 'SetRepresentation') -> ConicProgram:
    """min D(rho||sigma) over rho in A, sigma in B, in bits.

    A singleton A uses D(rho||sigma) = tr rho ln rho + min{tr rho T : (I, sigma, T) in ORE}.
    """
    check_compatible(a, b)
    builder = ProgramBuilder(f"umegaki[{a.name}||{b.name}]")
    b_off = _add_set(builder, b)
    if a.point is not None:
        for k, block in enumerate(a.ambient.blocks):
            n, n2 = block.size, block.size * block.size
            ore = builder.add_cone(ConeKind.ORE, n)
            _fix_identity(builder, n, ore)
            _link(builder, b, b_off, k, ore + n2)
            rho_coords = a.ambient.block_coords(k, a.point[k]) / math.sqrt(block.weight)
            builder.objective(ore + 2 * n2, block.weight * rho_coords)
        offset = _entropy_offset(a.point, a.ambient)
        return builder.build('min', offset=offset, scale=1.0 / LN2)
    a_off = _add_set(builder, a)
    for k, block in enumerate(a.ambient.blocks):
        n2 = block.size * block.size
        qre = builder.add_cone(ConeKind.QRE, block.size)
        _link(builder, a, a_off, k, qre)
        _link(builder, b, b_off, k, qre + n2)
        builder.objective(qre + 2 * n2, [block.weight])
    return builder.build('min', scale=1.0 / LN2)


def build_measured_program(a: 'SetRepresentation', b: 'SetRepresentation',
                           config: Optional[SolverConfig] = None) -> ConicProgram:
    """sup{t' - t : h_B(W) <= 1, h_A(V + t'I) <= t, (I, W, V) in ORE, t >= t_floor}, in bits."""
    config = config or SolverConfig()
    check_compatible(a, b)
    if not a.trace_normalized:
        raise ValueError(f"Measured program needs a trace-normalized first set, got {a.name}")
    builder = ProgramBuilder(f"measured[{a.name}||{b.name}]")
    amb = a.ambient
    w_terms, v_terms, ore_offsets = [], [], []
    for k, block in enumerate(amb.blocks):
        n, n2 = block.size, block.size * block.size
        ore = builder.add_cone(ConeKind.ORE, n)
        _fix_identity(builder, n, ore)
        ore_offsets.append(ore)
        placement = sp.coo_matrix(
            (np.full(n2, math.sqrt(block.weight)),
             (np.arange(amb.offsets[k], amb.offsets[k + 1]), np.arange(n2))),
            shape=(amb.dim, n2))
        w_terms.append((ore + n2, placement))
        v_terms.append((ore + 2 * n2, placement))
    b.epigraph().impose(builder, w_terms, [], 1.0)
    if a.point is not None:
        for k, block in enumerate(amb.blocks):
            n2 = block.size * block.size
            rho_coords = amb.block_coords(k, a.point[k]) / math.sqrt(block.weight)
            builder.objective(ore_offsets[k] + 2 * n2, -block.weight * rho_coords)
        return builder.build('max', scale=1.0 / LN2)
    shift = builder.add_cone(ConeKind.FREE, 1)
    slack = builder.add_cone(ConeKind.NONNEG, 1)
    identity = sp.csr_matrix(amb.trace_weights().reshape(-1, 1))
    a.epigraph().impose(builder, v_terms + [(shift, identity)], [(slack, [[1.0]])],
                        config.t_floor)
    builder.objective(shift, [1.0])
    builder.objective(slack, [-1.0])
    return builder.build('max', offset=-config.t_floor, scale=1.0 / LN2)
