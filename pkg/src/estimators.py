"""Level-m bounds on the regularized relative entropy between two set families.

At level m, D_M(A_m||B_m)/m <= D^inf(A||B) <= D(A_m||B_m)/m, and the gap is
at most 2(d^2 + d) log(m + d) / m when the families meet the closure
assumptions.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .config import SolverConfig
from .conic import (
    ProgramBuilder, build_measured_program, build_umegaki_program, check_compatible,
    require_optimal, solve,
)
from .sets import SetRepresentation
from .symmetry import block_decompose, reduce_setrep
from .types import ConeKind, SandwichReport, Solution, SolverError, SolveStatus

logger = logging.getLogger(__name__)

SetFactory = Callable[[int], SetRepresentation]

DMAX_CEILING = 1e9


def required_level(delta: float, d: int) -> int:
    """ceil((8 d^2 / delta) log(d^2 / delta))."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")
    return math.ceil(8 * d * d / delta * math.log2(d * d / delta))


def gap_bound(m: int, d: int) -> float:
    return 2 * (d * d + d) * math.log2(m + d) / m


def dmax_precheck(a: SetRepresentation, b: SetRepresentation,
                  config: Optional[SolverConfig] = None) -> float:
    """min log t over rho in A, sigma in B with rho <= t sigma.

    Solved in the homogenized form min{t : Pi_B(y) - Pi_A(x) >= 0,
    F_A(x) = g_A, F_B(y) = t g_B} where y stands for t times a lift of sigma.
    """
    check_compatible(a, b)
    builder = ProgramBuilder(f"dmax[{a.name}||{b.name}]")
    x = builder.add_space(a.lift)
    f_a, g_a = a.constraint_system()
    builder.equality([(x, f_a)], g_a)
    y = builder.add_space(b.lift)
    t = builder.add_cone(ConeKind.NONNEG, 1)
    f_b, g_b = b.constraint_system()
    builder.equality([(y, f_b), (t, -g_b.reshape(-1, 1))], np.zeros(g_b.shape[0]))
    slack = builder.add_space(a.ambient)
    builder.equality([(y, b.projection_matrix), (x, -a.projection_matrix),
                      (slack, -sp.identity(a.ambient.dim))], np.zeros(a.ambient.dim))
    builder.objective(t, [1.0])
    solution = solve(builder.build('min'), config)
    if solution.status in (SolveStatus.INFEASIBLE, SolveStatus.UNBOUNDED):
        logger.warning("%s: no finite max-divergence (status %s)", builder.name,
                       solution.status.value)
        return math.inf
    value = require_optimal(solution, builder.name)
    if value > DMAX_CEILING:
        logger.warning("%s: max-divergence scale %.3g treated as infinite", builder.name, value)
        return math.inf
    if value <= 0:
        return -math.inf
    return math.log2(value)


def _reduce_pair(a: SetRepresentation, b: SetRepresentation,
                 seed: int) -> Tuple[SetRepresentation, SetRepresentation]:
    dec = block_decompose(a.local_dim, a.copies, seed)
    return reduce_setrep(a, dec, seed=seed), reduce_setrep(b, dec, seed=seed)


def _solve_pair(a: SetRepresentation, b: SetRepresentation, config: SolverConfig,
                threads: int) -> Tuple[Solution, Solution]:
    upper = build_umegaki_program(a, b)
    lower = build_measured_program(a, b, config)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            upper_job = pool.submit(solve, upper, config)
            lower_job = pool.submit(solve, lower, config)
            return upper_job.result(), lower_job.result()
    return solve(upper, config), solve(lower, config)


def sandwich(a_factory: SetFactory, b_factory: SetFactory, m: int,
             use_symmetry: bool = True, config: Optional[SolverConfig] = None,
             seed: int = 0, threads: int = 1, label: str = '') -> SandwichReport:
    """Upper and lower level-m estimates of D^inf(A||B)."""
    if m < 1:
        raise ValueError(f"Level must be at least 1, got {m}")
    config = config or SolverConfig()
    a, b = a_factory(m), b_factory(m)
    d = a.local_dim
    reduce = use_symmetry and m > 1
    if reduce:
        a, b = _reduce_pair(a, b, seed)
    report = SandwichReport(
        level=m, lower=math.inf, upper=math.inf, gap_bound=gap_bound(m, d), d=d,
        assumptions_certified=a.assumptions_certified and b.assumptions_certified,
        symmetry=reduce, label=label or f"{a.name}||{b.name}",
    )
    if math.isinf(dmax_precheck(a, b, config)):
        return report
    upper, lower = _solve_pair(a, b, config, threads)
    report.upper = require_optimal(upper, 'umegaki program') / m
    report.lower = require_optimal(lower, 'measured program') / m
    report.upper_accuracy = upper.accuracy / m
    report.lower_accuracy = lower.accuracy / m
    logger.info("level %d: %.8f <= D <= %.8f (gap bound %.4f)", m, report.lower,
                report.upper, report.gap_bound)
    if report.lower > report.upper + 2 * config.tol:
        raise SolverError(f"{report.label}: lower estimate exceeds upper estimate by "
                          f"{report.lower - report.upper:.2e}")
    return report
