"""Divergences between a state and a positive semidefinite operator, in bits."""
import logging
import math
from typing import Callable, Dict, Optional

import numpy as np

from .config import PSD_TOLERANCE, SUPPORT_TOLERANCE, SolverConfig
from .conic import build_measured_program, require_optimal, solve
from .linalg import fidelity, matrix_function, support_projector_array
from .sets import build_point
from .types import DensityOperator, DivergenceKind, DivergenceValue, HermitianOperator

logger = logging.getLogger(__name__)


def _check_pair(rho: DensityOperator, sigma: HermitianOperator) -> None:
    if rho.dim != sigma.dim:
        raise ValueError(f"Dimension mismatch: rho is {rho.dim}, sigma is {sigma.dim}")
    scale = max(1.0, float(np.max(np.abs(sigma.entries))))
    if not sigma.is_psd(PSD_TOLERANCE * scale):
        raise ValueError("sigma must be positive semidefinite")


def support_contained(rho: HermitianOperator, sigma: HermitianOperator) -> bool:
    """supp(rho) within supp(sigma), tested as ||(I - P_sigma) P_rho||_inf <= tol."""
    p_rho = support_projector_array(rho.entries)
    p_sigma = support_projector_array(sigma.entries)
    leak = (np.eye(rho.dim) - p_sigma) @ p_rho
    return float(np.linalg.norm(leak, 2)) <= SUPPORT_TOLERANCE


def commute(rho: HermitianOperator, sigma: HermitianOperator, tol: float = 1e-10) -> bool:
    a, b = rho.entries, sigma.entries
    return float(np.max(np.abs(a @ b - b @ a))) <= tol * max(1.0, float(np.max(np.abs(a))))


def umegaki(rho: DensityOperator, sigma: HermitianOperator) -> DivergenceValue:
    _check_pair(rho, sigma)
    if not support_contained(rho, sigma):
        return DivergenceValue(math.inf, DivergenceKind.UMEGAKI)
    log_rho = matrix_function(rho, 'log').entries
    log_sigma = matrix_function(sigma, 'log').entries
    value = float(np.real(np.trace(rho.entries @ (log_rho - log_sigma))))
    return DivergenceValue(value, DivergenceKind.UMEGAKI)


def d_min(rho: DensityOperator, sigma: HermitianOperator) -> DivergenceValue:
    _check_pair(rho, sigma)
    overlap = float(np.real(np.trace(support_projector_array(rho.entries) @ sigma.entries)))
    if overlap <= SUPPORT_TOLERANCE:
        return DivergenceValue(math.inf, DivergenceKind.MIN)
    return DivergenceValue(-math.log2(overlap), DivergenceKind.MIN)


def d_max(rho: DensityOperator, sigma: HermitianOperator) -> DivergenceValue:
    _check_pair(rho, sigma)
    if not support_contained(rho, sigma):
        return DivergenceValue(math.inf, DivergenceKind.MAX)
    root = matrix_function(sigma, 'inverse_sqrt').entries
    sandwiched = root @ rho.entries @ root
    top = float(np.linalg.eigvalsh((sandwiched + sandwiched.conj().T) / 2)[-1])
    return DivergenceValue(math.log2(top), DivergenceKind.MAX)


def measured(rho: DensityOperator, sigma: HermitianOperator,
             config: Optional[SolverConfig] = None) -> DivergenceValue:
    """sup over PD omega of tr[rho ln omega] + 1 - tr[sigma omega], converted to bits.

    Commuting pairs reduce to the classical value; everything else goes
    through the operator relative entropy program with singleton sets.
    """
    _check_pair(rho, sigma)
    if not support_contained(rho, sigma):
        return DivergenceValue(math.inf, DivergenceKind.MEASURED)
    if commute(rho, sigma):
        return DivergenceValue(umegaki(rho, sigma).value, DivergenceKind.MEASURED)
    program = build_measured_program(build_point(rho, name='rho'),
                                     build_point(sigma, name='sigma'), config)
    solution = solve(program, config)
    value = require_optimal(solution, program.name)
    logger.debug("measured divergence %.10f (accuracy %.2e)", value, solution.accuracy)
    return DivergenceValue(value, DivergenceKind.MEASURED)


def measured_half(rho: DensityOperator, sigma: HermitianOperator) -> DivergenceValue:
    """-log F(rho, sigma)^2, the order-1/2 member of the measured and sandwiched families."""
    _check_pair(rho, sigma)
    f = fidelity(rho, sigma)
    if f * f <= SUPPORT_TOLERANCE ** 2:
        return DivergenceValue(math.inf, DivergenceKind.MEASURED_HALF)
    return DivergenceValue(-2.0 * math.log2(f), DivergenceKind.MEASURED_HALF)


DIVERGENCES: Dict[DivergenceKind, Callable[..., DivergenceValue]] = {
    DivergenceKind.UMEGAKI: umegaki,
    DivergenceKind.MIN: d_min,
    DivergenceKind.MAX: d_max,
    DivergenceKind.MEASURED: measured,
    DivergenceKind.MEASURED_HALF: measured_half,
}


def divergence(kind: DivergenceKind, rho: DensityOperator, sigma: HermitianOperator,
               config: Optional[SolverConfig] = None) -> DivergenceValue:
    if kind == DivergenceKind.MEASURED:
        return measured(rho, sigma, config)
    return DIVERGENCES[kind](rho, sigma)
