"""Channels, reference states and entanglement / magic bounds built on the set programs."""
import itertools
import logging
import math
from typing import Any, Dict, List, Optional, Sequence

import cvxpy as cp
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import entr, xlogy

from .config import SolverConfig
from .conic import (
    build_measured_program, build_umegaki_program, require_optimal, solve, solve_problem,
)
from .estimators import sandwich
from .linalg import (
    antisymmetric_projector, choi_state, maximally_entangled, rank, support_projector,
    symmetric_projector, transpose_subsystems_array,
)
from .sets import build_channel_image, build_point, build_pptk, build_rains, build_singleton
from .sets import build_wigner_set, support_function
from .types import BoundReport, DensityOperator, QuantumChannel, SandwichReport
from .wigner import check_odd_prime, copies_of
from .wigner import mana as wigner_mana

logger = logging.getLogger(__name__)

REPLACER_VECTOR = np.array([2.0, 1.0, 2.0]) / 3.0
LN2 = math.log(2.0)


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def replacer_channel(psi: Optional[Sequence[complex]] = None, d_in: int = 3) -> QuantumChannel:
    """N(X) = tr[X] |psi><psi|."""
    v = REPLACER_VECTOR if psi is None else np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("Replacer output vector must be normalized")
    kraus = tuple(np.outer(v, np.eye(d_in)[i]) for i in range(d_in))
    return QuantumChannel(kraus, name='replacer')


def platypus_channel(p: float) -> QuantumChannel:
    _check_probability('p', p)
    m0 = np.array([[math.sqrt(p), 0, 0], [0, 0, 0], [0, 1, 0]])
    m1 = np.array([[0, 0, 0], [math.sqrt(1 - p), 0, 0], [0, 0, 1]])
    return QuantumChannel((m0, m1), name=f"platypus({p:g})")


def ad_channel(gamma: float) -> QuantumChannel:
    _check_probability('gamma', gamma)
    e0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]])
    e1 = np.array([[0, math.sqrt(gamma)], [0, 0]])
    return QuantumChannel((e0, e1), name=f"ad({gamma:g})")


def binary_entropy(p: float) -> float:
    return float((entr(p) + entr(1 - p)) / LN2)


def isotropic(d: int, p: float) -> DensityOperator:
    _check_probability('p', p)
    if d < 2:
        raise ValueError("Isotropic states need d >= 2")
    phi = maximally_entangled(d).entries
    rest = (np.eye(d * d) - phi) / (d * d - 1)
    return DensityOperator(p * phi + (1 - p) * rest, (d, d))


def werner(d: int, p: float) -> DensityOperator:
    """(1 - p) rho_s + p rho_a with the normalized (anti)symmetric projectors."""
    _check_probability('p', p)
    if d < 2:
        raise ValueError("Werner states need d >= 2")
    sym = symmetric_projector(d) * 2 / (d * (d + 1))
    anti = antisymmetric_projector(d) * 2 / (d * (d - 1))
    return DensityOperator((1 - p) * sym + p * anti, (d, d))


def analytic_iso(d: int, p: float) -> float:
    _check_probability('p', p)
    if p <= 1.0 / d:
        return 0.0
    return float(math.log2(d) + (xlogy(p, p) + xlogy(1 - p, (1 - p) / (d - 1))) / LN2)


def analytic_werner(d: int, p: float) -> float:
    _check_probability('p', p)
    if p <= 0.5:
        return 0.0
    if p <= (d + 2) / (2 * d):
        return 1.0 - binary_entropy(p)
    if d < 3:
        raise ValueError("The upper Werner branch needs d >= 3")
    return float(math.log2((d + 2) / d) + (1 - p) * math.log2((d - 2) / (d + 2)))


def _bipartite(rho: DensityOperator) -> Sequence[int]:
    if len(rho.subsystem_dims) != 2:
        raise ValueError("A bipartite state with declared (dA, dB) is required")
    return rho.subsystem_dims


def _neg_log(value: float) -> float:
    if value <= 0:
        return math.inf
    return max(0.0, -math.log2(value))


def e_wd1(rho: DensityOperator, config: Optional[SolverConfig] = None) -> float:
    """-log h_Rains(P_rho), the min-divergence to the Rains set."""
    d_a, d_b = _bipartite(rho)
    return _neg_log(support_function(build_rains(d_a, d_b), support_projector(rho), config))


def e_wd2(rho: DensityOperator, config: Optional[SolverConfig] = None) -> float:
    d_a, d_b = _bipartite(rho)
    return _neg_log(support_function(build_pptk(d_a, d_b, 2), support_projector(rho), config))


def _partial_transpose_expr(x, dims: Sequence[int]):
    out = cp.partial_transpose(x, list(dims), 1)
    return (out + out.H) / 2


def e_wd2_direct(rho: DensityOperator, config: Optional[SolverConfig] = None) -> float:
    """-log min{||Y^{T_B}||_inf : -Y <= P_rho^{T_B} <= Y}."""
    dims = _bipartite(rho)
    n = rho.dim
    proj = support_projector(rho).entries
    proj_t = transpose_subsystems_array(proj, dims, [1])
    y = cp.Variable((n, n), hermitian=True)
    t = cp.Variable()
    y_t = _partial_transpose_expr(y, dims)
    constraints = [y - proj_t >> 0, y + proj_t >> 0,
                   t * np.eye(n) - y_t >> 0, t * np.eye(n) + y_t >> 0]
    problem = cp.Problem(cp.Minimize(t), constraints)
    return _neg_log(solve_problem(problem, config, 'e_wd2 direct'))


def e_wjz(rho: DensityOperator, k: int = 2, config: Optional[SolverConfig] = None) -> float:
    """-log max F(rho, sigma)^2 over sigma in PPT_k, from the block fidelity SDP."""
    if k < 2:
        raise ValueError(f"PPT_k needs k >= 2, got {k}")
    dims = _bipartite(rho)
    n = rho.dim
    x = cp.Variable((n, n), complex=True)
    omegas = [cp.Variable((n, n), hermitian=True) for _ in range(k + 1)]
    constraints = [omegas[0] >> 0, cp.real(cp.trace(omegas[k])) <= 1]
    for i in range(k):
        t = _partial_transpose_expr(omegas[i], dims)
        constraints += [omegas[i + 1] - t >> 0, omegas[i + 1] + t >> 0]
    block = cp.bmat([[rho.entries, x], [x.H, omegas[0]]])
    constraints.append((block + block.H) / 2 >> 0)
    problem = cp.Problem(cp.Maximize(cp.real(cp.trace(x))), constraints)
    f = solve_problem(problem, config, 'e_wjz')
    if f <= 0:
        return math.inf
    return max(0.0, -2.0 * math.log2(min(f, 1.0)))


def e_lr(rho: DensityOperator) -> float:
    """Vanishes on full-rank states; no general evaluation is provided."""
    if rank(rho) < rho.dim:
        raise ValueError("E_LR is only available for full-rank states")
    return 0.0


def d_m_pptk(rho: DensityOperator, k: int = 2, config: Optional[SolverConfig] = None) -> float:
    d_a, d_b = _bipartite(rho)
    program = build_measured_program(build_singleton(rho), build_pptk(d_a, d_b, k), config)
    return require_optimal(solve(program, config), program.name)


def pptk_upper(rho: DensityOperator, k: int = 2, config: Optional[SolverConfig] = None) -> float:
    d_a, d_b = _bipartite(rho)
    program = build_umegaki_program(build_singleton(rho), build_pptk(d_a, d_b, k))
    return require_optimal(solve(program, config), program.name)


def pptk_sandwich(rho: DensityOperator, k: int, m: int,
                  config: Optional[SolverConfig] = None, use_symmetry: bool = True,
                  seed: int = 0, threads: int = 1) -> SandwichReport:
    d_a, d_b = _bipartite(rho)
    return sandwich(lambda n: build_singleton(rho, n), lambda n: build_pptk(d_a, d_b, k, n),
                    m, use_symmetry, config, seed, threads, label=f"rho||PPT{k}")


def q_ad(gamma: float) -> float:
    """max_p h((1 - gamma) p) - h(gamma p)."""
    _check_probability('gamma', gamma)

    def objective(p: float) -> float:
        return -(binary_entropy((1 - gamma) * p) - binary_entropy(gamma * p))

    result = minimize_scalar(objective, bounds=(0.0, 1.0), method='bounded',
                             options={'xatol': 1e-8})
    return max(0.0, float(-result.fun))


def ec_ad_bound(gamma: float, config: Optional[SolverConfig] = None) -> float:
    return d_m_pptk(choi_state(ad_channel(gamma)), 2, config)


def _magic_sets(rho: DensityOperator, d: Optional[int]):
    d = d or rho.dim
    check_odd_prime(d)
    m = copies_of(rho.dim, d)
    return build_point(rho, d, m, name='rho'), build_wigner_set(d, m), d


def thauma(rho: DensityOperator, d: Optional[int] = None,
           config: Optional[SolverConfig] = None) -> float:
    """D(rho||W) at level 1."""
    a, w, _ = _magic_sets(rho, d)
    program = build_umegaki_program(a, w)
    return require_optimal(solve(program, config), program.name)


def thauma_sandwich(rho: DensityOperator, m: int, config: Optional[SolverConfig] = None,
                    use_symmetry: bool = True, seed: int = 0, threads: int = 1) -> SandwichReport:
    d = rho.dim
    check_odd_prime(d)
    return sandwich(lambda n: build_singleton(rho, n), lambda n: build_wigner_set(d, n),
                    m, use_symmetry, config, seed, threads, label='rho||W')


def rains_bound(rho: DensityOperator, config: Optional[SolverConfig] = None) -> float:
    d_a, d_b = _bipartite(rho)
    program = build_umegaki_program(build_singleton(rho), build_rains(d_a, d_b))
    return require_optimal(solve(program, config), program.name)


def rains_sandwich(rho: DensityOperator, m: int, config: Optional[SolverConfig] = None,
                   use_symmetry: bool = True, seed: int = 0, threads: int = 1) -> SandwichReport:
    d_a, d_b = _bipartite(rho)
    return sandwich(lambda n: build_singleton(rho, n), lambda n: build_rains(d_a, d_b, n),
                    m, use_symmetry, config, seed, threads, label='rho||Rains')


def adc_bounds(n: QuantumChannel, m_channel: QuantumChannel, m: int,
               config: Optional[SolverConfig] = None, use_symmetry: bool = True,
               seed: int = 0, threads: int = 1) -> SandwichReport:
    """Level-m bounds on the regularized minimum output divergence of two channels."""
    if n.dim_out != m_channel.dim_out:
        raise ValueError("Channels must share an output dimension")
    return sandwich(lambda k: build_channel_image(n, k),
                    lambda k: build_channel_image(m_channel, k),
                    m, use_symmetry, config, seed, threads,
                    label=f"{n.name}||{m_channel.name}")


def _schmidt_grid(d: int, steps: int) -> List[np.ndarray]:
    weights = []
    for combo in itertools.product(range(steps + 1), repeat=d):
        if sum(combo) == steps and combo[0] > 0:
            weights.append(np.array(combo, dtype=float) / steps)
    return weights


def e_wjz_channel(channel: QuantumChannel, k: int = 2, steps: int = 4,
                  config: Optional[SolverConfig] = None) -> Dict[str, Any]:
    """Heuristic sup of E_WJZ over a coarse grid of Schmidt-diagonal pure inputs."""
    d = channel.dim_in
    best, best_weights = -math.inf, None
    for weights in _schmidt_grid(d, steps):
        psi = np.zeros(d * d, dtype=complex)
        psi[[i * d + i for i in range(d)]] = np.sqrt(weights)
        out = np.zeros((d * channel.dim_out,) * 2, dtype=complex)
        for kraus in channel.kraus_ops:
            lifted = np.kron(np.eye(d), kraus)
            out += lifted @ np.outer(psi, psi.conj()) @ lifted.conj().T
        value = e_wjz(DensityOperator(out / np.trace(out).real, (d, channel.dim_out)), k, config)
        if value > best:
            best, best_weights = value, weights
    return {'value': best, 'schmidt_weights': best_weights.tolist(), 'label': 'heuristic only'}


def mana(rho: DensityOperator, d: Optional[int] = None) -> float:
    return wigner_mana(rho, d or rho.dim)


def bound_ec(rho: DensityOperator, k: int = 2,
             config: Optional[SolverConfig] = None) -> BoundReport:
    """The lower-bound chain for the entanglement cost of a bipartite state."""
    values = {
        'e_wd1': e_wd1(rho, config),
        'e_wd2': e_wd2(rho, config),
        'e_wjz': e_wjz(rho, k, config),
        'd_m_pptk': d_m_pptk(rho, k, config),
        'pptk_upper': pptk_upper(rho, k, config),
    }
    if rank(rho) == rho.dim:
        values['e_lr'] = e_lr(rho)
    report = BoundReport(f"state {rho.subsystem_dims}", values, {'k': k})
    if not report.ordering_holds():
        logger.warning("Entanglement bound ordering violated: %s", values)
    return report


def bound_magic(rho: DensityOperator, d: Optional[int] = None, c: float = 1.0,
                config: Optional[SolverConfig] = None) -> BoundReport:
    """Thauma and mana, with the user-supplied conversion multiplier applied to thauma."""
    value = thauma(rho, d, config)
    values = {'thauma': value, 'mana': mana(rho, d), 'scaled_thauma': c * value}
    return BoundReport(f"state dim {rho.dim}", values, {'c': c})
