"""Parameter sweeps behind the published comparison plots, emitted as CSV rows."""
import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .apps import (
    ad_channel, adc_bounds, analytic_iso, analytic_werner, d_m_pptk, e_lr, e_wd1, e_wd2, e_wjz,
    isotropic, platypus_channel, q_ad, replacer_channel, werner,
)
from .config import VERSION, SolverConfig
from .linalg import choi_state, random_density
from .types import DensityOperator

logger = logging.getLogger(__name__)

Row = Dict[str, Any]

DEFAULT_RANDOM_SAMPLES = 100
FULL_RANDOM_SAMPLES = 500
IMPROVEMENT_THRESHOLD = 1e-6
FIG1_P_VALUES = (0.01, 0.02, 0.05, 0.1)


def _sweep(fn: Callable[[Any], Row], points: Sequence[Any], threads: int = 1) -> List[Row]:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, points))
    return [fn(x) for x in points]


def _grid(samples: Optional[int], default: int, lo: float, hi: float) -> List[float]:
    return [float(x) for x in np.linspace(lo, hi, samples or default)]


def fig1(p_values: Optional[Sequence[float]] = None, levels: Sequence[int] = (1, 2),
         config: Optional[SolverConfig] = None, use_symmetry: bool = True,
         seed: int = 0, threads: int = 1, samples: Optional[int] = None) -> List[Row]:
    """Replacer versus platypus: level-m upper and lower estimates per p.

    An explicit sample count replaces the default p values by an even grid on [0.01, 0.1].
    """
    if p_values is not None:
        p_values = list(p_values)
    elif samples:
        p_values = _grid(samples, len(FIG1_P_VALUES), FIG1_P_VALUES[0], FIG1_P_VALUES[-1])
    else:
        p_values = list(FIG1_P_VALUES)
    replacer = replacer_channel()

    def row(p: float) -> Row:
        out: Row = {'p': p}
        for m in levels:
            report = adc_bounds(replacer, platypus_channel(p), m, config, use_symmetry, seed)
            out[f"D(N^m||M^m)/m m={m}"] = report.upper
            out[f"D_M(N^m||M^m)/m m={m}"] = report.lower
        return out

    return _sweep(row, p_values, threads)


def _state_curve(make: Callable[[float], DensityOperator], reference: Callable[[float], float],
                 p_values: Sequence[float], config: Optional[SolverConfig],
                 threads: int) -> List[Row]:
    def row(p: float) -> Row:
        rho = make(p)
        return {'p': p,
                'D_M(rho||PPT2)': d_m_pptk(rho, 2, config),
                'E_WJZ': e_wjz(rho, 2, config),
                'D_inf(rho||PPT)': reference(p)}

    return _sweep(row, p_values, threads)


def fig2a(samples: Optional[int] = None, d: int = 3, config: Optional[SolverConfig] = None,
          threads: int = 1) -> List[Row]:
    return _state_curve(lambda p: isotropic(d, p), lambda p: analytic_iso(d, p),
                        _grid(samples, 11, 0.0, 1.0), config, threads)


def fig2b(samples: Optional[int] = None, d: int = 3, config: Optional[SolverConfig] = None,
          threads: int = 1) -> List[Row]:
    return _state_curve(lambda p: werner(d, p), lambda p: analytic_werner(d, p),
                        _grid(samples, 11, 0.0, 1.0), config, threads)


def fig3(samples: Optional[int] = None, ranks: Iterable[int] = range(2, 10),
         seed: int = 0, config: Optional[SolverConfig] = None, threads: int = 1) -> List[Row]:
    """Random 3x3 states per rank: mean bounds and the fraction where D_M is positive."""
    count = samples or DEFAULT_RANDOM_SAMPLES
    rows = []
    for r in ranks:
        states = [random_density(9, r, seed=seed + 1000 * r + k, dims=(3, 3))
                  for k in range(count)]

        def evaluate(rho: DensityOperator) -> Dict[str, float]:
            return {'d_m': d_m_pptk(rho, 2, config), 'wd1': e_wd1(rho, config),
                    'wd2': e_wd2(rho, config)}

        values = _sweep(evaluate, states, threads)
        d_m = np.array([v['d_m'] for v in values])
        row: Row = {
            'rank': r,
            'samples': count,
            'D_M(rho||PPT2)': float(d_m.mean()),
            'E_WD1': float(np.mean([v['wd1'] for v in values])),
            'E_WD2': float(np.mean([v['wd2'] for v in values])),
            'E_LR': e_lr(states[0]) if r == 9 else '',
            'improvement_fraction': float(np.mean(d_m > IMPROVEMENT_THRESHOLD)),
        }
        logger.info("rank %d: mean D_M %.6f, improved on %.2f of samples", r,
                    row['D_M(rho||PPT2)'], row['improvement_fraction'])
        rows.append(row)
    return rows


def fig4(samples: Optional[int] = None, config: Optional[SolverConfig] = None,
         threads: int = 1) -> List[Row]:
    """Amplitude damping: D_M of the Choi state against PPT_2 versus E_WJZ and Q."""
    gammas = _grid(samples, 9, 0.1, 0.9)

    def row(gamma: float) -> Row:
        rho = choi_state(ad_channel(gamma))
        return {'gamma': gamma,
                'D_M(N_ad(Phi)||PPT2)': d_m_pptk(rho, 2, config),
                'E_WJZ': e_wjz(rho, 2, config),
                'Q': q_ad(gamma)}

    return _sweep(row, gammas, threads)


FIGURES: Dict[str, Callable[..., List[Row]]] = {
    '1': fig1, '2a': fig2a, '2b': fig2b, '3': fig3, '4': fig4,
}


def _format(value: Any) -> str:
    if isinstance(value, float):
        return 'inf' if math.isinf(value) else f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: Sequence[Row], header: Dict[str, Any]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# regent {VERSION}\n")
    for key in sorted(header):
        buffer.write(f"# {key}={header[key]}\n")
    if rows:
        writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(v) for k, v in row.items()})
    return buffer.getvalue()


def write_csv(rows: Sequence[Row], path: str, header: Dict[str, Any]) -> None:
    with open(path, 'w', newline='') as f:
        f.write(rows_to_csv(rows, header))
