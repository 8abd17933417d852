"""Matrix JSON files: {"dim": n, "subsystems": [d1, ...], "re": [[...]], "im": [[...]]}.

Rows are stored row-major. "im" is optional and defaults to zero; the
subsystem dimensions must multiply to "dim".
"""
import json
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .types import DensityOperator, HermitianOperator


def _square(name: str, value: Any, dim: int) -> np.ndarray:
    try:
        array = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"Matrix entry {name!r} is not numeric: {exc}") from exc
    if array.shape != (dim, dim):
        raise ValueError(f"Matrix entry {name!r} has shape {array.shape}, expected ({dim}, {dim})")
    return array


def parse_matrix(data: Any) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ValueError("Matrix JSON must be an object with 'dim', 'subsystems' and 're'")
    missing = [key for key in ('dim', 'subsystems', 're') if key not in data]
    if missing:
        raise ValueError(f"Matrix JSON is missing {', '.join(missing)}")
    dim = data['dim']
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ValueError(f"'dim' must be a positive integer, got {dim!r}")
    subsystems = data['subsystems']
    if (not isinstance(subsystems, list) or not subsystems
            or any(not isinstance(d, int) or isinstance(d, bool) or d < 1 for d in subsystems)):
        raise ValueError(f"'subsystems' must be a list of positive integers, got {subsystems!r}")
    if int(np.prod(subsystems)) != dim:
        raise ValueError(f"Subsystems {subsystems} do not multiply to dim {dim}")
    real = _square('re', data['re'], dim)
    imag = _square('im', data['im'], dim) if 'im' in data else np.zeros_like(real)
    dims = tuple(subsystems) if len(subsystems) > 1 else ()
    return {'matrix': real + 1j * imag, 'dims': dims}


def load_operator(path: str) -> HermitianOperator:
    with open(path) as f:
        parsed = parse_matrix(json.load(f))
    return HermitianOperator(parsed['matrix'], parsed['dims'])


def load_state(path: str) -> DensityOperator:
    return DensityOperator.from_operator(load_operator(path))


def matrix_to_json(x: np.ndarray, dims: Sequence[int] = ()) -> Dict[str, Any]:
    x = np.asarray(x, dtype=complex)
    dim = x.shape[0]
    out: Dict[str, Any] = {'dim': dim,
                           'subsystems': [int(d) for d in dims] if dims else [dim],
                           're': x.real.tolist()}
    if np.any(x.imag):
        out['im'] = x.imag.tolist()
    return out


def dump_operator(op: HermitianOperator, path: str, dims: Optional[Sequence[int]] = None) -> None:
    with open(path, 'w') as f:
        json.dump(matrix_to_json(op.entries, op.subsystem_dims if dims is None else dims), f)
