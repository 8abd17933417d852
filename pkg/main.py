import argparse
import json
import logging
import math
import os
import sys
from typing import Any, List, Optional

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src import apps, figures, sets
from src.config import RunConfig
from src.conic import solve_program_file
from src.divergences import divergence
from src.matrix_io import load_operator, load_state
from src.symmetry import block_decompose, commutant_dimension
from src.types import DivergenceKind, SolverError

logger = logging.getLogger('regent')

EXIT_DOMAIN = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64

KINDS = {
    'umegaki': DivergenceKind.UMEGAKI,
    'min': DivergenceKind.MIN,
    'max': DivergenceKind.MAX,
    'measured': DivergenceKind.MEASURED,
    'measured-half': DivergenceKind.MEASURED_HALF,
}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def _encode(value: Any) -> Any:
    if isinstance(value, float) and math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    return value


def _emit(payload: Any) -> None:
    print(json.dumps(_encode(payload), sort_keys=True))


GLOBAL_DEFAULTS = {'tol': 1e-7, 'seed': 0, 'threads': None, 'log_level': 'WARNING'}


def _common_options() -> argparse.ArgumentParser:
    """Global options, accepted before or after the subcommand."""
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument('--tol', type=float, help='Solver tolerance (default: 1e-7)')
    common.add_argument('--seed', type=int, help='Random seed (default: 0)')
    common.add_argument('--threads', type=int,
                        help='Worker threads (default: REGENT_THREADS or 1)')
    common.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Logging level on stderr (default: WARNING)')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = Parser(prog='regent', description='Regularized relative entropy bounds',
                    parents=[common])
    sub = parser.add_subparsers(dest='command', required=True, parser_class=Parser)

    div = sub.add_parser('div', help='Divergence between two matrices', parents=[common])
    div.add_argument('--kind', choices=sorted(KINDS), required=True)
    div.add_argument('--rho', required=True, help='State matrix JSON')
    div.add_argument('--sigma', required=True, help='PSD matrix JSON')

    set_cmd = sub.add_parser('set', help='Set operations', parents=[common])
    set_sub = set_cmd.add_subparsers(dest='set_command', required=True, parser_class=Parser)
    probe = set_sub.add_parser('probe', help='Support function and polar verdict',
                               parents=[common])
    probe.add_argument('--name', choices=sorted(sets.SET_BUILDERS), required=True)
    probe.add_argument('--k', type=int, default=2)
    probe.add_argument('--dA', type=int, default=2)
    probe.add_argument('--dB', type=int, default=2)
    probe.add_argument('--d', type=int, default=3, help='Local dimension of the Wigner set')
    probe.add_argument('--m', type=int, default=1)
    probe.add_argument('--witness', required=True)

    solve_cmd = sub.add_parser('solve', help='Solve a dumped conic program', parents=[common])
    solve_cmd.add_argument('--program', required=True)

    sym = sub.add_parser('sym', help='Symmetry reduction', parents=[common])
    sym_sub = sym.add_subparsers(dest='sym_command', required=True, parser_class=Parser)
    blocks = sym_sub.add_parser('blocks', help='Block structure of the permutation commutant',
                                parents=[common])
    blocks.add_argument('--d', type=int, required=True)
    blocks.add_argument('--m', type=int, required=True)

    sandwich = sub.add_parser('sandwich', help='Level-m upper and lower bounds',
                              parents=[common])
    sandwich.add_argument('--application', choices=['adc', 'rains', 'pptk', 'wigner'],
                          required=True)
    sandwich.add_argument('--m', type=int, default=1)
    sandwich.add_argument('--sym', choices=['on', 'off'], default='on')
    sandwich.add_argument('--state', help='State JSON for rains, pptk and wigner')
    sandwich.add_argument('--p', type=float, default=0.05, help='Platypus parameter for adc')
    sandwich.add_argument('--k', type=int, default=2)

    fig = sub.add_parser('fig', help='Figure sweeps as CSV', parents=[common])
    fig.add_argument('figure', choices=sorted(figures.FIGURES))
    fig.add_argument('--out', required=True, help='Output directory')
    fig.add_argument('--samples', type=int, default=None)
    fig.add_argument('--full', action='store_true',
                     help=f'Use {figures.FULL_RANDOM_SAMPLES} random samples per rank')

    bound = sub.add_parser('bound', help='Entanglement and magic bounds', parents=[common])
    bound.add_argument('target', choices=['ec', 'magic'])
    bound.add_argument('--state', required=True)
    bound.add_argument('--k', type=int, default=2)
    bound.add_argument('--c', type=float, default=1.0, help='Conversion multiplier for thauma')
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    inputs = [v for v in (getattr(args, name, None) for name in
                          ('rho', 'sigma', 'witness', 'program', 'state')) if v]
    extra = {} if args.threads is None else {'threads': args.threads}
    return RunConfig(
        subcommand=args.command, inputs=inputs, tol=args.tol, seed=args.seed,
        symmetry=getattr(args, 'sym', 'on') == 'on',
        output_format='csv' if args.command == 'fig' else 'json',
        samples=getattr(args, 'samples', None), out_dir=getattr(args, 'out', None), **extra,
    )


def _set_probe(args: argparse.Namespace, run: RunConfig) -> dict:
    if args.name == 'wigner':
        rep = sets.build_wigner_set(args.d, args.m)
    elif args.name == 'pptk':
        rep = sets.build_pptk(args.dA, args.dB, args.k, args.m)
    else:
        rep = sets.SET_BUILDERS[args.name](args.dA, args.dB, args.m)
    witness = load_operator(args.witness)
    value = sets.support_function(rep, witness, run.solver_config())
    return {'set': rep.name, 'h': value, 'polar_member': bool(value <= 1 + 1e-8)}


def _sandwich(args: argparse.Namespace, run: RunConfig) -> dict:
    solver = run.solver_config()
    options = dict(config=solver, use_symmetry=run.symmetry, seed=run.seed, threads=run.threads)
    if args.application == 'adc':
        report = apps.adc_bounds(apps.replacer_channel(), apps.platypus_channel(args.p),
                                 args.m, **options)
    else:
        if not args.state:
            raise ValueError(f"--state is required for the {args.application} application")
        rho = load_state(args.state)
        if args.application == 'rains':
            report = apps.rains_sandwich(rho, args.m, **options)
        elif args.application == 'pptk':
            report = apps.pptk_sandwich(rho, args.k, args.m, **options)
        else:
            report = apps.thauma_sandwich(rho, args.m, **options)
    return report.to_json()


def _figure(args: argparse.Namespace, run: RunConfig) -> dict:
    solver = run.solver_config()
    samples = figures.FULL_RANDOM_SAMPLES if args.full and args.figure == '3' else args.samples
    if args.figure == '1':
        rows = figures.fig1(config=solver, use_symmetry=run.symmetry, seed=run.seed,
                            threads=run.threads, samples=samples)
    elif args.figure == '3':
        rows = figures.fig3(samples, seed=run.seed, config=solver, threads=run.threads)
    else:
        rows = figures.FIGURES[args.figure](samples, config=solver, threads=run.threads)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"fig{args.figure}.csv")
    figures.write_csv(rows, path, run.header())
    return {'path': path, 'rows': len(rows)}


def dispatch(args: argparse.Namespace) -> dict:
    """Run a subcommand; the JSON payload carries the resolved configuration."""
    run = _run_config(args)
    logger.info("Resolved configuration: %s", run.header())
    payload = _dispatch(args, run)
    payload['config'] = run.header()
    return payload


def _dispatch(args: argparse.Namespace, run: RunConfig) -> dict:
    if args.command == 'div':
        value = divergence(KINDS[args.kind], load_state(args.rho), load_operator(args.sigma),
                           run.solver_config())
        return {'value': value.value}
    if args.command == 'set':
        return _set_probe(args, run)
    if args.command == 'solve':
        solution = solve_program_file(args.program, run.solver_config())
        return {'status': solution.status.value, 'value': solution.value,
                'accuracy': solution.accuracy, 'quad_order': solution.quad_order}
    if args.command == 'sym':
        dec = block_decompose(args.d, args.m, run.seed)
        return {'blocks': dec.describe(), 'certificate': dec.commutant_dim,
                'orbit_count': commutant_dimension(args.d, args.m)}
    if args.command == 'sandwich':
        return _sandwich(args, run)
    if args.command == 'fig':
        return _figure(args, run)
    rho = load_state(args.state)
    if args.target == 'ec':
        return apps.bound_ec(rho, args.k, run.solver_config()).to_json()
    return apps.bound_magic(rho, c=args.c, config=run.solver_config()).to_json()


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    for name, default in GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        _emit(dispatch(args))
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_DOMAIN
    except SolverError as exc:
        logger.error("Solver failure: %s", exc)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
