"""Command-line frontend.

Usage example:
    python run.py bias-table --w 32 --m 1000000
    python run.py ru-bias --w 4 --u 2 --m 5 --exact
    python run.py chisq --scheme floor --w 8 --m 200 --n 1000000 --seed 7
    python run.py sample --n 10 --k 3 --seed 1
    python run.py selftest

Payloads go to stdout, diagnostics to stderr. Exit codes: 0 success,
1 unexpected failure or failed self-test, 2 argument error, 3 budget exceeded.
"""
import sys
import argparse
from typing import List, Optional

from . import __version__
from .errors import BudgetExceededError, FairbitsError
from .orchestrator import Orchestrator
from .reports import get_writer

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_ARGUMENT = 2
EXIT_BUDGET = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='fairbits',
                                     description='Unbiased random integers and exact floor-multiply bias figures.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--config', help='path to config.yaml')
    parser.add_argument('--log-level', help='console log level (DEBUG, INFO, WARNING, ERROR)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('bias-table', help='exact p+/p- ratio and first-order bound per m')
    p.add_argument('--w', type=int, help='lattice width in bits (default from config)')
    p.add_argument('--m', required=True, help='m list or range: 1000000 | 3,5,7 | 1:16[:step] | 2^31-1')
    p.add_argument('--format', choices=('json', 'csv'), default='json')
    p.add_argument('--workers', type=int, default=1, help='parallel worker processes over rows')

    p = sub.add_parser('ru-bias', help='exact or Monte Carlo output law of the ru composition')
    p.add_argument('--w', type=int)
    p.add_argument('--u', type=int)
    p.add_argument('--m', required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument('--exact', action='store_true', help='enumerate every lattice pair')
    group.add_argument('--mc', type=int, metavar='N', help='Monte Carlo with N draws')
    p.add_argument('--seed', type=int, help='MT19937 seed (required with --mc)')
    p.add_argument('--cells', type=int, help='Monte Carlo cell cap (default from config)')
    p.add_argument('--parts', type=int, default=1, help='independent sub-sources for Monte Carlo')
    p.add_argument('--workers', type=int, default=None)
    p.add_argument('--mode', choices=('exact', 'float'), help='evaluation mode (default from config)')
    p.add_argument('--format', choices=('json', 'csv'), default='json')

    p = sub.add_parser('chisq', help='chi-square uniformity experiment')
    p.add_argument('--scheme', required=True, choices=('reject', 'floor', 'ru', 'r-index'))
    p.add_argument('--m', required=True)
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--cells', type=int)
    p.add_argument('--alpha', type=float)
    p.add_argument('--w', type=int)
    p.add_argument('--u', type=int)
    p.add_argument('--expect', choices=('uniform', 'exact'), default='uniform')
    p.add_argument('--mode', choices=('exact', 'float'))
    p.add_argument('--format', choices=('json', 'csv'), default='json')

    p = sub.add_parser('sample', help='unbiased random sample from 1..n')
    p.add_argument('--n', required=True)
    p.add_argument('--k', required=True)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--replace', action='store_true')
    p.add_argument('--format', choices=('lines', 'json'), default='lines')

    p = sub.add_parser('selftest', help='MT reference vectors, count oracle sweep, rejection enumeration')
    p.add_argument('--max-w', type=int, default=12)
    p.add_argument('--format', choices=('json',), default='json')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and write its payload.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        int: Exit code
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_ARGUMENT

    try:
        orch = Orchestrator(args.config, args.log_level)
    except Exception as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_ARGUMENT

    try:
        envelope = orch.run(args.command, args)
        get_writer(args.format).write(envelope, sys.stdout)
    except BudgetExceededError as e:
        print(f"{e}" + (f"; {e.guidance}" if e.guidance else ""), file=sys.stderr)
        return EXIT_BUDGET
    except FairbitsError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        print(f"Fatal error: {e}", file=sys.stderr)
        return EXIT_FAILURE

    if args.command == 'selftest' and not envelope.result['passed']:
        return EXIT_FAILURE
    return EXIT_OK
