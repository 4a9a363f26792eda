"""Command dispatch for the CLI.

Usage example:
    orch = Orchestrator('config.yaml')
    envelope = orch.run('bias-table', args)

Each handler turns parsed arguments into a ``ReportEnvelope``. Failures
are logged through the ``ErrorLogger`` and re-raised for ``cli.main`` to
map onto an exit code; the error and warning counts are logged after
every command.
"""
import re
from argparse import Namespace
from concurrent.futures import ProcessPoolExecutor
from typing import List

from .biasedmodels import EvalMode, RuModel
from .bitstream import MT19937BitSource
from .config_loader import ConfigLoader
from .empirics import Scheme, run_uniformity_experiment
from .error_handler import ErrorLogger
from .errors import ArgumentError, BudgetExceededError, FairbitsError
from .exactbias import (bias_report, bias_report_streaming, ru_bias_montecarlo_partitioned,
                        ru_bucket_counts)
from .reports import ReportEnvelope
from .sampler import sample_with_replacement, sample_without_replacement
from .selftest import run_selftest

_POWER_TOKEN = re.compile(r'^2\^(\d+)([+-]\d+)?$')
COUNTS_INLINE_MAX = 4096


def parse_int_token(token: str) -> int:
    """Integer literal, or 2^k with an optional +c / -c offset."""
    token = token.strip().replace('**', '^')
    match = _POWER_TOKEN.match(token)
    try:
        if match:
            return (1 << int(match.group(1))) + int(match.group(2) or 0)
        return int(token)
    except ValueError:
        raise ArgumentError(f"not an integer: '{token}'")


def parse_m_spec(spec: str) -> List[int]:
    """Parse "1000000", "3,5,7", "1:16" or "1:16:2" (ranges inclusive)."""
    values: List[int] = []
    for part in spec.split(','):
        if not part.strip():
            raise ArgumentError(f"empty item in m list '{spec}'")
        if ':' in part:
            pieces = [parse_int_token(p) for p in part.split(':')]
            if len(pieces) not in (2, 3):
                raise ArgumentError(f"invalid range '{part}'; use lo:hi or lo:hi:step")
            lo, hi = pieces[0], pieces[1]
            step = pieces[2] if len(pieces) == 3 else 1
            if step < 1 or lo > hi:
                raise ArgumentError(f"invalid range '{part}'")
            values.extend(range(lo, hi + 1, step))
        else:
            values.append(parse_int_token(part))
    return values


def _bias_row(job):
    m, w, chunk, digits = job
    return bias_report_streaming(m, w, chunk).as_row(digits)


class Orchestrator:
    """Load configuration, set up logging and run one CLI command."""

    def __init__(self, config_path=None, log_level=None):
        self.cfg = ConfigLoader(config_path)
        self.error_logger = ErrorLogger(self.cfg.get_global('log_folder'),
                                        level=log_level or self.cfg.get_global('log_level', 'INFO'))
        self.logger = self.error_logger.logger
        self.experiments = self.cfg.get_experiments()
        self.budgets = self.cfg.get_budgets()
        self.defaults = self.cfg.get_defaults()

        self.handlers = {
            'bias-table': self.bias_table,
            'ru-bias': self.ru_bias,
            'chisq': self.chisq,
            'sample': self.sample,
            'selftest': self.selftest,
        }

    def run(self, command: str, args: Namespace) -> ReportEnvelope:
        handler = self.handlers.get(command)
        if handler is None:
            raise ArgumentError(f"unknown command '{command}'")
        try:
            self.logger.debug(f"Starting command {command}")
            envelope = handler(args)
            self.logger.debug(f"Completed command {command}")
            return envelope
        except FairbitsError as e:
            self.error_logger.log_error(f"{command} failed: {e}", context={'command': command})
            raise
        except Exception as e:
            self.error_logger.log_error(f"Unexpected error in {command}: {e}",
                                        context={'command': command}, exc_info=True)
            raise
        finally:
            self._log_summary(command)

    def _log_summary(self, command: str):
        summary = self.error_logger.get_summary()
        if summary['warning_count'] > 0:
            self.logger.info(f"{command}: warnings logged: {summary['warning_count']}")
        if self.error_logger.has_errors():
            self.logger.info(f"{command}: errors logged: {summary['error_count']}")

    def _eval_mode(self, args: Namespace) -> EvalMode:
        return EvalMode(args.mode or self.defaults['eval_mode'])

    def bias_table(self, args: Namespace) -> ReportEnvelope:
        w = args.w if args.w is not None else self.defaults['w']
        ms = parse_m_spec(args.m)
        bad = [m for m in ms if not 1 <= m <= (1 << w)]
        if bad:
            raise ArgumentError(f"m values outside [1, 2**{w}]: {bad[:5]}")

        jobs = [(m, w, self.budgets['count_chunk'], self.experiments['decimal_digits']) for m in ms]
        if args.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                rows = list(pool.map(_bias_row, jobs))
        else:
            rows = [_bias_row(job) for job in jobs]
        self.logger.info(f"bias-table: {len(rows)} rows at w={w}")
        return ReportEnvelope('bias-table', {'w': w, 'm': args.m}, {'rows': rows},
                              modes={'arithmetic': 'exact'})

    def ru_bias(self, args: Namespace) -> ReportEnvelope:
        defaults = self.defaults
        model = RuModel(args.w if args.w is not None else defaults['w'],
                        args.u if args.u is not None else defaults['u'],
                        self._eval_mode(args))
        m = parse_int_token(args.m)
        params = {'w': model.w, 'u': model.u, 'm': m}
        modes = {'eval_mode': model.eval_mode.value}

        if args.exact:
            counts = ru_bucket_counts(m, model, max_bits=self.budgets['ru_exact_max_bits'])
            report = bias_report(counts, m, model.w, lattice_bits=model.lattice_bits)
            result = {'rows': [report.as_row(self.experiments['decimal_digits'])],
                      'lattice_bits': model.lattice_bits,
                      'count_histogram': {str(k): v for k, v in report.count_histogram.items()}}
            if m <= COUNTS_INLINE_MAX:
                result['counts'] = [int(c) for c in counts]
            return ReportEnvelope('ru-bias', {**params, 'exact': True}, result,
                                  modes={**modes, 'method': 'exhaustive'})

        if args.mc is None or args.seed is None:
            raise ArgumentError("ru-bias needs either --exact or both --mc N and --seed S")
        tally = ru_bias_montecarlo_partitioned(m, model, args.mc, args.seed, parts=args.parts,
                                               max_workers=args.workers,
                                               bucket_cap=args.cells or self.experiments['bucket_cap'])
        rows = []
        for c, (count, se) in enumerate(zip(tally.counts, tally.std_errors)):
            lo, hi = tally.cell_bounds(c)
            rows.append({'cell': c, 'lo': lo, 'hi': hi, 'count': count, 'std_error': se})
        if tally.clamp_events:
            self.error_logger.log_warning(f"{tally.clamp_events} ru draws rounded up to m + 1 and were clamped",
                                          context={'m': m, 'eval_mode': model.eval_mode.value})
        result = {'n': tally.n, 'cells': tally.cells, 'clamp_events': tally.clamp_events, 'rows': rows}
        return ReportEnvelope('ru-bias', {**params, 'mc': args.mc, 'parts': args.parts, 'cells': tally.cells},
                              result, seeds=[args.seed] + ([] if args.parts == 1 else tally.seeds),
                              modes={**modes, 'method': 'monte-carlo'})

    def chisq(self, args: Namespace) -> ReportEnvelope:
        scheme = Scheme(args.scheme,
                        w=args.w if args.w is not None else self.defaults['w'],
                        u=args.u if args.u is not None else self.defaults['u'],
                        eval_mode=self._eval_mode(args))
        m = parse_int_token(args.m)
        alpha = args.alpha if args.alpha is not None else self.experiments['alpha']
        result = run_uniformity_experiment(scheme, m, args.n, args.seed, cells=args.cells, alpha=alpha,
                                           expectation=args.expect,
                                           bucket_cap=self.experiments['bucket_cap'])
        params = {'scheme': args.scheme, 'w': scheme.w, 'u': scheme.u, 'm': m, 'n': args.n,
                  'cells': result.cells, 'alpha': alpha, 'expect': args.expect}
        return ReportEnvelope('chisq', params, result.to_dict(), seeds=[args.seed],
                              modes={'eval_mode': scheme.eval_mode.value})

    def sample(self, args: Namespace) -> ReportEnvelope:
        n, k = parse_int_token(args.n), parse_int_token(args.k)
        source = MT19937BitSource(args.seed)
        if args.replace:
            values = sample_with_replacement(source, n, k)
        else:
            values = sample_without_replacement(source, n, k)
        self.logger.info(f"sample: {k} of {n}, replace={args.replace}, bits={source.bits_consumed}")
        return ReportEnvelope('sample', {'n': n, 'k': k, 'replace': args.replace}, {'values': values},
                              seeds=[args.seed], modes={'generator': 'rejection'})

    def selftest(self, args: Namespace) -> ReportEnvelope:
        if args.max_w > self.budgets['bruteforce_max_w']:
            raise BudgetExceededError(f"--max-w {args.max_w} exceeds the brute-force budget "
                                      f"w <= {self.budgets['bruteforce_max_w']}",
                                      guidance="lower --max-w or raise budgets.bruteforce_max_w")
        summary = run_selftest(max_w=args.max_w)
        failed = [c['name'] for c in summary['checks'] if not c['passed']]
        if failed:
            self.error_logger.log_warning(f"selftest checks failed: {', '.join(failed)}",
                                          context={'max_w': args.max_w})
        return ReportEnvelope('selftest', {'max_w': args.max_w}, summary)
