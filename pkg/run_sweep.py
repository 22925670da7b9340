import argparse
import logging
import os
import sys

from metrics.evaluation_metrics import run_checks, summary_json
from utils.config import ConfigParseError, ConfigValidationError, load_config
from utils.export import frame_to_text, write_rows
from utils.file_utils import setup_logging, sibling_path, write_text
from utils.sweep import analytic_row, grid_points, simulate_rows, synergy_report

logger = logging.getLogger()

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3
WORKERS_ENV = 'GOVLIQ_WORKERS'


def resolve_workers(opt, cfg):
    if opt.workers is not None:
        return opt.workers
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigValidationError([(WORKERS_ENV, 'expected an integer, got %r' % env)])
        if workers < 1:
            raise ConfigValidationError([(WORKERS_ENV, 'must be at least 1')])
        return workers
    return cfg.workers


def cmd_analytic(opt, cfg):
    rows = [analytic_row(p, cfg) for p in grid_points(cfg)]
    write_rows(rows, opt.out or cfg.output_path, with_mc=False)
    return EXIT_OK


def cmd_simulate(opt, cfg):
    rows = simulate_rows(grid_points(cfg), cfg, workers=opt.workers, progress=not opt.quiet)
    write_rows(rows, opt.out or cfg.output_path)
    flagged = sum(r.flagged for r in rows)
    logger.info('flagged rows: %d of %d', flagged, len(rows))
    return EXIT_CHECK if flagged else EXIT_OK


def cmd_synergy(opt, cfg):
    try:
        report = synergy_report(cfg, progress=not opt.quiet)
    except ValueError as e:
        raise ConfigValidationError([('sweep', str(e))])
    text = '\n\n'.join([
        '# delta_lambda ILL (rows: c_m)\n' + frame_to_text(report.delta_lambda),
        '# delta_c ILL (rows: lambda)\n' + frame_to_text(report.delta_cm),
        '# ILL partial signs (expected +--)\n' + frame_to_text(report.signs),
        'ordering violations: %d\nsign contradictions: %d\n' % (report.order_violations,
                                                                report.sign_contradictions),
    ])
    path = write_text(opt.out or sibling_path(cfg.output_path, '.txt'), text)
    logger.info('wrote synergy report to %s', path)
    return EXIT_CHECK if report.failed else EXIT_OK


def cmd_validate(opt, cfg):
    checks = run_checks(cfg, workers=opt.workers, inject_fault=opt.inject_fault, progress=not opt.quiet)
    path = write_text(opt.out or sibling_path(cfg.output_path, '.json'), summary_json(checks) + '\n')
    failed = [c.name for c in checks if not c.passed]
    if failed:
        logger.error('failed checks: %s', ', '.join(failed))
    logger.info('wrote validation summary to %s', path)
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {
    'analytic': cmd_analytic,
    'simulate': cmd_simulate,
    'synergy': cmd_synergy,
    'validate': cmd_validate,
}


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description='liquidity under governance and noise trading')
    parser.add_argument('command', choices=sorted(COMMANDS))
    parser.add_argument('--config', required=True, help='key = value run configuration')
    parser.add_argument('--seed', type=int, default=None, help='master seed, overrides run.seed')
    parser.add_argument('--out', default=None, help='output file, overrides run.output')
    parser.add_argument('--trials', type=int, default=None, help='Monte Carlo trials per grid point')
    parser.add_argument('--workers', type=int, default=None, help='worker processes, overrides %s' % WORKERS_ENV)
    parser.add_argument('--log_dir', default=None, help='also write output.log here')
    parser.add_argument('--quiet', action='store_true', default=False, help='no progress bars')
    parser.add_argument('--verbose', action='store_true', default=False)
    parser.add_argument('--inject-fault', dest='inject_fault', action='store_true', default=False,
                        help=argparse.SUPPRESS)
    return parser.parse_args(argv)


def main(argv=None):
    opt = parse_args(argv)
    setup_logging(opt.log_dir, logging.DEBUG if opt.verbose else logging.INFO)
    try:
        cfg = load_config(opt.config)
        if opt.trials is not None and opt.trials < 1:
            raise ConfigValidationError([('--trials', 'must be at least 1')])
        if opt.seed is not None and opt.seed < 0:
            raise ConfigValidationError([('--seed', 'must be non-negative')])
        if opt.workers is not None and opt.workers < 1:
            raise ConfigValidationError([('--workers', 'must be at least 1')])
        cfg = cfg.with_overrides(seed=opt.seed, trials=opt.trials)
        opt.workers = resolve_workers(opt, cfg)
        logger.info(cfg)
        return COMMANDS[opt.command](opt, cfg)
    except (ConfigParseError, ConfigValidationError) as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except OSError as e:
        logger.error('I/O failure: %s', e)
        return EXIT_IO
    except (ValueError, ArithmeticError, RuntimeError) as e:
        logger.error('%s: %s', type(e).__name__, e)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
