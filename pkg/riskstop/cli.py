"""
Command line entry point.

    riskstop validate --config ref.json
    riskstop solve    --config ref.json --out run1
    riskstop simulate --config ref.json --policy-dir run1 --paths 1000000
    riskstop compare  --config ref.json
    riskstop sweep    --config ref.json --sweep sweep.json
    riskstop dynkin   --config ref.json --horizon 0.05

Exit status: 0 success, 1 invalid configuration, 2 runtime error,
3 comparison out of tolerance.
"""

import sys
import json
import logging
import argparse
import warnings

from .config import load_document, validate_config, apply_overrides, RunConfig
from .runstop import RunStop
from .stoputils import ConfigError, RiskStopError, ModelConsistencyWarning

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_INVALID", "EXIT_RUNTIME", "EXIT_TOLERANCE"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2
EXIT_TOLERANCE = 3

logger = logging.getLogger('riskstop')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, help='JSON run configuration')
    common.add_argument('--out', default=None, help='output directory (overrides run.out)')
    common.add_argument('--seed', type=int, default=None, help='base seed, unsigned 64-bit')
    common.add_argument('--paths', type=int, default=None, help='number of Monte Carlo paths')
    common.add_argument('--threads', type=int, default=None, help='worker processes')
    common.add_argument('--mode', choices=['consistent', 'as_printed'], default=None,
                        help='refused-claim term of the DP operator')
    common.add_argument('--fixed-point', action='store_true', default=None,
                        help='infinite-claim value instead of K claims')
    common.add_argument('-K', type=int, default=None, help='number of claims')
    verb = common.add_mutually_exclusive_group()
    verb.add_argument('-v', '--verbose', action='store_true')
    verb.add_argument('-q', '--quiet', action='store_true')

    parser = argparse.ArgumentParser(
        prog='riskstop', description='Optimal stopping of an insurance risk reserve')
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    sub.add_parser('validate', parents=[common], help='check a configuration')
    sub.add_parser('solve', parents=[common], help='value and policy grids')
    psim = sub.add_parser('simulate', parents=[common], help='Monte Carlo of a policy')
    psim.add_argument('--policy-dir', default=None, help='directory holding grids.h5')
    psim.add_argument('--zero-policy', action='store_true', help='stop at once instead')
    psim.add_argument('--per-path', action='store_true', help='also write paths.csv')
    sub.add_parser('compare', parents=[common], help='DP value against Monte Carlo')
    psw = sub.add_parser('sweep', parents=[common], help='headline over a parameter grid')
    psw.add_argument('--sweep', default=None, help='JSON sweep spec (overrides run.sweep)')
    pdy = sub.add_parser('dynkin', parents=[common], help='generator check by Dynkin formula')
    pdy.add_argument('--horizon', type=float, default=None, help='time step h')
    return parser


def _overrides(args):
    return {
        'run.out': args.out,
        'run.base_seed': args.seed,
        'run.n_paths': args.paths,
        'run.threads': args.threads,
        'run.K': args.K,
        'run.fixed_point': args.fixed_point,
        'solver.mode': args.mode,
    }


def _setup_logging(args):
    level = logging.INFO if args.verbose else (logging.ERROR if args.quiet else logging.WARNING)
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')


def _validate(doc):
    violations = validate_config(doc)
    errors = [vv for vv in violations if vv.level == 'error']
    for vv in violations:
        print(str(vv))
    if errors:
        return EXIT_INVALID
    print('OK')
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args)

    try:
        doc = apply_overrides(load_document(args.config), _overrides(args))
    except ConfigError as err:
        print('ERROR: {0}'.format(err))
        return EXIT_INVALID

    if args.command == 'validate':
        return _validate(doc)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', ModelConsistencyWarning)
            cfg = RunConfig.from_document(doc)
    except ConfigError as err:
        print('ERROR: {0}'.format(err))
        return EXIT_INVALID
    for vv in validate_config(doc):
        if vv.level == 'error':
            print(str(vv))
            return EXIT_INVALID
        logger.warning(vv.message)

    driver = RunStop(verbose=args.verbose)
    try:
        if args.command == 'solve':
            out = driver.solve(cfg)
            print('headline {0:.17g}'.format(out['headline']))
        elif args.command == 'simulate':
            out = driver.simulate(cfg, policy_dir=args.policy_dir, zero_policy=args.zero_policy,
                                  per_path=args.per_path)
            print('mean {0:.17g} se {1:.17g}'.format(out['mean'], out['standard_error']))
        elif args.command == 'compare':
            out = driver.compare(cfg)
            print('dp {0:.17g} mc {1:.17g} se {2:.17g} {3}'.format(
                out['dp_value'], out['mc_mean'], out['mc_standard_error'],
                'PASS' if out['within_tolerance'] else 'FAIL'))
            if not out['within_tolerance']:
                return EXIT_TOLERANCE
        elif args.command == 'sweep':
            spec = None
            if args.sweep is not None:
                with open(args.sweep, 'r') as ff:
                    spec = json.load(ff)
            out = driver.sweep(cfg, sweep=spec)
            print('{0} cells'.format(len(out['rows'])))
        elif args.command == 'dynkin':
            out = driver.dynkin(cfg, h=args.horizon)
            for conv, rep in out['dynkin'].items():
                print('{0}: gap {1:.6e} se {2:.6e}'.format(conv, rep.gap, rep.standard_error))
            if not out['within_tolerance']['consistent']:
                return EXIT_TOLERANCE
    except ConfigError as err:
        print('ERROR: {0}'.format(err))
        return EXIT_INVALID
    except (RiskStopError, ValueError, IOError) as err:
        print('ERROR: {0}'.format(err))
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
