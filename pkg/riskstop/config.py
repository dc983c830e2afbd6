"""
Run configuration: a JSON document with sections model, interarrival,
claim_size, utility, solver and run.
"""

import json
import hashlib
import warnings
from copy import deepcopy
from dataclasses import dataclass, field

from .model import ModelParams
from .distributions import DistributionSpec, UtilitySpec
from .dpsolver import SolverConfig
from .stoputils import ConfigError, ModelConsistencyWarning

__all__ = ["RunConfig", "Violation", "load_document", "load_config", "validate_config",
           "config_hash", "canonical_json", "RUN_DEFAULTS", "HASH_EXCLUDED"]

RUN_DEFAULTS = {
    'K': 1,
    'fixed_point': False,
    'n_paths': 100000,
    'base_seed': 0,
    'out': 'riskstop_out',
    'threads': 1,
    'K_max': 200,
    'confidence_level': 0.95,
    'measure_grid_tolerance': False,
}

# knobs that change neither the value grids nor the policies
HASH_EXCLUDED = {
    'run': ('n_paths', 'base_seed', 'out', 'threads', 'K_max', 'confidence_level',
            'measure_grid_tolerance'),
    'solver': ('n_workers', 'row_chunk'),
}

SECTIONS = ('model', 'interarrival', 'claim_size', 'utility', 'solver', 'run')


def canonical_json(doc):
    return json.dumps(doc, sort_keys=True, separators=(',', ':'))


@dataclass
class Violation(object):
    field: str
    message: str
    level: str = 'error'

    def __str__(self):
        return '{0}: [{1}] {2}'.format(self.level.upper(), self.field, self.message)


@dataclass
class RunConfig(object):
    model: ModelParams
    interarrival: DistributionSpec
    claim_size: DistributionSpec
    utility: UtilitySpec
    solver: SolverConfig
    run: dict = field(default_factory=dict)

    @classmethod
    def from_document(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("top level must be an object")
        extra = sorted(set(doc.keys()) - set(SECTIONS))
        if extra:
            raise ConfigError("unknown sections {0}".format(', '.join(extra)))
        for sec in ('model', 'interarrival', 'claim_size', 'utility'):
            if sec not in doc:
                raise ConfigError("missing section", field=sec)
        run = dict(RUN_DEFAULTS)
        run.update(doc.get('run', {}))
        _check_run(run)
        return cls(ModelParams.from_dict(doc['model']),
                   DistributionSpec.from_dict(doc['interarrival'], role='interarrival'),
                   DistributionSpec.from_dict(doc['claim_size'], role='claim_size'),
                   UtilitySpec.from_dict(doc['utility']),
                   SolverConfig.from_dict(doc.get('solver', {})),
                   run)

    @property
    def K(self):
        return None if self.run['fixed_point'] else int(self.run['K'])

    def to_document(self):
        return {'model': self.model.to_dict(),
                'interarrival': self.interarrival.to_dict(),
                'claim_size': self.claim_size.to_dict(),
                'utility': self.utility.to_dict(),
                'solver': self.solver.to_dict(),
                'run': deepcopy(self.run)}

    @property
    def config_hash(self):
        return config_hash(self.to_document())


def _is_int(val):
    return isinstance(val, int) and not isinstance(val, bool)


def _check_run(run):
    if not _is_int(run['K']) or run['K'] < 0:
        raise ConfigError("must be an integer >= 0", field='run.K')
    if not isinstance(run['fixed_point'], bool):
        raise ConfigError("must be true or false", field='run.fixed_point')
    if not _is_int(run['n_paths']) or run['n_paths'] < 2:
        raise ConfigError("must be an integer >= 2", field='run.n_paths')
    if not _is_int(run['base_seed']) or not (0 <= run['base_seed'] < 2**64):
        raise ConfigError("must be an unsigned 64-bit integer", field='run.base_seed')
    if not _is_int(run['threads']) or run['threads'] < 1:
        raise ConfigError("must be an integer >= 1", field='run.threads')
    if not _is_int(run['K_max']) or run['K_max'] < 1:
        raise ConfigError("must be an integer >= 1", field='run.K_max')
    if not (0.0 < run['confidence_level'] < 1.0):
        raise ConfigError("must lie in (0,1)", field='run.confidence_level')


def config_hash(doc):
    """SHA-256 of the canonical document without the run-time knobs."""
    doc = deepcopy(doc)
    for sec, keys in HASH_EXCLUDED.items():
        for kk in keys:
            doc.get(sec, {}).pop(kk, None)
    return hashlib.sha256(canonical_json(doc).encode('utf-8')).hexdigest()


def load_document(path):
    try:
        with open(path, 'r') as ff:
            text = ff.read()
    except IOError as err:
        raise ConfigError("cannot read config file {0}: {1}".format(path, err))
    try:
        return json.loads(text)
    except ValueError as err:
        raise ConfigError("invalid JSON: {0}".format(err.msg if hasattr(err, 'msg') else err),
                          line=getattr(err, 'lineno', None))


def load_config(path, **overrides):
    """
    Read and validate a config file.

    :param overrides: dotted keys, e.g. {'run.base_seed': 7, 'solver.mode': 'as_printed'}.
    """
    doc = load_document(path)
    apply_overrides(doc, overrides)
    return RunConfig.from_document(doc)


def apply_overrides(doc, overrides):
    for key, val in overrides.items():
        if val is None:
            continue
        sec, _, name = key.partition('.')
        doc.setdefault(sec, {})[name] = val
    return doc


def validate_config(doc):
    """
    Every invariant violated by a config document.

    :returns list of Violation; entries with level 'warning' do not make the
        document invalid.
    """
    out = []
    if not isinstance(doc, dict):
        return [Violation('(root)', 'top level must be an object')]
    for extra in sorted(set(doc.keys()) - set(SECTIONS)):
        out.append(Violation(extra, 'unknown section'))

    parsed = {}
    builders = [
        ('model', lambda dd: ModelParams.from_dict(dd)),
        ('interarrival', lambda dd: DistributionSpec.from_dict(dd, role='interarrival')),
        ('claim_size', lambda dd: DistributionSpec.from_dict(dd, role='claim_size')),
        ('utility', lambda dd: UtilitySpec.from_dict(dd)),
        ('solver', lambda dd: SolverConfig.from_dict(dd)),
    ]
    for sec, build in builders:
        if sec not in doc:
            if sec != 'solver':
                out.append(Violation(sec, 'missing section'))
                continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always', ModelConsistencyWarning)
            try:
                parsed[sec] = build(doc.get(sec, {}))
            except ConfigError as err:
                out.append(Violation(err.field or sec, err.message))
            except TypeError as err:
                out.append(Violation(sec, str(err)))
        for ww in caught:
            if issubclass(ww.category, ModelConsistencyWarning):
                out.append(Violation('model.alpha1', str(ww.message), 'warning'))

    run = dict(RUN_DEFAULTS)
    run.update(doc.get('run', {}))
    try:
        _check_run(run)
    except ConfigError as err:
        out.append(Violation(err.field, err.message))

    if 'model' in parsed and 'interarrival' in parsed:
        params = parsed['model']
        F = parsed['interarrival']
        if run.get('fixed_point') is True and F.cdf(params.t0) >= 1.0 - 1e-12:
            out.append(Violation('interarrival',
                                 'NonContractive: F(t0) = 1, no fixed point iteration possible'))
        if 'solver' in parsed and parsed['solver'].u_max is not None:
            bound = params.u_bound()
            if parsed['solver'].u_max < bound * (1.0 - 1e-12):
                out.append(Violation('solver.u_max',
                                     'below the reachable capital bound {0}'.format(bound)))
    if 'utility' in parsed and 'dynkin' in run and not parsed['utility'].differentiable:
        out.append(Violation('utility.kind', 'Dynkin check needs the logistic utility', 'warning'))
    return out
