import json
import warnings

import pytest

from riskstop.model import ModelParams
from riskstop.distributions import DistributionSpec, UtilitySpec
from riskstop.dpsolver import SolverConfig
from riskstop.stoputils import ModelConsistencyWarning


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run desk-scale acceptance tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale runs, skipped without --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


REFERENCE = {
    'model': {'a': 1.0, 'c': 1.0, 'alpha': 0.05, 'alpha1': 0.03, 'beta': 0.02, 'p': 0.8, 't0': 1.0},
    'interarrival': {'kind': 'exponential', 'rate': 1.0},
    'claim_size': {'kind': 'exponential', 'rate': 2.0},
    'utility': {'kind': 'saturating_exp', 'scale': 1.0},
}


def _make_params(**kwargs):
    pars = dict(REFERENCE['model'])
    pars.update(kwargs)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', ModelConsistencyWarning)
        return ModelParams(**pars)


@pytest.fixture
def params():
    return _make_params()


@pytest.fixture
def make_params():
    return _make_params


@pytest.fixture
def F_exp():
    return DistributionSpec('exponential', rate=1.0)


@pytest.fixture
def H_exp():
    return DistributionSpec('exponential', role='claim_size', rate=2.0)


@pytest.fixture
def g1():
    return UtilitySpec('saturating_exp', scale=1.0)


@pytest.fixture
def logistic():
    return UtilitySpec('logistic', scale=1.0)


@pytest.fixture
def small():
    return SolverConfig(M=20, L=20)


@pytest.fixture
def reference_doc():
    return json.loads(json.dumps(REFERENCE))


@pytest.fixture
def write_config(tmp_path):
    def _write(doc, name='config.json'):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)
    return _write
