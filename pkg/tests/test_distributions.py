import numpy as np
import pytest

from riskstop.distributions import DistributionSpec, UtilitySpec
from riskstop.stoputils import ConfigError, HazardUndefinedError

LAWS = [
    ('exponential', {'rate': 1.5}),
    ('uniform', {'lo': 0.0, 'hi': 2.0}),
    ('deterministic', {'point': 0.7}),
    ('gamma', {'shape': 2.0, 'scale': 0.5}),
]


@pytest.mark.parametrize('kind,pars', LAWS)
def test_cdf_basics(kind, pars):
    dist = DistributionSpec(kind, **pars)
    assert dist.cdf(0.0) == 0.0
    x = np.linspace(0.0, 5.0, 201)
    cdf = dist.cdf(x)
    assert np.all(np.diff(cdf) >= 0.0)
    assert np.all((cdf >= 0.0) & (cdf <= 1.0))
    assert np.array_equal(dist.sf(x), 1.0 - cdf)


def test_point_mass_is_exact():
    dist = DistributionSpec('deterministic', point=2.0)
    assert dist.is_point_mass
    assert dist.atom == 2.0
    assert dist.cdf(1.999999) == 0.0
    assert dist.cdf(2.0) == 1.0
    assert np.all(dist.ppf(np.array([0.1, 0.9])) == 2.0)
    assert dist.mean() == 2.0
    with pytest.raises(ValueError):
        dist.pdf(1.0)


def test_hazard():
    expo = DistributionSpec('exponential', rate=1.5)
    assert np.allclose(expo.hazard(np.array([0.0, 0.4, 3.0])), 1.5)
    atom = DistributionSpec('deterministic', point=1.0)
    assert atom.hazard(0.5) == 0.0
    with pytest.raises(HazardUndefinedError):
        atom.hazard(1.0)
    unif = DistributionSpec('uniform', lo=0.0, hi=0.5)
    with pytest.raises(HazardUndefinedError):
        unif.hazard(0.5)


def test_invalid_laws():
    with pytest.raises(ConfigError):
        DistributionSpec('pareto', shape=1.0)
    with pytest.raises(ConfigError):
        DistributionSpec('uniform', lo=1.0, hi=0.5)
    with pytest.raises(ConfigError):
        DistributionSpec('exponential', rate=-1.0)
    with pytest.raises(ConfigError) as err:
        DistributionSpec.from_dict({'kind': 'gamma', 'shape': 1.0}, role='claim_size')
    assert err.value.field == 'claim_size'


def test_round_trip_dict():
    dist = DistributionSpec.from_dict({'kind': 'gamma', 'shape': 2.0, 'scale': 0.5})
    assert dist.to_dict() == {'kind': 'gamma', 'shape': 2.0, 'scale': 0.5}
    assert dist.mean() == pytest.approx(1.0)


@pytest.mark.parametrize('kind,pars', [('logistic', {'scale': 2.0}),
                                       ('saturating_exp', {'scale': 1.0}),
                                       ('rational', {})])
def test_utility_bounded_nondecreasing(kind, pars):
    g1 = UtilitySpec(kind, **pars)
    u = np.linspace(-5.0, 50.0, 1001)
    g = g1(u)
    assert np.all((g >= 0.0) & (g <= g1.sup))
    assert np.all(np.diff(g) >= 0.0)


def test_utility_values():
    assert UtilitySpec('saturating_exp', scale=1.0)(1.0) == pytest.approx(1.0 - np.exp(-1.0))
    assert UtilitySpec('saturating_exp', scale=1.0)(-1.0) == 0.0
    assert UtilitySpec('rational')(1.0) == 0.5
    assert UtilitySpec('logistic', scale=1.0)(0.0) == 0.5


def test_logistic_derivative():
    g1 = UtilitySpec('logistic', scale=1.3)
    u = np.linspace(-3.0, 3.0, 13)
    h = 1e-6
    fd = (g1(u + h) - g1(u - h)) / (2.0 * h)
    assert np.allclose(g1.derivative(u), fd, rtol=1e-6, atol=1e-9)


def test_kinked_utilities_have_no_derivative():
    for g1 in (UtilitySpec('saturating_exp', scale=1.0), UtilitySpec('rational')):
        assert not g1.differentiable
        with pytest.raises(ValueError):
            g1.derivative(1.0)
