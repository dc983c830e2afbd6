import numpy as np
from scipy.stats import expon, uniform, gamma

from .stoputils import ConfigError, HazardUndefinedError

__all__ = ["DistributionSpec", "UtilitySpec"]

# required parameters for each law / utility kind
DISTKINDS = {
     'exponential':   ('rate',),
     'uniform':       ('lo', 'hi'),
     'deterministic': ('point',),
     'gamma':         ('shape', 'scale'),
     }

UTILKINDS = {
     'logistic':       ('scale',),
     'saturating_exp': ('scale',),
     'rational':       (),
     }


def _number(pars, key, field):
     try:
          val = pars[key]
     except KeyError:
          raise ConfigError("missing parameter '{0}'".format(key), field=field)
     if isinstance(val, bool) or not isinstance(val, (int, float, np.integer, np.floating)):
          raise ConfigError("'{0}' must be a number, got {1!r}".format(key, val), field=field + '.' + key)
     if not np.isfinite(val):
          raise ConfigError("'{0}' must be finite".format(key), field=field + '.' + key)
     return float(val)


class DistributionSpec(object):
     """
     Law of the interarrival times F or of the claim sizes H.

     Continuous kinds are backed by frozen scipy.stats distributions; the
     deterministic kind is kept as an exact point mass so that integrals
     against it become point evaluations.
     """
     def __init__(self, kind, role='interarrival', **pars):
          super(DistributionSpec, self).__init__()
          field = role
          if kind not in DISTKINDS:
               raise ConfigError("unknown kind '{0}', expected one of {1}".format(
                    kind, ', '.join(sorted(DISTKINDS))), field=field + '.kind')
          extra = sorted(set(pars.keys()) - set(DISTKINDS[kind]))
          if extra:
               raise ConfigError("unknown parameters {0} for kind '{1}'".format(', '.join(extra), kind), field=field)

          self.kind = kind
          self.role = role
          self.pars = {k: _number(pars, k, field) for k in DISTKINDS[kind]}
          self.atom = None

          if kind == 'exponential':
               if self.pars['rate'] <= 0.0:
                    raise ConfigError("rate must be > 0", field=field + '.rate')
               self.dist = expon(scale=1.0 / self.pars['rate'])
               self.support = (0.0, np.inf)
          elif kind == 'uniform':
               lo, hi = self.pars['lo'], self.pars['hi']
               if lo < 0.0 or hi <= lo:
                    raise ConfigError("need 0 <= lo < hi, got lo={0} hi={1}".format(lo, hi), field=field)
               self.dist = uniform(loc=lo, scale=hi - lo)
               self.support = (lo, hi)
          elif kind == 'gamma':
               if self.pars['shape'] <= 0.0 or self.pars['scale'] <= 0.0:
                    raise ConfigError("shape and scale must be > 0", field=field)
               self.dist = gamma(self.pars['shape'], scale=self.pars['scale'])
               self.support = (0.0, np.inf)
          else:
               if self.pars['point'] <= 0.0:
                    raise ConfigError("point must be > 0", field=field + '.point')
               self.dist = None
               self.atom = self.pars['point']
               self.support = (self.atom, self.atom)

     @classmethod
     def from_dict(cls, indict, role='interarrival'):
          if not isinstance(indict, dict) or 'kind' not in indict:
               raise ConfigError("expected an object with a 'kind' key", field=role)
          pars = {k: v for k, v in indict.items() if k != 'kind'}
          return cls(indict['kind'], role=role, **pars)

     def to_dict(self):
          out = {'kind': self.kind}
          out.update(self.pars)
          return out

     def __repr__(self):
          return 'DistributionSpec({0})'.format(
               ', '.join(['{0}'.format(self.kind)] + ['{0}={1}'.format(k, v) for k, v in self.pars.items()]))

     @property
     def is_point_mass(self):
          return self.atom is not None

     def cdf(self, x):
          x = np.asarray(x, dtype=float)
          if self.is_point_mass:
               return (x >= self.atom).astype(float)
          return self.dist.cdf(x)

     def sf(self, x):
          return 1.0 - self.cdf(x)

     def pdf(self, x):
          """Density; a point mass has none."""
          if self.is_point_mass:
               raise ValueError("deterministic law has no density")
          return self.dist.pdf(np.asarray(x, dtype=float))

     def ppf(self, q):
          q = np.asarray(q, dtype=float)
          if self.is_point_mass:
               return np.full(q.shape, self.atom)
          return self.dist.ppf(q)

     def mean(self):
          if self.is_point_mass:
               return self.atom
          return float(self.dist.mean())

     def hazard(self, y):
          """
          f(y) / (1 - F(y)).

          A point mass has zero hazard before its atom and none from the atom on.
          """
          y = np.asarray(y, dtype=float)
          sf = self.sf(y)
          if np.any(sf <= 0.0):
               raise HazardUndefinedError(
                    "survival function vanishes at age {0}".format(np.max(y[sf <= 0.0]) if y.ndim else float(y)))
          if self.is_point_mass:
               return np.zeros(y.shape)
          return self.dist.pdf(y) / sf


class UtilitySpec(object):
     """
     Bounded nondecreasing utility g1 with values in [0,1].

     logistic:        1/(1+exp(-scale u))
     saturating_exp:  1-exp(-scale u) for u >= 0, else 0
     rational:        u/(1+u) for u >= 0, else 0
     """
     sup = 1.0

     def __init__(self, kind, **pars):
          super(UtilitySpec, self).__init__()
          if kind not in UTILKINDS:
               raise ConfigError("unknown kind '{0}', expected one of {1}".format(
                    kind, ', '.join(sorted(UTILKINDS))), field='utility.kind')
          extra = sorted(set(pars.keys()) - set(UTILKINDS[kind]))
          if extra:
               raise ConfigError("unknown parameters {0} for kind '{1}'".format(', '.join(extra), kind),
                                 field='utility')
          self.kind = kind
          self.pars = {k: _number(pars, k, 'utility') for k in UTILKINDS[kind]}
          if 'scale' in self.pars and self.pars['scale'] <= 0.0:
               raise ConfigError("scale must be > 0", field='utility.scale')
          self.scale = self.pars.get('scale', 1.0)

     @classmethod
     def from_dict(cls, indict):
          if not isinstance(indict, dict) or 'kind' not in indict:
               raise ConfigError("expected an object with a 'kind' key", field='utility')
          pars = {k: v for k, v in indict.items() if k != 'kind'}
          return cls(indict['kind'], **pars)

     def to_dict(self):
          out = {'kind': self.kind}
          out.update(self.pars)
          return out

     def __repr__(self):
          return 'UtilitySpec({0}, {1})'.format(self.kind, self.pars)

     @property
     def differentiable(self):
          return self.kind == 'logistic'

     def __call__(self, u):
          u = np.asarray(u, dtype=float)
          if self.kind == 'logistic':
               out = 0.5 * (1.0 + np.tanh(0.5 * self.scale * u))
          elif self.kind == 'saturating_exp':
               out = -np.expm1(-self.scale * np.maximum(u, 0.0))
          else:
               up = np.maximum(u, 0.0)
               out = up / (1.0 + up)
          return out.item() if out.ndim == 0 else out

     def derivative(self, u):
          """g1'(u); only the logistic kind is differentiable everywhere."""
          if not self.differentiable:
               raise ValueError("utility '{0}' is not differentiable at 0".format(self.kind))
          g = np.asarray(self(u), dtype=float)
          out = self.scale * g * (1.0 - g)
          return out.item() if out.ndim == 0 else out
