# #!/usr/bin/env python
# -*- coding: utf-8 -*-
import os
import logging
import itertools
from copy import deepcopy
from datetime import datetime, timezone

import numpy as np

from .config import RunConfig, apply_overrides
from .dpsolver import DPSolver
from .simulator import estimate_value
from .diagnostics import ExtendedState, dynkin_check
from .valuegrid import zero_policy, horizon_policy
from .stoputils import RiskStopError
from . import artifacts

logger = logging.getLogger(__name__)


class RunStop(object):
     """
     Driver for the solve / simulate / compare / sweep / dynkin pipelines.

     Every pipeline takes a RunConfig, writes its artifacts to run.out and
     returns a result dictionary.
     """
     def __init__(self,**kwargs):
          super(RunStop, self).__init__()
          self.verbose = kwargs.get('verbose',True)

     def _solver(self,cfg):
          return DPSolver(
               cfg.model,cfg.interarrival,cfg.claim_size,cfg.utility,
               config=cfg.solver,n_workers=cfg.run['threads'],verbose=self.verbose)

     def _outdir(self,cfg):
          return artifacts.ensure_dir(cfg.run['out'])

     def solve(self,cfg,write=True,**kwargs):
          starttime = datetime.now()
          solver = self._solver(cfg)
          K = cfg.K
          if self.verbose:
               if K is None:
                    logger.info('... solving for the fixed point, q = F(t0) = {0:.6f}'.format(
                         solver.contraction_factor))
               else:
                    logger.info('... solving {0} stages on M={1} L={2}'.format(
                         K,cfg.solver.M,cfg.solver.L))

          gammas,policies,iterations,residual = solver.solve(K)
          headline = solver.headline(gammas[-1])

          output = {
               'config_hash':cfg.config_hash,
               'mode':cfg.solver.mode,
               'K':K,
               'fixed_point':K is None,
               'headline':headline,
               'iterations':iterations,
               'residual':residual,
               'u_max':solver.u_max,
               'grid_tolerance':cfg.solver.grid_tolerance,
               }
          if K is None:
               output['contraction_factor'] = solver.contraction_factor
               output['residual_history'] = list(solver.residuals)

          if write:
               outdir = self._outdir(cfg)
               stages = ['fixed'] if K is None else list(range(K+1))
               artifacts.write_values_csv(os.path.join(outdir,'values.csv'),gammas,policies,stages=stages)
               artifacts.write_grids(
                    os.path.join(outdir,'grids.h5'),gammas,policies,
                    config_hash=cfg.config_hash,mode=cfg.solver.mode,
                    K=-1 if K is None else K,fixed_point=K is None,t0=cfg.model.t0)
               meta = dict(output)
               meta['created'] = datetime.now(timezone.utc).isoformat()
               meta['config'] = cfg.to_document()
               artifacts.write_json(os.path.join(outdir,'metadata.json'),meta)

          if self.verbose:
               logger.info('... headline {0:.10f} | time: {1}'.format(headline,datetime.now()-starttime))

          output['gammas'] = gammas
          output['policies'] = policies
          output['solver'] = solver
          return output

     def _load_policies(self,cfg,policy_dir):
          gammas,policies,attrs = artifacts.read_grids(
               os.path.join(policy_dir,'grids.h5'),expected_hash=cfg.config_hash,g1=cfg.utility)
          return gammas,policies

     def simulate(self,cfg,policies=None,**kwargs):
          policy_dir = kwargs.get('policy_dir',None)
          zero = kwargs.get('zero_policy',False)
          per_path = kwargs.get('per_path',False)
          write = kwargs.get('write',True)

          K = cfg.K
          stationary = K is None
          nstage = cfg.run['K_max'] if stationary else K
          t0 = cfg.model.t0

          if zero:
               solver = self._solver(cfg)
               policies = [zero_policy(solver.u_nodes,solver.t_nodes,t0)]
               if not stationary:
                    policies = policies*K
          elif policies is None:
               if policy_dir is None:
                    policy_dir = cfg.run['out']
               _,policies = self._load_policies(cfg,policy_dir)

          if self.verbose:
               logger.info('... simulating {0} paths, seed {1}'.format(cfg.run['n_paths'],cfg.run['base_seed']))

          res = estimate_value(
               cfg.model,cfg.interarrival,cfg.claim_size,cfg.utility,policies,nstage,
               cfg.run['n_paths'],cfg.run['base_seed'],
               n_workers=cfg.run['threads'],confidence_level=cfg.run['confidence_level'],
               per_path=per_path,stationary=stationary,verbose=self.verbose)
          if per_path:
               est,paths = res
          else:
               est,paths = res,None

          output = est.to_dict()
          output.update({
               'config_hash':cfg.config_hash,
               'base_seed':cfg.run['base_seed'],
               'K':K,
               'fixed_point':stationary,
               'policy':'zero' if zero else 'dp',
               })
          if write:
               outdir = self._outdir(cfg)
               artifacts.write_json(os.path.join(outdir,'estimate.json'),output)
               if paths is not None:
                    artifacts.write_paths_csv(os.path.join(outdir,'paths.csv'),paths)
          output['estimate'] = est
          return output

     def compare(self,cfg,**kwargs):
          """DP headline against the Monte Carlo value of the DP rule."""
          sol = self.solve(cfg,write=kwargs.get('write',True))
          sim = self.simulate(cfg,policies=sol['policies'],write=False)
          est = sim['estimate']

          tolerance = cfg.solver.grid_tolerance
          doubling = None
          if cfg.run.get('measure_grid_tolerance',False):
               doubling = sol['solver'].doubling_check(cfg.K)
               tolerance = max(tolerance,doubling['difference'])

          diff = abs(sol['headline']-est.mean)
          bound = 3.0*est.standard_error+tolerance

          # baseline rules for the dominance check
          solver = sol['solver']
          stationary = cfg.K is None
          nstage = cfg.run['K_max'] if stationary else cfg.K
          baselines = {}
          for name,maker in (('zero',zero_policy),('horizon',horizon_policy)):
               pol = maker(solver.u_nodes,solver.t_nodes,cfg.model.t0)
               pols = [pol] if stationary else [pol]*nstage
               best = estimate_value(
                    cfg.model,cfg.interarrival,cfg.claim_size,cfg.utility,pols,nstage,
                    cfg.run['n_paths'],cfg.run['base_seed'],
                    n_workers=cfg.run['threads'],stationary=stationary)
               baselines[name] = {'mean':best.mean,'standard_error':best.standard_error}
          dominance = all(
               est.mean >= bb['mean']-3.0*np.hypot(est.standard_error,bb['standard_error'])
               for bb in baselines.values())

          report = {
               'config_hash':cfg.config_hash,
               'mode':cfg.solver.mode,
               'K':cfg.K,
               'dp_value':sol['headline'],
               'mc_mean':est.mean,
               'mc_standard_error':est.standard_error,
               'n_paths':est.n_paths,
               'base_seed':cfg.run['base_seed'],
               'difference':diff,
               'grid_tolerance':tolerance,
               'bound':bound,
               'within_tolerance':bool(diff <= bound),
               'baselines':baselines,
               'dominance':bool(dominance),
               'between_claim_sign_changes':est.between_claim_sign_changes,
               }
          if doubling is not None:
               report['doubling'] = doubling
          if kwargs.get('write',True):
               artifacts.write_json(os.path.join(self._outdir(cfg),'report.json'),report)
          if self.verbose:
               logger.info('... DP {0:.6f} | MC {1:.6f} +/- {2:.6f} | {3}'.format(
                    sol['headline'],est.mean,est.standard_error,
                    'PASS' if report['within_tolerance'] else 'FAIL'))
          return report

     def sweep(self,cfg,**kwargs):
          """
          One headline per combination of the axes in run.sweep.axes
          (dotted keys such as "model.p"); run.sweep.mc_check adds a Monte
          Carlo estimate per cell.
          """
          spec = kwargs.get('sweep',None) or cfg.run.get('sweep',None)
          if not spec or not spec.get('axes'):
               raise ValueError('sweep needs run.sweep.axes')
          axes = spec['axes']
          names = sorted(axes.keys())
          mc_check = spec.get('mc_check',False)
          base = cfg.to_document()
          base['run'].pop('sweep',None)

          rows = []
          for combo in itertools.product(*[axes[nn] for nn in names]):
               row = dict(zip(names,combo))
               doc = apply_overrides(deepcopy(base),row)
               try:
                    cell = RunConfig.from_document(doc)
                    sol = self.solve(cell,write=False)
                    row['value'] = sol['headline']
                    row['config_hash'] = cell.config_hash
                    if mc_check:
                         sim = self.simulate(cell,policies=sol['policies'],write=False)
                         row['mc_mean'] = sim['mean']
                         row['mc_standard_error'] = sim['standard_error']
                    row['error'] = ''
               except (RiskStopError,ValueError,FloatingPointError) as err:
                    logger.warning('sweep cell {0} failed: {1}'.format(row,err))
                    row['error'] = str(err)
               rows.append(row)

          fieldnames = names+['value']+(['mc_mean','mc_standard_error'] if mc_check else [])+['config_hash','error']
          if kwargs.get('write',True):
               artifacts.write_sweep_csv(os.path.join(self._outdir(cfg),'sweep.csv'),rows,fieldnames)
          return {'rows':rows,'fieldnames':fieldnames}

     def dynkin(self,cfg,**kwargs):
          spec = dict(cfg.run.get('dynkin',{}))
          if kwargs.get('h',None) is not None:
               spec['h'] = kwargs['h']
          state0 = ExtendedState(
               spec.get('t',0.0),spec.get('u',cfg.model.a),spec.get('y',0.0),spec.get('v',1))
          reports = dynkin_check(
               state0,cfg.model,cfg.interarrival,cfg.claim_size,cfg.utility,
               h=spec.get('h',None),n_paths=cfg.run['n_paths'],base_seed=cfg.run['base_seed'],
               verbose=self.verbose)
          allowance = spec.get('allowance',1e-3)
          output = {
               'config_hash':cfg.config_hash,
               'base_seed':cfg.run['base_seed'],
               'allowance':allowance,
               'reports':{kk:vv.to_dict() for kk,vv in reports.items()},
               'within_tolerance':{kk:bool(vv.within(allowance)) for kk,vv in reports.items()},
               }
          if kwargs.get('write',True):
               artifacts.write_json(os.path.join(self._outdir(cfg),'report.json'),output)
          output['dynkin'] = reports
          return output
