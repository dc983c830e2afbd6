"""
Writers and readers for run artifacts: values.csv, metadata.json,
grids.h5, estimate.json, paths.csv, report.json and sweep.csv.
"""

import os
import csv
import json

import numpy as np
import h5py

from .valuegrid import ValueGrid, PolicyGrid
from .stoputils import HashMismatchError, fmt17

__all__ = ["write_values_csv", "write_json", "write_grids", "read_grids",
           "write_paths_csv", "write_sweep_csv", "ensure_dir"]


def ensure_dir(path):
    if path and not os.path.isdir(path):
        os.makedirs(path)
    return path


def _cell(val):
    if isinstance(val, (float, np.floating)):
        return fmt17(val)
    return val


def write_values_csv(path, gammas, policies, stages=None):
    """
    One row per (stage, u, t) node.

    Row stage j carries gamma_j and the waiting time that attains it
    (policies[j-1]); stage 0 stops at once.
    """
    if stages is None:
        stages = list(range(len(gammas)))
    with open(path, 'w', newline='') as ff:
        writer = csv.writer(ff)
        writer.writerow(['stage', 'u', 't', 'value', 'r_star'])
        for jj, (stage, gamma) in enumerate(zip(stages, gammas)):
            if stage == 0 and len(gammas) == len(policies) + 1:
                rstar = np.zeros(gamma.shape)
            else:
                rstar = policies[jj - (len(gammas) - len(policies))].r_star
            for ii, uu in enumerate(gamma.u_nodes):
                for kk, tt in enumerate(gamma.t_nodes):
                    writer.writerow([stage, fmt17(uu), fmt17(tt),
                                     fmt17(gamma.values[ii, kk]), fmt17(rstar[ii, kk])])


def write_json(path, indict):
    with open(path, 'w') as ff:
        json.dump(indict, ff, indent=2, sort_keys=True)
        ff.write('\n')


def write_grids(path, gammas, policies, **attrs):
    """
    HDF5 bundle: groups gamma_<j> and policy_<j> with u_nodes, t_nodes and
    values / r_star; ``attrs`` (config_hash, mode, K, fixed_point, t0) go on
    the root.
    """
    with h5py.File(path, 'w') as ff:
        for kk, vv in attrs.items():
            if vv is None:
                continue
            ff.attrs[kk] = vv
        ff.attrs['n_gammas'] = len(gammas)
        ff.attrs['n_policies'] = len(policies)
        for jj, gamma in enumerate(gammas):
            grp = ff.create_group('gamma_{0}'.format(jj))
            grp.create_dataset('u_nodes', data=gamma.u_nodes)
            grp.create_dataset('t_nodes', data=gamma.t_nodes)
            grp.create_dataset('values', data=gamma.values)
            grp.attrs['exact_terminal'] = gamma.exact is not None
        for jj, pol in enumerate(policies):
            grp = ff.create_group('policy_{0}'.format(jj))
            grp.create_dataset('u_nodes', data=pol.u_nodes)
            grp.create_dataset('t_nodes', data=pol.t_nodes)
            grp.create_dataset('r_star', data=pol.r_star)


def read_grids(path, expected_hash=None, g1=None):
    """
    :returns gammas, policies, attrs
    :raises HashMismatchError: when the stored config hash differs from ``expected_hash``.
    """
    if not os.path.isfile(path):
        raise IOError("no grid bundle at {0}".format(path))
    with h5py.File(path, 'r') as ff:
        attrs = {kk: (vv.item() if hasattr(vv, 'item') else vv) for kk, vv in ff.attrs.items()}
        for kk, vv in attrs.items():
            if isinstance(vv, bytes):
                attrs[kk] = vv.decode('utf-8')
        if expected_hash is not None and attrs.get('config_hash') != expected_hash:
            raise HashMismatchError(
                "grids in {0} were built for config {1}, current config is {2}".format(
                    path, attrs.get('config_hash'), expected_hash))
        t0 = float(attrs['t0'])
        gammas = []
        for jj in range(int(attrs['n_gammas'])):
            grp = ff['gamma_{0}'.format(jj)]
            exact = g1 if (g1 is not None and bool(grp.attrs['exact_terminal'])) else None
            gammas.append(ValueGrid(grp['u_nodes'][()], grp['t_nodes'][()], grp['values'][()],
                                    t0, exact=exact))
        policies = []
        for jj in range(int(attrs['n_policies'])):
            grp = ff['policy_{0}'.format(jj)]
            policies.append(PolicyGrid(grp['u_nodes'][()], grp['t_nodes'][()], grp['r_star'][()], t0))
    return gammas, policies, attrs


def write_paths_csv(path, res):
    with open(path, 'w', newline='') as ff:
        writer = csv.writer(ff)
        writer.writerow(['path', 'sigma', 'tau', 'Z', 'ruined'])
        for ii in range(res['Z'].size):
            writer.writerow([int(res['index'][ii]), int(res['sigma'][ii]), fmt17(res['tau'][ii]),
                             fmt17(res['Z'][ii]), int(res['ruined'][ii])])


def write_sweep_csv(path, rows, fieldnames):
    with open(path, 'w', newline='') as ff:
        writer = csv.DictWriter(ff, fieldnames=fieldnames, extrasaction='ignore')
        writer.writeheader()
        for row in rows:
            writer.writerow({kk: _cell(vv) for kk, vv in row.items()})
