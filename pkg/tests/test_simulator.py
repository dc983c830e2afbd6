import numpy as np
import pytest
from scipy.stats import kstest

from riskstop.distributions import DistributionSpec, UtilitySpec
from riskstop.dpsolver import DPSolver, SolverConfig
from riskstop.model import ModelParams, drift, savings, claim_sum
from riskstop.simulator import (sample_block, sample_trajectory, execute_policy, estimate_value,
                                conditional_value, McEstimate)
from riskstop.valuegrid import PolicyGrid, make_u_nodes, make_t_nodes, zero_policy, horizon_policy
from riskstop.stoputils import BLOCK_SIZE, PolicyMismatchError


def _baseline(maker, params, M=10):
    return maker(make_u_nodes(params.u_bound(), M, anchor=params.a),
                 make_t_nodes(params.t0, M), params.t0)


@pytest.fixture(scope='module')
def dp_rule():
    params = ModelParams(a=1.0, c=1.0, alpha=0.05, alpha1=0.03, beta=0.02, p=0.8, t0=1.0)
    F = DistributionSpec('exponential', rate=1.0)
    H = DistributionSpec('exponential', role='claim_size', rate=2.0)
    g1 = UtilitySpec('saturating_exp', scale=1.0)
    sol = DPSolver(params, F, H, g1, config=SolverConfig(M=20, L=20))
    gammas, policies, _, _ = sol.solve(2)
    return params, F, H, g1, sol, gammas, policies


def test_no_accepted_claims_follow_savings(make_params, F_exp, H_exp):
    pars = make_params(p=0.0)
    traj = sample_trajectory(pars, F_exp, H_exp, 11, 8)
    assert len(traj.events) == 8
    assert np.all(traj.mu == 1)
    assert all(ev.accepted == 0 for ev in traj.events)
    assert np.allclose(traj.capital_at_claims, savings(pars, traj.times), rtol=1e-12)


def test_certain_ruin_at_first_claim(make_params, F_exp):
    pars = make_params(p=1.0)
    H = DistributionSpec('deterministic', role='claim_size', point=100.0)
    traj = sample_trajectory(pars, F_exp, H, 3, 5)
    assert len(traj.events) == 1
    assert list(traj.mu) == [1, 0]
    assert traj.ruined


def test_claim_sum_identity(params, F_exp, H_exp):
    blk = sample_block(params, F_exp, H_exp, 5, 0, 6)
    disc = blk.accepted * blk.size * np.exp(params.beta1 * blk.times)
    expect = np.cumsum(disc, axis=1)
    got = claim_sum(params, blk.times, blk.capital[:, 1:])
    assert np.allclose(got, expect, rtol=1e-9, atol=1e-9)


def test_classical_capital_at_claim_epochs(make_params, F_exp, H_exp):
    pars = make_params(alpha=1e-8, alpha1=0.0, beta=0.0)
    blk = sample_block(pars, F_exp, H_exp, 7, 0, 6)
    paid = np.cumsum(blk.accepted * blk.size, axis=1)
    expect = pars.a + pars.c * blk.times - paid
    assert np.max(np.abs(blk.capital[:, 1:] - expect)) <= 1e-5


def test_end_of_period_capital_at_claim_epochs(make_params, F_exp, H_exp):
    pars = make_params(alpha1=0.0, beta=0.02)
    blk = sample_block(pars, F_exp, H_exp, 11, 0, 6)
    paid = np.cumsum(blk.accepted * blk.size * np.exp(pars.beta * blk.times), axis=1)
    expect = savings(pars, blk.times) - paid
    assert np.allclose(blk.capital[:, 1:], expect, rtol=1e-9, atol=1e-9)


def test_survival_flag_is_running_product(params, F_exp, H_exp):
    blk = sample_block(params, F_exp, H_exp, 9, 2, 6)
    expect = np.cumprod(blk.capital[:, 1:] > 0.0, axis=1)
    assert np.array_equal(blk.mu[:, 1:], expect)
    assert np.all(blk.mu[:, 0] == 1)


def test_marginal_laws(params, F_exp, H_exp):
    blk = sample_block(params, F_exp, H_exp, 21, 0, 3)
    assert kstest(blk.zeta[:, 0], 'expon').pvalue > 1e-3
    assert kstest(blk.size[:, 1], 'expon', args=(0.0, 0.5)).pvalue > 1e-3
    frac = blk.accepted.mean()
    assert abs(frac - params.p) <= 4.0 * np.sqrt(params.p * (1.0 - params.p) / blk.accepted.size)


def test_classical_first_claim_ruin(make_params, F_exp, H_exp):
    # alpha -> 0, alpha1 = beta = 0: P(X > a + c zeta) = e^{-2a} / (1 + 2c)
    pars = make_params(alpha=1e-8, alpha1=0.0, beta=0.0)
    ruined = np.concatenate([sample_block(pars, F_exp, H_exp, 7, b, 1).mu[:, 1] == 0
                             for b in range(8)])
    expect = pars.p * np.exp(-2.0 * pars.a) / (1.0 + 2.0 * pars.c)
    se = np.sqrt(expect * (1.0 - expect) / ruined.size)
    assert abs(ruined.mean() - expect) <= 4.0 * se


def test_streams_reproducible(params, F_exp, H_exp):
    one = sample_trajectory(params, F_exp, H_exp, 42, 5, path_index=1500)
    two = sample_trajectory(params, F_exp, H_exp, 42, 5, path_index=1500)
    other = sample_trajectory(params, F_exp, H_exp, 43, 5, path_index=1500)
    assert one.events == two.events
    assert np.array_equal(one.capital_at_claims, two.capital_at_claims)
    assert one.events[0].interarrival != other.events[0].interarrival
    assert one.seed == (42, 1500)


def test_more_claims_keep_the_prefix(params, F_exp, H_exp):
    short = sample_block(params, F_exp, H_exp, 8, 1, 4)
    long = sample_block(params, F_exp, H_exp, 8, 1, 9)
    assert np.array_equal(short.zeta, long.zeta[:, :4])
    assert np.array_equal(short.size, long.size[:, :4])
    assert np.array_equal(short.accepted, long.accepted[:, :4])
    assert np.array_equal(short.capital, long.capital[:, :5])


def test_sample_trajectory_needs_a_claim(params, F_exp, H_exp):
    with pytest.raises(ValueError):
        sample_trajectory(params, F_exp, H_exp, 1, 0)


def test_zero_policy_is_exact(params, F_exp, H_exp, g1):
    pol = _baseline(zero_policy, params)
    est = estimate_value(params, F_exp, H_exp, g1, [pol] * 3, 3, 3000, 1)
    assert est.mean == g1(params.a)
    assert est.standard_error == 0.0
    assert est.ruined_fraction == 0.0
    assert est.ci == (est.mean, est.mean)


def test_waiting_past_a_late_claim_stops_at_horizon(params, H_exp, g1):
    F = DistributionSpec('deterministic', point=2.0)
    pol = _baseline(horizon_policy, params)
    est, res = estimate_value(params, F, H_exp, g1, [pol], 1, 100, 4, per_path=True)
    assert np.allclose(res['tau'], params.t0, rtol=0.0, atol=1e-15)
    assert np.all(res['sigma'] == 0)
    assert est.mean == pytest.approx(g1(savings(params, params.t0)), rel=1e-12)


def test_ruined_paths_score_zero(make_params, F_exp, g1):
    pars = make_params(p=1.0)
    H = DistributionSpec('exponential', role='claim_size', rate=0.5)
    pol = _baseline(horizon_policy, pars)
    est, res = estimate_value(pars, F_exp, H, g1, [pol] * 3, 3, 4000, 2, per_path=True)
    assert np.any(res['ruined'])
    assert np.all(res['Z'][res['ruined']] == 0.0)
    assert est.ruined_fraction == pytest.approx(res['ruined'].mean())
    assert np.array_equal(res['index'], np.arange(4000))


def test_policy_count_must_match(params, F_exp, H_exp, g1):
    pol = _baseline(zero_policy, params)
    with pytest.raises(PolicyMismatchError):
        estimate_value(params, F_exp, H_exp, g1, [pol] * 2, 3, 100, 0)
    with pytest.raises(PolicyMismatchError):
        estimate_value(params, F_exp, H_exp, g1, [pol] * 2, 3, 100, 0, stationary=True)
    traj = sample_trajectory(params, F_exp, H_exp, 0, 3)
    with pytest.raises(PolicyMismatchError):
        execute_policy(traj, [pol], 3, params, g1)


def test_policy_grid_must_cover_capital(params, F_exp, H_exp, g1):
    tiny = PolicyGrid(make_u_nodes(0.5, 4), make_t_nodes(params.t0, 4), np.zeros((5, 5)), params.t0)
    with pytest.raises(PolicyMismatchError):
        estimate_value(params, F_exp, H_exp, g1, [tiny], 1, 100, 0)


def test_needs_two_paths(params, F_exp, H_exp, g1):
    pol = _baseline(zero_policy, params)
    with pytest.raises(ValueError):
        estimate_value(params, F_exp, H_exp, g1, [pol], 1, 1, 0)


def test_path_outcomes_do_not_depend_on_path_count(params, F_exp, H_exp, g1):
    pol = _baseline(horizon_policy, params)
    _, small = estimate_value(params, F_exp, H_exp, g1, [pol] * 2, 2, 1500, 6, per_path=True)
    _, large = estimate_value(params, F_exp, H_exp, g1, [pol] * 2, 2, 3000, 6, per_path=True)
    assert np.array_equal(small['Z'], large['Z'][:1500])
    assert np.array_equal(small['tau'], large['tau'][:1500])


def test_single_path_matches_batch(dp_rule):
    params, F, H, g1, sol, gammas, policies = dp_rule
    _, res = estimate_value(params, F, H, g1, policies, 2, BLOCK_SIZE + 10, 12, per_path=True)
    for idx in (0, 7, BLOCK_SIZE + 3):
        traj = sample_trajectory(params, F, H, 12, 2, path_index=idx)
        out = execute_policy(traj, policies, 2, params, g1)
        assert out.Z == pytest.approx(res['Z'][idx], rel=1e-12, abs=1e-15)
        assert out.sigma == res['sigma'][idx]
        assert out.ruined_before == bool(res['ruined'][idx])


def test_dp_value_matches_monte_carlo(dp_rule):
    params, F, H, g1, sol, gammas, policies = dp_rule
    est = estimate_value(params, F, H, g1, policies, 2, 20000, 2024)
    dp = sol.headline(gammas[-1])
    assert abs(dp - est.mean) <= 3.0 * est.standard_error + 0.02
    assert est.between_claim_sign_changes == 0


def test_dp_rule_dominates_baselines(dp_rule):
    params, F, H, g1, sol, gammas, policies = dp_rule
    est = estimate_value(params, F, H, g1, policies, 2, 20000, 99)
    for maker in (zero_policy, horizon_policy):
        pol = maker(sol.u_nodes, sol.t_nodes, params.t0)
        base = estimate_value(params, F, H, g1, [pol] * 2, 2, 20000, 99)
        assert est.mean >= base.mean - 3.0 * np.hypot(est.standard_error, base.standard_error)


def test_stationary_rule_attains_fixed_point(params, F_exp, H_exp, g1):
    sol = DPSolver(params, F_exp, H_exp, g1, config=SolverConfig(M=50, L=50))
    gamma, policy, its, resid = sol.fixed_point()
    est = estimate_value(params, F_exp, H_exp, g1, [policy], 200, 100000, 3, stationary=True)
    assert abs(est.mean - sol.headline(gamma)) <= 3.0 * est.standard_error + sol.config.grid_tolerance


def test_sign_changes_between_claims_are_counted(make_params, g1):
    pars = make_params(a=1.0, c=0.1, alpha=0.01, alpha1=1.0, beta=0.0, p=1.0, t0=5.0)
    F = DistributionSpec('exponential', rate=1.0)
    H = DistributionSpec('deterministic', role='claim_size', point=0.5)
    pol = _baseline(horizon_policy, pars)
    est = estimate_value(pars, F, H, g1, [pol] * 3, 3, 2000, 8)
    assert est.between_claim_sign_changes > 0


def test_conditional_value(dp_rule):
    params, F, H, g1, sol, gammas, policies = dp_rule
    traj = sample_trajectory(params, F, H, 31, 2)
    assert conditional_value(traj, gammas, 2, 0) == sol.headline(gammas[2])
    if not traj.ruined:
        expect = gammas[1].evaluate(traj.capital_at_claims[1], traj.times[1])
        assert conditional_value(traj, gammas, 2, 1) == pytest.approx(float(expect))
    with pytest.raises(ValueError):
        conditional_value(traj, gammas, 2, 3)


def test_conditional_value_after_ruin(make_params, F_exp, g1, dp_rule):
    gammas = dp_rule[5]
    pars = make_params(p=1.0)
    H = DistributionSpec('deterministic', role='claim_size', point=100.0)
    traj = sample_trajectory(pars, F_exp, H, 0, 2)
    assert conditional_value(traj, gammas, 2, 1) == 0.0
    assert conditional_value(traj, gammas, 2, 2) == 0.0


def test_estimate_summary():
    est = McEstimate(0.5, 0.01, 100, 0.95)
    lo, hi = est.ci
    assert hi - 0.5 == pytest.approx(1.959963984540054 * 0.01)
    assert 0.5 - lo == pytest.approx(hi - 0.5)
    out = est.to_dict()
    assert out['ci_low'] == lo and out['n_paths'] == 100


@pytest.mark.slow
def test_worker_count_does_not_change_paths(params, F_exp, H_exp, g1):
    pol = _baseline(horizon_policy, params)
    _, one = estimate_value(params, F_exp, H_exp, g1, [pol], 1, 5000, 10, per_path=True)
    _, two = estimate_value(params, F_exp, H_exp, g1, [pol], 1, 5000, 10, per_path=True, n_workers=2)
    assert np.array_equal(one['Z'], two['Z'])


def test_certain_ruin_rule_matches_scan_oracle(make_params, F_exp, g1):
    pars = make_params(p=1.0)
    H = DistributionSpec('deterministic', role='claim_size', point=100.0)
    sol = DPSolver(pars, F_exp, H, g1, config=SolverConfig(M=10, L=20))
    gammas, policies, _, _ = sol.solve(1)
    r = np.linspace(0.0, pars.t0, 20001)
    oracle = np.max(F_exp.sf(r) * g1(pars.a + drift(pars, 0.0, r, pars.a)))
    assert sol.headline(gammas[-1]) == pytest.approx(oracle, abs=1e-8)
    est = estimate_value(pars, F_exp, H, g1, policies, 1, 20000, 5)
    assert abs(est.mean - oracle) <= 3.0 * est.standard_error + 1e-3
