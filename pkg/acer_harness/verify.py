#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum

import numpy as np

from acer_harness import (acer_exception, config as experiment_config, experiment, features as feature_maps,
                          mdp as mdp_core, metrics, oracle, policy, reward)

logger = logging.getLogger(__name__)

class VerifyLevel(Enum):
    # pylint: disable=missing-class-docstring
    FAST = 'fast'
    FULL = 'full'

class Fault(Enum):
    # pylint: disable=missing-class-docstring
    PROJECTION_RADIUS = 'projection_radius'

ORACLE_PROBES = 20
ORACLE_TOLERANCE = 1e-8
GRADIENT_PROBES = 50
FD_STEP = 1e-5
GRADIENT_TOLERANCE = 1e-5
CONTRACTION_PROBES = 1000
CONTRACTION_SLACK = 1e-12
FIXED_POINT_TOLERANCE = 1e-10
TD_BOUND_PROBES = 100
TV_PROBES = 10000
TV_SLACK = 1e-12

INVARIANT_RUN_T = 256
INVARIANT_RUN_C_OMEGA = 0.05
FAULT_PROJECTION_SCALE = 2.0

SWEEP_T = [2 ** 10, 2 ** 12, 2 ** 14, 2 ** 16]
SWEEP_SEEDS = [0, 1, 2, 3, 4]
SLOPE_BAND = (-0.8, -0.25)
MIN_R2 = 0.8
DRIFT_ETA = 0.01
DRIFT_SLOPE_FLOOR = -0.15
DRIFT_RATIO = 3.0
MIN_EVALUATED_FRACTION = 0.5

def _random_point(rng, max_states, max_actions, alphas=(0.0, 0.1)):
    # pylint: disable=missing-function-docstring
    n_states = int(rng.integers(2, max_states + 1))
    n_actions = int(rng.integers(2, max_actions + 1))
    mdp = mdp_core.random_mdp(n_states, n_actions, int(rng.integers(2 ** 31)))
    theta = policy.PolicyParams(rng.standard_normal((n_states, n_actions)))
    phi = reward.RewardParams(mdp.base_reward.copy(), float(rng.choice(alphas)))
    return mdp, theta, phi

def check_oracle_equivalence():
    """ Tabular features: Phi omega* equals the exact soft values. """
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(ORACLE_PROBES):
        mdp, theta, _ = _random_point(rng, 8, 4)
        features = feature_maps.tabular_features(mdp.n_states)
        for alpha in (0.0, 0.1):
            phi = reward.RewardParams(mdp.base_reward.copy(), alpha)
            omega_star = oracle.optimal_critic(*oracle.td_matrices(mdp, features, theta, phi))
            values, _ = mdp_core.soft_values(mdp, policy.policy_matrix(theta),
                                             reward.regularized_reward_table(phi, theta))
            worst = max(worst, float(np.abs(features.matrix @ omega_star - values).max()))
    return worst <= ORACLE_TOLERANCE, {"max_abs_gap": worst, "tolerance": ORACLE_TOLERANCE}

def _objective(mdp, theta, phi):
    # pylint: disable=missing-function-docstring
    values, _ = mdp_core.soft_values(mdp, policy.policy_matrix(theta), reward.regularized_reward_table(phi, theta))
    return float(mdp.initial_dist @ values)

def check_gradient():
    """ Exact policy gradient against central finite differences of J. """
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(GRADIENT_PROBES):
        mdp, theta, phi = _random_point(rng, 6, 3)
        grad, _ = oracle.exact_policy_gradient(mdp, theta, phi)
        flat = theta.flat()
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            bump = np.zeros_like(flat)
            bump[i] = FD_STEP
            up = policy.PolicyParams.from_flat(flat + bump, mdp.n_states, mdp.n_actions)
            down = policy.PolicyParams.from_flat(flat - bump, mdp.n_states, mdp.n_actions)
            numeric[i] = (_objective(mdp, up, phi) - _objective(mdp, down, phi)) / (2 * FD_STEP)
        relative = float(np.linalg.norm(grad - numeric) / max(np.linalg.norm(numeric), 1e-12))
        worst = max(worst, relative)
    return worst <= GRADIENT_TOLERANCE, {"max_relative_error": worst, "tolerance": GRADIENT_TOLERANCE}

def check_contraction():
    """ The sampling operator is a gamma-contraction in l1 with the visitation as fixed point. """
    rng = np.random.default_rng(3)
    worst_excess = -math.inf
    worst_fixed = 0.0
    for _ in range(CONTRACTION_PROBES):
        mdp, theta, _ = _random_point(rng, 8, 4)
        probs = policy.policy_matrix(theta)
        nu1 = mdp_core.StateDistribution(rng.dirichlet(np.ones(mdp.n_states)))
        nu2 = mdp_core.StateDistribution(rng.dirichlet(np.ones(mdp.n_states)))
        moved = mdp_core.apply_sampling_operator(mdp, probs, nu1).l1(
            mdp_core.apply_sampling_operator(mdp, probs, nu2))
        worst_excess = max(worst_excess, moved - mdp.gamma * nu1.l1(nu2))
        exact = mdp_core.exact_visitation(mdp, probs)
        worst_fixed = max(worst_fixed, mdp_core.apply_sampling_operator(mdp, probs, exact).l1(exact))
    passed = worst_excess <= CONTRACTION_SLACK and worst_fixed <= FIXED_POINT_TOLERANCE
    return passed, {"max_excess": worst_excess, "max_fixed_point_gap": worst_fixed}

def check_td_error_bound(probes=TD_BOUND_PROBES):
    """ lhs <= 2 sqrt(2) epsilon with rank-deficient random features.

    Probes whose critic system is singular are skipped and counted; the check
    fails unless at least MIN_EVALUATED_FRACTION of the probes were evaluated.

    """
    rng = np.random.default_rng(4)
    failures = 0
    skipped = 0
    worst_ratio = 0.0
    for _ in range(probes):
        mdp, theta, phi = _random_point(rng, 8, 4)
        d = math.ceil(mdp.n_states / 2)
        features = feature_maps.random_projection_features(mdp.n_states, d, int(rng.integers(2 ** 31)))
        try:
            lhs, rhs, ok = oracle.td_error_bound_check(mdp, features, theta, phi)
        except acer_exception.Acer_Exception as error:
            if error.type != "Singular system":
                raise
            skipped += 1
            continue
        failures += not ok
        if rhs > 0:
            worst_ratio = max(worst_ratio, lhs / rhs)
    evaluated = probes - skipped
    if evaluated < MIN_EVALUATED_FRACTION * probes:
        logger.warning("td error bound evaluated on %d of %d probes", evaluated, probes)
    passed = failures == 0 and evaluated >= MIN_EVALUATED_FRACTION * probes
    return passed, {"failures": failures, "evaluated": evaluated, "skipped_singular": skipped,
                    "max_lhs_over_rhs": worst_ratio}

def check_tv_lipschitz():
    """ max_s ||pi_1(.|s) - pi_2(.|s)||_1 <= sqrt(2) ||theta_1 - theta_2||. """
    rng = np.random.default_rng(5)
    worst_excess = -math.inf
    for _ in range(TV_PROBES):
        shape = (int(rng.integers(1, 6)), int(rng.integers(2, 5)))
        theta1 = policy.PolicyParams(rng.standard_normal(shape) * rng.uniform(0.01, 3.0))
        theta2 = policy.PolicyParams(theta1.logits + rng.standard_normal(shape) * rng.uniform(1e-4, 1.0))
        bound = policy.SCORE_NORM_BOUND * float(np.linalg.norm(theta1.logits - theta2.logits))
        worst_excess = max(worst_excess, policy.tv_distance(theta1, theta2) - bound)
    return worst_excess <= TV_SLACK, {"max_excess": worst_excess}

def _invariant_config(projection_scale):
    # pylint: disable=missing-function-docstring
    return experiment_config.build_config({
        "mdp": {"n_states": 5, "n_actions": 3, "seed": 0},
        "critic": {"C_omega": INVARIANT_RUN_C_OMEGA},
        "reward_oracle": {"kind": "GradientBased", "c_phi": 1.0, "clip": 1.0},
        "T": INVARIANT_RUN_T,
        "track_mismatch": True,
        "projection_scale": projection_scale,
    })

def check_run_invariants(fault=None):
    """ Short projected run with a tight critic radius, every trace invariant checked. """
    scale = FAULT_PROJECTION_SCALE if fault == Fault.PROJECTION_RADIUS else 1.0
    config = _invariant_config(scale)
    theta0, phi0, C_omega = experiment.initial_parameters(config)
    trace = experiment.execute_run(config, 0, INVARIANT_RUN_T, theta0, phi0, C_omega)
    checks = metrics.trace_checks(trace)
    failed = sorted(name for name, result in checks.items() if result["violations"])
    return not failed, {"failed": failed, "checks": checks}

def _sweep(oracle_dict, T_values, seeds):
    # pylint: disable=missing-function-docstring
    config = experiment_config.build_config({
        "mdp": {"n_states": 5, "n_actions": 3, "seed": 0},
        "features": "tabular",
        "reward_oracle": oracle_dict,
        "T_sweep": T_values,
        "seeds": seeds,
    })
    theta0, phi0, C_omega = experiment.initial_parameters(config)
    _ = config.mdp.transition_cdf, config.mdp.initial_cdf
    jobs = [(seed, T) for seed in seeds for T in T_values]
    with ThreadPoolExecutor(max_workers=experiment_config.worker_count(len(jobs))) as executor:
        futures = [executor.submit(experiment.execute_run, config, seed, T, theta0, phi0, C_omega)
                   for seed, T in jobs]
    return [future.result() for future in futures]

def _rate_details(traces):
    # pylint: disable=missing-function-docstring
    report = metrics.summarize(traces, "label")
    group = report["groups"][0]
    means = {metric: [entry[metric]["mean"] for entry in group["by_T"]] for metric in ("G_T", "W_T", "F_T")}
    invariants = {}
    for trace in traces:
        for name, result in metrics.trace_checks(trace).items():
            invariants[name] = invariants.get(name, 0) + result["violations"]
    return group, means, invariants

def _in_band(fit):
    # pylint: disable=missing-function-docstring
    return fit is not None and SLOPE_BAND[0] <= fit["slope"] <= SLOPE_BAND[1] and fit["r2"] >= MIN_R2

def _decreasing(values):
    # pylint: disable=missing-function-docstring
    return all(later < earlier for earlier, later in zip(values, values[1:]))

def check_static_rate(traces):
    """ Static reward: G_T and W_T decrease with T at a slope inside the band. """
    group, means, invariants = _rate_details(traces)
    fits = group["rate_fits"]
    passed = (_decreasing(means["G_T"]) and _decreasing(means["W_T"])
              and _in_band(fits.get("G_T")) and _in_band(fits.get("W_T")))
    return passed, {"means": means, "rate_fits": fits, "band": list(SLOPE_BAND), "invariant_violations": invariants}

def check_gradient_based_rate(traces):
    """ Cap-saturating GradientBased oracle: F_T <= 4 / T^2 and G_T / W_T slopes in band. """
    group, means, invariants = _rate_details(traces)
    fits = group["rate_fits"]
    worst = max(metrics.second_half_averages(trace).F_T * trace.T ** 2 for trace in traces)
    passed = worst <= 4.0 * (1 + 1e-9) and _in_band(fits.get("G_T")) and _in_band(fits.get("W_T"))
    return passed, {"means": means, "rate_fits": fits, "max_F_T_times_T2": worst,
                    "invariant_violations": invariants}

def check_drift_degradation(traces, static_traces):
    """ Constant drift: G_T no longer decays; the ratio against the static run is reported only. """
    group, means, invariants = _rate_details(traces)
    slope = group["rate_fits"].get("G_T", {}).get("slope", math.nan)
    static_group = metrics.summarize(static_traces, "label")["groups"][0]
    ratio = means["G_T"][-1] / static_group["by_T"][-1]["G_T"]["mean"]
    return slope > DRIFT_SLOPE_FLOOR, {"G_T_slope": slope, "slope_floor": DRIFT_SLOPE_FLOOR,
                                      "G_T_ratio_vs_static": ratio, "ratio_target": DRIFT_RATIO,
                                      "means": means, "invariant_violations": invariants}

def check_sweep_invariants(*sweeps):
    """ Zero trace-invariant violations over every sweep run. """
    totals = {}
    for traces in sweeps:
        for trace in traces:
            for name, result in metrics.trace_checks(trace).items():
                totals[name] = totals.get(name, 0) + result["violations"]
    return not any(totals.values()), {"violations": totals}

def _record(results, name, check, *args):
    # pylint: disable=missing-function-docstring
    try:
        passed, details = check(*args)
    except acer_exception.Acer_Exception as error:
        passed, details = False, {"error": error.type, "message": error.message}
    logger.info("check %s: %s", name, "pass" if passed else "FAIL")
    results.append({"name": name, "passed": bool(passed), "details": details})

def verify_suite(level=VerifyLevel.FAST, fault=None, *, sweep_T=None, sweep_seeds=None):
    """ Run the property checks and report itemized results.

    "fast" runs the oracle equivalence, gradient, contraction, TD-error bound,
    TV-Lipschitz and run-invariant checks. "full" adds the static, GradientBased
    and constant-drift rate sweeps with the trace invariants over all of them.

    Args:
        level (:obj:VerifyLevel or str, optional): "fast" or "full".
        fault (:obj:Fault or str, optional): Fault to inject, e.g. "projection_radius".
        sweep_T (list, optional): T values of the sweeps.
        sweep_seeds (list, optional): Seeds of the sweeps.

    Returns:
        dict: {"level", "fault", "passed", "checks": [{"name", "passed", "details"}]}.

    """
    try:
        level = VerifyLevel(level)
    except ValueError:
        raise acer_exception.Acer_Exception({
            "errorcode": "Invalid config",
            "data": {"field": "level", "message": "level must be 'fast' or 'full'"},
        }) from None
    if fault is not None:
        try:
            fault = Fault(fault)
        except ValueError:
            raise acer_exception.Acer_Exception({
                "errorcode": "Invalid config",
                "data": {"field": "fault", "message": "unknown fault " + repr(fault)},
            }) from None

    results = []
    _record(results, "oracle_equivalence", check_oracle_equivalence)
    _record(results, "gradient_finite_difference", check_gradient)
    _record(results, "sampling_contraction", check_contraction)
    _record(results, "td_error_bound", check_td_error_bound)
    _record(results, "tv_lipschitz", check_tv_lipschitz)
    _record(results, "run_invariants", check_run_invariants, fault)

    if level == VerifyLevel.FULL:
        T_values = list(sweep_T or SWEEP_T)
        seeds = list(sweep_seeds or SWEEP_SEEDS)
        logger.info("rate sweeps over T = %s with %d seeds", T_values, len(seeds))
        try:
            static = _sweep({"kind": "Static"}, T_values, seeds)
            gradient = _sweep({"kind": "GradientBased", "c_phi": 1.0, "clip": 1.0}, T_values, seeds)
            drift = _sweep({"kind": "ConstantDrift", "params": {"eta": DRIFT_ETA}}, T_values, seeds)
        except acer_exception.Acer_Exception as error:
            logger.error("rate sweep aborted: %s", error.message)
            results.append({"name": "rate_sweeps", "passed": False,
                            "details": {"error": error.type, "message": error.message}})
        else:
            _record(results, "static_rate", check_static_rate, static)
            _record(results, "gradient_based_rate", check_gradient_based_rate, gradient)
            _record(results, "drift_degradation", check_drift_degradation, drift, static)
            _record(results, "sweep_invariants", check_sweep_invariants, static, gradient, drift)

    return {
        "level": level.value,
        "fault": fault.value if fault is not None else None,
        "passed": all(result["passed"] for result in results),
        "checks": results,
    }
