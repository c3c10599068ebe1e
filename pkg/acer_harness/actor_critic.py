#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import logging
import math
from dataclasses import dataclass

import numpy as np

from acer_harness import acer_exception, mdp as mdp_core, oracle, policy, reward, trace as run_trace

logger = logging.getLogger(__name__)

BALL_TOLERANCE = 1e-12
DEFAULT_LOGIT_LIMIT = 50.0
DEFAULT_SNAPSHOTS = 512
AUTO_RADIUS_SAFETY = 2.0

@dataclass(frozen=True, eq=False)
class CriticParams:
    """ Linear critic weights omega kept inside the ball of radius C_omega.

    Attributes:
        weights (ndarray): omega, length d.
        radius (float): C_omega.

    """
    weights: np.ndarray
    radius: float

    @classmethod
    def zeros(cls, d, radius):
        # pylint: disable=missing-function-docstring
        return cls(np.zeros(d), float(radius))

@dataclass(frozen=True)
class StepSchedule:
    """ eta_t^theta = c_theta / sqrt(t + t_offset - 1), eta_t^omega likewise.

    Attributes:
        c_theta (float): Actor constant.
        c_omega (float): Critic constant.
        t_offset (int): Schedule shift, >= 1.

    """
    c_theta: float = 0.05
    c_omega: float = 0.5
    t_offset: int = 1

def td_error(phi, theta, omega, features, tr, gamma):
    """ delta = r~(s, a) + (gamma phi(s') - phi(s))^T omega.

    Args:
        phi (:obj:RewardParams): Reward parameter.
        theta (:obj:PolicyParams): Policy.
        omega (:obj:CriticParams): Critic.
        features (:obj:FeatureMap): Critic features.
        tr (:obj:Transition): Sampled transition; s_next is the s' of the TD error.
        gamma (float): Discount factor.

    Returns:
        float: The TD error.

    """
    matrix = features.matrix
    bootstrap = (gamma * matrix[tr.s_next] - matrix[tr.s]) @ omega.weights
    return reward.regularized_reward(phi, theta, tr.s, tr.a) + float(bootstrap)

def actor_step(theta, delta, score_vec, eta_theta):
    """ theta + eta * delta * score. """
    if not math.isfinite(delta):
        raise acer_exception.Acer_Exception({
            "errorcode": "Non-finite value",
            "data": {"what": "td_error"},
        })
    flat = theta.flat() + eta_theta * delta * np.asarray(score_vec)
    return policy.PolicyParams.from_flat(flat, theta.n_states, theta.n_actions)

def project_to_ball(vector, radius):
    """ Euclidean projection onto {||x|| <= radius}. """
    norm = float(np.linalg.norm(vector))
    if norm <= radius:
        return vector
    return vector * (radius / norm)

def critic_step(omega, delta, feature_row, eta_omega, C_omega):
    """ Proj_{C_omega}(omega + eta * delta * phi(s)).

    Returns:
        :obj:CriticParams: Updated critic with radius C_omega.

    """
    moved = omega.weights + eta_omega * delta * np.asarray(feature_row)
    return CriticParams(project_to_ball(moved, C_omega), float(C_omega))

def step_sizes(t, sched):
    """ (eta_theta, eta_omega) at step t >= 1. """
    root = math.sqrt(t + sched.t_offset - 1)
    return sched.c_theta / root, sched.c_omega / root

def default_cadence(T):
    """ Snapshot stride giving about DEFAULT_SNAPSHOTS snapshots per run. """
    return max(1, math.ceil(T / DEFAULT_SNAPSHOTS))

def auto_critic_radius(mdp, features, theta, phi):
    """ 2 * max|r~| / lambda at the initial parameters, an upper estimate of ||omega*||.

    Raises:
        Acer_Exception: "Invalid config" if lambda <= 0 at the initial policy.

    """
    A, _ = oracle.td_matrices(mdp, features, theta, phi)
    margin = oracle.exploration_lambda(A)
    if margin <= 0:
        raise acer_exception.Acer_Exception({
            "errorcode": "Invalid config",
            "data": {"field": "critic.C_omega", "message": f"auto radius needs lambda > 0, got {margin!r}"},
        })
    max_reward = float(np.abs(reward.regularized_reward_table(phi, theta)).max())
    return AUTO_RADIUS_SAFETY * max_reward / margin

def td_monitor_bound(mdp, phi, theta, s, a, C_omega):
    """ Pointwise bound on |delta|: c_delta_bound plus the excess of -log pi(a|s) over log|A|. """
    base = oracle.c_delta_bound(mdp, float(np.abs(phi.base_weights).max()), phi.alpha, C_omega)
    excess = -policy.log_action_probs(theta, s)[a] - math.log(mdp.n_actions)
    return base + phi.alpha * max(0.0, float(excess))

def _check_finite(step, **arrays):
    # pylint: disable=missing-function-docstring
    for name, values in arrays.items():
        if not np.all(np.isfinite(values)):
            logger.error("non-finite %s at step %d", name, step)
            raise acer_exception.Acer_Exception({
                "errorcode": "Non-finite value",
                "data": {"what": name, "step": step},
            })

def run_acer(mdp, features, theta0, omega0, phi0, reward_oracle, sched, T, seed,
             oracle_cadence=None, track_mismatch=False, *,
             dense_window=False, projection_scale=1.0, logit_limit=DEFAULT_LOGIT_LIMIT,
             label=""):
    """ Run Actor-Critic with Evolving Reward for T steps.

    Each step samples (a_t, s'_t, s_{t+1}), computes the TD error, takes the actor
    step, the projected critic step and the reward update. Oracle snapshots are
    attached every oracle_cadence steps (every step of [T/2, T) when
    dense_window is set). A nonpositive exploration margin and large logits are flagged,
    not fatal.

    Args:
        mdp (:obj:FiniteMdp): The MDP.
        features (:obj:FeatureMap): Critic features.
        theta0 (:obj:PolicyParams): Initial policy.
        omega0 (:obj:CriticParams): Initial critic; its radius is C_omega.
        phi0 (:obj:RewardParams): Initial reward parameter.
        reward_oracle (:obj:RewardOracle): UpdateReward rule, advanced in place.
        sched (:obj:StepSchedule): Step-size schedule.
        T (int): Number of steps, >= 2.
        seed (int): Sampler seed.
        oracle_cadence (int, optional): Snapshot stride, default ceil(T / 512).
        track_mismatch (bool, optional): Propagate the exact sampling distribution.
        dense_window (bool, optional): Snapshot every step of the second half.
        projection_scale (float, optional): Fault-injection hook, scales the projection radius.
        logit_limit (float, optional): Flag when any |logit| exceeds this.
        label (str, optional): Group label carried on the trace.

    Returns:
        :obj:RunTrace: The trace.

    Raises:
        Acer_Exception: "Non-finite value" with the step index if a parameter blows up.

    """
    if T < 2:
        raise acer_exception.Acer_Exception({
            "errorcode": "Invalid config",
            "data": {"field": "T", "message": "T must be >= 2"},
        })
    cadence = default_cadence(T) if oracle_cadence is None else int(oracle_cadence)
    if cadence < 1:
        raise acer_exception.Acer_Exception({
            "errorcode": "Invalid config",
            "data": {"field": "oracle_cadence", "message": "oracle_cadence must be >= 1"},
        })
    C_omega = omega0.radius
    trace = run_trace.RunTrace.empty(
        T, mdp.gamma, seed=seed, label=label, oracle_kind=reward_oracle.kind.value,
        c_phi=reward_oracle.c_phi, C_phi=reward_oracle.C_phi, C_omega=C_omega,
        stride=cadence, track_mismatch=track_mismatch)
    series = trace.series
    theta, omega, phi = theta0, omega0, phi0
    state = mdp_core.SamplerState.from_seed(mdp, seed)
    if track_mismatch:
        nu_hat = mdp_core.StateDistribution(mdp.initial_dist.copy())
        nu_now = mdp_core.exact_visitation(mdp, policy.policy_matrix(theta))

    _check_finite(0, theta=theta.logits, omega=omega.weights, phi=phi.as_vector())
    for t in range(T):
        if t % cadence == 0 or (dense_window and t >= T // 2):
            snap = oracle.snapshot(mdp, features, theta, phi, C_omega)
            series["grad_norm_sq"][t] = float(snap.grad_J @ snap.grad_J)
            gap = omega.weights - snap.omega_star
            series["critic_err_sq"][t] = float(gap @ gap)
            series["lambda"][t] = snap.lambda_
            series["epsilon"][t] = snap.epsilon
            series["J"][t] = snap.J
            if snap.lambda_ <= 0:
                logger.warning("exploration margin lost at step %d: lambda = %g", t, snap.lambda_)
                trace.flag("lambda_nonpositive", t, snap.lambda_)

        tr, state = mdp_core.sample_transition(state, mdp, policy.action_probs(theta, state.current_state))
        delta = td_error(phi, theta, omega, features, tr, mdp.gamma)
        _check_finite(t, td_error=delta)
        bound = td_monitor_bound(mdp, phi, theta, tr.s, tr.a, C_omega)
        if abs(delta) > bound:
            trace.flag("td_bound", t, delta)

        eta_theta, eta_omega = step_sizes(t + 1, sched)
        new_theta = actor_step(theta, delta, policy.score(theta, tr.s, tr.a), eta_theta)
        new_omega = critic_step(omega, delta, features.matrix[tr.s], eta_omega, C_omega * projection_scale)
        context = reward.RunContext(t=t, td_error=delta, theta=theta)
        new_phi, delta_norm = reward.update_reward(reward_oracle, phi, t + 1, context)
        _check_finite(t, theta=new_theta.logits, omega=new_omega.weights, phi=new_phi.as_vector())

        omega_norm = float(np.linalg.norm(new_omega.weights))
        if omega_norm > C_omega + BALL_TOLERANCE:
            trace.flag("critic_ball", t, omega_norm)
        if np.abs(new_theta.logits).max() > logit_limit:
            trace.flag("logit_magnitude", t, float(np.abs(new_theta.logits).max()))

        series["s"][t] = tr.s
        series["a"][t] = tr.a
        series["s_next"][t] = tr.s_next
        series["restarted"][t] = float(tr.restarted)
        series["td_error"][t] = delta
        series["td_bound"][t] = bound
        series["theta_step"][t] = float(np.linalg.norm(new_theta.logits - theta.logits))
        series["delta_phi_sq"][t] = delta_norm ** 2
        series["omega_norm"][t] = omega_norm

        if track_mismatch:
            series["mismatch_l1"][t] = nu_hat.l1(nu_now)
            nu_hat = mdp_core.apply_sampling_operator(mdp, policy.policy_matrix(theta), nu_hat)
            nu_next = mdp_core.exact_visitation(mdp, policy.policy_matrix(new_theta))
            series["nu_shift_l1"][t] = nu_now.l1(nu_next)
            nu_now = nu_next

        theta, omega, phi = new_theta, new_omega, new_phi

    trace.final = {
        "theta": theta.logits.tolist(),
        "omega": omega.weights.tolist(),
        "phi": phi.to_dict(),
    }
    return trace
