#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh
from scipy.special import logsumexp

from acer_harness import acer_exception, mdp as mdp_core, policy, reward

CRITIC_RESIDUAL_TOLERANCE = 1e-9
MAX_CONDITION = 1e12
PROPOSITION_SLACK = 1e-10

@dataclass(frozen=True, eq=False)
class OracleSnapshot:
    """ Exact theoretical quantities at one (phi, theta).

    Attributes:
        A (ndarray): TD matrix E[phi(s)(phi(s) - gamma phi(s'))^T], positive stable.
        b (ndarray): E[r~(s, a) phi(s)].
        omega_star (ndarray): TD limiting point, A omega* = b.
        lambda_ (float): Smallest eigenvalue of (A + A^T) / 2.
        epsilon (float): nu-weighted RMS gap between phi^T omega* and the soft value.
        c_delta (float): TD-error bound for the critic radius in use.
        grad_J (ndarray): Exact policy gradient.
        J (float): Objective value.
        residual (float): max |A omega* - b|.

    """
    A: np.ndarray
    b: np.ndarray
    omega_star: np.ndarray
    lambda_: float
    epsilon: float
    c_delta: float
    grad_J: np.ndarray
    J: float
    residual: float

    def to_dict(self):
        # pylint: disable=missing-function-docstring
        return {
            "A_residual": self.residual,
            "lambda": self.lambda_,
            "epsilon": self.epsilon,
            "c_delta": self.c_delta,
            "grad_norm": float(np.linalg.norm(self.grad_J)),
            "J": self.J,
            "omega_star": self.omega_star.tolist(),
        }

@dataclass(frozen=True, eq=False)
class _ExactPolicyState:
    # pylint: disable=missing-class-docstring
    probs: np.ndarray
    log_probs: np.ndarray
    nu: np.ndarray
    p_pi: np.ndarray
    rewards: np.ndarray
    values: np.ndarray

def _exact_state(mdp, theta, phi):
    # pylint: disable=missing-function-docstring
    probs = policy.policy_matrix(theta)
    rewards = reward.regularized_reward_table(phi, theta)
    values, _ = mdp_core.soft_values(mdp, probs, rewards)
    return _ExactPolicyState(
        probs=probs,
        log_probs=theta.logits - logsumexp(theta.logits, axis=1, keepdims=True),
        nu=mdp_core.exact_visitation(mdp, probs).probs,
        p_pi=mdp_core.policy_transition_matrix(mdp, probs),
        rewards=rewards,
        values=values,
    )

def _td_system(mdp, features, exact):
    # pylint: disable=missing-function-docstring
    feature_matrix = features.matrix
    weighted = feature_matrix.T * exact.nu
    A = weighted @ (feature_matrix - mdp.gamma * exact.p_pi @ feature_matrix)
    b = weighted @ (exact.probs * exact.rewards).sum(axis=1)
    return A, b

def _value_gap(features, omega_star, exact):
    # pylint: disable=missing-function-docstring
    return features.matrix @ omega_star - exact.values

def _weighted_rms(nu, gap):
    # pylint: disable=missing-function-docstring
    return float(math.sqrt(max(float(nu @ gap ** 2), 0.0)))

def td_matrices(mdp, features, theta, phi):
    """ Exact (A, b) under the discounted visitation of pi_theta.

    A = sum_s nu(s) phi(s) (phi(s) - gamma sum_{a,s'} pi(a|s) P(s'|s,a) phi(s'))^T and
    b = sum_{s,a} nu(s) pi(a|s) r~(s, a) phi(s); no sampling involved.

    Args:
        mdp (:obj:FiniteMdp): The MDP.
        features (:obj:FeatureMap): Critic features.
        theta (:obj:PolicyParams): Policy.
        phi (:obj:RewardParams): Reward parameter.

    Returns:
        tuple: (A, b).

    """
    return _td_system(mdp, features, _exact_state(mdp, theta, phi))

def sampled_td_matrices(mdp, features, theta, phi, n_samples, seed):
    """ Monte-Carlo (A, b) along the frozen-policy sampling chain.

    Returns:
        tuple: (A_hat, b_hat).

    """
    probs = policy.policy_matrix(theta)
    rewards = reward.regularized_reward_table(phi, theta)
    feature_matrix = features.matrix
    A_hat = np.zeros((features.d, features.d))
    b_hat = np.zeros(features.d)
    state = mdp_core.SamplerState.from_seed(mdp, seed)
    for _ in range(n_samples):
        transition, state = mdp_core.sample_transition(state, mdp, probs)
        row = feature_matrix[transition.s]
        A_hat += np.outer(row, row - mdp.gamma * feature_matrix[transition.s_next])
        b_hat += rewards[transition.s, transition.a] * row
    return A_hat / n_samples, b_hat / n_samples

def optimal_critic(A, b):
    """ Solve A omega* = b.

    Raises:
        Acer_Exception: "Singular system" when A is near-singular or the residual is too large.

    """
    condition = float(np.linalg.cond(A))
    if not math.isfinite(condition) or condition > MAX_CONDITION:
        raise acer_exception.Acer_Exception({
            "errorcode": "Singular system",
            "data": {"what": "optimal_critic condition", "value": condition},
        })
    omega_star = np.linalg.solve(A, b)
    residual = float(np.abs(A @ omega_star - b).max())
    if residual > CRITIC_RESIDUAL_TOLERANCE:
        raise acer_exception.Acer_Exception({
            "errorcode": "Singular system",
            "data": {"what": "optimal_critic residual", "value": residual},
        })
    return omega_star

def exploration_lambda(A):
    """ Smallest eigenvalue of the symmetric part of A, the exploration margin lambda; the critic is only stable while it is positive. """
    return float(eigvalsh((A + A.T) / 2.0)[0])

def approximation_error(mdp, features, theta, phi):
    """ epsilon at one (phi, theta): sqrt(sum_s nu(s) (phi(s)^T omega* - V~(s))^2). """
    exact = _exact_state(mdp, theta, phi)
    omega_star = optimal_critic(*_td_system(mdp, features, exact))
    return _weighted_rms(exact.nu, _value_gap(features, omega_star, exact))

def _policy_gradient(mdp, phi, exact):
    # pylint: disable=missing-function-docstring
    probs = exact.probs
    q_base = phi.base_weights + mdp.gamma * mdp.transition @ exact.values
    weight = q_base - exact.values[:, None] - phi.alpha * (1.0 + exact.log_probs)
    # score(s, a) = e_{s,a} - pi(.|s) on block s, so the sum over a collapses per block
    weighted = probs * weight
    grad = exact.nu[:, None] * (weighted - probs * weighted.sum(axis=1, keepdims=True))
    return (grad / (1.0 - mdp.gamma)).reshape(-1), float(mdp.initial_dist @ exact.values)

def exact_policy_gradient(mdp, theta, phi):
    """ Exact grad_theta J_phi(theta) and J.

    The advantage uses Q built from the base reward, so the -alpha log pi part of
    r~ enters through the explicit entropy term
    -alpha / (1 - gamma) sum_s nu(s) sum_a pi(a|s) score(s, a) (1 + log pi(a|s)).

    Returns:
        tuple: (grad_J, J) with grad_J of length n_states * n_actions.

    """
    return _policy_gradient(mdp, phi, _exact_state(mdp, theta, phi))

def td_error_bound_check(mdp, features, theta, phi):
    """ The error-of-TD-errors bound: lhs <= 2 sqrt(2) epsilon.

    Returns:
        tuple: (lhs, rhs, ok).

    """
    exact = _exact_state(mdp, theta, phi)
    omega_star = optimal_critic(*_td_system(mdp, features, exact))
    gap = _value_gap(features, omega_star, exact)
    # (gamma gap(s') - gap(s))^2 for every (s, s')
    diff = mdp.gamma * gap[None, :] - gap[:, None]
    lhs = float(math.sqrt(max(float(exact.nu @ (exact.p_pi * diff ** 2).sum(axis=1)), 0.0)))
    rhs = 2.0 * math.sqrt(2.0) * _weighted_rms(exact.nu, gap)
    return lhs, rhs, lhs <= rhs + PROPOSITION_SLACK

def c_delta_bound(mdp, phi_max_abs_reward, alpha_max, C_omega):
    """ C + 2 C_omega with C = max|base| + alpha log |A|. """
    expected_bound = phi_max_abs_reward + alpha_max * math.log(mdp.n_actions)
    return expected_bound + 2.0 * C_omega

def snapshot(mdp, features, theta, phi, C_omega=0.0):
    """ Assemble every oracle quantity at (phi, theta).

    Args:
        mdp (:obj:FiniteMdp): The MDP.
        features (:obj:FeatureMap): Critic features.
        theta (:obj:PolicyParams): Policy.
        phi (:obj:RewardParams): Reward parameter.
        C_omega (float, optional): Critic radius used for c_delta.

    Returns:
        :obj:OracleSnapshot: The snapshot.

    """
    exact = _exact_state(mdp, theta, phi)
    A, b = _td_system(mdp, features, exact)
    omega_star = optimal_critic(A, b)
    grad_J, J = _policy_gradient(mdp, phi, exact)
    return OracleSnapshot(
        A=A,
        b=b,
        omega_star=omega_star,
        lambda_=exploration_lambda(A),
        epsilon=_weighted_rms(exact.nu, _value_gap(features, omega_star, exact)),
        c_delta=c_delta_bound(mdp, float(np.abs(phi.base_weights).max()), phi.alpha, C_omega),
        grad_J=grad_J,
        J=J,
        residual=float(np.abs(A @ omega_star - b).max()),
    )

def mismatch_bound(gamma, initial_gap, nu_shifts):
    """ Recursive bound on ||nu^_t - nu_t||_1 given the per-step shifts ||nu_t - nu_{t+1}||_1.

    b_0 = initial_gap, b_{t+1} = gamma b_t + shift_t. With no shifts this is
    gamma^t * initial_gap, the frozen-policy rate.

    Returns:
        ndarray: b_0 .. b_T.

    """
    bounds = np.empty(len(nu_shifts) + 1)
    bounds[0] = initial_gap
    for t, shift in enumerate(nu_shifts):
        bounds[t + 1] = gamma * bounds[t] + shift
    return bounds
