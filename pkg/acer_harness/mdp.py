#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from acer_harness import acer_exception

SUM_TOLERANCE = 1e-12
SOLVE_TOLERANCE = 1e-10

DEFAULT_REWARD_SCALE = 1.0
DEFAULT_MIN_TRANSITION_MASS = 0.05
DEFAULT_GAMMA = 0.95

@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """ Finite discounted MDP (S, A, P, r, gamma) with initial distribution rho.

    Attributes:
        transition (ndarray): P[s, a, s'], each row a distribution.
        base_reward (ndarray): r[s, a].
        initial_dist (ndarray): rho over states.
        gamma (float): Discount factor in (0, 1).

    """
    transition: np.ndarray
    base_reward: np.ndarray
    initial_dist: np.ndarray
    gamma: float

    @property
    def n_states(self):
        # pylint: disable=missing-function-docstring
        return self.transition.shape[0]

    @property
    def n_actions(self):
        # pylint: disable=missing-function-docstring
        return self.transition.shape[1]

    @cached_property
    def transition_cdf(self):
        """ Cumulative transition rows, used by the sampler. """
        return np.cumsum(self.transition, axis=2)

    @cached_property
    def initial_cdf(self):
        # pylint: disable=missing-function-docstring
        return np.cumsum(self.initial_dist)

    def to_dict(self):
        """ JSON fixture form, row-major (states then actions). """
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "gamma": self.gamma,
            "rho": self.initial_dist.tolist(),
            "transition": self.transition.tolist(),
            "base_reward": self.base_reward.tolist(),
        }

    @classmethod
    def from_dict(cls, mdp_dict):
        """ Build an MDP from its JSON fixture form.

        Args:
            mdp_dict (dict): Keys n_states, n_actions, gamma, rho, transition, base_reward.

        Returns:
            :obj:FiniteMdp: The MDP (not validated, see validate_mdp).

        """
        transition = np.asarray(mdp_dict["transition"], dtype=float)
        base_reward = np.asarray(mdp_dict["base_reward"], dtype=float)
        rho = np.asarray(mdp_dict["rho"], dtype=float)
        expected = (int(mdp_dict["n_states"]), int(mdp_dict["n_actions"]))
        if transition.shape != expected + (expected[0],) or base_reward.shape != expected or rho.shape != (expected[0],):
            raise acer_exception.Acer_Exception({
                "errorcode": "Dimension mismatch",
                "data": {"expected": expected, "received": [transition.shape, base_reward.shape, rho.shape]},
            })
        return cls(transition, base_reward, rho, float(mdp_dict["gamma"]))

@dataclass(frozen=True, eq=False)
class StateDistribution:
    # pylint: disable=missing-class-docstring
    probs: np.ndarray

    def l1(self, other):
        """ l1 distance to another distribution. """
        return float(np.abs(self.probs - other.probs).sum())

@dataclass(frozen=True)
class Transition:
    """ One sampled step (s_t, a_t, s'_t, s_{t+1}).

    Attributes:
        s (int): Current state.
        a (int): Action drawn from the policy.
        s_next (int): s' drawn from P, used in the TD error.
        s_sampler_next (int): s_{t+1} drawn from the sampling kernel.
        restarted (bool): True if s_{t+1} came from the rho restart branch.

    """
    s: int
    a: int
    s_next: int
    s_sampler_next: int
    restarted: bool = False

@dataclass
class SamplerState:
    """ Position of the sampling chain plus the generator that drives it.

    Each thread must own its SamplerState; the generator is advanced in place.
    """
    current_state: int
    rng: np.random.Generator = field(repr=False)

    @classmethod
    def from_seed(cls, mdp, seed):
        """ Start a chain at s_0 ~ rho.

        Args:
            mdp (:obj:FiniteMdp): The MDP.
            seed (int): Generator seed.

        Returns:
            :obj:SamplerState: Fresh sampler state.

        """
        rng = np.random.default_rng(seed)
        s0 = _draw(mdp.initial_cdf, rng.random(), "rho")
        return cls(s0, rng)

def _draw(cdf, u, where):
    # pylint: disable=missing-function-docstring
    if cdf[-1] <= 0.0:
        raise acer_exception.Acer_Exception({"errorcode": "Degenerate distribution", "data": {"where": where}})
    index = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(index, len(cdf) - 1)

def validate_mdp(mdp):
    """ Check the MDP invariants.

    Args:
        mdp (:obj:FiniteMdp): MDP to check.

    Returns:
        list: Violated invariants as strings, empty iff the MDP is valid.

    """
    violations = []
    transition = mdp.transition
    if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
        return ["transition must have shape [S][A][S], got " + str(transition.shape)]
    if mdp.base_reward.shape != transition.shape[:2]:
        violations.append("base_reward shape " + str(mdp.base_reward.shape) + " does not match [S][A]")
    if not np.all(np.isfinite(mdp.base_reward)):
        violations.append("base_reward has non-finite entries")
    row_sums = transition.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(row_sums - 1.0) > SUM_TOLERANCE)):
        violations.append(f"transition[{s}][{a}] sums to {row_sums[s, a]!r}")
    for s, a in zip(*np.nonzero((transition < 0).any(axis=2))):
        violations.append(f"transition[{s}][{a}] has negative entries")
    rho = mdp.initial_dist
    if rho.shape != (transition.shape[0],):
        violations.append("rho length " + str(rho.shape) + " does not match n_states")
    else:
        if abs(rho.sum() - 1.0) > SUM_TOLERANCE:
            violations.append(f"rho sums to {rho.sum()!r}")
        if (rho < 0).any():
            violations.append("rho has negative entries")
    if not 0.0 < mdp.gamma < 1.0:
        violations.append("gamma out of (0,1)")
    return violations

def policy_transition_matrix(mdp, policy_probs):
    """ Marginalize P over the policy: P_pi[s, s'] = sum_a pi(a|s) P(s'|s, a).

    Args:
        mdp (:obj:FiniteMdp): The MDP.
        policy_probs (ndarray): pi[s, a].

    Returns:
        ndarray: Row-stochastic S x S matrix.

    """
    policy_probs = np.asarray(policy_probs, dtype=float)
    if policy_probs.shape != (mdp.n_states, mdp.n_actions):
        raise acer_exception.Acer_Exception({
            "errorcode": "Dimension mismatch",
            "data": {"expected": (mdp.n_states, mdp.n_actions), "received": policy_probs.shape},
        })
    return np.einsum("sa,san->sn", policy_probs, mdp.transition)

def exact_visitation(mdp, policy_probs):
    """ Discounted visitation nu solving nu = (1 - gamma) rho + gamma P_pi^T nu.

    Args:
        mdp (:obj:FiniteMdp): The MDP.
        policy_probs (ndarray): pi[s, a].

    Returns:
        :obj:StateDistribution: The visitation distribution.

    """
    p_pi = policy_transition_matrix(mdp, policy_probs)
    system = np.eye(mdp.n_states) - mdp.gamma * p_pi.T
    rhs = (1.0 - mdp.gamma) * mdp.initial_dist
    nu = np.linalg.solve(system, rhs)
    residual = float(np.abs(system @ nu - rhs).max())
    if residual > SOLVE_TOLERANCE:
        raise acer_exception.Acer_Exception({
            "errorcode": "Singular system",
            "data": {"what": "exact_visitation", "value": residual},
        })
    return StateDistribution(nu)

def truncated_visitation(mdp, policy_probs, horizon):
    """ (1 - gamma) sum_{t <= K} gamma^t (P_pi^T)^t rho. """
    p_pi_t = policy_transition_matrix(mdp, policy_probs).T
    term = mdp.initial_dist.copy()
    total = np.zeros(mdp.n_states)
    for t in range(horizon + 1):
        total += mdp.gamma ** t * term
        term = p_pi_t @ term
    return StateDistribution((1.0 - mdp.gamma) * total)

def soft_values(mdp, policy_probs, reward_fn):
    """ Solve the (soft) Bellman equation of a fixed policy.

    Args:
        mdp (:obj:FiniteMdp): The MDP.
        policy_probs (ndarray): pi[s, a].
        reward_fn: Callable (s, a) -> float, or an [S][A] table.

    Returns:
        tuple: (V, Q) with V of length S and Q of shape [S][A].

    """
    policy_probs = np.asarray(policy_probs, dtype=float)
    if callable(reward_fn):
        table = np.array([[reward_fn(s, a) if policy_probs[s, a] > 0 else 0.0
                           for a in range(mdp.n_actions)]
                          for s in range(mdp.n_states)], dtype=float)
    else:
        table = np.where(policy_probs > 0, np.asarray(reward_fn, dtype=float), 0.0)
    if not np.all(np.isfinite(table)):
        raise acer_exception.Acer_Exception({
            "errorcode": "Non-finite value",
            "data": {"what": "soft_values reward"},
        })
    p_pi = policy_transition_matrix(mdp, policy_probs)
    r_pi = (policy_probs * table).sum(axis=1)
    system = np.eye(mdp.n_states) - mdp.gamma * p_pi
    values = np.linalg.solve(system, r_pi)
    residual = float(np.abs(system @ values - r_pi).max())
    if residual > SOLVE_TOLERANCE:
        raise acer_exception.Acer_Exception({
            "errorcode": "Singular system",
            "data": {"what": "soft_values", "value": residual},
        })
    q_values = table + mdp.gamma * mdp.transition @ values
    return values, q_values

def apply_sampling_operator(mdp, policy_probs, dist):
    """ One step of the sampling kernel on a state distribution.

    Returns gamma P_pi^T dist + (1 - gamma) rho, a gamma-contraction in l1
    whose fixed point is the discounted visitation.
    """
    p_pi = policy_transition_matrix(mdp, policy_probs)
    probs = mdp.gamma * p_pi.T @ dist.probs + (1.0 - mdp.gamma) * mdp.initial_dist
    return StateDistribution(probs)

def sample_transition(state, mdp, policy_probs):
    """ Draw (a, s', s_{t+1}) from the current chain position.

    The restart branch of the sampling kernel is an explicit Bernoulli(1 - gamma)
    draw so it can be reported on the transition.

    Args:
        state (:obj:SamplerState): Chain position and generator.
        mdp (:obj:FiniteMdp): The MDP.
        policy_probs (ndarray): Either pi[s, a] for every state, or pi(.|s) for the current state.

    Returns:
        tuple: (Transition, SamplerState).

    """
    s = state.current_state
    probs = np.asarray(policy_probs, dtype=float)
    row = probs[s] if probs.ndim == 2 else probs
    u_action, u_next, u_branch, u_sampler = state.rng.random(4)
    a = _draw(np.cumsum(row), u_action, ("policy", s))
    cdf = mdp.transition_cdf[s, a]
    s_next = _draw(cdf, u_next, ("transition", s, a))
    restarted = bool(u_branch >= mdp.gamma)
    if restarted:
        s_sampler_next = _draw(mdp.initial_cdf, u_sampler, "rho")
    else:
        s_sampler_next = _draw(cdf, u_sampler, ("transition", s, a))
    transition = Transition(s, a, s_next, s_sampler_next, restarted)
    return transition, SamplerState(s_sampler_next, state.rng)

def empirical_visitation(mdp, policy_probs, n_steps, seed):
    """ State-visit frequencies of the frozen-policy sampling chain. """
    state = SamplerState.from_seed(mdp, seed)
    counts = np.zeros(mdp.n_states)
    for _ in range(n_steps):
        counts[state.current_state] += 1
        _, state = sample_transition(state, mdp, policy_probs)
    return StateDistribution(counts / n_steps)

def random_mdp(n_states, n_actions, seed, *,
               reward_scale=DEFAULT_REWARD_SCALE,
               min_transition_mass=None,
               gamma=DEFAULT_GAMMA):
    """ Generate a random MDP with full-support transitions.

    Rows are Dirichlet(1) draws mixed with the uniform row so that every entry
    is at least min_transition_mass; min_transition_mass = 1/n_states gives
    exactly uniform rows. The default floor is default_floor(n_states).

    Args:
        n_states (int): Number of states.
        n_actions (int): Number of actions.
        seed (int): Generator seed.
        reward_scale (float, optional): Rewards are uniform in [-scale, scale].
        min_transition_mass (float, optional): Floor on every transition entry. Defaults to
            default_floor(n_states).
        gamma (float, optional): Discount factor.

    Returns:
        :obj:FiniteMdp: Generated MDP.

    """
    if n_states < 1 or n_actions < 1:
        raise acer_exception.Acer_Exception({
            "errorcode": "Dimension mismatch",
            "data": {"expected": "n_states, n_actions >= 1", "received": (n_states, n_actions)},
        })
    if min_transition_mass is None:
        min_transition_mass = default_floor(n_states)
    if min_transition_mass < 0 or min_transition_mass * n_states > 1.0 + SUM_TOLERANCE:
        raise acer_exception.Acer_Exception({
            "errorcode": "Infeasible floor",
            "data": {"floor": min_transition_mass, "n_states": n_states},
        })
    rng = np.random.default_rng(seed)
    raw = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    spare = max(0.0, 1.0 - min_transition_mass * n_states)
    transition = min_transition_mass + spare * raw
    transition /= transition.sum(axis=2, keepdims=True)
    base_reward = rng.uniform(-reward_scale, reward_scale, size=(n_states, n_actions))
    rho = np.full(n_states, 1.0 / n_states)
    return FiniteMdp(transition, base_reward, rho, float(gamma))

def default_floor(n_states):
    """ DEFAULT_MIN_TRANSITION_MASS, lowered to 1 / (2 n_states) for large state spaces. """
    return min(DEFAULT_MIN_TRANSITION_MASS, 1.0 / (2 * n_states))

def default_mdp():
    """ The 5-state, 3-action fixture used by the rate experiments. """
    return random_mdp(5, 3, 0)

def load_mdp(path):
    # pylint: disable=missing-function-docstring
    with open(path, encoding="utf-8") as file:
        return FiniteMdp.from_dict(json.load(file))

def save_mdp(mdp, path):
    # pylint: disable=missing-function-docstring
    with open(path, "w", encoding="utf-8") as file:
        json.dump(mdp.to_dict(), file, indent=2)
