#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from acer_harness import acer_exception, policy

class OracleKind(Enum):
    # pylint: disable=missing-class-docstring
    STATIC = 'Static'
    GRADIENT_BASED = 'GradientBased'
    ENTROPY_ANNEAL = 'EntropyAnneal'
    SHAPING_BLEND = 'ShapingBlend'
    CONSTANT_DRIFT = 'ConstantDrift'

@dataclass(frozen=True, eq=False)
class RewardParams:
    """ Evolving reward parameter phi: a base-reward table plus entropy coefficient.

    Attributes:
        base_weights (ndarray): Base reward r[s, a].
        alpha (float): Entropy coefficient, >= 0.

    """
    base_weights: np.ndarray
    alpha: float

    def as_vector(self):
        """ (flattened base_weights, alpha) as one vector. """
        return np.append(self.base_weights.reshape(-1), self.alpha)

    @classmethod
    def from_vector(cls, vector, n_states, n_actions):
        # pylint: disable=missing-function-docstring
        vector = np.asarray(vector, dtype=float)
        return cls(vector[:-1].reshape(n_states, n_actions).copy(), float(vector[-1]))

    def to_dict(self):
        # pylint: disable=missing-function-docstring
        return {"base_weights": self.base_weights.tolist(), "alpha": self.alpha}

    @classmethod
    def from_dict(cls, reward_dict):
        # pylint: disable=missing-function-docstring
        return cls(np.asarray(reward_dict["base_weights"], dtype=float), float(reward_dict["alpha"]))

@dataclass(frozen=True)
class RunContext:
    """ Read-only view of the run handed to the reward oracle. """
    t: int
    td_error: float = 0.0
    theta: object = None

def regularized_reward(phi, theta, s, a):
    """ r~(s, a) = base[s, a] - alpha * log pi(a|s). """
    return float(phi.base_weights[s, a] - phi.alpha * policy.log_action_probs(theta, s)[a])

def regularized_reward_table(phi, theta):
    """ r~ for every (s, a). """
    log_probs = theta.logits - logsumexp(theta.logits, axis=1, keepdims=True)
    return phi.base_weights - phi.alpha * log_probs

def expected_regularized_reward(phi, theta, s):
    """ E_{a ~ pi}[r~(s, a)] = sum_a pi(a|s) base[s, a] + alpha H(pi(.|s)). """
    probs = policy.action_probs(theta, s)
    return float(probs @ phi.base_weights[s] + phi.alpha * policy.policy_entropy(theta, s))

def reward_second_moment(phi, theta, s):
    """ E_{a ~ pi}[r~(s, a)^2]. """
    probs = policy.action_probs(theta, s)
    rewards = phi.base_weights[s] - phi.alpha * policy.log_action_probs(theta, s)
    return float(probs @ rewards ** 2)

def potential_shaping_table(mdp, potential):
    """ Potential-based shaping r(s, a) + gamma E[Phi(s')] - Phi(s).

    Args:
        mdp (:obj:FiniteMdp): The MDP whose base reward is shaped.
        potential (ndarray): Phi over states.

    Returns:
        ndarray: Shaped [S][A] table, e.g. a ShapingBlend endpoint.

    """
    potential = np.asarray(potential, dtype=float)
    return mdp.base_reward + mdp.gamma * mdp.transition @ potential - potential[:, None]

def clip_update(h, C_phi):
    """ Scale h down to norm C_phi if it is longer. """
    h = np.asarray(h, dtype=float)
    norm = float(np.linalg.norm(h))
    if norm <= C_phi:
        return h
    return h * (C_phi / norm)

@dataclass
class RewardOracle:
    """ UpdateReward rule of the run.

    Attributes:
        kind (:obj:OracleKind): Update rule.
        c_phi (float): Step-size constant, eta_t = c_phi / t.
        C_phi (float): Clip on the update direction norm.
        params (dict): Kind-specific parameters.

    Params by kind:
        GradientBased: magnitude (default 2 * C_phi), seed, include_alpha.
        EntropyAnneal: alpha_target, tau, alpha0 (defaults to the starting alpha).
        ShapingBlend: endpoint ([S][A] table); the config layer turns a
            potential into an endpoint with potential_shaping_table.
        ConstantDrift: eta (per-step norm), direction (length S*A or S*A+1) or seed.

    """
    kind: OracleKind
    c_phi: float = 0.0
    C_phi: float = 0.0
    params: dict = field(default_factory=dict)
    rng: np.random.Generator = field(default=None, repr=False)
    drift_direction: np.ndarray = field(default=None, init=False, repr=False)
    anneal_start: float = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.c_phi < 0 or self.C_phi < 0:
            raise acer_exception.Acer_Exception({
                "errorcode": "Invalid config",
                "data": {"field": "reward_oracle", "message": "c_phi and clip must be >= 0"},
            })
        if self.rng is None:
            self.rng = np.random.default_rng(self.params.get("seed", 0))

    @classmethod
    def from_dict(cls, oracle_dict):
        """ Build an oracle from {"kind", "c_phi", "clip", "params"}. """
        try:
            kind = OracleKind(oracle_dict.get("kind", "Static"))
        except ValueError:
            raise acer_exception.Acer_Exception({
                "errorcode": "Unknown oracle kind",
                "data": {"kind": oracle_dict.get("kind")},
            }) from None
        params = dict(oracle_dict.get("params", {}))
        if kind == OracleKind.CONSTANT_DRIFT and "direction" in params:
            direction = np.asarray(params["direction"], dtype=float)
            if direction.ndim != 1 or not np.all(np.isfinite(direction)) or not np.any(direction):
                raise acer_exception.Acer_Exception({
                    "errorcode": "Invalid config",
                    "data": {"field": "reward_oracle.params.direction",
                             "message": "direction must be a finite nonzero vector"},
                })
        return cls(kind,
                   float(oracle_dict.get("c_phi", 0.0)),
                   float(oracle_dict.get("clip", 0.0)),
                   params)

    def to_dict(self):
        # pylint: disable=missing-function-docstring
        return {"kind": self.kind.value, "c_phi": self.c_phi, "clip": self.C_phi, "params": self.params}

    def fresh(self, run_seed=None):
        """ Same oracle with its generator reset, for a new run.

        Args:
            run_seed (int, optional): Mixed into the oracle seed so runs draw independent updates.

        """
        rng = None
        if run_seed is not None:
            rng = np.random.default_rng([self.params.get("seed", 0), run_seed])
        return RewardOracle(self.kind, self.c_phi, self.C_phi, dict(self.params), rng)

    def step_budget(self, t):
        """ Largest displacement allowed at step t: c_phi * C_phi / t. """
        return self.c_phi * self.C_phi / t

def update_reward(oracle, phi, t, context=None):
    """ phi_{t+1} <- UpdateReward(phi_t).

    Args:
        oracle (:obj:RewardOracle): Update rule, owns its generator.
        phi (:obj:RewardParams): Current reward parameter.
        t (int): Step index >= 1.
        context (:obj:RunContext, optional): Read-only run snapshot.

    Returns:
        tuple: (RewardParams, delta_norm) with delta_norm = ||phi' - phi||_2.

    """
    # pylint: disable=unused-argument
    if t < 1:
        raise acer_exception.Acer_Exception({
            "errorcode": "Invalid config",
            "data": {"field": "t", "message": "update_reward needs t >= 1"},
        })
    n_states, n_actions = phi.base_weights.shape
    current = phi.as_vector()
    kind = oracle.kind
    if kind == OracleKind.STATIC:
        return phi, 0.0
    if kind == OracleKind.GRADIENT_BASED:
        size = current.size if oracle.params.get("include_alpha", False) else current.size - 1
        direction = oracle.rng.standard_normal(size)
        direction /= np.linalg.norm(direction)
        magnitude = float(oracle.params.get("magnitude", 2.0 * oracle.C_phi))
        h = np.zeros_like(current)
        h[:size] = magnitude * direction
        step = (oracle.c_phi / t) * clip_update(h, oracle.C_phi)
    elif kind == OracleKind.ENTROPY_ANNEAL:
        alpha_target = float(oracle.params.get("alpha_target", 0.0))
        tau = float(oracle.params.get("tau", 1000.0))
        if oracle.anneal_start is None:
            oracle.anneal_start = float(oracle.params.get("alpha0", phi.alpha))
        alpha0 = oracle.anneal_start
        scheduled = alpha_target + (alpha0 - alpha_target) * math.exp(-t / tau)
        desired = np.zeros_like(current)
        desired[-1] = scheduled - phi.alpha
        step = clip_update(desired, oracle.step_budget(t))
    elif kind == OracleKind.SHAPING_BLEND:
        desired = np.zeros_like(current)
        desired[:-1] = (_blend_endpoint(oracle, phi) - phi.base_weights).reshape(-1)
        step = clip_update(desired, oracle.step_budget(t))
    elif kind == OracleKind.CONSTANT_DRIFT:
        step = float(oracle.params.get("eta", 0.01)) * _drift_direction(oracle, current.size)
    else:
        raise acer_exception.Acer_Exception({"errorcode": "Unknown oracle kind", "data": {"kind": kind}})
    updated = current + step
    updated[-1] = max(updated[-1], 0.0)
    new_phi = RewardParams.from_vector(updated, n_states, n_actions)
    return new_phi, float(np.linalg.norm(updated - current))

def _blend_endpoint(oracle, phi):
    # pylint: disable=missing-function-docstring
    endpoint = np.asarray(oracle.params.get("endpoint", np.zeros_like(phi.base_weights)), dtype=float)
    if endpoint.shape != phi.base_weights.shape:
        raise acer_exception.Acer_Exception({
            "errorcode": "Dimension mismatch",
            "data": {"expected": phi.base_weights.shape, "received": endpoint.shape},
        })
    return endpoint

def _drift_direction(oracle, size):
    # pylint: disable=missing-function-docstring
    if oracle.drift_direction is not None:
        return oracle.drift_direction
    direction = np.zeros(size)
    if "direction" in oracle.params:
        raw = np.asarray(oracle.params["direction"], dtype=float)
        if raw.size not in (size - 1, size):
            raise acer_exception.Acer_Exception({
                "errorcode": "Dimension mismatch",
                "data": {"expected": f"{size - 1} or {size}", "received": raw.size},
            })
        direction[:raw.size] = raw
    else:
        direction[:-1] = oracle.rng.standard_normal(size - 1)
    oracle.drift_direction = direction / np.linalg.norm(direction)
    return oracle.drift_direction
