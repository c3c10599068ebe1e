#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from acer_harness import acer_exception

SCORE_NORM_BOUND = math.sqrt(2.0)
LOG_HESSIAN_BOUND = 1.0

@dataclass(frozen=True, eq=False)
class PolicyParams:
    """ Tabular-softmax logits theta[s, a].

    Attributes:
        logits (ndarray): Logit table of shape [S][A].

    """
    logits: np.ndarray

    @classmethod
    def zeros(cls, n_states, n_actions):
        """ Uniform policy. """
        return cls(np.zeros((n_states, n_actions)))

    @classmethod
    def from_flat(cls, vector, n_states, n_actions):
        # pylint: disable=missing-function-docstring
        return cls(np.asarray(vector, dtype=float).reshape(n_states, n_actions))

    @property
    def n_states(self):
        # pylint: disable=missing-function-docstring
        return self.logits.shape[0]

    @property
    def n_actions(self):
        # pylint: disable=missing-function-docstring
        return self.logits.shape[1]

    def flat(self):
        """ Logits as a vector of length n_states * n_actions (row-major). """
        return self.logits.reshape(-1)

def action_probs(theta, s):
    """ pi(.|s), softmax of theta[s] with max-shift. """
    return softmax(theta.logits[s])

def log_action_probs(theta, s):
    """ log pi(.|s), finite for any finite logits. """
    row = theta.logits[s]
    return row - logsumexp(row)

def policy_matrix(theta):
    """ pi[s, a] for every state. """
    return softmax(theta.logits, axis=1)

def score(theta, s, a):
    """ grad_theta log pi(a|s).

    Only block s is nonzero: entry (s, a) is 1 - pi(a|s) and entry (s, a')
    is -pi(a'|s).

    Returns:
        ndarray: Vector of length n_states * n_actions.

    """
    grad = np.zeros_like(theta.logits)
    grad[s] = -action_probs(theta, s)
    grad[s, a] += 1.0
    return grad.reshape(-1)

def policy_entropy(theta, s):
    """ H(pi(.|s)) in [0, log n_actions]. """
    probs = action_probs(theta, s)
    return float(-(probs * log_action_probs(theta, s)).sum())

def tv_distance(theta1, theta2):
    """ max_s ||pi_1(.|s) - pi_2(.|s)||_1.

    Args:
        theta1 (:obj:PolicyParams): First policy.
        theta2 (:obj:PolicyParams): Second policy.

    Returns:
        float: Largest per-state l1 distance.

    """
    if theta1.logits.shape != theta2.logits.shape:
        raise acer_exception.Acer_Exception({
            "errorcode": "Dimension mismatch",
            "data": {"expected": theta1.logits.shape, "received": theta2.logits.shape},
        })
    gap = np.abs(policy_matrix(theta1) - policy_matrix(theta2)).sum(axis=1)
    return float(gap.max())

def lipschitz_bounds():
    """ Constants (L, S) of the tabular softmax: ||score|| <= sqrt(2), ||hess log pi|| <= 1. """
    return SCORE_NORM_BOUND, LOG_HESSIAN_BOUND
