#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
from dataclasses import dataclass

import numpy as np

from acer_harness import acer_exception

NORM_TOLERANCE = 1e-12
MAX_FEATURE_DIM = 512

@dataclass(frozen=True, eq=False)
class FeatureMap:
    """ Linear critic features, row s is phi(s).

    Attributes:
        matrix (ndarray): n_states x d feature matrix with row norms <= 1.

    """
    matrix: np.ndarray

    @property
    def d(self):
        # pylint: disable=missing-function-docstring
        return self.matrix.shape[1]

    @property
    def n_states(self):
        # pylint: disable=missing-function-docstring
        return self.matrix.shape[0]

    def to_dict(self):
        # pylint: disable=missing-function-docstring
        return {"matrix": self.matrix.tolist()}

def validate_features(features, n_states=None):
    """ Check shape and the ||phi(s)|| <= 1 invariant.

    Returns:
        list: Violations, empty iff valid.

    """
    violations = []
    if features.matrix.ndim != 2:
        return ["feature matrix must be two dimensional"]
    if n_states is not None and features.n_states != n_states:
        violations.append(f"feature rows {features.n_states} != n_states {n_states}")
    if features.d > MAX_FEATURE_DIM:
        violations.append(f"feature dimension {features.d} exceeds {MAX_FEATURE_DIM}")
    norms = np.linalg.norm(features.matrix, axis=1)
    for s in np.nonzero(norms > 1.0 + NORM_TOLERANCE)[0]:
        violations.append(f"row {s} has norm {norms[s]!r} > 1")
    return violations

def tabular_features(n_states):
    # pylint: disable=missing-function-docstring
    return FeatureMap(np.eye(n_states))

def constant_features(n_states):
    # pylint: disable=missing-function-docstring
    return FeatureMap(np.ones((n_states, 1)))

def random_projection_features(n_states, d, seed):
    """ Gaussian features with every row rescaled onto the unit sphere. """
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((n_states, d))
    matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
    return FeatureMap(matrix)

def features_from_spec(spec, n_states):
    """ Build features from their config form.

    Args:
        spec: "tabular", "constant", an inline matrix, or
            {"kind": "random_projection", "d": int, "seed": int}.
        n_states (int): Number of MDP states.

    Returns:
        :obj:FeatureMap: The feature map.

    """
    if spec == "tabular":
        features = tabular_features(n_states)
    elif spec == "constant":
        features = constant_features(n_states)
    elif isinstance(spec, dict) and spec.get("kind") == "random_projection":
        features = random_projection_features(n_states, int(spec["d"]), int(spec.get("seed", 0)))
    elif isinstance(spec, list):
        features = FeatureMap(np.asarray(spec, dtype=float))
    else:
        raise acer_exception.Acer_Exception({
            "errorcode": "Invalid config",
            "data": {"field": "features", "message": "unrecognized feature spec " + repr(spec)},
        })
    violations = validate_features(features, n_states)
    if violations:
        raise acer_exception.Acer_Exception({
            "errorcode": "Invalid config",
            "data": {"field": "features", "message": "; ".join(violations)},
        })
    return features
