#!/usr/bin/env python3
# pylint: disable=missing-module-docstring
import json
from datetime import datetime, timezone

import numpy as np
from dateutil.parser import isoparse

from acer_harness import acer_exception, features as feature_maps, mdp as mdp_core, policy, reward

CHECKPOINT_KEYS = ("mdp", "features", "theta", "phi")

class Checkpoint:
    """ Class to define a saved (mdp, features, theta, phi) point for oracle probes.

    Attributes:
        mdp (:obj:FiniteMdp): The MDP.
        features (:obj:FeatureMap): Critic features.
        theta (:obj:PolicyParams): Policy parameters.
        phi (:obj:RewardParams): Reward parameters.
        saved_at (datetime.datetime): Save time, or None if the file carries none.

    """
    def __init__(self, mdp, features, theta, phi, saved_at=None):
        """
        Args:
            mdp (:obj:FiniteMdp): The MDP.
            features (:obj:FeatureMap): Critic features.
            theta (:obj:PolicyParams): Policy parameters.
            phi (:obj:RewardParams): Reward parameters.
            saved_at (datetime.datetime, optional): Save time.

        """
        self.mdp = mdp
        self.features = features
        self.theta = theta
        self.phi = phi
        self.saved_at = saved_at

    def to_dict(self):
        # pylint: disable=missing-function-docstring
        checkpoint_dict = {
            "mdp": self.mdp.to_dict(),
            "features": self.features.matrix.tolist(),
            "theta": self.theta.logits.tolist(),
            "phi": self.phi.to_dict(),
        }
        if self.saved_at is not None:
            checkpoint_dict["saved-at"] = self.saved_at.isoformat()
        return checkpoint_dict

    @classmethod
    def from_dict(cls, checkpoint_dict, path="<dict>"):
        """ Build a checkpoint, naming the first missing or malformed key.

        Args:
            checkpoint_dict (dict): Checkpoint in its JSON form.
            path (str, optional): Source path, used in error messages.

        Returns:
            :obj:Checkpoint: The checkpoint.

        """
        for key in CHECKPOINT_KEYS:
            if key not in checkpoint_dict:
                raise acer_exception.Acer_Exception({
                    "errorcode": "Malformed checkpoint",
                    "data": {"path": path, "key": key},
                })
        key = "mdp"
        try:
            mdp = mdp_core.FiniteMdp.from_dict(checkpoint_dict["mdp"])
            key = "features"
            features = feature_maps.FeatureMap(np.asarray(checkpoint_dict["features"], dtype=float))
            key = "theta"
            theta = policy.PolicyParams(np.asarray(checkpoint_dict["theta"], dtype=float))
            key = "phi"
            phi = reward.RewardParams.from_dict(checkpoint_dict["phi"])
            key = "saved-at"
            savedatstring = checkpoint_dict.get("saved-at")
            saved_at = isoparse(savedatstring) if savedatstring else None
        except (KeyError, TypeError, ValueError, acer_exception.Acer_Exception) as error:
            raise acer_exception.Acer_Exception({
                "errorcode": "Malformed checkpoint",
                "data": {"path": path, "key": key},
            }) from error
        if (theta.logits.ndim != 2 or theta.logits.shape != mdp.base_reward.shape
                or phi.base_weights.shape != mdp.base_reward.shape):
            raise acer_exception.Acer_Exception({
                "errorcode": "Malformed checkpoint",
                "data": {"path": path, "key": "theta/phi shape"},
            })
        if feature_maps.validate_features(features, mdp.n_states):
            raise acer_exception.Acer_Exception({
                "errorcode": "Malformed checkpoint",
                "data": {"path": path, "key": "features"},
            })
        return cls(mdp, features, theta, phi, saved_at)

    def save(self, path):
        """ Write the checkpoint as JSON, stamping saved_at if unset.

        Args:
            path (str): Destination file.

        """
        if self.saved_at is None:
            self.saved_at = datetime.now(timezone.utc)
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.to_dict(), file, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        """ Read a checkpoint written by save.

        Args:
            path (str): Checkpoint file.

        Returns:
            :obj:Checkpoint: The checkpoint.

        """
        try:
            with open(path, encoding="utf-8") as file:
                checkpoint_dict = json.load(file)
        except OSError as error:
            raise acer_exception.Acer_Exception({
                "errorcode": "Unreadable file",
                "data": {"path": path, "message": str(error)},
            }) from error
        except json.JSONDecodeError as error:
            raise acer_exception.Acer_Exception({
                "errorcode": "Malformed checkpoint",
                "data": {"path": path, "key": "<json>"},
            }) from error
        if not isinstance(checkpoint_dict, dict):
            raise acer_exception.Acer_Exception({
                "errorcode": "Malformed checkpoint",
                "data": {"path": path, "key": "<root>"},
            })
        return cls.from_dict(checkpoint_dict, path)
