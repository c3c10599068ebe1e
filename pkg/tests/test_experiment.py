#!/usr/bin/env python3
import glob
import json
import os
import tempfile
import unittest
from datetime import datetime, timezone
from unittest import mock

import numpy as np
from numpy.testing import assert_array_equal

from acer_harness import (acer_exception, checkpoint, config as experiment_config, experiment,
                          features as feature_maps, mdp as mdp_core, policy, reward)

def experiment_dict(output_dir, **extra):
    config_dict = {
        "mdp": {"n_states": 5, "n_actions": 3, "seed": 0},
        "reward_oracle": {"kind": "Static"},
        "T_sweep": [64, 128],
        "seeds": [0, 1, 2],
        "output_dir": output_dir,
    }
    config_dict.update(extra)
    return config_dict

def read_bytes(path):
    with open(path, "rb") as file:
        return file.read()

class TestRunExperiment(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.TemporaryDirectory()
        cls.output_dir = os.path.join(cls.directory.name, "first")
        cls.status = experiment.run_experiment(experiment_config.build_config(experiment_dict(cls.output_dir)))
        with open(os.path.join(cls.output_dir, "report.json"), encoding="utf-8") as file:
            cls.report = json.load(file)

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()

    def test_artifacts(self):
        output_dir = TestRunExperiment.output_dir
        self.assertEqual(TestRunExperiment.status, experiment.EXIT_OK)
        self.assertEqual(len(glob.glob(os.path.join(output_dir, "trace_*.csv"))), 6)
        self.assertEqual(len(glob.glob(os.path.join(output_dir, "summary_*.json"))), 6)
        self.assertEqual(len(glob.glob(os.path.join(output_dir, "checkpoint_*.json"))), 6)
        for name in ("report.json", "report.csv", "report.txt"):
            self.assertTrue(os.path.isfile(os.path.join(output_dir, name)))

    def test_report(self):
        report = TestRunExperiment.report
        self.assertEqual(report["aborted"], [])
        self.assertGreater(report["C_omega"], 0.0)
        group = report["groups"][0]
        self.assertEqual(group["key"], "Static")
        self.assertEqual(group["n_runs"], 6)
        self.assertEqual(group["F_T"]["mean"], 0.0)

    def test_summary(self):
        with open(os.path.join(TestRunExperiment.output_dir, "summary_seed1_T128.json"), encoding="utf-8") as file:
            summary = json.load(file)
        self.assertEqual((summary["seed"], summary["T"]), (1, 128))
        self.assertEqual(summary["metrics"]["F_T"], 0.0)
        for name, result in summary["checks"].items():
            self.assertEqual(result["violations"], 0, name)
        self.assertEqual(len(summary["final"]["theta"]), 5)

    def test_rerun_is_byte_identical(self):
        second_dir = os.path.join(TestRunExperiment.directory.name, "second")
        with mock.patch.dict(os.environ, {experiment_config.EVOLVING_AC_THREADS: "1"}):
            experiment.run_experiment(experiment_config.build_config(experiment_dict(second_dir)))
        for name in ("trace_seed2_T128.csv", "summary_seed0_T64.json", "report.json", "report.csv"):
            self.assertEqual(read_bytes(os.path.join(TestRunExperiment.output_dir, name)),
                             read_bytes(os.path.join(second_dir, name)), name)

    def test_probe_checkpoint(self):
        path = os.path.join(TestRunExperiment.output_dir, "checkpoint_seed0_T128.json")
        first = experiment.probe(path)
        self.assertGreater(first["lambda"], 0.0)
        self.assertLessEqual(first["epsilon"], 1e-8)
        self.assertLessEqual(first["A_residual"], 1e-9)
        self.assertEqual(experiment.probe(path), first)

class TestAbortedRuns(unittest.TestCase):
    def test_aborted_runs_are_reported(self):
        error = acer_exception.Acer_Exception({"errorcode": "Non-finite value", "data": {"what": "theta", "step": 3}})
        with tempfile.TemporaryDirectory() as directory:
            config = experiment_config.build_config(experiment_dict(directory, T_sweep=[16], seeds=[0, 1]))
            with mock.patch("acer_harness.actor_critic.run_acer", side_effect=error):
                status = experiment.run_experiment(config)
            with open(os.path.join(directory, "report.json"), encoding="utf-8") as file:
                report = json.load(file)
        self.assertEqual(status, experiment.EXIT_RUN_ABORTED)
        self.assertEqual([entry["seed"] for entry in report["aborted"]], [0, 1])
        self.assertEqual(report["aborted"][0]["error"], "Non-finite value")
        self.assertEqual(report["groups"], [])

    def test_unexpected_worker_error_still_writes_the_report(self):
        with tempfile.TemporaryDirectory() as directory:
            config = experiment_config.build_config(experiment_dict(directory, T_sweep=[16], seeds=[0]))
            with mock.patch("acer_harness.actor_critic.run_acer", side_effect=np.linalg.LinAlgError("singular")):
                with self.assertLogs("acer_harness.experiment", level="ERROR"):
                    status = experiment.run_experiment(config)
            with open(os.path.join(directory, "report.json"), encoding="utf-8") as file:
                report = json.load(file)
            self.assertTrue(os.path.isfile(os.path.join(directory, "report.txt")))
        self.assertEqual(status, experiment.EXIT_RUN_ABORTED)
        self.assertEqual(report["aborted"][0]["error"], "LinAlgError")

    def test_short_run_has_no_metrics(self):
        with tempfile.TemporaryDirectory() as directory:
            config = experiment_config.build_config(experiment_dict(directory, T_sweep=[2], seeds=[0]))
            theta0, phi0, C_omega = experiment.initial_parameters(config)
            summary = experiment.run_summary(experiment.execute_run(config, 0, 2, theta0, phi0, C_omega))
        self.assertIsNone(summary["metrics"])
        self.assertIn("critic_ball", summary["checks"])

class TestCheckpoint(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        mdp = mdp_core.random_mdp(3, 2, 4)
        cls.point = checkpoint.Checkpoint(mdp, feature_maps.tabular_features(3),
                                          policy.PolicyParams(np.arange(6.0).reshape(3, 2)),
                                          reward.RewardParams(mdp.base_reward.copy(), 0.2))

    def test_save_and_load(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "checkpoint.json")
            point = checkpoint.Checkpoint(TestCheckpoint.point.mdp, TestCheckpoint.point.features,
                                          TestCheckpoint.point.theta, TestCheckpoint.point.phi)
            point.save(path)
            loaded = checkpoint.Checkpoint.load(path)
        assert_array_equal(loaded.theta.logits, TestCheckpoint.point.theta.logits)
        assert_array_equal(loaded.phi.base_weights, TestCheckpoint.point.phi.base_weights)
        self.assertEqual(loaded.phi.alpha, 0.2)
        self.assertEqual(loaded.saved_at, point.saved_at)
        self.assertIsNotNone(loaded.saved_at.tzinfo)

    def test_saved_at_is_parsed(self):
        checkpoint_dict = TestCheckpoint.point.to_dict()
        checkpoint_dict["saved-at"] = "2024-03-01T12:30:00+00:00"
        loaded = checkpoint.Checkpoint.from_dict(checkpoint_dict)
        self.assertEqual(loaded.saved_at, datetime(2024, 3, 1, 12, 30, tzinfo=timezone.utc))

    def test_missing_key(self):
        checkpoint_dict = TestCheckpoint.point.to_dict()
        del checkpoint_dict["phi"]
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            checkpoint.Checkpoint.from_dict(checkpoint_dict, "point.json")
        self.assertEqual(context.exception.type, "Malformed checkpoint")
        self.assertEqual(context.exception.data["key"], "phi")

    def test_bad_theta_shape(self):
        checkpoint_dict = TestCheckpoint.point.to_dict()
        checkpoint_dict["theta"] = [[0.0, 0.0, 0.0]]
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            checkpoint.Checkpoint.from_dict(checkpoint_dict)
        self.assertEqual(context.exception.type, "Malformed checkpoint")

    def test_feature_rows_must_have_unit_norm(self):
        checkpoint_dict = TestCheckpoint.point.to_dict()
        checkpoint_dict["features"] = (2.0 * np.eye(3)).tolist()
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            checkpoint.Checkpoint.from_dict(checkpoint_dict)
        self.assertEqual(context.exception.data["key"], "features")

    def test_bad_timestamp(self):
        checkpoint_dict = TestCheckpoint.point.to_dict()
        checkpoint_dict["saved-at"] = "yesterday"
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            checkpoint.Checkpoint.from_dict(checkpoint_dict)
        self.assertEqual(context.exception.data["key"], "saved-at")

    def test_missing_file(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            checkpoint.Checkpoint.load("/nonexistent/checkpoint.json")
        self.assertEqual(context.exception.type, "Unreadable file")
        self.assertEqual(context.exception.data["path"], "/nonexistent/checkpoint.json")

    def test_not_json(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "checkpoint.json")
            with open(path, "w", encoding="utf-8") as file:
                file.write("[1, 2")
            with self.assertRaises(acer_exception.Acer_Exception) as context:
                checkpoint.Checkpoint.load(path)
        self.assertEqual(context.exception.type, "Malformed checkpoint")

if __name__ == '__main__':
    unittest.main()
