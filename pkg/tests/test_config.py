#!/usr/bin/env python3
import json
import os
import tempfile
import unittest
from unittest import mock

from numpy.testing import assert_allclose

from acer_harness import acer_exception, config as experiment_config, mdp as mdp_core, reward

MINIMAL = {"mdp": {"n_states": 4, "n_actions": 2, "seed": 1}, "T": 64}

class TestBuildConfig(unittest.TestCase):
    def test_defaults(self):
        config = experiment_config.build_config(MINIMAL)
        self.assertEqual(config.features.d, 4)
        self.assertEqual(config.reward_oracle.kind, reward.OracleKind.STATIC)
        self.assertEqual((config.schedule.c_theta, config.schedule.c_omega, config.schedule.t_offset), (0.05, 0.5, 1))
        self.assertEqual(config.C_omega, 'auto')
        self.assertIsNone(config.cadence)
        self.assertEqual(config.T_values, [64])
        self.assertEqual(config.seeds, [0])
        self.assertEqual(config.label, "Static")

    def test_ratio_cap(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config(dict(MINIMAL, schedule={"c_theta": 1.0, "c_omega": 1.0}))
        self.assertEqual(context.exception.type, "Invalid config")
        self.assertEqual(context.exception.data["field"], "schedule.ratio")

    def test_actor_without_critic_is_rejected(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config(dict(MINIMAL, schedule={"c_theta": 0.01, "c_omega": 0.0}))
        self.assertEqual(context.exception.data["field"], "schedule.ratio")

    def test_frozen_schedule_is_allowed(self):
        config = experiment_config.build_config(dict(MINIMAL, schedule={"c_theta": 0.0, "c_omega": 0.0}))
        self.assertEqual(config.schedule.c_omega, 0.0)

    def test_t_offset(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config(dict(MINIMAL, schedule={"t_offset": 0}))
        self.assertEqual(context.exception.data["field"], "schedule.t_offset")

    def test_inline_mdp_with_gamma_one(self):
        inline = mdp_core.random_mdp(3, 2, 0).to_dict()
        inline["gamma"] = 1.0
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config({"mdp": inline, "T": 8})
        self.assertEqual(context.exception.type, "Invalid mdp")
        self.assertIn("gamma out of (0,1)", context.exception.data["violations"])

    def test_inline_mdp(self):
        inline = mdp_core.random_mdp(3, 2, 0).to_dict()
        config = experiment_config.build_config({"mdp": inline, "T": 8})
        assert_allclose(config.mdp.transition, inline["transition"])

    def test_mdp_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "mdp.json")
            mdp_core.save_mdp(mdp_core.random_mdp(6, 2, 3), path)
            config = experiment_config.build_config({"mdp": {"path": path}, "T": 8})
        self.assertEqual(config.mdp.n_states, 6)

    def test_missing_mdp_file(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config({"mdp": {"path": "/nonexistent/mdp.json"}, "T": 8})
        self.assertEqual(context.exception.data["field"], "mdp")

    def test_too_many_states(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config({"mdp": {"n_states": 600, "n_actions": 2, "min_transition_mass": 0.0},
                                            "T": 8})
        self.assertEqual(context.exception.data["field"], "mdp.n_states")

    def test_large_generated_mdp_uses_a_feasible_floor(self):
        for n_states in (30, experiment_config.MAX_STATES):
            config = experiment_config.build_config({"mdp": {"n_states": n_states, "n_actions": 2, "seed": 0},
                                                     "T": 8})
            self.assertEqual(config.mdp.n_states, n_states)
            self.assertGreaterEqual(config.mdp.transition.min(), 1.0 / (2 * n_states) - 1e-12)

    def test_infeasible_floor_names_the_field(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config({"mdp": {"n_states": 30, "n_actions": 2, "min_transition_mass": 0.05},
                                            "T": 8})
        self.assertEqual(context.exception.type, "Invalid config")
        self.assertEqual(context.exception.data["field"], "mdp.min_transition_mass")

    def test_bad_fields(self):
        cases = {
            "critic.C_omega": {"critic": {"C_omega": -1.0}},
            "alpha0": {"alpha0": -0.1},
            "oracle_cadence": {"oracle_cadence": 0},
            "seeds": {"seeds": []},
            "projection_scale": {"projection_scale": 0.0},
            "T": {"T": 1},
        }
        for field_name, patch in cases.items():
            with self.assertRaises(acer_exception.Acer_Exception) as context:
                experiment_config.build_config(dict(MINIMAL, **patch))
            self.assertEqual(context.exception.data["field"], field_name)

    def test_missing_step_count(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config({"mdp": MINIMAL["mdp"]})
        self.assertEqual(context.exception.data["field"], "T")

    def test_sweep(self):
        config = experiment_config.build_config(dict(MINIMAL, T_sweep=[64, 256, 1024], seeds=[0, 1]))
        self.assertEqual(config.T_values, [64, 256, 1024])
        self.assertEqual(config.seeds, [0, 1])

    def test_uneven_step_count_warns(self):
        with self.assertLogs('acer_harness.config', level='WARNING'):
            experiment_config.build_config(dict(MINIMAL, T=100))

    def test_unknown_oracle(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config(dict(MINIMAL, reward_oracle={"kind": "Adversarial"}))
        self.assertEqual(context.exception.type, "Unknown oracle kind")

    def test_shaping_potential_becomes_an_endpoint(self):
        config = experiment_config.build_config(dict(MINIMAL, reward_oracle={
            "kind": "ShapingBlend", "c_phi": 1.0, "clip": 1.0, "params": {"potential": [0.0, 0.0, 0.0, 0.0]}}))
        assert_allclose(config.reward_oracle.params["endpoint"], config.mdp.base_reward)
        self.assertNotIn("potential", config.reward_oracle.params)

    def test_drift_direction_length(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config(dict(MINIMAL, reward_oracle={
                "kind": "ConstantDrift", "params": {"direction": [1.0, 0.0]}}))
        self.assertEqual(context.exception.data["field"], "reward_oracle.params.direction")

    def test_shaping_potential_length(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            experiment_config.build_config(dict(MINIMAL, reward_oracle={
                "kind": "ShapingBlend", "params": {"potential": [0.0]}}))
        self.assertEqual(context.exception.data["field"], "reward_oracle.params.potential")

    def test_fixed_radius_and_cadence(self):
        config = experiment_config.build_config(dict(MINIMAL, critic={"C_omega": 3}, oracle_cadence=4, label="x"))
        self.assertEqual(config.C_omega, 3.0)
        self.assertEqual(config.cadence, 4)
        self.assertEqual(config.label, "x")

class TestOverrides(unittest.TestCase):
    def test_parse_override(self):
        self.assertEqual(experiment_config.parse_override("--schedule.c_theta=0.02"), ("schedule.c_theta", 0.02))
        self.assertEqual(experiment_config.parse_override("--reward_oracle.kind=GradientBased"),
                         ("reward_oracle.kind", "GradientBased"))
        self.assertEqual(experiment_config.parse_override("--T_sweep=[8,16]"), ("T_sweep", [8, 16]))

    def test_malformed_override(self):
        with self.assertRaises(acer_exception.Acer_Exception):
            experiment_config.parse_override("--schedule.c_theta")

    def test_apply_overrides_leaves_the_original(self):
        original = {"schedule": {"c_theta": 0.05}}
        merged = experiment_config.apply_overrides(original, {"schedule.c_theta": 0.01, "critic.C_omega": 2.0})
        self.assertEqual(merged, {"schedule": {"c_theta": 0.01}, "critic": {"C_omega": 2.0}})
        self.assertEqual(original, {"schedule": {"c_theta": 0.05}})

    def test_load_config(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "experiment.json")
            with open(path, "w", encoding="utf-8") as file:
                json.dump(MINIMAL, file)
            config = experiment_config.load_config(path, {"T": 128, "schedule.c_theta": 0.02})
        self.assertEqual(config.T_values, [128])
        self.assertEqual(config.schedule.c_theta, 0.02)

    def test_load_config_bad_json(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "experiment.json")
            with open(path, "w", encoding="utf-8") as file:
                file.write("{not json")
            with self.assertRaises(acer_exception.Acer_Exception) as context:
                experiment_config.load_config(path)
        self.assertEqual(context.exception.type, "Invalid config")

class TestWorkerCount(unittest.TestCase):
    def test_environment_cap(self):
        with mock.patch.dict(os.environ, {experiment_config.EVOLVING_AC_THREADS: "2"}):
            self.assertEqual(experiment_config.worker_count(10), 2)
            self.assertEqual(experiment_config.worker_count(1), 1)

    def test_bad_environment_value(self):
        with mock.patch.dict(os.environ, {experiment_config.EVOLVING_AC_THREADS: "many"}):
            with self.assertRaises(acer_exception.Acer_Exception):
                experiment_config.worker_count(4)

if __name__ == '__main__':
    unittest.main()
