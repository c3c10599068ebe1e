#!/usr/bin/env python3
import contextlib
import io
import json
import os
import tempfile
import unittest

from acer_harness import acer_control, experiment, mdp as mdp_core

def run_main(argv):
    output = io.StringIO()
    with contextlib.redirect_stdout(output):
        status = acer_control.main(argv)
    return status, output.getvalue()

class TestAcerControl(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.TemporaryDirectory()
        cls.config_path = os.path.join(cls.directory.name, "experiment.json")
        with open(cls.config_path, "w", encoding="utf-8") as file:
            json.dump({
                "mdp": {"n_states": 4, "n_actions": 2, "seed": 3},
                "T": 64,
                "output_dir": os.path.join(cls.directory.name, "output"),
            }, file)

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()

    def test_gen_mdp(self):
        path = os.path.join(TestAcerControl.directory.name, "mdp.json")
        status, _ = run_main(["gen-mdp", '{"n_states": 3, "n_actions": 2, "seed": 5}', "-o", path])
        self.assertEqual(status, experiment.EXIT_OK)
        self.assertEqual(mdp_core.validate_mdp(mdp_core.load_mdp(path)), [])

    def test_gen_mdp_bad_spec(self):
        status, output = run_main(["gen-mdp", "{n_states"])
        self.assertEqual(status, experiment.EXIT_CONFIG_ERROR)
        self.assertIn("Invalid config", output)

    def test_run_with_override_then_probe(self):
        status, output = run_main(["run", TestAcerControl.config_path, "--seeds=[4]"])
        self.assertEqual(status, experiment.EXIT_OK)
        self.assertTrue(output.startswith("Group"))
        checkpoint_path = os.path.join(TestAcerControl.directory.name, "output", "checkpoint_seed4_T64.json")
        status, output = run_main(["probe", checkpoint_path])
        self.assertEqual(status, experiment.EXIT_OK)
        self.assertGreater(json.loads(output)["lambda"], 0.0)

    def test_ratio_violation_exits_with_config_error(self):
        status, output = run_main(["run", TestAcerControl.config_path, "--schedule.c_theta=1.0",
                                   "--schedule.c_omega=1.0"])
        self.assertEqual(status, experiment.EXIT_CONFIG_ERROR)
        self.assertIn("schedule.ratio", output)

    def test_malformed_checkpoint_file(self):
        path = os.path.join(TestAcerControl.directory.name, "bad.json")
        with open(path, "w", encoding="utf-8") as file:
            json.dump({"mdp": {}}, file)
        status, output = run_main(["probe", path])
        self.assertEqual(status, experiment.EXIT_CONFIG_ERROR)
        self.assertIn("Malformed checkpoint", output)

    def test_missing_checkpoint_file(self):
        status, output = run_main(["probe", os.path.join(TestAcerControl.directory.name, "absent.json")])
        self.assertEqual(status, experiment.EXIT_CONFIG_ERROR)
        self.assertIn("Unreadable file", output)

    def test_gen_mdp_bad_spec_file(self):
        path = os.path.join(TestAcerControl.directory.name, "spec.json")
        with open(path, "w", encoding="utf-8") as file:
            file.write("{bad")
        status, output = run_main(["gen-mdp", path])
        self.assertEqual(status, experiment.EXIT_CONFIG_ERROR)
        self.assertIn("not valid JSON", output)

    def test_gen_mdp_spec_must_be_an_object(self):
        status, output = run_main(["gen-mdp", "[3, 2]"])
        self.assertEqual(status, experiment.EXIT_CONFIG_ERROR)
        self.assertIn("generator spec must be a JSON object", output)

if __name__ == '__main__':
    unittest.main()
