#!/usr/bin/env python3
import unittest
from unittest import mock

from acer_harness import acer_exception, verify

FAST_CHECKS = ["oracle_equivalence", "gradient_finite_difference", "sampling_contraction",
               "td_error_bound", "tv_lipschitz", "run_invariants"]

class TestVerifyFast(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.results = verify.verify_suite("fast")

    def test_every_fast_check_passes(self):
        results = TestVerifyFast.results
        self.assertEqual([check["name"] for check in results["checks"]], FAST_CHECKS)
        for check in results["checks"]:
            self.assertTrue(check["passed"], check)
        self.assertTrue(results["passed"])
        self.assertEqual((results["level"], results["fault"]), ("fast", None))

    def test_run_invariants_details(self):
        details = TestVerifyFast.results["checks"][-1]["details"]
        self.assertEqual(details["failed"], [])
        self.assertIn("mismatch_recursion", details["checks"])

class TestVerifyFault(unittest.TestCase):
    def test_projection_fault_is_caught(self):
        passed, details = verify.check_run_invariants(verify.Fault.PROJECTION_RADIUS)
        self.assertFalse(passed)
        self.assertIn("critic_ball", details["failed"])

    def test_unknown_fault(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            verify.verify_suite("fast", "off_by_one")
        self.assertEqual(context.exception.data["field"], "fault")

    def test_unknown_level(self):
        with self.assertRaises(acer_exception.Acer_Exception) as context:
            verify.verify_suite("thorough")
        self.assertEqual(context.exception.data["field"], "level")

class TestTdErrorBound(unittest.TestCase):
    def test_mostly_singular_probes_fail_the_check(self):
        singular = acer_exception.Acer_Exception({"errorcode": "Singular system", "data": {"what": "A", "value": 0.0}})
        with mock.patch("acer_harness.oracle.td_error_bound_check", side_effect=singular):
            passed, details = verify.check_td_error_bound(probes=4)
        self.assertFalse(passed)
        self.assertEqual((details["evaluated"], details["skipped_singular"]), (0, 4))

    def test_evaluated_probes_are_counted(self):
        passed, details = verify.check_td_error_bound(probes=4)
        self.assertTrue(passed, details)
        self.assertEqual(details["evaluated"] + details["skipped_singular"], 4)
        self.assertGreaterEqual(details["evaluated"], 2)

class TestVerifySweeps(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.T_values = [64, 128, 256]
        cls.gradient = verify._sweep({"kind": "GradientBased", "c_phi": 1.0, "clip": 1.0}, cls.T_values, [0, 1])

    def test_sweep_runs_are_clean(self):
        passed, details = verify.check_sweep_invariants(TestVerifySweeps.gradient)
        self.assertTrue(passed, details)

    def test_saturating_increment_bound(self):
        _, details = verify.check_gradient_based_rate(TestVerifySweeps.gradient)
        self.assertLessEqual(details["max_F_T_times_T2"], 4.0)
        self.assertGreaterEqual(details["max_F_T_times_T2"], 1.0)
        self.assertIn("G_T", details["rate_fits"])

    def test_full_level_names(self):
        results = verify.verify_suite("full", sweep_T=TestVerifySweeps.T_values, sweep_seeds=[0])
        names = [check["name"] for check in results["checks"]]
        self.assertEqual(names, FAST_CHECKS + ["static_rate", "gradient_based_rate", "drift_degradation",
                                              "sweep_invariants"])

if __name__ == '__main__':
    unittest.main()
