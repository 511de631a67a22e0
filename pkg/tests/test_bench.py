import unittest
import tempfile
import os

import numpy as np

from chance_presolve.bench import (generate_instance, BenchConfig,
                                   BenchConfigError, BenchRecord, BenchTable,
                                   SolveMode, TrialSummary, relative_gap,
                                   reference_optima, run, render_table)
from chance_presolve.instance import validate, normalize
from chance_presolve.norm_type import NormType
from chance_presolve.solve_result import SolveResult, SolveStatus


class TestBench(unittest.TestCase):
    """Test the instance generator and the benchmark tables."""

    def setUp(self) -> None:
        self.warnings = []
        # Temporary directory for file exports
        self.working_dir = tempfile.mkdtemp()

    def tearDown(self) -> None:
        """Remove temporary directory content."""
        for file in [
            f for f in os.listdir(self.working_dir)
            if os.path.isfile(os.path.join(self.working_dir, f))
        ]:
            os.remove(os.path.join(self.working_dir, file))

    def test_generator_is_deterministic(self):
        """Test that the seed fixes the instance."""
        first = generate_instance(2, 10, 0.1, 7)
        second = generate_instance(2, 10, 0.1, 7)
        self.assertDictEqual(first.to_dictionary(), second.to_dictionary())
        other = generate_instance(2, 10, 0.1, 8)
        self.assertFalse(np.array_equal(first.scenarios.points,
                                        other.scenarios.points))

    def test_generator_scaling(self):
        """Test the radii relative to the largest coordinate."""
        for p in (2, 3):
            instance = generate_instance(p, 12, 0.2, 1, random_mass=True,
                                         o_tilde=NormType.Linf)
            scale = float(np.max(np.abs(instance.scenarios.points)))
            self.assertAlmostEqual(scale, 1.0)
            self.assertAlmostEqual(instance.radius, 23 / 25 * p * scale)
            self.assertAlmostEqual(instance.box_radius, 2 * scale)
            self.assertTrue(np.all(np.abs(instance.x_bar)
                                   <= instance.box_radius))
            self.assertIs(instance.constraint_norm, NormType.Linf)
            self.assertIs(instance.objective_norm, NormType.L2)
            self.assertFalse(instance.scenarios.is_equiprobable)
            self.assertListEqual(validate(instance), [])
            normalized, log = normalize(instance)
            self.assertIs(normalized, instance)
            self.assertListEqual(log, [])
        with self.assertRaises(BenchConfigError):
            generate_instance(4, 10, 0.1, 0)

    def test_config_errors(self):
        """Test the rejection of invalid benchmark settings."""
        with self.assertRaises(BenchConfigError):
            BenchConfig(p=4, n=10, tau=0.1)
        with self.assertRaises(BenchConfigError):
            BenchConfig(p=2, n=10, tau=1.0)
        with self.assertRaises(BenchConfigError):
            BenchConfig(p=2, n=10, tau=0.1, trials=0)
        with self.assertRaises(BenchConfigError):
            BenchConfig(p=2, n=10, tau=0.1, o_tilde=NormType.L2)
        with self.assertRaises(BenchConfigError):
            BenchConfig(p=2, n=30, tau=0.1, mode=SolveMode.brute)
        config = BenchConfig(p=3, n=10, tau=0.1, mode="direct")
        self.assertEqual(config.time_limit, 720.0)
        self.assertEqual(config.to_dictionary()["mode"], "direct")

    def test_relative_gap(self):
        """Test the gap of the upper bound to the optimum."""
        self.assertEqual(relative_gap(1.0, 1.0), 0.0)
        self.assertAlmostEqual(relative_gap(1.5, 1.0), 0.5)
        self.assertEqual(relative_gap(1.0, 0.0), np.inf)
        self.assertEqual(relative_gap(np.inf, 2.0), np.inf)

    def test_modes_agree(self):
        """Test that all the modes find the same optima."""
        records = [run(BenchConfig(p=2, n=8, tau=0.2, mode=mode, seed=3,
                                   trials=2),
                       warning_logger=lambda mess: self.warnings.append(mess))
                   for mode in SolveMode]
        optima = reference_optima(records)
        brute = records[-1]
        self.assertIs(brute.config.mode, SolveMode.brute)
        for record in records:
            self.assertEqual(record.solved_count, brute.solved_count)
            for trial, expected in zip(record.trials, brute.trials):
                self.assertIsNone(trial.error)
                self.assertIs(trial.result.status, expected.result.status)
                if trial.solved:
                    self.assertAlmostEqual(trial.result.value,
                                           optima[trial.seed], places=6)
        if optima:
            self.assertIn("0%", render_table(records))

    def test_averages_over_solved_trials(self):
        """Test that unsolved and failed trials do not enter the time."""
        config = BenchConfig(p=2, n=5, tau=0.2, trials=3)
        record = BenchRecord(config, [
            TrialSummary(0, result=SolveResult(
                SolveStatus.optimal, 2.0, lower=2.0, upper=2.0,
                nodes_explored=4, wall_time=1.0), presolve_time=0.5),
            TrialSummary(1, result=SolveResult(
                SolveStatus.time_limit, 3.0, lower=1.0, upper=3.0,
                nodes_explored=6, wall_time=10.0)),
            TrialSummary(2, error="projection did not converge")
        ])
        self.assertEqual(record.solved_count, 1)
        self.assertAlmostEqual(record.average_time, 1.5)
        self.assertEqual(record.total_nodes, 10)
        self.assertDictEqual(reference_optima([record]), {0: 2.0, 1: 3.0})
        self.assertEqual(record.average_gap({0: 2.0, 1: 2.0}), 0.25)
        data = record.to_dictionary()
        self.assertEqual(data["solved"], 1)
        self.assertEqual(data["trials"][2]["error"],
                         "projection did not converge")
        table = BenchTable([record]).to_2d_list()
        self.assertListEqual(table[0], BenchTable.HEADER)
        self.assertListEqual(table[1], ["presolve", 2, 0.2, 5, 1.5, "1/3",
                                        "0%", 10])
        unsolved = BenchRecord(config, [TrialSummary(0, error="failed")])
        self.assertIsNone(unsolved.average_time)
        self.assertIsNone(unsolved.average_gap())
        with self.assertRaises(ValueError):
            BenchTable([])

    def test_exports(self):
        """Test the files written from a benchmark table."""
        record = run(BenchConfig(p=2, n=6, tau=0.3, trials=1))
        table = BenchTable([record])
        excel_path = os.path.join(self.working_dir, "bench.xlsx")
        table.to_excel(excel_path)
        self.assertTrue(os.path.exists(excel_path))
        csv_lines = table.to_csv().split("\n")
        self.assertEqual(len(csv_lines), 2)
        self.assertTrue(csv_lines[0].startswith("method,p,tau,N"))
        self.assertTrue(csv_lines[1].startswith("presolve,2,0.3,6"))
        self.assertIn("| *method* |", table.to_markdown())
