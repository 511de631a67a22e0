import unittest

import numpy as np

from chance_presolve.instance import ScenarioSet, PBPInstance
from chance_presolve.norm_type import NormType
from chance_presolve.minimal_subsets import brute_force_solve
from chance_presolve.presolve import run_pipeline, PartitionState
from chance_presolve.solve_result import SolveResult, SolveStatus
from chance_presolve.solver import (SolverConfig, solve, greedy_incumbent,
                                    verify)
from chance_presolve.bench import BenchConfig, SolveMode, run


class TestSolver(unittest.TestCase):
    """Test the branch-and-bound solver against the enumeration."""

    def setUp(self) -> None:
        self.generator = np.random.Generator(np.random.PCG64(31))
        self.warnings = []
        self.instance = PBPInstance(
            ScenarioSet(2, [[0, 0], [0.5, 0], [10, 10]], [1 / 3] * 3),
            [0, 0],
            radius=1.0,
            box_radius=20.0,
            tau=0.4,
            constraint_norm=NormType.Linf
        )
        self.square = PBPInstance(
            ScenarioSet(2, [[-1, -1], [1, -1], [-1, 1], [1, 1], [0, 0]],
                        [0.22, 0.22, 0.22, 0.22, 0.12]),
            [1.8, 0.3],
            radius=1.2,
            box_radius=2.0,
            tau=0.15,
            constraint_norm=NormType.Linf
        )

    def test_solver_config(self):
        """Test the rejection of a non-positive time limit."""
        with self.assertRaises(ValueError):
            SolverConfig(time_limit=0.0)
        self.assertEqual(SolverConfig().time_limit, np.inf)

    def test_three_scenarios(self):
        """Test the direct solve of three scenarios."""
        result = solve(self.instance)
        self.assertIs(result.status, SolveStatus.optimal)
        self.assertAlmostEqual(result.value, 0.0)
        self.assertTupleEqual(result.selection, (0, 1))
        self.assertTrue(verify(self.instance, result))
        self.assertDictEqual(
            {key: result.to_dictionary()[key]
             for key in ("status", "selection", "lower", "upper")},
            {"status": "optimal", "selection": [1, 2], "lower": 0.0,
             "upper": 0.0})

    def test_every_scenario_required(self):
        """Test a risk level below the lightest probability."""
        strict = self.square.replace(tau=0.1)
        result = solve(strict)
        self.assertIs(result.status, SolveStatus.optimal)
        self.assertAlmostEqual(result.value, np.sqrt(2.57))
        self.assertTrue(verify(strict, result))
        infeasible = solve(self.instance.replace(tau=0.2))
        self.assertIs(infeasible.status, SolveStatus.infeasible)
        self.assertEqual(infeasible.value, np.inf)
        self.assertIsNone(infeasible.to_dictionary()["value"])

    def test_presolved_square(self):
        """Test that a closed presolve leaves at most the root node."""
        report = run_pipeline(self.square)
        result = solve(self.square, report)
        self.assertIs(result.status, SolveStatus.optimal)
        self.assertAlmostEqual(result.value, np.sqrt(2.57))
        self.assertLessEqual(result.nodes_explored, 1)
        self.assertTrue(verify(self.square, result))
        np.testing.assert_allclose(result.minimizer, [0.2, 0.2])

    def test_greedy_incumbent(self):
        """Test the greedy sound subset."""
        incumbent = greedy_incumbent(self.instance)
        value, point, selection = incumbent
        self.assertAlmostEqual(value, 0.0)
        self.assertTupleEqual(selection, (0, 1))
        np.testing.assert_allclose(point, [0.0, 0.0])
        self.assertIsNone(greedy_incumbent(self.instance,
                                           PartitionState((), (0, 1))))
        forced = greedy_incumbent(self.instance, PartitionState((2,), ()))
        self.assertIsNone(forced)

    def test_big_m_forcing(self):
        """Test scenarios whose ball covers the whole box."""
        instance = PBPInstance(
            ScenarioSet(2, [[0, 0], [0.1, 0], [3, 3]], [1 / 3] * 3),
            [-0.9, -0.9], radius=2.5, box_radius=1.0, tau=0.4,
            constraint_norm=NormType.Linf)
        forced = solve(instance)
        free = solve(instance, config=SolverConfig(use_big_m=False))
        for result in (forced, free):
            self.assertIs(result.status, SolveStatus.optimal)
            self.assertAlmostEqual(result.value, 0.0)
            self.assertTupleEqual(result.selection, (0, 1))
        self.assertLessEqual(forced.nodes_explored, free.nodes_explored)
        report = run_pipeline(instance)
        self.assertTrue({0, 1}.issubset(report.partition.safe))
        self.assertTrue(all(entry.value > 0 for entry in report.big_m))
        self.assertIs(solve(instance, report).status, SolveStatus.optimal)

    def test_verify_rejects_tampering(self):
        """Test that altered results are rejected."""
        result = solve(self.instance)
        self.assertTrue(verify(self.instance, result))
        tampered = [
            SolveResult(SolveStatus.optimal, 1.0, minimizer=result.minimizer,
                        selection=result.selection),
            SolveResult(SolveStatus.optimal, result.value,
                        minimizer=result.minimizer, selection=(0,)),
            SolveResult(SolveStatus.optimal, result.value,
                        minimizer=np.array([3.0, 3.0]),
                        selection=result.selection),
            SolveResult(SolveStatus.time_limit, result.value,
                        minimizer=result.minimizer,
                        selection=result.selection)
        ]
        for candidate in tampered:
            self.assertFalse(verify(self.instance, candidate))

    def test_time_limit(self):
        """Test that an exhausted time limit reports the gap."""
        points = self.generator.uniform(-1, 1, (12, 2))
        instance = PBPInstance(
            ScenarioSet(2, points, [1 / 12] * 12), [1.9, 1.9], radius=0.6,
            box_radius=2.0, tau=0.3)
        result = solve(instance, config=SolverConfig(
            time_limit=1e-9,
            warning_logger=lambda mess: self.warnings.append(mess)))
        self.assertIs(result.status, SolveStatus.time_limit)
        self.assertLessEqual(result.lower, result.upper)
        self.assertEqual(len(self.warnings), 1)

    def _random_instance(self, dim: int, tau: float,
                         equiprobable: bool) -> PBPInstance:
        size = int(self.generator.integers(6, 13))
        if equiprobable:
            probs = np.full(size, 1.0 / size)
        else:
            probs = self.generator.dirichlet(np.ones(size))
        return PBPInstance(
            ScenarioSet(dim, self.generator.uniform(-1, 1, (size, dim)),
                        probs),
            self.generator.uniform(-2, 2, dim),
            radius=float(self.generator.uniform(0.5, 1.2)),
            box_radius=2.0, tau=tau,
            constraint_norm=NormType(self.generator.choice(["L1", "Linf"])))

    def _sampled_optimum(self, instance: PBPInstance) -> float:
        """Smallest objective over sampled chance-feasible points of the
            box (inf if no sample is chance-feasible)."""
        samples = self.generator.uniform(
            -instance.box_radius, instance.box_radius, (4000, instance.dim))
        gaps = np.abs(samples[:, None, :]
                      - instance.scenarios.points[None, :, :])
        if instance.constraint_norm is NormType.L1:
            distances = gaps.sum(axis=2)
        else:
            distances = gaps.max(axis=2)
        mass = (distances <= instance.radius) @ instance.scenarios.probs
        feasible = samples[mass >= instance.required_mass - 1e-9]
        if not len(feasible):
            return np.inf
        return float(np.min(np.linalg.norm(feasible - instance.x_bar,
                                           axis=1)))

    def test_against_brute_force(self):
        """Test the direct and the presolved search on random instances."""
        bare = SolverConfig(use_inequalities=False, use_big_m=False)
        for dim in (2, 3):
            for tau in (0.15, 0.3):
                for equiprobable in (True, False):
                    for trial in range(50):
                        instance = self._random_instance(dim, tau,
                                                         equiprobable)
                        expected = brute_force_solve(instance)
                        sampled = self._sampled_optimum(instance)
                        # Sampled points only bound the optimum from above
                        self.assertLessEqual(expected.value, sampled + 1e-9)
                        report = run_pipeline(instance)
                        runs = [(None, SolverConfig()),
                                (report, SolverConfig())]
                        if trial < 5:
                            runs += [(None, bare), (report, bare)]
                        for given, config in runs:
                            result = solve(instance, given, config)
                            self.assertIs(result.status, expected.status)
                            if expected.status is SolveStatus.optimal:
                                self.assertAlmostEqual(
                                    result.value, expected.value,
                                    delta=1e-6 * max(1.0, expected.value))
                                self.assertTrue(verify(instance, result))

    def test_thin_region(self):
        """Test three L1 balls meeting in a thin sliver."""
        instance = PBPInstance(
            ScenarioSet(3, [[-0.7695, 0.9126, 0.6494],
                            [-0.0854, 1.0408, 0.32],
                            [-0.1537, 0.8492, 0.06]], [1 / 3] * 3),
            [2.7981, -0.8486, -0.1625],
            radius=1.01, box_radius=5.0, tau=0.1)
        expected = brute_force_solve(instance)
        self.assertIs(expected.status, SolveStatus.optimal)
        self.assertLessEqual(expected.value, 3.53)
        for given in (None, run_pipeline(instance)):
            result = solve(instance, given)
            self.assertIs(result.status, SolveStatus.optimal)
            self.assertAlmostEqual(result.value, expected.value, places=6)
            self.assertTrue(verify(instance, result))

    def test_regions_around_a_known_point(self):
        """Test instances whose scenarios all contain one point."""
        for dim in (2, 3):
            for _ in range(15):
                size = int(self.generator.integers(4, 8))
                inner = self.generator.uniform(-1, 1, dim)
                radius = float(self.generator.uniform(0.5, 1.5))
                directions = self.generator.normal(size=(size, dim))
                directions /= np.abs(directions).sum(axis=1)[:, None]
                instance = PBPInstance(
                    ScenarioSet(dim, inner - radius / 1.01 * directions,
                                [1.0 / size] * size),
                    self.generator.uniform(-3, 3, dim),
                    radius=radius, box_radius=4.0, tau=0.1)
                expected = brute_force_solve(instance)
                self.assertIs(expected.status, SolveStatus.optimal)
                self.assertLessEqual(expected.value,
                                     instance.objective(inner) + 1e-9)
                for given in (None, run_pipeline(instance)):
                    result = solve(instance, given)
                    self.assertIs(result.status, SolveStatus.optimal)
                    self.assertAlmostEqual(result.value, expected.value,
                                           places=6)

    def test_hundred_scenarios(self):
        """Test that presolve shrinks the search at N = 100."""
        records = [run(BenchConfig(p=2, n=100, tau=0.15, mode=mode, seed=11,
                                   trials=10, time_limit=10.0))
                   for mode in (SolveMode.presolve, SolveMode.direct)]
        presolved, direct = records
        fewer = 0
        for with_presolve, without in zip(presolved.trials, direct.trials):
            self.assertIsNone(with_presolve.error)
            self.assertIsNone(without.error)
            if with_presolve.result.nodes_explored \
                    <= without.result.nodes_explored:
                fewer += 1
        counts = [(with_presolve.seed, with_presolve.result.nodes_explored,
                   without.result.nodes_explored)
                  for with_presolve, without
                  in zip(presolved.trials, direct.trials)]
        self.assertGreaterEqual(fewer, 7, msg=f"(seed, presolve nodes, "
                                              f"direct nodes): {counts}")
