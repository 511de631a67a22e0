import unittest
from itertools import combinations

import numpy as np

from chance_presolve.instance import ScenarioSet, PBPInstance, chance_check
from chance_presolve.norm_type import NormType
from chance_presolve.convex_oracle import project
from chance_presolve.ccp_utils import mass_reaches
from chance_presolve.minimal_subsets import brute_force_solve
from chance_presolve.presolve import (PartitionState, Bounds, Certificate,
                                      CertificateKind, ValidInequality,
                                      InequalityKind, PresolveConfig,
                                      PresolveContradictionError,
                                      singleton_bounds, safe_by_separability,
                                      expand_safe_hull, positivity_pass,
                                      suboptimality_pass,
                                      generate_inequalities, final_big_m,
                                      run_pipeline, replay_certificate)


class TestPresolve(unittest.TestCase):
    """Test the presolve stages, their certificates and their soundness."""

    def setUp(self) -> None:
        self.generator = np.random.Generator(np.random.PCG64(29))
        self.warnings = []
        self.instance = PBPInstance(
            ScenarioSet(2, [[0, 0], [0.5, 0], [10, 10]], [1 / 3] * 3),
            [0, 0],
            radius=1.0,
            box_radius=20.0,
            tau=0.4,
            constraint_norm=NormType.Linf
        )
        corners = [[-1, -1], [1, -1], [-1, 1], [1, 1], [0, 0]]
        # Lighter center, every sound subset needs the four corners
        self.square = PBPInstance(
            ScenarioSet(2, corners, [0.22, 0.22, 0.22, 0.22, 0.12]),
            [1.8, 0.3],
            radius=1.2,
            box_radius=2.0,
            tau=0.15,
            constraint_norm=NormType.Linf
        )
        self.square_equal = PBPInstance(
            ScenarioSet(2, corners, [0.2] * 5),
            [1.8, 0.3],
            radius=1.2,
            box_radius=2.0,
            tau=0.2,
            constraint_norm=NormType.Linf
        )

    def _random_instance(self, dim: int, size: int,
                         equiprobable: bool) -> PBPInstance:
        if equiprobable:
            probs = np.full(size, 1.0 / size)
        else:
            probs = self.generator.dirichlet(np.ones(size))
        return PBPInstance(
            ScenarioSet(dim, self.generator.uniform(-1, 1, (size, dim)),
                        probs),
            self.generator.uniform(-2, 2, dim),
            radius=float(self.generator.uniform(0.5, 1.2)),
            box_radius=2.0,
            tau=float(self.generator.choice([0.15, 0.3])),
            constraint_norm=NormType(self.generator.choice(["L1", "Linf"]))
        )

    @staticmethod
    def _subset_values(instance: PBPInstance) -> dict:
        """nu(S) of every subset that reaches the required mass."""
        values = {}
        for count in range(1, instance.size + 1):
            for subset in combinations(range(instance.size), count):
                if mass_reaches(instance.scenarios.mass(subset),
                                instance.required_mass):
                    values[subset] = project(instance, subset).value
        return values

    @staticmethod
    def _restricted_optimum(values: dict, report) -> float:
        """Best value over the selections the report still allows."""
        safe = set(report.partition.safe)
        pruned = set(report.partition.pruned)
        allowed = [value for subset, value in values.items()
                   if safe.issubset(subset) and not pruned & set(subset)
                   and all(inequality.is_satisfied(subset)
                           for inequality in report.inequalities)]
        return min(allowed, default=np.inf)

    def test_partition_state(self):
        """Test the fixings and the contradictions of the partition."""
        with self.assertRaises(ValueError):
            PartitionState((0, 1), (1,))
        partition = PartitionState((0,), (2,))
        self.assertTupleEqual(partition.selectable(4), (1, 3))
        fixed = partition.with_fixings([
            Certificate(1, CertificateKind.hull_expansion, "hull"),
            Certificate(3, CertificateKind.strict_positivity, "positivity")
        ])
        self.assertTupleEqual(fixed.safe, (0, 1))
        self.assertTupleEqual(fixed.pruned, (2, 3))
        self.assertSetEqual(set(fixed.certificates), {1, 3})
        # The original state is left untouched
        self.assertTupleEqual(partition.safe, (0,))
        with self.assertRaises(PresolveContradictionError):
            partition.with_fixings([
                Certificate(2, CertificateKind.non_separability,
                            "separability")])

    def test_bounds(self):
        """Test that bounds only improve."""
        bounds = Bounds(0.5, 2.0)
        self.assertIs(bounds.improved(3.0, np.zeros(2), ()), bounds)
        better = bounds.improved(1.0, np.zeros(2), (0,))
        self.assertEqual(better.upper, 1.0)
        self.assertTupleEqual(better.incumbent_selection, (0,))
        self.assertEqual(better.raised(5.0).lower, 1.0)
        self.assertEqual(better.raised(0.1).lower, 0.5)

    def test_valid_inequality(self):
        """Test the evaluation of both inequality families."""
        induction = ValidInequality(InequalityKind.hull_induction,
                                    (0, 1, 2), target=4)
        self.assertEqual(induction.rhs, 2)
        self.assertFalse(induction.is_satisfied((0, 1, 2)))
        self.assertTrue(induction.is_satisfied((0, 1, 2, 4)))
        self.assertTrue(induction.is_satisfied((0, 1)))
        cut = ValidInequality(InequalityKind.hull_cut, (0, 1, 2))
        self.assertFalse(cut.is_satisfied((0, 1, 2)))
        self.assertTrue(cut.is_satisfied((0, 2, 4)))
        self.assertDictEqual(induction.to_dictionary(), {
            "kind": "hull_induction", "target": 5,
            "vertex_set": [1, 2, 3], "rhs": 2})
        with self.assertRaises(ValueError):
            ValidInequality(InequalityKind.hull_cut, (0, 1), target=2)
        with self.assertRaises(ValueError):
            ValidInequality(InequalityKind.hull_induction, (0, 1))

    def test_presolve_config(self):
        """Test the switches and the limits of the configuration."""
        config = PresolveConfig.only("hull_cut", threads=2)
        self.assertTrue(config.hull_cut)
        self.assertFalse(config.singleton_bound)
        self.assertEqual(config.threads, 2)
        self.assertEqual(config.time_limit(2), 60.0)
        self.assertEqual(config.time_limit(3), 120.0)
        self.assertEqual(
            PresolveConfig(separability_time_limit=5).time_limit(3), 5)
        with self.assertRaises(ValueError):
            PresolveConfig.only("colour")
        with self.assertRaises(ValueError):
            PresolveConfig(separability_time_limit=0.0)
        with self.assertRaises(ValueError):
            PresolveConfig(threads=0)

    def test_singleton_bounds(self):
        """Test the bounds and the pruning by singleton values."""
        bounds, partition = singleton_bounds(self.instance)
        self.assertEqual(bounds.lower, 0.0)
        self.assertAlmostEqual(bounds.upper, 0.0)
        self.assertTrue(chance_check(self.instance,
                                     bounds.incumbent).feasible)
        self.assertTupleEqual(partition.pruned, (2,))
        certificate = partition.certificates[2]
        self.assertIs(certificate.kind, CertificateKind.singleton_bound)
        self.assertTrue(replay_certificate(self.instance, certificate))
        _, kept = singleton_bounds(self.instance, prune=False)
        self.assertTupleEqual(kept.pruned, ())
        # Only the first corner has a chance-feasible minimiser
        bounds, partition = singleton_bounds(self.square)
        self.assertAlmostEqual(bounds.upper, np.sqrt(2.57))
        self.assertEqual(bounds.lower, 0.0)
        self.assertTupleEqual(partition.pruned, ())

    def test_separability(self):
        """Test the scenarios that no sound subset separates."""
        partition = safe_by_separability(self.square, PartitionState())
        self.assertTupleEqual(partition.safe, (0, 1, 2, 3, 4))
        partition = safe_by_separability(self.square_equal, PartitionState())
        self.assertTupleEqual(partition.safe, (4,))
        certificate = partition.certificates[4]
        self.assertIs(certificate.kind, CertificateKind.non_separability)
        self.assertTrue(replay_certificate(self.square_equal, certificate))

    def test_separability_time_limit(self):
        """Test that an exhausted time limit leaves the partition as is."""
        partition = safe_by_separability(
            self.square, PartitionState(), time_limit=1e-12,
            warning_logger=lambda mess: self.warnings.append(mess))
        self.assertTupleEqual(partition.safe, ())
        self.assertEqual(len(self.warnings), 1)

    def test_expand_safe_hull(self):
        """Test the closure of the safe set under the hull."""
        partition = expand_safe_hull(self.square, PartitionState((0, 3)))
        self.assertTupleEqual(partition.safe, (0, 3, 4))
        self.assertIs(partition.certificates[4].kind,
                      CertificateKind.hull_expansion)
        self.assertTrue(replay_certificate(self.square,
                                           partition.certificates[4]))
        empty = PartitionState()
        self.assertIs(expand_safe_hull(self.square, empty), empty)
        with self.assertRaises(PresolveContradictionError):
            expand_safe_hull(self.square, PartitionState((0, 1, 2, 3), (4,)))

    def test_positivity(self):
        """Test both signs of the constraint over the safe region."""
        wide = PBPInstance(
            self.instance.scenarios, [0, 0], radius=50.0, box_radius=20.0,
            tau=0.4, constraint_norm=NormType.Linf)
        partition = positivity_pass(wide, PartitionState(), Bounds())
        self.assertTupleEqual(partition.safe, (0, 1, 2))
        for certificate in partition.certificates.values():
            self.assertIs(certificate.kind, CertificateKind.non_positivity)
            self.assertTrue(replay_certificate(wide, certificate))
        partition = positivity_pass(self.instance, PartitionState((0,)),
                                    Bounds())
        self.assertTupleEqual(partition.pruned, (2,))
        self.assertIs(partition.certificates[2].kind,
                      CertificateKind.strict_positivity)
        self.assertTrue(replay_certificate(self.instance,
                                           partition.certificates[2]))
        partition = positivity_pass(self.instance, PartitionState((0,)),
                                    Bounds(), strict_positivity=False)
        self.assertTupleEqual(partition.pruned, ())

    def test_suboptimality(self):
        """Test the pruning by the value of safe set plus one scenario."""
        bounds = Bounds(0.0, 0.0, incumbent=np.zeros(2),
                        incumbent_selection=(0, 1))
        partition, raised = suboptimality_pass(
            self.instance, PartitionState((0,)), bounds)
        self.assertTupleEqual(partition.pruned, (2,))
        self.assertEqual(raised.lower, 0.0)
        certificate = partition.certificates[2]
        self.assertIs(certificate.kind, CertificateKind.sub_optimality)
        self.assertTrue(replay_certificate(self.instance, certificate))
        self.assertIsNone(certificate.to_dictionary()["witness"]["value"])
        # A safe set with enough mass leaves nothing to do
        full = PartitionState((0, 1))
        same, _ = suboptimality_pass(self.instance, full, bounds)
        self.assertIs(same, full)

    def test_inequalities(self):
        """Test the inequalities of the square with its center."""
        inequalities = generate_inequalities(self.square_equal,
                                             PartitionState())
        kinds = {(inequality.kind, inequality.target): inequality
                 for inequality in inequalities}
        self.assertEqual(len(inequalities), 2)
        induction = kinds[(InequalityKind.hull_induction, 4)]
        self.assertTupleEqual(induction.vertex_set, (0, 1, 2, 3))
        cut = kinds[(InequalityKind.hull_cut, None)]
        self.assertTupleEqual(cut.vertex_set, (0, 1, 2, 3))
        only_cut = generate_inequalities(self.square_equal,
                                         PartitionState(),
                                         hull_induction=False)
        self.assertEqual(len(only_cut), 1)
        # No interior point and too little mass for the cut
        triangle = PBPInstance(
            ScenarioSet(2, [[0, 0], [1, 0], [0, 1]], [1 / 3] * 3), [0, 0],
            radius=1.0, box_radius=2.0, tau=0.2)
        self.assertListEqual(
            generate_inequalities(triangle, PartitionState()), [])

    def test_final_big_m(self):
        """Test the big-M entries of the selectable scenarios."""
        bounds = Bounds(0.0, 0.0, incumbent=np.zeros(2),
                        incumbent_selection=(0, 1))
        partition, entries = final_big_m(self.instance, PartitionState((0,)),
                                         bounds)
        self.assertListEqual([entry.scenario for entry in entries], [2])
        # Every point near x_bar satisfies the second scenario
        self.assertTupleEqual(partition.safe, (0, 1))
        self.assertLessEqual(entries[0].value, entries[0].raw)
        _, raw = final_big_m(self.instance, PartitionState((0,)), bounds,
                             tighten=False)
        for entry in raw:
            self.assertEqual(entry.value, entry.raw)

    def test_pipeline_closes_square(self):
        """Test that every scenario of the square becomes safe."""
        report = run_pipeline(self.square)
        self.assertTupleEqual(report.partition.safe, (0, 1, 2, 3, 4))
        self.assertAlmostEqual(report.bounds.lower, np.sqrt(2.57))
        self.assertAlmostEqual(report.bounds.upper, np.sqrt(2.57))
        self.assertListEqual(report.big_m, [])
        for certificate in report.certificates:
            self.assertTrue(replay_certificate(self.square, certificate))
        data = report.to_dictionary()
        self.assertListEqual(data["safe"], [1, 2, 3, 4, 5])
        self.assertListEqual([item["s"] for item in data["certificates"]],
                             [1, 2, 3, 4, 5])
        self.assertSetEqual(set(data["timings_ms"]), {
            "singleton", "separability", "hull_suboptimality", "positivity",
            "big_m", "inequalities"})
        self.assertIn('"safe": [1, 2, 3, 4, 5]', report.to_json())

    def test_pipeline_detects_infeasibility(self):
        """Test that a requirement of every scenario is proven infeasible."""
        strict = self.instance.replace(tau=0.01)
        report = run_pipeline(strict)
        self.assertTupleEqual(report.partition.safe, (0, 1, 2))
        self.assertEqual(report.bounds.lower, np.inf)
        self.assertIsNone(report.to_dictionary()["lower"])

    def test_pipeline_against_brute_force(self):
        """Test that the reduced problem keeps the optimum."""
        configs = [PresolveConfig()] + [
            PresolveConfig.only(switch)
            for switch in PresolveConfig.SWITCHES]
        for dim in (2, 3):
            for equiprobable in (True, False):
                for _ in range(3):
                    size = int(self.generator.integers(5, 8))
                    instance = self._random_instance(dim, size, equiprobable)
                    values = self._subset_values(instance)
                    optimum = min(values.values(), default=np.inf)
                    self.assertAlmostEqual(
                        brute_force_solve(instance).value, optimum, places=6)
                    for config in configs:
                        report = run_pipeline(instance, config)
                        bounds = report.bounds
                        self.assertLessEqual(bounds.lower, optimum + 1e-6)
                        self.assertGreaterEqual(bounds.upper,
                                                optimum - 1e-6)
                        if bounds.incumbent is not None:
                            self.assertTrue(chance_check(
                                instance, bounds.incumbent).feasible)
                        self.assertAlmostEqual(
                            self._restricted_optimum(values, report),
                            optimum, places=6)
                        for certificate in report.certificates:
                            self.assertTrue(
                                replay_certificate(instance, certificate))
