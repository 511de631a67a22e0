from typing import Dict, List, Optional, Tuple, Iterable, Union
from enum import Enum
import time

import numpy

from .instance import PBPInstance, chance_check
from .convex_oracle import (project, big_m, min_distance_lb,
                            ProjectionResult, ProjectionStatus,
                            OracleInconsistencyError)
from .geometry import (separability_check, enclosed_indices, vertex_indices,
                       hull, contains)
from .serialization import json_float, to_json_string
from .ccp_utils import (T_index_set, T_logger, index_set, mass_reaches,
                        map_concurrently, silent_if_none, to_report_indices)

# ==== TYPES ====
T_witness = Dict[str, Union[float, T_index_set, List[float], None]]
# ===============

# Relative margin of every "strictly above the upper bound" decision
PRUNING_SLACK: float = 1e-7
# Default time limits of the separability stage (seconds) per dimension
SEPARABILITY_TIME_LIMITS: Dict[int, float] = {2: 60.0, 3: 120.0}


class PresolveContradictionError(ValueError):
    """Raised when a fixing would put a pruned scenario into the safe set.
    """
    pass


class CertificateKind(Enum):
    """Rule that justified a fixing."""
    # nu({s}) above the upper bound
    singleton_bound = "singleton_bound"
    # No sound subset has a hull avoiding the scenario
    non_separability = "non_separability"
    # Scenario inside the hull of the safe scenarios
    hull_expansion = "hull_expansion"
    # Constraint satisfied on the whole capped safe region
    non_positivity = "non_positivity"
    # Constraint violated on the whole capped safe region
    strict_positivity = "strict_positivity"
    # nu(safe + {s}) above the upper bound
    sub_optimality = "sub_optimality"

    @property
    def fixes_safe(self) -> bool:
        """True if the rule adds the scenario to the safe set."""
        return self in (CertificateKind.non_separability,
                        CertificateKind.hull_expansion,
                        CertificateKind.non_positivity)


class Certificate(object):
    """Provenance of a single fixing, with data enough to re-verify it.

    Attributes:
        scenario (int): 0-based index of the fixed scenario.
        kind (CertificateKind): The rule that fired.
        stage (str): Pipeline stage that applied the fixing.
        witness (T_witness): Safe/pruned sets, bound values, caps and the
            incumbent point the rule used.
    """

    def __init__(self,
                 scenario: int,
                 kind: CertificateKind,
                 stage: str,
                 witness: Optional[T_witness] = None):
        self.scenario: int = int(scenario)
        self.kind: CertificateKind = kind
        self.stage: str = stage
        self.witness: T_witness = dict(witness or {})

    def to_dictionary(self) -> dict:
        """Export with 1-based indices (infinite values become null)."""
        witness = {}
        for key, value in self.witness.items():
            if key in ("safe", "pruned"):
                witness[key] = to_report_indices(value)
            elif key == "point":
                witness[key] = None if value is None \
                    else [float(coord) for coord in value]
            else:
                witness[key] = json_float(value)
        return {
            "s": self.scenario + 1,
            "kind": self.kind.value,
            "stage": self.stage,
            "witness": witness
        }

    def __repr__(self) -> str:
        return f"Certificate(s={self.scenario + 1}, kind={self.kind.value})"


class PartitionState(object):
    """Disjoint safe and pruned sets; the remaining indices are selectable.

    Instances are immutable, fixings produce new states.

    Attributes:
        safe (T_index_set): Scenarios fixed to z_s = 1.
        pruned (T_index_set): Scenarios fixed to z_s = 0.
        certificates (Dict[int, Certificate]): Certificate of each fixing.
    """

    def __init__(self,
                 safe: Iterable[int] = (),
                 pruned: Iterable[int] = (),
                 /, *,  # noqa E999
                 certificates: Optional[Dict[int, Certificate]] = None):
        self.safe: T_index_set = index_set(safe)
        self.pruned: T_index_set = index_set(pruned)
        # Quick sanity check:
        if set(self.safe) & set(self.pruned):
            raise ValueError("Safe and pruned sets have to be disjoint!")
        self.certificates: Dict[int, Certificate] = dict(certificates or {})

    def selectable(self, size: int) -> T_index_set:
        """Indices in [N] that are neither safe nor pruned."""
        fixed = set(self.safe) | set(self.pruned)
        return tuple(idx for idx in range(size) if idx not in fixed)

    def with_fixings(self, certificates: List[Certificate]) -> \
            'PartitionState':
        """New state with the certified fixings applied.

        Raises:
            PresolveContradictionError: If a scenario would become both safe
                and pruned.
        """
        safe, pruned = set(self.safe), set(self.pruned)
        recorded = dict(self.certificates)
        for certificate in certificates:
            s_idx = certificate.scenario
            target, other = (safe, pruned) if certificate.kind.fixes_safe \
                else (pruned, safe)
            if s_idx in other:
                raise PresolveContradictionError(
                    f"Scenario {s_idx + 1} cannot be both safe and pruned "
                    f"({certificate.kind.value}).")
            if s_idx not in target:
                target.add(s_idx)
                recorded[s_idx] = certificate
        return PartitionState(safe, pruned, certificates=recorded)

    def __repr__(self) -> str:
        return f"PartitionState(safe={to_report_indices(self.safe)}, " \
               f"pruned={to_report_indices(self.pruned)})"


class Bounds(object):
    """Lower and upper bound of the optimal value with the incumbent.

    Attributes:
        lower (float): Lower bound of F*.
        upper (float): Upper bound of F* (inf if no feasible point known).
        incumbent (Optional[numpy.ndarray]): Chance-feasible point with the
            objective value equal to upper.
        incumbent_selection (T_index_set): Scenarios satisfied by it.
    """

    def __init__(self,
                 lower: float = 0.0,
                 upper: float = numpy.inf,
                 /, *,  # noqa E999
                 incumbent: Optional[numpy.ndarray] = None,
                 incumbent_selection: T_index_set = ()):
        self.lower: float = float(lower)
        self.upper: float = float(upper)
        self.incumbent: Optional[numpy.ndarray] = incumbent
        self.incumbent_selection: T_index_set = index_set(
            incumbent_selection)

    def improved(self, value: float, point: numpy.ndarray,
                 selection: T_index_set) -> 'Bounds':
        """Bounds with the new incumbent if it beats the upper bound."""
        if value < self.upper:
            return Bounds(min(self.lower, value), value, incumbent=point,
                          incumbent_selection=selection)
        return self

    def raised(self, lower: float) -> 'Bounds':
        """Bounds with the lower bound raised (never above upper)."""
        return Bounds(min(max(self.lower, lower), self.upper), self.upper,
                      incumbent=self.incumbent,
                      incumbent_selection=self.incumbent_selection)

    def __repr__(self) -> str:
        return f"Bounds(lower={self.lower}, upper={self.upper})"


class InequalityKind(Enum):
    """Family of a valid inequality."""
    # z_target >= sum of z over the vertex set - |vertex set| + 1
    hull_induction = "hull_induction"
    # sum of z over the vertex set <= |vertex set| - 1
    hull_cut = "hull_cut"


class ValidInequality(object):
    """Inequality sum(z_v for v in vertex_set) - z_target <= rhs.

    Attributes:
        kind (InequalityKind): Family of the inequality.
        target (Optional[int]): Implied scenario (None for hull cuts).
        vertex_set (T_index_set): Hull vertices of the seed subset.
        rhs (int): |vertex_set| - 1.
    """

    def __init__(self,
                 kind: InequalityKind,
                 vertex_set: Iterable[int],
                 /, *,  # noqa E999
                 target: Optional[int] = None):
        self.kind: InequalityKind = kind
        self.vertex_set: T_index_set = index_set(vertex_set)
        self.target: Optional[int] = target
        self.rhs: int = len(self.vertex_set) - 1
        # Quick sanity check:
        if (kind is InequalityKind.hull_induction) == (target is None):
            raise ValueError("Only hull inductions have a target!")

    def is_satisfied(self, selection: Iterable[int]) -> bool:
        """Evaluate the inequality at the selection (set of z_s = 1)."""
        selection = set(selection)
        lhs = sum(1 for v_idx in self.vertex_set if v_idx in selection)
        if self.target is not None and self.target in selection:
            lhs -= 1
        return lhs <= self.rhs

    def to_dictionary(self) -> dict:
        return {
            "kind": self.kind.value,
            "target": None if self.target is None else self.target + 1,
            "vertex_set": to_report_indices(self.vertex_set),
            "rhs": self.rhs
        }

    def __repr__(self) -> str:
        return f"ValidInequality({self.kind.value}, " \
               f"target={self.target}, vertices={list(self.vertex_set)})"


class BigMEntry(object):
    """Tightened and raw big-M of a selectable scenario.

    Attributes:
        scenario (int): 0-based scenario index.
        value (float): Bound over the capped safe region.
        raw (float): Bound over the whole box.
    """

    def __init__(self, scenario: int, value: float, raw: float):
        self.scenario: int = scenario
        self.value: float = value
        self.raw: float = raw

    def __repr__(self) -> str:
        return f"BigMEntry(s={self.scenario + 1}, value={self.value}, " \
               f"raw={self.raw})"


class PresolveConfig(object):
    """Switches and limits of the presolve pipeline.

    Attributes:
        singleton_bound (bool): Prune by singleton values.
        non_separability (bool): Run the separability stage.
        hull_expansion (bool): Add the safe hull to the safe set.
        sub_optimality (bool): Prune by nu(safe + {s}).
        non_positivity (bool): Add scenarios with a non-positive big-M.
        strict_positivity (bool): Prune scenarios violated on the region.
        big_m_tightening (bool): Tighten the big-M by the safe set and the
            upper bound (raw values are reported otherwise).
        hull_induction (bool): Emit the hull induction inequalities.
        hull_cut (bool): Emit the hull cut.
        separability_time_limit (Optional[float]): Seconds for the
            separability stage, None for the default of the dimension.
        threads (Optional[int]): Worker threads, None reads CCP_THREADS.
        warning_logger (Callable[[str], None]): Function that logs the
            warnings.
    """
    SWITCHES: Tuple[str, ...] = (
        "singleton_bound", "non_separability", "hull_expansion",
        "sub_optimality", "non_positivity", "strict_positivity",
        "big_m_tightening", "hull_induction", "hull_cut"
    )

    def __init__(self, *,
                 singleton_bound: bool = True,
                 non_separability: bool = True,
                 hull_expansion: bool = True,
                 sub_optimality: bool = True,
                 non_positivity: bool = True,
                 strict_positivity: bool = True,
                 big_m_tightening: bool = True,
                 hull_induction: bool = True,
                 hull_cut: bool = True,
                 separability_time_limit: Optional[float] = None,
                 threads: Optional[int] = None,
                 warning_logger: Optional[T_logger] = None):
        # Quick sanity check:
        if separability_time_limit is not None \
                and not separability_time_limit > 0:
            raise ValueError("Time limit has to be positive!")
        if threads is not None and threads < 1:
            raise ValueError("Number of threads has to be positive!")
        self.singleton_bound: bool = singleton_bound
        self.non_separability: bool = non_separability
        self.hull_expansion: bool = hull_expansion
        self.sub_optimality: bool = sub_optimality
        self.non_positivity: bool = non_positivity
        self.strict_positivity: bool = strict_positivity
        self.big_m_tightening: bool = big_m_tightening
        self.hull_induction: bool = hull_induction
        self.hull_cut: bool = hull_cut
        self.separability_time_limit: Optional[float] = \
            separability_time_limit
        self.threads: Optional[int] = threads
        self.warning_logger: T_logger = silent_if_none(warning_logger)

    @staticmethod
    def only(*switches: str, **options) -> 'PresolveConfig':
        """Configuration with every switch off except the listed ones.

        Raises:
            ValueError: If some switch name is unknown.
        """
        unknown = set(switches) - set(PresolveConfig.SWITCHES)
        if unknown:
            raise ValueError(f"Unknown presolve switches: {sorted(unknown)}")
        flags = {name: name in switches for name in PresolveConfig.SWITCHES}
        return PresolveConfig(**flags, **options)

    def time_limit(self, dim: int) -> float:
        """Separability time limit for the dimension in seconds."""
        if self.separability_time_limit is not None:
            return self.separability_time_limit
        return SEPARABILITY_TIME_LIMITS[dim]


class PresolveReport(object):
    """Everything the presolve established, ready for the solver.

    Attributes:
        partition (PartitionState): Final safe and pruned sets.
        bounds (Bounds): Bounds of the optimal value and the incumbent.
        big_m (List[BigMEntry]): Big-M of each selectable scenario.
        inequalities (List[ValidInequality]): Generated cuts.
        timings (Dict[str, float]): Duration of each stage in seconds.
    """

    def __init__(self,
                 partition: PartitionState,
                 bounds: Bounds,
                 /, *,  # noqa E999
                 big_m: Optional[List[BigMEntry]] = None,
                 inequalities: Optional[List[ValidInequality]] = None,
                 timings: Optional[Dict[str, float]] = None):
        self.partition: PartitionState = partition
        self.bounds: Bounds = bounds
        self.big_m: List[BigMEntry] = list(big_m or [])
        self.inequalities: List[ValidInequality] = list(inequalities or [])
        self.timings: Dict[str, float] = dict(timings or {})

    @property
    def certificates(self) -> List[Certificate]:
        """Certificates of the fixings ordered by scenario."""
        return [self.partition.certificates[s_idx]
                for s_idx in sorted(self.partition.certificates)]

    @property
    def total_time(self) -> float:
        return sum(self.timings.values())

    def to_dictionary(self) -> dict:
        """Export the report to the JSON compatible dictionary."""
        incumbent = self.bounds.incumbent
        return {
            "safe": to_report_indices(self.partition.safe),
            "pruned": to_report_indices(self.partition.pruned),
            "lower": json_float(self.bounds.lower),
            "upper": json_float(self.bounds.upper),
            "incumbent": None if incumbent is None
            else [float(coord) for coord in incumbent],
            "big_m": [{"s": entry.scenario + 1,
                       "value": json_float(entry.value),
                       "raw": json_float(entry.raw)}
                      for entry in self.big_m],
            "inequalities": [inequality.to_dictionary()
                             for inequality in self.inequalities],
            "certificates": [certificate.to_dictionary()
                             for certificate in self.certificates],
            "timings_ms": {stage: int(round(duration * 1000))
                           for stage, duration in self.timings.items()}
        }

    def to_json(self, indent: Optional[int] = None) -> str:
        """Dump the report to the JSON string."""
        return to_json_string(self.to_dictionary(), indent=indent)


def _exceeds(value: float, upper: float) -> bool:
    """Strict comparison value > upper with a relative margin."""
    if not numpy.isfinite(upper):
        return False
    return value > upper + PRUNING_SLACK * max(1.0, abs(upper))


def _cap(upper: float) -> float:
    """Objective cap that keeps every optimal point despite rounding."""
    if not numpy.isfinite(upper):
        return numpy.inf
    return upper + PRUNING_SLACK * max(1.0, abs(upper))


def _point_list(point: Optional[numpy.ndarray]) -> Optional[List[float]]:
    return None if point is None else [float(coord) for coord in point]


def _offer(instance: PBPInstance, bounds: Bounds,
           result: ProjectionResult) -> Bounds:
    """Use the minimiser as the incumbent if it is chance-feasible."""
    if not result.is_feasible:
        return bounds
    evaluation = chance_check(instance, result.point)
    if not evaluation.feasible:
        return bounds
    return bounds.improved(instance.objective(result.point), result.point,
                           evaluation.satisfied)


def singleton_bounds(instance: PBPInstance,
                     /, *,  # noqa E999
                     prune: bool = True,
                     threads: Optional[int] = None,
                     warning_logger: Optional[T_logger] = None
                     ) -> Tuple[Bounds, PartitionState]:
    """Bounds from the single scenario subproblems nu({s}).

    Every sound subset contains some s, so min nu({s}) bounds F* from below;
        each chance-feasible minimiser gives an upper bound. Scenarios whose
        value is above the upper bound are pruned.

    Args:
        instance (PBPInstance): Normalised instance.
        prune (bool): Prune the scenarios above the upper bound.
        threads (Optional[int]): Worker threads, None reads CCP_THREADS.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        Tuple[Bounds, PartitionState]: Bounds and the initial partition.
    """
    warning_logger = silent_if_none(warning_logger)
    results = map_concurrently(lambda s_idx: project(instance, (s_idx,)),
                               range(instance.size), threads=threads)
    bounds = Bounds(0.0, numpy.inf)
    values: Dict[int, float] = {}
    for s_idx, result in enumerate(results):
        if result.status is ProjectionStatus.max_iter:
            warning_logger(f"Singleton subproblem of scenario {s_idx + 1} "
                           f"did not converge; its bound is skipped.")
            continue
        values[s_idx] = result.value
        bounds = _offer(instance, bounds, result)
    # An unknown singleton only guarantees nu(empty set) >= 0
    lower = min(values.values()) if len(values) == instance.size else 0.0
    bounds = Bounds(min(lower, bounds.upper), bounds.upper,
                    incumbent=bounds.incumbent,
                    incumbent_selection=bounds.incumbent_selection)
    partition = PartitionState()
    if prune:
        partition = partition.with_fixings([
            Certificate(s_idx, CertificateKind.singleton_bound, "singleton",
                        {"value": value, "upper": bounds.upper,
                         "point": _point_list(bounds.incumbent)})
            for s_idx, value in values.items()
            if _exceeds(value, bounds.upper)
        ])
    return bounds, partition


def safe_by_separability(instance: PBPInstance,
                         partition: PartitionState,
                         /, *,  # noqa E999
                         time_limit: Optional[float] = None,
                         threads: Optional[int] = None,
                         warning_logger: Optional[T_logger] = None
                         ) -> PartitionState:
    """Add to the safe set every scenario that no sound subset separates.

    Rounds test all the selectable scenarios against a snapshot of the
        partition and repeat until nothing changes or the time runs out.

    Args:
        instance (PBPInstance): Normalised instance.
        partition (PartitionState): Current partition.
        time_limit (Optional[float]): Seconds for the whole stage, None for
            the default of the dimension.
        threads (Optional[int]): Worker threads, None reads CCP_THREADS.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        PartitionState: Partition with the extended safe set.
    """
    warning_logger = silent_if_none(warning_logger)
    if time_limit is None:
        time_limit = SEPARABILITY_TIME_LIMITS[instance.dim]
    deadline = time.perf_counter() + time_limit
    scenarios = instance.scenarios
    while True:
        if mass_reaches(scenarios.mass(partition.safe),
                        instance.required_mass):
            return partition
        snapshot = partition

        def _check(s_idx: int) -> Optional[bool]:
            if time.perf_counter() > deadline:
                return None
            return separability_check(scenarios, s_idx, snapshot.safe,
                                      snapshot.pruned, instance.tau
                                      ).separable

        candidates = snapshot.selectable(instance.size)
        verdicts = map_concurrently(_check, candidates, threads=threads)
        fixings = [
            Certificate(s_idx, CertificateKind.non_separability,
                        "separability",
                        {"safe": snapshot.safe, "pruned": snapshot.pruned})
            for s_idx, separable in zip(candidates, verdicts)
            if separable is False
        ]
        partition = snapshot.with_fixings(fixings)
        if None in verdicts:
            warning_logger(f"Separability stage stopped by the time limit "
                           f"of {time_limit:g} s.")
            return partition
        if not fixings:
            return partition


def expand_safe_hull(instance: PBPInstance,
                     partition: PartitionState) -> PartitionState:
    """Add every scenario lying in the hull of the safe scenarios.

    Args:
        instance (PBPInstance): The instance.
        partition (PartitionState): Current partition.

    Returns:
        PartitionState: Partition with the hull-closed safe set.

    Raises:
        PresolveContradictionError: If a pruned scenario lies in the hull.
    """
    if not partition.safe:
        return partition
    enclosed = enclosed_indices(instance.scenarios.points, partition.safe)
    contradictions = set(enclosed) & set(partition.pruned)
    if contradictions:
        raise PresolveContradictionError(
            f"Pruned scenarios {to_report_indices(contradictions)} lie in "
            f"the hull of the safe set; the upper bound is not sound.")
    return partition.with_fixings([
        Certificate(s_idx, CertificateKind.hull_expansion, "hull",
                    {"safe": partition.safe})
        for s_idx in enclosed if s_idx not in partition.safe
    ])


def positivity_pass(instance: PBPInstance,
                    partition: PartitionState,
                    bounds: Bounds,
                    /, *,  # noqa E999
                    non_positivity: bool = True,
                    strict_positivity: bool = True,
                    threads: Optional[int] = None,
                    warning_logger: Optional[T_logger] = None
                    ) -> PartitionState:
    """Fix the scenarios whose constraint has a constant sign over the safe
        region capped by the upper bound.

    Args:
        instance (PBPInstance): The instance.
        partition (PartitionState): Current partition.
        bounds (Bounds): Current bounds (upper may be inf).
        non_positivity (bool): Add scenarios with big-M <= 0 to safe.
        strict_positivity (bool): Prune scenarios with a positive minimum.
        threads (Optional[int]): Worker threads, None reads CCP_THREADS.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        PartitionState: The updated partition.
    """
    warning_logger = silent_if_none(warning_logger)
    f_cap = _cap(bounds.upper)
    safe = partition.safe

    def _classify(s_idx: int) -> Optional[Certificate]:
        if non_positivity:
            try:
                bound = big_m(instance, s_idx, safe, f_cap)
            except OracleInconsistencyError as error:
                warning_logger(str(error))
                return None
            if bound.value <= 0:
                return Certificate(s_idx, CertificateKind.non_positivity,
                                   "positivity",
                                   {"safe": safe, "f_cap": f_cap,
                                    "value": bound.value})
        if strict_positivity:
            distance = min_distance_lb(instance, s_idx, safe, f_cap)
            if distance > 0:
                return Certificate(s_idx, CertificateKind.strict_positivity,
                                   "positivity",
                                   {"safe": safe, "f_cap": f_cap,
                                    "value": distance})
        return None

    fixings = map_concurrently(_classify,
                               partition.selectable(instance.size),
                               threads=threads)
    return partition.with_fixings([certificate for certificate in fixings
                                   if certificate is not None])


def suboptimality_pass(instance: PBPInstance,
                       partition: PartitionState,
                       bounds: Bounds,
                       /, *,  # noqa E999
                       prune: bool = True,
                       threads: Optional[int] = None,
                       warning_logger: Optional[T_logger] = None
                       ) -> Tuple[PartitionState, Bounds]:
    """Solve nu(safe + {s}) for every selectable s.

    The values improve both bounds; scenarios strictly above the upper
        bound are pruned.

    Args:
        instance (PBPInstance): The instance.
        partition (PartitionState): Current partition.
        bounds (Bounds): Current bounds.
        prune (bool): Prune the scenarios above the upper bound.
        threads (Optional[int]): Worker threads, None reads CCP_THREADS.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        Tuple[PartitionState, Bounds]: Updated partition and bounds.
    """
    warning_logger = silent_if_none(warning_logger)
    if mass_reaches(instance.scenarios.mass(partition.safe),
                    instance.required_mass):
        return partition, bounds
    candidates = partition.selectable(instance.size)
    results = map_concurrently(
        lambda s_idx: project(instance, partition.safe + (s_idx,)),
        candidates, threads=threads)
    values: Dict[int, float] = {}
    for s_idx, result in zip(candidates, results):
        if result.status is ProjectionStatus.max_iter:
            warning_logger(f"Subproblem of the safe set with scenario "
                           f"{s_idx + 1} did not converge; it stays "
                           f"selectable.")
            continue
        values[s_idx] = result.value
        bounds = _offer(instance, bounds, result)
    if values and len(values) == len(candidates):
        bounds = bounds.raised(min(values.values()))
    if not prune:
        return partition, bounds
    partition = partition.with_fixings([
        Certificate(s_idx, CertificateKind.sub_optimality, "suboptimality",
                    {"safe": partition.safe, "value": value,
                     "upper": bounds.upper,
                     "point": _point_list(bounds.incumbent)})
        for s_idx, value in values.items()
        if _exceeds(value, bounds.upper)
    ])
    return partition, bounds


def _hull_seeds(instance: PBPInstance,
                partition: PartitionState) -> List[T_index_set]:
    seeds = []
    if len(partition.safe) >= instance.dim + 1:
        seeds.append(partition.safe)
    unpruned = index_set(set(range(instance.size)) - set(partition.pruned))
    if unpruned and unpruned not in seeds:
        seeds.append(unpruned)
    return seeds


def generate_inequalities(instance: PBPInstance,
                          partition: PartitionState,
                          /, *,  # noqa E999
                          hull_induction: bool = True,
                          hull_cut: bool = True) -> List[ValidInequality]:
    """Valid inequalities from the hulls of the safe and the non-pruned set.

    If every hull vertex of a seed is selected, each scenario inside the hull
        is satisfied too (hull induction). With equiprobable scenarios and
        enough enclosed mass, selecting all the vertices is never needed
        (hull cut); the cut is skipped when the safe hull already encloses
        every vertex.

    Args:
        instance (PBPInstance): The instance.
        partition (PartitionState): Current partition.
        hull_induction (bool): Emit the hull inductions.
        hull_cut (bool): Emit the hull cut.

    Returns:
        List[ValidInequality]: The inequalities.
    """
    points = instance.scenarios.points
    scenarios = instance.scenarios
    inequalities: List[ValidInequality] = []
    safe = set(partition.safe)
    for seed in _hull_seeds(instance, partition):
        vertices = vertex_indices(points, seed)
        enclosed = enclosed_indices(points, seed)
        if hull_induction:
            inequalities.extend(
                ValidInequality(InequalityKind.hull_induction, vertices,
                                target=t_idx)
                for t_idx in enclosed
                if t_idx not in vertices and t_idx not in safe
            )
    unpruned = index_set(set(range(instance.size)) - set(partition.pruned))
    if hull_cut and unpruned and scenarios.is_equiprobable:
        vertices = vertex_indices(points, unpruned)
        enclosed = enclosed_indices(points, unpruned)
        prob = float(scenarios.probs[0])
        safe_hull = set(enclosed_indices(points, partition.safe)) \
            if partition.safe else set()
        if mass_reaches(scenarios.mass(enclosed) - prob,
                        instance.required_mass) \
                and not set(vertices).issubset(safe_hull):
            inequalities.append(ValidInequality(InequalityKind.hull_cut,
                                                vertices))
    return inequalities


def _close_with_safe(instance: PBPInstance, partition: PartitionState,
                     bounds: Bounds) -> Bounds:
    """Raise the lower bound to nu(safe); a safe set reaching the required
        mass is optimal and closes the bounds."""
    if not partition.safe:
        return bounds
    result = project(instance, partition.safe)
    if result.status is ProjectionStatus.max_iter:
        return bounds
    if mass_reaches(instance.scenarios.mass(partition.safe),
                    instance.required_mass):
        if not result.is_feasible:
            return Bounds(numpy.inf, numpy.inf)
        if bounds.upper <= result.value:
            return Bounds(bounds.upper, bounds.upper,
                          incumbent=bounds.incumbent,
                          incumbent_selection=bounds.incumbent_selection)
        return Bounds(result.value, result.value, incumbent=result.point,
                      incumbent_selection=partition.safe)
    return bounds.raised(result.value)


def _timed(timings: Dict[str, float], stage: str, start: float) -> float:
    now = time.perf_counter()
    timings[stage] = now - start
    return now


def final_big_m(instance: PBPInstance,
                partition: PartitionState,
                bounds: Bounds,
                /, *,  # noqa E999
                tighten: bool = True,
                threads: Optional[int] = None,
                warning_logger: Optional[T_logger] = None
                ) -> Tuple[PartitionState, List[BigMEntry]]:
    """Big-M of every selectable scenario; a non-positive tightened value
        fixes the scenario as safe.

    Args:
        instance (PBPInstance): The instance.
        partition (PartitionState): Current partition.
        bounds (Bounds): Current bounds.
        tighten (bool): Use the safe set and the upper bound (raw values
            only otherwise).
        threads (Optional[int]): Worker threads, None reads CCP_THREADS.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        Tuple[PartitionState, List[BigMEntry]]: Partition and the big-M of
            the scenarios that stay selectable.
    """
    warning_logger = silent_if_none(warning_logger)
    f_cap = _cap(bounds.upper)
    candidates = partition.selectable(instance.size)

    def _entry(s_idx: int) -> BigMEntry:
        raw = big_m(instance, s_idx, ()).value
        if not tighten:
            return BigMEntry(s_idx, raw, raw)
        try:
            value = big_m(instance, s_idx, partition.safe, f_cap).value
        except OracleInconsistencyError as error:
            warning_logger(str(error))
            value = raw
        return BigMEntry(s_idx, min(value, raw), raw)

    entries = map_concurrently(_entry, candidates, threads=threads)
    partition = partition.with_fixings([
        Certificate(entry.scenario, CertificateKind.non_positivity, "big_m",
                    {"safe": partition.safe if tighten else (),
                     "f_cap": f_cap if tighten else numpy.inf,
                     "value": entry.value})
        for entry in entries if entry.value <= 0
    ])
    return partition, [entry for entry in entries if entry.value > 0]


def run_pipeline(instance: PBPInstance,
                 config: Optional[PresolveConfig] = None) -> PresolveReport:
    """Run the presolve stages in order: singleton bounds, separability,
        hull expansion with sub-optimality, positivity, big-M tightening and
        the valid inequalities.

    Args:
        instance (PBPInstance): Normalised instance.
        config (Optional[PresolveConfig]): Switches, None for all on.

    Returns:
        PresolveReport: Fixings with certificates, bounds, big-M values,
            inequalities and stage timings.

    Raises:
        PresolveContradictionError: If hull expansion reaches a pruned
            scenario.
    """
    if config is None:
        config = PresolveConfig()
    logger = config.warning_logger
    threads = config.threads
    timings: Dict[str, float] = {}
    start = time.perf_counter()

    bounds, partition = singleton_bounds(
        instance, prune=config.singleton_bound, threads=threads,
        warning_logger=logger)
    start = _timed(timings, "singleton", start)

    if config.non_separability:
        partition = safe_by_separability(
            instance, partition, time_limit=config.time_limit(instance.dim),
            threads=threads, warning_logger=logger)
    bounds = _close_with_safe(instance, partition, bounds)
    start = _timed(timings, "separability", start)

    if config.hull_expansion:
        partition = expand_safe_hull(instance, partition)
    if config.sub_optimality:
        partition, bounds = suboptimality_pass(
            instance, partition, bounds, threads=threads,
            warning_logger=logger)
    bounds = _close_with_safe(instance, partition, bounds)
    start = _timed(timings, "hull_suboptimality", start)

    if config.non_positivity or config.strict_positivity:
        partition = positivity_pass(
            instance, partition, bounds,
            non_positivity=config.non_positivity,
            strict_positivity=config.strict_positivity,
            threads=threads, warning_logger=logger)
    bounds = _close_with_safe(instance, partition, bounds)
    start = _timed(timings, "positivity", start)

    partition, entries = final_big_m(
        instance, partition, bounds, tighten=config.big_m_tightening,
        threads=threads, warning_logger=logger)
    bounds = _close_with_safe(instance, partition, bounds)
    start = _timed(timings, "big_m", start)

    inequalities = generate_inequalities(
        instance, partition, hull_induction=config.hull_induction,
        hull_cut=config.hull_cut)
    _timed(timings, "inequalities", start)
    return PresolveReport(partition, bounds, big_m=entries,
                          inequalities=inequalities, timings=timings)


def _incumbent_supports(instance: PBPInstance, witness: T_witness) -> bool:
    point = witness.get("point")
    if point is None:
        return False
    upper = witness["upper"]
    return chance_check(instance, point).feasible \
        and instance.objective(point) <= _cap(upper)


def replay_certificate(instance: PBPInstance,
                       certificate: Certificate) -> bool:
    """Re-verify a single fixing from its witness alone.

    Args:
        instance (PBPInstance): The instance the presolve ran on.
        certificate (Certificate): The certificate.

    Returns:
        bool: True if the recorded inference holds again.
    """
    s_idx = certificate.scenario
    witness = certificate.witness
    kind = certificate.kind
    safe = index_set(witness.get("safe", ()))
    if kind is CertificateKind.singleton_bound:
        result = project(instance, (s_idx,))
        return _incumbent_supports(instance, witness) \
            and _exceeds(result.value, witness["upper"])
    if kind is CertificateKind.sub_optimality:
        result = project(instance, safe + (s_idx,))
        return _incumbent_supports(instance, witness) \
            and _exceeds(result.value, witness["upper"])
    if kind is CertificateKind.non_separability:
        return not separability_check(
            instance.scenarios, s_idx, safe,
            index_set(witness.get("pruned", ())), instance.tau).separable
    if kind is CertificateKind.hull_expansion:
        points = instance.scenarios.points
        return bool(safe) and contains(hull(points[list(safe)]),
                                       points[s_idx])
    f_cap = witness.get("f_cap", numpy.inf)
    if f_cap is None:
        f_cap = numpy.inf
    if kind is CertificateKind.non_positivity:
        return big_m(instance, s_idx, safe, f_cap).value <= 0
    return min_distance_lb(instance, s_idx, safe, f_cap) > 0
