from typing import Dict, List, Optional, Set, Tuple
import heapq
import itertools
import time

import numpy

from .instance import PBPInstance, chance_check
from .convex_oracle import project, big_m, ProjectionResult, ProjectionStatus
from .minimal_subsets import reduce_to_minimal
from .presolve import PresolveReport, PartitionState, ValidInequality
from .solve_result import SolveResult, SolveStatus
from .ccp_utils import (T_index_set, T_logger, index_set, mass_reaches,
                        silent_if_none, FEASIBILITY_TOLERANCE)

# A node survives only if its bound can still improve the incumbent by this
IMPROVEMENT_TOLERANCE: float = 1e-9
# Relative agreement required by verify
VERIFY_TOLERANCE: float = 1e-6


class SolverConfig(object):
    """Settings of the branch-and-bound search.

    Attributes:
        time_limit (float): Seconds before the search stops (inf for none).
        use_inequalities (bool): Propagate the valid inequalities.
        use_big_m (bool): Force the scenarios with a non-positive raw big-M
            when no presolve report is given.
        warning_logger (Callable[[str], None]): Function that logs the
            warnings.
    """

    def __init__(self, *,
                 time_limit: float = numpy.inf,
                 use_inequalities: bool = True,
                 use_big_m: bool = True,
                 warning_logger: Optional[T_logger] = None):
        # Quick sanity check:
        if not time_limit > 0:
            raise ValueError("Time limit has to be positive!")
        self.time_limit: float = float(time_limit)
        self.use_inequalities: bool = use_inequalities
        self.use_big_m: bool = use_big_m
        self.warning_logger: T_logger = silent_if_none(warning_logger)


class BBNode(object):
    """Node of the search: scenarios fixed to one and to zero.

    Attributes:
        ones (T_index_set): Enforced scenarios.
        zeros (T_index_set): Relaxed scenarios.
        bound (float): Lower bound of every completion (nu of the parent's
            ones until the node is evaluated).
    """

    def __init__(self, ones: T_index_set, zeros: T_index_set, bound: float):
        self.ones: T_index_set = index_set(ones)
        self.zeros: T_index_set = index_set(zeros)
        self.bound: float = bound

    def __repr__(self) -> str:
        return f"BBNode(ones={list(self.ones)}, zeros={list(self.zeros)}, " \
               f"bound={self.bound})"


class Incumbent(object):
    """Best known solution: nu(selection) attained at point."""

    def __init__(self, value: float, point: numpy.ndarray,
                 selection: T_index_set):
        self.value: float = value
        self.point: numpy.ndarray = point
        self.selection: T_index_set = selection

    def __iter__(self):
        return iter((self.value, self.point, self.selection))

    def __repr__(self) -> str:
        return f"Incumbent(value={self.value}, " \
               f"selection={list(self.selection)})"


def _settle(instance: PBPInstance,
            selection: T_index_set) -> Optional[Incumbent]:
    """Reduce the sound selection to a minimal one and solve it."""
    selection = reduce_to_minimal(instance.scenarios, instance.tau,
                                  selection)
    result = project(instance, selection)
    if not result.is_feasible:
        return None
    return Incumbent(result.value, result.point, selection)


def _better(first: Optional[Incumbent],
            second: Optional[Incumbent]) -> Optional[Incumbent]:
    if first is None:
        return second
    if second is None or first.value <= second.value:
        return first
    return second


def _distances(instance: PBPInstance) -> numpy.ndarray:
    return numpy.linalg.norm(instance.scenarios.points - instance.x_bar,
                             axis=1)


def greedy_incumbent(instance: PBPInstance,
                     partition: Optional[PartitionState] = None
                     ) -> Optional[Incumbent]:
    """Sound subset built from the safe set by adding the selectable
        scenarios closest to x_bar until the mass is reached.

    Args:
        instance (PBPInstance): The instance.
        partition (Optional[PartitionState]): Fixings, None for none.

    Returns:
        Optional[Incumbent]: The value, minimiser and selection, None if no
            sound subset exists or its subproblem is empty.
    """
    if partition is None:
        partition = PartitionState()
    scenarios = instance.scenarios
    required = instance.required_mass
    available = index_set(set(range(instance.size)) - set(partition.pruned))
    if not mass_reaches(scenarios.mass(available), required):
        return None
    distances = _distances(instance)
    selection = list(partition.safe)
    for s_idx in sorted(partition.selectable(instance.size),
                        key=lambda idx: (distances[idx], idx)):
        if mass_reaches(scenarios.mass(selection), required):
            break
        selection.append(s_idx)
    selection = index_set(selection)
    result = project(instance, selection)
    if not result.is_feasible:
        return None
    return Incumbent(result.value, result.point, selection)


class _Propagator(object):
    """Unit propagation of the mass constraint and of the inequalities."""

    def __init__(self, instance: PBPInstance,
                 inequalities: List[ValidInequality]):
        self.instance = instance
        self.inequalities = inequalities

    def __call__(self, ones: Set[int],
                 zeros: Set[int]) -> Optional[Tuple[Set[int], Set[int]]]:
        scenarios = self.instance.scenarios
        required = self.instance.required_mass
        changed = True
        while changed:
            changed = False
            free = [idx for idx in range(scenarios.size)
                    if idx not in ones and idx not in zeros]
            available = scenarios.mass(ones) + scenarios.mass(free)
            if not mass_reaches(available, required):
                return None
            # Scenarios without which the mass cannot be reached
            for s_idx in free:
                if not mass_reaches(available - scenarios.probs[s_idx],
                                    required):
                    ones.add(s_idx)
                    changed = True
            if changed:
                continue
            for inequality in self.inequalities:
                missing = [v_idx for v_idx in inequality.vertex_set
                           if v_idx not in ones]
                target = inequality.target
                target_off = target is None or target in zeros
                if not missing:
                    if target_off:
                        return None
                    if target not in ones:
                        ones.add(target)
                        changed = True
                elif len(missing) == 1 and target_off \
                        and missing[0] not in zeros:
                    zeros.add(missing[0])
                    changed = True
        return ones, zeros


def _branching_order(instance: PBPInstance) -> List[int]:
    distances = _distances(instance)
    probs = instance.scenarios.probs
    return sorted(range(instance.size),
                  key=lambda idx: (-probs[idx], distances[idx], idx))


def solve(instance: PBPInstance,
          report: Optional[PresolveReport] = None,
          config: Optional[SolverConfig] = None) -> SolveResult:
    """Exact best-first branch-and-bound over the enforced scenarios.

    A node fixes scenarios to one (enforced) or zero (relaxed); its bound
        is nu(ones). A node is resolved once the ones reach the required mass
        or the minimiser of nu(ones) is itself chance-feasible.

    Args:
        instance (PBPInstance): Normalised instance.
        report (Optional[PresolveReport]): Presolve fixings, bounds, big-M
            values and inequalities, None for a direct solve.
        config (Optional[SolverConfig]): Settings, None for the defaults.

    Returns:
        SolveResult: The optimum, or the bounds reached in the time limit.
    """
    if config is None:
        config = SolverConfig()
    logger = config.warning_logger
    start = time.perf_counter()
    deadline = start + config.time_limit
    scenarios = instance.scenarios

    partition = report.partition if report is not None else PartitionState()
    ones, zeros = set(partition.safe), set(partition.pruned)
    # Presolve already turns every non-positive big-M into a safe fixing
    if config.use_big_m and report is None:
        ones.update(s_idx for s_idx in range(instance.size)
                    if big_m(instance, s_idx, ()).value <= 0)
    inequalities = report.inequalities \
        if report is not None and config.use_inequalities else []
    propagate = _Propagator(instance, inequalities)

    incumbent = greedy_incumbent(instance, partition)
    if report is not None and report.bounds.incumbent is not None:
        selection = chance_check(instance, report.bounds.incumbent).satisfied
        if mass_reaches(scenarios.mass(selection), instance.required_mass):
            incumbent = _better(incumbent, _settle(instance, selection))

    order = _branching_order(instance)
    cache: Dict[T_index_set, ProjectionResult] = {}
    counter = itertools.count()
    queue: List[Tuple[float, int, BBNode]] = []
    heapq.heappush(queue, (0.0, next(counter),
                           BBNode(tuple(ones), tuple(zeros), 0.0)))
    explored, unresolved, timed_out = 0, False, False
    lower_open = numpy.inf

    def _cutoff() -> float:
        if incumbent is None:
            return numpy.inf
        return incumbent.value - IMPROVEMENT_TOLERANCE

    while queue:
        if time.perf_counter() > deadline:
            timed_out = True
            break
        key, _, node = heapq.heappop(queue)
        if key > _cutoff():
            continue
        propagated = propagate(set(node.ones), set(node.zeros))
        if propagated is None:
            continue
        node_ones, node_zeros = index_set(propagated[0]), \
            index_set(propagated[1])
        explored += 1
        if node_ones not in cache:
            cache[node_ones] = project(instance, node_ones)
        result = cache[node_ones]
        if result.status is ProjectionStatus.empty:
            continue
        if result.status is ProjectionStatus.max_iter:
            # Unknown subproblem: keep the parent bound and branch
            bound = key
        else:
            bound = max(key, result.value)
        if bound > _cutoff():
            continue
        sound = mass_reaches(scenarios.mass(node_ones),
                             instance.required_mass)
        if result.is_feasible:
            evaluation = chance_check(instance, result.point)
            if evaluation.feasible:
                candidate = _settle(instance, evaluation.satisfied)
                if candidate is None or candidate.value > result.value:
                    candidate = Incumbent(result.value, result.point,
                                          evaluation.satisfied)
                incumbent = _better(incumbent, candidate)
                continue
            if sound:
                incumbent = _better(incumbent, _settle(instance, node_ones))
                continue
        elif sound:
            logger(f"Leaf with {len(node_ones)} enforced scenarios did not "
                   f"converge; optimality cannot be proven.")
            unresolved = True
            lower_open = min(lower_open, bound)
            continue
        fixed = set(node_ones) | set(node_zeros)
        branch = next((s_idx for s_idx in order if s_idx not in fixed),
                      None)
        if branch is None:
            continue
        heapq.heappush(queue, (bound, next(counter),
                               BBNode(node_ones + (branch,), node_zeros,
                                      bound)))
        heapq.heappush(queue, (bound, next(counter),
                               BBNode(node_ones, node_zeros + (branch,),
                                      bound)))

    elapsed = time.perf_counter() - start
    if timed_out:
        lower_open = min([lower_open] + [entry[0] for entry in queue])
    upper = numpy.inf if incumbent is None else incumbent.value
    lower = min(lower_open, upper)
    if report is not None:
        lower = min(max(lower, report.bounds.lower), upper)
    if timed_out or unresolved:
        logger(f"Search stopped after {explored} nodes with the gap "
               f"[{lower:g}, {upper:g}].")
        return SolveResult(
            SolveStatus.time_limit, upper,
            minimizer=None if incumbent is None else incumbent.point,
            selection=() if incumbent is None else incumbent.selection,
            lower=lower, upper=upper, nodes_explored=explored,
            wall_time=elapsed)
    if incumbent is None:
        return SolveResult(SolveStatus.infeasible, numpy.inf,
                           lower=numpy.inf, upper=numpy.inf,
                           nodes_explored=explored, wall_time=elapsed)
    return SolveResult(SolveStatus.optimal, incumbent.value,
                       minimizer=incumbent.point,
                       selection=incumbent.selection,
                       lower=incumbent.value, upper=incumbent.value,
                       nodes_explored=explored, wall_time=elapsed)


def _close(first: float, second: float) -> bool:
    return abs(first - second) <= VERIFY_TOLERANCE * max(1.0, abs(second))


def verify(instance: PBPInstance, result: SolveResult) -> bool:
    """Check an optimal result independently of the search.

    Args:
        instance (PBPInstance): The instance.
        result (SolveResult): Result to check.

    Returns:
        bool: True if the minimiser is chance-feasible, satisfies every
            selected constraint, the selection reaches the required mass and
            nu(selection) as well as F(minimiser) equal the value.
    """
    if result.status is not SolveStatus.optimal or result.minimizer is None:
        return False
    selection = index_set(result.selection)
    if not selection or not mass_reaches(instance.scenarios.mass(selection),
                                         instance.required_mass):
        return False
    if not chance_check(instance, result.minimizer).feasible:
        return False
    values = instance.constraint_values(result.minimizer)[list(selection)]
    if numpy.any(values > FEASIBILITY_TOLERANCE):
        return False
    if not _close(instance.objective(result.minimizer), result.value):
        return False
    check = project(instance, selection)
    return check.is_feasible and _close(check.value, result.value)
