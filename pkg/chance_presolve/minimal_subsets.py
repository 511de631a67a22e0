from typing import List, Iterator, Optional, Set
from itertools import combinations
import time

import numpy

from .instance import PBPInstance, ScenarioSet
from .convex_oracle import project, ProjectionStatus
from .solve_result import SolveResult, SolveStatus
from .ccp_utils import (T_index_set, T_logger, index_set, mass_reaches,
                        map_concurrently, silent_if_none)

# Largest instance the enumeration accepts
ENUMERATION_LIMIT: int = 25


class OracleError(RuntimeError):
    """Raised when a projection needed for an exact answer did not
        converge."""
    pass


class MinimalSubsetFamily(object):
    """Collection of minimal subsets (a generated prefix or all of them).

    Attributes:
        subsets (List[T_index_set]): Members in generation order.
        exhausted (bool): True if no further minimal subset exists.
    """

    def __init__(self,
                 subsets: Optional[List[T_index_set]] = None,
                 /, *,  # noqa E999
                 exhausted: bool = False):
        self.subsets: List[T_index_set] = []
        self._members: Set[T_index_set] = set()
        self.exhausted: bool = exhausted
        for subset in subsets or []:
            self.add(subset)

    def add(self, subset: T_index_set) -> None:
        """Append the subset unless it is already a member."""
        subset = index_set(subset)
        if subset not in self._members:
            self._members.add(subset)
            self.subsets.append(subset)

    def __contains__(self, subset) -> bool:
        return index_set(subset) in self._members

    def __len__(self) -> int:
        return len(self.subsets)

    def __iter__(self) -> Iterator[T_index_set]:
        return iter(self.subsets)


def _required(scenarios: ScenarioSet, tau: float) -> float:
    return 1.0 - tau - scenarios.removed_mass


def is_minimal(scenarios: ScenarioSet, tau: float,
               subset: T_index_set) -> bool:
    """Test if the subset reaches the required mass and stops reaching it
        once its lightest scenario is removed.

    Args:
        scenarios (ScenarioSet): The scenarios.
        tau (float): Risk level.
        subset (T_index_set): Non-empty index set.

    Returns:
        bool: True if the subset is minimal.
    """
    subset = index_set(subset)
    if not subset:
        raise ValueError("Minimality is defined for non-empty subsets!")
    required = _required(scenarios, tau)
    mass = scenarios.mass(subset)
    lightest = float(numpy.min(scenarios.probs[list(subset)]))
    return mass_reaches(mass, required) \
        and not mass_reaches(mass - lightest, required)


def reduce_to_minimal(scenarios: ScenarioSet, tau: float,
                      subset: T_index_set) -> T_index_set:
    """Remove the lightest scenarios while the mass stays sufficient.

    Ties between equally light scenarios drop the highest index first.

    Args:
        scenarios (ScenarioSet): The scenarios.
        tau (float): Risk level.
        subset (T_index_set): A subset that reaches the required mass.

    Returns:
        T_index_set: Minimal subset contained in the input.

    Raises:
        ValueError: If the subset does not reach the required mass.
    """
    required = _required(scenarios, tau)
    selection = list(index_set(subset))
    if not mass_reaches(scenarios.mass(selection), required):
        raise ValueError("Only a sound subset can be reduced!")
    while len(selection) > 1:
        lightest = min(selection,
                       key=lambda idx: (scenarios.probs[idx], -idx))
        remaining = [idx for idx in selection if idx != lightest]
        if not mass_reaches(scenarios.mass(remaining), required):
            break
        selection = remaining
    return index_set(selection)


def _minimal_size(size: int, tau: float) -> int:
    """Smallest k with k / N reaching 1 - tau."""
    for subset_size in range(1, size + 1):
        if mass_reaches(subset_size / size, 1.0 - tau):
            return subset_size
    return size


def enumerate_equiprobable(size: int, tau: float) -> MinimalSubsetFamily:
    """All the minimal subsets of N equiprobable scenarios.

    Args:
        size (int): Number of scenarios N.
        tau (float): Risk level.

    Returns:
        MinimalSubsetFamily: All the subsets of size ceil(N (1 - tau)).

    Raises:
        ValueError: If N exceeds the enumeration limit.
    """
    if size > ENUMERATION_LIMIT:
        raise ValueError(f"Enumeration is limited to "
                         f"{ENUMERATION_LIMIT} scenarios!")
    subset_size = _minimal_size(size, tau)
    return MinimalSubsetFamily(
        [tuple(subset) for subset in combinations(range(size), subset_size)],
        exhausted=True
    )


def iterate_minimal_subsets(scenarios: ScenarioSet,
                            tau: float) -> Iterator[T_index_set]:
    """Generate every minimal subset by a depth-first search.

    Indices are branched in the order of decreasing probability (ties by
        index) with the inclusion branch first; a branch stops as soon as
        the selected mass reaches the requirement or can no longer reach it.

    Args:
        scenarios (ScenarioSet): The scenarios.
        tau (float): Risk level.

    Yields:
        T_index_set: Minimal subsets in the deterministic order.
    """
    required = _required(scenarios, tau)
    order = sorted(range(scenarios.size),
                   key=lambda idx: (-scenarios.probs[idx], idx))
    probs = [float(scenarios.probs[idx]) for idx in order]
    # Mass available from position onwards
    tail = [0.0] * (len(order) + 1)
    for position in range(len(order) - 1, -1, -1):
        tail[position] = tail[position + 1] + probs[position]

    selected: List[int] = []

    def _search(position: int, mass: float) -> Iterator[T_index_set]:
        if mass_reaches(mass, required):
            # Branch order makes the last selected scenario the lightest
            if not mass_reaches(mass - probs[selected[-1]], required):
                yield index_set(order[pos] for pos in selected)
            return
        if position == len(order) or \
                not mass_reaches(mass + tail[position], required):
            return
        selected.append(position)
        yield from _search(position + 1, mass + probs[position])
        selected.pop()
        yield from _search(position + 1, mass)

    yield from _search(0, 0.0)


def next_minimal_subset(scenarios: ScenarioSet,
                        tau: float,
                        seen: MinimalSubsetFamily) -> Optional[T_index_set]:
    """Find a minimal subset that is not in seen yet.

    Args:
        scenarios (ScenarioSet): The scenarios.
        tau (float): Risk level.
        seen (MinimalSubsetFamily): Already generated minimal subsets.

    Returns:
        Optional[T_index_set]: The next subset, None when exhausted.
    """
    for subset in iterate_minimal_subsets(scenarios, tau):
        if subset not in seen:
            return subset
    return None


def brute_force_solve(instance: PBPInstance,
                      /, *,  # noqa E999
                      warning_logger: Optional[T_logger] = None
                      ) -> SolveResult:
    """Solve the problem as the minimum of nu(S) over all minimal subsets.

    Args:
        instance (PBPInstance): Normalised instance with N <= 25.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        SolveResult: Optimal (or infeasible) result.

    Raises:
        ValueError: If the instance is too large.
        OracleError: If some projection hits the cycle cap.
    """
    warning_logger = silent_if_none(warning_logger)
    start = time.perf_counter()
    if instance.size > ENUMERATION_LIMIT:
        raise ValueError(f"Brute force is limited to {ENUMERATION_LIMIT} "
                         f"scenarios!")
    scenarios = instance.scenarios
    if scenarios.is_equiprobable and scenarios.removed_mass == 0:
        subsets = list(enumerate_equiprobable(instance.size, instance.tau))
    else:
        subsets = list(iterate_minimal_subsets(scenarios, instance.tau))
    results = map_concurrently(lambda subset: project(instance, subset),
                               subsets)

    best_value, best_point, best_subset = numpy.inf, None, ()
    for subset, result in zip(subsets, results):
        if result.status is ProjectionStatus.max_iter:
            raise OracleError(f"Projection onto the subset "
                              f"{[idx + 1 for idx in subset]} did not "
                              f"converge.")
        if result.is_feasible and result.value < best_value:
            best_value, best_point, best_subset = \
                result.value, result.point, subset
    elapsed = time.perf_counter() - start
    if best_point is None:
        warning_logger(f"None of the {len(subsets)} minimal subsets has a "
                       f"feasible subproblem.")
        return SolveResult(SolveStatus.infeasible, numpy.inf,
                           lower=numpy.inf, upper=numpy.inf,
                           nodes_explored=len(subsets), wall_time=elapsed)
    return SolveResult(SolveStatus.optimal, best_value,
                       minimizer=best_point, selection=best_subset,
                       lower=best_value, upper=best_value,
                       nodes_explored=len(subsets), wall_time=elapsed)
