from typing import Optional, Dict, Union, List
from enum import Enum

import numpy

from .ccp_utils import T_index_set, to_report_indices
from .serialization import json_float, to_json_string

# ==== TYPES ====
T_result_dict = Dict[str, Union[str, int, float, None, List]]
# ===============


class SolveStatus(Enum):
    """Final status of an exact solve."""
    # Bounds closed
    optimal = "optimal"
    # No sound selection has a feasible point
    infeasible = "infeasible"
    # Stopped by the time limit (or by an unresolved projection)
    time_limit = "time_limit"


class SolveResult(object):
    """Outcome of the branch-and-bound solver or of the enumeration.

    Attributes:
        status (SolveStatus): Final status.
        value (float): Optimal value, or the best upper bound (inf if none).
        minimizer (Optional[numpy.ndarray]): Point attaining the value.
        selection (T_index_set): Enforced scenarios of the solution.
        lower (float): Best proven lower bound.
        upper (float): Best upper bound.
        nodes_explored (int): Processed search nodes (or subsets).
        wall_time (float): Duration in seconds.
    """

    def __init__(self,
                 status: SolveStatus,
                 value: float,
                 /, *,  # noqa E999
                 minimizer: Optional[numpy.ndarray] = None,
                 selection: T_index_set = (),
                 lower: float = -numpy.inf,
                 upper: float = numpy.inf,
                 nodes_explored: int = 0,
                 wall_time: float = 0.0):
        self.status: SolveStatus = status
        self.value: float = value
        self.minimizer: Optional[numpy.ndarray] = minimizer
        self.selection: T_index_set = selection
        self.lower: float = lower
        self.upper: float = upper
        self.nodes_explored: int = nodes_explored
        self.wall_time: float = wall_time

    @property
    def solved(self) -> bool:
        """True if the optimality was proven."""
        return self.status is SolveStatus.optimal

    def to_dictionary(self) -> T_result_dict:
        """Export the result to the JSON compatible dictionary (1-based
            scenario indices, infinities as null).
        """
        return {
            "status": self.status.value,
            "value": json_float(self.value),
            "x": None if self.minimizer is None else [
                float(coordinate) for coordinate in self.minimizer],
            "selection": to_report_indices(self.selection),
            "lower": json_float(self.lower),
            "upper": json_float(self.upper),
            "nodes": int(self.nodes_explored),
            "wall_ms": int(round(self.wall_time * 1000))
        }

    def to_json(self, indent: Optional[int] = None) -> str:
        """Dump the result to the JSON string."""
        return to_json_string(self.to_dictionary(), indent=indent)

    def __repr__(self) -> str:
        return f"SolveResult(status={self.status.value}, value={self.value}," \
               f" selection={to_report_indices(self.selection)})"
