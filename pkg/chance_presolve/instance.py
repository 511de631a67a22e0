from typing import List, Tuple, Dict, Optional, Iterable, Union
import json

import numpy

from .norm_type import NormType
from .ccp_utils import (T_index_set, T_logger, index_set, mass_reaches,
                        silent_if_none, CONSTRAINT_TOLERANCE)

# ==== TYPES ====
# Instance in the JSON compatible dictionary form
T_instance_dict = Dict[str, Union[int, float, str, List[float], List[dict]]]
# ===============

# Keys of the instance JSON object
REQUIRED_FIELDS = ("p", "tau", "o", "o_tilde", "R", "R_bar", "x_bar",
                   "scenarios")
OPTIONAL_FIELDS = ("removed_mass",)
# Tolerance on the total probability mass
PROBABILITY_SUM_TOLERANCE: float = 1e-9


class InstanceError(ValueError):
    """Raised when the instance cannot be built, read or normalised."""
    pass


class ScenarioSet(object):
    """Finite support of the random vector: N points with their masses.

    Attributes:
        dim (int): Dimension p of the uncertainty (and of the decision).
        points (numpy.ndarray): Read-only N x p array of the scenarios.
        probs (numpy.ndarray): Read-only vector of N probabilities.
        removed_mass (float): Mass of the scenarios that were deleted by
            normalisation because their region does not meet the box.
    """

    def __init__(self,
                 dim: int,
                 points: Iterable[Iterable[float]],
                 probs: Iterable[float],
                 /, *,  # noqa E999
                 removed_mass: float = 0.0):
        """Create the scenario set.

        Args:
            dim (int): Dimension p of the points.
            points (Iterable[Iterable[float]]): Coordinates of each scenario.
            probs (Iterable[float]): Probability of each scenario.
            removed_mass (float): Mass deleted by the normalisation.

        Raises:
            InstanceError: If the points do not form a rectangular array or
                the number of probabilities differs from number of points.
        """
        try:
            points = numpy.array(points, dtype=float)
            probs = numpy.array(probs, dtype=float).reshape(-1)
        except (TypeError, ValueError):
            raise InstanceError("Scenario coordinates and probabilities have"
                                " to be numbers of rectangular shape!")
        if points.size == 0:
            points = points.reshape(0, int(dim))
        if points.ndim != 2:
            raise InstanceError("Scenario coordinates have to be a list of "
                                "vectors of the same length!")
        if points.shape[0] != probs.shape[0]:
            raise InstanceError("Every scenario needs exactly one "
                                "probability!")
        points.setflags(write=False)
        probs.setflags(write=False)
        self.dim: int = int(dim)
        self.points: numpy.ndarray = points
        self.probs: numpy.ndarray = probs
        self.removed_mass: float = float(removed_mass)

    @property
    def size(self) -> int:
        """Number of scenarios N."""
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def mass(self, indices: Iterable[int]) -> float:
        """Total probability of the scenarios with given indices.

        Args:
            indices (Iterable[int]): 0-based scenario indices.

        Returns:
            float: Sum of their probabilities (0 for no index).
        """
        indices = list(indices)
        if not indices:
            return 0.0
        return float(numpy.sum(self.probs[indices]))

    @property
    def total_mass(self) -> float:
        """Probability of all the scenarios kept in the set."""
        return float(numpy.sum(self.probs))

    @property
    def is_equiprobable(self) -> bool:
        """True if all the scenarios share the same probability."""
        if self.size == 0:
            return True
        return bool(numpy.all(self.probs == self.probs[0]))

    def subset(self, keep: Iterable[int],
               removed_mass: float) -> 'ScenarioSet':
        """Build a scenario set holding only the scenarios in keep.
        """
        keep = list(keep)
        return ScenarioSet(self.dim, self.points[keep].reshape(-1, self.dim),
                           self.probs[keep], removed_mass=removed_mass)


class PBPInstance(object):
    """Probabilistic ball projection problem: find the point closest to
        x_bar (in the objective norm) that lies in the ball of radius R
        around the random point with probability at least 1 - tau, inside
        the box [-R_bar, R_bar]^p.

    Attributes:
        scenarios (ScenarioSet): Support of the random point.
        x_bar (numpy.ndarray): Reference point.
        radius (float): Ball radius R.
        box_radius (float): Radius R_bar of the box X.
        objective_norm (NormType): Objective norm o.
        constraint_norm (NormType): Ball norm õ.
        tau (float): Risk level (tolerated violation probability).
    """

    def __init__(self,
                 scenarios: ScenarioSet,
                 x_bar: Iterable[float],
                 /, *,  # noqa E999
                 radius: float,
                 box_radius: float,
                 tau: float,
                 objective_norm: NormType = NormType.L2,
                 constraint_norm: NormType = NormType.L1):
        """Create the problem datum.

        Args:
            scenarios (ScenarioSet): Support of the random point.
            x_bar (Iterable[float]): Reference point.
            radius (float): Ball radius R.
            box_radius (float): Radius R_bar of the box X.
            tau (float): Risk level.
            objective_norm (NormType): Objective norm o.
            constraint_norm (NormType): Ball norm õ.
        """
        x_bar = numpy.array(x_bar, dtype=float).reshape(-1)
        x_bar.setflags(write=False)
        self.scenarios: ScenarioSet = scenarios
        self.x_bar: numpy.ndarray = x_bar
        self.radius: float = float(radius)
        self.box_radius: float = float(box_radius)
        self.tau: float = float(tau)
        self.objective_norm: NormType = NormType(objective_norm)
        self.constraint_norm: NormType = NormType(constraint_norm)

    @property
    def dim(self) -> int:
        """Dimension p."""
        return self.scenarios.dim

    @property
    def size(self) -> int:
        """Number of scenarios N."""
        return self.scenarios.size

    @property
    def required_mass(self) -> float:
        """Mass the selected scenarios have to reach.

        Deleting a region-infeasible scenario of mass m lowers tau by m and
            keeps the original requirement, so the remaining scenarios have
            to reach 1 - tau - removed_mass.
        """
        return 1.0 - self.tau - self.scenarios.removed_mass

    def objective(self, x: Iterable[float]) -> float:
        """Objective value F(x) = ||x - x_bar||_o."""
        return float(self.objective_norm.evaluate(
            numpy.asarray(x, dtype=float) - self.x_bar))

    def constraint_values(self, x: Iterable[float]) -> numpy.ndarray:
        """Values c(x, xi^(s)) = ||x - xi^(s)||_õ - R of every scenario."""
        deltas = numpy.asarray(x, dtype=float)[None, :] \
            - self.scenarios.points
        return self.constraint_norm.evaluate(deltas) - self.radius

    def replace(self, /, *,  # noqa E999
                scenarios: Optional[ScenarioSet] = None,
                tau: Optional[float] = None) -> 'PBPInstance':
        """Copy of this instance with the scenarios or tau replaced."""
        return PBPInstance(
            self.scenarios if scenarios is None else scenarios,
            self.x_bar,
            radius=self.radius,
            box_radius=self.box_radius,
            tau=self.tau if tau is None else tau,
            objective_norm=self.objective_norm,
            constraint_norm=self.constraint_norm
        )

    def to_dictionary(self) -> T_instance_dict:
        """Export the instance to the JSON compatible dictionary.

        Returns:
            dict: Instance in the schema read by from_dictionary.
        """
        export = {
            "p": self.dim,
            "tau": self.tau,
            "o": self.objective_norm.value,
            "o_tilde": self.constraint_norm.value,
            "R": self.radius,
            "R_bar": self.box_radius,
            "x_bar": self.x_bar.tolist(),
            "scenarios": [
                {"xi": point.tolist(), "pi": float(prob)}
                for point, prob in zip(self.scenarios.points,
                                       self.scenarios.probs)
            ]
        }
        if self.scenarios.removed_mass > 0:
            export["removed_mass"] = self.scenarios.removed_mass
        return export

    def to_json(self) -> str:
        """Dump the instance to the JSON string."""
        return json.dumps(self.to_dictionary(), indent=2)

    @staticmethod
    def from_dictionary(data: T_instance_dict) -> 'PBPInstance':
        """Read the instance from the dictionary.

        Args:
            data (dict): Dictionary in the instance schema.

        Returns:
            PBPInstance: The instance (not validated).

        Raises:
            InstanceError: If fields are missing, unknown or malformed.
        """
        if not isinstance(data, dict):
            raise InstanceError("Instance has to be a JSON object!")
        unknown = sorted(set(data) - set(REQUIRED_FIELDS)
                         - set(OPTIONAL_FIELDS))
        if unknown:
            raise InstanceError(f"Unknown instance fields: "
                                f"{', '.join(unknown)}")
        missing = [key for key in REQUIRED_FIELDS if key not in data]
        if missing:
            raise InstanceError(f"Missing instance fields: "
                                f"{', '.join(missing)}")
        try:
            scenarios = data["scenarios"]
            for scenario in scenarios:
                if set(scenario) != {"xi", "pi"}:
                    raise InstanceError("Every scenario has to contain "
                                        "exactly the fields 'xi' and 'pi'!")
            scenario_set = ScenarioSet(
                int(data["p"]),
                [scenario["xi"] for scenario in scenarios],
                [scenario["pi"] for scenario in scenarios],
                removed_mass=float(data.get("removed_mass", 0.0))
            )
            return PBPInstance(
                scenario_set,
                data["x_bar"],
                radius=float(data["R"]),
                box_radius=float(data["R_bar"]),
                tau=float(data["tau"]),
                objective_norm=NormType(data["o"]),
                constraint_norm=NormType(data["o_tilde"])
            )
        except InstanceError:
            raise
        except (TypeError, ValueError, KeyError) as error:
            raise InstanceError(f"Malformed instance: {error}")


class ChanceEvaluation(object):
    """Result of the evaluation of the probabilistic constraint at a point.

    Attributes:
        satisfied_mass (float): Mass of the satisfied scenarios.
        satisfied (T_index_set): Indices of satisfied scenarios.
        feasible (bool): True if the satisfied mass reaches the requirement.
    """

    def __init__(self,
                 satisfied_mass: float,
                 satisfied: T_index_set,
                 feasible: bool):
        self.satisfied_mass: float = satisfied_mass
        self.satisfied: T_index_set = satisfied
        self.feasible: bool = feasible

    def __repr__(self) -> str:
        return f"ChanceEvaluation(satisfied_mass={self.satisfied_mass}, " \
               f"satisfied={self.satisfied}, feasible={self.feasible})"


def _violations(instance: PBPInstance, allow_zero_mass: bool) -> List[str]:
    """Collect descriptions of the violated instance invariants."""
    issues: List[str] = []
    scenarios = instance.scenarios
    if scenarios.dim not in (2, 3):
        issues.append("dimension p must be 2 or 3")
    if scenarios.size < 1:
        issues.append("at least one scenario is required")
    if scenarios.points.shape[1] != scenarios.dim:
        issues.append(f"scenarios have {scenarios.points.shape[1]} "
                      f"coordinates, expected {scenarios.dim}")
    for s_idx in range(scenarios.size):
        if not numpy.all(numpy.isfinite(scenarios.points[s_idx])):
            issues.append(f"scenario {s_idx + 1} has non-finite coordinates")
        prob = scenarios.probs[s_idx]
        if not numpy.isfinite(prob) or prob < 0 \
                or (prob == 0 and not allow_zero_mass):
            issues.append(f"scenario {s_idx + 1} must have positive "
                          f"probability")
    if not 0.0 <= scenarios.removed_mass < 1.0:
        issues.append("removed mass must lie in [0,1)")
    total = scenarios.total_mass + scenarios.removed_mass
    if scenarios.size > 0 and abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
        issues.append(f"probabilities sum to {total:g}")
    if instance.x_bar.shape[0] != scenarios.dim:
        issues.append(f"x_bar has {instance.x_bar.shape[0]} coordinates, "
                      f"expected {scenarios.dim}")
    elif not numpy.all(numpy.isfinite(instance.x_bar)):
        issues.append("x_bar has non-finite coordinates")
    if not instance.radius > 0:
        issues.append("R must be positive")
    if not instance.box_radius > 0:
        issues.append("R_bar must be positive")
    if instance.constraint_norm not in (NormType.L1, NormType.Linf):
        issues.append("o_tilde must be L1 or Linf")
    if not 0.0 < instance.tau < 1.0:
        issues.append("tau must lie in (0,1)")
    return issues


def validate(instance: PBPInstance) -> List[str]:
    """Check the instance invariants.

    Args:
        instance (PBPInstance): Instance to be checked.

    Returns:
        List[str]: One description per violation, empty if valid.
    """
    return _violations(instance, allow_zero_mass=False)


def region_meets_box(instance: PBPInstance, s_idx: int) -> bool:
    """Decide if the ball of scenario s intersects the box X.

    The closest box point to a scenario in any coordinate-wise monotone norm
        is its coordinate clip, so the test is exact for L1 and Linf.

    Args:
        instance (PBPInstance): The instance.
        s_idx (int): 0-based scenario index.

    Returns:
        bool: True if X and the ball of the scenario share a point.
    """
    point = instance.scenarios.points[s_idx]
    closest = numpy.clip(point, -instance.box_radius, instance.box_radius)
    distance = instance.constraint_norm.evaluate(point - closest)
    return bool(distance <= instance.radius)


def normalize(instance: PBPInstance,
              /, *,  # noqa E999
              warning_logger: Optional[T_logger] = None
              ) -> Tuple[PBPInstance, List[str]]:
    """Delete the scenarios with zero mass or with a region disjoint from X.

    Deleting a region-infeasible scenario of mass m replaces tau by tau - m.

    Args:
        instance (PBPInstance): Instance to be normalised.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        Tuple[PBPInstance, List[str]]: Normalised instance and the log of the
            adjustments (empty if the instance is unchanged).

    Raises:
        InstanceError: If the instance violates other invariants, or if the
            adjusted tau is not positive.
    """
    warning_logger = silent_if_none(warning_logger)
    # Quick sanity check:
    issues = _violations(instance, allow_zero_mass=True)
    if issues:
        raise InstanceError("Invalid instance: " + "; ".join(issues))

    log: List[str] = []
    keep: List[int] = []
    tau = instance.tau
    removed_mass = instance.scenarios.removed_mass
    for s_idx in range(instance.size):
        prob = float(instance.scenarios.probs[s_idx])
        if prob == 0:
            log.append(f"scenario {s_idx + 1} removed: zero probability")
        elif not region_meets_box(instance, s_idx):
            tau -= prob
            removed_mass += prob
            log.append(f"scenario {s_idx + 1} removed: its ball does not "
                       f"meet the box; tau reduced by {prob:g} to {tau:g}")
        else:
            keep.append(s_idx)
    if not log:
        return instance, log
    for message in log:
        warning_logger(message)
    if tau <= 0 or not keep:
        raise InstanceError(f"Normalisation drives tau to {tau:g}; the "
                            f"problem is the robust counterpart or "
                            f"infeasible.")
    scenarios = instance.scenarios.subset(keep, removed_mass)
    return instance.replace(scenarios=scenarios, tau=tau), log


def chance_check(instance: PBPInstance,
                 x: Iterable[float]) -> ChanceEvaluation:
    """Evaluate the probabilistic constraint at the point x.

    Args:
        instance (PBPInstance): The instance.
        x (Iterable[float]): Finite point in R^p.

    Returns:
        ChanceEvaluation: Satisfied scenarios, their mass and feasibility.
    """
    values = instance.constraint_values(x)
    satisfied = index_set(numpy.nonzero(values <= CONSTRAINT_TOLERANCE)[0])
    satisfied_mass = instance.scenarios.mass(satisfied)
    return ChanceEvaluation(
        satisfied_mass, satisfied,
        mass_reaches(satisfied_mass, instance.required_mass)
    )


def load_instance(file_path: str) -> PBPInstance:
    """Read the instance from the JSON file.

    Raises:
        InstanceError: If the file is not a valid instance JSON.
    """
    with open(file_path, "r") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as error:
            raise InstanceError(f"Instance file is not a valid JSON: {error}")
    return PBPInstance.from_dictionary(data)


def dump_instance(instance: PBPInstance, file_path: str) -> None:
    """Write the instance to the JSON file."""
    with open(file_path, "w") as fh:
        fh.write(instance.to_json())
