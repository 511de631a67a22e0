from typing import List, Tuple, Optional, Iterable
from enum import Enum
import itertools

import numpy
from scipy import optimize

from .norm_type import NormType
from .instance import PBPInstance
from .ccp_utils import T_index_set, index_set, CONSTRAINT_TOLERANCE

# ==== TYPES ====
# Rows A and right-hand side b of the polyhedron {x : A x <= b}
T_halfspaces = Tuple[numpy.ndarray, numpy.ndarray]
# ===============

# Cap on the number of full Dykstra cycles of one projection
MAX_CYCLES: int = 10_000
# Successive cycles closer than this mean convergence
CONVERGENCE_TOLERANCE: float = 1e-10
# Iterates that stop moving while violating a constraint by more than this
#   hand the region over to the polyhedral solver
STALL_VIOLATION: float = 1e-6
STALL_MOVE: float = 1e-12
# Relative slack under which a facet counts as active at the QP solution
ACTIVE_SLACK: float = 1e-6
# Facets tried by the active-set certificate, smallest slack first
ACTIVE_CANDIDATES: int = 12
# Distance given up by the lower bound to absorb the projection error
LOWER_BOUND_SLACK: float = 1e-6


class UnsupportedNormError(ValueError):
    """Raised when the objective norm has no projection oracle."""
    pass


class OracleInconsistencyError(ValueError):
    """Raised when a certified objective cap leaves no feasible point."""
    pass


class ProjectionStatus(Enum):
    """Outcome of the projection oracle."""
    # Converged to the projection
    feasible = "feasible"
    # The region is empty (exact interval test or infeasible linear program)
    empty = "empty"
    # Neither the projection nor emptiness could be established
    max_iter = "max_iter"


class Box(object):
    """Coordinate box [lower, upper] (empty if some lower > upper).

    Attributes:
        lower (numpy.ndarray): Lower corner.
        upper (numpy.ndarray): Upper corner.
    """

    def __init__(self, lower: numpy.ndarray, upper: numpy.ndarray):
        self.lower: numpy.ndarray = numpy.asarray(lower, dtype=float)
        self.upper: numpy.ndarray = numpy.asarray(upper, dtype=float)

    @property
    def is_empty(self) -> bool:
        """True if some coordinate interval is empty."""
        return bool(numpy.any(self.lower > self.upper))

    def project(self, point: numpy.ndarray) -> numpy.ndarray:
        """Euclidean projection (coordinate clamp) onto a non-empty box."""
        return numpy.clip(point, self.lower, self.upper)

    def violation(self, point: numpy.ndarray) -> float:
        """Largest coordinate distance of the point outside the box."""
        return float(max(numpy.max(self.lower - point),
                         numpy.max(point - self.upper), 0.0))

    def halfspaces(self) -> T_halfspaces:
        identity = numpy.eye(self.lower.shape[0])
        return numpy.vstack([identity, -identity]), \
            numpy.concatenate([self.upper, -self.lower])

    def __repr__(self) -> str:
        return f"Box(lower={self.lower.tolist()}, " \
               f"upper={self.upper.tolist()})"


class _Ball(object):
    """Ball in one of the supported norms, used as a Dykstra set."""

    def __init__(self, center: numpy.ndarray, radius: float, norm: NormType):
        self.center: numpy.ndarray = center
        self.radius: float = radius
        self.norm: NormType = norm

    def project(self, point: numpy.ndarray) -> numpy.ndarray:
        return project_ball(point, self.center, self.radius, self.norm)

    def violation(self, point: numpy.ndarray) -> float:
        return max(float(self.norm.evaluate(point - self.center))
                   - self.radius, 0.0)

    def halfspaces(self) -> Optional[T_halfspaces]:
        """Facets of the ball, None for the Euclidean ball.

        The L1 ball has one facet sign(v) . (x - center) <= R per sign
            vector v; the Linf ball is a box.
        """
        dim = self.center.shape[0]
        if self.norm is NormType.Linf:
            rows = numpy.vstack([numpy.eye(dim), -numpy.eye(dim)])
        elif self.norm is NormType.L1:
            rows = numpy.array(list(itertools.product((1.0, -1.0),
                                                      repeat=dim)))
        else:
            return None
        return rows, rows @ self.center + self.radius


class ProjectionResult(object):
    """Result of the projection of a target onto a region.

    Attributes:
        point (Optional[numpy.ndarray]): The projection (None unless
            feasible).
        value (float): Euclidean distance from the target (inf unless
            feasible).
        status (ProjectionStatus): Outcome of the oracle; empty is always
            exact, max_iter proves nothing.
    """

    def __init__(self,
                 point: Optional[numpy.ndarray],
                 value: float,
                 status: ProjectionStatus):
        self.point: Optional[numpy.ndarray] = point
        self.value: float = value
        self.status: ProjectionStatus = status

    @property
    def is_feasible(self) -> bool:
        return self.status is ProjectionStatus.feasible

    def __repr__(self) -> str:
        return f"ProjectionResult(value={self.value}, " \
               f"status={self.status.value})"


class BigMBound(object):
    """Upper bound of c(x, xi^(s)) over the region left by the safe set and
        the objective cap.

    Attributes:
        scenario (int): 0-based scenario index.
        value (float): The bound M^(s).
        safe (T_index_set): Safe set used for the region.
        f_cap (float): Objective cap used for the region.
    """

    def __init__(self, scenario: int, value: float, safe: T_index_set,
                 f_cap: float):
        self.scenario: int = scenario
        self.value: float = value
        self.safe: T_index_set = safe
        self.f_cap: float = f_cap

    def __repr__(self) -> str:
        return f"BigMBound(scenario={self.scenario}, value={self.value})"


def project_ball(point: Iterable[float],
                 center: Iterable[float],
                 radius: float,
                 norm: NormType) -> numpy.ndarray:
    """Euclidean projection of the point onto the ball B_norm(center, R).

    Args:
        point (Iterable[float]): Point q to be projected.
        center (Iterable[float]): Center of the ball.
        radius (float): Positive radius.
        norm (NormType): Norm of the ball.

    Returns:
        numpy.ndarray: The closest point of the ball.

    Raises:
        ValueError: If the radius is not positive.
    """
    if not radius > 0:
        raise ValueError("Radius of the ball has to be positive!")
    point = numpy.asarray(point, dtype=float)
    center = numpy.asarray(center, dtype=float)
    norm = NormType(norm)
    if norm is NormType.Linf:
        return numpy.clip(point, center - radius, center + radius)
    shift = point - center
    if norm is NormType.L2:
        length = numpy.linalg.norm(shift)
        if length <= radius:
            return point.copy()
        return center + shift * (radius / length)
    magnitudes = numpy.abs(shift)
    if magnitudes.sum() <= radius:
        return point.copy()
    # Soft threshold with the level found from the sorted magnitudes
    decreasing = numpy.sort(magnitudes)[::-1]
    cumulative = numpy.cumsum(decreasing) - radius
    counts = numpy.arange(1, decreasing.shape[0] + 1)
    active = numpy.nonzero(decreasing * counts > cumulative)[0][-1]
    threshold = cumulative[active] / (active + 1.0)
    shrunk = numpy.sign(shift) * numpy.maximum(magnitudes - threshold, 0.0)
    return center + shrunk


def bounding_box(instance: PBPInstance,
                 subset: T_index_set,
                 f_cap: float = numpy.inf) -> Box:
    """Coordinate box enclosing {x in X(S) : F(x) <= f_cap}.

    Args:
        instance (PBPInstance): The instance.
        subset (T_index_set): Enforced scenarios S.
        f_cap (float): Objective cap, inf for none.

    Returns:
        Box: The enclosure, possibly empty.
    """
    dim = instance.dim
    lower = numpy.full(dim, -instance.box_radius)
    upper = numpy.full(dim, instance.box_radius)
    subset = list(index_set(subset))
    if subset:
        centers = instance.scenarios.points[subset]
        lower = numpy.maximum(lower, centers.max(axis=0) - instance.radius)
        upper = numpy.minimum(upper, centers.min(axis=0) + instance.radius)
    if numpy.isfinite(f_cap):
        # Every p-norm dominates each coordinate difference
        lower = numpy.maximum(lower, instance.x_bar - f_cap)
        upper = numpy.minimum(upper, instance.x_bar + f_cap)
    return Box(lower, upper)


def _dykstra(target: numpy.ndarray, sets: list,
             budget: int) -> Tuple[numpy.ndarray, ProjectionStatus, int]:
    """Dykstra alternating projections of the target onto the intersection.

    Returns:
        Tuple[numpy.ndarray, ProjectionStatus, int]: Last iterate, outcome
            (max_iter on a stall or when the cycles run out) and the number
            of cycles used.
    """
    point = target.copy()
    increments = [numpy.zeros_like(target) for _ in sets]
    for cycle in range(budget):
        previous = point
        for set_idx, convex_set in enumerate(sets):
            shifted = point + increments[set_idx]
            point = convex_set.project(shifted)
            increments[set_idx] = shifted - point
        move = float(numpy.linalg.norm(point - previous))
        violation = max(convex_set.violation(point) for convex_set in sets)
        if move < CONVERGENCE_TOLERANCE \
                and violation <= CONSTRAINT_TOLERANCE:
            return point, ProjectionStatus.feasible, cycle + 1
        # Empty and thin regions both stall here
        if move < STALL_MOVE and violation > STALL_VIOLATION:
            return point, ProjectionStatus.max_iter, cycle + 1
    return point, ProjectionStatus.max_iter, budget


def _kkt_point(target: numpy.ndarray, rows: numpy.ndarray,
               rhs: numpy.ndarray,
               start: numpy.ndarray) -> Optional[numpy.ndarray]:
    """Projection of the target onto {x : rows x <= rhs} certified by
        an active set of facets near start with non-negative multipliers.

    Returns:
        Optional[numpy.ndarray]: The projection, None if no facet set close
            to start satisfies the optimality conditions.
    """
    slack = rhs - rows @ start
    scale = max(1.0, float(numpy.max(numpy.abs(rhs))))
    near = [int(r_idx) for r_idx in numpy.argsort(slack)[:ACTIVE_CANDIDATES]
            if slack[r_idx] <= ACTIVE_SLACK * scale]
    for size in range(min(target.shape[0], len(near)) + 1):
        for active in itertools.combinations(near, size):
            point = target.copy()
            if size:
                facets = rows[list(active)]
                gram = facets @ facets.T
                if numpy.linalg.matrix_rank(gram) < size:
                    continue
                multipliers = numpy.linalg.solve(
                    gram, facets @ target - rhs[list(active)])
                if numpy.any(multipliers < -CONSTRAINT_TOLERANCE):
                    continue
                point = target - facets.T @ multipliers
            if numpy.all(rows @ point - rhs <= CONSTRAINT_TOLERANCE):
                return point
    return None


def _project_polyhedron(target: numpy.ndarray,
                        box: Box,
                        balls: List[_Ball]) -> ProjectionResult:
    """Exact projection onto a box intersected with L1/Linf balls.

    A linear program decides emptiness, a quadratic program started from
        its feasible point locates the projection and the active facets
        certify it.
    """
    blocks = [ball.halfspaces() for ball in balls]
    if any(block is None for block in blocks):
        return ProjectionResult(None, numpy.inf, ProjectionStatus.max_iter)
    dim = target.shape[0]
    bounds = list(zip(box.lower, box.upper))
    if blocks:
        ball_rows = numpy.vstack([block[0] for block in blocks])
        ball_rhs = numpy.concatenate([block[1] for block in blocks])
        feasibility = optimize.linprog(numpy.zeros(dim), A_ub=ball_rows,
                                       b_ub=ball_rhs, bounds=bounds,
                                       method="highs")
    else:
        feasibility = optimize.linprog(numpy.zeros(dim), bounds=bounds,
                                       method="highs")
    if feasibility.status == 2:
        return ProjectionResult(None, numpy.inf, ProjectionStatus.empty)
    if feasibility.status != 0:
        return ProjectionResult(None, numpy.inf, ProjectionStatus.max_iter)
    box_rows, box_rhs = box.halfspaces()
    rows = numpy.vstack([box_rows] + [block[0] for block in blocks])
    rhs = numpy.concatenate([box_rhs] + [block[1] for block in blocks])
    quadratic = optimize.minimize(
        lambda x: 0.5 * float(numpy.sum((x - target) ** 2)),
        feasibility.x,
        jac=lambda x: x - target,
        method="SLSQP",
        bounds=bounds,
        constraints=[{"type": "ineq",
                      "fun": lambda x: rhs - rows @ x,
                      "jac": lambda x: -rows}]
    )
    start = quadratic.x if quadratic.success else feasibility.x
    point = _kkt_point(target, rows, rhs, numpy.asarray(start, dtype=float))
    if point is None:
        return ProjectionResult(None, numpy.inf, ProjectionStatus.max_iter)
    return ProjectionResult(point, float(numpy.linalg.norm(point - target)),
                            ProjectionStatus.feasible)


def _project_onto(target: numpy.ndarray,
                  box: Box,
                  balls: List[_Ball]) -> ProjectionResult:
    """Project onto box and balls, growing a working set of the violated
        balls; a projection onto a relaxation that satisfies every ball is
        the projection onto the full intersection. Whatever Dykstra cannot
        settle goes to the polyhedral solver."""
    if box.is_empty:
        return ProjectionResult(None, numpy.inf, ProjectionStatus.empty)
    point = box.project(target)
    working: List[_Ball] = []
    budget = MAX_CYCLES
    while True:
        violations = [ball.violation(point) for ball in balls]
        worst = int(numpy.argmax(violations)) if balls else -1
        if worst < 0 or violations[worst] <= CONSTRAINT_TOLERANCE:
            return ProjectionResult(
                point, float(numpy.linalg.norm(point - target)),
                ProjectionStatus.feasible
            )
        if balls[worst] in working or budget <= 0:
            break
        working.append(balls[worst])
        point, status, used = _dykstra(target, [box] + working, budget)
        budget -= used
        if status is not ProjectionStatus.feasible:
            break
    return _project_polyhedron(target, box, balls)


def _scenario_balls(instance: PBPInstance,
                    subset: T_index_set) -> List[_Ball]:
    # Box balls are already merged into the bounding box
    if instance.constraint_norm is NormType.Linf:
        return []
    return [_Ball(instance.scenarios.points[s_idx], instance.radius,
                  instance.constraint_norm) for s_idx in subset]


def project(instance: PBPInstance, subset: T_index_set) -> ProjectionResult:
    """Solve nu(S): project x_bar onto X(S) in the Euclidean objective.

    Args:
        instance (PBPInstance): The instance (objective norm has to be L2).
        subset (T_index_set): Enforced scenarios S (may be empty).

    Returns:
        ProjectionResult: Minimiser and nu(S), or the empty/max_iter status.

    Raises:
        UnsupportedNormError: If the objective norm is not L2.
    """
    if instance.objective_norm is not NormType.L2:
        raise UnsupportedNormError(
            f"Projection oracle supports only the L2 objective, not "
            f"{instance.objective_norm.value}!")
    subset = index_set(subset)
    box = bounding_box(instance, subset)
    return _project_onto(instance.x_bar, box,
                         _scenario_balls(instance, subset))


def big_m(instance: PBPInstance,
          s_idx: int,
          safe: T_index_set,
          f_cap: float = numpy.inf) -> BigMBound:
    """Upper bound of c(x, xi^(s)) over {x in X(safe) : F(x) <= f_cap}.

    The maximum of the constraint norm over the bounding box is evaluated
        in closed form coordinate by coordinate.

    Args:
        instance (PBPInstance): The instance.
        s_idx (int): 0-based scenario index (not in safe).
        safe (T_index_set): Safe set.
        f_cap (float): Objective cap, inf for the raw bound.

    Returns:
        BigMBound: The bound with its context.

    Raises:
        ValueError: If s is in the safe set.
        OracleInconsistencyError: If the enclosure is empty under a finite
            cap (the cap or the safe set is not valid).
    """
    safe = index_set(safe)
    if s_idx in safe:
        raise ValueError("Big-M is computed only for non-safe scenarios!")
    box = bounding_box(instance, safe, f_cap)
    if box.is_empty:
        if numpy.isfinite(f_cap):
            raise OracleInconsistencyError(
                f"No point of the safe region reaches the objective cap "
                f"{f_cap:g} (scenario {s_idx + 1}).")
        return BigMBound(s_idx, -numpy.inf, safe, f_cap)
    center = instance.scenarios.points[s_idx]
    farthest = numpy.maximum(numpy.abs(box.lower - center),
                             numpy.abs(box.upper - center))
    value = float(instance.constraint_norm.evaluate(farthest)) \
        - instance.radius
    return BigMBound(s_idx, value, safe, f_cap)


def min_distance_lb(instance: PBPInstance,
                    s_idx: int,
                    safe: T_index_set,
                    f_cap: float = numpy.inf) -> float:
    """Lower bound of c(x, xi^(s)) over {x in X(safe) : F(x) <= f_cap}.

    Args:
        instance (PBPInstance): The instance.
        s_idx (int): 0-based scenario index.
        safe (T_index_set): Safe set.
        f_cap (float): Objective cap, inf for none.

    Returns:
        float: The bound; positive values certify that scenario s is
            violated everywhere in the region, -inf when no bound is known.
    """
    safe = index_set(safe)
    kappa = instance.constraint_norm.euclidean_constant(instance.dim)
    center = instance.scenarios.points[s_idx]
    box = bounding_box(instance, safe, f_cap)
    if box.is_empty:
        return -numpy.inf
    # Distance to the enclosure is already a valid bound
    box_distance = float(numpy.linalg.norm(center - box.project(center)))
    bound = box_distance * kappa - instance.radius
    if bound > 0:
        return bound
    balls = _scenario_balls(instance, safe)
    if numpy.isfinite(f_cap):
        if f_cap > 0:
            balls.append(_Ball(instance.x_bar, f_cap,
                               instance.objective_norm))
        else:
            balls.append(_Ball(instance.x_bar, CONSTRAINT_TOLERANCE,
                               NormType.Linf))
    result = _project_onto(center, box, balls)
    if not result.is_feasible:
        return -numpy.inf
    distance = max(result.value - LOWER_BOUND_SLACK, 0.0)
    return max(bound, distance * kappa - instance.radius)
