from typing import List, Tuple, Optional, Dict, Set, Iterable, Sequence
from fractions import Fraction
from functools import cmp_to_key
from itertools import combinations
import math

import numpy

from .predicates import (orient2d, orient3d, dot_sign, collinear,
                         pairwise_collinear, signed_volumes)
from .instance import ScenarioSet
from .ccp_utils import T_index_set, index_set, mass_reaches

# ==== TYPES ====
# Triangle given by three positions in the hull input, outward oriented
T_face = Tuple[int, int, int]
# Exact planar vector
T_exact_2d = Tuple[Fraction, Fraction]
# ===============


class Hull(object):
    """Convex hull of a finite point set in the plane or in the space.

    Attributes:
        dim (int): Dimension of the points (2 or 3).
        points (numpy.ndarray): The input points.
        vertex_ids (Tuple[int, ...]): Positions (in points) of the extreme
            points; counter-clockwise for polygons, lexicographic for
            segments.
        degenerate_rank (int): Dimension of the affine hull (0..dim).
        faces (Tuple[T_face, ...]): Outward oriented triangles of a full
            rank 3D hull (empty otherwise).
        plane_axes (Optional[Tuple[int, int]]): Coordinate axes used to
            represent a coplanar 3D hull as a polygon.
    """

    def __init__(self,
                 dim: int,
                 points: numpy.ndarray,
                 vertex_ids: Sequence[int],
                 degenerate_rank: int,
                 /, *,  # noqa E999
                 faces: Sequence[T_face] = (),
                 plane_axes: Optional[Tuple[int, int]] = None):
        self.dim: int = dim
        self.points: numpy.ndarray = points
        self.vertex_ids: Tuple[int, ...] = tuple(vertex_ids)
        self.degenerate_rank: int = degenerate_rank
        self.faces: Tuple[T_face, ...] = tuple(faces)
        self.plane_axes: Optional[Tuple[int, int]] = plane_axes

    @property
    def vertices(self) -> numpy.ndarray:
        """Coordinates of the extreme points."""
        return self.points[list(self.vertex_ids)]

    def __repr__(self) -> str:
        return f"Hull(dim={self.dim}, rank={self.degenerate_rank}, " \
               f"vertices={list(self.vertex_ids)})"


class SeparabilityVerdict(object):
    """Outcome of the search for a hyperplane through a scenario that keeps
        a sound scenario subset strictly on one side.

    Attributes:
        separable (bool): True if such a hyperplane exists.
        witness_direction (Optional[numpy.ndarray]): Floating point normal
            representing the found open halfspace.
        witness_mass (float): Mass of the scenarios on the positive side.
        witness_subset (T_index_set): Non-pruned scenarios strictly on the
            positive side (a sound subset whose hull avoids the scenario).
    """

    def __init__(self,
                 separable: bool,
                 /, *,  # noqa E999
                 witness_direction: Optional[numpy.ndarray] = None,
                 witness_mass: float = 0.0,
                 witness_subset: T_index_set = ()):
        self.separable: bool = separable
        self.witness_direction: Optional[numpy.ndarray] = witness_direction
        self.witness_mass: float = witness_mass
        self.witness_subset: T_index_set = witness_subset

    def __repr__(self) -> str:
        return f"SeparabilityVerdict(separable={self.separable}, " \
               f"witness_mass={self.witness_mass}, " \
               f"witness_subset={list(self.witness_subset)})"


def _unique_order(points: numpy.ndarray) -> List[int]:
    """Positions sorted lexicographically, keeping the lowest position among
        coincident points."""
    order = sorted(range(points.shape[0]),
                   key=lambda pos: (tuple(points[pos]), pos))
    unique: List[int] = []
    for pos in order:
        if unique and numpy.array_equal(points[unique[-1]], points[pos]):
            continue
        unique.append(pos)
    return unique


def _monotone_chain(coords: Sequence[Sequence[float]],
                    order: List[int]) -> List[int]:
    """Strictly convex counter-clockwise hull of lexicographically sorted
        distinct planar points."""
    if len(order) <= 1:
        return list(order)
    lower: List[int] = []
    for pos in order:
        while len(lower) >= 2 and orient2d(coords[lower[-2]],
                                           coords[lower[-1]],
                                           coords[pos]) <= 0:
            lower.pop()
        lower.append(pos)
    upper: List[int] = []
    for pos in reversed(order):
        while len(upper) >= 2 and orient2d(coords[upper[-2]],
                                           coords[upper[-1]],
                                           coords[pos]) <= 0:
            upper.pop()
        upper.append(pos)
    return lower[:-1] + upper[:-1]


def _initial_tetrahedron(points: numpy.ndarray,
                         apexes: Tuple[int, int, int, int]) -> List[T_face]:
    faces: List[T_face] = []
    for face in combinations(apexes, 3):
        other = [pos for pos in apexes if pos not in face][0]
        if orient3d(points[face[0]], points[face[1]], points[face[2]],
                    points[other]) > 0:
            faces.append((face[0], face[2], face[1]))
        else:
            faces.append(face)
    return faces


def _incremental_hull(points: numpy.ndarray,
                      apexes: Tuple[int, int, int, int],
                      order: List[int]) -> List[T_face]:
    """Triangulated boundary of a full rank point set; a face is visible
        from a point only when the point is strictly above it."""
    faces = _initial_tetrahedron(points, apexes)
    for pos in order:
        if pos in apexes:
            continue
        visible = [face for face in faces
                   if orient3d(points[face[0]], points[face[1]],
                               points[face[2]], points[pos]) > 0]
        if not visible:
            continue
        edges = [edge for face in visible
                 for edge in ((face[0], face[1]), (face[1], face[2]),
                              (face[2], face[0]))]
        edge_set = set(edges)
        horizon = [edge for edge in edges
                   if (edge[1], edge[0]) not in edge_set]
        visible_set = set(visible)
        faces = [face for face in faces if face not in visible_set]
        faces.extend((edge[0], edge[1], pos) for edge in horizon)
    return faces


def _coplanar_faces(points: numpy.ndarray, first: T_face,
                    second: T_face) -> bool:
    return all(orient3d(points[first[0]], points[first[1]], points[first[2]],
                        points[pos]) == 0 for pos in second)


def _extreme_positions(points: numpy.ndarray,
                       faces: List[T_face]) -> List[int]:
    """Keep the boundary points lying on at least three distinct face
        planes; the others sit inside an edge or a facet."""
    incident: Dict[int, List[T_face]] = {}
    for face in faces:
        for pos in face:
            incident.setdefault(pos, []).append(face)
    extreme: List[int] = []
    for pos, pos_faces in incident.items():
        planes: List[T_face] = []
        for face in pos_faces:
            if not any(_coplanar_faces(points, plane, face)
                       for plane in planes):
                planes.append(face)
                if len(planes) >= 3:
                    break
        if len(planes) >= 3:
            extreme.append(pos)
    return extreme


def _hull_3d(points: numpy.ndarray, order: List[int]) -> Hull:
    first, last = order[0], order[-1]
    third = next((pos for pos in order
                  if not collinear(points[first], points[last],
                                   points[pos])), None)
    if third is None:
        return Hull(3, points, (first, last), 1)
    fourth = next((pos for pos in order
                   if orient3d(points[first], points[last], points[third],
                               points[pos]) != 0), None)
    if fourth is None:
        # Coplanar: project along an axis where the normal does not vanish
        for axes in ((0, 1), (1, 2), (0, 2)):
            coords = points[:, list(axes)]
            if orient2d(coords[first], coords[last], coords[third]) != 0:
                break
        # The projection is injective on the plane, order stays distinct
        planar_order = sorted(order,
                              key=lambda pos: (tuple(coords[pos]), pos))
        polygon = _monotone_chain(coords.tolist(), planar_order)
        return Hull(3, points, polygon, 2, plane_axes=axes)
    apexes = (first, last, third, fourth)
    faces = _incremental_hull(points, apexes, order)
    extreme = _extreme_positions(points, faces)
    if len(extreme) < len({pos for face in faces for pos in face}):
        kept = sorted(extreme, key=lambda pos: (tuple(points[pos]), pos))
        return _hull_3d_from_extremes(points, kept)
    return Hull(3, points, sorted(set(extreme)), 3, faces=faces)


def _hull_3d_from_extremes(points: numpy.ndarray,
                           order: List[int]) -> Hull:
    first, last = order[0], order[-1]
    third = next(pos for pos in order
                 if not collinear(points[first], points[last], points[pos]))
    fourth = next(pos for pos in order
                  if orient3d(points[first], points[last], points[third],
                              points[pos]) != 0)
    faces = _incremental_hull(points, (first, last, third, fourth), order)
    return Hull(3, points, sorted(order), 3, faces=faces)


def hull(points: Iterable[Iterable[float]]) -> Hull:
    """Compute the convex hull of the points.

    Args:
        points (Iterable[Iterable[float]]): Non-empty list of 2D or 3D
            points with finite coordinates.

    Returns:
        Hull: The hull; vertex positions refer to the input order and
            coincident points are represented by the lowest position.

    Raises:
        ValueError: If the list is empty or the dimension is not 2 or 3.
    """
    points = numpy.array(points, dtype=float)
    # Quick sanity check:
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("Hull needs a non-empty list of points!")
    dim = points.shape[1]
    if dim not in (2, 3):
        raise ValueError("Hull is implemented only in 2D and 3D!")
    order = _unique_order(points)
    if len(order) == 1:
        return Hull(dim, points, order, 0)
    if dim == 3:
        return _hull_3d(points, order)
    polygon = _monotone_chain(points.tolist(), order)
    return Hull(2, points, polygon, min(len(polygon) - 1, 2))


def _polygon_contains(coords: Sequence[Sequence[float]],
                      polygon: Sequence[int],
                      query: Sequence[float]) -> bool:
    for position in range(len(polygon)):
        start = coords[polygon[position]]
        end = coords[polygon[(position + 1) % len(polygon)]]
        if orient2d(start, end, query) < 0:
            return False
    return True


def contains(hull_: Hull, query: Iterable[float]) -> bool:
    """Test if the point lies in the closed convex hull.

    Args:
        hull_ (Hull): The hull.
        query (Iterable[float]): Point of the same dimension.

    Returns:
        bool: True if the point is inside or on the boundary.
    """
    query = numpy.asarray(query, dtype=float)
    points = hull_.points
    if hull_.degenerate_rank == 0:
        return bool(numpy.array_equal(points[hull_.vertex_ids[0]], query))
    if hull_.degenerate_rank == 1:
        start = points[hull_.vertex_ids[0]]
        end = points[hull_.vertex_ids[1]]
        return collinear(start, end, query) \
            and dot_sign(start, end, query) >= 0 \
            and dot_sign(end, start, query) >= 0
    if hull_.dim == 2:
        return _polygon_contains(points, hull_.vertex_ids, query)
    if hull_.degenerate_rank == 2:
        first, second, third = hull_.vertex_ids[:3]
        if orient3d(points[first], points[second], points[third],
                    query) != 0:
            return False
        axes = list(hull_.plane_axes)
        return _polygon_contains(points[:, axes], hull_.vertex_ids,
                                 query[axes])
    return all(orient3d(points[face[0]], points[face[1]], points[face[2]],
                        query) <= 0 for face in hull_.faces)


def vertex_indices(points: numpy.ndarray, subset: T_index_set) -> T_index_set:
    """Indices of the scenarios in subset that are extreme points of the
        hull of the subset.

    Args:
        points (numpy.ndarray): N x p array of all scenarios.
        subset (T_index_set): Non-empty index set.

    Returns:
        T_index_set: The vertex indices (lowest index among duplicates).
    """
    subset = index_set(subset)
    if not subset:
        raise ValueError("Vertex indices need a non-empty subset!")
    hull_ = hull(points[list(subset)])
    return index_set(subset[pos] for pos in hull_.vertex_ids)


def enclosed_indices(points: numpy.ndarray,
                     subset: T_index_set) -> T_index_set:
    """Indices of ALL the scenarios lying in the hull of the subset.

    Args:
        points (numpy.ndarray): N x p array of all scenarios.
        subset (T_index_set): Non-empty index set.

    Returns:
        T_index_set: Every index whose point is in the closed hull.
    """
    subset = index_set(subset)
    if not subset:
        raise ValueError("Enclosed indices need a non-empty subset!")
    hull_ = hull(points[list(subset)])
    return index_set(s_idx for s_idx in range(points.shape[0])
                     if contains(hull_, points[s_idx]))


# ==== Separability sweep ====

def _exact_vector(point: Sequence[float],
                  origin: Sequence[float]) -> List[Fraction]:
    return [Fraction(float(point[i])) - Fraction(float(origin[i]))
            for i in range(len(point))]


def _half(direction: T_exact_2d) -> int:
    if direction[1] > 0 or (direction[1] == 0 and direction[0] > 0):
        return 0
    return 1


def _compare_directions(first: Tuple[T_exact_2d, int, int],
                        second: Tuple[T_exact_2d, int, int]) -> int:
    half_first, half_second = _half(first[0]), _half(second[0])
    if half_first != half_second:
        return half_first - half_second
    cross = first[0][0] * second[0][1] - first[0][1] * second[0][0]
    if cross > 0:
        return -1
    if cross < 0:
        return 1
    return 0


def _best_arc(vectors: Dict[int, T_exact_2d],
              weights: Dict[int, float],
              needed: Set[int],
              base_mass: float,
              required: float
              ) -> Optional[Tuple[T_index_set, numpy.ndarray]]:
    """Sweep the open arcs of directions d in the plane and find one whose
        open halfplane {v : <d, v> > 0} holds every needed vector and enough
        mass.

    Args:
        vectors (Dict[int, T_exact_2d]): Non-zero exact vectors by index.
        weights (Dict[int, float]): Mass of each index.
        needed (Set[int]): Indices that have to be strictly positive.
        base_mass (float): Mass already granted outside the sweep.
        required (float): Mass to be reached.

    Returns:
        Optional[Tuple[T_index_set, numpy.ndarray]]: Positive indices and a
            floating point direction inside the arc, None if no arc works.
    """
    if not vectors:
        if not needed and mass_reaches(base_mass, required):
            return (), numpy.zeros(2)
        return None
    # Critical directions: entering at (v_y, -v_x), leaving at the opposite
    events: List[Tuple[T_exact_2d, int, int]] = []
    for idx, vector in vectors.items():
        events.append(((vector[1], -vector[0]), idx, 1))
        events.append(((-vector[1], vector[0]), idx, -1))
    events.sort(key=cmp_to_key(_compare_directions))
    groups: List[List[Tuple[T_exact_2d, int, int]]] = []
    for event in events:
        if groups and _compare_directions(groups[-1][0], event) == 0:
            groups[-1].append(event)
        else:
            groups.append([event])

    # Positive set just after the first critical direction
    start = groups[0][0][0]
    positive: Set[int] = set()
    for idx, vector in vectors.items():
        dot = start[0] * vector[0] + start[1] * vector[1]
        cross = start[0] * vector[1] - start[1] * vector[0]
        if dot > 0 or (dot == 0 and cross > 0):
            positive.add(idx)
    mass = base_mass + sum(weights[idx] for idx in positive)
    needed_in = len(needed & positive)

    for group_idx, group in enumerate(groups):
        if group_idx > 0:
            for _direction, idx, change in group:
                if change > 0 and idx not in positive:
                    positive.add(idx)
                    mass += weights[idx]
                    needed_in += idx in needed
                elif change < 0 and idx in positive:
                    positive.remove(idx)
                    mass -= weights[idx]
                    needed_in -= idx in needed
        if needed_in == len(needed) and mass_reaches(mass, required):
            following = groups[(group_idx + 1) % len(groups)][0][0]
            return index_set(positive), _arc_direction(group[0][0],
                                                       following)
    return None


def _arc_direction(start: T_exact_2d, end: T_exact_2d) -> numpy.ndarray:
    """Unit vector halfway (counter-clockwise) between two directions."""
    angle_start = math.atan2(float(start[1]), float(start[0]))
    angle_end = math.atan2(float(end[1]), float(end[0]))
    gap = (angle_end - angle_start) % (2 * math.pi)
    if gap == 0:
        gap = 2 * math.pi
    middle = angle_start + gap / 2
    return numpy.array([math.cos(middle), math.sin(middle)])


def _separate_in_plane(points: numpy.ndarray, s_idx: int, items: List[int],
                       weights: Dict[int, float], safe: Set[int],
                       required: float) -> Optional[SeparabilityVerdict]:
    origin = points[s_idx]
    vectors = {}
    for idx in items:
        vector = _exact_vector(points[idx], origin)
        vectors[idx] = (vector[0], vector[1])
    found = _best_arc(vectors, weights, safe, 0.0, required)
    if found is None:
        return None
    positive, direction = found
    return SeparabilityVerdict(
        True, witness_direction=direction, witness_subset=positive,
        witness_mass=sum(weights[idx] for idx in positive)
    )


def _separate_on_line(points: numpy.ndarray, s_idx: int, items: List[int],
                      weights: Dict[int, float], safe: Set[int],
                      required: float) -> Optional[SeparabilityVerdict]:
    """All remaining vectors are parallel: only two open halfspaces."""
    origin = points[s_idx]
    reference = items[0]
    forward = [idx for idx in items
               if dot_sign(origin, points[reference], points[idx]) > 0]
    backward = [idx for idx in items if idx not in forward]
    for side, sign in ((forward, 1.0), (backward, -1.0)):
        mass = sum(weights[idx] for idx in side)
        if safe.issubset(side) and mass_reaches(mass, required):
            return SeparabilityVerdict(
                True,
                witness_direction=sign * (points[reference] - origin),
                witness_mass=mass, witness_subset=index_set(side)
            )
    return None


def _separate_in_space(points: numpy.ndarray, s_idx: int, items: List[int],
                       weights: Dict[int, float], safe: Set[int],
                       required: float) -> Optional[SeparabilityVerdict]:
    """Enumerate the arrangement vertices +-(v_i x v_j); every open cell of
        the arrangement touches one of them, and the cells around a vertex
        are found by a planar sweep in its orthogonal complement."""
    origin = points[s_idx]
    local = points[items]
    parallel = pairwise_collinear(origin, local)
    if parallel.all():
        return _separate_on_line(points, s_idx, items, weights, safe,
                                 required)
    signs = signed_volumes(origin, local)
    size = len(items)
    weight_vector = numpy.array([weights[idx] for idx in items])
    need_vector = numpy.array([idx in safe for idx in items], dtype=float)
    positive_mass = (signs > 0).astype(float) @ weight_vector
    negative_mass = (signs < 0).astype(float) @ weight_vector
    zero_mass = (signs == 0).astype(float) @ weight_vector
    positive_need = (signs > 0).astype(float) @ need_vector
    negative_need = (signs < 0).astype(float) @ need_vector
    zero_need = (signs == 0).astype(float) @ need_vector
    needed_count = len(safe)
    exact_vectors: Dict[int, List[Fraction]] = {}

    for i_pos in range(size):
        for j_pos in range(i_pos + 1, size):
            if parallel[i_pos, j_pos]:
                continue
            for sign, side_mass, side_need in (
                    (1, positive_mass, positive_need),
                    (-1, negative_mass, negative_need)):
                # Upper bound: every tied vector on the positive side
                if side_need[i_pos, j_pos] + zero_need[i_pos, j_pos] \
                        < needed_count - 0.5:
                    continue
                if not mass_reaches(side_mass[i_pos, j_pos]
                                    + zero_mass[i_pos, j_pos], required):
                    continue
                row = sign * signs[i_pos, j_pos, :]
                strict = [items[pos] for pos in range(size) if row[pos] > 0]
                tied = [items[pos] for pos in range(size) if row[pos] == 0]
                normal = sign * numpy.cross(local[i_pos] - origin,
                                            local[j_pos] - origin)
                normal = normal / numpy.linalg.norm(normal)
                if len(tied) == 2:
                    # Generic vertex: both tied vectors can be made positive
                    tangent = _unit(local[i_pos] - origin) \
                        + _unit(local[j_pos] - origin)
                    positive = index_set(strict + tied)
                    return SeparabilityVerdict(
                        True,
                        witness_direction=normal + 1e-6 * _unit(tangent),
                        witness_subset=positive,
                        witness_mass=sum(weights[idx] for idx in positive)
                    )
                verdict = _separate_around_vertex(
                    points, origin, items[i_pos], items[j_pos], sign,
                    strict, tied, weights, safe, required, exact_vectors,
                    normal
                )
                if verdict is not None:
                    return verdict
    return None


def _unit(vector: numpy.ndarray) -> numpy.ndarray:
    return vector / numpy.linalg.norm(vector)


def _separate_around_vertex(points: numpy.ndarray, origin: numpy.ndarray,
                            first: int, second: int, sign: int,
                            strict: List[int], tied: List[int],
                            weights: Dict[int, float], safe: Set[int],
                            required: float,
                            exact_vectors: Dict[int, List[Fraction]],
                            normal: numpy.ndarray
                            ) -> Optional[SeparabilityVerdict]:
    """Exact planar sweep over the vectors orthogonal to the vertex."""
    for idx in [first, second] + tied:
        if idx not in exact_vectors:
            exact_vectors[idx] = _exact_vector(points[idx], origin)
    v_first, v_second = exact_vectors[first], exact_vectors[second]
    vertex = [sign * value for value in _cross(v_first, v_second)]
    # Orthogonal basis of the complement, oriented by the vertex
    axis_one = v_first
    axis_two = _cross(vertex, axis_one)
    planar = {idx: (_dot(exact_vectors[idx], axis_one),
                    _dot(exact_vectors[idx], axis_two)) for idx in tied}
    needed = {idx for idx in safe if idx in planar}
    base_mass = sum(weights[idx] for idx in strict)
    found = _best_arc(planar, weights, needed, base_mass, required)
    if found is None:
        return None
    positive_tied, direction = found
    tangent = direction[0] * numpy.array([float(c) for c in axis_one]) \
        + direction[1] * numpy.array([float(c) for c in axis_two])
    positive = index_set(strict + list(positive_tied))
    return SeparabilityVerdict(
        True, witness_direction=normal + 1e-6 * _unit(tangent),
        witness_subset=positive,
        witness_mass=sum(weights[idx] for idx in positive)
    )


def _cross(first: List[Fraction], second: List[Fraction]) -> List[Fraction]:
    return [first[1] * second[2] - first[2] * second[1],
            first[2] * second[0] - first[0] * second[2],
            first[0] * second[1] - first[1] * second[0]]


def _dot(first: List[Fraction], second: List[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(first, second)), Fraction(0))


def separability_check(scenarios: ScenarioSet,
                       s_idx: int,
                       safe: T_index_set,
                       pruned: T_index_set,
                       tau: float) -> SeparabilityVerdict:
    """Search a hyperplane through scenario s with every safe scenario and
        enough non-pruned mass strictly on its positive side.

    A negative verdict means that the hull of every sound subset contains
        the scenario, so it can be fixed as safe.

    Args:
        scenarios (ScenarioSet): The scenarios.
        s_idx (int): 0-based index of the tested scenario.
        safe (T_index_set): Safe indices.
        pruned (T_index_set): Pruned indices.
        tau (float): Risk level.

    Returns:
        SeparabilityVerdict: The verdict with a witness if separable.

    Raises:
        ValueError: If s is safe or pruned, or safe and pruned intersect.
    """
    safe_set, pruned_set = set(safe), set(pruned)
    # Quick sanity check:
    if s_idx in safe_set or s_idx in pruned_set:
        raise ValueError("Tested scenario has to be selectable!")
    if safe_set & pruned_set:
        raise ValueError("Safe and pruned sets have to be disjoint!")
    required = 1.0 - tau - scenarios.removed_mass
    points = scenarios.points
    origin = points[s_idx]
    # Coincident points can never leave the hyperplane
    items = [idx for idx in range(scenarios.size)
             if idx != s_idx and idx not in pruned_set
             and not numpy.array_equal(points[idx], origin)]
    if not safe_set.issubset(items):
        return SeparabilityVerdict(False)
    weights = {idx: float(scenarios.probs[idx]) for idx in items}
    if not items or not mass_reaches(sum(weights.values()), required):
        return SeparabilityVerdict(False)
    if scenarios.dim == 2:
        verdict = _separate_in_plane(points, s_idx, items, weights,
                                     safe_set, required)
    else:
        verdict = _separate_in_space(points, s_idx, items, weights,
                                     safe_set, required)
    if verdict is None:
        return SeparabilityVerdict(False)
    return verdict
