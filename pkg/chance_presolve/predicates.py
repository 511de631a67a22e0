"""Exact sign predicates on floating point coordinates.

Every predicate first evaluates the determinant in floating point and
accepts its sign when the magnitude exceeds a forward error bound; only the
uncertain cases are recomputed exactly with rational arithmetic.
"""
from typing import Sequence
from fractions import Fraction

import numpy

# ==== TYPES ====
T_point = Sequence[float]
# ===============

# Half of the machine epsilon for IEEE doubles
EPSILON: float = 2.0 ** -53
# Error bound coefficients of the floating point filters
CCW_ERRBOUND: float = (3.0 + 16.0 * EPSILON) * EPSILON
O3D_ERRBOUND: float = (7.0 + 56.0 * EPSILON) * EPSILON


def _sign(value) -> int:
    if value > 0:
        return 1
    if value < 0:
        return -1
    return 0


def _exact(point: T_point):
    return [Fraction(float(coordinate)) for coordinate in point]


def orient2d(a: T_point, b: T_point, c: T_point) -> int:
    """Orientation of the triangle (a, b, c) in the plane.

    Args:
        a (Sequence[float]): First point.
        b (Sequence[float]): Second point.
        c (Sequence[float]): Third point.

    Returns:
        int: +1 if counter-clockwise, -1 if clockwise, 0 if collinear.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    errbound = CCW_ERRBOUND * (abs(detleft) + abs(detright))
    if det > errbound or -det > errbound:
        return _sign(det)
    ea, eb, ec = _exact(a), _exact(b), _exact(c)
    return _sign((ea[0] - ec[0]) * (eb[1] - ec[1])
                 - (ea[1] - ec[1]) * (eb[0] - ec[0]))


def orient3d(a: T_point, b: T_point, c: T_point, d: T_point) -> int:
    """Side of the point d with respect to the plane through a, b, c.

    Returns:
        int: Sign of det[b - a, c - a, d - a]; +1 when d lies on the side
            of the normal (b - a) x (c - a), 0 when the points are coplanar.
    """
    adx, ady, adz = a[0] - d[0], a[1] - d[1], a[2] - d[2]
    bdx, bdy, bdz = b[0] - d[0], b[1] - d[1], b[2] - d[2]
    cdx, cdy, cdz = c[0] - d[0], c[1] - d[1], c[2] - d[2]
    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) \
        + cdz * (adxbdy - bdxady)
    permanent = (abs(bdxcdy) + abs(cdxbdy)) * abs(adz) \
        + (abs(cdxady) + abs(adxcdy)) * abs(bdz) \
        + (abs(adxbdy) + abs(bdxady)) * abs(cdz)
    errbound = O3D_ERRBOUND * permanent
    # det[a - d, b - d, c - d] = -det[b - a, c - a, d - a]
    if det > errbound or -det > errbound:
        return -_sign(det)
    ea, eb, ec, ed = _exact(a), _exact(b), _exact(c), _exact(d)
    u = [eb[i] - ea[i] for i in range(3)]
    v = [ec[i] - ea[i] for i in range(3)]
    w = [ed[i] - ea[i] for i in range(3)]
    return _sign(u[0] * (v[1] * w[2] - v[2] * w[1])
                 - u[1] * (v[0] * w[2] - v[2] * w[0])
                 + u[2] * (v[0] * w[1] - v[1] * w[0]))


def dot_sign(a: T_point, b: T_point, c: T_point) -> int:
    """Sign of the scalar product (b - a) . (c - a) in any dimension."""
    terms = [(b[i] - a[i]) * (c[i] - a[i]) for i in range(len(a))]
    total = sum(terms)
    errbound = (len(terms) + 4) * EPSILON * sum(abs(term) for term in terms)
    if total > errbound or -total > errbound:
        return _sign(total)
    ea, eb, ec = _exact(a), _exact(b), _exact(c)
    return _sign(sum((eb[i] - ea[i]) * (ec[i] - ea[i])
                     for i in range(len(a))))


def collinear(a: T_point, b: T_point, c: T_point) -> bool:
    """True if the three points (in 2D or 3D) lie on a common line."""
    if len(a) == 2:
        return orient2d(a, b, c) == 0
    # Each coordinate plane projection of the cross product has to vanish
    for axes in ((0, 1), (1, 2), (0, 2)):
        if orient2d([a[axes[0]], a[axes[1]]], [b[axes[0]], b[axes[1]]],
                    [c[axes[0]], c[axes[1]]]) != 0:
            return False
    return True


def pairwise_collinear(origin: T_point,
                       points: numpy.ndarray) -> numpy.ndarray:
    """Collinearity of origin with every pair of 3D points.

    Args:
        origin (Sequence[float]): The common point.
        points (numpy.ndarray): N x 3 array.

    Returns:
        numpy.ndarray: N x N boolean matrix, True where origin, points[i]
            and points[j] are collinear.
    """
    vectors = points - numpy.asarray(origin, dtype=float)[None, :]
    size = points.shape[0]
    surely_apart = numpy.zeros((size, size), dtype=bool)
    for first, second in ((1, 2), (2, 0), (0, 1)):
        left = vectors[:, None, first] * vectors[None, :, second]
        right = vectors[:, None, second] * vectors[None, :, first]
        det = left - right
        errbound = CCW_ERRBOUND * (numpy.abs(left) + numpy.abs(right))
        surely_apart |= numpy.abs(det) > errbound
    result = ~surely_apart
    for i_idx, j_idx in zip(*numpy.nonzero(result)):
        if i_idx != j_idx:
            result[i_idx, j_idx] = collinear(origin, points[i_idx],
                                             points[j_idx])
    return result


def signed_volumes(origin: T_point, points: numpy.ndarray) -> numpy.ndarray:
    """Signs of det[p_i - o, p_j - o, p_k - o] for all triples.

    Args:
        origin (Sequence[float]): The common apex o.
        points (numpy.ndarray): N x 3 array.

    Returns:
        numpy.ndarray: N x N x N array of int8 signs, exact.
    """
    origin = numpy.asarray(origin, dtype=float)
    vectors = points - origin[None, :]
    size = points.shape[0]
    # Cross products of all pairs and their absolute counterpart
    cross = numpy.cross(vectors[:, None, :], vectors[None, :, :])
    abs_vectors = numpy.abs(vectors)
    abs_cross = numpy.stack([
        abs_vectors[:, None, 1] * abs_vectors[None, :, 2]
        + abs_vectors[:, None, 2] * abs_vectors[None, :, 1],
        abs_vectors[:, None, 2] * abs_vectors[None, :, 0]
        + abs_vectors[:, None, 0] * abs_vectors[None, :, 2],
        abs_vectors[:, None, 0] * abs_vectors[None, :, 1]
        + abs_vectors[:, None, 1] * abs_vectors[None, :, 0]
    ], axis=-1)
    det = numpy.einsum('ijc,kc->ijk', cross, vectors)
    permanent = numpy.einsum('ijc,kc->ijk', abs_cross, abs_vectors)
    signs = numpy.sign(det).astype(numpy.int8)
    uncertain = numpy.abs(det) <= O3D_ERRBOUND * permanent
    # Repeated vectors give exactly zero volume
    idx = numpy.arange(size)
    signs[idx, idx, :] = 0
    signs[idx, :, idx] = 0
    signs[:, idx, idx] = 0
    uncertain[idx, idx, :] = False
    uncertain[idx, :, idx] = False
    uncertain[:, idx, idx] = False
    for i_idx, j_idx, k_idx in zip(*numpy.nonzero(uncertain)):
        signs[i_idx, j_idx, k_idx] = orient3d(
            origin, points[i_idx], points[j_idx], points[k_idx])
    return signs
