import unittest
from fractions import Fraction

import numpy as np

from chance_presolve.predicates import (orient2d, orient3d, dot_sign,
                                        collinear, pairwise_collinear,
                                        signed_volumes)


def _exact_sign(value: Fraction) -> int:
    return (value > 0) - (value < 0)


def _exact_det3(u, v, w) -> int:
    u, v, w = ([c if isinstance(c, Fraction) else Fraction(float(c))
                for c in vector] for vector in (u, v, w))
    return _exact_sign(u[0] * (v[1] * w[2] - v[2] * w[1])
                       - u[1] * (v[0] * w[2] - v[2] * w[0])
                       + u[2] * (v[0] * w[1] - v[1] * w[0]))


class TestPredicates(unittest.TestCase):
    """Test the exact orientation predicates against rational arithmetic."""

    def setUp(self) -> None:
        self.generator = np.random.Generator(np.random.PCG64(11))

    def test_orient2d_basic(self):
        """Test orientation of simple triangles."""
        self.assertEqual(orient2d((0, 0), (1, 0), (0, 1)), 1)
        self.assertEqual(orient2d((0, 0), (0, 1), (1, 0)), -1)
        self.assertEqual(orient2d((0, 0), (1, 1), (3, 3)), 0)

    def test_orient2d_near_degenerate(self):
        """Test that nearly collinear points get the exact sign."""
        for _ in range(300):
            a = (0.5 + self.generator.integers(0, 64) * 2.0 ** -53, 0.5)
            b = (12.0, 12.0)
            c = (24.0, 24.0 + self.generator.integers(-2, 3) * 2.0 ** -49)
            ea, eb, ec = ([Fraction(x) for x in p] for p in (a, b, c))
            expected = _exact_sign((ea[0] - ec[0]) * (eb[1] - ec[1])
                                   - (ea[1] - ec[1]) * (eb[0] - ec[0]))
            self.assertEqual(orient2d(a, b, c), expected)

    def test_orient3d_basic(self):
        """Test the side of a point relative to a plane."""
        a, b, c = (0, 0, 0), (1, 0, 0), (0, 1, 0)
        self.assertEqual(orient3d(a, b, c, (0, 0, 1)), 1)
        self.assertEqual(orient3d(a, b, c, (0, 0, -1)), -1)
        self.assertEqual(orient3d(a, b, c, (1, 1, 0)), 0)

    def test_orient3d_random(self):
        """Test orient3d on random and nearly coplanar points."""
        for _ in range(300):
            a, b, c = self.generator.uniform(-1, 1, (3, 3))
            weights = self.generator.uniform(-1, 2, 2)
            d = a + weights[0] * (b - a) + weights[1] * (c - a)
            if self.generator.integers(0, 2):
                d = d + self.generator.normal(0, 1e-15, 3)
            self.assertEqual(orient3d(a, b, c, d),
                             _exact_det3(
                                 [Fraction(float(b[i])) - Fraction(float(a[i]))
                                  for i in range(3)],
                                 [Fraction(float(c[i])) - Fraction(float(a[i]))
                                  for i in range(3)],
                                 [Fraction(float(d[i])) - Fraction(float(a[i]))
                                  for i in range(3)]))

    def test_dot_sign(self):
        """Test the sign of the scalar product."""
        self.assertEqual(dot_sign((0, 0), (1, 0), (2, 1)), 1)
        self.assertEqual(dot_sign((0, 0), (1, 0), (0, 5)), 0)
        self.assertEqual(dot_sign((0, 0, 0), (1, 0, 0), (-1, 2, 3)), -1)

    def test_collinear(self):
        """Test collinearity in two and three dimensions."""
        self.assertTrue(collinear((0, 0), (1, 2), (2, 4)))
        self.assertFalse(collinear((0, 0), (1, 2), (2, 5)))
        self.assertTrue(collinear((0, 0, 0), (1, 2, 3), (-2, -4, -6)))
        self.assertFalse(collinear((0, 0, 0), (1, 2, 3), (1, 2, 4)))

    def test_pairwise_collinear(self):
        """Test the collinearity matrix against the exact cross product."""
        origin = np.array([0.1, 0.2, 0.3])
        directions = self.generator.integers(-2, 3, (8, 3)).astype(float)
        points = origin + directions * self.generator.integers(
            1, 3, (8, 1))
        matrix = pairwise_collinear(origin, points)
        for i_idx in range(8):
            for j_idx in range(8):
                if i_idx == j_idx:
                    continue
                u = [Fraction(float(points[i_idx][k])) - Fraction(origin[k])
                     for k in range(3)]
                v = [Fraction(float(points[j_idx][k])) - Fraction(origin[k])
                     for k in range(3)]
                cross = [u[1] * v[2] - u[2] * v[1],
                         u[2] * v[0] - u[0] * v[2],
                         u[0] * v[1] - u[1] * v[0]]
                self.assertEqual(bool(matrix[i_idx, j_idx]),
                                 all(value == 0 for value in cross))

    def test_signed_volumes(self):
        """Test the vectorised volume signs against the exact determinant.
        """
        origin = np.zeros(3)
        points = self.generator.integers(-2, 3, (7, 3)).astype(float)
        # A flat layer forces many zero volumes
        points[:3, 2] = 0.0
        signs = signed_volumes(origin, points)
        self.assertEqual(signs.shape, (7, 7, 7))
        for i_idx in range(7):
            for j_idx in range(7):
                for k_idx in range(7):
                    self.assertEqual(
                        int(signs[i_idx, j_idx, k_idx]),
                        _exact_det3(points[i_idx], points[j_idx],
                                    points[k_idx]))
