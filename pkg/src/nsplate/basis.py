"""Reference elements and quadrature rules.

Three reference elements are provided:

* P1 / P2 Lagrange bases on the unit triangle with vertices (0,0), (1,0),
  (0,1), written in barycentric coordinates (1-x-y, x, y).  The P2 local
  node order is the three vertices followed by the edge midpoints opposite
  each vertex, so node 3 sits between vertices 1 and 2.
* A four-node quintic Hermite basis on [0, 1] with equidistant nodes
  {0, 1/3, 2/3, 1}.  Degrees of freedom are the values at the four nodes
  plus the first derivatives at the two endpoints, ordered
  (value@0, value@1, value@1/3, value@2/3, deriv@0, deriv@1).
* Gauss-type quadrature on the triangle and the unit interval.  Triangle
  rules use the classic symmetric 3- and 7-point rules up to degree 5 and
  a conical product (Gauss-Legendre x Gauss-Jacobi) construction beyond,
  so arbitrary exactness degrees are available for oracle checks.

All objects are immutable after construction and safe to share.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from .errors import CapabilityError

MAX_TRIANGLE_DEGREE = 40
MAX_INTERVAL_DEGREE = 80

HERMITE_NODES = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on a reference domain.

    ``points`` has shape (nq, 2) for the triangle and (nq,) for the
    interval.  Weights sum to the reference measure (1/2 resp. 1) and the
    rule integrates polynomials up to total degree ``degree`` exactly.
    """

    domain: str
    degree: int
    points: np.ndarray
    weights: np.ndarray


def _triangle_rule_deg2():
    # edge midpoint rule, degree 2
    pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
    wts = np.full(3, 1.0 / 6.0)
    return pts, wts


def _triangle_rule_deg5():
    # symmetric 7-point rule, degree 5
    s15 = np.sqrt(15.0)
    a1 = (6.0 + s15) / 21.0
    a2 = (6.0 - s15) / 21.0
    w1 = (155.0 + s15) / 2400.0
    w2 = (155.0 - s15) / 2400.0
    pts = [(1.0 / 3.0, 1.0 / 3.0)]
    wts = [9.0 / 80.0]
    for a, w in ((a1, w1), (a2, w2)):
        b = 1.0 - 2.0 * a
        pts += [(a, a), (a, b), (b, a)]
        wts += [w, w, w]
    return np.array(pts), np.array(wts)


def _triangle_rule_conical(degree):
    # Duffy-type conical product: x = s*(1-t), y = t with Jacobian (1-t).
    # Gauss-Legendre in s, Gauss-Jacobi (alpha=1) in t absorbs the Jacobian.
    m = (degree + 2) // 2
    xs, ws = leggauss(m)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    tj, wj = roots_jacobi(m, 1.0, 0.0)
    tj = 0.5 * (tj + 1.0)
    wj = 0.25 * wj
    S, T = np.meshgrid(xs, tj, indexing="ij")
    pts = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    wts = np.outer(ws, wj).ravel()
    return pts, wts


def triangle_quadrature(degree):
    """Quadrature on the reference triangle, exact to the given degree."""
    if degree > MAX_TRIANGLE_DEGREE:
        raise CapabilityError(
            f"triangle quadrature degree {degree} exceeds the supported "
            f"maximum {MAX_TRIANGLE_DEGREE}"
        )
    degree = max(int(degree), 1)
    if degree <= 2:
        pts, wts = _triangle_rule_deg2()
        degree = 2
    elif degree <= 5:
        pts, wts = _triangle_rule_deg5()
        degree = 5
    else:
        pts, wts = _triangle_rule_conical(degree)
    return QuadratureRule("triangle", degree, pts, wts)


def interval_quadrature(degree):
    """Gauss-Legendre rule on [0, 1], exact to the given degree."""
    if degree > MAX_INTERVAL_DEGREE:
        raise CapabilityError(
            f"interval quadrature degree {degree} exceeds the supported "
            f"maximum {MAX_INTERVAL_DEGREE}"
        )
    m = (max(int(degree), 1) + 2) // 2
    xs, ws = leggauss(m)
    return QuadratureRule("interval", 2 * m - 1, 0.5 * (xs + 1.0), 0.5 * ws)


def _check_reference_coords(points):
    pts = np.asarray(points, dtype=float)
    assert np.all(pts >= -1e-12) and np.all(pts.sum(axis=-1) <= 1.0 + 1e-12), (
        "coordinates outside the reference triangle"
    )
    return pts


def p1_shape(points):
    """P1 values at reference points, shape (..., 3)."""
    pts = _check_reference_coords(points)
    x, y = pts[..., 0], pts[..., 1]
    return np.stack([1.0 - x - y, x, y], axis=-1)


def p1_grad():
    """Constant P1 reference gradients, shape (3, 2)."""
    return np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def p2_shape(points):
    """P2 values at reference points, shape (..., 6)."""
    pts = _check_reference_coords(points)
    x, y = pts[..., 0], pts[..., 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    return np.stack(
        [
            l0 * (2.0 * l0 - 1.0),
            l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l1 * l2,
            4.0 * l2 * l0,
            4.0 * l0 * l1,
        ],
        axis=-1,
    )


def p2_grad(points):
    """P2 reference gradients at reference points, shape (..., 6, 2)."""
    pts = _check_reference_coords(points)
    x, y = pts[..., 0], pts[..., 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    g0 = np.array([-1.0, -1.0])
    g1 = np.array([1.0, 0.0])
    g2 = np.array([0.0, 1.0])

    def vertex(l, g):
        return (4.0 * l - 1.0)[..., None] * g

    def edge(la, ga, lb, gb):
        return 4.0 * (la[..., None] * gb + lb[..., None] * ga)

    return np.stack(
        [
            vertex(l0, g0),
            vertex(l1, g1),
            vertex(l2, g2),
            edge(l1, g1, l2, g2),
            edge(l2, g2, l0, g0),
            edge(l0, g0, l1, g1),
        ],
        axis=-2,
    )


def hermite_basis_coeffs():
    """Monomial coefficients of the six quintic Hermite shape functions.

    Row i holds the ascending-power coefficients of basis function i.  The
    coefficients solve the 6x6 interpolation system dual to the degree of
    freedom functionals, so applying functional j to function i gives the
    identity matrix.
    """
    nodes = HERMITE_NODES
    powers = np.arange(6)
    dof = np.empty((6, 6))
    # value functionals at 0, 1, 1/3, 2/3; derivative functionals at 0 and 1
    for row, node in enumerate((nodes[0], nodes[3], nodes[1], nodes[2])):
        dof[row] = node ** powers
    for row, node in ((4, nodes[0]), (5, nodes[3])):
        dof[row] = powers * node ** np.maximum(powers - 1, 0)
        dof[row, 0] = 0.0
    return np.linalg.solve(dof, np.eye(6)).T


class HermiteQuinticBasis:
    """Quintic Hermite shape functions on the reference interval [0, 1].

    On a physical element of length ell the two derivative shape functions
    must be scaled by ell so their degrees of freedom are the physical end
    slopes; :meth:`dof_scaling` returns the corresponding factors.
    """

    def __init__(self):
        coeffs = hermite_basis_coeffs()
        self._polys = [Polynomial(c) for c in coeffs]
        self._d1 = [p.deriv(1) for p in self._polys]
        self._d2 = [p.deriv(2) for p in self._polys]
        self.coeffs = coeffs

    def value(self, t):
        """Basis values at reference coordinates, shape (..., 6)."""
        t = np.asarray(t, dtype=float)
        return np.stack([p(t) for p in self._polys], axis=-1)

    def deriv1(self, t):
        """First reference derivatives, shape (..., 6)."""
        t = np.asarray(t, dtype=float)
        return np.stack([p(t) for p in self._d1], axis=-1)

    def deriv2(self, t):
        """Second reference derivatives, shape (..., 6)."""
        t = np.asarray(t, dtype=float)
        return np.stack([p(t) for p in self._d2], axis=-1)

    @staticmethod
    def dof_scaling(length):
        """Per-function scaling on an element of the given length."""
        return np.array([1.0, 1.0, 1.0, 1.0, length, length])
