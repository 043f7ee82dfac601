"""Independent brute-force oracles used to cross-check assembly.

Everything here deliberately avoids the production code paths: quadrature
comes from a Gauss-Legendre tensor rule collapsed onto the triangle with
the Jacobian kept in the weights (the library uses a Gauss-Jacobi conical
rule), shape functions are written out explicitly, and all element
integrals are accumulated with naive Python loops.
"""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from nsplate.basis import hermite_basis_coeffs


def duffy_rule(m=10):
    """Collapsed tensor Gauss rule on the reference triangle."""
    xs, ws = leggauss(m)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws
    pts, wts = [], []
    for s, wsv in zip(xs, ws):
        for t, wtv in zip(xs, ws):
            pts.append((s * (1.0 - t), t))
            wts.append(wsv * wtv * (1.0 - t))
    return np.array(pts), np.array(wts)


def triangle_monomial_integral(a, b):
    """Exact integral of x^a y^b over the reference triangle."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def p2_values(s, t):
    l0, l1, l2 = 1.0 - s - t, s, t
    return np.array([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1,
    ])


def p2_ref_gradients(s, t):
    l0, l1, l2 = 1.0 - s - t, s, t
    return np.array([
        [1 - 4 * l0, 1 - 4 * l0],
        [4 * l1 - 1, 0.0],
        [0.0, 4 * l2 - 1],
        [4 * l2, 4 * l1],
        [-4 * l2, 4 * (l0 - l2)],
        [4 * (l0 - l1), -4 * l1],
    ])


def p1_values(s, t):
    return np.array([1.0 - s - t, s, t])


def fluid_element_oracle(coords, kind, u1_local=None, u2_local=None, m=10):
    """Element matrix for one triangle by naive high-order quadrature.

    kind: mass | stiffness | div_x | div_y | p_mass | oseen_x | oseen_y.
    """
    pts, wts = duffy_rule(m)
    jac = np.array([
        [coords[1, 0] - coords[0, 0], coords[2, 0] - coords[0, 0]],
        [coords[1, 1] - coords[0, 1], coords[2, 1] - coords[0, 1]],
    ])
    det = np.linalg.det(jac)
    inv_jt = np.linalg.inv(jac).T
    shape = {"mass": (6, 6), "stiffness": (6, 6), "div_x": (3, 6),
             "div_y": (3, 6), "p_mass": (3, 3), "oseen_x": (6, 6),
             "oseen_y": (6, 6)}[kind]
    out = np.zeros(shape)
    for (s, t), wq in zip(pts, wts):
        v2 = p2_values(s, t)
        v1 = p1_values(s, t)
        grad = p2_ref_gradients(s, t) @ inv_jt.T
        scale = wq * det
        if kind == "mass":
            for i in range(6):
                for j in range(6):
                    out[i, j] += scale * v2[i] * v2[j]
        elif kind == "stiffness":
            for i in range(6):
                for j in range(6):
                    out[i, j] += scale * (grad[i] @ grad[j])
        elif kind == "p_mass":
            for i in range(3):
                for j in range(3):
                    out[i, j] += scale * v1[i] * v1[j]
        elif kind in ("div_x", "div_y"):
            comp = 0 if kind == "div_x" else 1
            for i in range(3):
                for j in range(6):
                    out[i, j] -= scale * v1[i] * grad[j, comp]
        else:
            comp = 0 if kind == "oseen_x" else 1
            carrier = u1_local if kind == "oseen_x" else u2_local
            uq = float(v2 @ carrier)
            for i in range(6):
                for j in range(6):
                    out[i, j] += scale * uq * v2[i] * grad[j, comp]
    return out


def _poly_deriv(coeffs, order):
    out = np.asarray(coeffs, dtype=float)
    for _ in range(order):
        out = out[1:] * np.arange(1, out.size)
    return out


def _poly_eval(coeffs, t):
    return sum(c * t**k for k, c in enumerate(coeffs))


def hermite_shape_oracle(t, ell, deriv=0):
    """Physical-element Hermite shapes by direct polynomial evaluation."""
    table = hermite_basis_coeffs()
    scale = np.array([1.0, 1.0, 1.0, 1.0, ell, ell])
    vals = np.array([
        _poly_eval(_poly_deriv(row, deriv), t) for row in table
    ])
    return vals * scale / ell**deriv


def plate_element_oracle(ell, x0, kind, w2_local=None, fields=None, m=16):
    """Plate element integrals by naive 16-point Gauss quadrature.

    kind: mass | stiffness | bending | picard | mean | load.
    ``fields`` is a scalar function of x for kind == "load".
    """
    xs, ws = leggauss(m)
    xs = 0.5 * (xs + 1.0)
    ws = 0.5 * ws * ell
    if kind in ("mean", "load"):
        out = np.zeros(6)
    else:
        out = np.zeros((6, 6))
    for t, wq in zip(xs, ws):
        if kind == "stiffness":
            vals = hermite_shape_oracle(t, ell, deriv=1)
        elif kind == "bending":
            vals = hermite_shape_oracle(t, ell, deriv=2)
        else:
            vals = hermite_shape_oracle(t, ell)
        if kind == "mean":
            out += wq * vals
        elif kind == "load":
            out += wq * fields(x0 + ell * t) * vals
        elif kind == "picard":
            w2q = float(hermite_shape_oracle(t, ell) @ w2_local)
            for i in range(6):
                for j in range(6):
                    out[i, j] += 0.5 * wq * w2q * vals[i] * vals[j]
        else:
            for i in range(6):
                for j in range(6):
                    out[i, j] += wq * vals[i] * vals[j]
    return out
