"""Global matrix and load assembly.

Fluid blocks (velocity mass Mf, velocity stiffness Kf, pressure mass Mp,
divergence blocks Bx/By and the pressure mean vector Ep) are integrated
with the degree-5 triangle rule, which is exact for every entry.  The
plate blocks (Hermite mass Ms, first-derivative stiffness Ks, bending
matrix S and the plate mean vector Es) use an 8-point Gauss rule of
degree 15, exact even for the cubic-weighted quintic products that appear
in the Picard matrix.  Load vectors default to a degree-10 triangle rule
so their quadrature error sits far below the discretization error.

All matrices are accumulated as COO triplets in a fixed element order and
compressed to CSR, which sums duplicates deterministically; repeated runs
produce bit-identical matrices.

Per-iterate operators: ``assemble_oseen`` builds the advection matrices
(u1 d/dx phi_j, phi_i) and (u2 d/dy phi_j, phi_i) from the previous
velocity iterate, and ``assemble_plate_picard`` builds the interface
coupling matrix (w2 theta_j, theta_i)/2 from the previous plate velocity.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .basis import (
    HermiteQuinticBasis,
    interval_quadrature,
    p1_shape,
    p2_grad,
    p2_shape,
    triangle_quadrature,
)
from .errors import NumericInputError

ASSEMBLY_TRIANGLE_DEGREE = 5
LOAD_TRIANGLE_DEGREE = 10
PLATE_GAUSS_POINTS = 8


@dataclass
class SparseSystem:
    """Refinement-constant blocks of the discrete interaction system."""

    Mf: sp.csr_matrix   # velocity mass (phi_j, phi_i)
    Kf: sp.csr_matrix   # velocity stiffness (grad phi_j, grad phi_i)
    Bx: sp.csr_matrix   # -(d/dx phi_j, psi_i), pressure rows
    By: sp.csr_matrix   # -(d/dy phi_j, psi_i)
    Mp: sp.csr_matrix   # pressure mass (psi_j, psi_i)
    Ms: sp.csr_matrix   # plate mass (theta_j, theta_i)
    Ks: sp.csr_matrix   # plate stiffness (theta_j', theta_i')
    S: sp.csr_matrix    # plate bending (theta_j'', theta_i'')
    Ep: np.ndarray      # pressure mean vector (psi_i, 1)
    Es: np.ndarray      # plate mean vector (theta_i, 1)


def fluid_geometry(fluid):
    """Per-triangle affine data: vertex coords, Jacobians, |det J|, inv(J)^T."""
    coords = fluid.vertices[fluid.triangles]          # (ne, 3, 2)
    jac = np.stack(
        [coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]], axis=-1
    )                                                 # (ne, 2, 2), columns are edges
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv_jt = np.empty_like(jac)
    inv_jt[:, 0, 0] = jac[:, 1, 1]
    inv_jt[:, 0, 1] = -jac[:, 1, 0]
    inv_jt[:, 1, 0] = -jac[:, 0, 1]
    inv_jt[:, 1, 1] = jac[:, 0, 0]
    inv_jt /= det[:, None, None]
    return coords, jac, det, inv_jt


def physical_points(coords, jac, ref_points):
    """Map reference points into every triangle, shape (ne, nq, 2)."""
    return coords[:, None, 0, :] + np.einsum("edk,qk->eqd", jac, ref_points)


def physical_p2_gradients(fluid, rule):
    """P2 gradients at the rule's points in every triangle, (ne, nq, 6, 2)."""
    _, _, _, inv_jt = fluid_geometry(fluid)
    return np.einsum("edk,qik->eqid", inv_jt, p2_grad(rule.points))


def _scatter(rows, cols, data, shape):
    mat = sp.coo_matrix((data.ravel(), (rows.ravel(), cols.ravel())), shape=shape)
    return mat.tocsr()


def _pair_indices(conn_rows, conn_cols):
    ne, ni = conn_rows.shape
    nj = conn_cols.shape[1]
    rows = np.repeat(conn_rows[:, :, None], nj, axis=2)
    cols = np.repeat(conn_cols[:, None, :], ni, axis=1)
    return rows, cols


def _plate_quad_data(plate, points=PLATE_GAUSS_POINTS, basis=None):
    """Gauss data shared by every (uniform) plate element."""
    if basis is None:
        basis = HermiteQuinticBasis()
    rule = interval_quadrature(2 * points - 1)
    ell = plate.element_length
    scale = basis.dof_scaling(ell)
    val = basis.value(rule.points) * scale
    d1 = basis.deriv1(rule.points) * scale / ell
    d2 = basis.deriv2(rule.points) * scale / ell**2
    return rule, val, d1, d2


def fluid_element_matrices(fluid, degree=ASSEMBLY_TRIANGLE_DEGREE):
    """Per-triangle blocks: mass/stiffness (ne,6,6), divergence (ne,3,6),
    pressure mass (ne,3,3) and the P1 element loads (ne,3)."""
    rule = triangle_quadrature(degree)
    w = rule.weights
    v2 = p2_shape(rule.points)                  # (nq, 6)
    v1 = p1_shape(rule.points)                  # (nq, 3)
    _, _, det, _ = fluid_geometry(fluid)
    grads = physical_p2_gradients(fluid, rule)  # (ne, nq, 6, 2)
    scale = det[:, None, None]

    ref_mass = np.einsum("q,qi,qj->ij", w, v2, v2)
    ref_mp = np.einsum("q,qi,qj->ij", w, v1, v1)
    return {
        "mass": scale * ref_mass,
        "stiffness": np.einsum("q,eqid,eqjd->eij", w, grads, grads) * scale,
        "div_x": -np.einsum("q,qi,eqj->eij", w, v1, grads[..., 0]) * scale,
        "div_y": -np.einsum("q,qi,eqj->eij", w, v1, grads[..., 1]) * scale,
        "p_mass": scale * ref_mp,
        "p_load": det[:, None] * np.einsum("q,qi->i", w, v1),
    }


def plate_element_matrices(plate, basis=None):
    """Shared per-element plate blocks (6,6) and the element mean load (6,)."""
    prule, val, d1, d2 = _plate_quad_data(plate, basis=basis)
    pw = prule.weights * plate.element_length
    return {
        "mass": np.einsum("q,qi,qj->ij", pw, val, val),
        "stiffness": np.einsum("q,qi,qj->ij", pw, d1, d1),
        "bending": np.einsum("q,qi,qj->ij", pw, d2, d2),
        "mean": np.einsum("q,qi->i", pw, val),
    }


def assemble_constant_matrices(fluid, plate):
    """Assemble every refinement-constant block of the coupled system."""
    elems = fluid_element_matrices(fluid)
    conn2 = fluid.p2_connectivity
    conn1 = fluid.p1_connectivity
    m2, m1 = fluid.num_p2, fluid.num_p1

    mf = _scatter(*_pair_indices(conn2, conn2), elems["mass"], (m2, m2))
    kf = _scatter(*_pair_indices(conn2, conn2), elems["stiffness"], (m2, m2))
    mp = _scatter(*_pair_indices(conn1, conn1), elems["p_mass"], (m1, m1))
    bx = _scatter(*_pair_indices(conn1, conn2), elems["div_x"], (m1, m2))
    by = _scatter(*_pair_indices(conn1, conn2), elems["div_y"], (m1, m2))
    ep = np.zeros(m1)
    np.add.at(ep, conn1.ravel(), elems["p_load"].ravel())

    pelems = plate_element_matrices(plate)
    dofs = plate.hermite_dof_map
    nd = plate.dof_count
    ne = plate.element_count

    def spread(block):
        return np.ascontiguousarray(np.broadcast_to(block, (ne, 6, 6)))

    ms = _scatter(*_pair_indices(dofs, dofs), spread(pelems["mass"]), (nd, nd))
    ks = _scatter(*_pair_indices(dofs, dofs), spread(pelems["stiffness"]), (nd, nd))
    s = _scatter(*_pair_indices(dofs, dofs), spread(pelems["bending"]), (nd, nd))
    es = np.zeros(nd)
    np.add.at(es, dofs.ravel(),
              np.broadcast_to(pelems["mean"], (ne, 6)).ravel())

    return SparseSystem(Mf=mf, Kf=kf, Bx=bx, By=by, Mp=mp, Ms=ms, Ks=ks, S=s, Ep=ep, Es=es)


def oseen_element_matrices(fluid, u1n, u2n, degree=ASSEMBLY_TRIANGLE_DEGREE):
    """Per-triangle advection blocks (tx, ty), each of shape (ne, 6, 6)."""
    u1n = np.asarray(u1n, dtype=float)
    u2n = np.asarray(u2n, dtype=float)
    if not (np.all(np.isfinite(u1n)) and np.all(np.isfinite(u2n))):
        raise NumericInputError("velocity iterate contains non-finite entries")
    if u1n.shape != (fluid.num_p2,) or u2n.shape != (fluid.num_p2,):
        raise NumericInputError("velocity iterate has the wrong length")

    rule = triangle_quadrature(degree)
    w = rule.weights
    v2 = p2_shape(rule.points)
    _, _, det, _ = fluid_geometry(fluid)
    grads = physical_p2_gradients(fluid, rule)
    conn = fluid.p2_connectivity

    u1q = np.einsum("qi,ei->eq", v2, u1n[conn])
    u2q = np.einsum("qi,ei->eq", v2, u2n[conn])
    scale = det[:, None, None]
    tx = np.einsum("q,eq,qi,eqj->eij", w, u1q, v2, grads[..., 0]) * scale
    ty = np.einsum("q,eq,qi,eqj->eij", w, u2q, v2, grads[..., 1]) * scale
    return tx, ty


def assemble_oseen(fluid, u1n, u2n):
    """Advection matrices for the current velocity iterate.

    Entry (i, j) of the first matrix is (u1n d/dx phi_j, phi_i) over the
    fluid domain, with u1n expanded in the P2 basis; the second matrix is
    the analogous y-derivative term weighted by u2n.
    """
    tx_e, ty_e = oseen_element_matrices(fluid, u1n, u2n)
    conn = fluid.p2_connectivity
    m2 = fluid.num_p2
    rows, cols = _pair_indices(conn, conn)
    return _scatter(rows, cols, tx_e, (m2, m2)), _scatter(rows, cols, ty_e, (m2, m2))


def plate_picard_element_matrices(plate, w2n, basis=None):
    """Per-element interface coupling blocks (w2n theta_j, theta_i)/2."""
    w2n = np.asarray(w2n, dtype=float)
    if w2n.shape != (plate.dof_count,):
        raise NumericInputError("plate iterate has the wrong length")
    if not np.all(np.isfinite(w2n)):
        raise NumericInputError("plate iterate contains non-finite entries")

    prule, val, _, _ = _plate_quad_data(plate, basis=basis)
    pw = prule.weights * plate.element_length
    w2q = np.einsum("qi,ei->eq", val, w2n[plate.hermite_dof_map])
    return 0.5 * np.einsum("q,eq,qi,qj->eij", pw, w2q, val, val)


def assemble_plate_picard(plate, w2n, basis=None):
    """Interface coupling matrix (w2n theta_j, theta_i)/2 for the iterate."""
    bn_e = plate_picard_element_matrices(plate, w2n, basis=basis)
    nd = plate.dof_count
    dofs = plate.hermite_dof_map
    return _scatter(*_pair_indices(dofs, dofs), bn_e, (nd, nd))


@dataclass
class LoadSpec:
    """Forcing fields feeding the four load vectors.

    ``f1``/``f2`` are fluid momentum forcings of (x, y); ``fp`` is the
    plate forcing and ``g1`` the displacement-update data, both of x.
    Evaluators must be pure and vectorized.
    """

    f1: callable
    f2: callable
    fp: callable
    g1: callable
    fluid_degree: int = LOAD_TRIANGLE_DEGREE
    plate_points: int = PLATE_GAUSS_POINTS


def assemble_loads(fluid, plate, loads):
    """Assemble (F1, F2, F3, F4) for the given forcing fields."""
    rule = triangle_quadrature(loads.fluid_degree)
    w = rule.weights
    v2 = p2_shape(rule.points)
    coords, jac, det, _ = fluid_geometry(fluid)
    pts = physical_points(coords, jac, rule.points)
    conn = fluid.p2_connectivity

    f1 = np.zeros(fluid.num_p2)
    f2 = np.zeros(fluid.num_p2)
    for target, func in ((f1, loads.f1), (f2, loads.f2)):
        vals = np.asarray(func(pts[..., 0], pts[..., 1]), dtype=float)
        vals = np.broadcast_to(vals, pts.shape[:2])
        if not np.all(np.isfinite(vals)):
            raise NumericInputError("fluid forcing evaluated to non-finite values")
        contrib = np.einsum("q,eq,qi->ei", w, vals, v2) * det[:, None]
        np.add.at(target, conn.ravel(), contrib.ravel())

    prule, val, _, _ = _plate_quad_data(plate, points=loads.plate_points)
    pw = prule.weights * plate.element_length
    xq = plate.element_nodes[:, 0][:, None] + plate.element_length * prule.points
    f3 = np.zeros(plate.dof_count)
    f4 = np.zeros(plate.dof_count)
    for target, func in ((f3, loads.fp), (f4, loads.g1)):
        vals = np.broadcast_to(np.asarray(func(xq), dtype=float), xq.shape)
        if not np.all(np.isfinite(vals)):
            raise NumericInputError("plate forcing evaluated to non-finite values")
        contrib = np.einsum("q,eq,qi->ei", pw, vals, val)
        np.add.at(target, plate.hermite_dof_map.ravel(), contrib.ravel())

    return f1, f2, f3, f4


def apply_dirichlet(matrix, rhs, dofs, values, symmetric=True):
    """Impose fixed values on the listed DOFs of a square sparse system.

    The symmetric variant moves the constrained columns to the right-hand
    side before replacing rows and columns by identity, which keeps a
    symmetric operator symmetric; the plain variant only replaces rows.
    Returns the modified (matrix, rhs) pair; inputs are not mutated.
    """
    dofs = np.asarray(dofs, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    n = matrix.shape[0]
    rhs = np.array(rhs, dtype=float, copy=True)

    keep = np.ones(n)
    keep[dofs] = 0.0
    keep_diag = sp.diags(keep)
    pin_diag = sp.diags(1.0 - keep)

    if symmetric:
        lift = np.zeros(n)
        lift[dofs] = values
        rhs -= matrix @ lift
        out = (keep_diag @ matrix @ keep_diag + pin_diag).tocsr()
    else:
        out = (keep_diag @ matrix + pin_diag).tocsr()
    rhs[dofs] = values
    return out, rhs


_DUMPABLE = ("Mf", "Kf", "Bx", "By", "Mp", "Ms", "Ks", "S", "Ep", "Es")


def dump_matrices(system, directory, blocks=None):
    """Write blocks in MatrixMarket format, one file per selected block."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in blocks if blocks is not None else _DUMPABLE:
        if name not in _DUMPABLE:
            raise KeyError(f"unknown block {name!r}")
        obj = getattr(system, name)
        target = directory / f"{name}.mtx"
        if isinstance(obj, np.ndarray):
            scipy.io.mmwrite(str(target), sp.coo_matrix(obj[:, None]))
        else:
            scipy.io.mmwrite(str(target), obj.tocoo())
        written.append(target)
    return written
