"""Interface mechanisms between the fluid and the plate.

Two couplings cross the top edge.  First, the fluid velocity trace: the
vertical velocity at every interface node is pinned to the current plate
velocity, evaluated there from its Hermite expansion (plain node-value
copying when the meshes align), while the horizontal component and the
wall nodes are pinned to zero.  Second, the pressure load on the plate:
the linear pressure trace is integrated against each Hermite shape
function edge by edge, splitting at both the pressure-edge and the
plate-element breakpoints so the piecewise-polynomial integrand is
integrated exactly.
"""

from dataclasses import dataclass

import numpy as np

from .basis import HermiteQuinticBasis, interval_quadrature
from .errors import ConstraintConflictError, CouplingError
from .meshing import evaluate_plate, locate_plate_elements
from .assembly import apply_dirichlet


@dataclass(frozen=True)
class TraceConstraint:
    """Dirichlet data layout for one fluid velocity solve."""

    plate_nodes: np.ndarray  # interface P2 nodes, ascending x
    plate_x: np.ndarray      # their x coordinates
    wall_nodes: np.ndarray   # no-slip nodes (three sides plus top corners)


def build_trace_constraint(fluid, plate):
    """Collect the constrained velocity nodes of the fluid problem."""
    idx = fluid.plate_nodes
    if idx.size == 0:
        raise CouplingError("fluid mesh has no interface nodes")
    coords = fluid.p2_nodes[idx]
    if np.any(np.abs(coords[:, 1] - 1.0) > 1e-14):
        raise CouplingError("an interface-tagged node is off the top edge")
    # ensure each node has a well-defined evaluation point on the plate
    locate_plate_elements(plate, coords[:, 0])
    return TraceConstraint(
        plate_nodes=idx, plate_x=coords[:, 0].copy(), wall_nodes=fluid.wall_nodes
    )


def trace_values(constraint, plate, w2, basis=None):
    """Vertical velocity imposed at the interface nodes for an iterate."""
    return evaluate_plate(plate, w2, constraint.plate_x, basis=basis)


def velocity_dirichlet_data(fluid, constraint, plate, w2n, basis=None):
    """(dofs, values) pairs for both velocity components of the big system.

    Component one occupies DOFs [0, M), component two [M, 2M).  Raises if
    a DOF would receive two different values.
    """
    m = fluid.num_p2
    u1_dofs = np.concatenate([constraint.wall_nodes, constraint.plate_nodes])
    u1_vals = np.zeros(u1_dofs.size)
    u2_wall = constraint.wall_nodes + m
    u2_plate = constraint.plate_nodes + m
    u2_vals = trace_values(constraint, plate, w2n, basis=basis)

    dofs = np.concatenate([u1_dofs, u2_wall, u2_plate])
    values = np.concatenate([u1_vals, np.zeros(u2_wall.size), u2_vals])
    order = np.argsort(dofs, kind="stable")
    dofs, values = dofs[order], values[order]
    dup = dofs[1:] == dofs[:-1]
    if np.any(dup):
        same = np.abs(values[1:][dup] - values[:-1][dup]) <= 1e-14
        if not np.all(same):
            raise ConstraintConflictError("conflicting values on one velocity DOF")
        keep = np.concatenate([[True], ~dup])
        dofs, values = dofs[keep], values[keep]
    return dofs, values


def apply_velocity_dirichlet(matrix, rhs, fluid, constraint, plate, w2n,
                             symmetric=True, basis=None):
    """Constrain the assembled fluid system to the boundary data.

    Rows of constrained DOFs become identity rows carrying the imposed
    values; with ``symmetric`` the matching columns are moved to the
    right-hand side first so the leading block stays symmetric.
    """
    dofs, values = velocity_dirichlet_data(fluid, constraint, plate, w2n, basis=basis)
    out, rhs = apply_dirichlet(matrix, rhs, dofs, values, symmetric=symmetric)
    return out, rhs, dofs, values


@dataclass(frozen=True)
class PressureTraceIndex:
    """Pressure elements with an edge of positive length on the top edge.

    The two linear basis restrictions active on each edge are the hat
    functions of ``node_left``/``node_right``; together they are a
    partition of unity along the interface.
    """

    triangles: np.ndarray   # owning triangle per edge
    x_left: np.ndarray
    x_right: np.ndarray
    node_left: np.ndarray   # global P1 node at x_left
    node_right: np.ndarray


def build_pressure_trace(fluid):
    """Index the pressure-mesh edges lying on the interface, left to right."""
    tris, xl, xr, nl, nr = [], [], [], [], []
    verts = fluid.vertices
    for tri_idx, tri in enumerate(fluid.p1_connectivity):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            va, vb = tri[a], tri[b]
            if verts[va, 1] == 1.0 and verts[vb, 1] == 1.0:
                left, right = (va, vb) if verts[va, 0] < verts[vb, 0] else (vb, va)
                tris.append(tri_idx)
                xl.append(verts[left, 0])
                xr.append(verts[right, 0])
                nl.append(left)
                nr.append(right)
    if not tris:
        raise CouplingError("no pressure edges found on the interface")
    order = np.argsort(xl, kind="stable")
    return PressureTraceIndex(
        triangles=np.asarray(tris, dtype=np.int64)[order],
        x_left=np.asarray(xl, dtype=float)[order],
        x_right=np.asarray(xr, dtype=float)[order],
        node_left=np.asarray(nl, dtype=np.int64)[order],
        node_right=np.asarray(nr, dtype=np.int64)[order],
    )


def pressure_plate_load(index, p, plate, basis=None, points=8):
    """Integrate the pressure trace against every Hermite shape function.

    Returns the vector with entries integral of p_h(x, 1) theta_j(x) over
    the interface.  Subintervals are cut at every pressure-edge endpoint
    and plate-element boundary, so an m-point Gauss rule with 2m-1 >= 6 is
    exact for the (linear x quintic) integrand.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.shape[0] <= int(index.node_right.max()):
        raise CouplingError("pressure vector does not match the trace index")
    if basis is None:
        basis = HermiteQuinticBasis()
    rule = interval_quadrature(2 * points - 1)

    cuts = np.union1d(
        np.concatenate([index.x_left, index.x_right]),
        np.arange(plate.element_count + 1) / plate.element_count,
    )
    out = np.zeros(plate.dof_count)
    scale = basis.dof_scaling(plate.element_length)
    edge_of = np.searchsorted(index.x_left, cuts[:-1], side="right") - 1
    for a, b, k in zip(cuts[:-1], cuts[1:], edge_of):
        if b - a <= 1e-15:
            continue
        xq = a + (b - a) * rule.points
        wq = (b - a) * rule.weights
        frac = (xq - index.x_left[k]) / (index.x_right[k] - index.x_left[k])
        pq = (1.0 - frac) * p[index.node_left[k]] + frac * p[index.node_right[k]]
        e, t = locate_plate_elements(plate, xq)
        elem = int(e[0])
        shape = basis.value(t) * scale
        out[plate.hermite_dof_map[elem]] += np.einsum("q,q,qi->i", wq, pq, shape)
    return out
