"""Structured meshes for the cavity-plate geometry.

The fluid domain is the unit square, triangulated by n x n uniform cells
each split along the diagonal from the lower-left to the upper-right
corner.  Velocity lives on the quadratic node set (vertices plus edge
midpoints, a (2n+1)^2 grid), pressure on the (n+1)^2 vertex grid.  The
elastic plate occupies the top edge y = 1 and is meshed independently by
equidistant four-node quintic Hermite elements; its node count is tied to
the fluid resolution through ceil(2n/3) elements so that the two meshes
share as many interface nodes as possible (all of them when n is a
multiple of 3).

Boundary tags: the top edge strictly between the corners is the active
interface; the remaining three edges together with both top corners form
the rigid wall where the velocity vanishes.

Node numbering is lexicographic by (y, x) which makes sparsity patterns
and all outputs reproducible run to run.
"""

from dataclasses import dataclass

import numpy as np

from . import basis as fembasis
from .errors import CouplingError, InvalidMeshError, MeshCompatibilityError

TAG_INTERIOR = 0
TAG_WALL = 1
TAG_PLATE = 2

_TAG_NAMES = {TAG_INTERIOR: "interior", TAG_WALL: "S", TAG_PLATE: "plate"}


@dataclass(frozen=True)
class FluidMesh:
    """Uniform Taylor-Hood triangulation of the unit square."""

    n: int
    h: float
    vertices: np.ndarray        # (num_p1, 2) pressure nodes
    triangles: np.ndarray       # (num_tri, 3) vertex indices, CCW
    p2_nodes: np.ndarray        # (num_p2, 2) velocity nodes
    p2_connectivity: np.ndarray  # (num_tri, 6) velocity nodes per triangle
    node_tags: np.ndarray       # (num_p2,) TAG_* per velocity node

    @property
    def p1_connectivity(self):
        return self.triangles

    @property
    def num_p1(self):
        return self.vertices.shape[0]

    @property
    def num_p2(self):
        return self.p2_nodes.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    @property
    def plate_nodes(self):
        """Velocity nodes on the interface, ordered by x."""
        idx = np.flatnonzero(self.node_tags == TAG_PLATE)
        return idx[np.argsort(self.p2_nodes[idx, 0], kind="stable")]

    @property
    def wall_nodes(self):
        return np.flatnonzero(self.node_tags == TAG_WALL)


@dataclass(frozen=True)
class PlateMesh:
    """Equidistant four-node quintic Hermite mesh of the interface.

    Global degrees of freedom are the lagrange_count nodal values followed
    by element_count + 1 endpoint derivatives, giving
    dof_count = lagrange_count + (lagrange_count + 2) / 3.
    """

    element_count: int
    lagrange_x: np.ndarray       # (lagrange_count,) node coordinates
    element_nodes: np.ndarray    # (element_count, 4) node coordinates
    hermite_dof_map: np.ndarray  # (element_count, 6) global DOF indices
    fluid_trace_map: np.ndarray  # (lagrange_count,) fluid node or -1
    element_length: float

    @property
    def lagrange_count(self):
        return self.lagrange_x.shape[0]

    @property
    def dof_count(self):
        return self.lagrange_count + self.element_count + 1


def build_fluid_mesh(n):
    """Build the structured fluid mesh with n subdivisions per side."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidMeshError(f"need an integer subdivision count >= 2, got {n!r}")
    n = int(n)
    h = 1.0 / n

    xs = np.arange(n + 1) / n
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    triangles = []
    for j in range(n):
        for i in range(n):
            ll, lr = vid(i, j), vid(i + 1, j)
            ul, ur = vid(i, j + 1), vid(i + 1, j + 1)
            triangles.append((ll, lr, ur))   # below the diagonal
            triangles.append((ll, ur, ul))   # above the diagonal
    triangles = np.array(triangles, dtype=np.int64)

    fine = np.arange(2 * n + 1) / (2 * n)
    FX, FY = np.meshgrid(fine, fine, indexing="xy")
    p2_nodes = np.column_stack([FX.ravel(), FY.ravel()])

    stride = 2 * n + 1
    vi = (triangles % (n + 1)) * 2        # fine-grid column of each vertex
    vj = (triangles // (n + 1)) * 2       # fine-grid row
    corner = vj * stride + vi
    mid = np.empty_like(corner)
    for k, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        mid[:, k] = ((vj[:, a] + vj[:, b]) // 2) * stride + (vi[:, a] + vi[:, b]) // 2
    p2_connectivity = np.hstack([corner, mid])

    i_idx = np.arange(stride * stride) % stride
    j_idx = np.arange(stride * stride) // stride
    node_tags = np.full(stride * stride, TAG_INTERIOR, dtype=np.int8)
    on_side = (i_idx == 0) | (i_idx == 2 * n) | (j_idx == 0)
    on_top = j_idx == 2 * n
    node_tags[on_top] = TAG_PLATE
    node_tags[on_side] = TAG_WALL        # top corners stay on the wall

    return FluidMesh(
        n=n,
        h=h,
        vertices=vertices,
        triangles=triangles,
        p2_nodes=p2_nodes,
        p2_connectivity=p2_connectivity,
        node_tags=node_tags,
    )


def uniform_plate_mesh(element_count, fluid_trace_map=None):
    """Plate mesh with the given number of equidistant elements on [0, 1]."""
    if element_count < 1:
        raise MeshCompatibilityError("plate needs at least one element")
    count = int(element_count)
    m_tilde = 3 * count + 1
    lagrange_x = np.arange(m_tilde) / (3.0 * count)
    element_nodes = np.stack([lagrange_x[3 * e : 3 * e + 4] for e in range(count)])
    dof_map = np.empty((count, 6), dtype=np.int64)
    for e in range(count):
        dof_map[e] = (
            3 * e, 3 * e + 3, 3 * e + 1, 3 * e + 2, m_tilde + e, m_tilde + e + 1,
        )
    if fluid_trace_map is None:
        fluid_trace_map = np.full(m_tilde, -1, dtype=np.int64)
    return PlateMesh(
        element_count=count,
        lagrange_x=lagrange_x,
        element_nodes=element_nodes,
        hermite_dof_map=dof_map,
        fluid_trace_map=fluid_trace_map,
        element_length=1.0 / count,
    )


def build_plate_mesh(fluid):
    """Build the interface plate mesh matched to a fluid mesh.

    The element count ceil(2n/3) makes the Lagrange nodes coincide with
    the fluid interface nodes whenever n is divisible by 3; otherwise the
    shared nodes are the endpoints plus any accidental grid coincidences
    and the remaining trace data is taken by point evaluation.
    """
    top_count = 2 * fluid.n + 1
    if top_count < 5:
        raise MeshCompatibilityError(
            "fluid mesh exposes fewer than 5 interface nodes; refine it"
        )
    count = (2 * fluid.n + 2) // 3
    plate = uniform_plate_mesh(count)

    stride = 2 * fluid.n + 1
    top_row_start = 2 * fluid.n * stride
    trace = np.full(plate.lagrange_count, -1, dtype=np.int64)
    for m, x in enumerate(plate.lagrange_x):
        i = int(round(x * 2 * fluid.n))
        if abs(i / (2.0 * fluid.n) - x) <= 1e-12:
            trace[m] = top_row_start + i
    if trace[0] < 0 or trace[-1] < 0:
        raise MeshCompatibilityError("plate endpoints must lie on fluid nodes")
    return uniform_plate_mesh(count, fluid_trace_map=trace)


def clamped_dofs(plate):
    """Global indices of the four clamped DOFs (value and slope at 0 and 1)."""
    m_tilde = plate.lagrange_count
    return np.array(
        [0, m_tilde - 1, m_tilde, m_tilde + plate.element_count], dtype=np.int64
    )


def locate_plate_elements(plate, x):
    """Element index and local coordinate for points in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 1.0 + 1e-12):
        raise CouplingError("plate evaluation point outside [0, 1]")
    e = np.minimum((x * plate.element_count).astype(np.int64), plate.element_count - 1)
    t = x * plate.element_count - e
    return e, np.clip(t, 0.0, 1.0)


def evaluate_plate(plate, coeffs, x, deriv=0, basis=None):
    """Evaluate a Hermite coefficient vector (or a derivative) at points x."""
    if basis is None:
        basis = fembasis.HermiteQuinticBasis()
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e, t = locate_plate_elements(plate, x)
    if deriv == 0:
        shape = basis.value(t)
    elif deriv == 1:
        shape = basis.deriv1(t) / plate.element_length
    elif deriv == 2:
        shape = basis.deriv2(t) / plate.element_length**2
    else:
        raise ValueError("deriv must be 0, 1 or 2")
    shape = shape * basis.dof_scaling(plate.element_length)
    local = coeffs[plate.hermite_dof_map[e]]
    return np.einsum("pk,pk->p", shape, local)


def dump_mesh(mesh, path):
    """Write a plain-text node listing: index, x, y, tag (one per line)."""
    with open(path, "w", encoding="ascii") as handle:
        for idx, ((x, y), tag) in enumerate(zip(mesh.p2_nodes, mesh.node_tags)):
            handle.write(f"{idx} {x:.17g} {y:.17g} {_TAG_NAMES[int(tag)]}\n")
