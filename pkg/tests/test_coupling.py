import numpy as np
import pytest
from numpy.polynomial import Polynomial

from nsplate.assembly import assemble_constant_matrices
from nsplate.basis import hermite_basis_coeffs, interval_quadrature
from nsplate.coupling import (
    TraceConstraint,
    build_pressure_trace,
    build_trace_constraint,
    pressure_plate_load,
    trace_values,
    velocity_dirichlet_data,
)
from nsplate.errors import ConstraintConflictError, CouplingError
from nsplate.meshing import (
    TAG_PLATE,
    build_fluid_mesh,
    build_plate_mesh,
    evaluate_plate,
    uniform_plate_mesh,
)
from nsplate.mms import ManufacturedProblem, interpolate_plate


@pytest.fixture(scope="module")
def meshes4():
    fluid = build_fluid_mesh(4)
    return fluid, build_plate_mesh(fluid)


def _manufactured_w2(plate):
    problem = ManufacturedProblem()
    return interpolate_plate(plate, problem.w2, lambda x: problem.w2_deriv(x, 1))


def test_trace_constraint_covers_interface_once(meshes4):
    fluid, plate = meshes4
    constraint = build_trace_constraint(fluid, plate)
    tagged = np.flatnonzero(fluid.node_tags == TAG_PLATE)
    assert sorted(constraint.plate_nodes.tolist()) == sorted(tagged.tolist())
    assert len(set(constraint.plate_nodes.tolist())) == constraint.plate_nodes.size
    corners = [
        i for i in range(fluid.num_p2)
        if fluid.p2_nodes[i, 1] == 1.0 and fluid.p2_nodes[i, 0] in (0.0, 1.0)
    ]
    assert not set(corners) & set(constraint.plate_nodes.tolist())
    assert set(corners) <= set(constraint.wall_nodes.tolist())


def test_zero_plate_velocity_gives_homogeneous_data(meshes4):
    fluid, plate = meshes4
    constraint = build_trace_constraint(fluid, plate)
    vals = trace_values(constraint, plate, np.zeros(plate.dof_count))
    assert np.abs(vals).max() == 0.0


def test_manufactured_trace_values(meshes4):
    fluid, plate = meshes4
    constraint = build_trace_constraint(fluid, plate)
    w2 = _manufactured_w2(plate)
    vals = trace_values(constraint, plate, w2)
    x = constraint.plate_x
    exact = 3.0 * x**2 * (x - 1.0) ** 2 * (2.0 * x - 1.0)
    assert np.abs(vals - exact).max() <= 1e-14
    mid = np.flatnonzero(np.abs(x - 0.5) < 1e-14)
    assert vals[mid] == pytest.approx(0.0, abs=1e-15)


def test_dirichlet_data_conflict_detection(meshes4):
    fluid, plate = meshes4
    good = build_trace_constraint(fluid, plate)
    # force one interface node into the wall list: u2 would get both the
    # plate value and zero there
    bad = TraceConstraint(
        plate_nodes=good.plate_nodes,
        plate_x=good.plate_x,
        wall_nodes=np.concatenate([good.wall_nodes, good.plate_nodes[:1]]),
    )
    w2 = _manufactured_w2(plate)
    with pytest.raises(ConstraintConflictError):
        velocity_dirichlet_data(fluid, bad, plate, w2)
    # duplicates carrying equal values collapse silently
    dofs, vals = velocity_dirichlet_data(fluid, bad, plate,
                                         np.zeros(plate.dof_count))
    assert len(set(dofs.tolist())) == dofs.size
    assert np.abs(vals).max() == 0.0


def test_pressure_trace_partitions_interface(meshes4):
    fluid, _ = meshes4
    index = build_pressure_trace(fluid)
    assert index.x_left.size == fluid.n
    assert abs((index.x_right - index.x_left).sum() - 1.0) <= 1e-14
    assert np.abs(index.x_right[:-1] - index.x_left[1:]).max() <= 1e-15
    # the two active hat restrictions sum to one along each edge
    for frac in (0.0, 0.25, 0.7, 1.0):
        left = 1.0 - frac
        right = frac
        assert abs(left + right - 1.0) <= 1e-15
    # endpoints carry the expected vertex coordinates
    assert np.abs(fluid.vertices[index.node_left, 0] - index.x_left).max() == 0.0
    assert np.all(fluid.vertices[index.node_left, 1] == 1.0)


def test_pressure_load_of_unit_pressure_is_mean_vector(meshes4):
    fluid, plate = meshes4
    system = assemble_constant_matrices(fluid, plate)
    index = build_pressure_trace(fluid)
    load = pressure_plate_load(index, np.ones(fluid.num_p1), plate)
    assert np.abs(load - system.Es).max() <= 1e-14
    zero = pressure_plate_load(index, np.zeros(fluid.num_p1), plate)
    assert np.abs(zero).max() == 0.0


def test_pressure_load_linearity(meshes4):
    fluid, plate = meshes4
    index = build_pressure_trace(fluid)
    rng = np.random.default_rng(5)
    p = rng.standard_normal(fluid.num_p1)
    q = rng.standard_normal(fluid.num_p1)
    a, b = 0.37, -2.1
    combined = pressure_plate_load(index, a * p + b * q, plate)
    split = a * pressure_plate_load(index, p, plate) + b * pressure_plate_load(
        index, q, plate)
    assert np.abs(combined - split).max() <= 1e-13 * max(np.abs(split).max(), 1.0)


def test_linear_pressure_trace_against_symbolic_oracle():
    # trace of the interpolant of x - y on y = 1 is exactly x - 1; integrate
    # against each shape function of a one-element plate by antiderivatives
    fluid = build_fluid_mesh(2)
    plate = uniform_plate_mesh(1, fluid_trace_map=np.full(4, -1, dtype=np.int64))
    x, y = fluid.vertices[:, 0], fluid.vertices[:, 1]
    index = build_pressure_trace(fluid)
    load = pressure_plate_load(index, x - y, plate)
    weight = Polynomial([-1.0, 1.0])
    # local basis rows map onto global DOFs through the element DOF map
    for local, dof in enumerate(plate.hermite_dof_map[0]):
        theta = Polynomial(hermite_basis_coeffs()[local])
        exact = (weight * theta).integ()
        assert load[dof] == pytest.approx(exact(1.0) - exact(0.0), abs=1e-13)


def test_pressure_load_shape_mismatch(meshes4):
    fluid, plate = meshes4
    index = build_pressure_trace(fluid)
    with pytest.raises(CouplingError):
        pressure_plate_load(index, np.ones(3), plate)


def test_boundary_flux_matches_plate_mean(solve8):
    # mean-free plate velocity implies zero net flux of the imposed data
    state, fluid, plate, _ = solve8
    system = assemble_constant_matrices(fluid, plate)
    assert abs(system.Es @ state.w2) <= 1e-12 * (1.0 + np.linalg.norm(state.w2))
    rule = interval_quadrature(31)
    flux = 0.0
    ell = plate.element_length
    for e in range(plate.element_count):
        xs = plate.element_nodes[e, 0] + ell * rule.points
        flux += ell * np.sum(rule.weights * evaluate_plate(plate, state.w2, xs))
    assert abs(flux) <= 1e-12
