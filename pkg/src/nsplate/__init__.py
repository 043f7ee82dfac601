"""Mixed FEM solver for a stationary cavity-flow / clamped-plate system.

The fluid occupies the unit square and is discretized with P2/P1
Taylor-Hood triangles; the elastic plate on the top edge uses four-node
quintic Hermite elements.  A Picard loop alternates a bordered fluid
saddle-point solve (mean-free pressure via a scalar multiplier) with a
plate solve (mean-free plate velocity via a second multiplier), coupled
through the velocity trace and the pressure load on the interface.  A
polynomial manufactured solution drives the verification harness.
"""

from .assembly import (
    LoadSpec,
    SparseSystem,
    assemble_constant_matrices,
    assemble_loads,
    assemble_oseen,
    assemble_plate_picard,
    dump_matrices,
)
from .basis import (
    HermiteQuinticBasis,
    QuadratureRule,
    hermite_basis_coeffs,
    interval_quadrature,
    p1_shape,
    p2_grad,
    p2_shape,
    triangle_quadrature,
)
from .coupling import (
    PressureTraceIndex,
    TraceConstraint,
    apply_velocity_dirichlet,
    build_pressure_trace,
    build_trace_constraint,
    pressure_plate_load,
)
from .errors import (
    CapabilityError,
    ConfigError,
    ConstraintConflictError,
    CouplingError,
    InvalidMeshError,
    MeshCompatibilityError,
    NonconvergenceError,
    NSPlateError,
    NumericInputError,
    SolverFailureError,
)
from .infsup import InfSupResult, compute_discrete_infsup, infsup_table
from .meshing import (
    FluidMesh,
    PlateMesh,
    build_fluid_mesh,
    build_plate_mesh,
    clamped_dofs,
    dump_mesh,
    evaluate_plate,
    uniform_plate_mesh,
)
from .mms import (
    ConvergenceReport,
    ManufacturedProblem,
    compute_errors,
    derive_forcings,
    run_convergence_study,
    solve_level,
)
from .solver import (
    PicardState,
    SolverConfig,
    nonlinear_residual,
    run_picard,
    solve_fluid_step,
    solve_plate_step,
    update_w1,
)

__version__ = "0.1.0"
