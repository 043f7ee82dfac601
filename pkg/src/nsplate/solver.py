"""Picard iteration for the coupled stationary system.

Each sweep solves two constrained linear problems in sequence.  The fluid
subproblem is the bordered saddle-point system

    [ A    0    Bx^T  0  ] [u1]   [F1]
    [ 0    A    By^T  0  ] [u2] = [F2]
    [ Bx   By   0     Ep ] [p ]   [0 ]
    [ 0    0    Ep^T  0  ] [mu]   [0 ]

with A the zeroth-order + viscous + advection block built from the
previous velocity iterate, under Dirichlet data u = 0 on the walls and
u2 = previous plate velocity on the interface.  The plate subproblem is

    [ lam*Ms + rho*lam*Ks + sigma*S - Bn   Es ] [w2]   [load(p) + F3]
    [ Es^T                                 0  ] [t ] = [0           ]

with the clamped end DOFs eliminated; the reported multiplier is s = -t,
which matches the convention that the plate equation reads
operator*w2 = load + Es*s.  The bending factor sigma is 1/lam by default
("one-over-lambda") with "unscaled" (sigma = 1) selectable.  Finally the
displacement update solves lam*Ms*w1 = Ms*w2 + F4 with the same clamped
DOFs pinned.

The first sweep starts from the zero state, so it is the linear
(advection-free) solve; the loop stops when the largest relative l2
change of (u1, u2, w2) drops below the tolerance or the sweep budget is
exhausted.  Everything is deterministic: repeated runs give bit-identical
residual histories.
"""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    apply_dirichlet,
    assemble_constant_matrices,
    assemble_loads,
    assemble_oseen,
    assemble_plate_picard,
)
from .basis import HermiteQuinticBasis
from .coupling import (
    apply_velocity_dirichlet,
    build_pressure_trace,
    build_trace_constraint,
    pressure_plate_load,
    trace_values,
)
from .errors import ConfigError, NonconvergenceError, SolverFailureError
from .meshing import clamped_dofs

BENDING_SCALINGS = ("one-over-lambda", "unscaled")


@dataclass
class SolverConfig:
    """Parameters of one coupled solve."""

    lam: float = 1.0
    nu: float = 1.0
    rho: float = 1.0
    max_iterations: int = 20
    picard_tol: float = 1e-10
    bending_scaling: str = "one-over-lambda"
    lagged_w1: bool = False          # use the previous plate velocity in the update
    symmetric_dirichlet: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError("lambda must be positive")
        if not self.nu > 0:
            raise ConfigError("viscosity must be positive")
        if self.rho < 0:
            raise ConfigError("rotational inertia must be nonnegative")
        if self.max_iterations < 1:
            raise ConfigError("need at least one Picard sweep")
        if self.bending_scaling not in BENDING_SCALINGS:
            raise ConfigError(
                f"bending_scaling must be one of {BENDING_SCALINGS}"
            )

    @property
    def bending_factor(self):
        return 1.0 / self.lam if self.bending_scaling == "one-over-lambda" else 1.0


@dataclass
class PicardState:
    """Current iterate of the coupled solve."""

    u1: np.ndarray
    u2: np.ndarray
    p: np.ndarray
    mu: float
    w1: np.ndarray
    w2: np.ndarray
    s: float
    iterations: int = 0
    history: list = field(default_factory=list)
    converged: bool = False
    imposed_trace: np.ndarray = None   # interface data of the last fluid solve


def zero_state(fluid, plate):
    m, mp, nd = fluid.num_p2, fluid.num_p1, plate.dof_count
    return PicardState(
        u1=np.zeros(m), u2=np.zeros(m), p=np.zeros(mp), mu=0.0,
        w1=np.zeros(nd), w2=np.zeros(nd), s=0.0,
    )


def _sparse_solve(matrix, rhs, what, level=None, iteration=None):
    try:
        sol = spla.spsolve(matrix.tocsc(), rhs)
    except RuntimeError as exc:  # SuperLU signals singularity this way
        raise SolverFailureError(
            f"{what} factorization failed: {exc}", level=level, iteration=iteration
        ) from exc
    if not np.all(np.isfinite(sol)):
        raise SolverFailureError(
            f"{what} solve produced non-finite values", level=level,
            iteration=iteration,
        )
    return sol


def build_fluid_system(system, config, tx, ty, f1, f2):
    """Assemble the bordered fluid saddle-point matrix and load."""
    a = config.lam * system.Mf + config.nu * system.Kf + tx + ty
    mp = system.Ep.shape[0]
    ep_col = sp.csr_matrix(system.Ep[:, None])
    big = sp.bmat(
        [
            [a, None, system.Bx.T, None],
            [None, a, system.By.T, None],
            [system.Bx, system.By, None, ep_col],
            [None, None, ep_col.T, None],
        ],
        format="csr",
    )
    rhs = np.concatenate([f1, f2, np.zeros(mp), [0.0]])
    return big, rhs


def solve_fluid_step(fluid, plate, system, config, constraint, w2n, tx, ty,
                     f1, f2, basis=None, level=None, iteration=None):
    """One constrained fluid solve; returns (u1, u2, p, mu)."""
    big, rhs = build_fluid_system(system, config, tx, ty, f1, f2)
    big, rhs, dofs, values = apply_velocity_dirichlet(
        big, rhs, fluid, constraint, plate, w2n,
        symmetric=config.symmetric_dirichlet, basis=basis,
    )
    sol = _sparse_solve(big, rhs, "fluid", level=level, iteration=iteration)
    sol[dofs] = values               # imposed data is exact by definition
    m, mp = fluid.num_p2, fluid.num_p1
    return sol[:m], sol[m : 2 * m], sol[2 * m : 2 * m + mp], float(sol[-1])


def plate_operator(system, config):
    """The constant part of the plate block."""
    return (
        config.lam * system.Ms
        + config.rho * config.lam * system.Ks
        + config.bending_factor * system.S
    )


def solve_plate_step(plate, system, config, bn, load, level=None, iteration=None):
    """One constrained plate solve; returns (w2, s)."""
    ap = plate_operator(system, config) - bn
    es_col = sp.csr_matrix(system.Es[:, None])
    big = sp.bmat([[ap, es_col], [es_col.T, None]], format="csr")
    rhs = np.concatenate([load, [0.0]])
    fixed = clamped_dofs(plate)
    big, rhs = apply_dirichlet(big, rhs, fixed, np.zeros(fixed.size),
                               symmetric=config.symmetric_dirichlet)
    sol = _sparse_solve(big, rhs, "plate", level=level, iteration=iteration)
    sol[fixed] = 0.0
    return sol[:-1], -float(sol[-1])


def update_w1(plate, system, config, w2, f4, level=None):
    """Displacement update lam*Ms*w1 = Ms*w2 + F4 with clamped ends."""
    rhs = system.Ms @ w2 + f4
    fixed = clamped_dofs(plate)
    mat, rhs = apply_dirichlet(config.lam * system.Ms, rhs, fixed,
                               np.zeros(fixed.size))
    w1 = _sparse_solve(mat, rhs, "displacement update", level=level)
    w1[fixed] = 0.0
    return w1


def _relative_change(new, old):
    return float(np.linalg.norm(new - old) / (1.0 + np.linalg.norm(new)))


def _diverged(history, blowup=1e3, run=3):
    """True when the change grew for `run` straight sweeps past blowup x initial."""
    if len(history) < run + 1 or history[0] == 0.0:
        return False
    tail = history[-(run + 1):]
    growing = all(b > a for a, b in zip(tail, tail[1:]))
    return growing and tail[-1] > blowup * history[0]


def run_picard(fluid, plate, config, loads, log=None):
    """Run the full fixed-point loop for the given forcing fields.

    ``log`` may be a writable text stream; one JSON record is emitted per
    sweep (iteration, relative change, both multipliers).
    """
    system = assemble_constant_matrices(fluid, plate)
    constraint = build_trace_constraint(fluid, plate)
    ptrace = build_pressure_trace(fluid)
    f1, f2, f3, f4 = assemble_loads(fluid, plate, loads)
    basis = HermiteQuinticBasis()

    state = zero_state(fluid, plate)
    history = []
    for sweep in range(1, config.max_iterations + 1):
        tx, ty = assemble_oseen(fluid, state.u1, state.u2)
        imposed = trace_values(constraint, plate, state.w2, basis=basis)
        u1, u2, p, mu = solve_fluid_step(
            fluid, plate, system, config, constraint, state.w2, tx, ty, f1, f2,
            basis=basis, level=fluid.n, iteration=sweep,
        )
        bn = assemble_plate_picard(plate, state.w2, basis=basis)
        load = pressure_plate_load(ptrace, p, plate, basis=basis) + f3
        w2, s_mult = solve_plate_step(plate, system, config, bn, load,
                                      level=fluid.n, iteration=sweep)
        w1_source = state.w2 if config.lagged_w1 else w2
        w1 = update_w1(plate, system, config, w1_source, f4, level=fluid.n)

        change = max(
            _relative_change(u1, state.u1),
            _relative_change(u2, state.u2),
            _relative_change(w2, state.w2),
        )
        history.append(change)
        state = PicardState(u1=u1, u2=u2, p=p, mu=mu, w1=w1, w2=w2, s=s_mult,
                            iterations=sweep, history=history,
                            imposed_trace=imposed)
        if log is not None:
            log.write(json.dumps({
                "level": fluid.n, "iteration": sweep, "rel_change": change,
                "mu": mu, "s": s_mult,
            }) + "\n")
        if _diverged(history):
            raise NonconvergenceError(
                f"Picard iteration diverging at level n={fluid.n}",
                history=history,
            )
        if change < config.picard_tol:
            state.converged = True
            break
    return state


def nonlinear_residual(fluid, plate, config, loads, state, basis=None):
    """Infinity-norm residual of the full nonlinear discrete system.

    The advection and interface matrices are rebuilt from the state
    itself, so a Picard fixed point has residual at solver roundoff.  The
    value is normalized by the infinity norm of the assembled loads.
    """
    system = assemble_constant_matrices(fluid, plate)
    constraint = build_trace_constraint(fluid, plate)
    ptrace = build_pressure_trace(fluid)
    f1, f2, f3, f4 = assemble_loads(fluid, plate, loads)
    if basis is None:
        basis = HermiteQuinticBasis()

    tx, ty = assemble_oseen(fluid, state.u1, state.u2)
    big, rhs = build_fluid_system(system, config, tx, ty, f1, f2)
    big, rhs, _, _ = apply_velocity_dirichlet(
        big, rhs, fluid, constraint, plate, state.w2,
        symmetric=config.symmetric_dirichlet, basis=basis,
    )
    z = np.concatenate([state.u1, state.u2, state.p, [state.mu]])
    r_fluid = big @ z - rhs

    bn = assemble_plate_picard(plate, state.w2, basis=basis)
    ap = plate_operator(system, config) - bn
    es_col = sp.csr_matrix(system.Es[:, None])
    big_p = sp.bmat([[ap, es_col], [es_col.T, None]], format="csr")
    load = pressure_plate_load(ptrace, state.p, plate, basis=basis) + f3
    rhs_p = np.concatenate([load, [0.0]])
    fixed = clamped_dofs(plate)
    big_p, rhs_p = apply_dirichlet(big_p, rhs_p, fixed, np.zeros(fixed.size),
                                   symmetric=config.symmetric_dirichlet)
    zp = np.concatenate([state.w2, [-state.s]])
    r_plate = big_p @ zp - rhs_p

    rhs_w1 = system.Ms @ state.w2 + f4
    mat_w1, rhs_w1 = apply_dirichlet(config.lam * system.Ms, rhs_w1, fixed,
                                     np.zeros(fixed.size))
    r_w1 = mat_w1 @ state.w1 - rhs_w1

    residual = max(
        np.abs(r_fluid).max(), np.abs(r_plate).max(), np.abs(r_w1).max()
    )
    scale = max(np.abs(rhs).max(), np.abs(rhs_p).max(), np.abs(rhs_w1).max())
    return residual / scale
