"""Manufactured solution, error norms and the convergence study.

The exact fields are polynomials built from g(x) = x^3 (x-1)^3:

    u1 = 6 (y^2 - y) g(x)
    u2 = (3 y^2 - 2 y^3) g'(x)
    p  = x - y + 1
    w2 = g'(x) = 3 x^2 (x-1)^2 (2x - 1)
    w1 = -w2

The pair (u1, u2) is divergence free, vanishes on the walls, and its
vertical trace on y = 1 equals w2, which is mean free and clamped, so the
fields satisfy every boundary and coupling condition of the discrete
problem.  The forcing data is derived in closed form by differentiating
the 1D factors:

    f1 = lam u1 - nu lap(u1) + u . grad(u1) + 1
    f2 = lam u2 - nu lap(u2) + u . grad(u2) - 1
    fp = lam w2 - rho lam w2'' + sigma_b w2'''' - p(x,1) - w2^2 / 2
    g1 = lam w1 - w2 = -(lam + 1) w2

where sigma_b is the configured bending factor.  Error norms follow the
verification convention: H1 seminorms of both velocity components, the L2
norm of the recovered pressure (mean-free part plus the plate multiplier)
against x - y + 1, and the L2 norm of the second-derivative mismatch of
the plate displacement.  Rates between consecutive refinements are
reported as log2 of the error quotient.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from . import assembly, solver
from .basis import HermiteQuinticBasis, interval_quadrature, triangle_quadrature
from .errors import NonconvergenceError
from .meshing import build_fluid_mesh, build_plate_mesh

_G = Polynomial([0.0, 0.0, 0.0, -1.0, 3.0, -3.0, 1.0])   # x^3 (x-1)^3
_A = Polynomial([0.0, -6.0, 6.0])                         # 6 (y^2 - y)
_B = Polynomial([0.0, 0.0, 3.0, -2.0])                    # 3 y^2 - 2 y^3


class ManufacturedProblem:
    """Closed-form exact fields and the forcing data they induce."""

    def __init__(self, lam=1.0, nu=1.0, rho=1.0, bending_factor=None):
        self.lam = float(lam)
        self.nu = float(nu)
        self.rho = float(rho)
        self.bending_factor = (
            1.0 / self.lam if bending_factor is None else float(bending_factor)
        )
        self._g = [_G.deriv(k) if k else _G for k in range(6)]
        self._a = [_A.deriv(k) if k else _A for k in range(3)]
        self._b = [_B.deriv(k) if k else _B for k in range(3)]

    # exact fields -------------------------------------------------------
    def u1(self, x, y):
        return self._a[0](y) * self._g[0](x)

    def u2(self, x, y):
        return self._b[0](y) * self._g[1](x)

    def p(self, x, y):
        return x - y + 1.0

    def p_mean_free(self, x, y):
        return x - y

    def w2(self, x):
        return self._g[1](x)

    def w2_deriv(self, x, order=1):
        return self._g[1 + order](x)

    def w1(self, x):
        return -self._g[1](x)

    def w1_deriv(self, x, order=1):
        return -self._g[1 + order](x)

    def grad_u1(self, x, y):
        return self._a[0](y) * self._g[1](x), self._a[1](y) * self._g[0](x)

    def grad_u2(self, x, y):
        return self._b[0](y) * self._g[2](x), self._b[1](y) * self._g[1](x)

    def divergence(self, x, y):
        gx1, _ = self.grad_u1(x, y)
        _, gy2 = self.grad_u2(x, y)
        return gx1 + gy2

    # forcing data -------------------------------------------------------
    def f1(self, x, y):
        a, a2 = self._a[0](y), self._a[2](y)
        lap = a * self._g[2](x) + a2 * self._g[0](x)
        gx, gy = self.grad_u1(x, y)
        adv = self.u1(x, y) * gx + self.u2(x, y) * gy
        return self.lam * self.u1(x, y) - self.nu * lap + adv + 1.0

    def f2(self, x, y):
        b, b2 = self._b[0](y), self._b[2](y)
        lap = b * self._g[3](x) + b2 * self._g[1](x)
        gx, gy = self.grad_u2(x, y)
        adv = self.u1(x, y) * gx + self.u2(x, y) * gy
        return self.lam * self.u2(x, y) - self.nu * lap + adv - 1.0

    def fp(self, x):
        w2 = self.w2(x)
        return (
            self.lam * w2
            - self.rho * self.lam * self.w2_deriv(x, 2)
            + self.bending_factor * self.w2_deriv(x, 4)
            - self.p(x, 1.0)
            - 0.5 * w2 * w2
        )

    def g1(self, x):
        return -(self.lam + 1.0) * self.w2(x)

    def loadspec(self):
        return assembly.LoadSpec(f1=self.f1, f2=self.f2, fp=self.fp, g1=self.g1)


def derive_forcings(lam=1.0, nu=1.0, rho=1.0, bending_factor=None):
    """Build the manufactured problem for a parameter set."""
    return ManufacturedProblem(lam=lam, nu=nu, rho=rho, bending_factor=bending_factor)


def problem_for_config(config):
    return ManufacturedProblem(
        lam=config.lam, nu=config.nu, rho=config.rho,
        bending_factor=config.bending_factor,
    )


# interpolation ------------------------------------------------------------

def interpolate_velocity(problem, fluid):
    """P2 nodal interpolants of the exact velocity components."""
    x, y = fluid.p2_nodes[:, 0], fluid.p2_nodes[:, 1]
    return problem.u1(x, y), problem.u2(x, y)


def interpolate_pressure_mean_free(problem, fluid):
    x, y = fluid.vertices[:, 0], fluid.vertices[:, 1]
    return problem.p_mean_free(x, y)


def interpolate_plate(plate, func, dfunc):
    """Hermite interpolant (values everywhere, slopes at element ends)."""
    coeffs = np.zeros(plate.dof_count)
    coeffs[: plate.lagrange_count] = func(plate.lagrange_x)
    ends = plate.lagrange_x[:: 3]
    coeffs[plate.lagrange_count :] = dfunc(ends)
    return coeffs


# error norms --------------------------------------------------------------

def velocity_h1_error(fluid, coeffs, grad_exact, degree=assembly.LOAD_TRIANGLE_DEGREE):
    """H1-seminorm distance between a P2 field and an exact gradient."""
    rule = triangle_quadrature(degree)
    coords, jac, det, _ = assembly.fluid_geometry(fluid)
    pts = assembly.physical_points(coords, jac, rule.points)
    grads = assembly.physical_p2_gradients(fluid, rule)
    local = coeffs[fluid.p2_connectivity]
    gh_x = np.einsum("eqi,ei->eq", grads[..., 0], local)
    gh_y = np.einsum("eqi,ei->eq", grads[..., 1], local)
    gx, gy = grad_exact(pts[..., 0], pts[..., 1])
    err = (gh_x - gx) ** 2 + (gh_y - gy) ** 2
    return math.sqrt(float(np.einsum("q,eq,e->", rule.weights, err, det)))


def pressure_l2_error(fluid, p_coeffs, shift, exact,
                      degree=assembly.LOAD_TRIANGLE_DEGREE):
    """L2 distance between the shifted P1 pressure and an exact field."""
    from .basis import p1_shape

    rule = triangle_quadrature(degree)
    coords, jac, det, _ = assembly.fluid_geometry(fluid)
    pts = assembly.physical_points(coords, jac, rule.points)
    vals = p1_shape(rule.points)
    ph = np.einsum("qi,ei->eq", vals, p_coeffs[fluid.p1_connectivity]) + shift
    err = (ph - exact(pts[..., 0], pts[..., 1])) ** 2
    return math.sqrt(float(np.einsum("q,eq,e->", rule.weights, err, det)))


def plate_h2_error(plate, coeffs, exact_d2, points=assembly.PLATE_GAUSS_POINTS,
                   basis=None):
    """L2 distance between second derivatives on the plate."""
    if basis is None:
        basis = HermiteQuinticBasis()
    rule = interval_quadrature(2 * points - 1)
    ell = plate.element_length
    d2 = basis.deriv2(rule.points) * basis.dof_scaling(ell) / ell**2
    xq = plate.element_nodes[:, 0][:, None] + ell * rule.points
    wh = np.einsum("qi,ei->eq", d2, coeffs[plate.hermite_dof_map])
    err = (wh - exact_d2(xq)) ** 2
    return math.sqrt(float(np.einsum("q,eq->", rule.weights * ell, err)))


@dataclass
class LevelResult:
    """Error norms of one refinement level."""

    n: int
    h: float
    iterations: int
    err_u1_h1: float
    err_u2_h1: float
    err_p_l2: float
    err_w1_h2: float
    err_p0_l2: float = float("nan")       # mean-free-only comparison
    interp_u1_h1: float = float("nan")    # interpolant diagnostics
    interp_u2_h1: float = float("nan")
    failed: bool = False


def compute_errors(state, problem, fluid, plate,
                   degree=assembly.LOAD_TRIANGLE_DEGREE, diagnostics=True):
    """Error norms of a converged state against the exact fields."""
    if not state.converged:
        raise NonconvergenceError(
            "refusing to compute error norms of a non-converged state",
            history=state.history,
        )
    err_u1 = velocity_h1_error(fluid, state.u1, problem.grad_u1, degree)
    err_u2 = velocity_h1_error(fluid, state.u2, problem.grad_u2, degree)
    err_p = pressure_l2_error(fluid, state.p, state.s, problem.p, degree)
    err_p0 = pressure_l2_error(fluid, state.p, 0.0, problem.p_mean_free, degree)
    err_w1 = plate_h2_error(plate, state.w1, lambda x: problem.w1_deriv(x, 2))
    row = LevelResult(
        n=fluid.n, h=fluid.h, iterations=state.iterations,
        err_u1_h1=err_u1, err_u2_h1=err_u2, err_p_l2=err_p, err_w1_h2=err_w1,
        err_p0_l2=err_p0,
    )
    if diagnostics:
        u1i, u2i = interpolate_velocity(problem, fluid)
        row.interp_u1_h1 = velocity_h1_error(fluid, u1i, problem.grad_u1, degree)
        row.interp_u2_h1 = velocity_h1_error(fluid, u2i, problem.grad_u2, degree)
    return row


# study --------------------------------------------------------------------

_CSV_HEADER = "h,err_u1_H1,rate,err_u2_H1,rate,err_p_L2,rate,err_w1_H2,rate"
_ERROR_FIELDS = ("err_u1_h1", "err_u2_h1", "err_p_l2", "err_w1_h2")


@dataclass
class ConvergenceReport:
    """Per-level error norms plus successive log2 rates."""

    rows: list = field(default_factory=list)

    def rates(self):
        """Dict of per-field rate lists; entry i compares rows i and i+1."""
        out = {name: [] for name in _ERROR_FIELDS}
        for prev, cur in zip(self.rows, self.rows[1:]):
            denom = math.log(prev.h / cur.h)
            for name in _ERROR_FIELDS:
                a, b = getattr(prev, name), getattr(cur, name)
                if prev.failed or cur.failed or not (a > 0 and b > 0):
                    out[name].append(float("nan"))
                else:
                    out[name].append(math.log(a / b) / denom)
        return out

    def to_csv(self):
        rates = self.rates()
        lines = [_CSV_HEADER]
        for i, row in enumerate(self.rows):
            cells = [f"{row.h:.9g}"]
            for name in _ERROR_FIELDS:
                if row.failed:
                    cells += ["failed", ""]
                    continue
                cells.append(f"{getattr(row, name):.6e}")
                cells.append("" if i == 0 else f"{rates[name][i - 1]:.3f}")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_text(self):
        rates = self.rates()
        out = io.StringIO()

        def table(title, names, labels):
            out.write(title + "\n")
            header = f"{'h':>10}"
            for label in labels:
                header += f" | {label:>12} | {'ratio':>8}"
            out.write(header + "\n")
            out.write("-" * len(header) + "\n")
            for i, row in enumerate(self.rows):
                line = f"{row.h:>10.6g}"
                for name in names:
                    if row.failed:
                        line += f" | {'failed':>12} | {'':>8}"
                        continue
                    line += f" | {getattr(row, name):>12.2E}"
                    ratio = "" if i == 0 else f"{rates[name][i - 1]:.2E}"
                    line += f" | {ratio:>8}"
                out.write(line + "\n")
            out.write("\n")

        table("Velocity gradient errors",
              ("err_u1_h1", "err_u2_h1"), ("|grad e_u1|", "|grad e_u2|"))
        table("Pressure and plate errors",
              ("err_p_l2", "err_w1_h2"), ("|e_p|", "|e_w1''|"))
        return out.getvalue()


def solve_level(n, config=None, problem=None, log=None):
    """Solve the manufactured problem on level n; returns (state, fluid, plate, problem)."""
    config = config or solver.SolverConfig()
    fluid = build_fluid_mesh(n)
    plate = build_plate_mesh(fluid)
    if problem is None:
        problem = problem_for_config(config)
    state = solver.run_picard(fluid, plate, config, problem.loadspec(), log=log)
    return state, fluid, plate, problem


def run_convergence_study(levels, config=None, log=None,
                          degree=assembly.LOAD_TRIANGLE_DEGREE):
    """Solve every level and collect the error table.

    Levels must be strictly increasing.  A level that fails to converge is
    recorded with a failure marker instead of aborting the study.
    """
    levels = [int(n) for n in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    config = config or solver.SolverConfig()
    report = ConvergenceReport()
    for n in levels:
        state, fluid, plate, problem = solve_level(n, config=config, log=log)
        try:
            row = compute_errors(state, problem, fluid, plate, degree=degree)
        except NonconvergenceError:
            row = LevelResult(
                n=n, h=1.0 / n, iterations=state.iterations,
                err_u1_h1=float("nan"), err_u2_h1=float("nan"),
                err_p_l2=float("nan"), err_w1_h2=float("nan"), failed=True,
            )
        report.rows.append(row)
    return report
