"""Discrete inf-sup (LBB) diagnostic for the Taylor-Hood pair.

Computes the smallest generalized singular value of the divergence
coupling restricted to the homogeneous constrained velocity space (zero
on the whole boundary) and mean-free pressures:

    beta_h^2 = min over such q of  q^T D X^{-1} D^T q / q^T Q q

with D the divergence rows on the free velocity DOFs, X the H1-norm
velocity Gramian (mass plus stiffness per component) and Q the pressure
mass matrix.  Everything is dense, so the check is gated to small meshes;
it is a theory-facing diagnostic, not a production path.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import assemble_constant_matrices
from .errors import CapabilityError, SolverFailureError
from .meshing import TAG_INTERIOR, build_fluid_mesh, build_plate_mesh

MAX_INFSUP_LEVEL = 16


@dataclass
class InfSupResult:
    """Per-level inf-sup constants."""

    levels: list = field(default_factory=list)
    h: list = field(default_factory=list)
    beta: list = field(default_factory=list)

    def to_text(self):
        lines = [f"{'n':>6} {'h':>12} {'beta_h':>12}"]
        for n, h, b in zip(self.levels, self.h, self.beta):
            lines.append(f"{n:>6d} {h:>12.6g} {b:>12.6e}")
        return "\n".join(lines) + "\n"


def compute_discrete_infsup(n, mean_free=True):
    """Inf-sup constant on level n (dense eigenproblem, n <= 16)."""
    if n > MAX_INFSUP_LEVEL:
        raise CapabilityError(
            f"inf-sup diagnostic is dense and gated to n <= {MAX_INFSUP_LEVEL}"
        )
    fluid = build_fluid_mesh(n)
    plate = build_plate_mesh(fluid)
    system = assemble_constant_matrices(fluid, plate)

    free = np.flatnonzero(fluid.node_tags == TAG_INTERIOR)
    x_block = (system.Mf + system.Kf).toarray()[np.ix_(free, free)]
    x = scipy.linalg.block_diag(x_block, x_block)
    d = np.hstack([system.Bx.toarray()[:, free], system.By.toarray()[:, free]])
    q_mass = system.Mp.toarray()

    try:
        w = d @ scipy.linalg.solve(x, d.T, assume_a="pos")
        if mean_free:
            z = scipy.linalg.null_space(system.Ep[None, :])
            eigs = scipy.linalg.eigh(z.T @ w @ z, z.T @ q_mass @ z,
                                     eigvals_only=True)
        else:
            eigs = scipy.linalg.eigh(w, q_mass, eigvals_only=True)
    except scipy.linalg.LinAlgError as exc:
        raise SolverFailureError(f"inf-sup eigenproblem failed: {exc}") from exc
    smallest = float(eigs[0])
    return float(np.sqrt(max(smallest, 0.0)))


def infsup_table(levels):
    result = InfSupResult()
    for n in levels:
        result.levels.append(int(n))
        result.h.append(1.0 / int(n))
        result.beta.append(compute_discrete_infsup(int(n)))
    return result
