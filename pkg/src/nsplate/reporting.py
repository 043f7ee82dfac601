"""Field dumps, delimited reports and companion figures.

Every report path writes its delimited output atomically (temporary file
in the destination directory, then rename) and renders a matplotlib
figure next to it.  Figures use the Agg backend so the package works in
headless runs.
"""

import os
import tempfile
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .basis import p1_shape
from .meshing import evaluate_plate


def atomic_write_text(path, text):
    """Write text to path via a temp file + rename in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="ascii") as handle:
            handle.write(text)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)   # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _pressure_at_p2_nodes(fluid, p):
    """P1 pressure evaluated at every velocity node (exact: field is linear
    on each triangle, so averaging repeated element evaluations is safe)."""
    vals = np.zeros(fluid.num_p2)
    hits = np.zeros(fluid.num_p2)
    ref = np.array(
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.0, 0.5], [0.5, 0.0]]
    )
    shape = p1_shape(ref)                      # (6, 3)
    local = np.einsum("ki,ei->ek", shape, p[fluid.p1_connectivity])
    np.add.at(vals, fluid.p2_connectivity.ravel(), local.ravel())
    np.add.at(hits, fluid.p2_connectivity.ravel(), 1.0)
    return vals / np.maximum(hits, 1.0)


def write_fields(state, fluid, plate, directory, samples_per_element=8):
    """Write fluid and plate point-cloud CSVs; returns the paths."""
    directory = Path(directory)
    p_nodes = _pressure_at_p2_nodes(fluid, state.p)
    lines = ["x,y,u1,u2,p"]
    for (x, y), a, b, c in zip(fluid.p2_nodes, state.u1, state.u2, p_nodes):
        lines.append(f"{x:.17g},{y:.17g},{a:.17g},{b:.17g},{c:.17g}")
    fluid_csv = atomic_write_text(directory / "fluid.csv", "\n".join(lines) + "\n")

    xs = np.linspace(0.0, 1.0, samples_per_element * plate.element_count + 1)
    w1 = evaluate_plate(plate, state.w1, xs)
    w2 = evaluate_plate(plate, state.w2, xs)
    lines = ["x,w1,w2"]
    for x, a, b in zip(xs, w1, w2):
        lines.append(f"{x:.17g},{a:.17g},{b:.17g}")
    plate_csv = atomic_write_text(directory / "plate.csv", "\n".join(lines) + "\n")
    return [fluid_csv, plate_csv]


def render_field_figures(state, fluid, plate, directory, problem=None):
    """Render computed (and, when available, exact) field surfaces to PNGs."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    x, y = fluid.p2_nodes[:, 0], fluid.p2_nodes[:, 1]
    p_nodes = _pressure_at_p2_nodes(fluid, state.p) + state.s
    panels = [
        ("fluid_u1.png", "horizontal velocity", state.u1,
         None if problem is None else problem.u1(x, y)),
        ("fluid_u2.png", "vertical velocity", state.u2,
         None if problem is None else problem.u2(x, y)),
        ("pressure.png", "pressure", p_nodes,
         None if problem is None else problem.p(x, y)),
    ]
    written = []
    for name, title, computed, exact in panels:
        ncols = 1 if exact is None else 2
        fig, axes = plt.subplots(1, ncols, figsize=(5.2 * ncols, 4.2),
                                 squeeze=False)
        for ax, data, label in zip(
            axes[0], (computed, exact), ("finite element", "exact")
        ):
            if data is None:
                continue
            im = ax.tripcolor(x, y, data, shading="gouraud")
            ax.set_title(f"{title} ({label})")
            ax.set_aspect("equal")
            fig.colorbar(im, ax=ax, shrink=0.85)
        fig.tight_layout()
        target = directory / name
        fig.savefig(target, dpi=130)
        plt.close(fig)
        written.append(target)

    xs = np.linspace(0.0, 1.0, 40 * plate.element_count + 1)
    fig, axes = plt.subplots(1, 2, figsize=(10.4, 3.6))
    for ax, coeffs, exact, label in (
        (axes[0], state.w1, None if problem is None else problem.w1, "displacement"),
        (axes[1], state.w2, None if problem is None else problem.w2, "velocity"),
    ):
        ax.plot(xs, evaluate_plate(plate, coeffs, xs), label="finite element")
        if exact is not None:
            ax.plot(xs, exact(xs), "--", label="exact")
        ax.set_title(f"plate {label}")
        ax.set_xlabel("x")
        ax.legend()
    fig.tight_layout()
    target = directory / "plate.png"
    fig.savefig(target, dpi=130)
    plt.close(fig)
    written.append(target)
    return written


def write_study(report, csv_path):
    """Write the study CSV and a log-log error figure alongside it."""
    csv_path = Path(csv_path)
    atomic_write_text(csv_path, report.to_csv())
    fig_path = csv_path.with_suffix(".png")
    rows = [row for row in report.rows if not row.failed]
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if rows:
        hs = np.array([row.h for row in rows])
        for attr, label, marker in (
            ("err_u1_h1", "grad u1 error", "o"),
            ("err_u2_h1", "grad u2 error", "s"),
            ("err_p_l2", "pressure error", "^"),
            ("err_w1_h2", "plate curvature error", "d"),
        ):
            ax.loglog(hs, [getattr(row, attr) for row in rows],
                      marker=marker, label=label)
        anchor = max(getattr(rows[0], a) for a in
                     ("err_u1_h1", "err_u2_h1", "err_p_l2", "err_w1_h2"))
        ax.loglog(hs, anchor * (hs / hs[0]), "k:", label="slope 1")
        ax.loglog(hs, anchor * (hs / hs[0]) ** 2, "k--", label="slope 2")
    ax.set_xlabel("h")
    ax.set_ylabel("error norm")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(fig_path, dpi=130)
    plt.close(fig)
    return [csv_path, fig_path]
