"""Rendering backends for the figure kinds.

Output is deterministic: the Agg backend, fixed DPI, no timestamps
(PNG carries only matplotlib's constant Software tag), inputs sorted
before plotting.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .jobs import ORDER_SWEEP_VALUE_COLUMNS, FigureJob  # noqa: E402

# Gell-Mann lambda_3 / lambda_8 for the simplex projection plane
LAMBDA_3 = np.diag([1.0, -1.0, 0.0]).astype(complex)
LAMBDA_8 = np.diag([1.0, 1.0, -2.0]).astype(complex) / np.sqrt(3.0)


def _fit_slope(eps: np.ndarray, vals: np.ndarray, floor: float = 1e-11):
    keep = vals > floor
    if keep.sum() < 2:
        return None
    order = np.argsort(eps[keep])
    e = eps[keep][order][:4]
    v = vals[keep][order][:4]
    a = np.vstack([np.log(e), np.ones_like(e)]).T
    coeff = np.linalg.lstsq(a, np.log(v), rcond=None)[0]
    return float(coeff[0])


def _new_figure(job: FigureJob, default=(6.0, 4.5), threed=False):
    figsize = job.figsize or default
    fig = plt.figure(figsize=figsize)
    if threed:
        ax = fig.add_subplot(111, projection="3d")
    else:
        ax = fig.add_subplot(111)
    return fig, ax


def _render_order_sweep(job: FigureJob) -> plt.Figure:
    fig, ax = _new_figure(job)
    for frame, path in zip(job.frames, job.inputs):
        value_col = next(c for c in ORDER_SWEEP_VALUE_COLUMNS
                         if c in frame.columns)
        data = frame.sort_values("epsilon")
        eps = data["epsilon"].to_numpy(dtype=float)
        vals = np.abs(data[value_col].to_numpy(dtype=float))
        label = path.stem if len(job.frames) > 1 else value_col
        ax.loglog(eps, vals, "o", label=label)
        slope = _fit_slope(eps, vals)
        if slope is not None:
            anchor = max(np.nonzero(vals > 1e-11)[0][0], 0)
            ref = vals[anchor] * (eps / eps[anchor]) ** slope
            ax.loglog(eps, ref, "--", linewidth=1,
                      label=f"fit slope {slope:.2f}")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(value_col)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return fig


def _render_bloch(job: FigureJob) -> plt.Figure:
    frame = job.frames[0]
    fig, ax = _new_figure(job, default=(6.5, 6.0), threed=True)
    u = np.linspace(0, 2 * np.pi, 25)
    v = np.linspace(0, np.pi, 13)
    xs = np.outer(np.cos(u), np.sin(v))
    ys = np.outer(np.sin(u), np.sin(v))
    zs = np.outer(np.ones_like(u), np.cos(v))
    ax.plot_wireframe(xs, ys, zs, color="lightgray", linewidth=0.3)

    eps_min = frame["epsilon"].min()
    data = frame[frame["epsilon"] == eps_min].sort_values("s")
    stat = data[["stat_x", "stat_y", "stat_z"]].to_numpy()
    first = (data[["n1_friction_x", "n1_friction_y", "n1_friction_z"]].to_numpy()
             + data[["n1_geom_x", "n1_geom_y", "n1_geom_z"]].to_numpy()
             + data[["n1_tunnel_x", "n1_tunnel_y", "n1_tunnel_z"]].to_numpy())
    slow = stat + eps_min * first
    orbit = data[["n_x", "n_y", "n_z"]].to_numpy()
    ax.plot(*stat.T, color="red", linewidth=1.5,
            label="instantaneous stationary states")
    ax.plot(*slow.T, color="green", linewidth=1.5, label="slow manifold")
    ax.plot(*orbit.T, color="blue", linewidth=1.0,
            label=rf"orbit ($\varepsilon$={eps_min:g})")
    ax.set_box_aspect((1, 1, 1))
    ax.legend(loc="upper left", fontsize=8)
    return fig


def _render_bundle(job: FigureJob) -> plt.Figure:
    frame = job.frames[0]
    fig, ax = _new_figure(job)
    init = sorted(frame["init"].unique())[0]
    data = frame[frame["init"] == init]
    # every (s, order, part) row repeats the norm per component; collapse
    norms = (data.groupby(["part", "order", "s"])["norm"].first()
             .reset_index())
    for part, marker in (("a", "-"), ("b", "--")):
        sel = norms[norms["part"] == part]
        for order in sorted(sel["order"].unique()):
            row = sel[sel["order"] == order].sort_values("s")
            vals = np.maximum(row["norm"].to_numpy(), 1e-300)
            if vals.max() < 1e-16:
                continue
            ax.semilogy(row["s"], vals, marker,
                        label=rf"$\|{part}_{{{order}}}(s)\|$")
    ax.set_xlabel("s")
    ax.set_ylabel("coefficient magnitude")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    return fig


def _states_from_expand(frame: pd.DataFrame, init: str) -> pd.DataFrame:
    """Order-0 kernel coefficients as complex matrices per node."""
    rows = frame[(frame["init"] == init) & (frame["order"] == 0)
                 & (frame["part"] == "a")]
    d = int(np.sqrt(rows["comp"].max() + 1))
    out = []
    for s, group in rows.groupby("s"):
        comp = group.sort_values("comp")
        mat = (comp["re"].to_numpy()
               + 1j * comp["im"].to_numpy()).reshape(d, d, order="F")
        out.append((s, mat))
    out.sort(key=lambda t: t[0])
    return out


def _render_simplex(job: FigureJob) -> plt.Figure:
    frame = job.frames[0]
    fig, ax = _new_figure(job, default=(6.0, 6.0))
    inits = sorted(frame["init"].unique())
    start, end = [], []
    for init in inits:
        states = _states_from_expand(frame, init)
        xy = np.array([[np.trace(m @ LAMBDA_3).real,
                        np.trace(m @ LAMBDA_8).real] for _, m in states])
        ax.plot(xy[:, 0], xy[:, 1], color="gray", linewidth=0.8, alpha=0.8)
        start.append(xy[0])
        end.append(xy[-1])
    for pts, style, label in ((start, "-", "s = 0"), (end, "--", "s = 1")):
        loop = np.array(pts + [pts[0]])
        ax.plot(loop[:, 0], loop[:, 1], style, color="black", label=label)
    ax.scatter(*np.array(start).T, color="red", zorder=3)
    ax.scatter(*np.array(end).T, color="red", facecolors="none", zorder=3)
    ax.set_xlabel(r"$\mathrm{tr}(\rho\,\lambda_3)$")
    ax.set_ylabel(r"$\mathrm{tr}(\rho\,\lambda_8)$")
    ax.set_aspect("equal")
    ax.legend()
    return fig


def _render_pump_links(job: FigureJob) -> plt.Figure:
    fig, ax = _new_figure(job)
    base = job.frames[0]
    links = sorted({(int(i), int(j))
                    for i, j in zip(base["link_i"], base["link_j"])})
    labels = [f"{i}->{j}" for i, j in links]
    xpos = np.arange(len(links))
    geoms = [base[(base["link_i"] == i) & (base["link_j"] == j)]
             ["T_geom"].iloc[0] for i, j in links]
    ax.bar(xpos, geoms, width=0.5, color="steelblue",
           label="geometric transport")
    if len(job.frames) > 1:
        other = job.frames[1]
        overlay = [other[(other["link_i"] == i) & (other["link_j"] == j)]
                   ["T_geom"].iloc[0] for i, j in links]
        ax.scatter(xpos, overlay, color="darkorange", zorder=3, marker="x",
                   s=80, label="reparametrized cycle")
    ax.set_xticks(xpos, labels)
    ax.set_ylabel("integrated current per cycle")
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.legend()
    return fig


_RENDERERS = {
    "order-sweep": _render_order_sweep,
    "bloch-trajectory": _render_bloch,
    "bundle-magnitudes": _render_bundle,
    "simplex-transport": _render_simplex,
    "pump-links": _render_pump_links,
}


def render(job: FigureJob) -> str:
    """Render the job and return the output path."""
    job.load_inputs()
    fig = _RENDERERS[job.kind](job)
    if job.title:
        fig.suptitle(job.title)
    job.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(job.output, dpi=job.dpi)
    plt.close(fig)
    return str(job.output)
