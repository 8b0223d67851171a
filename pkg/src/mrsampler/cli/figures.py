"""PNG companions to the CSV outputs, written only under ``--plot``.

matplotlib is an optional extra (``pip install artifact[plot]``) and is
imported on first use.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    fig.clf()
    return path


def plot_sample(out_dir: Path, traj, max_chains: int = 20) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = traj.xs[:, :max_chains, 0]
    ax.plot(traj.times, xs, lw=0.8, alpha=0.7)
    ax.invert_xaxis()
    ax.set_xlabel("t")
    ax.set_ylabel("x_0")
    ax.set_title(f"first coordinate, {xs.shape[1]} chains")
    return _save(fig, out_dir / "trajectories.png")


def plot_order_study(out_dir: Path, errors, order) -> Path:
    plt = _pyplot()
    nfe = np.array([n for n, _ in errors], dtype=float)
    err = np.array([e for _, e in errors])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(nfe, np.maximum(err, np.finfo(float).tiny), "o-")
    ax.set_xlabel("NFE")
    ax.set_ylabel("RMSE vs reference")
    ax.set_title(f"empirical order: {order if isinstance(order, str) else f'{order:.3f}'}")
    return _save(fig, out_dir / "order_study.png")


def plot_compare(out_dir: Path, rows) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in dict.fromkeys(r[0] for r in rows):
        pts = [(r[1], r[2]) for r in rows if r[0] == method and np.isfinite(r[2])]
        if pts:
            ax.loglog(*zip(*pts), "o-", label=method)
    ax.set_xlabel("NFE")
    ax.set_ylabel("terminal RMSE")
    ax.legend(fontsize=8)
    return _save(fig, out_dir / "compare.png")


def plot_trajectory(out_dir: Path, projections: dict) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 5))
    for method, pts in projections.items():
        ax.plot(pts[:, 0], pts[:, 1], ".-", lw=0.8, ms=3, label=method)
        ax.plot(pts[-1, 0], pts[-1, 1], "k*", ms=8)
    ax.set_xlabel("pc1")
    ax.set_ylabel("pc2")
    ax.legend(fontsize=8)
    return _save(fig, out_dir / "trajectory_2d.png")


def plot_radius(out_dir: Path, reports: dict) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    for kind, rows in reports.items():
        ax.plot([r[0] for r in rows], [r[4] for r in rows], "o-", label=kind)
    ax.set_xlabel("step")
    ax.set_ylabel("share of components with radius > h")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    return _save(fig, out_dir / "radius.png")
