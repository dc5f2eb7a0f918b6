"""Figure rendering for the report paths: curve/polyline overlays and frames."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _setup_axes(fig, title):
    ax = fig.add_subplot(111, projection="3d")
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    return ax


def save_curve_figure(path, curve, polyline=None, title="curve", samples=400):
    """3D overlay of a curve and (optionally) its PL approximation."""
    fig = plt.figure(figsize=(7, 6))
    ax = _setup_axes(fig, title)
    ts = np.linspace(0.0, 1.0, samples)
    pts = curve.points_at(ts)
    ax.plot(pts[:, 0], pts[:, 1], pts[:, 2], color="tab:blue", lw=1.6, label="curve")
    if polyline is not None:
        v = polyline.vertices
        ax.plot(v[:, 0], v[:, 1], v[:, 2], color="tab:orange", lw=1.0,
                marker=".", ms=3, label="polyline")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_frames_figure(path, frames, title="isotopy frames"):
    """All deformation snapshots in one 3D plot, shaded by time."""
    fig = plt.figure(figsize=(7, 6))
    ax = _setup_axes(fig, title)
    n = len(frames)
    cmap = plt.get_cmap("viridis")
    for j, frame in enumerate(frames):
        v = frame.vertices
        ax.plot(v[:, 0], v[:, 1], v[:, 2], color=cmap(j / max(n - 1, 1)),
                lw=1.0, alpha=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
