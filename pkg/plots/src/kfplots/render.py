"""Figure rendering from experiment output files.

Five figure kinds: error_curves (overlaid evaluate outputs), spectrum
(transition-matrix eigenvalues on the unit circle), surface and heatmap
(a trajectory as a time/space field), and trace (learner convergence).
Rendering is deterministic: fixed backend, size, and dpi, and stripped
volatile metadata, so identical inputs give identical bytes.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, read_error_curves, read_system_matrix, read_trace, read_trajectory

KINDS = ("surface", "heatmap", "error_curves", "spectrum", "trace")


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    field: str = "state"
    dpi: int = 120

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        if self.field not in ("state", "estimate"):
            raise ValueError("field must be 'state' or 'estimate'")


def _label(path: str) -> str:
    base = os.path.basename(path)
    for suffix in (".gz", ".csv", ".json"):
        if base.endswith(suffix):
            base = base[: -len(suffix)]
    return base


def _error_curves(spec: PlotSpec, ax):
    for path in spec.inputs:
        t, err = read_error_curves(path)
        ax.semilogy(t, err, label=_label(path), linewidth=1.2)
    ax.set_xlabel(spec.xlabel or "time step")
    ax.set_ylabel(spec.ylabel or "mean estimation error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)


def _spectrum(spec: PlotSpec, ax):
    a = read_system_matrix(spec.inputs[0])
    eigs = np.linalg.eigvals(a)
    order = np.argsort(-np.abs(eigs))
    eigs = eigs[order]
    angle = np.linspace(0.0, 2.0 * np.pi, 512)
    ax.plot(np.cos(angle), np.sin(angle), color="0.6", linewidth=0.8)
    ax.scatter(eigs.real, eigs.imag, s=14, color="tab:blue", zorder=3)
    top = eigs[0]
    rho = float(np.abs(top))
    ax.scatter([top.real], [top.imag], s=70, facecolors="none", edgecolors="tab:red", zorder=4)
    ax.annotate(f"spectral radius = {rho:.6f}", xy=(0.03, 0.03), xycoords="axes fraction")
    ax.set_xlabel(spec.xlabel or "real part")
    ax.set_ylabel(spec.ylabel or "imaginary part")
    ax.set_aspect("equal")


def _field_matrix(spec: PlotSpec) -> np.ndarray:
    traj = read_trajectory(spec.inputs[0])
    if spec.field == "estimate":
        if traj["estimates"] is None:
            raise SchemaError(
                f"{spec.inputs[0]}: no 'xhat_*' columns, cannot plot the estimate field"
            )
        return traj["estimates"]
    return traj["states"]


def _surface(spec: PlotSpec, fig):
    values = _field_matrix(spec)
    steps, n = values.shape
    ax = fig.add_subplot(111, projection="3d")
    time_grid, space_grid = np.meshgrid(np.arange(steps), np.arange(n) / n, indexing="ij")
    ax.plot_surface(
        time_grid,
        space_grid,
        values,
        cmap="viridis",
        rstride=max(1, steps // 120),
        cstride=1,
        linewidth=0,
        antialiased=False,
    )
    ax.set_xlabel(spec.xlabel or "time step")
    ax.set_ylabel(spec.ylabel or "space")
    ax.set_zlabel("concentration")


def _heatmap(spec: PlotSpec, ax, fig):
    values = _field_matrix(spec)
    image = ax.imshow(
        values.T, aspect="auto", origin="lower", cmap="viridis", interpolation="nearest"
    )
    fig.colorbar(image, ax=ax, label="concentration")
    ax.set_xlabel(spec.xlabel or "time step")
    ax.set_ylabel(spec.ylabel or "space index")


def _trace(spec: PlotSpec, fig):
    trace = read_trace(spec.inputs[0])
    axes = fig.subplots(3, 1, sharex=True)
    axes[0].plot(trace["h"], trace["inner_iters"], marker=".")
    axes[0].set_ylabel("inner iterations")
    axes[1].semilogy(trace["h"], np.maximum(trace["grad_norm"], 1e-300), marker=".")
    axes[1].set_ylabel("gradient norm")
    axes[2].plot(trace["h"], trace["cost"], marker=".")
    axes[2].set_ylabel("cost")
    axes[2].set_xlabel(spec.xlabel or "outer step")
    for ax in axes:
        ax.grid(True, alpha=0.3)


def render(spec: PlotSpec) -> str:
    """Render the figure described by spec; returns the output path.

    Inputs are validated before anything is written, and the image is
    written atomically, so a failure never leaves a partial file.
    """
    fig = plt.figure(figsize=(8.0, 6.0))
    try:
        if spec.kind == "error_curves":
            _error_curves(spec, fig.add_subplot(111))
        elif spec.kind == "spectrum":
            _spectrum(spec, fig.add_subplot(111))
        elif spec.kind == "surface":
            _surface(spec, fig)
        elif spec.kind == "heatmap":
            _heatmap(spec, fig.add_subplot(111), fig)
        elif spec.kind == "trace":
            _trace(spec, fig)
        if spec.title:
            fig.suptitle(spec.title)
        ext = os.path.splitext(spec.output)[1].lstrip(".").lower() or "png"
        # strip volatile metadata so identical inputs give identical bytes
        metadata = {"Date": None} if ext == "svg" else {"Software": None}
        directory = os.path.dirname(os.path.abspath(spec.output))
        handle, temp_path = tempfile.mkstemp(suffix=f".{ext}", dir=directory)
        os.close(handle)
        try:
            fig.savefig(temp_path, format=ext, dpi=spec.dpi, metadata=metadata)
            os.replace(temp_path, spec.output)
        except BaseException:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise
    finally:
        plt.close(fig)
    return spec.output
