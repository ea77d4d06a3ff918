"""Artifact writers: full-precision CSV, round-trippable JSON, static SVG."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

CSV_FORMAT = "{:.16e}"


def _plain(value):
    """Convert numpy scalars, arrays, enums and tuples to JSON-native objects."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _plain(value.item())
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: Path, payload: dict) -> Path:
    """Write ``payload`` with shortest round-trip float repr, keys in insertion order."""
    text = json.dumps(_plain(payload), indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return Path(path)


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([CSV_FORMAT.format(float(x)) for x in row])
    return Path(path)


def _figure():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    # fixed element ids keep repeated renders byte-identical
    matplotlib.rcParams["svg.hashsalt"] = "collapsar"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    return plt, fig, ax


def _save(plt, fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def plot_profile(path: Path, z, values, Z_mu=None, ylabel="f(z)", title=None) -> Path:
    plt, fig, ax = _figure()
    ax.plot(z, values, lw=1.2)
    if Z_mu is not None:
        ax.axvline(Z_mu, color="tab:red", ls="--", lw=1.0, label=f"Z = {Z_mu:.6g}")
        ax.legend()
    ax.set_xlabel("z")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return _save(plt, fig, path)


def plot_scaling(path: Path, t, a, T=None) -> Path:
    plt, fig, ax = _figure()
    ax.plot(t, a, lw=1.2)
    if T is not None:
        ax.axvline(T, color="tab:red", ls="--", lw=1.0, label=f"T = {T:.6g}")
        ax.legend()
    ax.set_xlabel("t")
    ax.set_ylabel("a(t)")
    return _save(plt, fig, path)


def plot_residual_map(path: Path, t_grid, values, title) -> Path:
    """log10 |scaled residual| over (time index, radial sample index)."""
    plt, fig, ax = _figure()
    data = np.log10(np.maximum(np.abs(values), 1e-18))
    im = ax.imshow(data, aspect="auto", origin="lower", interpolation="nearest",
                   extent=(0.5, values.shape[1] + 0.5, -0.5, values.shape[0] - 0.5))
    ax.set_yticks(range(len(t_grid)))
    ax.set_yticklabels([f"{t:.3g}" for t in t_grid])
    ax.set_xlabel("radial sample (fraction of support)")
    ax.set_ylabel("t")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="log10 |scaled residual|")
    return _save(plt, fig, path)
