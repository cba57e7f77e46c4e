"""Deterministic output emission: CSV bodies with 17-significant-digit
floats, companion JSON metadata with a config hash, and matplotlib figures
rendered to files alongside the delimited output."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

TOOL_NAME = "memchan-lab"


def format_value(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows, footer_lines=()) -> Path:
    """Comma-separated body with a '#'-prefixed footer (fit parameters etc.).
    Byte-reproducible for identical inputs."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    for note in footer_lines:
        lines.append(f"# {note}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def metadata_path(out_path) -> Path:
    out_path = Path(out_path)
    return out_path.with_suffix(".meta.json")


def write_metadata(out_path, config: dict, diagnostics, version: str) -> Path:
    meta = {
        "tool": TOOL_NAME,
        "version": version,
        "config_hash": config_hash(config),
        "config": config,
        "diagnostics": diagnostics,
    }
    path = metadata_path(out_path)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def figure_path(out_path) -> Path:
    return Path(out_path).with_suffix(".png")


def render_curves(out_path, curves, xlabel: str, ylabel: str, logy: bool = False) -> Path:
    """Render labelled (x, y) curves to <out stem>.png next to the CSV."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, xs, ys in curves:
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1.2, label=str(label))
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(curves) > 1:
        ax.legend(fontsize=8)
    ax.grid(True, linestyle=":", linewidth=0.6, alpha=0.7)
    fig.tight_layout()
    path = figure_path(out_path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
