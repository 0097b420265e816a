"""Dependency-free SVG scatter plots with fixed number formatting (byte-stable output)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def scatter_svg(Z: np.ndarray, labels: np.ndarray, title: str = "", size: int = 480,
                radius: float = 2.5) -> str:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[1] != 2:
        raise ValueError(f"scatter needs N x 2 points, got shape {Z.shape}")
    labels = np.asarray(labels)
    if labels.shape != (Z.shape[0],):
        raise ValueError("one label per point required")
    margin = 20.0
    lo, hi = Z.min(axis=0), Z.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scale = (size - 2 * margin) / span
    # y grows downwards in SVG
    px = margin + (Z[:, 0] - lo[0]) * scale[0]
    py = size - margin - (Z[:, 1] - lo[1]) * scale[1]
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        lines.append(f'<text x="{margin:.1f}" y="14" font-family="sans-serif" font-size="12">{title}</text>')
    for x, y, lab in zip(px, py, labels):
        color = PALETTE[int(lab) % len(PALETTE)]
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius:.1f}" fill="{color}" fill-opacity="0.7"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_scatter(path: str | Path, Z: np.ndarray, labels: np.ndarray, title: str = "") -> None:
    Path(path).write_text(scatter_svg(Z, labels, title))
