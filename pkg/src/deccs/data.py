"""Dataset loading, z-scoring, synthetic generators and sampling helpers."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True)
class DataMatrix:
    """An N x D float matrix with optional integer ground-truth labels."""

    values: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"expected a 2-d matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("data contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (values.shape[0],):
                raise DataError(f"expected {values.shape[0]} labels, got shape {labels.shape}")
            if labels.size and (labels.min() < 0 or not np.issubdtype(labels.dtype, np.integer)):
                raise DataError("labels must be non-negative integers")
            labels = labels.astype(np.int64)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def D(self) -> int:
        return self.values.shape[1]

    @property
    def k(self) -> int | None:
        return None if self.labels is None else int(np.unique(self.labels).size)


def _parse_float(cell: str, lineno: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {lineno}: cannot parse {cell!r} as a number") from None
    if not np.isfinite(value):
        raise DataError(f"line {lineno}: non-finite value {cell!r}")
    return value


def _is_header(row: list[str]) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return True
    return False


def load_dataset(path: str | Path, has_labels: bool = False) -> DataMatrix:
    """Read a comma-separated numeric file.

    A single non-numeric first line is treated as a header. With
    ``has_labels`` the last column is split off as integer labels.
    """
    text = Path(path).read_text()
    rows = [r for r in csv.reader(io.StringIO(text), quoting=csv.QUOTE_NONE) if r and any(c.strip() for c in r)]
    if rows and _is_header(rows[0]):
        rows = rows[1:]
        first_line = 2
    else:
        first_line = 1
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    parsed = []
    for offset, row in enumerate(rows):
        lineno = first_line + offset
        if len(row) != width:
            raise DataError(f"line {lineno}: expected {width} columns, got {len(row)}")
        parsed.append([_parse_float(c.strip(), lineno) for c in row])
    table = np.array(parsed, dtype=np.float64)
    if not has_labels:
        return DataMatrix(table)
    if width < 2:
        raise DataError("labelled file needs at least one feature column")
    raw = table[:, -1]
    if np.any(raw != np.round(raw)):
        raise DataError("label column must hold integers")
    return DataMatrix(table[:, :-1], raw.astype(np.int64))


def save_dataset(data: DataMatrix, path: str | Path, header: bool = False) -> None:
    """Write ``data`` as CSV, labels (if any) in the last column."""
    lines = []
    if header:
        names = [f"x{j}" for j in range(data.D)] + (["label"] if data.labels is not None else [])
        lines.append(",".join(names))
    for i in range(data.N):
        cells = [repr(float(v)) for v in data.values[i]]
        if data.labels is not None:
            cells.append(str(int(data.labels[i])))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def z_transform(data: DataMatrix) -> DataMatrix:
    """Standardise every column to mean 0 and population std 1.

    Constant columns become all-zero columns.
    """
    if data.N < 2:
        raise DataError("z-transform needs at least two rows")
    X = data.values
    mean = X.mean(axis=0)
    centered = X - mean
    std = np.sqrt((centered ** 2).mean(axis=0))
    # relative threshold, so rounding noise in a constant column never gets amplified
    scale = np.maximum(np.abs(mean), 1.0)
    constant = std <= 1e-12 * scale
    out = np.where(constant, 0.0, centered / np.where(constant, 1.0, std))
    return DataMatrix(out, data.labels)


# ---------------------------------------------------------------------------
# synthetic generators

BLOB_NOISE = 0.075
RING_NOISE = 0.05
MOON_OFFSET = 0.25
BLOB_SPACING = 2.5


def _moons(n: int, noise: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # two interleaved unit half-circles; the flipped one is shifted by (1, MOON_OFFSET),
    # which leaves a gap of 1 - MOON_OFFSET between the arcs
    t_upper = np.pi * rng.random(n)
    t_lower = np.pi * rng.random(n)
    upper = np.column_stack([np.cos(t_upper), np.sin(t_upper)])
    lower = np.column_stack([1.0 - np.cos(t_lower), MOON_OFFSET - np.sin(t_lower)])
    pts = np.vstack([upper, lower]) + noise * rng.standard_normal((2 * n, 2))
    return pts, np.repeat([0, 1], n)


def make_synth(n_per_cluster: int = 250, noise: float = RING_NOISE, seed: int = 0,
               blob_noise: float = BLOB_NOISE) -> DataMatrix:
    """Four 2-d clusters of different shapes: two moons and two Gaussian blobs.

    ``noise`` is the moon noise relative to the unit moon radius; ``blob_noise``
    is the blob std relative to the blob center spacing.
    """
    if n_per_cluster < 10:
        raise DataError("n_per_cluster must be at least 10")
    rng = np.random.default_rng(seed)
    moons, moon_labels = _moons(n_per_cluster, noise, rng)
    centers = np.array([[0.5 - BLOB_SPACING / 2, 3.5], [0.5 + BLOB_SPACING / 2, 3.5]])
    blobs = np.repeat(centers, n_per_cluster, axis=0)
    blobs = blobs + blob_noise * BLOB_SPACING * rng.standard_normal(blobs.shape)
    values = np.vstack([moons, blobs])
    labels = np.concatenate([moon_labels, np.repeat([2, 3], n_per_cluster)])
    return DataMatrix(values, labels)


def _rings(n_per_ring: int, noise: float, rng: np.random.Generator,
           radii=(1.0, 2.0), centered: bool = False) -> tuple[np.ndarray, np.ndarray]:
    parts = []
    for r in radii:
        if centered:
            # evenly spaced with a random phase keeps the ring mean at the origin
            theta = rng.random() * 2 * np.pi + 2 * np.pi * np.arange(n_per_ring) / n_per_ring
        else:
            theta = 2 * np.pi * rng.random(n_per_ring)
        ring = r * np.column_stack([np.cos(theta), np.sin(theta)])
        ring = ring + noise * r * rng.standard_normal(ring.shape)
        if centered:
            ring = ring - ring.mean(axis=0)
        parts.append(ring)
    return np.vstack(parts), np.repeat(np.arange(len(radii)), n_per_ring)


def make_two_rings(n_per_ring: int = 250, noise: float = RING_NOISE, seed: int = 0) -> DataMatrix:
    """Two concentric noisy circles of radius 1 (label 0) and 2 (label 1)."""
    if n_per_ring < 10:
        raise DataError("n_per_ring must be at least 10")
    values, labels = _rings(n_per_ring, noise, np.random.default_rng(seed))
    return DataMatrix(values, labels)


def make_collision(n_per_cluster: int = 250, seed: int = 0, noise: float = RING_NOISE) -> DataMatrix:
    """Two concentric circles whose empirical means coincide at the origin."""
    if n_per_cluster < 10:
        raise DataError("n_per_cluster must be at least 10")
    values, labels = _rings(n_per_cluster, noise, np.random.default_rng(seed), centered=True)
    return DataMatrix(values, labels)


def make_blobs(n_per_cluster: int = 100, k: int = 4, std: float = 0.1, spacing: float = 5.0,
               dim: int = 2, seed: int = 0) -> DataMatrix:
    """Isotropic Gaussian blobs on a square grid ``spacing`` apart."""
    rng = np.random.default_rng(seed)
    side = int(np.ceil(np.sqrt(k)))
    grid = np.array([(i % side, i // side) for i in range(k)], dtype=float) * spacing
    centers = np.zeros((k, dim))
    centers[:, :min(dim, 2)] = grid[:, :min(dim, 2)]
    values = np.repeat(centers, n_per_cluster, axis=0) + std * rng.standard_normal((k * n_per_cluster, dim))
    return DataMatrix(values, np.repeat(np.arange(k), n_per_cluster))


GENERATORS = {
    "synth": make_synth,
    "two_rings": make_two_rings,
    "collision": make_collision,
    "blobs": make_blobs,
}


# ---------------------------------------------------------------------------
# sampling

def sample_without_replacement(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` distinct row indices uniformly from ``range(N)``."""
    if not 1 <= n <= N:
        raise ValueError(f"sample size must satisfy 1 <= n <= N, got n={n}, N={N}")
    return rng.choice(N, size=n, replace=False)


def split_train_eval(index: np.ndarray, eval_fraction: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Randomly split ``index`` into disjoint (train, eval) parts."""
    index = np.asarray(index)
    if not 0 < eval_fraction < 1:
        raise ValueError("eval_fraction must lie in (0, 1)")
    n_eval = max(1, int(round(eval_fraction * index.size)))
    if n_eval >= index.size:
        raise ValueError(f"cannot split {index.size} indices with eval fraction {eval_fraction}")
    perm = rng.permutation(index.size)
    return index[perm[n_eval:]], index[perm[:n_eval]]


def resolve_sample_size(N: int, n: int | float | None) -> int:
    """Turn a configured sample size into a row count.

    ``None`` follows the default rule (8% above 11000 rows, else half);
    a float in (0, 1] is a fraction of N; an int is used as is.
    """
    if n is None:
        frac = 0.08 if N > 11000 else 0.5
        return max(1, int(round(frac * N)))
    if isinstance(n, float) and 0 < n <= 1:
        return max(1, int(round(n * N)))
    n = int(n)
    if not 0 < n <= N:
        raise ValueError(f"sample size {n} outside (0, {N}]")
    return n
