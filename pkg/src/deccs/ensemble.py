"""Base clustering algorithms of the ensemble: k-means, GMM, agglomerative, spectral.

All members return labels renumbered by first occurrence, so identical
groupings produce identical arrays.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .metrics import canonical_labels

ALGORITHMS = ("kmeans", "spectral", "agglomerative", "gmm")


class NumericalError(RuntimeError):
    pass


class MemberError(RuntimeError):
    def __init__(self, index: int, algorithm: str, cause: Exception):
        super().__init__(f"ensemble member {index} ({algorithm}) failed: {cause}")
        self.index = index
        self.algorithm = algorithm


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = (A * A).sum(1)[:, None] - 2.0 * A @ B.T + (B * B).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _check_k(Z: np.ndarray, k: int) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] == 0:
        raise ValueError("expected a non-empty 2-d matrix")
    if k < 1 or Z.shape[0] < k:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={Z.shape[0]}")
    return Z


# ---------------------------------------------------------------------------
# k-means

def kmeans_plusplus(Z: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = Z.shape[0]
    centers = np.empty((k, Z.shape[1]))
    centers[0] = Z[rng.integers(n)]
    closest = _sq_dists(Z, centers[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = Z[idx]
        closest = np.minimum(closest, _sq_dists(Z, centers[c:c + 1]).ravel())
    return centers


def lloyd(Z: np.ndarray, centers: np.ndarray, max_iter: int = 300) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd iterations until the assignment stops changing."""
    centers = centers.copy()
    k = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(Z, centers)
        new = d.argmin(axis=1)
        counts = np.bincount(new, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # move the point farthest from its own center into the empty cluster
            own = d[np.arange(len(new)), new]
            far = int(own.argmax())
            new[far] = empty
            d[far] = np.inf
            d[far, empty] = 0.0
            counts = np.bincount(new, minlength=k)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = Z[labels == c].mean(axis=0)
    inertia = float(((Z - centers[labels]) ** 2).sum())
    return labels, centers, inertia


def kmeans(Z, k: int, n_init: int = 10, rng: np.random.Generator | None = None,
           max_iter: int = 300, full_output: bool = False):
    """Best-of-``n_init`` Lloyd k-means with k-means++ seeding.

    Returns ``(labels, centers)``; with ``full_output`` also the best
    inertia and the inertia of every restart.
    """
    Z = _check_k(Z, k)
    rng = np.random.default_rng() if rng is None else rng
    best = None
    inertias = []
    for _ in range(max(1, n_init)):
        labels, centers, inertia = lloyd(Z, kmeans_plusplus(Z, k, rng), max_iter)
        inertias.append(inertia)
        if best is None or inertia < best[2]:
            best = (labels, centers, inertia)
    labels, centers, inertia = best
    canon = canonical_labels(labels)
    order = np.empty(k, dtype=np.int64)
    order[canon] = labels
    centers = centers[order]
    if full_output:
        return canon, centers, inertia, np.array(inertias)
    return canon, centers


# ---------------------------------------------------------------------------
# Gaussian mixture

def _gmm_log_prob(Z, weights, means, covs):
    n, d = Z.shape
    k = means.shape[0]
    out = np.empty((n, k))
    for c in range(k):
        try:
            L = np.linalg.cholesky(covs[c])
        except np.linalg.LinAlgError:
            raise NumericalError(f"covariance of component {c} is not positive definite") from None
        diff = np.linalg.solve(L, (Z - means[c]).T)
        maha = (diff * diff).sum(axis=0)
        logdet = 2.0 * np.log(np.diag(L)).sum()
        out[:, c] = np.log(weights[c]) - 0.5 * (d * np.log(2 * np.pi) + logdet + maha)
    return out


def _logsumexp(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True))).ravel()


def _gmm_m_step(Z, resp, reg_covar):
    n, d = Z.shape
    nk = resp.sum(axis=0) + 10 * np.finfo(float).eps
    means = resp.T @ Z / nk[:, None]
    covs = np.empty((resp.shape[1], d, d))
    for c in range(resp.shape[1]):
        diff = Z - means[c]
        covs[c] = (resp[:, c, None] * diff).T @ diff / nk[c]
        covs[c].flat[::d + 1] += reg_covar
    return nk / n, means, covs


def gmm(Z, k: int, reg_covar: float = 1e-5, rng: np.random.Generator | None = None,
        max_iter: int = 100, tol: float = 1e-4, full_output: bool = False):
    """Full-covariance EM initialised from one k-means run.

    Returns hard labels (argmax responsibility); with ``full_output`` also
    the per-iteration mean log-likelihood trace and the fitted parameters.
    """
    Z = _check_k(Z, k)
    rng = np.random.default_rng() if rng is None else rng
    init_labels, _ = kmeans(Z, k, n_init=1, rng=rng)
    resp = np.zeros((Z.shape[0], k))
    resp[np.arange(Z.shape[0]), init_labels] = 1.0
    weights, means, covs = _gmm_m_step(Z, resp, reg_covar)
    trace = []
    for _ in range(max_iter):
        log_prob = _gmm_log_prob(Z, weights, means, covs)
        log_norm = _logsumexp(log_prob)
        trace.append(float(log_norm.mean()))
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < tol:
            break
        resp = np.exp(log_prob - log_norm[:, None])
        weights, means, covs = _gmm_m_step(Z, resp, reg_covar)
    labels = canonical_labels(_gmm_log_prob(Z, weights, means, covs).argmax(axis=1))
    if full_output:
        return labels, np.array(trace), (weights, means, covs)
    return labels


# ---------------------------------------------------------------------------
# agglomerative

def agglomerative(Z, k: int, linkage: str = "ward") -> np.ndarray:
    """Bottom-up merging cut at ``k`` clusters.

    Ward uses the Lance-Williams recurrence on squared Euclidean distances;
    single linkage keeps the minimum pointwise distance. Ties go to the
    smallest (i, j) pair, so the result is fully deterministic.
    """
    Z = _check_k(Z, k)
    if linkage not in ("ward", "single"):
        raise ValueError(f"unknown linkage {linkage!r}")
    n = Z.shape[0]
    D = _sq_dists(Z, Z)
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    owner = np.arange(n)
    # row-wise minima, refreshed only where a merge touched them
    row_min = D.min(axis=1)
    row_arg = D.argmin(axis=1)
    for _ in range(n - k):
        i = int(row_min.argmin())
        j = int(row_arg[i])
        if j < i:
            i, j = j, i
        if linkage == "single":
            merged = np.minimum(D[i], D[j])
        else:
            ni, nj = size[i], size[j]
            nk = size
            merged = ((ni + nk) * D[i] + (nj + nk) * D[j] - nk * D[i, j]) / (ni + nj + nk)
        merged[i] = np.inf
        merged[j] = np.inf
        alive = np.isfinite(row_min)
        merged[~alive] = np.inf
        D[i] = merged
        D[:, i] = merged
        D[j] = np.inf
        D[:, j] = np.inf
        size[i] += size[j]
        owner[owner == j] = i
        row_min[j] = np.inf
        # refresh rows whose minimum pointed at i or j, plus row i itself
        stale = np.flatnonzero(((row_arg == i) | (row_arg == j)) & np.isfinite(row_min))
        stale = np.union1d(stale, [i])
        row_min[stale] = D[stale].min(axis=1)
        row_arg[stale] = D[stale].argmin(axis=1)
        # merged distances may undercut other rows' minima (ward can shrink, single can too)
        better = merged < row_min
        better[i] = False
        if better.any():
            rows = np.flatnonzero(better)
            row_min[rows] = merged[rows]
            row_arg[rows] = i
    return canonical_labels(owner)


# ---------------------------------------------------------------------------
# spectral

def knn_affinity(Z, n_neighbors: int) -> np.ndarray:
    """Symmetrised k-NN connectivity matrix (self excluded)."""
    n = Z.shape[0]
    if not 1 <= n_neighbors < n:
        raise ValueError(f"need 1 <= n_neighbors < n, got {n_neighbors} with n={n}")
    D = _sq_dists(Z, Z)
    np.fill_diagonal(D, np.inf)
    nbrs = np.argsort(D, axis=1, kind="stable")[:, :n_neighbors]
    A = np.zeros((n, n))
    A[np.repeat(np.arange(n), n_neighbors), nbrs.ravel()] = 1.0
    return (A + A.T) / 2.0


def normalized_laplacian(A: np.ndarray) -> np.ndarray:
    deg = A.sum(axis=1)
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    L = -(inv_sqrt[:, None] * A * inv_sqrt[None, :])
    L.flat[::A.shape[0] + 1] += 1.0
    return (L + L.T) / 2.0


def spectral_embedding(Z, k: int, n_neighbors: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalised eigenvectors of the k smallest Laplacian eigenvalues."""
    L = normalized_laplacian(knn_affinity(Z, n_neighbors))
    try:
        evals, evecs = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}") from None
    U = evecs[:, :k]
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    U = U / np.where(norms > 0, norms, 1.0)
    return U, evals


def spectral(Z, k: int, n_neighbors: int = 10, rng: np.random.Generator | None = None,
             n_init: int = 10) -> np.ndarray:
    Z = _check_k(Z, k)
    U, _ = spectral_embedding(Z, k, n_neighbors)
    labels, _ = kmeans(U, k, n_init=n_init, rng=rng)
    return labels


# ---------------------------------------------------------------------------
# ensemble

@dataclass(frozen=True)
class MemberSpec:
    algorithm: str
    k: int
    n_init: int = 10
    n_neighbors: int = 10
    linkage: str = "ward"
    reg_covar: float = 1e-5
    max_iter: int | None = None
    tol: float = 1e-4

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.k < 2:
            raise ValueError("every ensemble member needs k >= 2")

    def run(self, Z, rng: np.random.Generator) -> np.ndarray:
        if self.algorithm == "kmeans":
            return kmeans(Z, self.k, self.n_init, rng, max_iter=self.max_iter or 300)[0]
        if self.algorithm == "gmm":
            return gmm(Z, self.k, self.reg_covar, rng, max_iter=self.max_iter or 100, tol=self.tol)
        if self.algorithm == "agglomerative":
            return agglomerative(Z, self.k, self.linkage)
        return spectral(Z, self.k, self.n_neighbors, rng, n_init=self.n_init)


@dataclass(frozen=True)
class EnsembleSpec:
    members: tuple[MemberSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) < 2:
            raise ValueError("an ensemble needs at least two members")

    @property
    def ks(self) -> list[int]:
        return [m.k for m in self.members]

    def to_dict(self) -> list[dict]:
        return [asdict(m) for m in self.members]

    @classmethod
    def from_dicts(cls, members: Sequence[dict]) -> "EnsembleSpec":
        return cls(tuple(MemberSpec(**m) for m in members))


def default_ensemble(k: int, linkage: str = "ward", n_neighbors: int = 10) -> EnsembleSpec:
    """The KM, SC, AGG, GMM ensemble with the reference parameters."""
    return EnsembleSpec((
        MemberSpec("kmeans", k),
        MemberSpec("spectral", k, n_neighbors=n_neighbors),
        MemberSpec("agglomerative", k, linkage=linkage),
        MemberSpec("gmm", k, reg_covar=1e-5),
    ))


def run_ensemble(spec: EnsembleSpec, Z, rng: np.random.Generator) -> list[np.ndarray]:
    """One partition per member, in member order."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] == 0:
        raise ValueError("expected a non-empty 2-d embedding")
    base = int(rng.integers(2 ** 62))
    out = []
    for i, member in enumerate(spec.members):
        member_rng = np.random.default_rng([base, i])
        try:
            out.append(member.run(Z, member_rng))
        except Exception as exc:
            raise MemberError(i, member.algorithm, exc) from exc
    return out


def compute_centers(Z, labels) -> np.ndarray:
    """Mean embedding of every cluster; labels must cover 0..k-1."""
    Z = np.asarray(Z, dtype=np.float64)
    labels = np.asarray(labels)
    k = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ValueError(f"empty clusters: {np.flatnonzero(counts == 0).tolist()}")
    sums = np.zeros((k, Z.shape[1]))
    np.add.at(sums, labels, Z)
    return sums / counts[:, None]
