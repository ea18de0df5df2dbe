"""Spectral clustering of the learned coefficients and scoring.

The coefficient matrix is symmetrized into a nonnegative affinity,
embedded through the normalized graph Laplacian, and partitioned with
seeded k-means. Accuracy against ground truth is permutation-invariant:
predicted labels are matched to true labels by the Hungarian algorithm
on the contingency table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    DegenerateAffinity,
    LengthMismatch,
    ShapeError,
    ValidationError,
)
from .solver import CoefficientMatrix

# Degrees (and embedding row norms) are clamped here before division.
_DEGENERACY_FLOOR = 1e-12


@dataclass(frozen=True)
class Affinity:
    """Symmetric nonnegative N x N edge-weight matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.matrix, dtype=float))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeError(f"affinity must be square, got {arr.shape}")
        if np.any(arr < 0):
            raise ValidationError("affinity entries must be nonnegative")
        if np.max(np.abs(arr - arr.T), initial=0.0) > 1e-12:
            raise ValidationError("affinity must be symmetric")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)


@dataclass(frozen=True)
class ClusterAssignment:
    """Integer labels in [0, k) for N points."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=int))
        if labels.ndim != 1:
            raise ShapeError("labels must be a 1-D vector")
        if self.k < 1:
            raise ValidationError(f"cluster count must be >= 1, got {self.k}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValidationError(
                f"labels must lie in [0, {self.k}), got range "
                f"[{labels.min()}, {labels.max()}]"
            )
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n_points(self) -> int:
        return self.labels.size

    @classmethod
    def from_labels(cls, labels) -> "ClusterAssignment":
        """Wrap an arbitrary integer label vector, remapping values to
        0..k-1 in order of first appearance."""
        raw = np.asarray(labels)
        _, remapped = np.unique(raw, return_inverse=True)
        order = {}
        canonical = np.empty(raw.size, dtype=int)
        for i, v in enumerate(remapped):
            if v not in order:
                order[v] = len(order)
            canonical[i] = order[v]
        return cls(canonical, max(len(order), 1))


def affinity_from_w(w: CoefficientMatrix | np.ndarray) -> Affinity:
    """Symmetrized magnitude affinity (|W| + |W^T|) / 2."""
    mat = w.matrix if isinstance(w, CoefficientMatrix) else np.asarray(w, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ShapeError(f"coefficient matrix must be square, got {mat.shape}")
    absw = np.abs(mat)
    return Affinity((absw + absw.T) / 2.0)


def _fix_eigenvector_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the first nonzero component of each eigenvector positive,
    so repeated eigendecompositions give the same embedding."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        nonzero = np.flatnonzero(np.abs(out[:, j]) > _DEGENERACY_FLOOR)
        if nonzero.size and out[nonzero[0], j] < 0:
            out[:, j] = -out[:, j]
    return out


def spectral_embedding(
    affinity: Affinity, k: int, variant: str = "njw"
) -> np.ndarray:
    """Rows to feed k-means: eigenvectors of the normalized Laplacian.

    Both variants start from L = I - D^{-1/2} A D^{-1/2} and its k
    eigenvectors of smallest eigenvalue. "njw" row-normalizes them;
    "shi-malik" rescales by D^{-1/2} (random-walk eigenvectors) without
    row normalization. Degenerate degrees are floored at 1e-12.
    """
    if variant not in ("njw", "shi-malik"):
        raise ValidationError(f"unknown spectral variant {variant!r}")
    a = affinity.matrix
    n = a.shape[0]
    if k < 2:
        raise ValidationError(f"cluster count must be >= 2, got {k}")
    if k > n:
        raise ValidationError(f"cannot split {n} points into {k} clusters")
    if not np.any(a > 0):
        raise DegenerateAffinity("affinity matrix has no nonzero weight")
    degrees = np.maximum(a.sum(axis=1), _DEGENERACY_FLOOR)
    inv_sqrt = 1.0 / np.sqrt(degrees)
    lap = np.eye(n) - (inv_sqrt[:, None] * a) * inv_sqrt[None, :]
    lap = (lap + lap.T) / 2.0
    _, vectors = np.linalg.eigh(lap)
    emb = _fix_eigenvector_signs(vectors[:, :k])
    if variant == "njw":
        row_norms = np.maximum(np.linalg.norm(emb, axis=1), _DEGENERACY_FLOOR)
        return emb / row_norms[:, None]
    return emb * inv_sqrt[:, None]


def spectral_cluster(
    affinity: Affinity,
    k: int,
    seed: int,
    variant: str = "njw",
    restarts: int = 20,
) -> ClusterAssignment:
    """Normalized spectral clustering with seeded k-means restarts.

    Restart r runs k-means++ with seed ``seed + r``; the labels with
    the lowest inertia win (first winner kept on ties), so the result
    is deterministic for a fixed seed.
    """
    emb = spectral_embedding(affinity, k, variant)
    best_labels = None
    best_inertia = np.inf
    for r in range(restarts):
        labels, inertia = _lloyd(emb, k, np.random.default_rng(seed + r))
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return ClusterAssignment(best_labels, k)


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        + np.sum(centers**2, axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(
    points: np.ndarray, k: int, rng: np.random.Generator
) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = _squared_distances(points, centers[:1])[:, 0]
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[c] = points[idx]
        d2 = np.minimum(d2, _squared_distances(points, centers[c : c + 1])[:, 0])
    return centers


def _lloyd(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iter: int = 300,
    rel_tol: float = 1e-9,
) -> tuple[np.ndarray, float]:
    centers = _kmeans_pp_init(points, k, rng)
    prev_inertia = np.inf
    labels = np.zeros(points.shape[0], dtype=int)
    inertia = 0.0
    for _ in range(max_iter):
        d2 = _squared_distances(points, centers)
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(points.shape[0]), labels].sum())
        if prev_inertia - inertia <= rel_tol * max(prev_inertia, rel_tol) and np.isfinite(
            prev_inertia
        ):
            break
        prev_inertia = inertia
        for c in range(k):
            members = labels == c
            if np.any(members):
                centers[c] = points[members].mean(axis=0)
            else:
                # revive an empty cluster at the worst-served point
                centers[c] = points[np.argmax(d2[np.arange(points.shape[0]), labels])]
    return labels, inertia


def kmeans(points: np.ndarray, k: int, seed: int) -> ClusterAssignment:
    """Single seeded k-means++ run (Lloyd iterations until the relative
    inertia change drops below 1e-9 or 300 iterations)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ShapeError("points must be an N x m matrix")
    if k < 1 or k > pts.shape[0]:
        raise ValidationError(f"need 1 <= k <= N = {pts.shape[0]}, got k={k}")
    labels, _ = _lloyd(pts, k, np.random.default_rng(seed))
    return ClusterAssignment(labels, k)


def contingency(
    pred: ClusterAssignment, truth: ClusterAssignment
) -> np.ndarray:
    """K x K table of co-occurrence counts (rows: predicted labels,
    columns: true labels), padded square over the larger label count."""
    if pred.n_points != truth.n_points:
        raise LengthMismatch(
            f"label vectors differ in length: {pred.n_points} vs {truth.n_points}"
        )
    size = max(pred.k, truth.k)
    table = np.zeros((size, size), dtype=int)
    np.add.at(table, (pred.labels, truth.labels), 1)
    return table


def accuracy(pred: ClusterAssignment, truth: ClusterAssignment) -> float:
    """Fraction of points correct under the best one-to-one matching of
    predicted to true labels (Hungarian assignment on the contingency
    table)."""
    table = contingency(pred, truth)
    if pred.n_points == 0:
        return 0.0
    rows, cols = linear_sum_assignment(-table)
    return float(table[rows, cols].sum()) / float(pred.n_points)
