"""Tangent-space Gram tensor of a Grassmann point set.

For N points X_1..X_N, slice i is the N x N Gram matrix of the log maps
taken at base point X_i:

    B[i, j, k] = trace( Log_{X_i}(X_j)^T Log_{X_i}(X_k) ).

Each slice is symmetric positive semidefinite with row and column i
identically zero (the log of a point at itself vanishes). The tensor is
the only geometry the self-expression solver needs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import LogUndefined, ShapeError
from .manifold import GrassmannPoint, log_map
from .parallel import worker_count


@dataclass(frozen=True)
class GramTensor:
    """Dense (N, N, N) array; ``slices[i]`` is the Gram matrix at base i."""

    slices: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.slices, dtype=float))
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[1] != arr.shape[2]:
            raise ShapeError(f"expected an (N, N, N) tensor, got shape {arr.shape}")
        asym = np.max(np.abs(arr - arr.transpose(0, 2, 1))) if arr.size else 0.0
        if asym > 1e-10:
            raise ShapeError(f"slices must be symmetric; max asymmetry {asym:.3e}")
        arr.setflags(write=False)
        object.__setattr__(self, "slices", arr)

    @property
    def n_points(self) -> int:
        return self.slices.shape[0]

    def validate(self, psd_tol: float = 1e-8) -> None:
        """Full invariant check: slice symmetry, positive semidefiniteness
        up to ``-psd_tol``, and zero row/column i in slice i. Costs an
        eigendecomposition per slice; meant for tests and after I/O."""
        n = self.n_points
        for i in range(n):
            b = self.slices[i]
            if np.linalg.norm(b[i]) != 0.0 or np.linalg.norm(b[:, i]) != 0.0:
                raise ShapeError(f"slice {i} has nonzero row/column {i}")
            smallest = np.linalg.eigvalsh(b)[0]
            if smallest < -psd_tol:
                raise ShapeError(
                    f"slice {i} is not positive semidefinite "
                    f"(min eigenvalue {smallest:.3e})"
                )


def _base_slice(points: list[GrassmannPoint], i: int) -> np.ndarray:
    n = len(points)
    d, p = points[i].basis.shape
    lifted = np.zeros((n, d * p))
    for j in range(n):
        if j == i:
            continue
        try:
            lifted[j] = log_map(points[i], points[j]).matrix.ravel()
        except LogUndefined as err:
            raise LogUndefined(
                f"log map undefined for pair ({i}, {j}): {err}", pair=(i, j)
            ) from err
    gram = lifted @ lifted.T
    return (gram + gram.T) / 2.0


def build_gram(points: list[GrassmannPoint]) -> GramTensor:
    """Assemble the Gram tensor for a list of Grassmann points.

    The N-1 log maps at each base point are computed once and reused
    for the whole slice via a stacked Gram product. Slices are
    independent, so they are computed in parallel (bounded by
    GLRR_THREADS) with output identical to the sequential order.

    Raises
    ------
    ShapeError
        If fewer than two points or mismatched shapes.
    LogUndefined
        If any pair is at the cut locus; the offending (base, target)
        index pair is attached to the exception.
    """
    n = len(points)
    if n < 2:
        raise ShapeError(f"need at least 2 points, got {n}")
    shape = points[0].basis.shape
    for idx, pt in enumerate(points):
        if pt.basis.shape != shape:
            raise ShapeError(
                f"point {idx} has shape {pt.basis.shape}, expected {shape}"
            )
    out = np.zeros((n, n, n))
    workers = worker_count(n)
    if workers == 1:
        for i in range(n):
            out[i] = _base_slice(points, i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, b in enumerate(pool.map(lambda k: _base_slice(points, k), range(n))):
                out[i] = b
    return GramTensor(out)


def eta_b(tensor: GramTensor) -> float:
    """Linearization constant: max over slices of the squared spectral
    norm, plus N + 1. Majorizes the curvature of every quadratic term
    w_i B_i w_i^T together with the row-sum penalty."""
    n = tensor.n_points
    largest = 0.0
    for i in range(n):
        eigs = np.linalg.eigvalsh(tensor.slices[i])
        largest = max(largest, float(np.max(np.abs(eigs))))
    return largest**2 + n + 1.0
