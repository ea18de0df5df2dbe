"""Grassmann manifold geometry in the orthonormal-basis representation.

A point of the Grassmann manifold G(p, d) is a p-dimensional linear
subspace of R^d, stored here as a d x p matrix with orthonormal columns.
Any two bases related by a right orthogonal factor describe the same
subspace; all operations in this module are well defined on subspaces,
not just on the chosen bases.

Tangent vectors at a point span(X) are carried by the unique horizontal
lift: the d x p matrix H with X^T H = 0. The metric is the Frobenius
inner product trace(H1^T H2), which does not depend on the chosen
representative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BaseMismatch,
    LogUndefined,
    NotOrthonormal,
    RankDeficient,
    ShapeError,
)

# Frobenius tolerance for basis^T basis = I, enforced on every point.
ORTHONORMALITY_TOL = 1e-10
# Frobenius tolerance for X^T H = 0, enforced on every tangent vector.
HORIZONTALITY_TOL = 1e-10
# Smallest singular value of X^T Y below which the log map is refused.
CUT_LOCUS_TOL = 1e-10


def _as_float_matrix(value, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(value, dtype=float))
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class GrassmannPoint:
    """A subspace of R^d given by a d x p orthonormal basis.

    The basis is copied, frozen read-only, and checked for orthonormality
    on construction, so any held instance is valid. Instances are
    immutable and safe to share across threads.
    """

    basis: np.ndarray

    def __post_init__(self):
        basis = _as_float_matrix(self.basis, "basis")
        d, p = basis.shape
        if p < 1 or p > d:
            raise ShapeError(f"need 1 <= p <= d, got basis shape {d}x{p}")
        residual = np.linalg.norm(basis.T @ basis - np.eye(p))
        if residual > ORTHONORMALITY_TOL:
            raise NotOrthonormal(
                f"basis^T basis deviates from identity by {residual:.3e} "
                f"(tolerance {ORTHONORMALITY_TOL:.1e})"
            )
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector basis @ basis^T, a representative-free
        encoding of the subspace (handy for comparing points)."""
        return self.basis @ self.basis.T

    def same_shape(self, other: "GrassmannPoint") -> bool:
        return self.basis.shape == other.basis.shape


@dataclass(frozen=True)
class TangentVector:
    """Horizontal lift of a tangent vector at a base point.

    The carried matrix H satisfies base^T H = 0; together with the base
    it determines a geodesic direction. Frozen and read-only, like
    GrassmannPoint.
    """

    base: GrassmannPoint
    matrix: np.ndarray

    def __post_init__(self):
        matrix = _as_float_matrix(self.matrix, "matrix")
        if matrix.shape != self.base.basis.shape:
            raise ShapeError(
                f"tangent matrix shape {matrix.shape} does not match "
                f"base shape {self.base.basis.shape}"
            )
        residual = np.linalg.norm(self.base.basis.T @ matrix)
        if residual > HORIZONTALITY_TOL:
            raise BaseMismatch(
                f"matrix is not horizontal at the base point: "
                f"|X^T H| = {residual:.3e}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def zero(cls, base: GrassmannPoint) -> "TangentVector":
        return cls(base, np.zeros_like(base.basis))


def validate_stiefel(matrix, tol: float = ORTHONORMALITY_TOL) -> GrassmannPoint:
    """Wrap a matrix as a GrassmannPoint after checking orthonormality.

    Parameters
    ----------
    matrix : array_like, shape (d, p)
        Candidate orthonormal basis.
    tol : float
        Maximum allowed Frobenius norm of matrix^T matrix - I.

    Raises
    ------
    NotOrthonormal
        If the residual exceeds ``tol``.
    ShapeError
        If the matrix is not 2-D or p > d.
    """
    m = _as_float_matrix(matrix, "matrix")
    d, p = m.shape
    if p < 1 or p > d:
        raise ShapeError(f"need 1 <= p <= d, got shape {d}x{p}")
    residual = np.linalg.norm(m.T @ m - np.eye(p))
    if residual > tol:
        raise NotOrthonormal(
            f"matrix^T matrix deviates from identity by {residual:.3e} "
            f"(tolerance {tol:.1e})"
        )
    return GrassmannPoint(m)


def _fix_column_signs(basis: np.ndarray) -> np.ndarray:
    """Flip column signs so each column's largest-magnitude entry is
    positive. Makes SVD/QR-produced bases reproducible across runs."""
    out = basis.copy()
    for j in range(out.shape[1]):
        lead = np.argmax(np.abs(out[:, j]))
        if out[lead, j] < 0:
            out[:, j] = -out[:, j]
    return out


def qr_orthonormalize(matrix: np.ndarray) -> np.ndarray:
    """Thin QR factor with the diagonal of R forced positive.

    Sign-fixed so that an already-orthonormal input is returned
    unchanged up to rounding.
    """
    q, r = np.linalg.qr(matrix)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def from_samples(samples, p: int) -> GrassmannPoint:
    """Dominant p-dimensional subspace of a sample matrix.

    Takes the thin SVD of the d x M matrix whose columns are vectorized
    observations and keeps the top-p left singular vectors, i.e. the
    best rank-p summary of the column span.

    Parameters
    ----------
    samples : array_like, shape (d, M)
        One column per observation.
    p : int
        Subspace dimension, p <= min(d, M).

    Raises
    ------
    ShapeError
        If p is out of range.
    RankDeficient
        If fewer than p singular values exceed 1e-12 * sigma_max.
    """
    mat = _as_float_matrix(samples, "samples")
    d, m = mat.shape
    if p < 1 or p > min(d, m):
        raise ShapeError(f"need 1 <= p <= min(d, M) = {min(d, m)}, got p={p}")
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s[0] == 0.0 or s[p - 1] <= 1e-12 * s[0]:
        raise RankDeficient(
            f"requested p={p} dominant directions but only "
            f"{int(np.sum(s > 1e-12 * s[0]))} significant singular values"
        )
    return GrassmannPoint(_fix_column_signs(u[:, :p]))


def _check_same_shape(x: GrassmannPoint, y: GrassmannPoint):
    if not x.same_shape(y):
        raise ShapeError(
            f"points live on different manifolds: "
            f"{x.basis.shape} vs {y.basis.shape}"
        )


def log_map(x: GrassmannPoint, y: GrassmannPoint) -> TangentVector:
    """Log map: the tangent vector at ``x`` whose geodesic reaches ``y``.

    Computed from the thin SVD U S V^T of (Y - X X^T Y)(X^T Y)^{-1} as
    U arctan(S) V^T. All principal values of arctan lie in [0, pi/2),
    so the norm of the result equals the geodesic distance.

    Raises
    ------
    LogUndefined
        If X^T Y is singular (some principal angle reaches pi/2): the
        pair is at the cut locus and no unique geodesic exists.
    ShapeError
        If the two points have different shapes.
    """
    _check_same_shape(x, y)
    xty = x.basis.T @ y.basis
    smallest = np.linalg.svd(xty, compute_uv=False)[-1]
    if smallest < CUT_LOCUS_TOL:
        raise LogUndefined(
            f"X^T Y is numerically singular (sigma_min = {smallest:.3e}); "
            f"the pair is at or near the cut locus"
        )
    residual = y.basis - x.basis @ xty
    # A = residual @ inv(X^T Y), via a solve on the transposed system.
    a = np.linalg.solve(xty.T, residual.T).T
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    h = (u * np.arctan(s)) @ vt
    # Remove the float-level vertical component amplified by the solve.
    h -= x.basis @ (x.basis.T @ h)
    return TangentVector(x, h)


def exp_map(x: GrassmannPoint, h: TangentVector) -> GrassmannPoint:
    """Exponential map: follow the geodesic from ``x`` along ``h``.

    With the thin SVD H = U S V^T the endpoint is
    X V cos(S) V^T + U sin(S) V^T, re-orthonormalized by sign-fixed QR
    to suppress rounding drift.
    """
    if h.matrix.shape != x.basis.shape:
        raise ShapeError(
            f"tangent shape {h.matrix.shape} does not match point shape "
            f"{x.basis.shape}"
        )
    if not np.allclose(h.base.basis, x.basis, rtol=0.0, atol=1e-12):
        raise BaseMismatch("tangent vector is based at a different point")
    u, s, vt = np.linalg.svd(h.matrix, full_matrices=False)
    v = vt.T
    endpoint = x.basis @ (v * np.cos(s)) @ vt + (u * np.sin(s)) @ vt
    return GrassmannPoint(qr_orthonormalize(endpoint))


def inner(h1: TangentVector, h2: TangentVector) -> float:
    """Riemannian inner product trace(H1^T H2) of two tangent vectors
    at the same base point."""
    if h1.base.basis.shape != h2.base.basis.shape or not np.allclose(
        h1.base.basis, h2.base.basis, rtol=0.0, atol=1e-12
    ):
        raise BaseMismatch("tangent vectors live at different base points")
    return float(np.vdot(h1.matrix, h2.matrix))


def norm(h: TangentVector) -> float:
    """Metric norm sqrt(trace(H^T H)); equals the geodesic distance for
    vectors produced by the log map."""
    return float(np.linalg.norm(h.matrix))


def principal_angles(x: GrassmannPoint, y: GrassmannPoint) -> np.ndarray:
    """Principal angles between two subspaces, ascending in [0, pi/2].

    Independent of the log map: the cosines are the singular values of
    X^T Y, clamped into [0, 1] before arccos. Used as the oracle for the
    geodesic-distance identity |Log_X(Y)| = sqrt(sum theta_l^2).
    """
    _check_same_shape(x, y)
    cosines = np.linalg.svd(x.basis.T @ y.basis, compute_uv=False)
    return np.arccos(np.clip(cosines, 0.0, 1.0))


def distance(x: GrassmannPoint, y: GrassmannPoint) -> float:
    """Geodesic distance |Log_x(y)|."""
    return norm(log_map(x, y))


def random_point(d: int, p: int, rng: np.random.Generator) -> GrassmannPoint:
    """Random subspace: sign-fixed QR of a d x p standard Gaussian."""
    if p < 1 or p > d:
        raise ShapeError(f"need 1 <= p <= d, got d={d}, p={p}")
    return GrassmannPoint(qr_orthonormalize(rng.standard_normal((d, p))))


def random_tangent(
    x: GrassmannPoint,
    rng: np.random.Generator,
    max_singular_value: float | None = None,
) -> TangentVector:
    """Random horizontal tangent vector at ``x``.

    Projects a Gaussian matrix onto the horizontal space; if
    ``max_singular_value`` is given, the spectrum is rescaled below that
    cap (useful to stay inside the injectivity radius pi/2).
    """
    g = rng.standard_normal(x.basis.shape)
    h = g - x.basis @ (x.basis.T @ g)
    if max_singular_value is not None:
        u, s, vt = np.linalg.svd(h, full_matrices=False)
        top = s[0]
        if top > 0:
            h = (u * (s * (max_singular_value / top))) @ vt
    return TangentVector(x, h)
