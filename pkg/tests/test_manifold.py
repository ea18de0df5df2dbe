"""Geometry tests: point construction, Log/Exp maps, metric.

The Log map is checked against two independent oracles: the Exp-map
roundtrip (exp then log must return the original tangent) and the
principal-angle identity (the norm of the log must equal the root sum
of squared principal angles, which are computed straight from the SVD
of X^T Y without touching the Log code path).
"""

import numpy as np
import pytest

from glrr.errors import (
    BaseMismatch,
    LogUndefined,
    NotOrthonormal,
    RankDeficient,
    ShapeError,
)
from glrr.manifold import (
    GrassmannPoint,
    TangentVector,
    distance,
    exp_map,
    from_samples,
    inner,
    log_map,
    norm,
    principal_angles,
    qr_orthonormalize,
    random_point,
    random_tangent,
    validate_stiefel,
)


def _random_orthogonal(p: int, rng: np.random.Generator) -> np.ndarray:
    return qr_orthonormalize(rng.standard_normal((p, p)))


def _single_angle_pair(theta: float) -> tuple[GrassmannPoint, GrassmannPoint]:
    """Lines in R^3 separated by exactly one principal angle theta."""
    x = GrassmannPoint(np.array([[1.0], [0.0], [0.0]]))
    y = GrassmannPoint(np.array([[np.cos(theta)], [np.sin(theta)], [0.0]]))
    return x, y


class TestValidateStiefel:
    def test_identity_columns(self):
        point = validate_stiefel(np.eye(3)[:, :2], tol=1e-10)
        assert point.ambient_dim == 3
        assert point.subspace_dim == 2

    def test_scaled_column_rejected(self):
        with pytest.raises(NotOrthonormal):
            validate_stiefel(np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]))

    def test_qr_of_random_gaussian(self):
        rng = np.random.default_rng(0)
        q = np.linalg.qr(rng.standard_normal((10, 4)))[0]
        point = validate_stiefel(q)
        residual = np.linalg.norm(point.basis.T @ point.basis - np.eye(4))
        assert residual < 1e-12

    def test_wide_matrix_rejected(self):
        with pytest.raises(ShapeError):
            validate_stiefel(np.eye(2, 4))

    def test_non_finite_rejected(self):
        bad = np.eye(3)[:, :2]
        bad[0, 0] = np.nan
        with pytest.raises(ShapeError):
            validate_stiefel(bad)


class TestGrassmannPoint:
    def test_basis_is_read_only(self):
        point = GrassmannPoint(np.eye(4)[:, :2])
        with pytest.raises(ValueError):
            point.basis[0, 0] = 5.0

    def test_projector_is_representative_free(self):
        rng = np.random.default_rng(1)
        x = random_point(7, 3, rng)
        q = _random_orthogonal(3, rng)
        same = GrassmannPoint(x.basis @ q)
        assert np.allclose(x.projector(), same.projector(), atol=1e-12)

    def test_near_orthonormal_rejected(self):
        basis = np.eye(5)[:, :2] + 1e-4
        with pytest.raises(NotOrthonormal):
            GrassmannPoint(basis)


class TestTangentVector:
    def test_horizontality_enforced(self):
        x = GrassmannPoint(np.eye(4)[:, :2])
        vertical = np.zeros((4, 2))
        vertical[0, 0] = 1.0  # lies inside span(X)
        with pytest.raises(BaseMismatch):
            TangentVector(x, vertical)

    def test_zero_vector(self):
        x = GrassmannPoint(np.eye(4)[:, :2])
        z = TangentVector.zero(x)
        assert norm(z) == 0.0

    def test_shape_must_match_base(self):
        x = GrassmannPoint(np.eye(4)[:, :2])
        with pytest.raises(ShapeError):
            TangentVector(x, np.zeros((4, 3)))


class TestFromSamples:
    def test_orthonormal_input_is_its_own_basis(self):
        point = from_samples(np.eye(4)[:, :2], p=2)
        expected = np.eye(4)[:, :2]
        assert np.allclose(point.projector(), expected @ expected.T, atol=1e-12)

    def test_dominant_direction(self):
        point = from_samples(np.array([[3.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), p=1)
        assert np.allclose(np.abs(point.basis[:, 0]), [1.0, 0.0, 0.0], atol=1e-12)

    def test_matches_independent_svd(self):
        # independent oracle: dominant eigenvectors of the sample
        # covariance, a different route to the same subspace
        rng = np.random.default_rng(2)
        samples = rng.standard_normal((50, 20))
        point = from_samples(samples, p=10)
        eigvals, eigvecs = np.linalg.eigh(samples @ samples.T)
        top = eigvecs[:, np.argsort(eigvals)[::-1][:10]]
        assert np.linalg.norm(point.projector() - top @ top.T) < 1e-8

    def test_rank_deficient_rejected(self):
        col = np.arange(1.0, 5.0)[:, None]
        with pytest.raises(RankDeficient):
            from_samples(np.hstack([col, 2 * col, 3 * col]), p=2)

    def test_p_out_of_range(self):
        with pytest.raises(ShapeError):
            from_samples(np.eye(3), p=4)

    def test_projection_deterministic(self):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal((12, 9))
        a = from_samples(samples, p=4)
        b = from_samples(samples.copy(), p=4)
        assert np.linalg.norm(a.projector() - b.projector()) < 1e-10
        # the sign convention pins the basis itself, not just the span
        assert np.array_equal(a.basis, b.basis)


class TestLogMap:
    def test_log_at_base_point_is_zero(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            x = random_point(9, 3, rng)
            assert norm(log_map(x, x)) < 1e-12

    def test_single_angle_closed_form(self):
        x, y = _single_angle_pair(0.7)
        h = log_map(x, y)
        assert np.allclose(h.matrix, [[0.0], [0.7], [0.0]], atol=1e-12)
        assert norm(h) == pytest.approx(0.7, abs=1e-12)

    def test_orthogonal_subspaces_undefined(self):
        x = GrassmannPoint(np.eye(4)[:, :2])
        y = GrassmannPoint(np.eye(4)[:, 2:])
        with pytest.raises(LogUndefined):
            log_map(x, y)

    def test_result_is_horizontal(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = random_point(10, 3, rng)
            y = random_point(10, 3, rng)
            h = log_map(x, y)
            assert np.linalg.norm(x.basis.T @ h.matrix) < 1e-10

    def test_shape_mismatch(self):
        x = GrassmannPoint(np.eye(4)[:, :2])
        y = GrassmannPoint(np.eye(5)[:, :2])
        with pytest.raises(ShapeError):
            log_map(x, y)

    def test_invariant_under_target_representative(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            x = random_point(8, 3, rng)
            y = random_point(8, 3, rng)
            yq = GrassmannPoint(y.basis @ _random_orthogonal(3, rng))
            h1 = log_map(x, y)
            h2 = log_map(x, yq)
            assert np.linalg.norm(h1.matrix - h2.matrix) < 1e-9


class TestExpMap:
    def test_zero_tangent_is_identity(self):
        rng = np.random.default_rng(7)
        x = random_point(6, 2, rng)
        y = exp_map(x, TangentVector.zero(x))
        assert np.allclose(x.projector(), y.projector(), atol=1e-12)

    def test_single_angle_closed_form(self):
        x = GrassmannPoint(np.array([[1.0], [0.0], [0.0]]))
        h = TangentVector(x, np.array([[0.0], [0.7], [0.0]]))
        y = exp_map(x, h)
        target = np.array([[np.cos(0.7)], [np.sin(0.7)], [0.0]])
        assert np.allclose(y.projector(), target @ target.T, atol=1e-12)

    def test_roundtrip_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            x = random_point(10, 3, rng)
            h = random_tangent(x, rng, max_singular_value=np.pi / 2 - 0.1)
            back = log_map(x, exp_map(x, h))
            assert np.linalg.norm(back.matrix - h.matrix) < 1e-8

    def test_foreign_base_rejected(self):
        rng = np.random.default_rng(9)
        x = random_point(6, 2, rng)
        other = random_point(6, 2, rng)
        h = random_tangent(other, rng)
        with pytest.raises(BaseMismatch):
            exp_map(x, h)


class TestMetric:
    def test_inner_with_zero(self):
        rng = np.random.default_rng(10)
        x = random_point(8, 3, rng)
        h = random_tangent(x, rng)
        assert inner(h, TangentVector.zero(x)) == 0.0

    def test_inner_of_self_is_squared_norm(self):
        rng = np.random.default_rng(11)
        x = random_point(8, 3, rng)
        h = random_tangent(x, rng)
        assert inner(h, h) == pytest.approx(norm(h) ** 2, rel=1e-12)

    def test_inner_matches_elementwise_sum(self):
        rng = np.random.default_rng(12)
        x = random_point(7, 2, rng)
        h1 = random_tangent(x, rng)
        h2 = random_tangent(x, rng)
        direct = sum(
            h1.matrix[i, j] * h2.matrix[i, j]
            for i in range(7)
            for j in range(2)
        )
        assert inner(h1, h2) == pytest.approx(direct, rel=1e-12)

    def test_mismatched_bases_rejected(self):
        rng = np.random.default_rng(13)
        x = random_point(6, 2, rng)
        y = random_point(6, 2, rng)
        with pytest.raises(BaseMismatch):
            inner(random_tangent(x, rng), random_tangent(y, rng))


class TestPrincipalAngles:
    def test_identical_subspaces(self):
        x = GrassmannPoint(np.eye(5)[:, :2])
        assert np.allclose(principal_angles(x, x), 0.0, atol=1e-7)

    def test_orthogonal_subspaces(self):
        x = GrassmannPoint(np.eye(4)[:, :2])
        y = GrassmannPoint(np.eye(4)[:, 2:])
        assert np.allclose(principal_angles(x, y), np.pi / 2, atol=1e-12)

    def test_log_norm_identity(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            x = random_point(12, 4, rng)
            y = random_point(12, 4, rng)
            theta = principal_angles(x, y)
            assert distance(x, y) == pytest.approx(
                float(np.sqrt(np.sum(theta**2))), abs=1e-8
            )

    def test_single_angle_value(self):
        x, y = _single_angle_pair(0.7)
        assert principal_angles(x, y)[0] == pytest.approx(0.7, abs=1e-12)


class TestRepresentativeInvariance:
    def test_metric_of_logs_under_base_representative(self):
        # trace(log(XQ,Y)^T log(XQ,Z)) must equal the value at X: both
        # lifts pick up the same right factor Q, which the trace kills.
        rng = np.random.default_rng(15)
        for _ in range(10):
            x = random_point(9, 3, rng)
            y = random_point(9, 3, rng)
            z = random_point(9, 3, rng)
            q = _random_orthogonal(3, rng)
            xq = GrassmannPoint(x.basis @ q)
            base = inner(log_map(x, y), log_map(x, z))
            moved = inner(log_map(xq, y), log_map(xq, z))
            assert moved == pytest.approx(base, abs=1e-9)

    def test_distance_under_both_representatives(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            x = random_point(10, 4, rng)
            y = random_point(10, 4, rng)
            xq = GrassmannPoint(x.basis @ _random_orthogonal(4, rng))
            yq = GrassmannPoint(y.basis @ _random_orthogonal(4, rng))
            assert distance(xq, yq) == pytest.approx(distance(x, y), abs=1e-9)


class TestRandomSamplers:
    def test_random_point_is_valid(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            x = random_point(20, 6, rng)
            assert np.linalg.norm(x.basis.T @ x.basis - np.eye(6)) < 1e-12

    def test_random_tangent_cap(self):
        rng = np.random.default_rng(18)
        x = random_point(15, 5, rng)
        h = random_tangent(x, rng, max_singular_value=0.3)
        top = np.linalg.svd(h.matrix, compute_uv=False)[0]
        assert top <= 0.3 + 1e-12

    def test_qr_orthonormalize_fixed_point(self):
        rng = np.random.default_rng(19)
        q = qr_orthonormalize(rng.standard_normal((8, 3)))
        again = qr_orthonormalize(q)
        assert np.allclose(q, again, atol=1e-12)
