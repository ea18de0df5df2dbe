"""Gram tensor tests.

The load-bearing oracle here is the direct double loop: every entry
B[i, j, k] must equal trace(Log_{X_i}(X_j)^T Log_{X_i}(X_k)) computed
pairwise from scratch, which exercises a different arithmetic path than
the stacked-matrix product used by build_gram.
"""

import numpy as np
import pytest

from glrr.errors import LogUndefined, ShapeError
from glrr.gram import GramTensor, build_gram, eta_b
from glrr.manifold import (
    GrassmannPoint,
    inner,
    log_map,
    qr_orthonormalize,
    random_point,
)


def _toy_pair(theta: float = 0.7) -> list[GrassmannPoint]:
    x = GrassmannPoint(np.array([[1.0], [0.0], [0.0]]))
    y = GrassmannPoint(np.array([[np.cos(theta)], [np.sin(theta)], [0.0]]))
    return [x, y]


def _pairwise_oracle(points: list[GrassmannPoint]) -> np.ndarray:
    n = len(points)
    out = np.zeros((n, n, n))
    for i in range(n):
        logs = [
            log_map(points[i], points[j]) if j != i else None for j in range(n)
        ]
        for j in range(n):
            for k in range(n):
                if j == i or k == i:
                    continue
                out[i, j, k] = inner(logs[j], logs[k])
    return out


class TestGramTensorType:
    def test_requires_cubic_shape(self):
        with pytest.raises(ShapeError):
            GramTensor(np.zeros((3, 3)))
        with pytest.raises(ShapeError):
            GramTensor(np.zeros((3, 3, 2)))

    def test_rejects_asymmetric_slice(self):
        bad = np.zeros((2, 2, 2))
        bad[0] = [[0.0, 1.0], [0.0, 0.0]]
        with pytest.raises(ShapeError):
            GramTensor(bad)

    def test_validate_flags_nonzero_base_row(self):
        arr = np.zeros((2, 2, 2))
        arr[0, 0, 0] = 1.0
        tensor = GramTensor(arr)
        with pytest.raises(ShapeError):
            tensor.validate()

    def test_slices_read_only(self):
        tensor = GramTensor(np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            tensor.slices[0, 0, 0] = 1.0


class TestBuildGram:
    def test_identical_points_give_zero_tensor(self):
        x = GrassmannPoint(np.eye(5)[:, :2])
        tensor = build_gram([x, x, x])
        assert np.array_equal(tensor.slices, np.zeros((3, 3, 3)))

    def test_single_angle_toy_values(self):
        tensor = build_gram(_toy_pair(0.7))
        assert np.allclose(
            tensor.slices[0], [[0.0, 0.0], [0.0, 0.49]], atol=1e-12
        )
        assert np.allclose(
            tensor.slices[1], [[0.49, 0.0], [0.0, 0.0]], atol=1e-12
        )

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(20)
        points = [random_point(8, 2, rng) for _ in range(5)]
        tensor = build_gram(points)
        assert np.max(np.abs(tensor.slices - _pairwise_oracle(points))) < 1e-10

    def test_invariants_hold_on_random_points(self):
        rng = np.random.default_rng(21)
        points = [random_point(10, 3, rng) for _ in range(6)]
        tensor = build_gram(points)
        tensor.validate(psd_tol=1e-8)

    def test_quadratic_form_nonnegative(self):
        rng = np.random.default_rng(22)
        points = [random_point(9, 3, rng) for _ in range(5)]
        tensor = build_gram(points)
        for _ in range(50):
            w = rng.standard_normal(5)
            for i in range(5):
                assert w @ tensor.slices[i] @ w >= -1e-8

    def test_representative_invariance(self):
        rng = np.random.default_rng(23)
        points = [random_point(10, 3, rng) for _ in range(5)]
        tensor = build_gram(points)
        rotated = [
            GrassmannPoint(
                pt.basis @ qr_orthonormalize(rng.standard_normal((3, 3)))
            )
            for pt in points
        ]
        again = build_gram(rotated)
        assert np.max(np.abs(tensor.slices - again.slices)) < 1e-8

    def test_needs_two_points(self):
        x = GrassmannPoint(np.eye(4)[:, :2])
        with pytest.raises(ShapeError):
            build_gram([x])

    def test_mixed_shapes_rejected(self):
        rng = np.random.default_rng(24)
        with pytest.raises(ShapeError):
            build_gram([random_point(8, 2, rng), random_point(8, 3, rng)])

    def test_cut_locus_pair_reports_indices(self):
        x = GrassmannPoint(np.array([[1.0], [0.0]]))
        y = GrassmannPoint(np.array([[0.0], [1.0]]))
        mid = GrassmannPoint(
            np.array([[np.cos(0.4)], [np.sin(0.4)]])
        )
        with pytest.raises(LogUndefined) as info:
            build_gram([x, mid, y])
        assert info.value.pair is not None
        i, j = info.value.pair
        assert {i, j} == {0, 2}

    def test_thread_count_does_not_change_output(self, monkeypatch):
        rng = np.random.default_rng(25)
        points = [random_point(9, 3, rng) for _ in range(7)]
        monkeypatch.setenv("GLRR_THREADS", "1")
        serial = build_gram(points)
        monkeypatch.setenv("GLRR_THREADS", "4")
        threaded = build_gram(points)
        assert np.array_equal(serial.slices, threaded.slices)


class TestEtaB:
    def test_zero_tensor(self):
        assert eta_b(GramTensor(np.zeros((3, 3, 3)))) == 4.0

    def test_single_angle_toy_value(self):
        assert eta_b(build_gram(_toy_pair(0.7))) == pytest.approx(
            3.2401, abs=1e-12
        )

    def test_lower_bound(self):
        rng = np.random.default_rng(26)
        points = [random_point(8, 2, rng) for _ in range(4)]
        assert eta_b(build_gram(points)) >= 4 + 1

    def test_matches_spectral_norm_oracle(self):
        rng = np.random.default_rng(27)
        points = [random_point(10, 3, rng) for _ in range(5)]
        tensor = build_gram(points)
        spectral = max(
            np.linalg.norm(tensor.slices[i], ord=2) for i in range(5)
        )
        assert eta_b(tensor) == pytest.approx(spectral**2 + 6, rel=1e-12)
