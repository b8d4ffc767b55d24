import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from armarecon.errors import ConfigError, DataError
from armarecon.graph import (SubjectGraph, build_adjacency, cosine_similarity, normalize_adjacency,
                             read_edge_list, write_edge_list)
from armarecon.spectral import power_iteration

from conftest import random_adjacency


class TestCosine:
    def test_self_similarity(self, rng):
        x = rng.random(7) + 0.1
        assert cosine_similarity(x, x) == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_forty_five_degrees(self):
        assert cosine_similarity([1, 0], [1, 1]) == pytest.approx(0.7071067811865475, abs=1e-16)

    def test_zero_vector_warns(self):
        with pytest.warns(UserWarning):
            assert cosine_similarity([0, 0], [1, 1]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            cosine_similarity([1, 2], [1, 2, 3])


class TestBuildAdjacency:
    def test_identical_rows_connect_at_default_threshold(self):
        g = build_adjacency(np.array([[0.2, 0.8], [0.2, 0.8]]), 0.92)
        assert g.adjacency[0, 1] == 1

    def test_high_threshold_gives_identity(self, rng):
        g = build_adjacency(rng.random((6, 5)), 0.9999999)
        assert g.num_edges == 0
        np.testing.assert_array_equal(g.normalized, np.eye(6))

    def test_three_node_closed_form(self):
        H = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        g = build_adjacency(H, 0.5)
        assert g.edges() == [(0, 1)]
        np.testing.assert_array_equal(g.degree, [2, 2, 1])
        expected = np.array([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(g.normalized, expected, atol=1e-15)

    def test_tie_at_alpha_drops_edge(self):
        g = build_adjacency(np.array([[1.0, 0.0], [0.0, 1.0]]), 0.0)
        assert g.num_edges == 0

    @pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(ConfigError):
            build_adjacency(np.eye(3), alpha)

    def test_dot_similarity_switch(self):
        H = np.array([[2.0, 0.0], [2.0, 0.0], [0.1, 0.0]])
        assert build_adjacency(H, 0.5, "dot").edges() == [(0, 1)]
        assert build_adjacency(H, 0.5, "cosine").num_edges == 3

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (8, 6), elements=st.floats(0.01, 1.0)),
           st.floats(0.1, 100.0), st.floats(0.0, 0.99))
    def test_scale_invariance(self, H, scale, alpha):
        a = build_adjacency(H, alpha).adjacency
        b = build_adjacency(H * scale, alpha).adjacency
        # scaling may flip pairs whose similarity sits within rounding of alpha
        S = H / np.linalg.norm(H, axis=1, keepdims=True)
        near = np.abs(S @ S.T - alpha) < 1e-12
        assert np.all((a == b) | near)

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (10, 4), elements=st.floats(0.0, 1.0)),
           st.floats(0.0, 0.99), st.floats(0.0, 0.99))
    def test_monotone_in_alpha(self, H, a1, a2):
        H = H + 1e-3
        lo, hi = sorted((a1, a2))
        assert np.all(build_adjacency(H, hi).adjacency <= build_adjacency(H, lo).adjacency)


class TestNormalize:
    def test_empty_graph(self):
        np.testing.assert_array_equal(normalize_adjacency(np.zeros((4, 4))), np.eye(4))

    def test_k2(self):
        np.testing.assert_allclose(normalize_adjacency([[0, 1], [1, 0]]), np.full((2, 2), 0.5),
                                   atol=1e-16)

    def test_dense_reference(self, rng):
        A = random_adjacency(rng, 6, 0.5)
        A_hat = A + np.eye(6)
        D = np.diag(A_hat.sum(axis=1))
        D_inv_sqrt = np.linalg.inv(np.sqrt(D))
        reference = D_inv_sqrt @ A_hat @ D_inv_sqrt
        assert np.max(np.abs(normalize_adjacency(A) - reference)) < 1e-14

    def test_asymmetric_rejected(self):
        with pytest.raises(DataError):
            normalize_adjacency([[0, 1], [0, 0]])

    @pytest.mark.parametrize("n", [2, 5, 16, 32])
    def test_spectrum_in_unit_interval(self, rng, n):
        for _ in range(5):
            At = normalize_adjacency(random_adjacency(rng, n, rng.uniform(0.05, 0.9)))
            np.testing.assert_allclose(At, At.T, atol=0)
            assert power_iteration(At, tol=1e-12) <= 1 + 1e-9
            ev = np.linalg.eigvalsh(At)
            assert ev.min() >= -1 - 1e-12 and ev.max() <= 1 + 1e-12


def test_edge_list_round_trip(tmp_path, rng):
    g = SubjectGraph(random_adjacency(rng, 9), alpha=0.8)
    write_edge_list(g, tmp_path / "g.txt")
    text = (tmp_path / "g.txt").read_text()
    assert text.startswith("# n=9 alpha=0.8")
    back = read_edge_list(tmp_path / "g.txt")
    np.testing.assert_array_equal(back.adjacency, g.adjacency)
    assert back.alpha == 0.8
    assert all(i < j for i, j in back.edges())
