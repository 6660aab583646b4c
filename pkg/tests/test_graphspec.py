import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sagkit import graphspec, numkit


def random_affinity(n, rng, density=0.5):
    w = rng.random((n, n)) * (rng.random((n, n)) < density)
    w = np.triu(w, 1)
    return w + w.T


def block_graph(sizes, rng):
    """Block-diagonal affinity whose blocks are connected (a weighted path plus extras)."""
    n = sum(sizes)
    w = np.zeros((n, n))
    start = 0
    for s in sizes:
        for i in range(start, start + s - 1):
            w[i, i + 1] = w[i + 1, i] = rng.uniform(0.5, 1.5)
        blk = random_affinity(s, rng, 0.3)
        w[start : start + s, start : start + s] += blk
        start += s
    return w


class TestLaplacian:
    def test_two_nodes(self):
        np.testing.assert_array_equal(
            graphspec.laplacian(np.array([[0.0, 1.0], [1.0, 0.0]])), [[1, -1], [-1, 1]]
        )

    def test_empty_graph(self):
        np.testing.assert_array_equal(graphspec.laplacian(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_two_components(self):
        w = block_graph([3, 4], np.random.default_rng(0))
        lap = graphspec.laplacian(w)
        assert np.all(lap[:3, 3:] == 0)
        vals = numkit.symmetric_eig(lap).values
        assert np.sum(np.abs(vals) <= 1e-10) == 2

    @pytest.mark.parametrize("seed", range(10))
    def test_rows_sum_zero_and_psd(self, seed):
        lap = graphspec.laplacian(random_affinity(12, np.random.default_rng(seed)))
        assert np.max(np.abs(lap.sum(axis=1))) <= 1e-12
        assert numkit.symmetric_eig(lap).values.min() >= -1e-10

    @pytest.mark.parametrize(
        "w", [np.array([[0.0, 1.0], [0.5, 0.0]]), np.array([[0.0, -1.0], [-1.0, 0.0]])]
    )
    def test_rejects_bad_affinity(self, w):
        with pytest.raises(ValueError):
            graphspec.laplacian(w)


class TestRandomWalk:
    def test_permutation(self):
        np.testing.assert_array_equal(
            graphspec.random_walk_matrix(np.array([[0.0, 1.0], [1.0, 0.0]])), [[0, 1], [1, 0]]
        )

    def test_single_row(self):
        np.testing.assert_array_equal(graphspec.random_walk_matrix(np.array([[2.0, 2.0]])), [[0.5, 0.5]])

    def test_zero_row_self_loop(self):
        w = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
        p = graphspec.random_walk_matrix(w)
        np.testing.assert_array_equal(p[1], [0.0, 1.0, 0.0])

    @settings(max_examples=50)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 10))
    def test_rows_stochastic(self, seed, n):
        w = np.random.default_rng(seed).random((n, n)) * (np.random.default_rng(seed + 1).random((n, n)) < 0.5)
        p = graphspec.random_walk_matrix(w)
        assert np.max(np.abs(p.sum(axis=1) - 1.0)) <= 1e-12


class TestSampleRows:
    def test_deterministic_row(self):
        p = np.tile([1.0, 0.0], (50, 1))
        assert np.all(graphspec.sample_rows(p, seed=5) == 0)

    def test_fair_coin(self):
        p = np.tile([0.5, 0.5], (100_000, 1))
        freq = np.mean(graphspec.sample_rows(p, seed=1) == 0)
        assert abs(freq - 0.5) <= 0.02

    def test_same_seed(self):
        p = graphspec.random_walk_matrix(random_affinity(30, np.random.default_rng(2)) + np.eye(30))
        np.testing.assert_array_equal(graphspec.sample_rows(p, 3), graphspec.sample_rows(p, 3))

    def test_never_picks_zero_probability(self):
        rng = np.random.default_rng(4)
        w = random_affinity(40, rng, 0.2) + np.eye(40)
        p = graphspec.random_walk_matrix(w)
        idx = graphspec.sample_rows(p, 11)
        assert np.all(p[np.arange(40), idx] > 0)


class TestSpectralEmbed:
    def test_cliques_separate_by_sign(self):
        w = np.zeros((6, 6))
        w[:3, :3] = 1
        w[3:, 3:] = 1
        np.fill_diagonal(w, 0)
        y = graphspec.spectral_embed(w, 1)[:, 0]
        assert np.all(np.sign(y[:3]) == np.sign(y[0]))
        assert np.all(np.sign(y[3:]) == -np.sign(y[0]))

    def test_path_eigenvalues(self):
        w = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        np.testing.assert_allclose(
            numkit.symmetric_eig(graphspec.laplacian(w)).values, [0.0, 1.0, 3.0], atol=1e-12
        )

    def test_trivial_is_constant(self):
        w = random_affinity(8, np.random.default_rng(0), 1.0)
        col = graphspec.spectral_embed(w, 1, include_trivial=True)[:, 0]
        np.testing.assert_allclose(np.abs(col), 1 / np.sqrt(8), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_orthonormal_columns(self, seed):
        w = block_graph([4, 5, 3], np.random.default_rng(seed))
        y = graphspec.spectral_embed(w, 5, include_trivial=True)
        np.testing.assert_allclose(y.T @ y, np.eye(5), atol=1e-10)

    def test_disconnected_skips_constant(self):
        w = block_graph([4, 4], np.random.default_rng(1))
        y = graphspec.spectral_embed(w, 1)[:, 0]
        assert abs(y.sum()) <= 1e-10

    @pytest.mark.parametrize("dim", [0, 5])
    def test_dim_range(self, dim):
        with pytest.raises(ValueError):
            graphspec.spectral_embed(np.ones((5, 5)) - np.eye(5), dim)


class TestSpectralNetLoss:
    def test_constant_rows(self):
        w = random_affinity(5, np.random.default_rng(0))
        assert graphspec.spectralnet_loss(w, np.ones((5, 2))) == 0.0

    def test_two_nodes(self):
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert graphspec.spectralnet_loss(w, np.array([[0.0], [1.0]])) == pytest.approx(0.5)

    @pytest.mark.parametrize("seed", range(20))
    def test_trace_identity(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 15))
        w = random_affinity(n, rng)
        y = rng.normal(size=(n, 3))
        expected = 2.0 / n**2 * np.trace(y.T @ graphspec.laplacian(w) @ y)
        assert abs(graphspec.spectralnet_loss(w, y) - expected) <= 1e-10


class TestOrthogonality:
    def test_satisfied(self):
        assert graphspec.orthogonality_residual(np.array([[1.0], [-1.0]])) == 0.0

    def test_zero(self):
        assert graphspec.orthogonality_residual(np.zeros((4, 3))) == pytest.approx(np.sqrt(3))

    def test_scaled_eigenvectors(self):
        w = random_affinity(10, np.random.default_rng(0), 1.0)
        v = numkit.symmetric_eig(graphspec.laplacian(w)).vectors
        assert graphspec.orthogonality_residual(v * np.sqrt(10)) <= 1e-8


class TestPercentileRows:
    @pytest.mark.parametrize("q", [0, 20, 50, 87.5, 100])
    def test_matches_numpy_linear(self, q):
        a = np.random.default_rng(0).random((6, 7))
        np.testing.assert_allclose(graphspec.percentile_rows(a, q), np.percentile(a, q, axis=1))


class TestSpectralClustering:
    def blobs(self, k, seed, n=25):
        rng = np.random.default_rng(seed)
        centers = rng.normal(scale=10.0, size=(k, 3))
        labels = np.repeat(np.arange(k), n)
        return centers[labels] + rng.normal(scale=0.3, size=(labels.size, 3)), labels

    @pytest.mark.parametrize("seed", range(3))
    def test_two_blobs(self, seed):
        from sagkit.structmetrics import rand_index

        x, labels = self.blobs(2, seed)
        assert rand_index(graphspec.spectral_clustering(x, 2, seed=seed), labels) == 1.0

    def test_k_one(self):
        x, _ = self.blobs(2, 0)
        assert set(graphspec.spectral_clustering(x, 1)) == {0}

    def test_duplicates_share_label(self):
        x, _ = self.blobs(3, 1, n=10)
        x = np.vstack([x, x[:5]])
        lab = graphspec.spectral_clustering(x, 3)
        np.testing.assert_array_equal(lab[-5:], lab[:5])

    def test_affinity_symmetric_and_local(self):
        x, _ = self.blobs(2, 2)
        w = graphspec.local_scaled_affinity(x)
        np.testing.assert_array_equal(w, w.T)
        assert np.all(np.diag(w) == 0)
        assert np.all((w >= 0) & (w <= 1))
