import numpy as np
import pytest

from seqhash import transform
from seqhash.dataset import DescriptorMatrix
from seqhash.errors import DegenerateInputError, InvalidArgumentError


def full_batch_pca(data: np.ndarray, d: int):
    """Oracle: one-shot eigendecomposition of the sample covariance."""
    x = data.astype(np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:d]
    return mean, eigvecs[:, order].T, eigvals[order]


@pytest.fixture()
def gaussian_data():
    rng = np.random.default_rng(0)
    return DescriptorMatrix(rng.normal(0.0, [3.0, 1.0], size=(5000, 2)).astype(np.float32))


class TestFit:
    def test_axis_aligned_gaussian(self, gaussian_data):
        model = transform.fit_incremental(gaussian_data, 2, batch=512)
        # First component aligns with the wide axis up to sign.
        assert abs(model.components[0, 0]) > 0.99
        assert model.variances[0] / model.variances[1] == pytest.approx(9.0, rel=0.10)

    def test_matches_full_batch_oracle(self, gaussian_data):
        n = gaussian_data.rows
        model = transform.fit_incremental(gaussian_data, 2, batch=n)
        _, comps, eigvals = full_batch_pca(gaussian_data.data, 2)
        projected = transform.project(model, gaussian_data).data.astype(np.float64)
        oracle = (gaussian_data.data.astype(np.float64) - gaussian_data.data.mean(0)) @ comps.T
        for j in range(2):
            delta = np.minimum(
                np.abs(projected[:, j] - oracle[:, j]),
                np.abs(projected[:, j] + oracle[:, j]),
            )
            assert np.max(delta) < 1e-4 * max(1.0, np.abs(oracle[:, j]).max())
        assert np.allclose(model.variances, eigvals, rtol=1e-8)

    def test_batch_size_does_not_change_result(self, gaussian_data):
        a = transform.fit_incremental(gaussian_data, 2, batch=gaussian_data.rows)
        b = transform.fit_incremental(gaussian_data, 2, batch=64)
        assert np.allclose(a.components, b.components, atol=1e-10)
        assert np.allclose(a.variances, b.variances, rtol=1e-10)

    def test_projection_decorrelates(self):
        rng = np.random.default_rng(4)
        mixing = rng.standard_normal((6, 6))
        data = DescriptorMatrix((rng.standard_normal((4000, 6)) @ mixing).astype(np.float32))
        model = transform.fit_incremental(data, 4, batch=256)
        projected = transform.project(model, data).data.astype(np.float64)
        cov = np.cov(projected, rowvar=False, bias=True)
        for i in range(4):
            for j in range(i + 1, 4):
                limit = 1e-3 * np.sqrt(cov[i, i] * cov[j, j])
                assert abs(cov[i, j]) <= limit

    def test_orthonormal_components(self, gaussian_data):
        model = transform.fit_incremental(gaussian_data, 2)
        gram = model.components @ model.components.T
        assert np.allclose(gram, np.eye(2), atol=1e-5)

    def test_variances_non_increasing(self):
        rng = np.random.default_rng(7)
        data = DescriptorMatrix(rng.standard_normal((2000, 10)).astype(np.float32))
        model = transform.fit_incremental(data, 10)
        assert np.all(np.diff(model.variances) <= 1e-12)

    def test_sign_convention(self, gaussian_data):
        model = transform.fit_incremental(gaussian_data, 2)
        for row in model.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_rank_deficiency_names_achievable_rank(self):
        rng = np.random.default_rng(3)
        base = rng.standard_normal((500, 2))
        data = DescriptorMatrix(np.hstack([base, base[:, :1] * 2.0]).astype(np.float32))
        with pytest.raises(DegenerateInputError, match="2 usable"):
            transform.fit_incremental(data, 3)

    def test_d_out_of_range(self, gaussian_data):
        with pytest.raises(InvalidArgumentError):
            transform.fit_incremental(gaussian_data, 3)
        with pytest.raises(InvalidArgumentError):
            transform.fit_incremental(gaussian_data, 0)

    def test_batch_below_d_rejected(self, gaussian_data):
        with pytest.raises(InvalidArgumentError):
            transform.fit_incremental(gaussian_data, 2, batch=1)


class TestProject:
    def test_mean_maps_to_zero(self, gaussian_data):
        model = transform.fit_incremental(gaussian_data, 2)
        out = transform.project_vector(model, model.mean)
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_identity_model(self):
        rng = np.random.default_rng(5)
        data = rng.standard_normal((10, 3)).astype(np.float32)
        model = transform.PcaModel(
            mean=np.zeros(3), components=np.eye(3), variances=np.ones(3), trained_on=10
        )
        out = transform.project(model, DescriptorMatrix(data))
        assert np.allclose(out.data, data, atol=1e-6)

    def test_distance_preservation_full_rank(self):
        rng = np.random.default_rng(6)
        data = DescriptorMatrix(rng.standard_normal((300, 5)).astype(np.float32))
        model = transform.fit_incremental(data, 5)
        projected = transform.project(model, data).data.astype(np.float64)
        raw = data.data.astype(np.float64)
        for _ in range(50):
            i, j = rng.integers(0, 300, size=2)
            before = np.linalg.norm(raw[i] - raw[j])
            after = np.linalg.norm(projected[i] - projected[j])
            assert after == pytest.approx(before, rel=1e-4, abs=1e-9)

    def test_reconstruction_residual_orthogonal(self):
        rng = np.random.default_rng(8)
        data = DescriptorMatrix(rng.standard_normal((800, 6)).astype(np.float32))
        model = transform.fit_incremental(data, 3)
        row = data.data[17].astype(np.float64)
        projected = transform.project_vector(model, row)
        reconstructed = model.mean + projected @ model.components
        residual = row - reconstructed
        assert np.all(np.abs(model.components @ residual) < 1e-5)

    def test_dim_mismatch_rejected(self, gaussian_data):
        model = transform.fit_incremental(gaussian_data, 2)
        with pytest.raises(InvalidArgumentError):
            transform.project(model, DescriptorMatrix(np.ones((4, 3))))


class TestPersistence:
    def test_round_trip(self, tmp_path, gaussian_data):
        model = transform.fit_incremental(gaussian_data, 2)
        transform.save_pca(model, tmp_path / "pca.bin")
        back = transform.load_pca(tmp_path / "pca.bin")
        assert np.array_equal(back.mean, model.mean)
        assert np.array_equal(back.components, model.components)
        assert np.array_equal(back.variances, model.variances)
        assert back.trained_on == model.trained_on

    def test_truncated_payload_rejected(self, tmp_path, gaussian_data):
        model = transform.fit_incremental(gaussian_data, 2)
        transform.save_pca(model, tmp_path / "pca.bin")
        blob = (tmp_path / "pca.bin").read_bytes()
        (tmp_path / "pca.bin").write_bytes(blob[:-8])
        with pytest.raises(InvalidArgumentError):
            transform.load_pca(tmp_path / "pca.bin")
