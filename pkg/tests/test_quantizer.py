import numpy as np
import pytest

from seqhash import quantizer
from seqhash.dataset import DescriptorMatrix
from seqhash.errors import DegenerateInputError, InvalidArgumentError
from seqhash.quantizer import (
    Quantizer,
    fit,
    hash_address,
    hash_batch,
    quantization_error,
    quantize,
    quantize_batch,
    unhash,
    unhash_batch,
)


def exhaustive_two_means(values: np.ndarray):
    """Oracle: scan every split of the sorted array for the two-means optimum."""
    values = np.sort(values.astype(np.float64))
    best_cost, best_centers = np.inf, None
    for split in range(1, values.size):
        left, right = values[:split], values[split:]
        cost = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        if cost < best_cost:
            best_cost = cost
            best_centers = (left.mean(), right.mean())
    return np.array(best_centers)


def two_center_quantizer(d: int) -> Quantizer:
    return Quantizer(centers=np.tile(np.array([-1.0, 1.0]), (d, 1)))


class TestFit:
    def test_two_exact_clusters(self):
        data = DescriptorMatrix(np.array([[-1.0], [-1.0], [1.0], [1.0]]))
        qz = fit(data, 2)
        assert np.allclose(qz.centers[0], [-1.0, 1.0])

    def test_constant_dimension_rejected(self):
        data = DescriptorMatrix(np.hstack([np.ones((8, 1)), np.arange(8.0)[:, None]]))
        with pytest.raises(DegenerateInputError, match="dimension 0"):
            fit(data, 2)

    def test_uniform_centers_near_quartiles(self):
        rng = np.random.default_rng(10)
        data = DescriptorMatrix(rng.uniform(0, 1, size=(1000, 1)).astype(np.float32))
        qz = fit(data, 2)
        assert abs(qz.centers[0, 0] - 0.25) < 0.05
        assert abs(qz.centers[0, 1] - 0.75) < 0.05

    def test_matches_global_optimum_oracle(self):
        rng = np.random.default_rng(11)
        for trial in range(5):
            values = np.concatenate(
                [rng.normal(-2, 0.7, size=120), rng.normal(1.5, 1.1, size=80)]
            )
            data = DescriptorMatrix(values[:, None].astype(np.float32))
            qz = fit(data, 2)
            oracle = exhaustive_two_means(data.data[:, 0])
            assert np.allclose(qz.centers[0], oracle, atol=1e-9)

    def test_deterministic(self):
        rng = np.random.default_rng(12)
        data = DescriptorMatrix(rng.standard_normal((500, 3)).astype(np.float32))
        a = fit(data, 2, seed=1)
        b = fit(data, 2, seed=2)  # seed does not influence the deterministic fit
        assert np.array_equal(a.centers, b.centers)

    def test_k_four_lloyd_path(self):
        rng = np.random.default_rng(13)
        values = np.concatenate([rng.normal(c, 0.2, size=250) for c in (-3, -1, 1, 3)])
        qz = fit(DescriptorMatrix(values[:, None].astype(np.float32)), 4)
        assert np.allclose(qz.centers[0], [-3, -1, 1, 3], atol=0.1)
        assert np.all(np.diff(qz.centers[0]) > 0)

    def test_address_space_overflow_rejected(self):
        rng = np.random.default_rng(14)
        data = DescriptorMatrix(rng.standard_normal((100, 64)).astype(np.float32))
        with pytest.raises(InvalidArgumentError):
            fit(data, 4)  # 4^64 overflows the 63-bit budget

    def test_k_above_row_count_rejected(self):
        data = DescriptorMatrix(np.arange(3.0)[:, None])
        with pytest.raises(InvalidArgumentError):
            fit(data, 4)


class TestQuantize:
    def test_nearest_center(self):
        qz = two_center_quantizer(1)
        assert quantize(qz, np.array([0.3]))[0] == 1
        assert quantize(qz, np.array([-0.3]))[0] == 0

    def test_equidistant_goes_to_lower_index(self):
        qz = two_center_quantizer(1)
        assert quantize(qz, np.array([0.0]))[0] == 0

    def test_matches_brute_force_argmin(self):
        rng = np.random.default_rng(20)
        centers = np.sort(rng.standard_normal((6, 5)), axis=1)
        qz = Quantizer(centers=centers)
        vectors = rng.standard_normal((200, 6)) * 2
        got = quantize_batch(qz, vectors)
        for i in range(vectors.shape[0]):
            for j in range(6):
                expected = int(np.argmin(np.abs(vectors[i, j] - centers[j])))
                assert got[i, j] == expected

    def test_centers_quantize_to_themselves(self):
        rng = np.random.default_rng(21)
        centers = np.sort(rng.standard_normal((4, 3)), axis=1)
        qz = Quantizer(centers=centers)
        for k in range(3):
            assert np.all(quantize(qz, centers[:, k]) == k)

    def test_length_mismatch_rejected(self):
        qz = two_center_quantizer(3)
        with pytest.raises(InvalidArgumentError):
            quantize(qz, np.array([0.0, 1.0]))


class TestHash:
    def test_binary_101(self):
        qz = two_center_quantizer(3)
        assert hash_address(qz, np.array([1, 0, 1])) == 5

    def test_zero_vector(self):
        qz = two_center_quantizer(4)
        assert hash_address(qz, np.zeros(4, dtype=int)) == 0

    def test_base_three(self):
        qz = Quantizer(centers=np.tile(np.array([0.0, 1.0, 2.0]), (2, 1)))
        assert hash_address(qz, np.array([2, 1])) == 7

    def test_entry_out_of_range_rejected(self):
        qz = two_center_quantizer(3)
        with pytest.raises(InvalidArgumentError):
            hash_address(qz, np.array([1, 2, 0]))

    def test_unhash_inverts(self):
        qz = two_center_quantizer(3)
        assert np.array_equal(unhash(qz, 5), [1, 0, 1])
        assert np.array_equal(unhash(qz, 0), [0, 0, 0])

    def test_round_trip_random(self):
        qz = Quantizer(centers=np.tile(np.sort(np.random.default_rng(1).standard_normal(3)), (7, 1)))
        rng = np.random.default_rng(22)
        addrs = rng.integers(0, qz.address_space, size=10_000)
        assert np.array_equal(hash_batch(qz, unhash_batch(qz, addrs)), addrs)

    def test_exhaustive_bijection_small(self):
        for d in (1, 4, 8, 12):
            qz = two_center_quantizer(d)
            addrs = np.arange(qz.address_space)
            digits = unhash_batch(qz, addrs)
            back = hash_batch(qz, digits)
            assert np.array_equal(back, addrs)
            # Distinct digit vectors for distinct addresses.
            assert np.unique(digits, axis=0).shape[0] == qz.address_space

    def test_address_out_of_range_rejected(self):
        qz = two_center_quantizer(3)
        with pytest.raises(InvalidArgumentError):
            unhash(qz, 8)


class TestQuantizationError:
    def test_zero_on_centers(self):
        qz = two_center_quantizer(2)
        assert quantization_error(qz, np.array([-1.0, 1.0])) == 0.0

    def test_midpoint_value(self):
        qz = two_center_quantizer(2)
        assert quantization_error(qz, np.array([0.0, 0.0])) == pytest.approx(2.0)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(23)
        centers = np.sort(rng.standard_normal((5, 4)), axis=1)
        qz = Quantizer(centers=centers)
        for _ in range(100):
            v = rng.standard_normal(5) * 2
            expected = sum(np.abs(v[j] - centers[j]).min() for j in range(5))
            assert quantization_error(qz, v) == pytest.approx(expected, abs=1e-12)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(24)
        qz = Quantizer(centers=np.sort(rng.standard_normal((6, 2)), axis=1))
        quantizer.save_quantizer(qz, tmp_path / "qz.bin")
        back = quantizer.load_quantizer(tmp_path / "qz.bin")
        assert np.array_equal(back.centers, qz.centers)

    def test_fingerprint_tracks_centers(self):
        a = two_center_quantizer(3)
        b = Quantizer(centers=np.tile(np.array([-1.0, 1.1]), (3, 1)))
        assert a.fingerprint() != b.fingerprint()
        assert a.fingerprint() == two_center_quantizer(3).fingerprint()

    def test_unsorted_centers_rejected(self):
        with pytest.raises(DegenerateInputError):
            Quantizer(centers=np.array([[1.0, -1.0]]))
