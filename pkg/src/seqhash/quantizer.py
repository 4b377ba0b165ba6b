"""Per-dimension scalar quantization and base-K hash addressing.

Each of the d descriptor dimensions gets its own set of K cluster centers
from one-dimensional K-means. A descriptor quantizes to a vector of center
indices, which packs into a single integer address by positional base-K
encoding with dimension 0 most significant. Coarse settings (K=2, short d)
are the intended operating point: many descriptors share an address and the
resulting overload is resolved downstream by sequence matching.

K=2 is fitted with an exact sorted-split scan (the global optimum of 1-D
two-means, itself a Lloyd fixed point); larger K uses Lloyd's iterations
seeded at the (k + 0.5)/K quantiles. Both paths are deterministic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DescriptorMatrix
from .errors import InvalidArgumentError, DegenerateInputError

_MAX_ADDRESS_SPACE = 2**63
_LLOYD_TOL = 1e-6
_LLOYD_MAX_ITER = 100


@dataclass
class Quantizer:
    """d x K matrix of per-dimension cluster centers, each row ascending."""

    centers: np.ndarray

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64)
        if self.centers.ndim != 2:
            raise InvalidArgumentError("centers must be a d x K matrix")
        d, k = self.centers.shape
        if k < 2 or d < 1:
            raise InvalidArgumentError("need K >= 2 and d >= 1")
        if k**d > _MAX_ADDRESS_SPACE:
            raise InvalidArgumentError(
                f"address space K^d = {k}^{d} exceeds the 63-bit limit"
            )
        if np.any(np.diff(self.centers, axis=1) <= 0):
            raise DegenerateInputError("center rows must be strictly increasing")
        # Midpoints between adjacent centers; quantization boundaries.
        self._edges = (self.centers[:, 1:] + self.centers[:, :-1]) / 2.0

    @property
    def d(self) -> int:
        return self.centers.shape[0]

    @property
    def K(self) -> int:
        return self.centers.shape[1]

    @property
    def address_space(self) -> int:
        return self.K**self.d

    def fingerprint(self) -> str:
        """Stable identity for pairing an index with the quantizer that built it."""
        h = hashlib.sha256(self.centers.astype("<f8").tobytes(order="C"))
        return h.hexdigest()[:16]


def fit(refs: DescriptorMatrix, K: int, seed: int = 0) -> Quantizer:
    """Fit K centers per dimension with one-dimensional K-means.

    Args:
        refs: Projected reference descriptors, N x d.
        K: Number of quantization bins, identical for every dimension.
        seed: Accepted for interface stability; both fitting paths are
            fully deterministic and ignore it.

    Raises:
        DegenerateInputError: a dimension has fewer than K distinct values;
            the message names the dimension.
    """
    if K < 2:
        raise InvalidArgumentError("K must be >= 2")
    if K > refs.rows:
        raise InvalidArgumentError(f"K={K} exceeds the {refs.rows} reference rows")
    if K**refs.dims > _MAX_ADDRESS_SPACE:
        raise InvalidArgumentError(
            f"address space K^d = {K}^{refs.dims} exceeds the 63-bit limit"
        )

    centers = np.empty((refs.dims, K), dtype=np.float64)
    for j in range(refs.dims):
        values = np.sort(refs.data[:, j].astype(np.float64))
        if _count_distinct(values) < K:
            raise DegenerateInputError(
                f"dimension {j} has fewer than K={K} distinct values"
            )
        if K == 2:
            centers[j] = _two_means_exact(values)
        else:
            centers[j] = _lloyd_1d(values, K)
    return Quantizer(centers=centers)


def _count_distinct(sorted_values: np.ndarray) -> int:
    return 1 + int(np.count_nonzero(np.diff(sorted_values)))


def _two_means_exact(values: np.ndarray) -> np.ndarray:
    """Globally optimal two-means of sorted 1-D data via split-point scan.

    For each split s the cost is the within-cluster sum of squares of
    values[:s] and values[s:], evaluated in O(1) from prefix sums.
    """
    n = values.size
    csum = np.concatenate([[0.0], np.cumsum(values)])
    csq = np.concatenate([[0.0], np.cumsum(values * values)])
    splits = np.arange(1, n)
    left_n = splits.astype(np.float64)
    right_n = (n - splits).astype(np.float64)
    left_cost = csq[splits] - csum[splits] ** 2 / left_n
    right_cost = (csq[n] - csq[splits]) - (csum[n] - csum[splits]) ** 2 / right_n
    best = splits[np.argmin(left_cost + right_cost)]
    return np.array([csum[best] / best, (csum[n] - csum[best]) / (n - best)])


def _lloyd_1d(values: np.ndarray, K: int) -> np.ndarray:
    """Lloyd's iterations on sorted 1-D data, quantile-seeded."""
    n = values.size
    centers = values[((np.arange(K) + 0.5) / K * n).astype(np.intp).clip(0, n - 1)].copy()
    for _ in range(_LLOYD_MAX_ITER):
        edges = (centers[1:] + centers[:-1]) / 2.0
        bounds = np.searchsorted(values, edges, side="left")
        bounds = np.concatenate([[0], bounds, [n]])
        new_centers = centers.copy()
        for k in range(K):
            lo, hi = bounds[k], bounds[k + 1]
            if hi > lo:
                new_centers[k] = values[lo:hi].mean()
        movement = np.max(np.abs(new_centers - centers))
        centers = new_centers
        if movement < _LLOYD_TOL:
            break
    if np.any(np.diff(centers) <= 0):
        raise DegenerateInputError("K-means collapsed duplicate centers")
    return centers


def quantize(qz: Quantizer, v: np.ndarray) -> np.ndarray:
    """Map a d-vector to per-dimension nearest-center indices.

    A value exactly equidistant between two centers takes the lower index.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (qz.d,):
        raise InvalidArgumentError(f"vector has shape {v.shape}, expected ({qz.d},)")
    return quantize_batch(qz, v[None, :])[0]


def quantize_batch(qz: Quantizer, rows: np.ndarray) -> np.ndarray:
    """Vectorized :func:`quantize` over an N x d array; int32 output."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != qz.d:
        raise InvalidArgumentError(f"rows must be N x {qz.d}, got {rows.shape}")
    out = np.empty(rows.shape, dtype=np.int32)
    for j in range(qz.d):
        # side='left' counts edges strictly below the value, so an exact
        # boundary hit resolves to the lower center.
        out[:, j] = np.searchsorted(qz._edges[j], rows[:, j], side="left")
    return out


def hash_address(qz: Quantizer, q: np.ndarray) -> int:
    """Pack a quantization index vector into its base-K address.

    Dimension 0 is the most significant digit.
    """
    q = np.asarray(q)
    if q.shape != (qz.d,):
        raise InvalidArgumentError(f"index vector has shape {q.shape}, expected ({qz.d},)")
    return int(hash_batch(qz, q[None, :])[0])


def hash_batch(qz: Quantizer, q_rows: np.ndarray) -> np.ndarray:
    """Vectorized :func:`hash_address`; int64 output."""
    q_rows = np.asarray(q_rows)
    if q_rows.ndim != 2 or q_rows.shape[1] != qz.d:
        raise InvalidArgumentError(f"rows must be N x {qz.d}, got {q_rows.shape}")
    if np.any(q_rows < 0) or np.any(q_rows >= qz.K):
        raise InvalidArgumentError(f"index entries must lie in [0, {qz.K})")
    out = np.zeros(q_rows.shape[0], dtype=np.int64)
    k = np.int64(qz.K)
    for j in range(qz.d):
        out = out * k + q_rows[:, j].astype(np.int64)
    return out


def unhash(qz: Quantizer, h: int) -> np.ndarray:
    """Invert :func:`hash_address`: recover the index vector of an address."""
    return unhash_batch(qz, np.asarray([h], dtype=np.int64))[0]


def unhash_batch(qz: Quantizer, addrs: np.ndarray) -> np.ndarray:
    """Vectorized :func:`unhash`; N x d int32 output."""
    addrs = np.asarray(addrs, dtype=np.int64)
    if np.any(addrs < 0) or np.any(addrs >= qz.address_space):
        raise InvalidArgumentError(f"address out of range [0, {qz.address_space})")
    out = np.empty((addrs.size, qz.d), dtype=np.int32)
    k = np.int64(qz.K)
    rest = addrs.copy()
    for j in range(qz.d - 1, -1, -1):
        out[:, j] = rest % k
        rest //= k
    return out


def quantization_error(qz: Quantizer, v: np.ndarray) -> float:
    """Sum over dimensions of the distance to the nearest center."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (qz.d,):
        raise InvalidArgumentError(f"vector has shape {v.shape}, expected ({qz.d},)")
    return float(quantization_error_batch(qz, v[None, :])[0])


def quantization_error_batch(qz: Quantizer, rows: np.ndarray) -> np.ndarray:
    """Vectorized :func:`quantization_error` over an N x d array."""
    rows = np.asarray(rows, dtype=np.float64)
    q = quantize_batch(qz, rows)
    nearest = qz.centers[np.arange(qz.d)[None, :], q]
    return np.abs(rows - nearest).sum(axis=1)


def save_quantizer(qz: Quantizer, path: str | Path) -> None:
    """Write centers as float64 binary plus a JSON sidecar {K, d}."""
    path = Path(path)
    path.write_bytes(qz.centers.astype("<f8").tobytes(order="C"))
    header = {"K": qz.K, "d": qz.d}
    path.with_suffix(".json").write_text(
        json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_quantizer(path: str | Path) -> Quantizer:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    k, d = int(header["K"]), int(header["d"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    if raw.size != d * k:
        raise InvalidArgumentError(
            f"quantizer payload holds {raw.size} values, header implies {d * k}"
        )
    return Quantizer(centers=raw.reshape(d, k))
