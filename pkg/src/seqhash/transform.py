"""Incremental PCA: decorrelate descriptors and keep the top-d components.

Fitting streams the data in mini-batches, accumulating the exact sufficient
statistics (row count, per-column sum, Gram matrix) in float64, then
eigendecomposes the covariance once at the end. Memory is bounded by one
batch plus a D x D accumulator, and the result is identical to full-batch
PCA regardless of batch size, so downstream per-dimension quantization can
rely on the decorrelation being exact.

Component signs are fixed by making each component's largest-magnitude entry
positive; without that convention reruns could flip signs and produce
different hash addresses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DescriptorMatrix
from .errors import InvalidArgumentError, DegenerateInputError

_RANK_RTOL = 1e-9


@dataclass
class PcaModel:
    """Mean vector, d x D component rows (orthonormal, variance-descending)
    and the per-component variances."""

    mean: np.ndarray
    components: np.ndarray
    variances: np.ndarray
    trained_on: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.components = np.asarray(self.components, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)

    @property
    def input_dims(self) -> int:
        return self.components.shape[1]

    @property
    def output_dims(self) -> int:
        return self.components.shape[0]


def fit_incremental(data: DescriptorMatrix, d: int, batch: int = 0) -> PcaModel:
    """Fit a d-component PCA model by streaming over ``data`` in batches.

    Args:
        data: Training descriptors, N x D.
        d: Number of retained components, 1 <= d <= min(N, D).
        batch: Mini-batch row count; 0 selects ``max(1024, 4 * d)``.

    Raises:
        InvalidArgumentError: d or batch out of range.
        DegenerateInputError: data rank below d; the message names the
            achievable rank.
    """
    n, dims = data.rows, data.dims
    if not 1 <= d <= min(n, dims):
        raise InvalidArgumentError(f"d must be in [1, {min(n, dims)}], got {d}")
    if batch == 0:
        batch = max(1024, 4 * d)
    if batch < d:
        raise InvalidArgumentError(f"batch must be >= d ({d}), got {batch}")

    col_sum = np.zeros(dims, dtype=np.float64)
    gram = np.zeros((dims, dims), dtype=np.float64)
    for start in range(0, n, batch):
        block = data.data[start : start + batch].astype(np.float64)
        col_sum += block.sum(axis=0)
        gram += block.T @ block

    mean = col_sum / n
    cov = gram / n - np.outer(mean, mean)
    cov = (cov + cov.T) / 2.0  # clear asymmetry from accumulation round-off

    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]

    floor = max(eigvals[0] * _RANK_RTOL, 1e-18)
    rank = int(np.count_nonzero(eigvals > floor))
    if rank < d:
        raise DegenerateInputError(
            f"data supports only {rank} usable components, requested {d}"
        )

    components = eigvecs[:, :d].T
    # Sign convention: largest-magnitude entry of each component positive.
    pivot = np.argmax(np.abs(components), axis=1)
    flips = np.sign(components[np.arange(d), pivot])
    components = components * flips[:, None]

    return PcaModel(mean=mean, components=components, variances=eigvals[:d], trained_on=n)


def project(model: PcaModel, m: DescriptorMatrix) -> DescriptorMatrix:
    """Project descriptors into the model's component space (N x d)."""
    if m.dims != model.input_dims:
        raise InvalidArgumentError(
            f"matrix has {m.dims} dims, model expects {model.input_dims}"
        )
    out = (m.data.astype(np.float64) - model.mean) @ model.components.T
    return DescriptorMatrix(
        out.astype(np.float32),
        source_tag=m.source_tag,
        boundary_index=m.boundary_index,
        seed=m.seed,
    )


def project_vector(model: PcaModel, v: np.ndarray) -> np.ndarray:
    """Project a single D-vector; float64 result of length d."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (model.input_dims,):
        raise InvalidArgumentError(
            f"vector has shape {v.shape}, model expects ({model.input_dims},)"
        )
    return (v - model.mean) @ model.components.T


def save_pca(model: PcaModel, path: str | Path) -> None:
    """Write the model as float64 binary (mean, components, variances) plus
    a JSON sidecar with the shape header."""
    path = Path(path)
    blob = b"".join(
        a.astype("<f8").tobytes(order="C")
        for a in (model.mean, model.components, model.variances)
    )
    path.write_bytes(blob)
    header = {
        "D": model.input_dims,
        "d": model.output_dims,
        "trained_on": model.trained_on,
    }
    path.with_suffix(".json").write_text(
        json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_pca(path: str | Path) -> PcaModel:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    dims, d = int(header["D"]), int(header["d"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    expected = dims + d * dims + d
    if raw.size != expected:
        raise InvalidArgumentError(
            f"model payload holds {raw.size} values, header implies {expected}"
        )
    mean = raw[:dims]
    components = raw[dims : dims + d * dims].reshape(d, dims)
    variances = raw[dims + d * dims :]
    return PcaModel(
        mean=mean,
        components=components,
        variances=variances,
        trained_on=int(header["trained_on"]),
    )
