"""Synthetic descriptor datasets and their pre-processing.

Two generators stand in for real descriptor sources:

* a "pool": i.i.d. Gaussian rows that are sliding-window averaged so that
  neighbouring rows become locally similar (an unordered retrieval corpus
  made to behave like a traverse),
* a "traverse": a smooth random walk with a paired query traverse, where
  query row i revisits reference row i with a small correlated perturbation.

A recipe concatenates one pool part and one traverse part into a single
reference/query set, aligning per-dimension spread and fitting the query
noise model from the traverse pairs.

All randomness comes from numpy's PCG64 generator seeded with an explicit
64-bit integer, so every artifact is bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, DegenerateInputError

# Traverse shape knobs. The per-dimension scale decays so early dimensions
# carry more variance (a PCA-transformed descriptor does the same), and the
# per-dimension offset keeps distinct sources from sharing a baseline.
_PROFILE_DECAY = 2.0
_OFFSET_SCALE = 0.35
_QUERY_PERTURB = 0.15


@dataclass
class DescriptorMatrix:
    """N x D matrix of 32-bit float descriptors, one row per place.

    ``boundary_index`` marks where part A ends when the matrix is a
    concatenation of two sources; ``None`` for single-source matrices.
    """

    data: np.ndarray
    source_tag: str = ""
    boundary_index: int | None = None
    seed: int | None = None

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise InvalidArgumentError(
                f"descriptor matrix must be 2-D and non-empty, got shape {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidArgumentError("descriptor matrix contains NaN or Inf")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> int:
        return self.data.shape[1]


@dataclass
class NoiseModel:
    """Per-dimension additive Gaussian noise, drawn independently per dimension.

    ``std`` uses the population normalization (divide by N). ``scale``
    multiplies the standard deviation when sampling (1.0 and 2.0 are the two
    query noise intensities used by the benchmark recipes).
    """

    mean: np.ndarray
    std: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise InvalidArgumentError("noise mean/std must be 1-D vectors of equal length")
        if np.any(self.std < 0):
            raise InvalidArgumentError("noise std entries must be >= 0")
        if not self.scale > 0:
            raise InvalidArgumentError("noise scale must be > 0")


@dataclass
class DatasetRecipe:
    """Sizes and knobs for one concatenated reference/query dataset."""

    ref_count_a: int
    ref_count_b: int
    query_count_b: int
    window_w: int = 40
    noise_scale: float = 1.0
    seed: int = 0
    target_dims: int = 96
    smoothness: float = 0.95

    def __post_init__(self):
        if self.window_w < 1:
            raise InvalidArgumentError("window_w must be >= 1")
        if not self.noise_scale > 0:
            raise InvalidArgumentError("noise_scale must be > 0")
        if self.ref_count_a < 1 or self.ref_count_b < 1:
            raise InvalidArgumentError("reference part sizes must be >= 1")
        if not 1 <= self.query_count_b <= self.ref_count_b:
            raise InvalidArgumentError("query_count_b must be in [1, ref_count_b]")
        if self.target_dims < 1:
            raise InvalidArgumentError("target_dims must be >= 1")

    @property
    def total_reference(self) -> int:
        return self.ref_count_a + self.ref_count_b


def generate_traverse(
    count: int, dims: int, smoothness: float = 0.95, seed: int = 0
) -> tuple[DescriptorMatrix, DescriptorMatrix]:
    """Generate a smooth reference traverse and its paired query traverse.

    The reference is a stationary AR(1) walk per dimension (decay
    ``smoothness``), scaled by a decaying per-dimension profile and shifted
    by a per-dimension offset. The query revisits the same places: row i of
    the query is row i of the reference plus a small correlated perturbation,
    so ground truth is the identity pairing.

    Args:
        count: Number of places.
        dims: Descriptor dimensionality.
        smoothness: AR(1) decay in [0, 1); higher means slower change.
        seed: 64-bit seed; outputs are bit-identical for equal seeds.

    Returns:
        ``(reference, query)`` matrices, both ``count x dims``.
    """
    if count < 1 or dims < 1:
        raise InvalidArgumentError("count and dims must be >= 1")
    if not 0.0 <= smoothness < 1.0:
        raise InvalidArgumentError("smoothness must be in [0, 1)")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    profile = np.exp(-_PROFILE_DECAY * np.arange(dims) / max(dims - 1, 1))
    offset = rng.normal(0.0, _OFFSET_SCALE, size=dims) * profile

    walk = _ar1_walk(rng, count, dims, smoothness)
    perturb = _ar1_walk(rng, count, dims, smoothness)

    ref = offset + profile * walk
    query = offset + profile * (walk + _QUERY_PERTURB * perturb)
    return (
        DescriptorMatrix(ref, source_tag="traverse-ref", seed=seed),
        DescriptorMatrix(query, source_tag="traverse-query", seed=seed),
    )


def _ar1_walk(rng: np.random.Generator, count: int, dims: int, decay: float) -> np.ndarray:
    """Stationary AR(1) process, unit marginal variance, float64."""
    innovations = rng.standard_normal((count, dims))
    out = np.empty((count, dims), dtype=np.float64)
    out[0] = innovations[0]
    step = np.sqrt(1.0 - decay * decay)
    for i in range(1, count):
        out[i] = decay * out[i - 1] + step * innovations[i]
    return out


def homogenize(m: DescriptorMatrix, w: int) -> DescriptorMatrix:
    """Sliding-window average along the row axis.

    Row i of the output is the mean of input rows inside a window of size
    ``w`` centred at i (offsets -floor(w/2) .. ceil(w/2)-1), truncated at the
    array boundaries so the row count is unchanged.
    """
    if w < 1:
        raise InvalidArgumentError("window size must be >= 1")
    if w > m.rows:
        raise InvalidArgumentError(f"window size {w} exceeds row count {m.rows}")
    if w == 1:
        return DescriptorMatrix(
            m.data.copy(), source_tag=m.source_tag, boundary_index=m.boundary_index, seed=m.seed
        )

    n = m.rows
    lo = np.maximum(np.arange(n) - (w // 2), 0)
    hi = np.minimum(np.arange(n) + ((w + 1) // 2), n)  # exclusive
    counts = (hi - lo).astype(np.float64)[:, None]

    out = np.empty_like(m.data)
    # Column blocks keep the float64 cumulative sums small at 1M+ rows.
    for start in range(0, m.dims, 16):
        block = m.data[:, start : start + 16].astype(np.float64)
        csum = np.zeros((n + 1, block.shape[1]), dtype=np.float64)
        np.cumsum(block, axis=0, out=csum[1:])
        out[:, start : start + 16] = ((csum[hi] - csum[lo]) / counts).astype(np.float32)
    return DescriptorMatrix(
        out, source_tag=m.source_tag, boundary_index=m.boundary_index, seed=m.seed
    )


def rescale_variance(src: DescriptorMatrix, target_std: np.ndarray) -> DescriptorMatrix:
    """Rescale each column's spread to ``target_std``, preserving column means."""
    target_std = np.asarray(target_std, dtype=np.float64)
    if target_std.shape != (src.dims,):
        raise InvalidArgumentError(
            f"target_std must have length {src.dims}, got shape {target_std.shape}"
        )
    data = src.data.astype(np.float64)
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    dead = np.flatnonzero(std <= 0)
    if dead.size:
        raise DegenerateInputError(f"zero-variance source column(s): {dead.tolist()}")
    out = mean + (data - mean) * (target_std / std)
    return DescriptorMatrix(
        out.astype(np.float32),
        source_tag=src.source_tag,
        boundary_index=src.boundary_index,
        seed=src.seed,
    )


def fit_noise_model(
    ref_b: DescriptorMatrix, query_b: DescriptorMatrix, scale: float = 1.0
) -> NoiseModel:
    """Fit the per-dimension noise statistics from paired traverse rows.

    The per-row difference is reference minus query; ``mean`` and ``std`` are
    its per-dimension statistics with population normalization.
    """
    if ref_b.data.shape != query_b.data.shape:
        raise InvalidArgumentError(
            f"paired matrices must share a shape, got {ref_b.data.shape} vs {query_b.data.shape}"
        )
    diff = ref_b.data.astype(np.float64) - query_b.data.astype(np.float64)
    return NoiseModel(mean=diff.mean(axis=0), std=diff.std(axis=0), scale=scale)


def apply_noise(m: DescriptorMatrix, nm: NoiseModel, seed: int = 0) -> DescriptorMatrix:
    """Add per-dimension Gaussian noise ``Normal(mean, (scale * std)^2)``."""
    if nm.mean.shape != (m.dims,):
        raise InvalidArgumentError(
            f"noise model has {nm.mean.shape[0]} dims, matrix has {m.dims}"
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    noise = rng.normal(nm.mean, nm.scale * nm.std, size=m.data.shape)
    out = (m.data.astype(np.float64) + noise).astype(np.float32)
    return DescriptorMatrix(
        out, source_tag=m.source_tag, boundary_index=m.boundary_index, seed=seed
    )


def concat(a: DescriptorMatrix, b: DescriptorMatrix) -> DescriptorMatrix:
    """Stack a's rows above b's; the boundary index records a's row count."""
    if a.dims != b.dims:
        raise InvalidArgumentError(f"dimension mismatch: {a.dims} vs {b.dims}")
    return DescriptorMatrix(
        np.vstack([a.data, b.data]),
        source_tag=f"{a.source_tag}+{b.source_tag}",
        boundary_index=a.rows,
        seed=a.seed,
    )


def build_recipe(recipe: DatasetRecipe) -> tuple[DescriptorMatrix, DescriptorMatrix, NoiseModel]:
    """Construct a concatenated reference/query dataset from a recipe.

    Part A is a homogenized i.i.d. Gaussian pool whose per-dimension spread
    is rescaled to match the traverse part; its query copy is the same rows
    plus noise sampled from the model fitted on the traverse pairs. Part B is
    the traverse with its naturally-perturbed query rows (no added noise).
    Ground truth of query row i is reference row i in both parts.

    Returns:
        ``(reference, query, noise_model)``. Both matrices carry
        ``boundary_index = ref_count_a``.
    """
    seeds = np.random.SeedSequence(recipe.seed).spawn(3)
    d = recipe.target_dims

    ref_b, query_b_full = generate_traverse(
        recipe.ref_count_b, d, smoothness=recipe.smoothness, seed=recipe.seed
    )
    query_b = DescriptorMatrix(
        query_b_full.data[: recipe.query_count_b],
        source_tag=query_b_full.source_tag,
        seed=recipe.seed,
    )

    pool_rng = np.random.default_rng(seeds[0])
    pool = DescriptorMatrix(
        pool_rng.standard_normal((recipe.ref_count_a, d)).astype(np.float32),
        source_tag="pool-ref",
    )
    w = min(recipe.window_w, recipe.ref_count_a)
    ref_a_raw = homogenize(pool, w)
    ref_a = rescale_variance(ref_a_raw, ref_b.data.astype(np.float64).std(axis=0))
    ref_a.source_tag = "pool-ref"

    nm = fit_noise_model(ref_b, query_b_full, scale=recipe.noise_scale)
    noise_seed = int(seeds[2].generate_state(1, np.uint64)[0] >> 1)
    query_a = apply_noise(ref_a, nm, seed=noise_seed)
    query_a.source_tag = "pool-query"

    reference = concat(ref_a, ref_b)
    reference.source_tag = "reference"
    reference.seed = recipe.seed
    query = concat(query_a, query_b)
    query.source_tag = "query"
    query.seed = recipe.seed
    return reference, query, nm


def recipe_from_json(path: str | Path) -> DatasetRecipe:
    """Load a recipe from a JSON file whose keys mirror DatasetRecipe fields."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    required = ["ref_count_a", "ref_count_b", "query_count_b", "seed"]
    for key in required:
        if key not in raw:
            raise InvalidArgumentError(f"recipe is missing required field '{key}'")
    known = {
        "ref_count_a",
        "ref_count_b",
        "query_count_b",
        "window_w",
        "noise_scale",
        "seed",
        "target_dims",
        "smoothness",
    }
    unknown = set(raw) - known
    if unknown:
        raise InvalidArgumentError(f"recipe has unknown field '{sorted(unknown)[0]}'")
    return DatasetRecipe(**raw)


def save_descriptors(m: DescriptorMatrix, path: str | Path) -> None:
    """Write ``<path>`` as raw little-endian float32 rows plus a JSON sidecar.

    The sidecar lives at the same stem with a ``.json`` suffix.
    """
    path = Path(path)
    path.write_bytes(m.data.astype("<f4").tobytes(order="C"))
    header = {
        "rows": m.rows,
        "dims": m.dims,
        "source_tag": m.source_tag,
        "boundary_index": m.boundary_index,
        "seed": m.seed,
    }
    path.with_suffix(".json").write_text(
        json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_descriptors(path: str | Path) -> DescriptorMatrix:
    """Read a descriptor matrix written by :func:`save_descriptors`."""
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    rows, dims = int(header["rows"]), int(header["dims"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if raw.size != rows * dims:
        raise InvalidArgumentError(
            f"descriptor payload holds {raw.size} values, header says {rows}x{dims}"
        )
    return DescriptorMatrix(
        raw.reshape(rows, dims),
        source_tag=header.get("source_tag", ""),
        boundary_index=header.get("boundary_index"),
        seed=header.get("seed"),
    )
