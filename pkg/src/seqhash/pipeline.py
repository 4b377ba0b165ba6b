"""End-to-end wiring: train the index, run query sweeps, assemble reports.

Ground truth for the synthetic datasets is the identity pairing (query row i
revisits reference row i), so a match record just keeps the window centre as
its truth index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import baseline as baseline_mod
from . import hashindex, quantizer, transform
from .dataset import DatasetRecipe, DescriptorMatrix, build_recipe
from .errors import InvalidArgumentError
from .evaluation import (
    OpCount,
    RecallCurve,
    StorageReport,
    op_count,
    recall_values,
    storage_report,
)
from .quantizer import Quantizer
from .seqmatch import SdcTable, match_sequence_detailed
from .transform import PcaModel


@dataclass
class MatchRecord:
    query_index: int
    truth: int
    best: int
    score: float
    n_candidates: int
    fallback: bool
    min_candidate_offset: int | None = None


def train_pipeline(
    refs: DescriptorMatrix, d: int, K: int, batch: int = 0, seed: int = 0
) -> tuple[PcaModel, Quantizer, hashindex.InvertedIndex, DescriptorMatrix]:
    """Fit PCA, fit the per-dimension quantizer, build the inverted index.

    Returns the three trained artifacts plus the projected reference matrix
    (useful for diagnostics; queries only need the first three).
    """
    model = transform.fit_incremental(refs, d, batch)
    projected = transform.project(model, refs)
    qz = quantizer.fit(projected, K, seed=seed)
    idx = hashindex.build(projected, qz)
    return model, qz, idx, projected


def window_centers(n_queries: int, L: int, stride: int) -> list[int]:
    """Strided centre indices whose full L-frame window stays in range."""
    if L < 1 or stride < 1:
        raise InvalidArgumentError("L and stride must be >= 1")
    if n_queries < L:
        raise InvalidArgumentError(f"need at least L={L} query frames, have {n_queries}")
    first = L // 2
    last = n_queries - (L - L // 2)  # inclusive
    return list(range(first, last + 1, stride))


def evaluate_proposed(
    idx: hashindex.InvertedIndex,
    qz: Quantizer,
    query_digits: np.ndarray,
    L: int,
    centers: list[int],
) -> list[MatchRecord]:
    """Run sequence matching at each centre over pre-quantized query frames."""
    sdc = SdcTable(qz)
    records = []
    half = L // 2
    for t in centers:
        window = query_digits[t - half : t - half + L]
        result, candidates, positions = match_sequence_detailed(idx, qz, window, L, sdc)
        center_addr = int(quantizer.hash_batch(qz, window[half][None, :])[0])
        resolved_addr = int(idx.occupied[positions[half]])
        records.append(
            MatchRecord(
                query_index=t,
                truth=t,
                best=result.best,
                score=result.score,
                n_candidates=result.n_candidates,
                fallback=resolved_addr != center_addr,
                min_candidate_offset=int(np.abs(candidates - t).min()),
            )
        )
    return records


def evaluate_baseline(
    refs_comp: np.ndarray,
    query_comp: np.ndarray,
    L: int,
    centers: list[int],
    cap: int,
) -> list[MatchRecord]:
    """Run the capped linear-scan baseline at the same centres."""
    records = []
    half = L // 2
    for t in centers:
        window = query_comp[t - half : t - half + L]
        best = baseline_mod.baseline_match(refs_comp, window, L, cap)
        records.append(
            MatchRecord(
                query_index=t,
                truth=t,
                best=best,
                score=0.0,
                n_candidates=cap,
                fallback=False,
            )
        )
    return records


def records_to_curve(
    records: list[MatchRecord], radii: list[int], meta: dict
) -> RecallCurve:
    truths = np.array([r.truth for r in records])
    returned = np.array([r.best for r in records])
    mean_nr = float(np.mean([r.n_candidates for r in records]))
    return RecallCurve(
        radii=list(radii),
        recall=recall_values(truths, returned, radii),
        meta=dict(meta),
        mean_nr=mean_nr,
    )


def in_list_curve(
    records: list[MatchRecord], radii: list[int], meta: dict
) -> RecallCurve:
    """Upper-bound curve: the truth merely has to appear in the shortlist."""
    offsets = np.array([r.min_candidate_offset for r in records])
    if any(r.min_candidate_offset is None for r in records):
        raise InvalidArgumentError("records lack candidate offsets")
    mean_nr = float(np.mean([r.n_candidates for r in records]))
    recall = [float(np.mean(offsets <= r)) for r in radii]
    return RecallCurve(radii=list(radii), recall=recall, meta=dict(meta), mean_nr=mean_nr)


@dataclass
class BenchResult:
    curves: list[RecallCurve]
    storage: StorageReport
    ops: dict[str, OpCount]


def run_bench(
    recipe: DatasetRecipe,
    d: int,
    K: int,
    L_values: list[int],
    stride: int,
    systems: list[str],
    noise_scales: list[float] | None = None,
    radii: list[int] | None = None,
    dataset_label: str = "bench",
) -> BenchResult:
    """Paired proposed/baseline evaluation across sequence lengths and noise.

    The baseline's candidate cap is the measured mean shortlist length of the
    proposed system on the same dataset, sequence length and centres.
    """
    for system in systems:
        if system not in ("proposed", "baseline"):
            raise InvalidArgumentError(f"unknown system '{system}'")
    radii = radii if radii is not None else list(range(0, 21))
    noise_scales = noise_scales if noise_scales is not None else [recipe.noise_scale]
    curves: list[RecallCurve] = []
    ops: dict[str, OpCount] = {}
    storage = None

    for noise_scale in noise_scales:
        cfg = DatasetRecipe(
            ref_count_a=recipe.ref_count_a,
            ref_count_b=recipe.ref_count_b,
            query_count_b=recipe.query_count_b,
            window_w=recipe.window_w,
            noise_scale=noise_scale,
            seed=recipe.seed,
            target_dims=recipe.target_dims,
            smoothness=recipe.smoothness,
        )
        reference, query, _ = build_recipe(cfg)
        model, qz, idx, ref_proj = train_pipeline(reference, d, K)
        query_proj = transform.project(model, query)
        query_digits = quantizer.quantize_batch(qz, query_proj.data.astype(np.float64))
        refs_comp = ref_proj.data[:, :1].astype(np.float64)
        query_comp = query_proj.data[:, :1].astype(np.float64)

        if storage is None:
            storage = storage_report(reference.rows, reference.dims, d, K)

        centers = window_centers(query.rows, max(L_values), stride)
        for L in L_values:
            meta = {
                "dataset": dataset_label,
                "system": "proposed",
                "L": L,
                "noise_scale": noise_scale,
                "d": d,
                "K": K,
            }
            records = evaluate_proposed(idx, qz, query_digits, L, centers)
            curve = records_to_curve(records, radii, meta)
            curves.append(curve)
            ops[f"proposed_L{L}_noise{noise_scale}"] = op_count(
                "proposed",
                reference.dims,
                d,
                K,
                reference.rows,
                max(1, round(curve.mean_nr)),
                L,
            )

            if "baseline" in systems:
                cap = max(1, round(curve.mean_nr))
                baseline_mod.check_storage_parity(reference.rows, 1, storage.p1_bytes)
                brecords = evaluate_baseline(refs_comp, query_comp, L, centers, cap)
                bmeta = dict(meta, system="baseline")
                curves.append(records_to_curve(brecords, radii, bmeta))
                ops[f"baseline_L{L}_noise{noise_scale}"] = op_count(
                    "baseline", reference.dims, 1, K, reference.rows, cap, L
                )

    return BenchResult(curves=curves, storage=storage, ops=ops)
