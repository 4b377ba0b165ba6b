"""Sequence matching over overloaded candidate lists.

A window of L quantized query frames pulls candidate references from the
buckets of every frame (after nearest-occupied resolution). Each candidate i
is scored along the constant-velocity alignment: the sum over window offsets
l in [-floor(L/2), ceil(L/2)-1] of the center-gap distance between reference
i+l (clamped to the valid range) and the query frame at that offset. The
reference side is reconstructed purely from the address each reference was
stored under, so matching never rereads descriptor data.

The center-gap distance between two quantized vectors is a per-dimension
table lookup into precomputed |center_a - center_b| gaps (the symmetric
form: both sides are represented by their centers).

Online mode keeps a sliding window and caches per-pair distances keyed by
(diagonal, frame), where the diagonal c = candidate - window_center is the
constant-velocity line a pair lies on: a pair's reference index equals
clamp(c + frame). Cached values and summation order are shared with the
batch path, so a warm matcher emits bit-identical results to
:func:`match_sequence` on the same window.
"""

from __future__ import annotations

from collections import deque
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError
from .hashindex import InvertedIndex, lookup_positions
from .quantizer import Quantizer, hash_batch, unhash_batch


class SdcTable:
    """Per-dimension K x K matrix of |center_a - center_b| gaps."""

    def __init__(self, qz: Quantizer):
        self.gaps = np.abs(qz.centers[:, :, None] - qz.centers[:, None, :])
        self.d = qz.d
        self.K = qz.K
        self._dim_index = np.arange(self.d)


class MatchResult(NamedTuple):
    best: int
    score: float
    n_candidates: int


def sdc_distance(qz: Quantizer, qa: np.ndarray, qb: np.ndarray, sdc: SdcTable | None = None) -> float:
    """Center-gap distance between two quantization index vectors."""
    qa = np.asarray(qa)
    qb = np.asarray(qb)
    if qa.shape != (qz.d,) or qb.shape != (qz.d,):
        raise InvalidArgumentError(
            f"index vectors must both have length {qz.d}, got {qa.shape} and {qb.shape}"
        )
    if min(qa.min(), qb.min()) < 0 or max(qa.max(), qb.max()) >= qz.K:
        raise InvalidArgumentError(f"index entries must lie in [0, {qz.K})")
    table = sdc if sdc is not None else SdcTable(qz)
    return float(_pair_distances(table, qa[None, :], qb[None, :])[0])


def _pair_distances(table: SdcTable, qa: np.ndarray, qb: np.ndarray) -> np.ndarray:
    """Sum of per-dimension gaps over the last axis.

    ``qa`` and ``qb`` broadcast against each other; every code path that
    needs a pair distance funnels through here so summation order (and hence
    floating-point output) is identical everywhere.
    """
    return table.gaps[table._dim_index, qa, qb].sum(axis=-1)


def _window_digits(qz: Quantizer, query_window, L: int) -> np.ndarray:
    digits = np.asarray(query_window, dtype=np.int64)
    if digits.ndim != 2 or digits.shape != (L, qz.d):
        raise InvalidArgumentError(
            f"query window must be {L} x {qz.d}, got {digits.shape}"
        )
    if digits.size and (digits.min() < 0 or digits.max() >= qz.K):
        raise InvalidArgumentError(f"index entries must lie in [0, {qz.K})")
    return digits


def match_sequence(
    idx: InvertedIndex,
    qz: Quantizer,
    query_window,
    L: int,
    sdc: SdcTable | None = None,
) -> MatchResult:
    """Best reference for an L-frame window of quantized query vectors.

    The window is ordered oldest to newest and is centred at position
    floor(L/2). With L == 1 this degenerates to the stored single-frame best
    match of the resolved address.

    Returns:
        ``(best, score, n_candidates)``; ties on the score go to the lowest
        reference index.
    """
    result, _, _ = match_sequence_detailed(idx, qz, query_window, L, sdc)
    return result


def match_sequence_detailed(
    idx: InvertedIndex,
    qz: Quantizer,
    query_window,
    L: int,
    sdc: SdcTable | None = None,
) -> tuple[MatchResult, np.ndarray, np.ndarray]:
    """:func:`match_sequence` plus the candidate set and per-frame resolved
    positions into ``idx.occupied`` (both needed by evaluation)."""
    if L < 1:
        raise InvalidArgumentError("L must be >= 1")
    digits = _window_digits(qz, query_window, L)
    if digits.shape[0] == 0:
        raise InvalidArgumentError("query window is empty")
    table = sdc if sdc is not None else SdcTable(qz)

    addrs = hash_batch(qz, digits)
    positions = lookup_positions(idx, addrs)

    if L == 1:
        pos = int(positions[0])
        best = int(idx.single_best[pos])
        best_digits = unhash_batch(qz, idx.ref_address[[best]])[0]
        score = float(_pair_distances(table, best_digits[None, :], digits[:1])[0])
        bucket = idx.bucket_at(pos)
        return MatchResult(best, score, int(bucket.size)), bucket, positions

    candidates = np.unique(
        np.concatenate([idx.bucket_at(int(p)) for p in positions])
    )
    scores = _score_candidates(idx, qz, table, candidates, digits)
    best_pos = int(np.argmin(scores))
    result = MatchResult(int(candidates[best_pos]), float(scores[best_pos]), candidates.size)
    return result, candidates, positions


def _score_candidates(
    idx: InvertedIndex,
    qz: Quantizer,
    table: SdcTable,
    candidates: np.ndarray,
    digits: np.ndarray,
) -> np.ndarray:
    """Constant-velocity alignment scores for every candidate (ascending)."""
    L = digits.shape[0]
    offsets = np.arange(L, dtype=np.int64) - L // 2
    ref_idx = np.clip(candidates[:, None] + offsets[None, :], 0, idx.ref_count - 1)
    ref_digits = unhash_batch(qz, idx.ref_address[ref_idx].ravel()).reshape(
        candidates.size, L, qz.d
    )
    per_pair = _pair_distances(table, ref_digits, digits[None, :, :].astype(np.int32))
    return per_pair.sum(axis=1)


class SequenceMatcher:
    """Online sliding-window matcher.

    Push one quantized query frame at a time; once L frames have been seen,
    every push emits the same result :func:`match_sequence` would produce on
    the current window. Per-pair distances are cached by (diagonal, frame)
    and only pairs introduced by the newest frame or by newly shortlisted
    candidates are computed.
    """

    def __init__(self, idx: InvertedIndex, qz: Quantizer, L: int):
        if L < 1:
            raise InvalidArgumentError("L must be >= 1")
        self.idx = idx
        self.qz = qz
        self.L = L
        self.sdc = SdcTable(qz)
        self._window: deque[tuple[int, np.ndarray, int]] = deque()  # (frame, digits, bucket pos)
        self._pair_cache: dict[int, dict[int, float]] = {}  # frame -> diagonal -> distance
        self._frames_seen = 0

    def push(self, q: np.ndarray) -> MatchResult | None:
        """Add one quantized query frame; emit a match once warm."""
        digits = np.asarray(q, dtype=np.int64)
        if digits.shape != (self.qz.d,):
            raise InvalidArgumentError(
                f"frame must have length {self.qz.d}, got shape {digits.shape}"
            )
        if digits.min() < 0 or digits.max() >= self.qz.K:
            raise InvalidArgumentError(f"index entries must lie in [0, {self.qz.K})")

        frame = self._frames_seen
        self._frames_seen += 1
        addr = hash_batch(self.qz, digits[None, :])
        pos = int(lookup_positions(self.idx, addr)[0])
        self._window.append((frame, digits, pos))
        self._pair_cache[frame] = {}
        if len(self._window) > self.L:
            old_frame, _, _ = self._window.popleft()
            del self._pair_cache[old_frame]
        if len(self._window) < self.L:
            return None

        if self.L == 1:
            best = int(self.idx.single_best[pos])
            best_digits = unhash_batch(self.qz, self.idx.ref_address[[best]])[0]
            score = float(
                _pair_distances(self.sdc, best_digits[None, :], digits[None, :])[0]
            )
            return MatchResult(best, score, int(self.idx.bucket_at(pos).size))

        candidates = np.unique(
            np.concatenate([self.idx.bucket_at(p) for _, _, p in self._window])
        )
        center = self._window[0][0] + self.L // 2
        diagonals = candidates - center

        per_pair = np.empty((candidates.size, self.L), dtype=np.float64)
        for col, (g, frame_digits, _) in enumerate(self._window):
            cache = self._pair_cache[g]
            missing = [int(c) for c in diagonals if int(c) not in cache]
            if missing:
                ref_idx = np.clip(
                    np.asarray(missing, dtype=np.int64) + g, 0, self.idx.ref_count - 1
                )
                ref_digits = unhash_batch(self.qz, self.idx.ref_address[ref_idx])
                fresh = _pair_distances(
                    self.sdc, ref_digits, frame_digits[None, :].astype(np.int32)
                )
                for c, value in zip(missing, fresh):
                    cache[c] = float(value)
            per_pair[:, col] = [cache[int(c)] for c in diagonals]

        scores = per_pair.sum(axis=1)
        best_pos = int(np.argmin(scores))
        return MatchResult(int(candidates[best_pos]), float(scores[best_pos]), candidates.size)
