"""Storage-matched linear-scan baseline.

The comparison system keeps only the first d_b principal components
(default 1) of every reference descriptor as raw floats, shortlists the
``cap`` references nearest to the window's centre frame, and re-scores the
shortlist with the same constant-velocity L-frame alignment, summing plain
Euclidean distances. ``cap`` is meant to be set from the proposed system's
measured mean candidate-list length so both sides probe equally many
references per query.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError


def check_storage_parity(n_refs: int, d_b: int, index_map_bytes: int) -> None:
    """Reject baseline configurations that would out-store the hash index.

    The baseline keeps ``4 * n_refs * d_b`` bytes of float32 components; that
    must not exceed the index-map byte budget it is being compared against.
    """
    baseline_bytes = 4 * n_refs * d_b
    if baseline_bytes > index_map_bytes:
        raise InvalidArgumentError(
            f"baseline stores {baseline_bytes} bytes with d_b={d_b}, "
            f"exceeding the {index_map_bytes}-byte index map budget"
        )


def baseline_match(
    refs_1d: np.ndarray,
    query_window: np.ndarray,
    L: int,
    cap: int,
) -> int:
    """Best reference for a window under the candidate-capped linear scan.

    Args:
        refs_1d: N x d_b reference components.
        query_window: L x d_b query components, oldest first, centred at
            position floor(L/2).
        L: Window length.
        cap: Shortlist size; candidates are the cap nearest references to
            the centre frame (ties to the lower index).

    Returns:
        Reference index with the smallest summed Euclidean distance along
        the clamped constant-velocity alignment; ties to the lowest index.
    """
    refs = np.asarray(refs_1d, dtype=np.float64)
    window = np.asarray(query_window, dtype=np.float64)
    if refs.ndim != 2 or refs.shape[0] < 1:
        raise InvalidArgumentError("reference set is empty")
    if window.shape != (L, refs.shape[1]):
        raise InvalidArgumentError(
            f"query window must be {L} x {refs.shape[1]}, got {window.shape}"
        )
    if cap < 1:
        raise InvalidArgumentError("cap must be >= 1")

    n = refs.shape[0]
    cap = min(cap, n)
    center = window[L // 2]
    center_dist = np.sqrt(((refs - center) ** 2).sum(axis=1))
    # Shortlist by (distance, index) so boundary ties resolve deterministically.
    shortlist = np.lexsort((np.arange(n), center_dist))[:cap]

    offsets = np.arange(L, dtype=np.int64) - L // 2
    ref_idx = np.clip(shortlist[:, None] + offsets[None, :], 0, n - 1)
    diffs = refs[ref_idx] - window[None, :, :]
    scores = np.sqrt((diffs**2).sum(axis=2)).sum(axis=1)

    order = np.lexsort((shortlist, scores))
    return int(shortlist[order[0]])
