"""Inverted index from hash addresses to reference-index lists.

The index is stored CSR-style: a sorted array of occupied addresses, a
parallel offsets array, and one flat array of reference indices (ascending
within each bucket). Alongside the buckets it keeps, per occupied address,
the single best reference (smallest total quantization error, ties to the
lowest index) for O(1) single-frame matching, and the address under which
each reference was stored, which is what sequence matching reads back.

Queries landing on an unoccupied address resolve to the numerically nearest
occupied address via binary search; equidistant ties go to the lower
address.

File layout (little-endian):

    magic  b"SQHIDX01"
    u32    header length
    bytes  JSON header {"H_o", "K", "N_x", "d", "quantizer_ref"}
    P1     per occupied address, ascending:
               u64 address, u32 bucket length, u32 * length reference indices
    SB     per occupied address, ascending: u64 address, u32 best reference
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DescriptorMatrix
from .errors import InvalidArgumentError, FormatError
from .quantizer import (
    Quantizer,
    hash_batch,
    quantize_batch,
    quantization_error_batch,
)

MAGIC = b"SQHIDX01"


@dataclass
class InvertedIndex:
    occupied: np.ndarray  # sorted occupied addresses, int64, length H_o
    bucket_starts: np.ndarray  # int64, length H_o + 1, offsets into bucket_refs
    bucket_refs: np.ndarray  # int64, length N_x, ascending within each bucket
    single_best: np.ndarray  # int64, length H_o, best reference per address
    ref_address: np.ndarray  # int64, length N_x, address each reference hashed to
    K: int
    d: int
    quantizer_ref: str

    @property
    def ref_count(self) -> int:
        return self.bucket_refs.size

    @property
    def occupied_count(self) -> int:
        return self.occupied.size

    def bucket_at(self, pos: int) -> np.ndarray:
        """Reference list of the occupied address at position ``pos``."""
        return self.bucket_refs[self.bucket_starts[pos] : self.bucket_starts[pos + 1]]

    def buckets(self):
        """Yield (address, reference-array) pairs in ascending address order."""
        for pos in range(self.occupied.size):
            yield int(self.occupied[pos]), self.bucket_at(pos)


def build(refs_projected: DescriptorMatrix, qz: Quantizer) -> InvertedIndex:
    """Hash every reference row and group them into buckets.

    The per-address best match is computed here, at build time, from the
    projected vectors; queries never touch them again.
    """
    if refs_projected.rows < 1:
        raise InvalidArgumentError("reference set is empty")
    if refs_projected.dims != qz.d:
        raise InvalidArgumentError(
            f"references have {refs_projected.dims} dims, quantizer expects {qz.d}"
        )

    rows = refs_projected.data.astype(np.float64)
    digits = quantize_batch(qz, rows)
    addresses = hash_batch(qz, digits)
    errors = quantization_error_batch(qz, rows)
    n = addresses.size

    by_addr = np.argsort(addresses, kind="stable")
    sorted_addr = addresses[by_addr]
    boundaries = np.flatnonzero(np.diff(sorted_addr)) + 1
    starts = np.concatenate([[0], boundaries, [n]]).astype(np.int64)
    occupied = sorted_addr[starts[:-1]].copy()

    # Group-leader after sorting by (address, error, index) is the bucket's
    # minimum-error member with the lowest-index tie break.
    by_best = np.lexsort((np.arange(n), errors, addresses))
    single_best = by_best[starts[:-1]].astype(np.int64)

    return InvertedIndex(
        occupied=occupied,
        bucket_starts=starts,
        bucket_refs=by_addr.astype(np.int64),
        single_best=single_best,
        ref_address=addresses,
        K=qz.K,
        d=qz.d,
        quantizer_ref=qz.fingerprint(),
    )


def _resolve(idx: InvertedIndex, h: int) -> tuple[int, int]:
    """Binary-search ``occupied`` for the position nearest to ``h``.

    Returns ``(position, comparisons)``. An exact hit falls out of the
    distance test (its right-distance is zero), so no extra equality
    comparison is spent on it.
    """
    occ = idx.occupied
    lo, hi = 0, occ.size
    comparisons = 0
    while lo < hi:
        mid = (lo + hi) // 2
        comparisons += 1
        if occ[mid] < h:
            lo = mid + 1
        else:
            hi = mid
    if lo == occ.size:
        return occ.size - 1, comparisons
    if lo == 0:
        return 0, comparisons
    comparisons += 1
    return (lo - 1, comparisons) if h - occ[lo - 1] <= occ[lo] - h else (lo, comparisons)


def nearest_occupied(idx: InvertedIndex, h: int) -> tuple[int, int]:
    """Resolve an address to the numerically nearest occupied one.

    Returns ``(resolved_address, comparisons)``; the comparison count is
    bounded by ceil(log2(H_o)) + 2.
    """
    pos, comparisons = _resolve(idx, h)
    return int(idx.occupied[pos]), comparisons


def lookup(idx: InvertedIndex, h: int) -> tuple[int, np.ndarray]:
    """Candidate references for an address: its bucket if occupied, else the
    bucket of the nearest occupied address."""
    _check_address(idx, h)
    pos, _ = _resolve(idx, h)
    return int(idx.occupied[pos]), idx.bucket_at(pos)


def lookup_positions(idx: InvertedIndex, addrs: np.ndarray) -> np.ndarray:
    """Vectorized resolve: positions into ``occupied`` for many addresses."""
    addrs = np.asarray(addrs, dtype=np.int64)
    _check_address(idx, addrs)
    occ = idx.occupied
    pos = np.searchsorted(occ, addrs, side="left")
    left = np.maximum(pos - 1, 0)
    right = np.minimum(pos, occ.size - 1)
    dist_left = addrs - occ[left]
    dist_right = occ[right] - addrs
    take_left = (pos == occ.size) | ((pos > 0) & (dist_left <= dist_right))
    return np.where(take_left, left, right)


def query_single(idx: InvertedIndex, h: int) -> int:
    """Best single-frame match: the stored minimum-quantization-error
    reference of the resolved address."""
    _check_address(idx, h)
    pos, _ = _resolve(idx, h)
    return int(idx.single_best[pos])


def _check_address(idx: InvertedIndex, h) -> None:
    space = idx.K**idx.d
    if np.any(np.asarray(h) < 0) or np.any(np.asarray(h) >= space):
        raise InvalidArgumentError(f"address out of range [0, {space})")


def section_sizes(idx: InvertedIndex) -> dict[str, int]:
    """Byte sizes of the serialized sections (matches the on-disk layout)."""
    h_o, n = idx.occupied_count, idx.ref_count
    header = len(_header_bytes(idx))
    return {
        "magic_and_header": len(MAGIC) + 4 + header,
        "p1": 12 * h_o + 4 * n,
        "single_best": 12 * h_o,
    }


def _header_bytes(idx: InvertedIndex) -> bytes:
    header = {
        "H_o": idx.occupied_count,
        "K": idx.K,
        "N_x": idx.ref_count,
        "d": idx.d,
        "quantizer_ref": idx.quantizer_ref,
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def to_bytes(idx: InvertedIndex) -> bytes:
    header = _header_bytes(idx)
    parts = [MAGIC, struct.pack("<I", len(header)), header]
    starts = idx.bucket_starts
    for pos in range(idx.occupied_count):
        refs = idx.bucket_refs[starts[pos] : starts[pos + 1]]
        parts.append(struct.pack("<QI", int(idx.occupied[pos]), refs.size))
        parts.append(refs.astype("<u4").tobytes())
    parts.append(
        b"".join(
            struct.pack("<QI", int(idx.occupied[pos]), int(idx.single_best[pos]))
            for pos in range(idx.occupied_count)
        )
    )
    return b"".join(parts)


def from_bytes(blob: bytes) -> InvertedIndex:
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError("bad magic", 0)
    cursor = len(MAGIC)
    if len(blob) < cursor + 4:
        raise FormatError("truncated header length", cursor)
    (header_len,) = struct.unpack_from("<I", blob, cursor)
    cursor += 4
    if len(blob) < cursor + header_len:
        raise FormatError("truncated header", cursor)
    try:
        header = json.loads(blob[cursor : cursor + header_len])
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparseable header: {exc.msg}", cursor) from exc
    cursor += header_len

    h_o, n = int(header["H_o"]), int(header["N_x"])
    occupied = np.empty(h_o, dtype=np.int64)
    starts = np.zeros(h_o + 1, dtype=np.int64)
    bucket_refs = np.empty(n, dtype=np.int64)
    filled = 0
    for pos in range(h_o):
        if len(blob) < cursor + 12:
            raise FormatError("truncated bucket record", cursor)
        addr, count = struct.unpack_from("<QI", blob, cursor)
        cursor += 12
        if count == 0:
            raise FormatError("empty bucket record", cursor - 4)
        if pos > 0 and addr <= occupied[pos - 1]:
            raise FormatError("bucket addresses not strictly ascending", cursor - 12)
        if filled + count > n:
            raise FormatError("bucket sizes exceed reference count", cursor - 4)
        if len(blob) < cursor + 4 * count:
            raise FormatError("truncated bucket payload", cursor)
        occupied[pos] = addr
        refs = np.frombuffer(blob, dtype="<u4", count=count, offset=cursor)
        bucket_refs[filled : filled + count] = refs
        filled += count
        starts[pos + 1] = filled
        cursor += 4 * count
    if filled != n:
        raise FormatError(f"bucket sizes sum to {filled}, header says {n}", cursor)

    single_best = np.empty(h_o, dtype=np.int64)
    for pos in range(h_o):
        if len(blob) < cursor + 12:
            raise FormatError("truncated single-best record", cursor)
        addr, best = struct.unpack_from("<QI", blob, cursor)
        if addr != occupied[pos]:
            raise FormatError("single-best address does not match bucket order", cursor)
        bucket = bucket_refs[starts[pos] : starts[pos + 1]]
        if bucket[np.searchsorted(bucket, best) % bucket.size] != best:
            raise FormatError("single-best reference not in its bucket", cursor)
        single_best[pos] = best
        cursor += 12
    if cursor != len(blob):
        raise FormatError("trailing bytes after single-best section", cursor)

    ref_address = np.empty(n, dtype=np.int64)
    ref_address[bucket_refs] = np.repeat(occupied, np.diff(starts))

    return InvertedIndex(
        occupied=occupied,
        bucket_starts=starts,
        bucket_refs=bucket_refs,
        single_best=single_best,
        ref_address=ref_address,
        K=int(header["K"]),
        d=int(header["d"]),
        quantizer_ref=str(header["quantizer_ref"]),
    )


def save_index(idx: InvertedIndex, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(idx))


def load_index(path: str | Path) -> InvertedIndex:
    return from_bytes(Path(path).read_bytes())
