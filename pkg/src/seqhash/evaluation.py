"""Recall metrics, storage accounting, operation counting, reports.

The storage model prices every persisted component at 8 bytes per element:
the index map at 8 bytes per place, cluster centers at 8 per center, the
projection matrix at 8 per coefficient and the mean descriptor at 8 per
dimension. Measured on-disk sizes are reported next to the model so framing
overhead stays visible.

Operation counts are unitary (one addition or multiplication); each formula
is a standalone function so tests can re-type them independently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .dataset import DescriptorMatrix
from .errors import InvalidArgumentError
from .hashindex import InvertedIndex
from .quantizer import Quantizer, quantize_batch


@dataclass
class RecallCurve:
    radii: list[int]
    recall: list[float]
    meta: dict = field(default_factory=dict)
    mean_nr: float = 0.0

    def label(self) -> str:
        bits = [str(self.meta.get("dataset", "run"))]
        for key in ("system", "L", "noise_scale"):
            if key in self.meta:
                bits.append(f"{key}={self.meta[key]}")
        return " ".join(bits)


@dataclass
class StorageReport:
    p1_bytes: int
    p2_bytes: int
    p3_bytes: int
    p4_bytes: int
    model_bytes_per_place: float
    measured: dict[str, int] | None = None

    @property
    def total_bytes(self) -> int:
        return self.p1_bytes + self.p2_bytes + self.p3_bytes + self.p4_bytes


@dataclass
class OpCount:
    pca_ops: int
    quant_ops: int
    hash_ops: int
    lookup_ops: int
    seq_ops: float


def recall_at(matches: list[tuple[int, int]], radius: int) -> float:
    """Fraction of (truth, returned) pairs within ``radius`` frames."""
    if radius < 0:
        raise InvalidArgumentError("radius must be >= 0")
    if not matches:
        raise InvalidArgumentError("match list is empty")
    hits = sum(1 for truth, returned in matches if abs(returned - truth) <= radius)
    return hits / len(matches)


def recall_values(truths: np.ndarray, returned: np.ndarray, radii) -> list[float]:
    """Vectorized recall over several radii for paired index arrays."""
    truths = np.asarray(truths)
    returned = np.asarray(returned)
    if truths.size == 0:
        raise InvalidArgumentError("match list is empty")
    err = np.abs(returned - truths)
    return [float(np.mean(err <= r)) for r in radii]


# --- storage model -------------------------------------------------------

def storage_report(
    n_refs: int,
    dims: int,
    code_dims: int,
    n_centers: int,
    measured: dict[str, int] | None = None,
) -> StorageReport:
    """Model byte sizes of the four persisted components.

    ``n_refs`` is the reference count, ``dims`` the raw descriptor length,
    ``code_dims`` the projected length and ``n_centers`` the bins per
    dimension.
    """
    if min(dims, code_dims, n_centers) < 1 or n_refs < 0:
        raise InvalidArgumentError("all storage config values must be positive")
    p1 = 8 * n_refs
    p2 = 8 * code_dims * n_centers
    p3 = 8 * code_dims * dims
    p4 = 8 * dims
    total = p1 + p2 + p3 + p4
    per_place = total / n_refs if n_refs else math.nan
    return StorageReport(p1, p2, p3, p4, per_place, measured)


# --- unitary operation counts --------------------------------------------

def pca_ops(dims: int, code_dims: int) -> int:
    """Mean subtraction plus the projection mat-vec."""
    return dims + code_dims * (2 * dims - 1)


def quantize_ops(code_dims: int, n_centers: int) -> int:
    """Nearest-center assignment across all dimensions."""
    return code_dims * (2 * n_centers - 1)


def hash_ops(code_dims: int) -> int:
    """Positional base-K packing of the index vector."""
    return 2 * code_dims - 1


def baseline_retrieval_ops(code_dims: int, n_refs: int) -> int:
    """Euclidean scan of every stored reference."""
    return 3 * code_dims * n_refs


def seq_update_ops(n_candidates: int) -> int:
    """Per-frame update when cumulative pair scores are stored."""
    return 3 * n_candidates - 1


def seq_match_ops(new_pairs: int, n_candidates: int, code_dims: int, precision: int) -> float:
    """Distance evaluations for the pairs a new frame introduces."""
    if precision not in (32, 64):
        raise InvalidArgumentError("precision must be 32 or 64")
    return new_pairs * n_candidates * (code_dims / precision + code_dims - 1)


def op_count(
    system: str,
    dims: int,
    code_dims: int,
    n_centers: int,
    n_refs: int,
    n_candidates: int,
    new_pairs: int,
    precision: int = 64,
) -> OpCount:
    """Unitary operations per query for either system.

    The proposed system pays projection, quantization, hashing and the
    sequence-distance evaluations; candidate retrieval is a constant-time
    table hit. The baseline pays projection and the full linear scan, and
    its sequence bookkeeping is the stored-cumulative-score update.
    """
    if system == "proposed":
        return OpCount(
            pca_ops=pca_ops(dims, code_dims),
            quant_ops=quantize_ops(code_dims, n_centers),
            hash_ops=hash_ops(code_dims),
            lookup_ops=0,
            seq_ops=seq_match_ops(new_pairs, n_candidates, code_dims, precision),
        )
    if system == "baseline":
        return OpCount(
            pca_ops=pca_ops(dims, code_dims),
            quant_ops=0,
            hash_ops=0,
            lookup_ops=baseline_retrieval_ops(code_dims, n_refs),
            seq_ops=float(seq_update_ops(n_candidates)),
        )
    raise InvalidArgumentError(f"unknown system '{system}'")


# --- diagnostics ----------------------------------------------------------

def cluster_balance(
    idx: InvertedIndex, qz: Quantizer, refs_projected: DescriptorMatrix
) -> np.ndarray:
    """Fraction of references assigned to each center, per dimension.

    Returns a d x K matrix of occupancy fractions (rows sum to 1).
    """
    if refs_projected.rows != idx.ref_count:
        raise InvalidArgumentError(
            f"index holds {idx.ref_count} references, matrix has {refs_projected.rows}"
        )
    digits = quantize_batch(qz, refs_projected.data.astype(np.float64))
    fractions = np.empty((qz.d, qz.K), dtype=np.float64)
    for j in range(qz.d):
        fractions[j] = np.bincount(digits[:, j], minlength=qz.K) / refs_projected.rows
    return fractions


def max_imbalance(fractions: np.ndarray) -> np.ndarray:
    """Per-dimension worst deviation from the uniform 1/K share."""
    k = fractions.shape[1]
    return np.abs(fractions - 1.0 / k).max(axis=1)


# --- report emission ------------------------------------------------------

_SVG_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def emit_report(
    curves: list[RecallCurve],
    storage: StorageReport | None,
    ops: dict[str, OpCount] | None,
    out_dir: str | Path,
) -> list[Path]:
    """Write recall CSV + SVG, and JSON blobs for storage and op counts.

    Output bytes are a pure function of the inputs.
    """
    if not curves:
        raise InvalidArgumentError("no curves to report")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out_dir}: {exc}") from exc

    written = []
    csv_path = out_dir / "recall.csv"
    lines = ["dataset,L,noise_scale,d,K,radius,recall,mean_Nr"]
    for curve in curves:
        meta = curve.meta
        for radius, value in zip(curve.radii, curve.recall):
            lines.append(
                "{},{},{},{},{},{},{:.6f},{:.2f}".format(
                    meta.get("dataset", ""),
                    meta.get("L", ""),
                    meta.get("noise_scale", ""),
                    meta.get("d", ""),
                    meta.get("K", ""),
                    radius,
                    value,
                    curve.mean_nr,
                )
            )
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(csv_path)

    svg_path = out_dir / "recall.svg"
    svg_path.write_text(_render_svg(curves), encoding="utf-8")
    written.append(svg_path)

    if storage is not None:
        path = out_dir / "storage.json"
        blob = asdict(storage)
        blob["total_bytes"] = storage.total_bytes
        path.write_text(json.dumps(blob, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        written.append(path)
    if ops is not None:
        path = out_dir / "opcounts.json"
        blob = {name: asdict(count) for name, count in ops.items()}
        path.write_text(json.dumps(blob, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        written.append(path)
    return written


def _render_svg(curves: list[RecallCurve]) -> str:
    width, height = 640, 440
    left, right, top, bottom = 60, 200, 20, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    max_radius = max(max(c.radii) for c in curves) or 1

    def sx(radius: float) -> float:
        return left + plot_w * radius / max_radius

    def sy(recall: float) -> float:
        return top + plot_h * (1.0 - recall)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        'fill="white" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(frac)
        parts.append(
            f'<line x1="{left}" y1="{y:.2f}" x2="{left + plot_w}" y2="{y:.2f}" '
            'stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" '
            f'text-anchor="end">{frac:.2f}</text>'
        )
    for radius in range(0, max_radius + 1, max(1, max_radius // 5)):
        x = sx(radius)
        parts.append(
            f'<text x="{x:.2f}" y="{top + plot_h + 16}" font-size="11" '
            f'text-anchor="middle">{radius}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 12}" font-size="12" '
        'text-anchor="middle">localization radius (frames)</text>'
    )
    for i, curve in enumerate(curves):
        color = _SVG_PALETTE[i % len(_SVG_PALETTE)]
        points = " ".join(
            f"{sx(r):.2f},{sy(v):.2f}" for r, v in zip(curve.radii, curve.recall)
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = top + 14 + 16 * i
        parts.append(
            f'<line x1="{left + plot_w + 10}" y1="{ly - 4}" x2="{left + plot_w + 30}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{left + plot_w + 34}" y="{ly}" font-size="11">{curve.label()}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
