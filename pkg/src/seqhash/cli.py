"""Command-line entry point.

Subcommands wire the full pipeline: gen-data (recipe to descriptor files),
train (PCA + quantizer + index), query (match CSV for a query file) and
bench (paired proposed/baseline evaluation with reports).

Exit codes: 0 success, 2 input error, 3 data degeneracy, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset, hashindex, pipeline, quantizer, transform
from .errors import DegenerateInputError, FormatError, InvalidArgumentError
from .evaluation import emit_report

EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqhash",
        description="Coarse scalar-quantization hashing with sequence-resolved lookup.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a dataset from a recipe JSON")
    p.add_argument("--recipe", required=True, help="recipe JSON path")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train PCA, quantizer and index from references")
    p.add_argument("--refs", required=True, help="reference .desc file")
    p.add_argument("--d", type=int, default=15, help="projected dimensions")
    p.add_argument("--K", type=int, default=2, help="quantization bins per dimension")
    p.add_argument("--batch", type=int, default=0, help="PCA batch rows (0 = auto)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("query", help="match a query file against a trained index")
    p.add_argument("--index", required=True, help="directory written by train")
    p.add_argument("--queries", required=True, help="query .desc file")
    p.add_argument("--L", type=int, default=50, help="sequence length")
    p.add_argument("--stride", type=int, default=10, help="evaluate every stride-th frame")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("bench", help="paired evaluation driven by a config JSON")
    p.add_argument("--config", required=True, help="bench config JSON path")
    p.add_argument("--out", required=True, help="report directory")
    return parser


def cmd_gen_data(args) -> int:
    recipe = dataset.recipe_from_json(args.recipe)
    reference, query, nm = dataset.build_recipe(recipe)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset.save_descriptors(reference, out / "reference.desc")
    dataset.save_descriptors(query, out / "query.desc")
    noise = {"mean": nm.mean.tolist(), "std": nm.std.tolist(), "scale": nm.scale}
    (out / "noise.json").write_text(
        json.dumps(noise, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {reference.rows} reference and {query.rows} query rows to {out}")
    return 0


def cmd_train(args) -> int:
    refs = dataset.load_descriptors(args.refs)
    model, qz, idx, _ = pipeline.train_pipeline(
        refs, args.d, args.K, batch=args.batch, seed=args.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    transform.save_pca(model, out / "pca.bin")
    quantizer.save_quantizer(qz, out / "quantizer.bin")
    hashindex.save_index(idx, out / "index.bin")
    print(
        f"trained on {refs.rows} rows: d={args.d} K={args.K} "
        f"occupied={idx.occupied_count}"
    )
    return 0


def cmd_query(args) -> int:
    model = transform.load_pca(Path(args.index) / "pca.bin")
    qz = quantizer.load_quantizer(Path(args.index) / "quantizer.bin")
    idx = hashindex.load_index(Path(args.index) / "index.bin")
    queries = dataset.load_descriptors(args.queries)

    projected = transform.project(model, queries)
    digits = quantizer.quantize_batch(qz, projected.data.astype(np.float64))
    centers = pipeline.window_centers(queries.rows, args.L, args.stride)
    records = pipeline.evaluate_proposed(idx, qz, digits, args.L, centers)

    lines = ["query_index,truth,best,score,n_candidates,fallback,min_candidate_offset"]
    for r in records:
        lines.append(
            f"{r.query_index},{r.truth},{r.best},{r.score:.6f},"
            f"{r.n_candidates},{int(r.fallback)},{r.min_candidate_offset}"
        )
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"evaluated {len(records)} windows (L={args.L}) -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    with open(args.config, "r", encoding="utf-8") as f:
        cfg = json.load(f)
    for key in ("recipe", "d", "K", "L_values"):
        if key not in cfg:
            raise InvalidArgumentError(f"bench config is missing required field '{key}'")
    recipe = dataset.DatasetRecipe(**cfg["recipe"])
    result = pipeline.run_bench(
        recipe,
        d=int(cfg["d"]),
        K=int(cfg["K"]),
        L_values=[int(v) for v in cfg["L_values"]],
        stride=int(cfg.get("stride", 10)),
        systems=list(cfg.get("systems", ["proposed", "baseline"])),
        noise_scales=cfg.get("noise_scales"),
        dataset_label=str(cfg.get("dataset_label", "bench")),
    )
    written = emit_report(result.curves, result.storage, result.ops, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "query": cmd_query,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DegenerateInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InvalidArgumentError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
