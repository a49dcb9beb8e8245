"""Command-line pipeline driver.

Subcommands: ``gen``, ``fit-codebook``, ``encode``, ``train``, ``predict``,
``evaluate``, ``sweep``, ``baseline``. Artifacts are JSON/CSV files written
deterministically (sorted keys, no timestamps), and each stage embeds the
sha256 of its upstream codebook file so mismatched chains are refused.

Exit codes: 0 success, 2 usage error, 3 data error, 4 artifact-chain mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import codebook as cb
from . import metrics, ordinal, pipeline, synthetic
from .errors import ConfigMismatch, DimensionMismatch, StatebagError
from .tracks import DatasetManifest, load_manifest, parse_track, save_manifest, write_track

logger = logging.getLogger(__name__)

HISTOGRAMS_VERSION = 1
PREDICTIONS_VERSION = 1


def _write_json(payload: dict, path) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _load_tracks(manifest_path, manifest: DatasetManifest, fps: float,
                 splits=None) -> dict:
    base = Path(manifest_path).parent
    out = {}
    for entry in manifest.entries:
        if splits is not None and entry.split not in splits:
            continue
        out[entry.video_id] = parse_track(base / entry.track_path, fps=fps,
                                          video_id=entry.video_id)
    return out


def _pipeline_config(args, **overrides) -> pipeline.PipelineConfig:
    fields = dict(
        segment_len=args.segment_len,
        codebook_size=args.codebook_size,
        blink_threshold=args.blink_threshold,
        normalize=args.normalize,
        backend=getattr(args, "backend", "rbf"),
        lam=getattr(args, "lam", 1.0),
        gamma=getattr(args, "gamma", 0.01),
        seed=args.seed,
    )
    fields.update(overrides)
    return pipeline.PipelineConfig(**fields)


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.config:
        cfg = synthetic.GeneratorConfig.from_json(args.config)
    else:
        cfg = synthetic.PRESETS[args.preset]()
    if args.num_videos:
        cfg.num_videos = args.num_videos
    if args.frames:
        cfg.frames_per_video = args.frames
    cfg.seed = args.seed
    tracks, manifest = synthetic.generate_dataset(cfg)
    out = Path(args.out)
    (out / "tracks").mkdir(parents=True, exist_ok=True)
    for track, entry in zip(tracks, manifest.entries):
        write_track(track, out / entry.track_path)
    save_manifest(manifest, out / "manifest.json")
    cfg.to_json(out / "generator_config.json")
    counts = {}
    for e in manifest.entries:
        counts[e.split] = counts.get(e.split, 0) + 1
    print(f"wrote {len(tracks)} tracks to {out} "
          f"(levels={manifest.num_levels}, splits={counts})")
    return 0


def cmd_fit_codebook(args) -> int:
    manifest = load_manifest(args.manifest)
    tracks = _load_tracks(args.manifest, manifest, args.fps, splits=("train",))
    config = _pipeline_config(args)
    tracks = pipeline.repair_all(tracks, config.max_invalid_fraction)
    features = pipeline.video_segment_features(tracks, config)
    segments = np.concatenate(list(features.values()), axis=0)
    book = cb.fit_codebook(segments, config.codebook_size, seed=config.seed,
                           config=config.codebook_config())
    cb.save_codebook(book, args.out)
    print(f"codebook: K={book.size} dims={book.dims} wcss={book.wcss:.6f} -> {args.out}")
    return 0


def cmd_encode(args) -> int:
    manifest = load_manifest(args.manifest)
    book = cb.load_codebook(args.codebook)
    config_from_book = book.config
    segment_len = int(config_from_book["segment_len"])
    blink_threshold = float(config_from_book["blink_threshold"])
    normalize = bool(config_from_book["normalize"])
    tracks = _load_tracks(args.manifest, manifest, args.fps)
    tracks = pipeline.repair_all(tracks)
    config = pipeline.PipelineConfig(segment_len=segment_len,
                                     blink_threshold=blink_threshold,
                                     normalize=normalize)
    features = pipeline.video_segment_features(tracks, config)
    histograms = pipeline.encode_videos(book, features, normalize)
    by_id = {e.video_id: e for e in manifest.entries}
    payload = {
        "version": HISTOGRAMS_VERSION,
        "codebook_hash": cb.file_hash(args.codebook),
        "K": book.size,
        "normalize": normalize,
        "num_levels": manifest.num_levels,
        "entries": [
            {"video_id": vid, "label": by_id[vid].label, "split": by_id[vid].split,
             "counts": np.asarray(counts).tolist()}
            for vid, counts in sorted(histograms.items())
        ],
    }
    _write_json(payload, args.out)
    if args.dump_segments:
        _dump_segments(features, args.dump_segments)
    print(f"encoded {len(histograms)} videos -> {args.out}")
    return 0


def _dump_segments(features: dict, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "segment_index"] + [f"f{i}" for i in range(49)])
        for vid in sorted(features):
            for idx, row in enumerate(features[vid]):
                writer.writerow([vid, idx] + [repr(float(v)) for v in row])


def _histogram_matrix(payload: dict, split: str | None):
    entries = [e for e in payload["entries"] if split is None or e["split"] == split]
    if not entries:
        raise StatebagError(f"no histograms in split {split!r}")
    h = np.array([e["counts"] for e in entries], dtype=np.float64)
    y = np.array([e["label"] for e in entries], dtype=np.int64)
    return h, y, [e["video_id"] for e in entries]


def cmd_train(args) -> int:
    payload = _read_json(args.histograms)
    codebook_hash = cb.file_hash(args.codebook)
    if payload["codebook_hash"] != codebook_hash:
        raise ConfigMismatch("histograms were encoded with a different codebook")
    h, y, _ = _histogram_matrix(payload, "train")
    model = ordinal.train_ordinal(
        h, ordinal.OrdinalLabels(int(payload["num_levels"]), y),
        backend=args.backend, lam=args.lam, gamma=args.gamma, seed=args.seed,
    )
    ordinal.save_model(model, args.out, codebook_hash=codebook_hash,
                       normalize=bool(payload["normalize"]))
    print(f"model: levels={model.num_levels} backend={model.backend} "
          f"classifiers={len(model.classifiers)} -> {args.out}")
    return 0


def _check_chain(model_meta: dict, payload: dict) -> None:
    if model_meta["codebook_hash"] != payload["codebook_hash"]:
        raise ConfigMismatch("model and histograms come from different codebooks")
    if model_meta["normalize"] != bool(payload["normalize"]):
        raise ConfigMismatch("model and histograms disagree on normalization")


def cmd_predict(args) -> int:
    payload = _read_json(args.histograms)
    model, meta = ordinal.load_model(args.model)
    _check_chain(meta, payload)
    h, _, vids = _histogram_matrix(payload, args.split)
    if h.shape[1] != model.input_dim:
        raise DimensionMismatch(
            f"model expects {model.input_dim}-bin histograms, got {h.shape[1]}")
    probs, levels = ordinal.predict_batch(model, h)
    out = {
        "version": PREDICTIONS_VERSION,
        "codebook_hash": payload["codebook_hash"],
        "entries": [
            {"video_id": vid, "level": int(level), "probabilities": list(map(float, p))}
            for vid, level, p in zip(vids, levels, probs)
        ],
    }
    _write_json(out, args.out)
    print(f"predicted {len(vids)} videos -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    payload = _read_json(args.histograms)
    model, meta = ordinal.load_model(args.model)
    _check_chain(meta, payload)
    h, y, _ = _histogram_matrix(payload, args.split)
    logger.info("evaluating split=%s only (n=%d)", args.split, len(y))
    _, levels = ordinal.predict_batch(model, h)
    result = metrics.evaluate(y, levels, int(payload["num_levels"]))
    out = {
        "dataset": Path(args.histograms).name,
        "config": {"split": args.split, "backend": model.backend,
                   "lambda": model.lam, "gamma": model.gamma,
                   "normalize": meta["normalize"]},
        "metrics": result.to_dict(),
        "confusion": result.confusion.tolist(),
    }
    _write_json(out, args.out)
    print(f"split={args.split} n={result.n} accuracy={result.accuracy:.4f}", end="")
    if result.num_levels == 2:
        print(f" precision={result.precision:.4f} recall={result.recall:.4f} "
              f"f1={result.f1:.4f}")
        print("csv:split,accuracy,precision,recall,f1")
        print(f"csv:{args.split},{result.accuracy:.6f},{result.precision:.6f},"
              f"{result.recall:.6f},{result.f1:.6f}")
    else:
        print()
        print("csv:split,accuracy")
        print(f"csv:{args.split},{result.accuracy:.6f}")
    return 0


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def cmd_sweep(args) -> int:
    segment_lens = _int_list(args.segment_lens)
    codebook_sizes = _int_list(args.codebook_sizes)
    backends = [tok for tok in args.backends.split(",") if tok.strip()]
    if not (segment_lens and codebook_sizes and backends):
        raise UsageError("sweep grid is empty")
    manifest = load_manifest(args.manifest)
    tracks = _load_tracks(args.manifest, manifest, args.fps)
    config = _pipeline_config(args, segment_len=segment_lens[0],
                              codebook_size=codebook_sizes[0], backend=backends[0])
    rows = pipeline.sweep(tracks, manifest, segment_lens, codebook_sizes, backends,
                          config=config, workers=args.workers)
    with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=pipeline.SWEEP_FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    selected = [r for r in rows if r["selected"]]
    if selected:
        r = selected[0]
        print(f"best cell by validation accuracy: segment_len={r['segment_len']} "
              f"K={r['codebook_size']} backend={r['backend']} "
              f"val={r['val_accuracy']} test={r['test_accuracy']}")
    print(f"wrote {len(rows)} sweep rows -> {args.out}")
    return 0


def cmd_baseline(args) -> int:
    manifest = load_manifest(args.manifest)
    tracks = _load_tracks(args.manifest, manifest, args.fps)
    config = pipeline.PipelineConfig(blink_threshold=args.blink_threshold,
                                     backend=args.backend, lam=args.lam,
                                     gamma=args.gamma, seed=args.seed)
    results = pipeline.run_functional_baseline(tracks, manifest, config)
    result = results[args.split]
    out = {
        "dataset": Path(args.manifest).name,
        "config": {"split": args.split, "backend": f"functional-baseline:{args.backend}",
                   "lambda": args.lam, "gamma": args.gamma,
                   "blink_threshold": args.blink_threshold},
        "metrics": result.to_dict(),
        "confusion": result.confusion.tolist(),
    }
    _write_json(out, args.out)
    print(f"baseline split={args.split} n={result.n} accuracy={result.accuracy:.4f}")
    return 0


class UsageError(Exception):
    pass


# -- parser ------------------------------------------------------------------------

def _add_common(parser, *, model_params=False, fps=True, seed=True):
    if fps:
        parser.add_argument("--fps", type=float, default=24.0,
                            help="frame rate metadata for parsed tracks")
    if seed:
        parser.add_argument("--seed", type=int, default=0)
    if model_params:
        parser.add_argument("--backend", choices=("linear", "rbf"), default="rbf")
        parser.add_argument("--lambda", dest="lam", type=float, default=1.0,
                            help="L2 regularization strength (1/C)")
        parser.add_argument("--gamma", type=float, default=0.01,
                            help="RBF kernel width")


def _add_segment_params(parser):
    parser.add_argument("--segment-len", type=int, default=200)
    parser.add_argument("--codebook-size", type=int, default=12)
    parser.add_argument("--blink-threshold", type=float, default=0.5)
    parser.add_argument("--normalize", action="store_true",
                        help="encode histograms as fractions instead of counts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statebag",
        description="Bag-of-states engagement classification pipeline",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--config", help="generator config JSON (overrides --preset)")
    p.add_argument("--preset", choices=sorted(synthetic.PRESETS), default="frequency")
    p.add_argument("--num-videos", type=int, default=0)
    p.add_argument("--frames", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_common(p, fps=False)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit-codebook", help="fit the state codebook on the train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_segment_params(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit_codebook)

    p = sub.add_parser("encode", help="encode videos as codeword histograms")
    p.add_argument("--manifest", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-segments", help="optional CSV dump of segment features")
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="train the ordinal classifier on train histograms")
    p.add_argument("--histograms", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--out", required=True)
    _add_common(p, model_params=True, fps=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict engagement levels for histograms")
    p.add_argument("--model", required=True)
    p.add_argument("--histograms", required=True)
    p.add_argument("--split", default=None, help="restrict to one split")
    p.add_argument("--out", required=True)
    _add_common(p, fps=False, seed=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate a model on one split")
    p.add_argument("--model", required=True)
    p.add_argument("--histograms", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True)
    _add_common(p, fps=False, seed=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid over segment length, codebook size, backend")
    p.add_argument("--manifest", required=True)
    p.add_argument("--segment-lens", required=True, help="comma list, e.g. 160,200,240")
    p.add_argument("--codebook-sizes", required=True, help="comma list, e.g. 2,8,12")
    p.add_argument("--backends", default="rbf", help="comma list from {linear,rbf}")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--blink-threshold", type=float, default=0.5)
    p.add_argument("--normalize", action="store_true")
    _add_common(p, model_params=True)
    p.set_defaults(func=cmd_sweep, segment_len=200, codebook_size=12)

    p = sub.add_parser("baseline", help="whole-video functional-feature baseline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True)
    p.add_argument("--blink-threshold", type=float, default=0.5)
    _add_common(p, model_params=True)
    p.set_defaults(func=cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except ConfigMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (StatebagError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
