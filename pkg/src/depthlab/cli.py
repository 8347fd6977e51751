"""Command-line entry point.

Subcommands: eval, curate, build-benchmark, score-pairs, serve-annotation,
synth-gen.  Exit codes: 0 success, 2 configuration error, 3 data error,
4 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from . import benchmark as bm
from . import config as cfgmod
from . import synthgen
from .annotation import AnnotationService
from .curation import CurationConfig, curate_dataset
from .depthio import (
    DatasetRole,
    ManifestEntry,
    PredictionManifest,
    load_manifest,
    save_depth,
)
from .errors import ConfigError, DepthlabError
from .metrics import (
    compare_label_sources,
    evaluate_dataset,
    format_comparison,
    format_report,
    report_to_json,
)

log = logging.getLogger("depthlab")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="depthlab",
        description="Depth alignment, losses, curation, evaluation, and ordinal benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="zero-shot relative depth evaluation")
    _add_common(p)
    p.add_argument("--pred", required=True, help="prediction manifest (JSONL)")
    p.add_argument("--gt", required=True, help="ground-truth manifest (JSONL)")
    p.add_argument("--pred-b", help="second prediction manifest for a side-by-side comparison")
    p.add_argument("--alignment", choices=["lsq", "robust"])
    p.add_argument("--space", choices=["inv", "depth"])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--allow-skips", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("curate", help="mask top-loss regions of pseudo labels")
    _add_common(p)
    p.add_argument("--pred", required=True, help="teacher prediction manifest")
    p.add_argument("--gt", required=True, help="counterpart manifest (reference or student)")
    p.add_argument("--n-fraction", type=float, help="loss fraction to mask (default 0.10)")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("build-benchmark", help="sample pairs, vote, and queue disagreements")
    _add_common(p)
    p.add_argument("--images", required=True, help="image info JSONL (image_id, image, scenario)")
    p.add_argument("--keypoints", required=True, help="keypoint JSONL")
    p.add_argument("--models", required=True, nargs="+", help="model prediction manifests")
    p.add_argument("--manual", help="manual challenge pairs (benchmark JSONL)")
    p.add_argument("--ratio-threshold", type=float)
    p.add_argument("--pairs-per-image", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("score-pairs", help="ordinal pair accuracy of one model")
    _add_common(p)
    p.add_argument("--pred", required=True, help="model prediction manifest")
    p.add_argument("--benchmark", required=True, help="benchmark manifest (JSONL)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve-annotation", help="run the annotation HTTP service")
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--benchmark", required=True, help="benchmark manifest with queued pairs")
    p.add_argument("--images", required=True, help="image info JSONL")
    p.add_argument("--log", required=True, help="append-only event log path")
    p.add_argument("--annotators", required=True, help="comma-separated annotator ids")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--lease-seconds", type=float, default=600.0)
    p.add_argument("--ui-dir", help="directory with the built annotation UI")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth-gen", help="render synthetic scenes, labels, and fake models")
    _add_common(p)
    p.add_argument("--scene", help="scene TOML file (default: random scenes)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images", type=int, default=3, help="number of random scenes")
    p.add_argument("--size", type=int, default=64, help="square resolution of random scenes")
    p.add_argument(
        "--models",
        default="identity,affine,monotone:2,monotone:0.5",
        help="comma-separated fake models: identity | affine[:a:b] | "
        "monotone[:gamma] | noisy[:sigma] | inverted",
    )
    p.add_argument("--keypoints-per-mask", type=int, default=2)
    p.set_defaults(func=cmd_synth)

    return parser


# ---------------------------------------------------------------------------
# Subcommands

def _load_cfg(args):
    return cfgmod.load_config(getattr(args, "config", None))


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)["eval"]
    if args.alignment:
        cfg.alignment = cfgmod.ALIGNMENT_NAMES[args.alignment]
    if args.space:
        cfg.space = cfgmod.SPACE_NAMES[args.space]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    preds = load_manifest(args.pred)
    gts = load_manifest(args.gt, dataset_role=DatasetRole.GROUND_TRUTH)
    if args.pred_b:
        preds_b = load_manifest(args.pred_b)
        cmp = compare_label_sources(preds, preds_b, gts, cfg, threads=args.threads)
        (out / "comparison.txt").write_text(format_comparison(cmp, cfg), encoding="utf-8")
        (out / "report.json").write_text(report_to_json(cmp.report_a), encoding="utf-8")
        (out / "report_b.json").write_text(report_to_json(cmp.report_b), encoding="utf-8")
        skipped = cmp.report_a.images_skipped + cmp.report_b.images_skipped
    else:
        report = evaluate_dataset(preds, gts, cfg, threads=args.threads)
        (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
        (out / "report.txt").write_text(
            format_report(report, cfg, source_tag=preds.source_tag), encoding="utf-8"
        )
        skipped = report.images_skipped
    if skipped and not args.allow_skips:
        log.error("%d image(s) skipped (degenerate fits); pass --allow-skips to tolerate", skipped)
        return 3
    return 0


def cmd_curate(args) -> int:
    cfg = _load_cfg(args)["curation"]
    if args.n_fraction is not None:
        cfg = CurationConfig(n=args.n_fraction, loss_kind=cfg.loss_kind)
    teacher = load_manifest(args.pred)
    counterpart = load_manifest(args.gt)
    curated, reports = curate_dataset(teacher, counterpart, cfg, args.out)
    log.info("curated %d image(s) into %s", len(reports), args.out)
    return 0


def cmd_benchmark(args) -> int:
    cfg = _load_cfg(args)["voting"]
    if args.ratio_threshold is not None:
        cfg = bm.VotingConfig(ratio_threshold=args.ratio_threshold, min_models=cfg.min_models)
    images = bm.load_image_infos(args.images)
    keypoints = bm.load_keypoints(args.keypoints)
    model_maps = {}
    for m in args.models:
        manifest = load_manifest(m)
        model_maps[manifest.source_tag] = {
            e.image_id: manifest.load_depth(e) for e in manifest
        }
    manual = list(bm.load_benchmark(args.manual)) if args.manual else []
    build = bm.build_benchmark(
        images,
        keypoints,
        model_maps,
        manual,
        cfg,
        per_image_pairs=args.pairs_per_image,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    build.manifest.save(out / "benchmark.jsonl")
    bm.BenchmarkManifest(build.manifest.queued()).save(out / "queue.jsonl")
    bm.BenchmarkManifest(build.dropped).save(out / "dropped.jsonl")
    return 0


def cmd_score(args) -> int:
    preds = load_manifest(args.pred)
    manifest = bm.load_benchmark(args.benchmark)
    report = bm.pair_accuracy(preds, manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "accuracy.json").write_text(
        json.dumps(
            {
                "mean_accuracy": report.mean_accuracy,
                "pairs_scored": report.pairs_scored,
                "per_scenario": report.per_scenario,
                "per_scenario_counts": report.per_scenario_counts,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    (out / "accuracy.txt").write_text(
        bm.format_accuracy(report, model_tag=preds.source_tag), encoding="utf-8"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    manifest = bm.load_benchmark(args.benchmark)
    images = bm.load_image_infos(args.images)
    images_root = Path(args.images).parent
    image_paths = {}
    for info in images:
        p = Path(info.path)
        image_paths[info.image_id] = str(p if p.is_absolute() else images_root / p)
    service = AnnotationService(log_path=args.log, lease_seconds=args.lease_seconds)
    service.enqueue(manifest.queued())
    for annotator in args.annotators.split(","):
        if annotator:
            service.register_annotator(annotator.strip())
    app = create_app(service, image_paths=image_paths, ui_dir=args.ui_dir)
    log.info("serving annotation queue on %s:%d", args.host, args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _parse_fake_model(token: str):
    """Parse one --models token into (tag, kind, kwargs)."""
    parts = token.split(":")
    try:
        kind = synthgen.FakeKind(parts[0])
    except ValueError:
        raise ConfigError(f"unknown fake model kind {parts[0]!r}") from None
    kwargs = {}
    try:
        if kind is synthgen.FakeKind.MONOTONE and len(parts) > 1:
            kwargs["gamma"] = float(parts[1])
        elif kind is synthgen.FakeKind.AFFINE and len(parts) > 2:
            kwargs["a"], kwargs["b"] = float(parts[1]), float(parts[2])
        elif kind is synthgen.FakeKind.NOISY and len(parts) > 1:
            kwargs["sigma"] = float(parts[1])
    except ValueError:
        raise ConfigError(f"bad fake model parameters in {token!r}") from None
    tag = token.replace(":", "_").replace(".", "p")
    return tag, kind, kwargs


def _scene_keypoints(spec, rng, per_mask: int):
    """Sample keypoints per primitive region from the analytic index map."""
    index = synthgen.render_index(spec)
    kps = []
    for prim_idx in np.unique(index):
        if prim_idx < 0:
            continue
        ys, xs = np.nonzero(index == prim_idx)
        take = min(per_mask, xs.size)
        chosen = rng.choice(xs.size, size=take, replace=False)
        for c in sorted(int(i) for i in chosen):
            kps.append(bm.Keypoint(int(xs[c]), int(ys[c]), f"prim{int(prim_idx)}"))
    return kps


def cmd_synth(args) -> int:
    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "gt").mkdir(exist_ok=True)
    models = [_parse_fake_model(tok) for tok in args.models.split(",") if tok]
    for tag, _, _ in models:
        (out / "models" / tag).mkdir(parents=True, exist_ok=True)

    if args.scene:
        specs = [synthgen.load_scene(args.scene)]
    else:
        specs = [
            synthgen.random_scene(args.seed + i, width=args.size, height=args.size)
            for i in range(args.images)
        ]

    rng = np.random.default_rng(args.seed)
    scenario_cycle = bm.SCENARIO_TAGS
    infos = []
    keypoints = {}
    gt_entries = []
    model_entries = {tag: [] for tag, _, _ in models}
    for i, spec in enumerate(specs):
        image_id = f"img{i:03d}"
        gt = synthgen.render_depth(spec)
        rgb = synthgen.render_rgb(spec)
        Image.fromarray(rgb).save(out / "images" / f"{image_id}.png")
        # RawF32 keeps the metric-depth kind; PFM would reload as inverse.
        save_depth(gt, out / "gt" / f"{image_id}.raw")
        gt_entries.append(
            ManifestEntry(image_id, f"images/{image_id}.png", f"gt/{image_id}.raw")
        )
        for tag, kind, kwargs in models:
            fake = synthgen.fake_model(gt, kind, seed=args.seed + i, **kwargs)
            rel = f"models/{tag}/{image_id}.pfm"
            save_depth(fake, out / rel)
            model_entries[tag].append(
                ManifestEntry(image_id, f"images/{image_id}.png", rel)
            )
        infos.append(
            bm.ImageInfo(image_id, f"images/{image_id}.png", scenario_cycle[i % len(scenario_cycle)])
        )
        keypoints[image_id] = _scene_keypoints(spec, rng, args.keypoints_per_mask)

    PredictionManifest(gt_entries, "gt", DatasetRole.GROUND_TRUTH, out).save(out / "gt.jsonl")
    for tag, _, _ in models:
        PredictionManifest(model_entries[tag], tag, DatasetRole.MODEL_PREDICTION, out).save(
            out / f"model_{tag}.jsonl"
        )
    bm.save_image_infos(infos, out / "images.jsonl")
    bm.save_keypoints(keypoints, out / "keypoints.jsonl")
    log.info("generated %d scene(s) under %s", len(specs), out)
    return 0


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"depthlab: config error: {e}", file=sys.stderr)
        return 2
    except DepthlabError as e:
        print(f"depthlab: data error: {e}", file=sys.stderr)
        return 3
    except Exception as e:  # pragma: no cover - defensive
        print(f"depthlab: internal error: {e!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
