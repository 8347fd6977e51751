"""Zero-shot depth evaluation: per-image affine alignment, then AbsRel,
delta thresholds, RMSE, RMSE-log, and log10, averaged per image over a
dataset.

Dataset numbers are the unweighted mean of per-image rows (per-image
averaging, not pixel pooling).
"""

from __future__ import annotations

import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .alignment import fit_scale_shift_lsq, fit_scale_shift_robust
from .depthio import DepthKind, DepthMap, PredictionManifest, to_depth, to_inverse
from .errors import DegenerateFit, MissingCounterpart

# Published scores of large distilled models, shipped for report headers only;
# nothing in this toolkit reproduces or asserts them.
REFERENCE_ANCHORS = {
    "KITTI ViT-L": {"abs_rel": 0.074, "delta1": 0.946},
    "NYU-D ViT-L": {"abs_rel": 0.045, "delta1": 0.979},
}


class AlignmentMethod(enum.Enum):
    LEAST_SQUARES = "least_squares"
    ROBUST = "robust"


class AlignmentSpace(enum.Enum):
    INVERSE_DEPTH = "inverse_depth"
    DEPTH = "depth"


@dataclass
class EvalConfig:
    alignment: AlignmentMethod = AlignmentMethod.LEAST_SQUARES
    space: AlignmentSpace = AlignmentSpace.INVERSE_DEPTH
    delta_base: float = 1.25
    min_depth: float | None = None
    max_depth: float | None = None
    # Per-image averaging is the lineage protocol; pooling weights every
    # pixel equally across the dataset instead.
    pixel_pooled: bool = False

    def __post_init__(self):
        if self.delta_base <= 1:
            raise ValueError("delta_base must be > 1")
        if (
            self.min_depth is not None
            and self.max_depth is not None
            and not self.min_depth < self.max_depth
        ):
            raise ValueError("min_depth must be < max_depth")


@dataclass
class ImageRow:
    image_id: str
    abs_rel: float
    delta1: float
    delta2: float
    delta3: float
    rmse: float
    rmse_log: float
    log10: float
    valid_pixels: int
    clamped_pixels: int
    scale: float
    shift: float


@dataclass
class MetricReport:
    abs_rel: float
    delta1: float
    delta2: float
    delta3: float
    rmse: float
    rmse_log: float
    log10: float
    images_evaluated: int
    images_skipped: int
    per_image: list[ImageRow] = field(default_factory=list)

    METRIC_FIELDS = ("abs_rel", "delta1", "delta2", "delta3", "rmse", "rmse_log", "log10")

    def to_dict(self) -> dict:
        return asdict(self)


def _fit(pred, ref, mask, method: AlignmentMethod):
    if method is AlignmentMethod.ROBUST:
        return fit_scale_shift_robust(pred, ref, mask)
    return fit_scale_shift_lsq(pred, ref, mask)


def depth_metrics(estimated, reference, delta_base: float = 1.25) -> dict:
    """The six error measures over paired 1-D samples (already aligned,
    already positive)."""
    a = np.asarray(estimated, dtype=np.float64)
    d = np.asarray(reference, dtype=np.float64)
    ratio = np.maximum(a / d, d / a)
    return {
        "abs_rel": float(np.mean(np.abs(a - d) / d)),
        "delta1": float(np.mean(ratio < delta_base)),
        "delta2": float(np.mean(ratio < delta_base**2)),
        "delta3": float(np.mean(ratio < delta_base**3)),
        "rmse": float(np.sqrt(np.mean((a - d) ** 2))),
        "rmse_log": float(np.sqrt(np.mean((np.log(a) - np.log(d)) ** 2))),
        "log10": float(np.mean(np.abs(np.log10(a) - np.log10(d)))),
    }


def _in_space(m: DepthMap, space: AlignmentSpace) -> DepthMap:
    return to_inverse(m) if space is AlignmentSpace.INVERSE_DEPTH else to_depth(m)


def evaluate_image(pred: DepthMap, gt: DepthMap, cfg: EvalConfig, image_id: str = "") -> ImageRow:
    """Align pred onto gt, then score it in gt's native space.

    Alignment runs in cfg.space; the aligned values are converted back to
    gt's space (inverting when the spaces differ) before metrics.  Converted
    values that are non-positive or non-finite are clamped to (smallest
    positive valid gt value) * 1e-3 for every metric and counted in
    `clamped_pixels`, so no pixel is silently dropped.
    """
    if pred.values.shape != gt.values.shape:
        raise ValueError(f"shape mismatch: {pred.values.shape} vs {gt.values.shape}")
    gt_valid = gt.valid.copy()
    if cfg.min_depth is not None:
        gt_valid &= gt.values >= cfg.min_depth
    if cfg.max_depth is not None:
        gt_valid &= gt.values <= cfg.max_depth

    pred_w = _in_space(pred, cfg.space)
    gt_w = _in_space(gt, cfg.space)
    joint = pred_w.valid & gt_w.valid & gt_valid
    if int(joint.sum()) < 2:
        raise DegenerateFit(f"fewer than 2 jointly valid pixels for {image_id or 'image'}")

    p = pred_w.values[joint].astype(np.float64)
    g = gt_w.values[joint].astype(np.float64)
    params = _fit(p, g, np.ones(p.shape, dtype=bool), cfg.alignment)
    a = params.scale * p + params.shift

    d = gt.values[joint].astype(np.float64)
    native_is_inverse = gt.kind is DepthKind.INVERSE_RELATIVE
    aligned_is_inverse = cfg.space is AlignmentSpace.INVERSE_DEPTH
    if native_is_inverse != aligned_is_inverse:
        with np.errstate(divide="ignore", over="ignore"):
            a = np.where(a != 0.0, 1.0 / a, np.inf)

    positive_gt = d[d > 0]
    if positive_gt.size == 0:
        raise DegenerateFit(f"no positive reference values for {image_id or 'image'}")
    clamp = float(positive_gt.min()) * 1e-3
    bad = ~np.isfinite(a) | (a <= 0)
    a = np.where(bad, clamp, a)

    row = ImageRow(
        image_id=image_id,
        valid_pixels=int(joint.sum()),
        clamped_pixels=int(bad.sum()),
        scale=params.scale,
        shift=params.shift,
        **depth_metrics(a, d, cfg.delta_base),
    )
    return row


def _check_same_ids(a: PredictionManifest, b: PredictionManifest):
    only = set(a.image_ids()) ^ set(b.image_ids())
    if only:
        raise MissingCounterpart(
            f"image_id {sorted(only)[0]!r} present in only one manifest"
        )


def evaluate_dataset(
    preds: PredictionManifest,
    gts: PredictionManifest,
    cfg: EvalConfig,
    threads: int = 1,
) -> MetricReport:
    """Evaluate every image and average the per-image rows.

    Images whose fit degenerates are skipped and counted; aggregation is
    ordered by the prediction manifest, so results do not depend on thread
    scheduling.
    """
    _check_same_ids(preds, gts)

    def one(entry):
        pred = preds.load_depth(entry)
        gt = gts.load_depth(gts.entry(entry.image_id))
        try:
            return evaluate_image(pred, gt, cfg, image_id=entry.image_id)
        except DegenerateFit:
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, preds.entries))
    else:
        results = [one(e) for e in preds.entries]

    rows = [r for r in results if r is not None]
    skipped = len(results) - len(rows)
    if cfg.pixel_pooled and rows:
        weights = np.array([r.valid_pixels for r in rows], dtype=np.float64)
        weights /= weights.sum()

        def mean_of(name):
            # Per-image means are exact pixel averages, so the pixel-pooled
            # value is their count-weighted mean; the RMS metrics pool on the
            # squared quantities.
            vals = np.array([getattr(r, name) for r in rows])
            if name in ("rmse", "rmse_log"):
                return float(np.sqrt(np.dot(weights, vals**2)))
            return float(np.dot(weights, vals))

    else:

        def mean_of(name):
            return float(np.mean([getattr(r, name) for r in rows])) if rows else 0.0

    return MetricReport(
        abs_rel=mean_of("abs_rel"),
        delta1=mean_of("delta1"),
        delta2=mean_of("delta2"),
        delta3=mean_of("delta3"),
        rmse=mean_of("rmse"),
        rmse_log=mean_of("rmse_log"),
        log10=mean_of("log10"),
        images_evaluated=len(rows),
        images_skipped=skipped,
        per_image=rows,
    )


@dataclass
class ComparisonReport:
    report_a: MetricReport
    report_b: MetricReport
    tag_a: str
    tag_b: str

    def deltas(self) -> dict:
        return {
            name: getattr(self.report_a, name) - getattr(self.report_b, name)
            for name in MetricReport.METRIC_FIELDS
        }


def compare_label_sources(
    preds_a: PredictionManifest,
    preds_b: PredictionManifest,
    gts: PredictionManifest,
    cfg: EvalConfig,
    threads: int = 1,
) -> ComparisonReport:
    """Score two label sources against the same references, side by side."""
    _check_same_ids(preds_a, gts)
    _check_same_ids(preds_b, gts)
    return ComparisonReport(
        report_a=evaluate_dataset(preds_a, gts, cfg, threads=threads),
        report_b=evaluate_dataset(preds_b, gts, cfg, threads=threads),
        tag_a=preds_a.source_tag,
        tag_b=preds_b.source_tag,
    )


# ---------------------------------------------------------------------------
# Rendering

def _fmt_row(cells, widths):
    return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()


def format_report(report: MetricReport, cfg: EvalConfig, source_tag: str = "pred") -> str:
    """Aligned-column text table with the protocol line and reference anchors."""
    lines = [
        "# zero-shot relative depth evaluation",
        f"# alignment: {cfg.alignment.value} in {cfg.space.value} space;"
        f" delta base {cfg.delta_base}",
    ]
    for tag, vals in REFERENCE_ANCHORS.items():
        lines.append(
            f"# reference anchor ({tag}, not asserted): "
            f"abs_rel {vals['abs_rel']:.3f}  delta1 {vals['delta1']:.3f}"
        )
    header = ["source", "abs_rel", "d1", "d2", "d3", "rmse", "rmse_log", "log10", "imgs", "skip"]
    row = [
        source_tag,
        f"{report.abs_rel:.4f}",
        f"{report.delta1:.4f}",
        f"{report.delta2:.4f}",
        f"{report.delta3:.4f}",
        f"{report.rmse:.4f}",
        f"{report.rmse_log:.4f}",
        f"{report.log10:.4f}",
        str(report.images_evaluated),
        str(report.images_skipped),
    ]
    widths = [max(len(h), len(c)) for h, c in zip(header, row)]
    lines.append(_fmt_row(header, widths))
    lines.append(_fmt_row(row, widths))
    return "\n".join(lines) + "\n"


def format_comparison(cmp: ComparisonReport, cfg: EvalConfig) -> str:
    """Two label sources and their per-metric deltas in one table."""
    lines = [
        "# label-source comparison",
        f"# alignment: {cfg.alignment.value} in {cfg.space.value} space",
    ]
    header = ["source"] + list(MetricReport.METRIC_FIELDS)
    rows = []
    for tag, rep in ((cmp.tag_a, cmp.report_a), (cmp.tag_b, cmp.report_b)):
        rows.append([tag] + [f"{getattr(rep, m):.4f}" for m in MetricReport.METRIC_FIELDS])
    deltas = cmp.deltas()
    rows.append(["delta(a-b)"] + [f"{deltas[m]:+.4f}" for m in MetricReport.METRIC_FIELDS])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines.append(_fmt_row(header, widths))
    for r in rows:
        lines.append(_fmt_row(r, widths))
    return "\n".join(lines) + "\n"


def report_to_json(report: MetricReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
