"""Pseudo-label curation: drop the highest-loss fraction of valid pixels.

For each teacher-labeled sample, the fraction n of valid pixels with the
largest per-pixel loss is masked out of supervision (n = 0.10 by default),
treating those regions as potentially noisy pseudo labels.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .depthio import PredictionManifest, ManifestEntry, DatasetRole, save_mask
from .errors import MissingCounterpart
from .losses import ssi_loss


class LossKind(enum.Enum):
    SSI_RESIDUAL = "ssi_residual"
    ABS_DIFF = "abs_diff"


@dataclass
class CurationConfig:
    n: float = 0.10
    loss_kind: LossKind = LossKind.SSI_RESIDUAL

    def __post_init__(self):
        if not (0.0 <= self.n < 1.0):
            raise ValueError("n must be in [0, 1)")


@dataclass
class CurationReport:
    image_id: str
    pixels_total: int
    pixels_valid_before: int
    pixels_masked: int
    loss_threshold: float | None


def mask_top_loss(loss_map, mask, cfg: CurationConfig, image_id: str = ""):
    """Invalidate the floor(n * valid) pixels with the largest loss.

    Ties at the cut are broken by row-major index: lower indices are retained
    first, so the masked set is deterministic and nests as n grows.
    Returns (new_mask, CurationReport).
    """
    loss_map = np.asarray(loss_map, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if loss_map.shape != mask.shape:
        raise ValueError(f"loss shape {loss_map.shape} != mask shape {mask.shape}")
    valid_idx = np.flatnonzero(mask.ravel())
    n_valid = valid_idx.size
    k = int(math.floor(cfg.n * n_valid))
    new_mask = mask.copy()
    threshold = None
    if k > 0:
        losses = loss_map.ravel()[valid_idx]
        # Ascending by (loss, index); the last k entries are masked, which
        # drops the highest indices among equal losses.
        order = np.lexsort((valid_idx, losses))
        doomed = valid_idx[order[n_valid - k :]]
        threshold = float(losses[order[n_valid - k]])
        new_mask.ravel()[doomed] = False
    report = CurationReport(
        image_id=image_id,
        pixels_total=int(mask.size),
        pixels_valid_before=n_valid,
        pixels_masked=k,
        loss_threshold=threshold,
    )
    return new_mask, report


def curate_dataset(
    teacher_preds: PredictionManifest,
    counterpart: PredictionManifest,
    cfg: CurationConfig,
    out_dir: str | Path,
):
    """Build a curated manifest whose mask files exclude top-loss regions.

    The per-pixel loss compares each teacher map against its counterpart
    (a reference or in-training prediction); both manifests must cover the
    same image ids.  Writes `curated.jsonl`, `curation_reports.jsonl`, and
    one mask PNG per image under out_dir; returns (manifest, reports).
    """
    teacher_ids = set(teacher_preds.image_ids())
    other_ids = set(counterpart.image_ids())
    for missing in sorted(teacher_ids ^ other_ids):
        raise MissingCounterpart(f"image_id {missing!r} present in only one manifest")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[ManifestEntry] = []
    reports: list[CurationReport] = []
    for e in teacher_preds:
        t_map = teacher_preds.load_depth(e)
        c_map = counterpart.load_depth(counterpart.entry(e.image_id))
        if t_map.values.shape != c_map.values.shape:
            raise MissingCounterpart(
                f"image_id {e.image_id!r}: shape {t_map.values.shape} vs {c_map.values.shape}"
            )
        joint = t_map.valid & c_map.valid
        if cfg.loss_kind is LossKind.SSI_RESIDUAL:
            _, loss_map = ssi_loss(t_map.values, c_map.values, joint)
        else:
            loss_map = np.where(joint, np.abs(t_map.values - c_map.values), 0.0)
        new_mask, report = mask_top_loss(loss_map, joint, cfg, image_id=e.image_id)
        mask_name = f"{e.image_id}_mask.png"
        save_mask(new_mask, out_dir / mask_name)
        entries.append(
            ManifestEntry(
                image_id=e.image_id,
                image=os.path.relpath(teacher_preds.image_path(e), out_dir),
                depth=os.path.relpath(teacher_preds.depth_path(e), out_dir),
                mask=mask_name,
            )
        )
        reports.append(report)

    curated = PredictionManifest(
        entries=entries,
        source_tag=f"{teacher_preds.source_tag}-curated",
        dataset_role=DatasetRole.PSEUDO_LABELED_REAL,
        root=out_dir,
    )
    curated.save(out_dir / "curated.jsonl")
    with open(out_dir / "curation_reports.jsonl", "w", encoding="utf-8") as f:
        for r in reports:
            f.write(json.dumps(asdict(r), sort_keys=True) + "\n")
    return curated, reports
