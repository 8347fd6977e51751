"""Training objectives as deterministic evaluators.

Scores (prediction, reference, mask) triples with the scale-and-shift
invariant loss, the multi-scale gradient matching loss, their weighted
combination (1:2 by default), and the margin-gated feature alignment loss.
No gradients anywhere; this module scores, it does not train.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .alignment import normalize_map
from .errors import TooSmallForScales, ZeroVector


@dataclass
class LossConfig:
    ssi_weight: float = 1.0
    gm_weight: float = 2.0
    gm_scales: int = 4
    trim_fraction: float = 0.0
    feat_align_margin: float = 0.85

    def __post_init__(self):
        if self.ssi_weight < 0 or self.gm_weight < 0:
            raise ValueError("loss weights must be >= 0")
        if self.gm_scales < 1:
            raise ValueError("gm_scales must be >= 1")
        if not (0.0 <= self.trim_fraction < 1.0):
            raise ValueError("trim_fraction must be in [0, 1)")
        if not (-1.0 <= self.feat_align_margin <= 1.0):
            raise ValueError("feat_align_margin must be in [-1, 1]")


@dataclass
class LossReport:
    ssi: float
    gm_per_scale: list[float]
    gm: float
    total: float
    per_pixel: np.ndarray = field(repr=False)


def _normalized_residual(pred, ref, mask):
    mask = np.asarray(mask, dtype=bool)
    n_pred, _, _ = normalize_map(pred, mask)
    n_ref, _, _ = normalize_map(ref, mask)
    residual = np.where(mask, n_pred - n_ref, 0.0)
    return residual, mask


def ssi_loss(pred, ref, mask, cfg: LossConfig | None = None):
    """Scale-and-shift invariant loss.

    Both maps are normalized by their valid-pixel median and mean absolute
    deviation; the loss is the mean absolute difference of the normalized
    maps over valid pixels.  With trim_fraction > 0 the largest
    floor(fraction * count) residuals are excluded from the mean.

    Returns (loss, per_pixel) where per_pixel holds the untrimmed residual
    magnitudes (0 at invalid pixels).
    """
    cfg = cfg or LossConfig()
    residual, mask = _normalized_residual(pred, ref, mask)
    per_pixel = np.abs(residual)
    r = per_pixel[mask]
    if cfg.trim_fraction > 0:
        drop = int(math.floor(cfg.trim_fraction * r.size))
        if drop:
            r = np.sort(r)[: r.size - drop]
    return float(r.mean()), per_pixel


def _pool_half(residual, mask):
    """2x average-pool of a residual map and its mask.

    Coarse value = mean of the valid fine pixels in each 2x2 block; a coarse
    pixel is valid iff at least half of the real fine pixels it covers are
    valid (edge blocks cover fewer than 4).
    """
    h, w = residual.shape
    ph, pw = (h + 1) // 2 * 2, (w + 1) // 2 * 2
    r = np.zeros((ph, pw))
    r[:h, :w] = np.where(mask, residual, 0.0)
    m = np.zeros((ph, pw), dtype=np.int64)
    m[:h, :w] = mask
    cover = np.zeros((ph, pw), dtype=np.int64)
    cover[:h, :w] = 1

    def blocks(a):
        return a.reshape(ph // 2, 2, pw // 2, 2).sum(axis=(1, 3))

    cnt = blocks(m)
    total = blocks(cover)
    sums = blocks(r)
    out_mask = (2 * cnt >= total) & (cnt > 0)
    out = np.where(out_mask, sums / np.maximum(cnt, 1), 0.0)
    return out, out_mask


def _grad_term(residual, mask):
    """Sum of |forward difference| over sites where both pixels are valid,
    divided by the number of valid pixels."""
    valid_x = mask[:, 1:] & mask[:, :-1]
    valid_y = mask[1:, :] & mask[:-1, :]
    dx = np.abs(residual[:, 1:] - residual[:, :-1])[valid_x].sum()
    dy = np.abs(residual[1:, :] - residual[:-1, :])[valid_y].sum()
    n = int(mask.sum())
    return float((dx + dy) / n) if n else 0.0


def gradient_matching_loss(pred, ref, mask, cfg: LossConfig | None = None):
    """Multi-scale gradient matching loss on the normalized residual.

    The residual (normalized pred minus normalized ref) is scored at
    cfg.gm_scales resolutions, halving by average pooling between scales.
    Returns (sum over scales, per-scale list).
    """
    cfg = cfg or LossConfig()
    residual, m = _normalized_residual(pred, ref, mask)
    h, w = residual.shape
    factor = 2 ** (cfg.gm_scales - 1)
    if -(-h // factor) < 2 or -(-w // factor) < 2:
        raise TooSmallForScales(
            f"{h}x{w} map cannot support {cfg.gm_scales} gradient scales"
        )
    per_scale = []
    for k in range(cfg.gm_scales):
        if k:
            residual, m = _pool_half(residual, m)
        per_scale.append(_grad_term(residual, m))
    return float(sum(per_scale)), per_scale


def combined_loss(pred, ref, mask, cfg: LossConfig | None = None) -> LossReport:
    """Weighted combination: total = ssi_weight * ssi + gm_weight * gm."""
    cfg = cfg or LossConfig()
    ssi, per_pixel = ssi_loss(pred, ref, mask, cfg)
    gm, per_scale = gradient_matching_loss(pred, ref, mask, cfg)
    total = cfg.ssi_weight * ssi + cfg.gm_weight * gm
    return LossReport(ssi=ssi, gm_per_scale=per_scale, gm=gm, total=total, per_pixel=per_pixel)


def feature_alignment_loss(student_feats, teacher_feats, margin: float = 0.85) -> float:
    """Margin-gated cosine loss between two H x W x C feature maps.

    Positions whose cosine similarity already reaches `margin` contribute 0;
    the rest contribute 1 - cosine.  The result is the mean over all spatial
    positions.
    """
    s = np.asarray(student_feats, dtype=np.float64)
    t = np.asarray(teacher_feats, dtype=np.float64)
    if s.shape != t.shape or s.ndim != 3:
        raise ValueError(f"feature shapes must match and be H x W x C, got {s.shape} vs {t.shape}")
    s_norm = np.linalg.norm(s, axis=-1)
    t_norm = np.linalg.norm(t, axis=-1)
    if np.any(s_norm == 0) or np.any(t_norm == 0):
        pos = np.argwhere((s_norm == 0) | (t_norm == 0))[0]
        raise ZeroVector(f"zero feature vector at position {tuple(pos)}")
    cos = (s * t).sum(axis=-1) / (s_norm * t_norm)
    penalty = np.where(cos < margin, np.maximum(0.0, 1.0 - cos), 0.0)
    return float(penalty.mean())
