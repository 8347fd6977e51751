"""Affine alignment of predicted inverse depth onto a reference.

Predictions are only defined up to an unknown positive scale and shift, so
every comparison starts by solving for the (scale, shift) pair that best maps
the prediction onto the reference over the jointly valid pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depthio import DepthMap
from .errors import DegenerateFit


@dataclass(frozen=True)
class AlignmentParams:
    scale: float
    shift: float


def _masked_f64(pred, ref, mask):
    pred = np.asarray(pred)
    ref = np.asarray(ref)
    mask = np.asarray(mask, dtype=bool)
    if pred.shape != ref.shape or pred.shape != mask.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.shape}, ref {ref.shape}, mask {mask.shape}"
        )
    # Accumulate in float64: float32 sums cancel catastrophically on large maps.
    return pred[mask].astype(np.float64), ref[mask].astype(np.float64)


def fit_scale_shift_lsq(pred, ref, mask) -> AlignmentParams:
    """Least-squares (s, t) minimizing sum over valid pixels of (s*pred + t - ref)^2.

    Solved by the 2x2 normal equations.  Raises DegenerateFit when fewer than
    2 valid pixels remain or the prediction is constant over them.
    """
    p, r = _masked_f64(pred, ref, mask)
    n = p.size
    if n < 2:
        raise DegenerateFit(f"need >= 2 valid pixels, have {n}")
    if p.min() == p.max():
        raise DegenerateFit("prediction is constant over valid pixels")
    # Centered form of the normal equations: same minimizer, but no
    # catastrophic cancellation between sum(p^2)*n and sum(p)^2.
    p_mean = float(p.mean())
    r_mean = float(r.mean())
    dp = p - p_mean
    sxx = float(np.dot(dp, dp))
    sxy = float(np.dot(dp, r - r_mean))
    if sxx <= 0:
        raise DegenerateFit("normal equations are singular")
    s = sxy / sxx
    t = r_mean - s * p_mean
    if not (np.isfinite(s) and np.isfinite(t)):
        raise DegenerateFit("fit produced non-finite parameters")
    return AlignmentParams(s, t)


def fit_scale_shift_robust(pred, ref, mask) -> AlignmentParams:
    """Median / mean-absolute-deviation fit.

    s = meanAbsDev(ref) / meanAbsDev(pred), deviations taken about the
    respective medians; t = median(ref) - s * median(pred).
    """
    p, r = _masked_f64(pred, ref, mask)
    if p.size < 2:
        raise DegenerateFit(f"need >= 2 valid pixels, have {p.size}")
    med_p = float(np.median(p))
    med_r = float(np.median(r))
    dev_p = float(np.mean(np.abs(p - med_p)))
    dev_r = float(np.mean(np.abs(r - med_r)))
    if dev_p == 0.0:
        raise DegenerateFit("prediction has zero deviation about its median")
    s = dev_r / dev_p
    t = med_r - s * med_p
    return AlignmentParams(s, t)


def align(pred: DepthMap, params: AlignmentParams) -> DepthMap:
    """Apply s*values + t at valid pixels; the mask is unchanged."""
    if not (np.isfinite(params.scale) and np.isfinite(params.shift)):
        raise ValueError(f"alignment params must be finite, got {params}")
    out = pred.values.copy()
    out[pred.valid] = params.scale * out[pred.valid] + params.shift
    return DepthMap(out, pred.valid.copy(), pred.kind)


def normalize_map(values, mask):
    """MiDaS-style normalization: subtract the valid-pixel median, divide by
    the valid-pixel mean absolute deviation.  Returns (normalized_f64, med, dev)."""
    v = np.asarray(values)[np.asarray(mask, dtype=bool)].astype(np.float64)
    if v.size < 2:
        raise DegenerateFit(f"need >= 2 valid pixels, have {v.size}")
    med = float(np.median(v))
    dev = float(np.mean(np.abs(v - med)))
    if dev == 0.0:
        raise DegenerateFit("zero deviation about the median")
    out = (np.asarray(values, dtype=np.float64) - med) / dev
    return out, med, dev
