"""Affine alignment and the training losses.

Predictions come out of depth models only up to an unknown scale and shift,
so we first recover (s, t) against a reference, then score with the
scale-and-shift-invariant loss and the multi-scale gradient matching loss
(weighted 1:2 by default).
"""

import numpy as np

from depthlab import (
    LossConfig,
    combined_loss,
    fit_scale_shift_lsq,
    fit_scale_shift_robust,
    gradient_matching_loss,
    ssi_loss,
)

rng = np.random.default_rng(1)
h = w = 64
mask = np.ones((h, w), dtype=bool)

# A reference inverse-depth field with structure, and a prediction that is an
# affine transform of it plus light noise.
xx, yy = np.meshgrid(np.linspace(0, 1, w), np.linspace(0, 1, h))
ref = 0.3 + 0.7 * xx + 0.2 * np.sin(6 * yy)
pred = 2.5 * ref + 0.8 + rng.normal(0, 0.01, (h, w))

params = fit_scale_shift_lsq(pred, ref, mask)
print(f"least-squares fit of pred onto ref: s = {params.scale:.4f}, t = {params.shift:.4f}")
print("(the generating transform was ref -> 2.5*ref + 0.8, so s ~ 1/2.5, t ~ -0.8/2.5)\n")

robust = fit_scale_shift_robust(pred, ref, mask)
print(f"robust (median/meanAbsDev) fit:     s = {robust.scale:.4f}, t = {robust.shift:.4f}\n")

# The SSI loss is invariant to any positive affine remap of the prediction.
base, _ = ssi_loss(pred, ref, mask)
moved, _ = ssi_loss(10.0 * pred - 3.0, ref, mask)
print(f"ssi(pred)              = {base:.6f}")
print(f"ssi(10*pred - 3)       = {moved:.6f}   (invariant)\n")

# The gradient matching loss rewards sharp edges: blur a step edge and watch
# it grow while the SSI term barely moves.
edge = np.full((h, w), 1.0)
edge[:, w // 2:] = 2.0
for radius in (0, 1, 2, 4):
    if radius == 0:
        blurred = edge.copy()
    else:
        size = 2 * radius + 1
        kernel = np.ones(size) / size
        padded = np.pad(edge, radius, mode="edge")
        rows = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, padded)
        blurred = np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="valid"), 0, rows)
    gm, per_scale = gradient_matching_loss(blurred, edge, mask)
    print(f"blur radius {radius}: gm = {gm:.5f}   per-scale = {[f'{v:.5f}' for v in per_scale]}")

report = combined_loss(pred, ref, mask, LossConfig())
print(f"\ncombined loss: ssi = {report.ssi:.6f}, gm = {report.gm:.6f}, "
      f"total = {report.total:.6f}  (= ssi + 2*gm)")
