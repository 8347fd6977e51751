"""Pseudo-label curation: drop the top-loss fraction of supervision.

Teacher predictions on unlabeled images carry local mistakes; before
training a student we mask the n largest-loss regions per image (n = 10%).
Here the "mistakes" are planted blobs, so we can watch curation find them.
"""

import tempfile
from pathlib import Path

import numpy as np

from depthlab import (
    CurationConfig,
    DatasetRole,
    DepthMap,
    LossKind,
    ManifestEntry,
    PredictionManifest,
    curate_dataset,
    load_manifest,
    mask_top_loss,
    save_depth,
)

rng = np.random.default_rng(7)

# Single-map view first: mask_top_loss on a synthetic loss field.
loss = rng.uniform(0, 0.2, (20, 20))
loss[4:8, 4:8] = 5.0  # a 16-pixel blob of bad supervision
mask = np.ones((20, 20), dtype=bool)
new_mask, report = mask_top_loss(loss, mask, CurationConfig(n=0.04))
print(f"valid before = {report.pixels_valid_before}, masked = {report.pixels_masked} "
      f"(floor of 4%), loss threshold = {report.loss_threshold:.3f}")
print(f"blob fully masked: {not new_mask[4:8, 4:8].any()}\n")

# Whole-dataset view: teacher manifests in, curated manifest + reports out.
root = Path(tempfile.mkdtemp(prefix="depthlab_curation_"))


def write_set(name, maps):
    d = root / name
    d.mkdir()
    entries = []
    for image_id, m in maps.items():
        save_depth(m, d / f"{image_id}.pfm")
        (d / f"{image_id}.png").write_bytes(b"")
        entries.append(ManifestEntry(image_id, f"{image_id}.png", f"{image_id}.pfm"))
    manifest = PredictionManifest(entries, name, DatasetRole.MODEL_PREDICTION, d)
    manifest.save(d / "manifest.jsonl")
    return manifest


teacher_maps, reference_maps = {}, {}
for i in range(3):
    base = rng.uniform(0.5, 2.0, (32, 32)).astype(np.float32)
    noisy = base.copy()
    noisy[10 + i : 14 + i, 6:10] += 8.0  # planted teacher error
    valid = np.ones((32, 32), dtype=bool)
    teacher_maps[f"im{i}"] = DepthMap(noisy, valid)
    reference_maps[f"im{i}"] = DepthMap(base, valid)

teacher = write_set("teacher", teacher_maps)
reference = write_set("reference", reference_maps)
cfg = CurationConfig(n=0.10, loss_kind=LossKind.SSI_RESIDUAL)
curated, reports = curate_dataset(teacher, reference, cfg, root / "curated")

print(f"curated manifest at {root / 'curated' / 'curated.jsonl'}")
for r in reports:
    print(f"  {r.image_id}: masked {r.pixels_masked}/{r.pixels_valid_before} "
          f"pixels, threshold {r.loss_threshold:.4f}")

reloaded = load_manifest(root / "curated" / "curated.jsonl")
m0 = reloaded.load_depth(reloaded.entries[0])
planted = ~m0.valid[10:14, 6:10]
print(f"\nreloaded im0: {m0.valid_count} valid pixels; planted blob masked on reload: {planted.all()}")
