"""Depth file formats and prediction manifests.

Round-trips a random depth map through PFM, 16-bit PNG, and RawF32, then
builds a small manifest and reads it back.
"""

import tempfile
from pathlib import Path

import numpy as np

from depthlab import (
    DepthFormat,
    DepthKind,
    DepthMap,
    load_depth,
    load_manifest,
    save_depth,
)

out = Path(tempfile.mkdtemp(prefix="depthlab_demo_"))
print(f"writing to {out}\n")

rng = np.random.default_rng(0)
values = rng.uniform(0.5, 4.0, (48, 64)).astype(np.float32)
valid = rng.random((48, 64)) > 0.1
values[~valid] = np.nan
m = DepthMap(values, valid, DepthKind.METRIC_METERS)
print(f"original map: {m.width}x{m.height}, {m.valid_count} valid pixels")

for fmt in DepthFormat:
    path = out / f"depth.{fmt.value}"
    save_depth(m, path, fmt)
    back = load_depth(path, fmt)
    err = np.abs(back.values[valid] - m.values[valid]).max()
    print(f"{fmt.value:>7}: {path.stat().st_size:6d} bytes, "
          f"mask preserved = {np.array_equal(back.valid, valid)}, max |err| = {err:.3g}")

# PFM has no kind field and reloads as inverse-relative; RawF32 keeps it.
print("\nkind after reload:",
      {fmt.value: load_depth(out / f"depth.{fmt.value}", fmt).kind.value for fmt in DepthFormat})

manifest_path = out / "preds.jsonl"
lines = []
for i in range(3):
    save_depth(m, out / f"im{i}.raw")
    (out / f"im{i}.png").write_bytes(b"")
    lines.append('{"image_id": "im%d", "image": "im%d.png", "depth": "im%d.raw"}' % (i, i, i))
manifest_path.write_text("\n".join(lines) + "\n")

manifest = load_manifest(manifest_path)
print(f"\nmanifest '{manifest.source_tag}': {len(manifest)} entries, ids = {manifest.image_ids()}")
first = manifest.load_depth(manifest.entries[0])
print(f"first entry reloaded: {first.valid_count} valid pixels, kind = {first.kind.value}")
