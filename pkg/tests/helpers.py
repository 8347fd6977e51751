"""Shared fixtures: random map generation and simple image ops."""

from __future__ import annotations

import numpy as np

from depthlab.depthio import (
    DatasetRole,
    DepthKind,
    DepthMap,
    ManifestEntry,
    PredictionManifest,
    save_depth,
)


def random_mask(rng, h, w, invalid_frac=0.3):
    mask = rng.random((h, w)) > invalid_frac
    while mask.sum() < 3:
        mask = rng.random((h, w)) > invalid_frac
    return mask


def random_pair(rng, h=8, w=8, invalid_frac=0.3, noise=0.1):
    """A (pred, ref, mask) triple with an affine-plus-noise relationship."""
    pred = rng.uniform(0.1, 5.0, (h, w))
    a = rng.uniform(0.5, 3.0)
    b = rng.uniform(-1.0, 1.0)
    ref = a * pred + b + rng.normal(0.0, noise, (h, w))
    return pred, ref, random_mask(rng, h, w, invalid_frac)


def make_map(values, mask=None, kind=DepthKind.INVERSE_RELATIVE, dtype=np.float32) -> DepthMap:
    values = np.asarray(values, dtype=dtype)
    if mask is None:
        mask = np.ones(values.shape, dtype=bool)
    v = values.copy()
    v[~np.asarray(mask, dtype=bool)] = np.nan
    return DepthMap(v, mask, kind)


def box_blur(arr, radius):
    """Separable box blur with edge clamping; test fixture only."""
    arr = np.asarray(arr, dtype=np.float64)
    size = 2 * radius + 1
    kernel = np.ones(size) / size
    padded = np.pad(arr, radius, mode="edge")
    rows = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, padded)
    cols = np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="valid"), 0, rows)
    return cols


def edge_scene(h=64, w=64, low=1.0, high=2.0):
    """Sharp vertical step edge used for gradient-loss direction checks."""
    ref = np.full((h, w), low)
    ref[:, w // 2 :] = high
    return ref


def write_manifest(root, name, maps, role=DatasetRole.MODEL_PREDICTION):
    """Write DepthMaps plus a manifest; `maps` is {image_id: DepthMap}.

    Metric maps go to RawF32 (PFM carries no kind field and reloads as
    inverse-relative); inverse maps go to PFM."""
    d = root / name
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for image_id, m in maps.items():
        ext = "raw" if m.kind is DepthKind.METRIC_METERS else "pfm"
        save_depth(m, d / f"{image_id}.{ext}")
        (d / f"{image_id}.png").write_bytes(b"")
        entries.append(ManifestEntry(image_id, f"{image_id}.png", f"{image_id}.{ext}"))
    manifest = PredictionManifest(entries, name, role, d)
    manifest.save(d / "manifest.jsonl")
    return manifest
