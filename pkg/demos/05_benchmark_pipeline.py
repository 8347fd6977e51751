"""Ordinal-pair benchmark construction and scoring.

Samples pixel pairs from per-mask keypoints, lets a four-model panel vote
(votes only count when a model's own depth ratio exceeds 3), auto-labels
unanimous pairs, queues disagreements, and finally scores models by pair
accuracy per scenario.
"""

import numpy as np

from depthlab import (
    FakeKind,
    ImageInfo,
    Keypoint,
    VotingConfig,
    build_benchmark,
    fake_model,
    pair_accuracy,
    random_scene,
    render_depth,
)
from depthlab.benchmark import SCENARIO_TAGS, TAXONOMY, format_accuracy
from depthlab.synthgen import render_index

print("the eight evaluation scenarios and a few of their search keywords:")
for tag in SCENARIO_TAGS:
    kws = TAXONOMY.keywords(tag)
    print(f"  {TAXONOMY.display(tag):>22}: {', '.join(kws[:4])}, ... ({len(kws)} total)")
print()

rng = np.random.default_rng(0)
images, keypoints, gts = [], {}, {}
for i in range(4):
    spec = random_scene(40 + i, width=72, height=72)
    image_id = f"img{i}"
    gts[image_id] = render_depth(spec)
    index = render_index(spec)
    kps = []
    for prim in np.unique(index):
        if prim < 0:
            continue
        ys, xs = np.nonzero(index == prim)
        for c in rng.choice(xs.size, size=min(3, xs.size), replace=False):
            kps.append(Keypoint(int(xs[c]), int(ys[c]), f"prim{prim}"))
    keypoints[image_id] = kps
    images.append(ImageInfo(image_id, f"{image_id}.png", SCENARIO_TAGS[i % 8]))

panel = {
    "identity": {im: fake_model(gt, FakeKind.IDENTITY) for im, gt in gts.items()},
    "affine": {im: fake_model(gt, FakeKind.AFFINE, a=2.0, b=0.1) for im, gt in gts.items()},
    "gamma2": {im: fake_model(gt, FakeKind.MONOTONE, gamma=2.0) for im, gt in gts.items()},
    "sqrt": {im: fake_model(gt, FakeKind.MONOTONE, gamma=0.5) for im, gt in gts.items()},
}

build = build_benchmark(images, keypoints, panel, [], VotingConfig(), per_image_pairs=6, seed=1)
print(f"sampled {len(build.votes)} pairs -> {len(build.manifest.labeled())} auto-labeled, "
      f"{len(build.manifest.queued())} queued, {len(build.dropped)} dropped by the ratio gate\n")

candidates = {
    "identity": panel["identity"],
    "noisy": {im: fake_model(gt, FakeKind.NOISY, sigma=0.15, seed=9) for im, gt in gts.items()},
    "inverted": {im: fake_model(gt, FakeKind.INVERTED) for im, gt in gts.items()},
}
for name, maps in candidates.items():
    report = pair_accuracy(maps, build.manifest)
    print(format_accuracy(report, model_tag=name))
