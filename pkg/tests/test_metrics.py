import numpy as np
import pytest

from depthlab.depthio import DatasetRole, DepthKind, to_inverse
from depthlab.errors import MissingCounterpart
from depthlab.metrics import (
    AlignmentMethod,
    AlignmentSpace,
    EvalConfig,
    compare_label_sources,
    depth_metrics,
    evaluate_dataset,
    evaluate_image,
    format_report,
)
from tests import oracles
from tests.helpers import make_map, write_manifest


def random_scene_pair(rng, h=6, w=6, noise=0.02):
    gt = make_map(rng.uniform(0.5, 8.0, (h, w)), kind=DepthKind.METRIC_METERS)
    inv = 1.0 / gt.values.astype(np.float64)
    pred_vals = 1.7 * inv + 0.3 + rng.normal(0, noise, (h, w))
    mask = rng.random((h, w)) > 0.2
    pred = make_map(pred_vals, mask, DepthKind.INVERSE_RELATIVE)
    return pred, gt


def test_perfect_prediction_is_perfect():
    rng = np.random.default_rng(0)
    gt = make_map(rng.uniform(1, 9, (5, 5)), kind=DepthKind.METRIC_METERS)
    pred = to_inverse(gt)
    row = evaluate_image(pred, gt, EvalConfig())
    assert row.abs_rel == pytest.approx(0.0, abs=1e-7)
    assert row.delta1 == row.delta2 == row.delta3 == 1.0
    assert row.rmse == pytest.approx(0.0, abs=1e-6)


def test_alignment_invariance_row_identical():
    rng = np.random.default_rng(1)
    gt = make_map(rng.uniform(1, 9, (6, 6)), kind=DepthKind.METRIC_METERS)
    base_pred = to_inverse(gt)
    shifted = make_map(3.0 * base_pred.values + 5.0, base_pred.valid, dtype=np.float64)
    base = evaluate_image(base_pred, gt, EvalConfig())
    other = evaluate_image(shifted, gt, EvalConfig())
    for name in ("abs_rel", "delta1", "delta2", "delta3", "rmse", "rmse_log", "log10"):
        assert abs(getattr(base, name) - getattr(other, name)) < 1e-6


def test_toy_metric_arithmetic():
    vals = depth_metrics([1.1, 2.0, 4.0, 8.0], [1.0, 2.0, 4.0, 8.0])
    assert vals["abs_rel"] == pytest.approx(0.025, abs=1e-12)
    assert vals["delta1"] == 1.0  # max ratio 1.1 < 1.25


@pytest.mark.parametrize("alignment", ["lsq", "robust"])
@pytest.mark.parametrize("space", ["inv", "depth"])
def test_matches_scalar_oracle(alignment, space):
    rng = np.random.default_rng(2)
    cfg = EvalConfig(
        alignment=AlignmentMethod.LEAST_SQUARES if alignment == "lsq" else AlignmentMethod.ROBUST,
        space=AlignmentSpace.INVERSE_DEPTH if space == "inv" else AlignmentSpace.DEPTH,
    )
    for _ in range(20):
        pred, gt = random_scene_pair(rng)
        row = evaluate_image(pred, gt, cfg)
        want = oracles.evaluate_image_scalar(
            pred.values.tolist(),
            pred.valid.tolist(),
            False,
            gt.values.tolist(),
            gt.valid.tolist(),
            True,
            alignment=alignment,
            space=space,
        )
        for name in ("abs_rel", "delta1", "delta2", "delta3", "rmse", "rmse_log", "log10"):
            assert getattr(row, name) == pytest.approx(want[name], abs=1e-9), name
        assert row.valid_pixels == want["valid_pixels"]
        assert row.clamped_pixels == want["clamped_pixels"]


def test_delta_monotonicity():
    rng = np.random.default_rng(3)
    for _ in range(10):
        pred, gt = random_scene_pair(rng, noise=0.3)
        row = evaluate_image(pred, gt, EvalConfig())
        assert row.delta1 <= row.delta2 <= row.delta3
    base_small = evaluate_image(pred, gt, EvalConfig(delta_base=1.1)).delta1
    base_big = evaluate_image(pred, gt, EvalConfig(delta_base=1.5)).delta1
    assert base_small <= base_big


def test_clamped_pixels_counted():
    # A negative-leaning prediction drives some aligned inverse values <= 0,
    # which invert to junk and must be clamped, not dropped.
    gt = make_map([[1.0, 1.1, 8.0, 9.0]], kind=DepthKind.METRIC_METERS)
    pred = make_map([[2.0, 1.9, 0.01, 0.005]])
    row = evaluate_image(pred, gt, EvalConfig())
    want = oracles.evaluate_image_scalar(
        pred.values.tolist(), pred.valid.tolist(), False,
        gt.values.tolist(), gt.valid.tolist(), True,
    )
    assert row.clamped_pixels == want["clamped_pixels"]
    assert row.abs_rel == pytest.approx(want["abs_rel"], abs=1e-9)
    assert np.isfinite(row.rmse_log)


def test_min_max_depth_filtering():
    gt = make_map([[0.5, 2.0, 4.0, 90.0]], kind=DepthKind.METRIC_METERS)
    pred = to_inverse(gt)
    row = evaluate_image(pred, gt, EvalConfig(min_depth=1.0, max_depth=80.0))
    assert row.valid_pixels == 2


def test_dataset_identical_and_order_independent(tmp_path):
    rng = np.random.default_rng(4)
    gts, preds = {}, {}
    for i in range(3):
        gt = make_map(rng.uniform(1, 9, (5, 5)), kind=DepthKind.METRIC_METERS)
        gts[f"im{i}"] = gt
        preds[f"im{i}"] = to_inverse(gt)
    gt_manifest = write_manifest(tmp_path, "gt", gts, DatasetRole.GROUND_TRUTH)
    pred_manifest = write_manifest(tmp_path, "pred", preds)
    report = evaluate_dataset(pred_manifest, gt_manifest, EvalConfig())
    assert report.images_evaluated == 3 and report.images_skipped == 0
    assert report.abs_rel == pytest.approx(0.0, abs=1e-6)
    assert report.delta1 == 1.0

    reversed_manifest = write_manifest(tmp_path, "pred_rev", dict(reversed(list(preds.items()))))
    report_rev = evaluate_dataset(reversed_manifest, gt_manifest, EvalConfig())
    assert report_rev.abs_rel == report.abs_rel
    assert report_rev.delta1 == report.delta1


def test_dataset_mean_of_two_rows(tmp_path):
    rng = np.random.default_rng(5)
    gts, preds = {}, {}
    for i in range(2):
        pred, gt = random_scene_pair(rng, noise=0.1)
        gts[f"im{i}"] = gt
        preds[f"im{i}"] = pred
    gt_manifest = write_manifest(tmp_path, "gt", gts, DatasetRole.GROUND_TRUTH)
    pred_manifest = write_manifest(tmp_path, "pred", preds)
    report = evaluate_dataset(pred_manifest, gt_manifest, EvalConfig())
    rows = [
        evaluate_image(preds[f"im{i}"], gts[f"im{i}"], EvalConfig()) for i in range(2)
    ]
    # PFM storage is float32; reloading reproduces the in-memory rows exactly.
    assert report.abs_rel == pytest.approx((rows[0].abs_rel + rows[1].abs_rel) / 2, abs=1e-9)
    assert report.rmse == pytest.approx((rows[0].rmse + rows[1].rmse) / 2, abs=1e-9)


def test_dataset_counts_skipped(tmp_path):
    rng = np.random.default_rng(6)
    gt = make_map(rng.uniform(1, 9, (4, 4)), kind=DepthKind.METRIC_METERS)
    flat = make_map(np.full((4, 4), 2.0))  # constant: degenerate fit
    gt_manifest = write_manifest(tmp_path, "gt", {"a": gt, "b": gt}, DatasetRole.GROUND_TRUTH)
    pred_manifest = write_manifest(tmp_path, "pred", {"a": to_inverse(gt), "b": flat})
    report = evaluate_dataset(pred_manifest, gt_manifest, EvalConfig())
    assert report.images_evaluated == 1
    assert report.images_skipped == 1


def test_dataset_missing_counterpart(tmp_path):
    rng = np.random.default_rng(7)
    gt = make_map(rng.uniform(1, 9, (4, 4)), kind=DepthKind.METRIC_METERS)
    gt_manifest = write_manifest(tmp_path, "gt", {"a": gt}, DatasetRole.GROUND_TRUTH)
    pred_manifest = write_manifest(tmp_path, "pred", {"zzz": to_inverse(gt)})
    with pytest.raises(MissingCounterpart):
        evaluate_dataset(pred_manifest, gt_manifest, EvalConfig())


def test_pixel_pooled_aggregation(tmp_path):
    rng = np.random.default_rng(12)
    gts, preds = {}, {}
    sizes = {"small": (3, 3), "large": (9, 9)}
    for name, (h, w) in sizes.items():
        gt = make_map(rng.uniform(1, 9, (h, w)), kind=DepthKind.METRIC_METERS)
        inv = to_inverse(gt)
        gts[name] = gt
        preds[name] = make_map(inv.values + rng.normal(0, 0.1, (h, w)), inv.valid)
    gt_manifest = write_manifest(tmp_path, "gt", gts, DatasetRole.GROUND_TRUTH)
    pred_manifest = write_manifest(tmp_path, "pred", preds)

    per_image = evaluate_dataset(pred_manifest, gt_manifest, EvalConfig())
    pooled = evaluate_dataset(pred_manifest, gt_manifest, EvalConfig(pixel_pooled=True))
    rows = {r.image_id: r for r in per_image.per_image}
    n_small, n_large = rows["small"].valid_pixels, rows["large"].valid_pixels
    total = n_small + n_large
    expect = (n_small * rows["small"].abs_rel + n_large * rows["large"].abs_rel) / total
    assert pooled.abs_rel == pytest.approx(expect, abs=1e-12)
    expect_rmse = np.sqrt(
        (n_small * rows["small"].rmse ** 2 + n_large * rows["large"].rmse ** 2) / total
    )
    assert pooled.rmse == pytest.approx(expect_rmse, abs=1e-12)
    assert pooled.abs_rel != pytest.approx(per_image.abs_rel, abs=1e-9)


def test_profile_configs_ship_with_package(tmp_path):
    from importlib import resources

    from depthlab.config import load_config

    profile = resources.files("depthlab").joinpath("data/profiles/street.toml")
    cfg = load_config(str(profile))
    assert cfg["eval"].max_depth == 80.0
    profile = resources.files("depthlab").joinpath("data/profiles/indoor.toml")
    assert load_config(str(profile))["eval"].max_depth == 10.0


def test_threads_do_not_change_results(tmp_path):
    rng = np.random.default_rng(8)
    gts, preds = {}, {}
    for i in range(5):
        pred, gt = random_scene_pair(rng, noise=0.05)
        gts[f"im{i}"] = gt
        preds[f"im{i}"] = pred
    gt_manifest = write_manifest(tmp_path, "gt", gts, DatasetRole.GROUND_TRUTH)
    pred_manifest = write_manifest(tmp_path, "pred", preds)
    serial = evaluate_dataset(pred_manifest, gt_manifest, EvalConfig(), threads=1)
    parallel = evaluate_dataset(pred_manifest, gt_manifest, EvalConfig(), threads=4)
    assert serial.to_dict() == parallel.to_dict()


def test_compare_label_sources(tmp_path):
    rng = np.random.default_rng(9)
    gts, clean, noisy = {}, {}, {}
    for i in range(3):
        gt = make_map(rng.uniform(1, 9, (6, 6)), kind=DepthKind.METRIC_METERS)
        inv = to_inverse(gt)
        gts[f"im{i}"] = gt
        clean[f"im{i}"] = make_map(inv.values + rng.normal(0, 0.001, (6, 6)), inv.valid)
        noisy[f"im{i}"] = make_map(inv.values + rng.normal(0, 0.3, (6, 6)), inv.valid)
    gt_manifest = write_manifest(tmp_path, "gt", gts, DatasetRole.GROUND_TRUTH)
    clean_manifest = write_manifest(tmp_path, "clean", clean)
    noisy_manifest = write_manifest(tmp_path, "noisy", noisy)

    same = compare_label_sources(clean_manifest, clean_manifest, gt_manifest, EvalConfig())
    assert all(v == 0.0 for v in same.deltas().values())

    cmp = compare_label_sources(clean_manifest, noisy_manifest, gt_manifest, EvalConfig())
    deltas = cmp.deltas()
    for down in ("abs_rel", "rmse", "rmse_log", "log10"):
        assert deltas[down] < 0  # clean has lower error
    for up in ("delta1", "delta2", "delta3"):
        assert deltas[up] > 0  # clean has higher accuracy

    empty = write_manifest(tmp_path, "none", {})
    with pytest.raises(MissingCounterpart):
        compare_label_sources(empty, noisy_manifest, gt_manifest, EvalConfig())


def test_report_header_mentions_protocol(tmp_path):
    rng = np.random.default_rng(10)
    gt = make_map(rng.uniform(1, 9, (4, 4)), kind=DepthKind.METRIC_METERS)
    gt_manifest = write_manifest(tmp_path, "gt", {"a": gt}, DatasetRole.GROUND_TRUTH)
    pred_manifest = write_manifest(tmp_path, "pred", {"a": to_inverse(gt)})
    cfg = EvalConfig(alignment=AlignmentMethod.ROBUST)
    report = evaluate_dataset(pred_manifest, gt_manifest, cfg)
    text = format_report(report, cfg)
    assert "robust" in text
    assert "reference anchor" in text
    assert "0.074" in text  # documented anchor, never asserted against results
