import numpy as np
import pytest

from depthlab.alignment import (
    AlignmentParams,
    align,
    fit_scale_shift_lsq,
    fit_scale_shift_robust,
)
from depthlab.errors import DegenerateFit
from tests import oracles
from tests.helpers import make_map, random_pair


def test_lsq_identity():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    params = fit_scale_shift_lsq(pred, pred, np.ones((2, 2), dtype=bool))
    assert params.scale == pytest.approx(1.0, abs=1e-12)
    assert params.shift == pytest.approx(0.0, abs=1e-12)


def test_lsq_exact_affine():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    ref = 2.0 * pred + 3.0
    params = fit_scale_shift_lsq(pred, ref, np.ones((2, 2), dtype=bool))
    # Small integer sums: the normal equations are exact in float64.
    assert params.scale == 2.0
    assert params.shift == 3.0


def test_lsq_matches_scalar_and_grid_oracles():
    rng = np.random.default_rng(42)
    for _ in range(50):
        pred, ref, mask = random_pair(rng, 8, 8)
        params = fit_scale_shift_lsq(pred, ref, mask)
        s_o, t_o = oracles.fit_lsq_scalar(pred.tolist(), ref.tolist(), mask.tolist())
        assert params.scale == pytest.approx(s_o, abs=1e-10)
        assert params.shift == pytest.approx(t_o, abs=1e-10)
        s_g, t_g = oracles.fit_lsq_grid(pred, ref, mask)
        assert params.scale == pytest.approx(s_g, abs=1e-4)
        assert params.shift == pytest.approx(t_g, abs=1e-4)


def test_lsq_minimizes_sse_vs_grid():
    rng = np.random.default_rng(7)
    pred, ref, mask = random_pair(rng, 8, 8)
    params = fit_scale_shift_lsq(pred, ref, mask)
    best = oracles.sse(pred.tolist(), ref.tolist(), mask.tolist(), params.scale, params.shift)
    for ds in (-1e-3, 1e-3):
        for dt in (-1e-3, 1e-3):
            worse = oracles.sse(
                pred.tolist(), ref.tolist(), mask.tolist(), params.scale + ds, params.shift + dt
            )
            assert worse > best


def test_robust_identity():
    pred = np.array([[1.0, 2.0], [3.0, 5.0]])
    params = fit_scale_shift_robust(pred, pred, np.ones((2, 2), dtype=bool))
    assert params.scale == pytest.approx(1.0)
    assert params.shift == pytest.approx(0.0)


def test_robust_survives_pairing_contamination_lsq_does_not():
    # Clean affine data, then the extreme pred values are swapped between two
    # pixels.  The marginal statistics are untouched, so the robust fit
    # recovers (2, 3) exactly; least squares is dragged far off by the two
    # high-leverage off-line points.
    pred = np.arange(1.0, 10.0).reshape(3, 3)
    ref = 2.0 * pred + 3.0
    contaminated = pred.copy()
    contaminated[0, 0], contaminated[2, 2] = pred[2, 2], pred[0, 0]
    mask = np.ones((3, 3), dtype=bool)

    robust = fit_scale_shift_robust(contaminated, ref, mask)
    s_o, t_o = oracles.fit_robust_scalar(contaminated.tolist(), ref.tolist(), mask.tolist())
    assert robust.scale == pytest.approx(s_o, abs=1e-12)
    assert robust.shift == pytest.approx(t_o, abs=1e-12)
    assert robust.scale == pytest.approx(2.0, abs=1e-12)
    assert robust.shift == pytest.approx(3.0, abs=1e-12)

    lsq = fit_scale_shift_lsq(contaminated, ref, mask)
    assert abs(lsq.scale - 2.0) > 0.5


def test_robust_two_deviating_pixels():
    # All pixels equal except two; hand computation:
    # median(pred) = 5, meanAbsDev(pred) = (1 + 1)/9; ref = 2*pred + 3.
    pred = np.full((3, 3), 5.0)
    pred[0, 0], pred[2, 2] = 4.0, 6.0
    ref = 2.0 * pred + 3.0
    params = fit_scale_shift_robust(pred, ref, np.ones((3, 3), dtype=bool))
    assert params.scale == pytest.approx(2.0, abs=1e-12)
    assert params.shift == pytest.approx(3.0, abs=1e-12)


def test_robust_degenerate_zero_deviation():
    pred = np.full((2, 2), 7.0)
    ref = np.array([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(DegenerateFit):
        fit_scale_shift_robust(pred, ref, np.ones((2, 2), dtype=bool))


def test_lsq_degenerate_cases():
    ones = np.ones((2, 2), dtype=bool)
    with pytest.raises(DegenerateFit):
        fit_scale_shift_lsq(np.full((2, 2), 3.0), np.eye(2), ones)
    single = np.zeros((2, 2), dtype=bool)
    single[0, 0] = True
    with pytest.raises(DegenerateFit):
        fit_scale_shift_lsq(np.eye(2), np.eye(2), single)


def test_affine_equivariance():
    rng = np.random.default_rng(11)
    pred, ref, mask = random_pair(rng, 8, 8)
    base = fit_scale_shift_lsq(pred, ref, mask)
    for a, b in [(2.0, 1.0), (0.25, -3.0), (5.0, 0.0)]:
        shifted = fit_scale_shift_lsq(a * pred + b, ref, mask)
        assert shifted.scale == pytest.approx(base.scale / a, rel=1e-6)
        assert shifted.shift == pytest.approx(base.shift - base.scale * b / a, rel=1e-6, abs=1e-9)


def test_mask_sensitivity_bit_exact():
    rng = np.random.default_rng(13)
    pred, ref, mask = random_pair(rng, 8, 8)
    mask[0, 0] = False
    base_lsq = fit_scale_shift_lsq(pred, ref, mask)
    base_rob = fit_scale_shift_robust(pred, ref, mask)
    mutated = pred.copy()
    mutated[~mask] = 1e9
    assert fit_scale_shift_lsq(mutated, ref, mask) == base_lsq
    assert fit_scale_shift_robust(mutated, ref, mask) == base_rob


def test_align_identity_and_affine():
    m = make_map([[1.0, 2.0]])
    out = align(m, AlignmentParams(1.0, 0.0))
    np.testing.assert_array_equal(out.values, m.values)
    out = align(m, AlignmentParams(2.0, 3.0))
    np.testing.assert_array_equal(out.values, np.array([[5.0, 7.0]], dtype=np.float32))
    np.testing.assert_array_equal(out.valid, m.valid)


def test_align_after_fit_is_locally_optimal():
    rng = np.random.default_rng(17)
    pred, ref, mask = random_pair(rng, 8, 8)
    params = fit_scale_shift_lsq(pred, ref, mask)
    pred_map = make_map(pred, mask)
    aligned = align(pred_map, params)
    best = float(((aligned.values[mask] - ref[mask]) ** 2).sum())
    for eps_s in (-1e-3, 0.0, 1e-3):
        for eps_t in (-1e-3, 0.0, 1e-3):
            if eps_s == eps_t == 0.0:
                continue
            other = align(pred_map, AlignmentParams(params.scale + eps_s, params.shift + eps_t))
            sse = float(((other.values[mask] - ref[mask]) ** 2).sum())
            assert sse > best
