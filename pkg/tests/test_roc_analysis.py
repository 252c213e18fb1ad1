import math

import numpy as np
import pytest

from core.errors import EmptySample, InvalidParameter
from core.roc_analysis import (
    Z_95,
    auc_band,
    curve_to_csv,
    roc_auc,
    split_half_null_auc,
    trapezoid_area,
)


def brute_force_delong(h1, h0):
    h1 = np.asarray(h1, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    psi = (h1[:, None] > h0[None, :]) + 0.5 * (h1[:, None] == h0[None, :])
    v10 = psi.mean(axis=1)
    v01 = psi.mean(axis=0)
    var = (np.var(v10, ddof=1) if h1.size > 1 else 0.0) / h1.size
    var += (np.var(v01, ddof=1) if h0.size > 1 else 0.0) / h0.size
    return psi.mean(), math.sqrt(var)


def test_auc_example_with_ties():
    summary = roc_auc([3, 2, 1], [2, 1, 0])
    assert summary.auc == pytest.approx(7 / 9)
    assert (summary.n_h1, summary.n_h0) == (3, 3)


def test_perfect_and_reversed_separation():
    perfect = roc_auc([5, 6, 7], [1, 2, 3])
    assert perfect.auc == 1.0
    assert perfect.band == 'excellent'
    assert perfect.se == 0.0
    assert (perfect.ci_low, perfect.ci_high) == (1.0, 1.0)

    reversed_ = roc_auc([1, 2, 3], [5, 6, 7])
    assert reversed_.auc == 0.0
    assert reversed_.band == 'fail'


def test_all_ties_gives_half():
    assert roc_auc([2.0] * 5, [2.0] * 7).auc == pytest.approx(0.5)


def test_delong_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(20):
        h1 = rng.integers(0, 8, size=int(rng.integers(1, 30))).astype(float)
        h0 = rng.integers(0, 6, size=int(rng.integers(1, 30))).astype(float)
        summary = roc_auc(h1, h0)
        auc, se = brute_force_delong(h1, h0)
        assert summary.auc == pytest.approx(auc, abs=1e-12)
        assert summary.se == pytest.approx(se, abs=1e-12)
        assert summary.ci_low == pytest.approx(max(0.0, auc - Z_95 * se), abs=1e-12)
        assert summary.ci_high == pytest.approx(min(1.0, auc + Z_95 * se), abs=1e-12)


def test_curve_shape_and_area():
    rng = np.random.default_rng(2)
    h1 = np.round(rng.normal(1.0, 1.0, size=200), 1)
    h0 = np.round(rng.normal(0.0, 1.0, size=150), 1)
    summary = roc_auc(h1, h0)
    curve = summary.curve

    assert (curve[0].fpr, curve[0].tpr, curve[0].threshold) == (0.0, 0.0, math.inf)
    assert (curve[-1].fpr, curve[-1].tpr) == (1.0, 1.0)
    fpr = [p.fpr for p in curve]
    tpr = [p.tpr for p in curve]
    assert fpr == sorted(fpr) and tpr == sorted(tpr)
    assert trapezoid_area(curve) == pytest.approx(summary.auc, abs=1e-12)


def test_null_auc_is_near_half():
    rng = np.random.default_rng(3)
    summary = roc_auc(rng.normal(size=500), rng.normal(size=500))
    assert abs(summary.auc - 0.5) < 4 * summary.se
    assert summary.ci_low < summary.auc < summary.ci_high


@pytest.mark.parametrize('auc, band', [
    (0.0, 'fail'),
    (0.6, 'fail'),
    (0.6000001, 'poor'),
    (0.7, 'poor'),
    (0.75, 'fair'),
    (0.8, 'fair'),
    (0.9, 'good'),
    (0.95, 'excellent'),
    (1.0, 'excellent'),
])
def test_auc_bands(auc, band):
    assert auc_band(auc) == band


def test_auc_band_rejects_out_of_range():
    with pytest.raises(InvalidParameter):
        auc_band(1.2)


def test_invalid_samples():
    with pytest.raises(EmptySample):
        roc_auc([], [1.0])
    with pytest.raises(EmptySample):
        roc_auc([1.0], [])
    with pytest.raises(InvalidParameter):
        roc_auc([1.0, float('nan')], [0.5])


def test_single_value_samples_have_finite_interval():
    summary = roc_auc([1.0], [0.0, 2.0, 3.0])
    assert summary.auc == pytest.approx(1 / 3)
    assert np.isfinite(summary.se)


def test_split_half_null_auc():
    values = np.arange(11, dtype=float)
    summary = split_half_null_auc(values)
    assert (summary.n_h1, summary.n_h0) == (5, 5)
    assert summary.auc == 0.0
    with pytest.raises(EmptySample):
        split_half_null_auc([1.0])


def test_curve_to_csv():
    text = curve_to_csv(roc_auc([3, 2, 1], [2, 1, 0]))
    lines = text.splitlines()
    assert lines[0] == 'fpr,tpr,threshold'
    assert lines[1] == '0,0,inf'
    assert lines[-1] == '1,1,0'
    assert text.endswith('\n')
    assert len(lines) == 1 + 1 + 4


def test_auc_invariant_under_increasing_transform():
    rng = np.random.default_rng(21)
    h1 = np.round(rng.normal(0.4, 1.0, size=60), 1)
    h0 = np.round(rng.normal(0.0, 1.0, size=80), 1)
    original = roc_auc(h1, h0)
    for transform in (np.exp, lambda x: x ** 3 + 2 * x, np.arctan):
        transformed = roc_auc(transform(h1), transform(h0))
        assert transformed.auc == pytest.approx(original.auc, abs=1e-12)
        assert transformed.se == pytest.approx(original.se, abs=1e-12)


def test_swapping_samples_complements_auc():
    rng = np.random.default_rng(22)
    h1 = rng.integers(0, 6, size=40)
    h0 = rng.integers(0, 5, size=30)
    assert roc_auc(h1, h0).auc + roc_auc(h0, h1).auc == pytest.approx(1.0, abs=1e-12)
    assert roc_auc(h1, h0).se == pytest.approx(roc_auc(h0, h1).se, abs=1e-12)


def test_delong_se_shrinks_as_inverse_square_root():
    rng = np.random.default_rng(23)
    sizes = np.array([100, 200, 400, 800, 1600, 3200])
    ses = [roc_auc(rng.normal(0.5, 1.0, size=n), rng.normal(0.0, 1.0, size=n)).se for n in sizes]
    slope = np.polyfit(np.log(sizes), np.log(ses), 1)[0]
    assert -0.6 <= slope <= -0.4
