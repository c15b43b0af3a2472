import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from wearable_eeg.artifacts import ArtifactMask, MaskConfig, compute_mask
from wearable_eeg.features import (CATEGORIES, FeatureMatrix, Rejected, WindowSpec,
                                   apply_standardizer, category_of, enumerate_windows,
                                   extract_features, feature_names, fit_standardizer, n_features,
                                   power_series, series_labels, window_features)
from wearable_eeg.recording import (DEFAULT_LAYOUT, ChannelLayout, EegRecording, SyntheticSpec,
                                    generate_synthetic)
from wearable_eeg.wavelet import BAND_NAMES, band_center_hz, decompose_recording, \
    physical_band_for_level

FS = 220.0
COLUMNS = feature_names()


def col(name):
    return COLUMNS.index(name)


# -- layout ----------------------------------------------------------------------


def test_feature_count_448():
    assert len(COLUMNS) == n_features() == 448
    counts = {c: sum(category_of(n) == c for n in COLUMNS) for c in CATEGORIES}
    assert counts == {"avgpow": 28, "varpow": 28, "hemidiff": 14, "corr": 378}
    assert round(100 * 31 / 448) == 7 and abs(31 / 448 - 0.0692) < 5e-4


def test_pooled_hemispheric_gives_441():
    names = feature_names(hemispheric="pooled")
    assert len(names) == n_features(hemispheric="pooled") == 441
    assert "hemidiff/L-R/Alpha" in names


def test_general_layout_formula():
    layout = ChannelLayout(("A", "B", "C"), (("A", "C"),))
    p = 21
    assert len(feature_names(layout)) == 2 * p + 7 + p * (p - 1) // 2


def test_canonical_order_and_grammar():
    assert COLUMNS[0] == "avgpow/T9/HH-Gamma"
    assert COLUMNS[27] == "avgpow/T10/Delta"
    assert COLUMNS[28] == "varpow/T9/HH-Gamma"
    assert COLUMNS[56:58] == ["hemidiff/FP1-FP2/HH-Gamma", "hemidiff/FP1-FP2/H-Gamma"]
    assert COLUMNS[63] == "hemidiff/T9-T10/HH-Gamma"
    assert COLUMNS[70] == "corr/T9.HH-Gamma__T9.H-Gamma"
    assert COLUMNS[-1] == "corr/T10.Theta__T10.Delta"
    assert feature_names() == COLUMNS
    # each unordered pair appears exactly once
    pairs = [frozenset(n[5:].split("__")) for n in COLUMNS if n.startswith("corr/")]
    assert len(set(pairs)) == len(pairs) == 378
    with pytest.raises(ValueError):
        category_of("bogus/x")


# -- windows ---------------------------------------------------------------------


@pytest.mark.parametrize("duration,window,starts", [
    (420, 120, [0, 60, 120, 180, 240, 300]),
    (120, 120, [0]),
    (10, 5, [0, 2.5, 5]),
])
def test_enumerate_windows(duration, window, starts):
    wins = enumerate_windows(int(duration * FS), FS, WindowSpec(window))
    assert [a / FS for a, _ in wins] == starts
    assert all(b - a == int(window * FS) for a, b in wins)


def test_window_spec_validation():
    assert WindowSpec(10).stride_s == 5
    for kwargs in ({"window_len_s": 0}, {"window_len_s": 5, "stride_s": 6},
                   {"window_len_s": 5, "min_valid_fraction": 0}):
        with pytest.raises(ValueError):
            WindowSpec(**kwargs)
    with pytest.raises(ValueError):
        enumerate_windows(100, FS, WindowSpec(1))


# -- power and window features ---------------------------------------------------


def test_power_series_definition(rng):
    assert power_series(np.array([[[1.0, -2.0, 3.0]]])).tolist() == [[1.0, 4.0, 9.0]]
    rec = EegRecording("S", "1", "Instructional", rng.normal(size=(4, 1000)))
    d = decompose_recording(rec)
    p = power_series(d)
    assert p.shape == (28, 1000) and np.all(p >= 0)
    assert np.allclose(p[:7].sum(), (d.series[0] ** 2).sum(), rtol=1e-12)
    zero = EegRecording("S", "1", "Instructional", np.zeros((4, 500)))
    assert not power_series(decompose_recording(zero)).any()


def test_fully_masked_window_rejected():
    p = np.ones((28, 100))
    mask = ArtifactMask(np.ones(100, dtype=bool), FS)
    out = window_features(p, mask, (0, 100))
    assert isinstance(out, Rejected) and out.valid_fraction == 0.0


def test_half_valid_threshold():
    p = np.random.default_rng(0).random((28, 100))
    flags = np.zeros(100, dtype=bool)
    flags[:51] = True
    assert isinstance(window_features(p, ArtifactMask(flags, FS), (0, 100)), Rejected)
    flags[50] = False
    assert not isinstance(window_features(p, ArtifactMask(flags, FS), (0, 100)), Rejected)


def test_identical_series_correlate_to_one(rng):
    p = rng.random((28, 200))
    p[5] = p[0]
    fv = window_features(p, ArtifactMask.empty(200, FS), (0, 200))
    assert fv.values[col("corr/T9.HH-Gamma__T9.Theta")] == pytest.approx(1.0, abs=1e-12)


def test_constant_series_correlation_is_zero(rng):
    p = rng.random((28, 200))
    p[3] = 2.5
    fv = window_features(p, ArtifactMask.empty(200, FS), (0, 200))
    assert fv.values[col("corr/T9.HH-Gamma__T9.Beta")] == 0.0
    assert fv.values[col("varpow/T9/Beta")] == 0.0


def test_hemispheric_difference_constants(rng):
    p = rng.random((28, 200))
    fp1, fp2 = DEFAULT_LAYOUT.index("FP1"), DEFAULT_LAYOUT.index("FP2")
    p[fp1 * 7:(fp1 + 1) * 7] = 4.0
    p[fp2 * 7:(fp2 + 1) * 7] = 1.0
    fv = window_features(p, ArtifactMask.empty(200, FS), (0, 200))
    for band in BAND_NAMES:
        assert fv.values[col(f"hemidiff/FP1-FP2/{band}")] == pytest.approx(3.0)


@given(st.integers(0, 2 ** 32 - 1))
def test_masked_samples_never_matter(seed):
    rng = np.random.default_rng(seed)
    p = rng.random((28, 150))
    flags = rng.random(150) < 0.3
    mask = ArtifactMask(flags, FS)
    a = window_features(p, mask, (0, 150))
    q = p.copy()
    q[:, flags] = rng.random((28, int(flags.sum()))) * 1e6
    b = window_features(q, mask, (0, 150))
    assert np.array_equal(a.values, b.values)


@given(st.integers(0, 2 ** 32 - 1))
def test_feature_ranges(seed):
    rng = np.random.default_rng(seed)
    fv = window_features(rng.random((28, 80)) ** 3, ArtifactMask.empty(80, FS), (0, 80))
    v = fv.values
    assert np.all(v[:56] >= 0)
    assert np.all(np.abs(v[70:]) <= 1.0)


def test_scaling_by_c(rng):
    rec = EegRecording("S", "1", "Instructional", rng.normal(0, 10, size=(4, int(60 * FS))))
    mask = ArtifactMask.empty(rec.n_samples, FS)
    spec = WindowSpec(30)
    base = extract_features(rec, mask, spec).values
    c = 2.5
    scaled = extract_features(rec.with_samples(c * rec.samples), mask, spec).values
    assert np.allclose(scaled[:, :28], c ** 2 * base[:, :28], rtol=1e-9, atol=0)
    assert np.allclose(scaled[:, 28:56], c ** 4 * base[:, 28:56], rtol=1e-9, atol=0)
    assert np.allclose(scaled[:, 56:70], c ** 2 * base[:, 56:70], rtol=1e-9, atol=1e-9)
    assert np.max(np.abs(scaled[:, 70:] - base[:, 70:])) <= 1e-9


# -- whole recordings ------------------------------------------------------------


def test_clean_recording_gives_six_rows():
    spec = SyntheticSpec(duration_s=420, band_power_profile={"FP1": {"Alpha": 10}},
                         noise_amplitude_uv=1.0, seed=2, subject_id="S09", session_id="2")
    rec = generate_synthetic(spec)
    mask = compute_mask(rec)
    assert mask.valid_fraction == 1.0
    log = {}
    fm = extract_features(rec, mask, WindowSpec(120), stats=log)
    assert fm.values.shape == (6, 448)
    assert fm.window_start_s.tolist() == [0, 60, 120, 180, 240, 300]
    assert set(fm.subject) == {"S09"} and set(fm.session) == {"2"}
    assert log["n_windows"] == 6 and log["n_rejected"] == 0


def test_fully_masked_recording_gives_empty_matrix():
    rec = EegRecording("S", "1", "Instructional", np.full((4, 2000), 300.0))
    mask = compute_mask(rec, MaskConfig())
    assert mask.valid_fraction == 0.0
    fm = extract_features(rec, mask, WindowSpec(2))
    assert fm.n_rows == 0 and fm.values.shape == (0, 448)


def _carrier_level(band):
    # DWT level whose physical passband holds the band's nominal centre frequency
    level = BAND_NAMES.index(band) + 1
    f = band_center_hz(level)
    for k in range(1, 8):
        lo, hi, _ = physical_band_for_level(k)
        if lo <= f < hi:
            return k
    raise AssertionError(f)


def test_coupling_moves_correlation_not_power():
    profile = {e: {"L-Gamma": 4, "Beta": 6, "Alpha": 10, "Theta": 8, "Delta": 6}
               for e in DEFAULT_LAYOUT.channel_names}
    pair = (("FP1", "Alpha"), ("FP2", "Alpha"))
    spec = WindowSpec(20)
    rows = {0.0: [], 0.9: []}
    for strength in rows:
        for i in range(50):
            rec = generate_synthetic(SyntheticSpec(
                duration_s=20, band_power_profile=profile,
                coupling_profile=((*pair, strength),), noise_amplitude_uv=1.0,
                seed=1000 * int(strength * 10) + i))
            rows[strength].append(extract_features(rec, ArtifactMask.empty(rec.n_samples, FS),
                                                   spec).values[0])
    a, b = np.array(rows[0.0]), np.array(rows[0.9])
    level = _carrier_level("Alpha")
    name = BAND_NAMES[level - 1]
    j = col(f"corr/FP1.{name}__FP2.{name}")
    assert stats.ttest_ind(a[:, j], b[:, j]).pvalue < 0.01
    assert b[:, j].mean() > a[:, j].mean() + 0.3
    pvals = stats.ttest_ind(a[:, :28], b[:, :28]).pvalue
    assert np.all(pvals > 0.01), pvals


# -- standardizer ----------------------------------------------------------------


def test_standardizer(rng):
    X = rng.normal(3.0, 2.0, size=(40, 5))
    X[:, 2] = 7.0
    s = fit_standardizer(X)
    Z = s.transform(X)
    ok = [0, 1, 3, 4]
    assert np.allclose(Z[:, ok].mean(axis=0), 0, atol=1e-9)
    assert np.allclose(Z[:, ok].std(axis=0), 1, atol=1e-9)
    assert not Z[:, 2].any()
    probe = s.mean + 2 * s.scale
    assert s.transform(probe[None, :])[0, 0] == pytest.approx(2.0, abs=1e-9)
    fm = FeatureMatrix(X, [f"c{i}" for i in range(5)])
    assert np.allclose(apply_standardizer(s, fm).values, Z)
    with pytest.raises(ValueError):
        fit_standardizer(np.zeros((0, 5)))


def test_matrix_helpers():
    cols = feature_names()
    a = FeatureMatrix(np.ones((2, 448)), cols, ["S1"] * 2, ["1"] * 2, ["Recreational"] * 2)
    b = FeatureMatrix(np.zeros((1, 448)), cols, ["S2"], ["2"], ["Instructional"])
    both = FeatureMatrix.concat([a, b])
    assert both.n_rows == 3 and both.y.tolist() == [1, 1, -1]
    assert both.recording_ids.tolist() == ["S1/1/Recreational"] * 2 + ["S2/2/Instructional"]
    assert FeatureMatrix.concat([], cols).n_rows == 0
    with pytest.raises(ValueError):
        FeatureMatrix(np.zeros((1, 2)), ["x", "x"])
    assert series_labels()[7] == ("FP1", "HH-Gamma")
