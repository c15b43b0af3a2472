import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wearable_eeg.artifacts import (ArtifactMask, MaskConfig, amplitude_flags, combine,
                                    compute_mask, variance_flags)
from wearable_eeg.io import save_mask

FS = 220.0


def flagged_range(mask):
    idx = np.flatnonzero(mask.flags)
    return (int(idx[0]), int(idx[-1])) if idx.size else None


def test_spike_at_ten_seconds(make_recording):
    x = np.zeros(int(30 * FS))
    x[int(10 * FS)] = 500.0
    mask = amplitude_flags(make_recording(x), MaskConfig(amplitude_threshold_uv=200))
    assert mask.runs() == [(2090, 2420)]
    assert (2090 / FS, (2420 + 1) / FS) == pytest.approx((9.5, 11.0 + 1 / FS))
    assert 2090 / FS == pytest.approx(9.5) and 2420 / FS == pytest.approx(11.0)


def test_zero_recording_gives_empty_mask(make_recording):
    rec = make_recording(np.zeros(1000))
    assert not compute_mask(rec).flags.any()
    assert compute_mask(rec).valid_fraction == 1.0


def test_spike_at_first_sample_is_clamped(make_recording):
    x = np.zeros(2000)
    x[0] = -900.0
    assert amplitude_flags(make_recording(x)).runs() == [(0, 220)]


def test_spike_at_last_sample_is_clamped(make_recording):
    x = np.zeros(2000)
    x[-1] = 300.0
    assert amplitude_flags(make_recording(x)).runs() == [(1999 - 110, 1999)]


def test_exceedance_on_one_channel_flags_all(make_recording):
    x = np.zeros((4, 1500))
    x[3, 700] = 250.0
    rec = make_recording(x)
    assert amplitude_flags(rec).runs() == [(590, 920)]


def test_threshold_is_strict(make_recording):
    x = np.zeros(500)
    x[100] = 200.0
    assert not amplitude_flags(make_recording(x)).flags.any()


signals = arrays(np.float64, st.integers(50, 900),
                 elements=st.floats(-400, 400, allow_nan=False, width=32))


@given(signals, st.floats(10, 390), st.floats(10, 390))
def test_lower_threshold_never_unflags(x, t1, t2):
    from wearable_eeg.recording import EegRecording
    rec = EegRecording("S", "1", "Instructional", np.tile(x, (4, 1)))
    lo, hi = sorted((t1, t2))
    m_lo = amplitude_flags(rec, MaskConfig(amplitude_threshold_uv=lo))
    m_hi = amplitude_flags(rec, MaskConfig(amplitude_threshold_uv=hi))
    assert np.all(m_lo.flags | ~m_hi.flags)


@given(signals)
def test_sign_flip_invariance_and_union(x):
    from wearable_eeg.recording import EegRecording
    rec = EegRecording("S", "1", "Instructional", np.tile(x, (4, 1)))
    neg = rec.with_samples(-rec.samples)
    assert amplitude_flags(rec) == amplitude_flags(neg)
    a, v = amplitude_flags(rec), variance_flags(rec)
    assert np.array_equal(compute_mask(rec).flags, a.flags | v.flags)
    assert combine([a, v]) == compute_mask(rec)


@given(signals)
def test_runs_cover_pre_plus_post_unless_clamped(x):
    from wearable_eeg.recording import EegRecording
    rec = EegRecording("S", "1", "Instructional", np.tile(x, (4, 1)))
    mask = amplitude_flags(rec)
    n = len(mask)
    for a, b in mask.runs():
        if a > 0 and b < n - 1:
            assert b - a >= 330


def test_variance_constant_signal(make_recording):
    assert not variance_flags(make_recording(np.full(1000, 37.0))).flags.any()


def test_variance_square_wave_window(make_recording):
    x = np.zeros((4, int(5 * FS)))
    w = int(FS)
    x[2, 2 * w:3 * w] = np.where(np.arange(w) % 2 == 0, 100.0, -100.0)
    assert x[2, 2 * w:3 * w].var() == pytest.approx(10000.0)
    mask = variance_flags(make_recording(x), MaskConfig(variance_threshold_uv2=2500))
    assert mask.runs() == [(2 * w, 3 * w - 1)]


def test_variance_trailing_partial_window(make_recording):
    x = np.zeros(int(2.5 * FS))
    x[-50:] = np.where(np.arange(50) % 2 == 0, 100.0, -100.0)
    mask = variance_flags(make_recording(x))
    assert mask.runs() == [(440, x.size - 1)]


def test_variance_huge_threshold(make_recording, rng):
    rec = make_recording(rng.normal(0, 1e3, 1000))
    cfg = MaskConfig(variance_threshold_uv2=np.finfo(float).max)
    assert not variance_flags(rec, cfg).flags.any()


def test_combine_semantics():
    n = 30
    m = ArtifactMask(np.arange(n) % 3 == 0, FS)
    empty = ArtifactMask.empty(n, FS)
    assert combine([m, empty]) == m
    assert combine([m, m]) == m
    a = ArtifactMask((np.arange(n) >= 0) & (np.arange(n) <= 10), FS)
    b = ArtifactMask((np.arange(n) >= 5) & (np.arange(n) <= 20), FS)
    assert combine([a, b]).runs() == [(0, 20)]
    with pytest.raises(ValueError):
        combine([m, ArtifactMask.empty(n + 1, FS)])
    with pytest.raises(ValueError):
        combine([m, ArtifactMask.empty(n, 100.0)])


def test_valid_fraction():
    m = ArtifactMask([True, False, False, False], FS)
    assert m.valid_fraction == 0.75


@pytest.mark.parametrize("kwargs", [
    {"amplitude_threshold_uv": 0}, {"variance_threshold_uv2": -1},
    {"pre_flag_s": -0.1}, {"variance_window_s": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        MaskConfig(**kwargs)


def test_mask_export(tmp_path, make_recording):
    x = np.zeros(int(30 * FS))
    x[int(10 * FS)] = 500.0
    mask = amplitude_flags(make_recording(x))
    path, runs = save_mask(mask, tmp_path / "m.csv")
    lines = path.read_text().splitlines()
    assert lines[1] == "sample_index,flagged" and len(lines) == 2 + x.size
    run_lines = runs.read_text().splitlines()
    assert run_lines[1:] == ["start_s,end_s", "9.5,11.004545454545454"]
