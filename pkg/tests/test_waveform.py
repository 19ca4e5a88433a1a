import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soundersim import waveform
from soundersim.errors import InvalidConfigError, InvalidRootError, UndefinedPaprError


def test_zadoff_chu_unit_magnitude():
    for n, u in [(819, 1), (839, 5), (64, 3)]:
        zc = waveform.zadoff_chu(n, u)
        np.testing.assert_allclose(np.abs(zc), 1.0, atol=1e-12)


def test_zadoff_chu_prime_length_ideal_autocorrelation():
    zc = waveform.zadoff_chu(839, 7)
    for shift in (1, 13, 400):
        corr = np.vdot(zc, np.roll(zc, shift))
        assert abs(corr) < 1e-9 * 839


def test_zadoff_chu_rejects_non_coprime_root():
    with pytest.raises(InvalidRootError):
        waveform.zadoff_chu(818, 2)
    with pytest.raises(InvalidRootError):
        waveform.zadoff_chu(100, 0)


@given(
    n=st.integers(min_value=2, max_value=512),
    u=st.integers(min_value=1, max_value=511),
)
@settings(max_examples=50, deadline=None)
def test_zadoff_chu_magnitude_property(n, u):
    if math.gcd(u % n or n, n) != 1 or not (1 <= u < n):
        return
    zc = waveform.zadoff_chu(n, u)
    np.testing.assert_allclose(np.abs(zc), 1.0, atol=1e-12)


def test_occupied_bins_even_count_extra_negative():
    # L=8, F=4: offsets {-2, -1, 0, +1} -> unshifted bins 6, 7, 0, 1
    np.testing.assert_array_equal(waveform.occupied_bins(8, 4), [6, 7, 0, 1])
    np.testing.assert_array_equal(waveform.occupied_bins(8, 3), [7, 0, 1])
    with pytest.raises(InvalidConfigError):
        waveform.occupied_bins(8, 9)


def test_build_tones_scenario1_layout():
    tones = waveform.build_tones(1024, 819, 1)
    assert tones.F == 819 and tones.L == 1024
    offsets = tones.baseband_offsets(500e6)
    assert offsets[0] == pytest.approx(-409 * 500e6 / 1024)
    assert offsets[-1] == pytest.approx(409 * 500e6 / 1024)
    assert np.all(np.diff(offsets) > 0)
    occ_mag = np.abs(tones.x[tones.occupied])
    np.testing.assert_allclose(occ_mag, 1.0, atol=1e-12)
    assert np.count_nonzero(tones.x) == 819


def test_synthesize_matches_direct_sum():
    tones = waveform.build_tones(64, 25, 1)
    w = waveform.synthesize(tones, 500e6)
    n = np.arange(64)
    direct = np.array(
        [np.sum(tones.x * np.exp(2j * np.pi * np.arange(64) * ni / 64)) / 64 for ni in n]
    )
    np.testing.assert_allclose(w.s, direct, atol=1e-12)
    # Parseval: energy of s is F / L
    assert np.sum(np.abs(w.s) ** 2) == pytest.approx(25 / 64)


def test_papr_scenario1_oracle():
    w = waveform.synthesize(waveform.build_tones(1024, 819, 1))
    assert waveform.papr(w) == pytest.approx(2.5667101952, abs=1e-6)
    assert waveform.papr(w, oversample=4) == pytest.approx(2.5667101952, abs=1e-6)


def test_papr_oversampling_never_decreases():
    w = waveform.synthesize(waveform.build_tones(128, 53, 3))
    p1 = waveform.papr(w, 1)
    p4 = waveform.papr(w, 4)
    assert p4 >= p1 - 1e-9


def test_papr_rejects_zero_waveform():
    w = waveform.TimeWaveform(s=np.zeros(16, dtype=complex), sample_rate=1.0)
    with pytest.raises(UndefinedPaprError):
        waveform.papr(w)


def test_tonespec_json_roundtrip():
    tones = waveform.build_tones(256, 101, 3)
    back = waveform.ToneSpec.from_json(tones.to_json())
    np.testing.assert_allclose(back.x, tones.x)
    np.testing.assert_array_equal(back.occupied, tones.occupied)
    assert back.zc_root == 3


def test_export_iq_int16(tmp_path):
    w = waveform.synthesize(waveform.build_tones(64, 25, 1))
    path = tmp_path / "wave.iq"
    waveform.export_iq_int16(w, path)
    raw = np.fromfile(path, dtype="<i2")
    assert raw.size == 128
    assert np.max(np.abs(raw)) == pytest.approx(0.9 * 32767, abs=1.0)


def test_export_iq_float64_roundtrip(tmp_path):
    w = waveform.synthesize(waveform.build_tones(64, 25, 1))
    path = tmp_path / "wave.f64"
    waveform.export_iq_float64(w, path)
    raw = np.fromfile(path, dtype="<f8")
    np.testing.assert_allclose(raw[0::2] + 1j * raw[1::2], w.s)
