import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from soundersim import _refkernels, dsp, schedule, waveform
from soundersim.config import SounderConfig
from soundersim.errors import InvalidConfigError, TruncatedCaptureError
from tests.test_config import scenario1

try:
    from soundersim import _fastkernels
except ImportError:
    _fastkernels = None


def small_cfg(**overrides):
    base = dict(
        f_c=5.675e9, f_s=500e6, L=32, F=11, M=4, K=2, P=8, R=100,
        n_T=(1, 0), n_R=(0, 2), T_sw=0.0,
    )
    base.update(overrides)
    return SounderConfig(**base)


# -- framing ----------------------------------------------------------------

def test_frame_stream_scenario1_grouping():
    cfg = scenario1()
    plan = schedule.build_schedule(cfg)
    total = cfg.time_slots * cfg.slot_samples
    stream = np.zeros((total, 2), dtype=np.int16)
    groups = dsp.frame_stream(stream, cfg, plan, snapshots=1)
    assert len(groups) == 16
    assert all(g.frames.shape == (8, 1024, 2) for g in groups)


def test_frame_stream_offsets_and_snapshots():
    cfg = small_cfg()
    plan = schedule.build_schedule(cfg)
    per_snap = cfg.time_slots * cfg.slot_samples
    total = 2 * per_snap + (cfg.R - cfg.P)
    stream = np.arange(total, dtype=np.int64)
    groups = dsp.frame_stream(stream, cfg, plan, snapshots=2)
    assert len(groups) == 2 * len(plan.slots)
    first = groups[0]
    assert first.frames[0, 0] == cfg.P  # P discards before the first sample
    second_snap = groups[len(plan.slots)]
    assert second_snap.frames[0, 0] == per_snap + (cfg.R - cfg.P) + cfg.P


def test_frame_stream_underrun_returns_partial():
    cfg = small_cfg()
    plan = schedule.build_schedule(cfg)
    stream = np.zeros((cfg.slot_samples + 10, 2), dtype=np.int16)
    with pytest.raises(TruncatedCaptureError) as err:
        dsp.frame_stream(stream, cfg, plan, snapshots=1)
    assert len(err.value.partial) == 1


# -- block averaging --------------------------------------------------------

def test_block_average_known_values():
    frames = np.array([[[7, -9]], [[8, -8]], [[5, 3]]], dtype=np.int16)
    y, sat = dsp.block_average(frames, K=1)
    # (7>>1)+(8>>1)+(5>>1) = 9 ; (-9>>1)+(-8>>1)+(3>>1) = -8 (floor shifts)
    np.testing.assert_array_equal(y, [[9, -8]])
    assert sat == 0


def test_block_average_saturates_and_counts():
    frames = np.full((4, 1, 2), 32000, dtype=np.int16)
    y, sat = dsp.block_average(frames, K=0)
    np.testing.assert_array_equal(y, [[32767, 32767]])
    assert sat == 6  # adds 2..4 clip on both I and Q


def test_block_average_negative_saturation():
    frames = np.full((4, 1, 2), -32000, dtype=np.int16)
    y, sat = dsp.block_average(frames, K=0)
    np.testing.assert_array_equal(y, [[-32768, -32768]])
    assert sat == 6


def test_block_average_shape_check():
    with pytest.raises(InvalidConfigError):
        dsp.block_average(np.zeros((4, 8), dtype=np.int16), 1)


@given(
    frames=hnp.arrays(
        dtype=np.int16,
        shape=st.tuples(
            st.integers(1, 8), st.integers(1, 16), st.just(2)
        ),
        elements=st.integers(-32768, 32767),
    ),
    k=st.integers(0, 6),
)
@settings(max_examples=80, deadline=None)
def test_backends_bit_exact(frames, k):
    ref = _refkernels.block_average_i16(np.ascontiguousarray(frames), k)
    if _fastkernels is not None:
        fast = _fastkernels.block_average_i16(np.ascontiguousarray(frames), k)
        np.testing.assert_array_equal(ref[0], fast[0])
        assert ref[1] == fast[1]
    # model: saturating sum of floor-shifted addends
    acc = np.zeros(frames.shape[1:], dtype=np.int64)
    for m in range(frames.shape[0]):
        acc = np.clip(acc + (frames[m].astype(np.int64) >> k), -32768, 32767)
    np.testing.assert_array_equal(ref[0], acc.astype(np.int16))


# -- Doppler attenuation ----------------------------------------------------

def test_doppler_attenuation_closed_form_matches_sum():
    rng = np.random.default_rng(0)
    for _ in range(200):
        nu = rng.uniform(-50e3, 50e3)
        m = int(rng.integers(1, 65))
        length = int(rng.integers(16, 8192))
        t_s = 2e-9
        direct = np.mean(
            np.exp(2j * np.pi * nu * np.arange(1, m + 1) * length * t_s)
        )
        closed = dsp.doppler_attenuation(nu, m, length, t_s)
        assert abs(direct - closed) < 1e-12


def test_doppler_attenuation_null_and_unity():
    assert dsp.doppler_attenuation(0.0, 8, 1024, 2e-9) == pytest.approx(1.0)
    null = 1.0 / (8 * 1024 * 2e-9)
    assert abs(dsp.doppler_attenuation(null, 8, 1024, 2e-9)) < 1e-12


# -- quantization -----------------------------------------------------------

def test_quantize_known_codes():
    codes, clips = dsp.quantize(np.array([0.0 + 0.0j]), bits=4, full_scale=1.0)
    # mid-rise: level floor(0/0.125) = 0, left-aligned by 12 bits
    np.testing.assert_array_equal(codes, [[0, 0]])
    assert clips == 0
    codes, clips = dsp.quantize(np.array([0.3 - 0.3j]), bits=4, full_scale=1.0)
    assert codes[0, 0] == (2 << 12)
    assert codes[0, 1] == (-3 << 12)


def test_quantize_clips_at_full_scale():
    codes, clips = dsp.quantize(np.array([2.0 + 0.0j, -2.0 - 2.0j]), 4, 1.0)
    assert clips == 3
    assert codes[0, 0] == (7 << 12)
    assert codes[1, 0] == (-8 << 12)


def test_quantize_rejects_bad_bits():
    with pytest.raises(InvalidConfigError):
        dsp.quantize(np.zeros(4, dtype=complex), bits=1, full_scale=1.0)


def test_dequantize_roundtrip_error_bounded():
    rng = np.random.default_rng(3)
    x = (rng.uniform(-0.9, 0.9, 256) + 1j * rng.uniform(-0.9, 0.9, 256))
    codes, clips = dsp.quantize(x, bits=12, full_scale=1.0)
    assert clips == 0
    back = dsp.dequantize(codes, bits=12, full_scale=1.0)
    step = 1.0 / 2**11
    assert np.max(np.abs(back.real - x.real)) <= step / 2 + 1e-12
    assert np.max(np.abs(back.imag - x.imag)) <= step / 2 + 1e-12


def test_averaged_to_float_identical_frames():
    # noiseless repetition: averaging M identical frames must reproduce
    # the single-frame ADC reconstruction to within the shift truncation
    rng = np.random.default_rng(9)
    x = rng.uniform(-0.9, 0.9, 64) + 1j * rng.uniform(-0.9, 0.9, 64)
    codes, _ = dsp.quantize(x, bits=12, full_scale=1.0)
    frames = np.repeat(codes[None, :, :], 8, axis=0)
    y, sat = dsp.block_average(frames, K=3)
    assert sat == 0
    back = dsp.averaged_to_float(y, M=8, K=3, bits=12, full_scale=1.0)
    step = 1.0 / 2**11
    assert np.max(np.abs(back - x)) < step  # ADC step dominates


def test_averager_gain_white_noise():
    # the 9.03 dB SNR improvement for M = 8 (see acceptance suite for the
    # full-scale version)
    rng = np.random.default_rng(1)
    m, n = 8, 20000
    signal = 0.25 * np.ones(n)
    noisy = signal[None, :] + 0.02 * rng.standard_normal((m, n))
    codes = np.zeros((m, n, 2))
    frames = np.empty((m, n, 2), dtype=np.int16)
    for i in range(m):
        q, _ = dsp.quantize(noisy[i] + 0j, bits=14, full_scale=1.0)
        frames[i] = q
    y, _ = dsp.block_average(frames, K=3)
    avg = dsp.averaged_to_float(y, M=m, K=3, bits=14, full_scale=1.0).real
    err_in = np.var(noisy[0] - signal)
    err_out = np.var(avg - signal)
    gain_db = 10 * np.log10(err_in / err_out)
    assert gain_db == pytest.approx(9.03, abs=0.6)
