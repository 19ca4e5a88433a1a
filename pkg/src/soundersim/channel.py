"""Forward model: specular multipath scenes to channel tensors and raw
sample streams.

A scene is an explicit list of paths; each path carries delay, Doppler,
departure/arrival angles and a 2x2 polarimetric gain matrix. The
frequency-domain entry for one measured channel is the superposition of
per-path terms: pattern products, hardware response, delay phase across
the absolute RF frequencies and Doppler phase at the measurement time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from soundersim.antenna import ChainArray, unit_direction, SPEED_OF_LIGHT
from soundersim.config import SounderConfig
from soundersim.dsp import quantize
from soundersim.errors import AliasingError, InvalidConfigError
from soundersim.schedule import ChannelPlan, TimestampMap
from soundersim.tensors import ChannelTensor, KIND_HARDWARE
from soundersim.waveform import ToneSpec


@dataclass(frozen=True)
class Mpc:
    """One specular multipath component."""

    tau: float          # delay (s)
    doppler: float      # Doppler frequency (Hz)
    aod_az: float       # azimuth AoD (rad), [-pi, pi)
    aod_el: float       # elevation AoD (rad), [0, pi] from zenith
    aoa_az: float
    aoa_el: float
    gain: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidConfigError(f"path delay must be >= 0, got {self.tau}")
        g = np.asarray(self.gain, dtype=complex)
        if g.shape != (2, 2) or not np.all(np.isfinite(g)):
            raise InvalidConfigError("polarimetric gain must be a finite 2x2 matrix")
        object.__setattr__(self, "gain", g)


def _noise_rng(seed: int, *indices: int) -> np.random.Generator:
    # counter-style seeding: reproducible for any evaluation order
    return np.random.default_rng([seed & 0xFFFFFFFF, *[i & 0xFFFFFFFF for i in indices]])


def _path_channel_gain(
    mpc: Mpc, tx_array: ChainArray, m_t: int, rx_array: ChainArray, m_r: int
) -> complex:
    """Pattern product a_R^T Gamma a_T for one path and port pair."""
    a_t = tx_array.responses[m_t].eval(mpc.aod_az, mpc.aod_el)
    a_r = rx_array.responses[m_r].eval(mpc.aoa_az, mpc.aoa_el)
    return complex(a_r @ mpc.gain @ a_t)


def _path_effective_delay(
    mpc: Mpc, tx_array: ChainArray, m_t: int, rx_array: ChainArray, m_r: int
) -> float:
    """Path delay minus the plane-wave advances at both elements."""
    u_t = unit_direction(mpc.aod_az, mpc.aod_el)
    u_r = unit_direction(mpc.aoa_az, mpc.aoa_el)
    adv = (tx_array.positions[m_t] @ u_t + rx_array.positions[m_r] @ u_r) / SPEED_OF_LIGHT
    return mpc.tau - adv


def channel_response(
    mpcs: list[Mpc],
    tx_array: ChainArray,
    m_t: int,
    rx_array: ChainArray,
    m_r: int,
    freqs: np.ndarray,
    times: np.ndarray,
) -> np.ndarray:
    """Noiseless response for one port pair: shape (len(times), len(freqs))."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros((times.size, freqs.size), dtype=complex)
    for mpc in mpcs:
        g = _path_channel_gain(mpc, tx_array, m_t, rx_array, m_r)
        if g == 0:
            continue
        tau_eff = _path_effective_delay(mpc, tx_array, m_t, rx_array, m_r)
        base = g * np.exp(-2j * np.pi * freqs * tau_eff)
        rot = np.exp(2j * np.pi * mpc.doppler * times)
        out += np.outer(rot, base)
    return out


def synth_transfer(
    mpcs: list[Mpc],
    geom: list[ChainArray],
    cfg: SounderConfig,
    tones: ToneSpec,
    tmap: TimestampMap,
    bset=None,
    noise_power: float = 0.0,
    seed: int = 0,
) -> ChannelTensor:
    """Six-index hardware-inclusive transfer tensor per the signal model.

    ``bset`` (a calib.B2bSet) supplies the chain-pair responses; None
    means an ideal all-ones hardware response. noise_power is the complex
    white-noise variance per tensor entry.
    """
    freqs = cfg.f_c + tones.baseband_offsets(cfg.f_s)
    shape = (
        tmap.snapshots,
        cfg.n_rf,
        cfg.n_rf,
        max(cfg.n_T),
        max(cfg.n_R),
        tones.F,
    )
    values = np.zeros(shape, dtype=complex)
    measured = np.zeros(shape[1:5], dtype=bool)

    channels = sorted({key[1:] for key in tmap.times})
    for p_t, p_r, m_t, m_r in channels:
        measured[p_t, p_r, m_t, m_r] = True
        if bset is not None:
            b = bset.response(p_t, p_r)
        else:
            b = 1.0
        times = np.array(
            [tmap.t(s, p_t, p_r, m_t, m_r) for s in range(tmap.snapshots)]
        )
        h = channel_response(mpcs, geom[p_t], m_t, geom[p_r], m_r, freqs, times) * b
        if noise_power > 0:
            for s in range(tmap.snapshots):
                rng = _noise_rng(seed, s, p_t, p_r, m_t, m_r)
                h[s] += math.sqrt(noise_power / 2.0) * (
                    rng.standard_normal(tones.F) + 1j * rng.standard_normal(tones.F)
                )
        values[:, p_t, p_r, m_t, m_r, :] = h

    return ChannelTensor(
        values=values,
        kind=KIND_HARDWARE,
        freqs=freqs,
        measured=measured,
        meta={"noise_power": noise_power, "seed": seed},
    )


def synth_stream(
    mpcs: list[Mpc],
    geom: list[ChainArray],
    cfg: SounderConfig,
    plan: ChannelPlan,
    tones: ToneSpec,
    noise_power: float = 0.0,
    bset=None,
    snapshots: int = 1,
    seed: int = 0,
    full_scale: float | None = None,
) -> tuple[np.ndarray, dict]:
    """Receiver-side fixed-point sample streams for every chain.

    Returns (streams, meta): streams is int16 of shape
    (N_RF, total_samples, 2); meta carries the quantizer settings needed
    to undo the scaling. Fractional delays are exact (realized in the
    frequency domain per slot); the bulk propagation delay is absorbed by
    the P discards, so per-slot responses are circular.
    """
    if mpcs:
        span = max(m.tau for m in mpcs) - min(m.tau for m in mpcs)
        if span * cfg.f_s > cfg.L:
            raise AliasingError(
                f"scene delay spread {span:.3e} s exceeds L/f_s = {cfg.L / cfg.f_s:.3e} s"
            )
    freqs = cfg.f_c + tones.baseband_offsets(cfg.f_s)
    slot_len = cfg.slot_samples
    gap = (cfg.R - cfg.P) if snapshots > 1 else 0
    if snapshots > 1 and cfg.R < cfg.P:
        raise InvalidConfigError("R must be >= P for multi-snapshot streams")
    per_snapshot = plan.snapshot_slots * slot_len
    total = snapshots * per_snapshot + (snapshots - 1) * gap
    t_rep = (cfg.time_slots * slot_len + cfg.R) / cfg.f_s

    signal = np.zeros((cfg.n_rf, total), dtype=complex)
    n = np.arange(slot_len)
    for s in range(snapshots):
        snap_base = s * (per_snapshot + gap)
        for slot in plan.slots:
            start = snap_base + slot.index * slot_len
            # absolute capture time of each sample in this slot
            t0 = s * t_rep + slot.index * slot_len * cfg.T_s
            p_t, m_t = slot.tx
            for p_r, m_r in slot.rx:
                block = np.zeros(slot_len, dtype=complex)
                for mpc in mpcs:
                    g = _path_channel_gain(mpc, geom[p_t], m_t, geom[p_r], m_r)
                    if g == 0:
                        continue
                    if bset is not None:
                        b = bset.response(p_t, p_r)
                    else:
                        b = 1.0
                    tau_eff = _path_effective_delay(
                        mpc, geom[p_t], m_t, geom[p_r], m_r
                    )
                    spec = np.zeros(cfg.L, dtype=complex)
                    spec[tones.occupied] = (
                        tones.x[tones.occupied]
                        * g
                        * b
                        * np.exp(-2j * np.pi * freqs * tau_eff)
                    )
                    period = np.fft.ifft(spec)
                    contrib = period[n % cfg.L]
                    if mpc.doppler != 0.0:
                        contrib = contrib * np.exp(
                            2j * np.pi * mpc.doppler * (t0 + n * cfg.T_s)
                        )
                    block += contrib
                signal[p_r, start:start + slot_len] += block

    if noise_power > 0:
        for chain in range(cfg.n_rf):
            rng = _noise_rng(seed, 0xBEEF, chain)
            signal[chain] += math.sqrt(noise_power / 2.0) * (
                rng.standard_normal(total) + 1j * rng.standard_normal(total)
            )

    if full_scale is None:
        peak = float(np.max(np.abs(signal))) if np.any(signal) else 1.0
        full_scale = peak / 0.9
    codes = np.empty((cfg.n_rf, total, 2), dtype=np.int16)
    clips = 0
    for chain in range(cfg.n_rf):
        codes[chain], c = quantize(signal[chain], cfg.adc_bits, full_scale)
        clips += c
    meta = {
        "full_scale": full_scale,
        "bits": cfg.adc_bits,
        "clip_count": clips,
        "snapshots": snapshots,
        "seed": seed,
    }
    return codes, meta
