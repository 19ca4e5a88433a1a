"""Channel recovery and analysis: transfer functions, combining, path
filtering and bistatic bearing intersection.

The super-resolution path estimator lives in soundersim.sage and is
re-exported here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from soundersim import dsp
from soundersim.config import SounderConfig
from soundersim.errors import InvalidConfigError
from soundersim.sage import PathEstimate, SageSettings, sage_estimate  # noqa: F401
from soundersim.schedule import ChannelPlan
from soundersim.tensors import ChannelTensor, KIND_HARDWARE, KIND_RAW
from soundersim.waveform import ToneSpec


def process_stream(
    streams: np.ndarray,
    meta: dict,
    cfg: SounderConfig,
    plan: ChannelPlan,
    snapshots: int = 1,
) -> ChannelTensor:
    """Emulated on-device processing of raw chain streams into the raw
    six-index tensor: framing, block averaging, scale reconstruction."""
    shape = (snapshots, cfg.n_rf, cfg.n_rf, max(cfg.n_T), max(cfg.n_R), cfg.L)
    values = np.zeros(shape, dtype=complex)
    measured = np.zeros(shape[1:5], dtype=bool)
    for chain in range(cfg.n_rf):
        groups = dsp.frame_stream(streams[chain], cfg, plan, snapshots)
        for g in groups:
            active = [ant for (c, ant) in g.rx if c == chain]
            if not active:
                continue
            y, _ = dsp.block_average(g.frames, cfg.K)
            m_r = active[0]
            p_t, m_t = g.tx
            values[g.snapshot, p_t, chain, m_t, m_r, :] = dsp.averaged_to_float(
                y, cfg.M, cfg.K, meta["bits"], meta["full_scale"]
            )
            measured[p_t, chain, m_t, m_r] = True
    return ChannelTensor(values=values, kind=KIND_RAW, measured=measured)


def transfer_function(d: ChannelTensor, tones: ToneSpec, f_c: float, f_s: float) -> ChannelTensor:
    """DFT over the sample axis, restriction to the occupied bins and
    division by the transmitted tones: H = Y / x."""
    if d.values.shape[-1] != tones.L:
        raise InvalidConfigError(
            f"sample axis {d.values.shape[-1]} does not match waveform length {tones.L}"
        )
    y = np.fft.fft(d.values, axis=-1)[..., tones.occupied]
    h = y / tones.x[tones.occupied]
    freqs = f_c + tones.baseband_offsets(f_s)
    return ChannelTensor(
        values=h, kind=KIND_HARDWARE, freqs=freqs, measured=d.measured.copy(),
        meta=dict(d.meta),
    )


def narrowband_gain(h: ChannelTensor, k0: int) -> np.ndarray:
    """Per-channel magnitude series (dB) at one frequency bin.

    Returns shape (snapshots, n_measured_channels), channels in the
    (p_T, p_R, m_T, m_R) lexicographic order of the measured mask.
    """
    cols = [
        20.0 * np.log10(np.maximum(np.abs(h.values[(slice(None),) + idx + (k0,)]), 1e-300))
        for idx in h.measured_entries()
    ]
    return np.stack(cols, axis=1)


def mrc_combine(h: ChannelTensor, k0: int) -> np.ndarray:
    """Maximum-ratio-combined power gain (dB) per snapshot at bin k0:
    the sum of per-channel powers."""
    total = np.zeros(h.snapshots)
    count = 0
    for idx in h.measured_entries():
        total += np.abs(h.values[(slice(None),) + idx + (k0,)]) ** 2
        count += 1
    if count == 0:
        raise InvalidConfigError("tensor has no measured channels")
    return 10.0 * np.log10(np.maximum(total, 1e-300))


_ANGLE_PARAMS = {"aod_az", "aoa_az"}


def _in_interval(value: float, lo: float, hi: float, circular: bool) -> bool:
    if not circular:
        return lo <= value <= hi
    span = (hi - lo) % (2 * math.pi)
    offset = (value - lo) % (2 * math.pi)
    return offset <= span


def subspace_filter(paths: list, bounds: dict) -> list:
    """Retain estimates whose bounded parameters all fall inside their
    interval; azimuth bounds are compared on the circle."""
    for name, (lo, hi) in bounds.items():
        if name not in _ANGLE_PARAMS and lo > hi:
            raise InvalidConfigError(f"bounds for {name} are not ordered")
    kept = []
    for p in paths:
        ok = True
        for name, (lo, hi) in bounds.items():
            if not _in_interval(getattr(p, name), lo, hi, name in _ANGLE_PARAMS):
                ok = False
                break
        if ok:
            kept.append(p)
    return kept


def intersect_bearings(p1, phi1: float, p2, phi2: float):
    """Intersection of two planar rays, or None when parallel or behind
    either origin."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    d1 = np.array([math.cos(phi1), math.sin(phi1)])
    d2 = np.array([math.cos(phi2), math.sin(phi2)])
    det = d1[0] * d2[1] - d1[1] * d2[0]
    scale = max(float(np.linalg.norm(p2 - p1)), 1.0)
    if abs(det) < 1e-12 * scale:
        return None
    delta = p2 - p1
    t1 = (delta[0] * d2[1] - delta[1] * d2[0]) / det
    t2 = (delta[0] * d1[1] - delta[1] * d1[0]) / det
    if t1 < 0 or t2 < 0:
        return None
    return p1 + t1 * d1
