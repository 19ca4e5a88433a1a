"""Bit-exact emulation of the on-device receive path.

Fixed-point samples are int16 arrays with a trailing axis of size 2
(I, Q). The block averager shifts each addend right by K bits (arithmetic,
i.e. flooring) before a saturating 16-bit add, mirroring the shift-then-add
circuit. Hot kernels are dispatched to the compiled backend when available
(see soundersim.kernels).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from soundersim import kernels
from soundersim.config import SounderConfig
from soundersim.errors import InvalidConfigError, TruncatedCaptureError
from soundersim.schedule import ChannelPlan


@dataclass
class AveragedFrame:
    """Output of the averager for one slot: L fixed-point samples."""

    y: np.ndarray          # int16, shape (L, 2)
    snapshot: int
    slot: int
    tx: tuple[int, int]
    rx: tuple[tuple[int, int], ...]
    saturation_count: int = 0


@dataclass
class FrameGroup:
    """The M raw waveform repetitions captured in one slot."""

    frames: np.ndarray     # int16, shape (M, L, 2)
    snapshot: int
    slot: int
    tx: tuple[int, int]
    rx: tuple[tuple[int, int], ...]


def to_codes(samples: np.ndarray) -> np.ndarray:
    """Complex float array -> int16 (..., 2) without scaling (round only)."""
    out = np.empty(samples.shape + (2,), dtype=np.int16)
    out[..., 0] = np.round(samples.real)
    out[..., 1] = np.round(samples.imag)
    return out


def to_complex(codes: np.ndarray) -> np.ndarray:
    """int16 (..., 2) -> complex float."""
    codes = np.asarray(codes)
    return codes[..., 0].astype(np.float64) + 1j * codes[..., 1].astype(np.float64)


def frame_stream(
    stream: np.ndarray, cfg: SounderConfig, plan: ChannelPlan, snapshots: int = 1
) -> list[FrameGroup]:
    """Split one chain's sample stream into per-slot M-frame groups.

    Per slot: skip P samples, retain M*L; after the last slot of a snapshot
    skip another R-P samples so consecutive snapshot starts are T_rep
    apart. The stream may end right after the last retained sample.
    """
    if cfg.R and cfg.R < cfg.P:
        raise InvalidConfigError("R must be >= P for inter-snapshot framing")
    stream = np.asarray(stream)
    n = stream.shape[0]
    groups: list[FrameGroup] = []
    pos = 0
    for s in range(snapshots):
        for slot in plan.slots:
            start = pos + cfg.P
            end = start + cfg.M * cfg.L
            if end > n:
                raise TruncatedCaptureError(
                    f"stream underrun at snapshot {s}, slot {slot.index}: "
                    f"need {end} samples, have {n}",
                    partial=groups,
                )
            frames = stream[start:end].reshape(cfg.M, cfg.L, *stream.shape[1:])
            groups.append(
                FrameGroup(
                    frames=frames, snapshot=s, slot=slot.index, tx=slot.tx, rx=slot.rx
                )
            )
            pos = end
        pos += cfg.R - cfg.P
    return groups


def block_average(frames: np.ndarray, K: int) -> tuple[np.ndarray, int]:
    """y(i) = sum_m (y_m(i) >> K) with per-add 16-bit saturation.

    frames: int16 (M, L, 2). Returns (int16 (L, 2), saturation count).
    """
    frames = np.ascontiguousarray(frames, dtype=np.int16)
    if frames.ndim != 3 or frames.shape[2] != 2:
        raise InvalidConfigError("frames must have shape (M, L, 2)")
    return kernels.block_average_i16(frames, K)


def average_groups(groups: list[FrameGroup], K: int) -> list[AveragedFrame]:
    out = []
    for g in groups:
        y, sat = block_average(g.frames, K)
        out.append(
            AveragedFrame(
                y=y, snapshot=g.snapshot, slot=g.slot, tx=g.tx, rx=g.rx,
                saturation_count=sat,
            )
        )
    return out


def doppler_attenuation(nu: float, M: int, L: int, T_s: float) -> complex:
    """Closed-form averager response (1/M) sum_{m=1..M} exp(j2πν m L T_s).

    A Dirichlet kernel: unity at ν = 0, first null at ν = 1/(M L T_s).
    """
    theta = 2.0 * np.pi * nu * L * T_s
    half = theta / 2.0
    phase = np.exp(1j * (M + 1) * half)
    if abs(np.sin(half)) < 1e-300:
        return complex(phase)
    return complex(phase * np.sin(M * half) / (M * np.sin(half)))


def quantize(
    samples: np.ndarray, bits: int, full_scale: float
) -> tuple[np.ndarray, int]:
    """Uniform mid-rise quantization of complex floats to left-aligned
    int16 codes, clipping at full scale. Returns (codes, clip count)."""
    if not (2 <= bits <= 16):
        raise InvalidConfigError(f"bits must be in [2, 16], got {bits}")
    samples = np.asarray(samples, dtype=complex)
    shape = samples.shape
    re = np.ascontiguousarray(samples.real.ravel(), dtype=np.float64)
    im = np.ascontiguousarray(samples.imag.ravel(), dtype=np.float64)
    codes, clips = kernels.quantize_i16(re, im, bits, full_scale)
    return codes.reshape(shape + (2,)), clips


def averaged_to_float(
    y: np.ndarray, M: int, K: int, bits: int, full_scale: float
) -> np.ndarray:
    """Convert averager output codes to complex floats in signal units.

    Undoes the M/2**K gain and compensates the expected shift-truncation
    bias (each addend loses E[q mod 2**K] = (2**K - 1)/2 codes before the
    divide), then applies the mid-rise ADC reconstruction.
    """
    y = np.asarray(y, dtype=np.float64)
    q_mean = (y + M * (2**K - 1) / (2.0 * 2**K)) * (2.0**K / M)
    step = full_scale / float(1 << (bits - 1))
    vals = (q_mean / float(1 << (16 - bits)) + 0.5) * step
    return vals[..., 0] + 1j * vals[..., 1]


def dequantize(codes: np.ndarray, bits: int, full_scale: float) -> np.ndarray:
    """Mid-rise reconstruction of left-aligned codes back to complex floats."""
    step = full_scale / float(1 << (bits - 1))
    levels = np.asarray(codes, dtype=np.int32) >> (16 - bits)
    vals = (levels.astype(np.float64) + 0.5) * step
    return vals[..., 0] + 1j * vals[..., 1]
