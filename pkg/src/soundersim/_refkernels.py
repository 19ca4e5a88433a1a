"""Pure-numpy reference implementations of the fixed-point kernels.

These mirror the compiled kernels in ``_fastkernels.pyx`` bit for bit:
arithmetic right shift (floor), saturating 16-bit accumulation performed
add-by-add in frame order, and mid-rise quantization with clipping.
"""
import numpy as np

I16_MIN = -32768
I16_MAX = 32767


def block_average_i16(frames: np.ndarray, k: int) -> tuple[np.ndarray, int]:
    """Sum M int16 I/Q frames after an arithmetic right shift by k bits.

    frames: int16 array of shape (M, L, 2). Returns (out, saturation_count)
    where out is int16 (L, 2). The accumulator saturates at 16 bits after
    every add, matching the hardware adder width.
    """
    frames = np.asarray(frames, dtype=np.int16)
    m, _, _ = frames.shape
    acc = np.zeros(frames.shape[1:], dtype=np.int32)
    sat = 0
    for i in range(m):
        acc += frames[i].astype(np.int32) >> k
        over = (acc > I16_MAX) | (acc < I16_MIN)
        sat += int(np.count_nonzero(over))
        np.clip(acc, I16_MIN, I16_MAX, out=acc)
    return acc.astype(np.int16), sat


def quantize_i16(
    re: np.ndarray, im: np.ndarray, bits: int, full_scale: float
) -> tuple[np.ndarray, int]:
    """Mid-rise quantization of float I/Q to left-aligned int16 codes.

    Level index = floor(x / step) with step = full_scale / 2**(bits-1),
    clipped to the signed range of ``bits``, then shifted left into the
    16-bit word. Returns (codes (N, 2) int16, clip_count).
    """
    step = full_scale / float(1 << (bits - 1))
    lo = -(1 << (bits - 1))
    hi = (1 << (bits - 1)) - 1
    out = np.empty((re.size, 2), dtype=np.int16)
    clips = 0
    for col, x in enumerate((re, im)):
        lev = np.floor(np.asarray(x, dtype=np.float64) / step)
        over = (lev > hi) | (lev < lo)
        clips += int(np.count_nonzero(over))
        lev = np.clip(lev, lo, hi).astype(np.int32)
        out[:, col] = (lev << (16 - bits)).astype(np.int16)
    return out, clips
