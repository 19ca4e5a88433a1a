# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-point kernels (hot inner loops of the receive path)."""
import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cdef int I16_MIN = -32768
cdef int I16_MAX = 32767


def block_average_i16(short[:, :, ::1] frames, int k):
    """Shift-then-add averager with per-add 16-bit saturation.

    frames: int16 (M, L, 2). Returns (int16 (L, 2), saturation_count).
    """
    cdef Py_ssize_t m = frames.shape[0]
    cdef Py_ssize_t l = frames.shape[1]
    cdef Py_ssize_t i, j, c
    cdef long long sat = 0
    cdef int acc
    out_arr = np.zeros((l, 2), dtype=np.int16)
    cdef short[:, ::1] out = out_arr
    for j in range(l):
        for c in range(2):
            acc = 0
            for i in range(m):
                acc += frames[i, j, c] >> k
                if acc > I16_MAX:
                    acc = I16_MAX
                    sat += 1
                elif acc < I16_MIN:
                    acc = I16_MIN
                    sat += 1
            out[j, c] = <short> acc
    return out_arr, int(sat)


def quantize_i16(double[::1] re, double[::1] im, int bits, double full_scale):
    """Mid-rise quantizer, left-aligned int16 codes. Returns (codes, clips)."""
    cdef Py_ssize_t n = re.shape[0]
    cdef Py_ssize_t j
    cdef double step = full_scale / <double> (1 << (bits - 1))
    cdef long lo = -(1 << (bits - 1))
    cdef long hi = (1 << (bits - 1)) - 1
    cdef long lev
    cdef long long clips = 0
    cdef int shift = 16 - bits
    out_arr = np.empty((n, 2), dtype=np.int16)
    cdef short[:, ::1] out = out_arr
    for j in range(n):
        lev = <long> floor(re[j] / step)
        if lev > hi:
            lev = hi
            clips += 1
        elif lev < lo:
            lev = lo
            clips += 1
        out[j, 0] = <short> (lev << shift)
        lev = <long> floor(im[j] / step)
        if lev > hi:
            lev = hi
            clips += 1
        elif lev < lo:
            lev = lo
            clips += 1
        out[j, 1] = <short> (lev << shift)
    return out_arr, int(clips)
