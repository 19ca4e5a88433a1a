"""Kernel backend selection.

The compiled extension is preferred; the numpy reference is used when the
extension is missing or when SOUNDERSIM_PURE=1 is set (useful for the
benchmark and for bit-exactness tests between the two backends).
"""
import os

if os.environ.get("SOUNDERSIM_PURE") == "1":
    from soundersim import _refkernels as _impl

    BACKEND = "python"
else:
    try:
        from soundersim import _fastkernels as _impl

        BACKEND = "cython"
    except ImportError:
        from soundersim import _refkernels as _impl

        BACKEND = "python"

block_average_i16 = _impl.block_average_i16
quantize_i16 = _impl.quantize_i16
