"""Compare the compiled and pure-python fixed-point kernels.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from soundersim import _refkernels

try:
    from soundersim import _fastkernels
except ImportError:
    _fastkernels = None


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rng = np.random.default_rng(0)
    m, length = 8, 1024
    batches = 128
    frames = rng.integers(-2048, 2048, size=(batches, m, length, 2), dtype=np.int16)
    samples = rng.standard_normal(batches * length) + 1j * rng.standard_normal(batches * length)
    re = np.ascontiguousarray(samples.real)
    im = np.ascontiguousarray(samples.imag)

    def avg_all(mod):
        return [mod.block_average_i16(f, 3) for f in frames]

    def quant_all(mod):
        return mod.quantize_i16(re, im, 12, 4.0)

    t_ref, ref_avg = timeit(avg_all, _refkernels)
    t_refq, ref_q = timeit(quant_all, _refkernels)
    print(f"python  block_average: {t_ref * 1e3:8.2f} ms   quantize: {t_refq * 1e3:8.2f} ms")

    if _fastkernels is None:
        print("compiled backend not available")
        return

    t_fast, fast_avg = timeit(avg_all, _fastkernels)
    t_fastq, fast_q = timeit(quant_all, _fastkernels)
    print(f"cython  block_average: {t_fast * 1e3:8.2f} ms   quantize: {t_fastq * 1e3:8.2f} ms")
    print(f"speedup block_average: {t_ref / t_fast:5.2f}x   quantize: {t_refq / t_fastq:5.2f}x")

    for (a, sa), (b, sb) in zip(ref_avg, fast_avg):
        assert np.array_equal(a, b) and sa == sb
    assert np.array_equal(ref_q[0], fast_q[0]) and ref_q[1] == fast_q[1]
    print("backends agree bit-exactly")


if __name__ == "__main__":
    main()
