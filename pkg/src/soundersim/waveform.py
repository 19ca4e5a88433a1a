"""Multi-tone Zadoff-Chu sounding waveform design and synthesis.

The tone vector x lives in unshifted DFT indexing (bin 0 = DC). The
occupied band is contiguous in the fftshifted view, centered on DC with
the surplus bin of an even tone count placed on the negative-frequency
side. Zadoff-Chu element q maps to the q-th lowest occupied bin.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from soundersim.errors import InvalidConfigError, InvalidRootError, UndefinedPaprError

INT16_FULLSCALE_FRACTION = 0.9


def zadoff_chu(n_zc: int, u: int) -> np.ndarray:
    """Standard Zadoff-Chu sequence exp(-j*pi*u*k*(k+eps)/n_zc).

    eps is 1 for odd length and 0 for even length. Every element has unit
    magnitude; for prime n_zc the periodic autocorrelation is ideal.
    """
    if n_zc < 1:
        raise InvalidRootError(f"sequence length must be >= 1, got {n_zc}")
    if n_zc == 1:
        return np.ones(1, dtype=complex)
    if not (1 <= u < n_zc) or math.gcd(u, n_zc) != 1:
        raise InvalidRootError(f"root {u} not coprime with length {n_zc}")
    k = np.arange(n_zc)
    eps = n_zc % 2
    return np.exp(-1j * np.pi * u * k * (k + eps) / n_zc)


def occupied_bins(L: int, F: int) -> np.ndarray:
    """Unshifted DFT indices of the F occupied bins, ascending in frequency."""
    if F > L:
        raise InvalidConfigError(f"F={F} exceeds L={L}")
    # signed bin offsets relative to DC, extra bin on the negative side
    if F % 2 == 1:
        offsets = np.arange(-(F // 2), F // 2 + 1)
    else:
        offsets = np.arange(-(F // 2), F // 2)
    return offsets % L


@dataclass(frozen=True)
class ToneSpec:
    """Frequency-domain description of the sounding waveform."""

    x: np.ndarray          # complex amplitudes, length L, unshifted indexing
    occupied: np.ndarray   # indices into x, ascending baseband frequency
    zc_root: int
    zc_length: int

    @property
    def L(self) -> int:
        return self.x.size

    @property
    def F(self) -> int:
        return self.occupied.size

    def baseband_offsets(self, f_s: float) -> np.ndarray:
        """Signed frequency offset (Hz) of each occupied bin."""
        signed = np.where(self.occupied >= self.L / 2, self.occupied - self.L, self.occupied)
        return signed * f_s / self.L

    def to_json(self) -> str:
        return json.dumps(
            {
                "L": int(self.L),
                "F": int(self.F),
                "zc_root": self.zc_root,
                "zc_length": self.zc_length,
                "occupied": [int(i) for i in self.occupied],
                "x_real": self.x.real.tolist(),
                "x_imag": self.x.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ToneSpec":
        d = json.loads(text)
        x = np.asarray(d["x_real"]) + 1j * np.asarray(d["x_imag"])
        return cls(
            x=x,
            occupied=np.asarray(d["occupied"], dtype=int),
            zc_root=d["zc_root"],
            zc_length=d["zc_length"],
        )


@dataclass(frozen=True)
class TimeWaveform:
    s: np.ndarray       # complex baseband samples, length L
    sample_rate: float


def build_tones(L: int, F: int, u: int = 1) -> ToneSpec:
    """Place a length-F Zadoff-Chu sequence on F contiguous bins around DC."""
    bins = occupied_bins(L, F)
    zc = zadoff_chu(F, u) if F > 1 else np.ones(1, dtype=complex)
    x = np.zeros(L, dtype=complex)
    x[bins] = zc
    return ToneSpec(x=x, occupied=bins, zc_root=u, zc_length=F)


def synthesize(tones: ToneSpec, f_s: float = 1.0) -> TimeWaveform:
    """Inverse DFT with 1/L normalization: s(n) = (1/L) sum_k x(k) e^{j2πkn/L}."""
    return TimeWaveform(s=np.fft.ifft(tones.x), sample_rate=f_s)


def papr(w: TimeWaveform, oversample: int = 1) -> float:
    """Peak-to-average power ratio (dB) of the spectrally-oversampled waveform."""
    if oversample < 1 or int(oversample) != oversample:
        raise InvalidConfigError("oversample factor must be a positive integer")
    s = w.s
    if not np.any(np.abs(s) > 0):
        raise UndefinedPaprError("zero-energy waveform")
    L = s.size
    if oversample == 1:
        s_os = s
    else:
        spec = np.fft.fftshift(np.fft.fft(s))
        padded = np.zeros(L * oversample, dtype=complex)
        start = (L * oversample - L) // 2
        padded[start:start + L] = spec
        s_os = np.fft.ifft(np.fft.ifftshift(padded)) * oversample
    p = np.abs(s_os) ** 2
    return 10.0 * math.log10(p.max() / p.mean())


def export_iq_int16(w: TimeWaveform, path) -> None:
    """Interleaved little-endian 16-bit I/Q, peak at 0.9 of the int16 range."""
    peak = float(np.max(np.abs(np.concatenate((w.s.real, w.s.imag)))))
    scale = INT16_FULLSCALE_FRACTION * 32767 / peak if peak > 0 else 0.0
    out = np.empty(w.s.size * 2, dtype="<i2")
    out[0::2] = np.round(w.s.real * scale).astype(np.int16)
    out[1::2] = np.round(w.s.imag * scale).astype(np.int16)
    out.tofile(path)


def export_iq_float64(w: TimeWaveform, path) -> None:
    """Interleaved little-endian float64 I/Q."""
    out = np.empty(w.s.size * 2, dtype="<f8")
    out[0::2] = w.s.real
    out[1::2] = w.s.imag
    out.tofile(path)
