"""Antenna patterns as 2-D Fourier series, panel geometry and steering.

Angle conventions: azimuth in [-pi, pi) measured in the horizontal plane
from +x, elevation theta measured from zenith in [0, pi]. Patterns are
polarimetric: every port has an (H, V) complex gain pair per direction.

A pattern sampled on a regular azimuth x elevation grid is periodified
onto the torus (elevation mirrored through the poles with an azimuth flip
of pi) and represented by its 2-D DFT coefficients; the full-order fit
reproduces the grid samples exactly and evaluates smoothly in between.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from soundersim.errors import UnsupportedGridError

SPEED_OF_LIGHT = 299_792_458.0

PANEL_SPACING_M = 0.0267
PATCH_PEAK_GAIN_DBI = -0.4
PATCH_SHAPE_EXPONENT = 4  # ((1+cos psi)/2)**q, ~120 deg 10-dB beamwidth


def unit_direction(phi, theta) -> np.ndarray:
    """Unit vector(s) pointing from the array toward (phi, theta)."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.stack(
        (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)),
        axis=-1,
    )


def steering_phase(positions: np.ndarray, phi, theta, freq) -> np.ndarray:
    """Plane-wave phase exp(j 2π f (r·u)/c) per element.

    positions: (N, 3); returns shape (N,) for scalar angles/freq, or
    broadcast over trailing frequency axis when freq is an array.
    """
    u = unit_direction(phi, theta)
    proj = np.asarray(positions) @ u  # (N,)
    freq = np.asarray(freq, dtype=float)
    return np.exp(1j * 2.0 * np.pi * np.multiply.outer(proj, freq) / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class AntennaResponse:
    """EADF coefficients of one port: (2, N_az, N_el_ext) for (H, V)."""

    coeff: np.ndarray
    f_ref: float

    def eval(self, phi, theta) -> np.ndarray:
        """Polarimetric gain at (phi, theta); returns (..., 2) = (H, V)."""
        phi = np.asarray(phi, dtype=float)
        theta = np.asarray(theta, dtype=float)
        shape = np.broadcast_shapes(phi.shape, theta.shape)
        phi = np.broadcast_to(phi, shape).ravel()
        theta = np.broadcast_to(theta, shape).ravel()
        n_az, n_ext = self.coeff.shape[1:]
        m_az = np.fft.fftfreq(n_az, 1.0 / n_az).astype(int)
        m_el = np.fft.fftfreq(n_ext, 1.0 / n_ext).astype(int)
        e_az = np.exp(1j * np.outer(phi, m_az))      # (P, n_az)
        e_el = np.exp(1j * np.outer(theta, m_el))    # (P, n_ext)
        out = np.einsum("pa,cae,pe->pc", e_az, self.coeff, e_el)
        return out.reshape(shape + (2,))


def eadf_fit(
    az: np.ndarray,
    el: np.ndarray,
    gains: np.ndarray,
    f_ref: float,
    order_az: int | None = None,
    order_el: int | None = None,
) -> AntennaResponse:
    """Fit EADF coefficients from pattern samples on a regular sphere grid.

    az: N_az uniform angles covering [0, 2π) without the endpoint, N_az
    even. el: N_el uniform angles covering [0, π] inclusive. gains:
    (N_az, N_el, 2) complex (H, V). Optional truncation orders discard
    harmonics above the given index.
    """
    az = np.asarray(az, dtype=float)
    el = np.asarray(el, dtype=float)
    gains = np.asarray(gains, dtype=complex)
    n_az, n_el = az.size, el.size
    if gains.shape != (n_az, n_el, 2):
        raise UnsupportedGridError(
            f"gains shape {gains.shape} does not match grid ({n_az}, {n_el}, 2)"
        )
    if n_az < 2 or n_az % 2 != 0 or n_el < 2:
        raise UnsupportedGridError("need an even azimuth count >= 2 and >= 2 elevations")
    if not np.allclose(az, np.arange(n_az) * 2 * np.pi / n_az, atol=1e-9):
        raise UnsupportedGridError("azimuth grid must uniformly cover [0, 2pi)")
    if not np.allclose(el, np.linspace(0.0, np.pi, n_el), atol=1e-9):
        raise UnsupportedGridError("elevation grid must uniformly cover [0, pi]")

    n_ext = 2 * (n_el - 1)
    ext = np.empty((2, n_az, n_ext), dtype=complex)
    ext[:, :, :n_el] = np.moveaxis(gains, -1, 0)
    # theta > pi maps to (phi + pi, 2pi - theta)
    mirrored = np.roll(np.moveaxis(gains, -1, 0), n_az // 2, axis=1)
    ext[:, :, n_el:] = mirrored[:, :, n_el - 2:0:-1]

    coeff = np.fft.fft2(ext, axes=(1, 2)) / (n_az * n_ext)
    if order_az is not None:
        m = np.abs(np.fft.fftfreq(n_az, 1.0 / n_az).astype(int))
        coeff[:, m > order_az, :] = 0.0
    if order_el is not None:
        m = np.abs(np.fft.fftfreq(n_ext, 1.0 / n_ext).astype(int))
        coeff[:, :, m > order_el] = 0.0
    return AntennaResponse(coeff=coeff, f_ref=f_ref)


def isotropic_response(f_ref: float, pol: str = "V") -> AntennaResponse:
    """Unit-gain response on one polarization, zero on the other."""
    coeff = np.zeros((2, 2, 2), dtype=complex)
    coeff[0 if pol == "H" else 1, 0, 0] = 1.0
    return AntennaResponse(coeff=coeff, f_ref=f_ref)


def patch_gain(phi, theta, boresight: np.ndarray) -> np.ndarray:
    """Analytic patch-like magnitude: peak -0.4 dBi on boresight."""
    u = unit_direction(phi, theta)
    cos_psi = u @ np.asarray(boresight, dtype=float)
    amp = 10.0 ** (PATCH_PEAK_GAIN_DBI / 20.0)
    return amp * ((1.0 + cos_psi) / 2.0) ** PATCH_SHAPE_EXPONENT


def patch_response(
    f_ref: float,
    boresight: np.ndarray,
    pol: str = "V",
    n_az: int = 72,
    n_el: int = 37,
) -> AntennaResponse:
    """EADF of the synthetic patch pattern, boresight along the given
    unit vector, purely co-polarized."""
    az = np.arange(n_az) * 2 * np.pi / n_az
    el = np.linspace(0.0, np.pi, n_el)
    pp, tt = np.meshgrid(az, el, indexing="ij")
    gains = np.zeros((n_az, n_el, 2), dtype=complex)
    gains[:, :, 0 if pol == "H" else 1] = patch_gain(pp, tt, boresight)
    return eadf_fit(az, el, gains, f_ref)


@dataclass(frozen=True)
class ChainArray:
    """Switch ports of one RF chain: positions, patterns, polarizations."""

    positions: np.ndarray                 # (N, 3) global frame, meters
    responses: tuple[AntennaResponse, ...]
    port_pols: tuple[str, ...] = ()

    @property
    def n_ports(self) -> int:
        return self.positions.shape[0]


def paper_panel(
    center: np.ndarray,
    boresight_azimuth: float,
    f_ref: float,
    rows: int = 2,
    cols: int = 4,
    spacing: float = PANEL_SPACING_M,
    dual_pol: bool = True,
) -> ChainArray:
    """A 2x4 panel at ``center`` facing ``boresight_azimuth``.

    Element grid lies in the plane orthogonal to the boresight; with
    dual_pol each element contributes a V port then an H port (16 switch
    channels for the default layout).
    """
    center = np.asarray(center, dtype=float)
    normal = unit_direction(boresight_azimuth, np.pi / 2)
    horiz = unit_direction(boresight_azimuth + np.pi / 2, np.pi / 2)
    vert = np.array([0.0, 0.0, 1.0])
    pattern = {
        pol: patch_response(f_ref, normal, pol=pol)
        for pol in (("V", "H") if dual_pol else ("V",))
    }
    positions = []
    pols = []
    responses = []
    for r in range(rows):
        for c in range(cols):
            offset = (c - (cols - 1) / 2) * spacing * horiz + (
                (rows - 1) / 2 - r
            ) * spacing * vert
            for pol in ("V", "H") if dual_pol else ("V",):
                positions.append(center + offset)
                pols.append(pol)
                responses.append(pattern[pol])
    return ChainArray(
        positions=np.asarray(positions),
        responses=tuple(responses),
        port_pols=tuple(pols),
    )


def standalone_antenna(position: np.ndarray, f_ref: float, pol: str = "V") -> ChainArray:
    """A single isotropic-pattern antenna on its own chain."""
    return ChainArray(
        positions=np.asarray(position, dtype=float).reshape(1, 3),
        responses=(isotropic_response(f_ref, pol=pol),),
        port_pols=(pol,),
    )
