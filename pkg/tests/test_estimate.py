import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soundersim import estimate
from soundersim.errors import InvalidConfigError
from soundersim.tensors import ChannelTensor, KIND_HARDWARE


def _tensor(values, measured):
    return ChannelTensor(values=values, kind=KIND_HARDWARE, measured=measured)


def test_narrowband_gain_and_mrc_equal_branches():
    n = 8
    shape = (3, 2, 2, 1, n, 4)
    values = np.zeros(shape, dtype=complex)
    measured = np.zeros(shape[1:5], dtype=bool)
    for m_r in range(n):
        values[:, 0, 1, 0, m_r, :] = 0.5
        measured[0, 1, 0, m_r] = True
    t = _tensor(values, measured)
    gains = estimate.narrowband_gain(t, k0=2)
    assert gains.shape == (3, n)
    np.testing.assert_allclose(gains, 20 * math.log10(0.5), atol=1e-9)
    combined = estimate.mrc_combine(t, k0=2)
    # N equal branches: exactly +10 log10(N) over one branch's power gain
    expected = 20 * math.log10(0.5) + 10 * math.log10(n)
    np.testing.assert_allclose(combined, expected, atol=1e-9)


def test_mrc_dominates_best_branch():
    rng = np.random.default_rng(8)
    shape = (50, 2, 2, 1, 4, 1)
    values = np.zeros(shape, dtype=complex)
    measured = np.zeros(shape[1:5], dtype=bool)
    for m_r in range(4):
        values[:, 0, 1, 0, m_r, 0] = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        measured[0, 1, 0, m_r] = True
    t = _tensor(values, measured)
    per_branch = estimate.narrowband_gain(t, 0)
    combined = estimate.mrc_combine(t, 0)
    assert np.all(combined >= per_branch.max(axis=1) - 1e-9)


def test_mrc_requires_measured_channels():
    t = _tensor(
        np.zeros((1, 2, 2, 1, 1, 2), dtype=complex),
        np.zeros((2, 2, 1, 1), dtype=bool),
    )
    with pytest.raises(InvalidConfigError):
        estimate.mrc_combine(t, 0)


class _FakePath:
    def __init__(self, **kw):
        self.__dict__.update(kw)


def test_subspace_filter_plain_and_circular():
    paths = [
        _FakePath(tau=10e-9, aoa_az=math.radians(170.0)),
        _FakePath(tau=30e-9, aoa_az=math.radians(-170.0)),
        _FakePath(tau=10e-9, aoa_az=math.radians(0.0)),
    ]
    kept = estimate.subspace_filter(paths, {"tau": (0, 20e-9)})
    assert len(kept) == 2
    # azimuth window crossing the wrap: 160 deg .. -160 deg
    kept = estimate.subspace_filter(
        paths, {"aoa_az": (math.radians(160.0), math.radians(-160.0))}
    )
    assert len(kept) == 2
    with pytest.raises(InvalidConfigError):
        estimate.subspace_filter(paths, {"tau": (1.0, 0.0)})


def test_intersect_bearings_recovers_point():
    p1, p2 = np.array([0.0, 0.0]), np.array([10.0, 0.0])
    target = np.array([4.0, 6.0])
    phi1 = math.atan2(*(target - p1)[::-1])
    phi2 = math.atan2(*(target - p2)[::-1])
    hit = estimate.intersect_bearings(p1, phi1, p2, phi2)
    np.testing.assert_allclose(hit, target, atol=1e-9)


def test_intersect_bearings_parallel_and_behind():
    assert estimate.intersect_bearings([0, 0], 0.0, [0, 1], 0.0) is None
    # rays pointing away from each other never meet
    assert estimate.intersect_bearings([0, 0], math.pi, [10, 0], 0.0) is None


@given(
    tx=st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
    rx=st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
    target=st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
)
@settings(max_examples=60, deadline=None)
def test_intersect_bearings_property(tx, rx, target):
    tx, rx, target = map(np.asarray, (tx, rx, target))
    if min(np.linalg.norm(target - tx), np.linalg.norm(target - rx)) < 1e-3:
        return
    d1, d2 = target - tx, target - rx
    if abs(d1[0] * d2[1] - d1[1] * d2[0]) < 1e-6:
        return  # collinear: intersection ill-conditioned
    phi1 = math.atan2(d1[1], d1[0])
    phi2 = math.atan2(d2[1], d2[0])
    hit = estimate.intersect_bearings(tx, phi1, rx, phi2)
    assert hit is not None
    np.testing.assert_allclose(hit, target, atol=1e-6)
