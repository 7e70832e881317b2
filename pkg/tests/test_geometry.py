import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from memscal.errors import BehindSensorError, InvalidIntervalError, SingularityError
from memscal.geometry import (
    CartesianPoint,
    PolarPoint,
    ScanPattern,
    cartesian_to_polar,
    design_azimuth_sequence,
    polar_to_cartesian,
    range_from_tof,
)

angle = st.floats(-1.5, 1.5)
positive_range = st.floats(1e-3, 1e4)


def test_range_from_tof_paper_rounding():
    # c = 30 cm/ns, 100 ns round trip
    assert range_from_tof(0.0, 100e-9, c=3e8) == pytest.approx(15.0, rel=1e-12)


def test_range_from_tof_zero_interval():
    assert range_from_tof(5e-9, 5e-9) == 0.0


def test_range_from_tof_rejects_reversed_timestamps():
    with pytest.raises(InvalidIntervalError):
        range_from_tof(5e-9, 3e-9)


def test_range_from_tof_rejects_bad_c():
    with pytest.raises(ValueError):
        range_from_tof(0, 1e-9, c=0)


@given(st.floats(0, 1e-3), st.floats(0, 1e-3), st.floats(1, 1e9), st.floats(0.1, 10))
def test_range_from_tof_linear_and_homogeneous(t0, dt, c, lam):
    r = range_from_tof(t0, t0 + dt, c)
    assert range_from_tof(0, dt, c) == pytest.approx(r, rel=1e-9, abs=1e-9)
    assert range_from_tof(0, lam * dt, c) == pytest.approx(lam * r, rel=1e-9, abs=1e-9)
    assert range_from_tof(0, dt, lam * c) == pytest.approx(lam * r, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize(
    "polar, xyz",
    [
        ((0.0, 0.0, 5.0), (0, 0, 5)),
        ((math.pi / 4, 0.0, math.sqrt(2)), (1, 0, 1)),
        ((math.pi / 4, math.pi / 4, math.sqrt(3)), (1, 1, 1)),
    ],
)
def test_polar_cartesian_examples(polar, xyz):
    c = polar_to_cartesian(PolarPoint(*polar))
    assert (c.x, c.y, c.z) == pytest.approx(xyz, abs=1e-12)
    p = cartesian_to_polar(CartesianPoint(*xyz))
    assert (p.theta, p.phi, p.range) == pytest.approx(polar, abs=1e-12)


def test_polar_singularity():
    with pytest.raises(SingularityError):
        polar_to_cartesian(PolarPoint(math.pi / 2, 0.0, 1.0))
    with pytest.raises(SingularityError):
        polar_to_cartesian(PolarPoint(0.0, -math.pi / 2, 1.0))


def test_behind_sensor():
    with pytest.raises(BehindSensorError):
        cartesian_to_polar(CartesianPoint(1, 1, -1))
    with pytest.raises(BehindSensorError):
        cartesian_to_polar(CartesianPoint(1, 1, 0))


def test_tangent_plane_model_is_not_spherical():
    # spherical coordinates would put this point at x = R cos(phi) sin(theta)
    c = polar_to_cartesian(PolarPoint(0.3, 0.4, 10.0))
    assert c.x / c.z == pytest.approx(math.tan(0.3))
    assert c.y / c.z == pytest.approx(math.tan(0.4))


@given(angle, angle, positive_range)
def test_norm_preserved_and_round_trip(theta, phi, r):
    c = polar_to_cartesian(PolarPoint(theta, phi, r))
    assert math.sqrt(c.x**2 + c.y**2 + c.z**2) == pytest.approx(r, rel=1e-9)
    p = cartesian_to_polar(c)
    assert p.theta == pytest.approx(theta, abs=1e-9)
    assert p.phi == pytest.approx(phi, abs=1e-9)
    assert p.range == pytest.approx(r, rel=1e-9)


def _pattern(rows=2, k=2, serpentine=False):
    return ScanPattern(rows, k, (-0.1, 0.1), (-0.1, 0.1), 1e-6, serpentine)


def test_design_sequence_unidirectional():
    seq = design_azimuth_sequence(_pattern())
    np.testing.assert_allclose(seq, [[-0.1, -0.1], [0.1, -0.1], [-0.1, 0.1], [0.1, 0.1]])


def test_design_sequence_serpentine():
    seq = design_azimuth_sequence(_pattern(serpentine=True))
    np.testing.assert_allclose(seq, [[-0.1, -0.1], [0.1, -0.1], [0.1, 0.1], [-0.1, 0.1]])


def test_design_sequence_450_pulses_per_row():
    seq = design_azimuth_sequence(ScanPattern(3, 450, (-0.3, 0.3), (-0.2, 0.2), 1e-6, False))
    assert len(seq) == 1350
    assert np.unique(seq[:, 1]).size == 3


@pytest.mark.parametrize("serpentine", [False, True])
@given(rows=st.integers(2, 12), k=st.integers(2, 40))
def test_design_sequence_structure(serpentine, rows, k):
    pat = ScanPattern(rows, k, (-0.4, 0.3), (-0.2, 0.5), 1e-6, serpentine)
    seq = design_azimuth_sequence(pat).reshape(rows, k, 2)
    phi = seq[:, :, 1]
    assert np.all(phi == phi[:, :1])
    steps = np.diff(phi[:, 0])
    assert np.all(steps > 0)
    assert np.allclose(steps, steps[0])
    for r in range(rows):
        d = np.diff(seq[r, :, 0])
        descending = serpentine and r % 2 == 1
        assert np.all(d < 0) if descending else np.all(d > 0)


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(rows=1), "rows"),
        (dict(k_design=1), "k_design"),
        (dict(theta_range=(0.1, -0.1)), "theta_range"),
        (dict(phi_range=(-1.6, 0.1)), "phi_range"),
        (dict(delta_t=0), "delta_t"),
        (dict(frame_period_laser=1e-6), "frame_period_laser"),
    ],
)
def test_pattern_invariants(kwargs, field):
    base = dict(rows=4, k_design=10, theta_range=(-0.1, 0.1), phi_range=(-0.1, 0.1), delta_t=1e-6)
    base.update(kwargs)
    with pytest.raises(ValueError, match=field):
        ScanPattern(**base)


def test_pulses_per_frame_default_and_reset():
    assert _pattern(4, 10).pulses_per_frame == 40
    pat = ScanPattern(4, 10, (-0.1, 0.1), (-0.1, 0.1), 1e-6, frame_period_laser=45e-6)
    assert pat.pulses_per_frame == 45
