import math

import numpy as np
import pytest

from memscal.calibration import reconstruct_point_cloud
from memscal.geometry import ScanPattern, design_azimuth_sequence, polar_to_cartesian_array
from memscal.scene import Box, Plane, Scene, ray_range, ray_ranges
from memscal.simulator import (
    MisalignmentSpec,
    NoiseSpec,
    RangeStream,
    mirror_pointing,
    simulate_frames,
)

WALL = Plane((0.0, 0.0, 1.0), 10.0)


def small_pattern(serpentine=False, reset=6):
    return ScanPattern(4, 6, (-0.3, 0.3), (-0.2, 0.2), 1e-6, serpentine, frame_period_laser=(24 + reset) * 1e-6)


# ---------------------------------------------------------------- ray casting


def test_axial_plane_hit():
    assert ray_range(Scene((WALL,)), 0.0, 0.0) == pytest.approx(10.0)


def test_oblique_plane_hit():
    assert ray_range(Scene((WALL,)), math.pi / 4, 0.0) == pytest.approx(10 * math.sqrt(2))


def test_empty_scene_is_invalid():
    assert math.isnan(ray_range(Scene(), 0.1, 0.1))


def test_background_on_miss():
    assert ray_range(Scene((), background_range=42.0), 0.1, 0.1) == 42.0


def test_plane_behind_sensor_is_missed():
    assert math.isnan(ray_range(Scene((Plane((0, 0, 1), -5.0),)), 0.0, 0.0))


def test_box_occludes_plane():
    box = Box((-1, -1, 4), (1, 1, 5))
    scene = Scene((WALL, box))
    assert ray_range(scene, 0.0, 0.0) == pytest.approx(4.0)
    # tan(0.3) * 4 > 1: misses the box front face and its sides
    assert ray_range(scene, 0.3, 0.0) == pytest.approx(10 / math.cos(0.3))


def test_box_side_face():
    box = Box((0.5, -1, 2), (3, 1, 20))
    # ray through x = 0.5 at z = 2 / tan(theta)... enters via the x = 0.5 side
    theta = math.atan(0.5 / 4.0)
    assert ray_range(Scene((box,)), theta, 0.0) == pytest.approx(math.hypot(0.5, 4.0))


def test_origin_inside_box_hits_exit_face():
    box = Box((-1, -1, -1), (1, 1, 3))
    assert ray_range(Scene((box,)), 0.0, 0.0) == pytest.approx(3.0)


def test_plane_reconstruction_matches_plane(rng):
    theta = rng.uniform(-1.2, 1.2, 1000)
    phi = rng.uniform(-1.2, 1.2, 1000)
    r = ray_ranges(Scene((WALL,)), theta, phi)
    xyz = polar_to_cartesian_array(theta, phi, r)
    assert np.max(np.abs(xyz[:, 2] - 10.0)) < 1e-9


@pytest.mark.parametrize("kwargs", [dict(normal=(0, 0, 2), offset=1)])
def test_plane_normal_must_be_unit(kwargs):
    with pytest.raises(ValueError):
        Plane(**kwargs)


def test_box_corners_ordered():
    with pytest.raises(ValueError):
        Box((0, 0, 1), (1, 1, 1))


# ---------------------------------------------------------------- mirror pointing


def test_aligned_pointing_is_design():
    pat = small_pattern()
    assert mirror_pointing(pat, MisalignmentSpec(0, 0, 6), 0, 0) == pytest.approx(tuple(design_azimuth_sequence(pat)[0]))


def test_pulse_before_mirror_start_is_resetting():
    assert mirror_pointing(small_pattern(), MisalignmentSpec(3), 0, 2) is None


def test_drift_offset_schedule_example():
    pat = ScanPattern(4, 20, (-0.3, 0.3), (-0.2, 0.2), 1e-6, frame_period_laser=120e-6)
    spec = MisalignmentSpec(0, 3.4, 20)
    assert spec.offset(10) == 34
    assert all(mirror_pointing(pat, spec, 10, i) is None for i in range(34))
    assert mirror_pointing(pat, spec, 10, 34) == pytest.approx(tuple(design_azimuth_sequence(pat)[0]))


def test_pointing_past_raster_is_resetting():
    pat = small_pattern()
    spec = MisalignmentSpec(0, 0, 6)
    assert mirror_pointing(pat, spec, 0, 23) is not None
    assert mirror_pointing(pat, spec, 0, 24) is None


@pytest.mark.parametrize("serpentine", [False, True])
def test_pointing_uses_true_row_length(serpentine):
    pat = small_pattern(serpentine)
    spec = MisalignmentSpec(2, 0, 5)
    # pulse 2 + 7 -> mirror cell 7 -> row 1, col 2 of a 5-column raster
    theta, phi = mirror_pointing(pat, spec, 0, 9)
    cols = np.linspace(-0.3, 0.3, 5)
    assert phi == pytest.approx(np.linspace(-0.2, 0.2, 4)[1])
    assert theta == pytest.approx(cols[2] if not serpentine else cols[::-1][2])


def test_pointing_agrees_with_brute_force_enumeration():
    pat = small_pattern(True, reset=10)
    spec = MisalignmentSpec(1, 2.5, 7)
    for j in range(4):
        o = math.floor(1 + 2.5 * j + 0.5)
        for i in range(pat.pulses_per_frame):
            q = i - o
            got = mirror_pointing(pat, spec, j, i)
            if not 0 <= q < 4 * 7:
                assert got is None
                continue
            row, col = divmod(q, 7)
            if row % 2:
                col = 6 - col
            assert got == pytest.approx((np.linspace(-0.3, 0.3, 7)[col], np.linspace(-0.2, 0.2, 4)[row]))


# ---------------------------------------------------------------- simulate_frames


def test_aligned_noiseless_stream_equals_design_ranges(scene, pattern, aligned_stream):
    az = design_azimuth_sequence(pattern)
    expected = ray_ranges(scene, az[:, 0], az[:, 1])
    n = pattern.design_pulses
    np.testing.assert_array_equal(aligned_stream.frames[0, :n], expected)
    assert np.all(np.isnan(aligned_stream.frames[0, n:]))


@pytest.mark.parametrize("m", [1, 5, 37])
def test_start_offset_is_a_pure_shift(scene, pattern, aligned_stream, m):
    s = simulate_frames(scene, pattern, MisalignmentSpec(m, 0, pattern.k_design), NoiseSpec.none())
    assert np.all(np.isnan(s.frames[0, :m]))
    np.testing.assert_array_equal(s.frames[0, m:], aligned_stream.frames[0, :-m])


def test_drift_schedule_over_100_frames():
    pat = ScanPattern(4, 20, (-0.3, 0.3), (-0.2, 0.2), 1e-6, frame_period_laser=500e-6)
    scene = Scene((WALL,))
    s = simulate_frames(scene, pat, MisalignmentSpec(5, 3.4, 20), NoiseSpec.none(), 100)
    for j in range(100):
        first_valid = int(np.argmax(~np.isnan(s.frames[j])))
        assert first_valid == round(5 + 3.4 * j)


def test_noise_is_deterministic(scene, pattern):
    spec = MisalignmentSpec(3, 1.5, 451)
    a = simulate_frames(scene, pattern, spec, NoiseSpec(0.01, 0.02, 0.05, 99), 3)
    b = simulate_frames(scene, pattern, spec, NoiseSpec(0.01, 0.02, 0.05, 99), 3)
    c = simulate_frames(scene, pattern, spec, NoiseSpec(0.01, 0.02, 0.05, 100), 3)
    assert a == b
    assert np.array_equal(a.frames.tobytes(), b.frames.tobytes())
    assert not a == c


def test_per_frame_seed_derivation(scene, pattern):
    """Frame j is drawn from seed ^ j, independent of how many frames are simulated."""
    spec = MisalignmentSpec(0, 0, 450)
    many = simulate_frames(scene, pattern, spec, NoiseSpec(0.0, 0.02, 0.01, 7), 4)
    one = simulate_frames(scene, pattern, spec, NoiseSpec(0.0, 0.02, 0.01, 7 ^ 3), 1)
    np.testing.assert_array_equal(many.frames[3], one.frames[0])


def test_noise_statistics(scene, pattern, aligned_stream):
    s = simulate_frames(scene, pattern, MisalignmentSpec(0, 0, 450), NoiseSpec(0.0, 0.02, 0.1, 3), 1)
    clean = aligned_stream.frames[0]
    valid = ~np.isnan(clean)
    dropped = np.isnan(s.frames[0]) & valid
    assert dropped.sum() / valid.sum() == pytest.approx(0.1, abs=0.01)
    keep = valid & ~dropped
    z = (s.frames[0][keep] - clean[keep]) / (0.02 * clean[keep])
    assert abs(z.mean()) < 0.03
    assert z.std() == pytest.approx(1.0, abs=0.03)
    assert np.all(s.frames[0][keep] >= 0)


def test_geometric_consistency_of_aligned_plane_scan():
    pat = small_pattern(True)
    s = simulate_frames(Scene((WALL,)), pat, MisalignmentSpec(0, 0, 6), NoiseSpec.none())
    cloud = reconstruct_point_cloud(s.frames[0], 0, 6, pat)
    assert len(cloud) == 24
    assert np.max(np.abs(cloud[:, 2] - 10.0)) < 1e-9


def test_range_stream_validation():
    with pytest.raises(ValueError):
        RangeStream(np.array([[1.0, -1.0]]), 1e-6)
    with pytest.raises(ValueError):
        RangeStream(np.array([[1.0, 2.0]]), 0.0)
    s = RangeStream([1.0, np.nan, 3.0], 1e-6)
    assert s.n_frames == 1 and s.pulses_per_frame == 3


def test_spec_validation():
    with pytest.raises(ValueError):
        MisalignmentSpec(-1)
    with pytest.raises(ValueError):
        MisalignmentSpec(0, 0, 1)
    with pytest.raises(ValueError):
        NoiseSpec(dropout_prob=1.0)
    with pytest.raises(ValueError):
        NoiseSpec(range_sigma=-1)
