"""Reference scene and raster used by the acceptance suite, the benchmark and the demo config."""

from .geometry import ScanPattern
from .scene import Box, Plane, Scene

BACK_PLANE = Plane((0.0, 0.0, 1.0), 12.0)


def fixture_pattern(serpentine: bool = True, reset_pulses: int = 200, rows: int = 64,
                    k_design: int = 450, delta_t: float = 1e-6) -> ScanPattern:
    """64 rows of 450 design pulses at 1 MHz, with ``reset_pulses`` of flyback per frame."""
    return ScanPattern(
        rows=rows,
        k_design=k_design,
        theta_range=(-0.35, 0.35),
        phi_range=(-0.25, 0.25),
        delta_t=delta_t,
        serpentine=serpentine,
        frame_period_laser=(rows * k_design + reset_pulses) * delta_t,
    )


def fixture_scene() -> Scene:
    """Back wall at z = 12 m with two boxes standing in front of it."""
    return Scene((
        BACK_PLANE,
        Box((-1.8, -1.2, 6.0), (-0.5, 0.8, 7.0)),
        Box((0.8, -0.5, 8.5), (2.4, 2.0, 9.5)),
    ))


def constant_scene(range_m: float = 10.0) -> Scene:
    """Every pulse returns the same range: (m, k) cannot be identified."""
    return Scene((), background_range=range_m)
