"""MEMS LiDAR scan simulation and minimum-vertical-gradient time-synchronization self-calibration."""

from .calibration import (
    CalibrationResult,
    CostSurface,
    DriftEstimate,
    FrameGrid,
    SearchSpec,
    calibrate_frame,
    compute_cost_surface,
    drift_from_track,
    mvg_cost,
    mvg_cost_raw,
    plane_residual_rms,
    reconstruct_point_cloud,
    reshape_frame,
    track_offsets,
    tv_cost,
)
from .geometry import (
    CartesianPoint,
    PolarPoint,
    ScanPattern,
    cartesian_to_polar,
    design_azimuth_sequence,
    polar_to_cartesian,
    range_from_tof,
)
from .kernels import BACKEND
from .scene import INVALID, Box, Plane, Scene, ray_range, ray_ranges
from .simulator import MisalignmentSpec, NoiseSpec, RangeStream, mirror_pointing, simulate_frames

__version__ = "0.1.0"
