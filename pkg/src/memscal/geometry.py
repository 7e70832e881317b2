"""
Ranging and projection model of a MEMS LiDAR.

Angles follow the tangent-plane convention used throughout the package: a
pulse with horizontal azimuth theta and vertical azimuth phi travels along
(tan(theta), tan(phi), 1), so z is the boresight axis. This is not the
usual spherical parameterization and must not be swapped for it.

Vertical azimuth phi increases with row index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import BehindSensorError, InvalidIntervalError, SingularityError

SPEED_OF_LIGHT = 2.99792458e8  # [m/s]
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class ScanPattern:
    """Design-time raster description of one frame.

    ``frame_period_laser`` defaults to exactly ``rows * k_design * delta_t``
    when omitted; pass a longer period to leave pulses for the mirror reset.
    """

    rows: int
    k_design: int
    theta_range: Tuple[float, float]
    phi_range: Tuple[float, float]
    delta_t: float
    serpentine: bool = True
    frame_period_laser: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta_range", tuple(float(v) for v in self.theta_range))
        object.__setattr__(self, "phi_range", tuple(float(v) for v in self.phi_range))
        if self.frame_period_laser is None:
            object.__setattr__(self, "frame_period_laser", self.rows * self.k_design * self.delta_t)
        if int(self.rows) != self.rows or self.rows < 2:
            raise ValueError("rows must be an integer >= 2")
        if int(self.k_design) != self.k_design or self.k_design < 2:
            raise ValueError("k_design must be an integer >= 2")
        for name in ("theta_range", "phi_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy min < max")
            if max(abs(lo), abs(hi)) >= HALF_PI:
                raise ValueError(f"{name} magnitudes must be < pi/2")
        if not self.delta_t > 0:
            raise ValueError("delta_t must be > 0")
        # small slack so a period computed as rows*k*dt in floating point is accepted
        if self.frame_period_laser < self.rows * self.k_design * self.delta_t * (1 - 1e-12):
            raise ValueError("frame_period_laser must be >= rows * k_design * delta_t")

    @property
    def pulses_per_frame(self) -> int:
        """Laser pulses fired per frame period."""
        return int(round(self.frame_period_laser / self.delta_t))

    @property
    def design_pulses(self) -> int:
        return self.rows * self.k_design


@dataclass(frozen=True)
class PolarPoint:
    theta: float
    phi: float
    range: float


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float


def range_from_tof(t_transmit, t_echo, c=SPEED_OF_LIGHT):
    """Round-trip time of flight to one-way range, ``c * (t_echo - t_transmit) / 2``."""
    if not c > 0:
        raise ValueError("c must be > 0")
    dt = np.asarray(t_echo, dtype=float) - np.asarray(t_transmit, dtype=float)
    if np.any(dt < 0):
        raise InvalidIntervalError("echo time precedes transmit time")
    r = c * dt / 2.0
    return float(r) if r.ndim == 0 else r


def _check_azimuth(*angles):
    for a in angles:
        if np.any(np.abs(a) >= HALF_PI):
            raise SingularityError("azimuth magnitude must be < pi/2")


def polar_to_cartesian_array(theta, phi, rng):
    """Vectorized tangent-plane projection; returns an (..., 3) array."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    rng = np.asarray(rng, dtype=float)
    _check_azimuth(theta, phi)
    tt = np.tan(theta)
    tp = np.tan(phi)
    z = rng / np.sqrt(1.0 + tt * tt + tp * tp)
    return np.stack(np.broadcast_arrays(z * tt, z * tp, z), axis=-1)


def cartesian_to_polar_array(xyz):
    """Inverse of :func:`polar_to_cartesian_array`; returns (theta, phi, range)."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    if np.any(z <= 0):
        raise BehindSensorError("points must have z > 0")
    return np.arctan(x / z), np.arctan(y / z), np.sqrt(x * x + y * y + z * z)


def polar_to_cartesian(p: PolarPoint) -> CartesianPoint:
    x, y, z = polar_to_cartesian_array(p.theta, p.phi, p.range)
    return CartesianPoint(float(x), float(y), float(z))


def cartesian_to_polar(p: CartesianPoint) -> PolarPoint:
    theta, phi, r = cartesian_to_polar_array([p.x, p.y, p.z])
    return PolarPoint(float(theta), float(phi), float(r))


def row_angles(pattern: ScanPattern, n_rows: int | None = None) -> np.ndarray:
    """Vertical azimuth of each raster row."""
    lo, hi = pattern.phi_range
    return np.linspace(lo, hi, pattern.rows if n_rows is None else n_rows)


def column_angles(pattern: ScanPattern, k: int | None = None) -> np.ndarray:
    """Horizontal azimuth of each column for ``k`` pulses per row, in scan order of an even row."""
    lo, hi = pattern.theta_range
    return np.linspace(lo, hi, pattern.k_design if k is None else k)


def raster_azimuths(pattern: ScanPattern, k: int) -> np.ndarray:
    """(rows * k, 2) array of (theta, phi) in pulse order for a raster with ``k`` columns."""
    theta = np.tile(column_angles(pattern, k), (pattern.rows, 1))
    if pattern.serpentine:
        theta[1::2] = theta[1::2, ::-1]
    phi = np.repeat(row_angles(pattern), k)
    return np.column_stack([theta.ravel(), phi])


def design_azimuth_sequence(pattern: ScanPattern) -> np.ndarray:
    """Design (theta, phi) for every pulse of a frame, shape ``(rows * k_design, 2)``."""
    return raster_azimuths(pattern, pattern.k_design)
