"""
Synthetic range streams with injected laser/mirror timing misalignment.

The laser fires on a fixed clock of ``pulses_per_frame`` pulses per frame.
The mirror starts its raster ``o(j) = round(m_start + drift * j)`` pulses
late in frame ``j`` and sweeps ``k_true`` pulses per row. Pulses outside
the mirror raster fall in the reset (flyback) phase and return an invalid
echo. The laser is assumed to keep firing during the reset.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .geometry import ScanPattern, raster_azimuths
from .scene import Scene, ray_ranges


@dataclass(frozen=True)
class MisalignmentSpec:
    m_start: int = 0
    drift_pulses_per_frame: float = 0.0
    k_true: int | None = None  # None -> pattern.k_design

    def __post_init__(self):
        if int(self.m_start) != self.m_start or self.m_start < 0:
            raise ValueError("m_start must be an integer >= 0")
        if self.k_true is not None and (int(self.k_true) != self.k_true or self.k_true < 2):
            raise ValueError("k_true must be an integer >= 2")

    def resolve_k(self, pattern: ScanPattern) -> int:
        return pattern.k_design if self.k_true is None else int(self.k_true)

    def offset(self, frame_index: int) -> int:
        """Effective integer start offset of ``frame_index`` in pulses."""
        # round half away from zero; np.round would send 0.5 to 0
        o = self.m_start + self.drift_pulses_per_frame * frame_index
        return int(np.floor(o + 0.5))


@dataclass(frozen=True)
class NoiseSpec:
    """Range noise ``N(0, range_sigma + range_sigma_rel * R)`` plus Bernoulli dropouts."""

    range_sigma: float = 0.0
    range_sigma_rel: float = 0.02
    dropout_prob: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if self.range_sigma < 0 or self.range_sigma_rel < 0:
            raise ValueError("range_sigma must be >= 0")
        if not 0 <= self.dropout_prob < 1:
            raise ValueError("dropout_prob must be in [0, 1)")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must fit in 64 unsigned bits")

    @classmethod
    def none(cls, rng_seed: int = 0) -> "NoiseSpec":
        return cls(0.0, 0.0, 0.0, rng_seed)

    @property
    def is_noiseless(self) -> bool:
        return self.range_sigma == 0 and self.range_sigma_rel == 0 and self.dropout_prob == 0


@dataclass
class RangeStream:
    """Frames of raw ranges, shape ``(n_frames, pulses_per_frame)``; NaN marks an invalid echo."""

    frames: np.ndarray
    delta_t: float

    def __post_init__(self):
        self.frames = np.atleast_2d(np.asarray(self.frames, dtype=float))
        if self.frames.ndim != 2:
            raise ValueError("frames must be 2-D")
        if np.any(self.frames < 0):
            raise ValueError("ranges must be >= 0 or NaN")
        if not self.delta_t > 0:
            raise ValueError("delta_t must be > 0")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def pulses_per_frame(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other):
        if not isinstance(other, RangeStream):
            return NotImplemented
        return (self.delta_t == other.delta_t and self.frames.shape == other.frames.shape
                and np.array_equal(self.frames, other.frames, equal_nan=True))


def mirror_cell_indices(pattern: ScanPattern, spec: MisalignmentSpec, frame_index: int) -> np.ndarray:
    """Mirror raster index for every laser pulse of a frame; -1 while resetting."""
    k = spec.resolve_k(pattern)
    q = np.arange(pattern.pulses_per_frame) - spec.offset(frame_index)
    q[(q < 0) | (q >= pattern.rows * k)] = -1
    return q


def mirror_pointing(pattern: ScanPattern, spec: MisalignmentSpec, frame_index: int, pulse_index: int):
    """Actual (theta, phi) of the mirror when the laser fires ``pulse_index``.

    Returns None while the mirror is in its reset phase.
    """
    if not 0 <= pulse_index < pattern.pulses_per_frame:
        raise ValueError("pulse_index out of range")
    k = spec.resolve_k(pattern)
    q = pulse_index - spec.offset(frame_index)
    if q < 0 or q >= pattern.rows * k:
        return None
    theta, phi = raster_azimuths(pattern, k)[q]
    return float(theta), float(phi)


def frame_rng(noise: NoiseSpec, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(int(noise.rng_seed) ^ int(frame_index))


def apply_noise(ranges: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    # draw both channels for every pulse so the stream depends only on the seed
    n = ranges.shape[0]
    gauss = rng.standard_normal(n)
    drop = rng.random(n) < noise.dropout_prob
    sigma = noise.range_sigma + noise.range_sigma_rel * ranges
    out = np.maximum(ranges + sigma * gauss, 0.0)
    out[drop] = np.nan
    return out


def simulate_frames(scene: Scene, pattern: ScanPattern, spec: MisalignmentSpec,
                    noise: NoiseSpec | None = None, n_frames: int = 1) -> RangeStream:
    """Range stream as recorded by the laser clock under the given misalignment."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    noise = NoiseSpec.none() if noise is None else noise
    k = spec.resolve_k(pattern)
    az = raster_azimuths(pattern, k)
    # range for each mirror raster cell, shared by every frame
    cell_range = np.append(ray_ranges(scene, az[:, 0], az[:, 1]), np.nan)
    frames: List[np.ndarray] = []
    for j in range(n_frames):
        r = cell_range[mirror_cell_indices(pattern, spec, j)]
        if not noise.is_noiseless:
            r = apply_noise(r, noise, frame_rng(noise, j))
        frames.append(r)
    return RangeStream(np.vstack(frames), pattern.delta_t)
