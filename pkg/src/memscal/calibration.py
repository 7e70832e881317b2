"""
Minimum-vertical-gradient self-calibration.

A frame's range sequence is cut into rows of ``k`` pulses after dropping
the first ``m`` pulses. When (m, k) matches the mirror, vertically adjacent
cells look along nearly the same horizontal azimuth and their ranges agree;
any misregistration shears or scrambles the columns and inflates the
summed absolute vertical difference. The calibrated (m, k) is the
exhaustive-search minimizer of that cost, normalized by the number of
valid vertical pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from . import kernels
from ._kernels_py import grid_view
from .errors import (
    CalibrationFailedError,
    DriftEstimationError,
    HypothesisOutOfRangeError,
    NoSignalError,
)
from .geometry import ScanPattern, column_angles, polar_to_cartesian_array, row_angles
from .simulator import RangeStream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameGrid:
    """Row-major view of one frame under hypothesis (m, k); NaN cells are invalid."""

    values: np.ndarray
    m: int
    k: int
    serpentine: bool = False

    @property
    def rows_used(self) -> int:
        return self.values.shape[0]


def reshape_frame(frame, m: int, k: int, serpentine: bool = False) -> FrameGrid:
    """Drop ``m`` leading pulses and cut the rest into full rows of ``k``.

    Odd rows are reversed for serpentine scans so that a column always maps
    to the same horizontal azimuth. A trailing partial row is discarded.
    """
    frame = np.asarray(frame, dtype=float)
    n = frame.shape[0]
    if not 0 <= m < n:
        raise HypothesisOutOfRangeError(f"m={m} outside [0, {n})")
    if not 2 <= k <= n - m:
        raise HypothesisOutOfRangeError(f"k={k} outside [2, {n - m}]")
    return FrameGrid(grid_view(frame, int(m), int(k), serpentine), int(m), int(k), serpentine)


def _vertical_pairs(values):
    d = np.abs(np.diff(values, axis=0))
    return d[~np.isnan(d)]


def mvg_cost(grid: FrameGrid) -> Tuple[float, int]:
    """Mean absolute vertical difference over valid pairs, and the pair count."""
    if grid.rows_used < 2:
        raise NoSignalError("grid needs at least 2 rows")
    d = _vertical_pairs(grid.values)
    if d.size == 0:
        raise NoSignalError("no valid vertical pairs")
    return float(d.sum() / d.size), int(d.size)


def mvg_cost_raw(grid: FrameGrid) -> float:
    """Unnormalized summed absolute vertical difference (favors large m; kept for comparison)."""
    return float(_vertical_pairs(grid.values).sum())


def tv_cost(grid: FrameGrid) -> float:
    """Mean isotropic total variation over cells whose right and lower neighbors are valid."""
    v = grid.values
    if v.shape[0] < 2 or v.shape[1] < 2:
        raise NoSignalError("grid needs at least 2 rows and 2 columns")
    dx = v[:-1, 1:] - v[:-1, :-1]
    dy = v[1:, :-1] - v[:-1, :-1]
    tv = np.sqrt(dx * dx + dy * dy)
    tv = tv[~np.isnan(tv)]
    if tv.size == 0:
        raise NoSignalError("no valid neighborhoods")
    return float(tv.mean())


@dataclass(frozen=True)
class SearchSpec:
    """Inclusive (m, k) search box plus admissibility and ambiguity thresholds."""

    m_range: Tuple[int, int]
    k_range: Tuple[int, int]
    min_valid_pairs: int = 1
    degeneracy_ratio: float = 0.02

    def __post_init__(self):
        m0, m1 = (int(v) for v in self.m_range)
        k0, k1 = (int(v) for v in self.k_range)
        if m0 < 0 or m1 < m0:
            raise ValueError("m_range must satisfy 0 <= min <= max")
        if k0 < 2 or k1 < k0:
            raise ValueError("k_range must satisfy 2 <= min <= max")
        if self.min_valid_pairs < 1:
            raise ValueError("min_valid_pairs must be >= 1")
        if self.degeneracy_ratio < 0:
            raise ValueError("degeneracy_ratio must be >= 0")
        object.__setattr__(self, "m_range", (m0, m1))
        object.__setattr__(self, "k_range", (k0, k1))

    @classmethod
    def around(cls, k_design: int, m_max: int = 49, k_halfwidth: int = 5, **kw) -> "SearchSpec":
        return cls((0, m_max), (max(2, k_design - k_halfwidth), k_design + k_halfwidth), **kw)

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(self.m_range[0], self.m_range[1] + 1)

    @property
    def k_values(self) -> np.ndarray:
        return np.arange(self.k_range[0], self.k_range[1] + 1)

    def with_k(self, k: int) -> "SearchSpec":
        return SearchSpec(self.m_range, (k, k), self.min_valid_pairs, self.degeneracy_ratio)


@dataclass
class CostSurface:
    """Normalized cost per (m, k). Inadmissible cells hold NaN, never 0."""

    m_values: np.ndarray
    k_values: np.ndarray
    cost: np.ndarray
    valid_pairs: np.ndarray
    raw_sum: np.ndarray | None = None

    @property
    def admissible(self) -> np.ndarray:
        return ~np.isnan(self.cost)

    def cost_at(self, m: int, k: int) -> float:
        a = int(np.searchsorted(self.m_values, m))
        b = int(np.searchsorted(self.k_values, k))
        if a >= self.m_values.size or self.m_values[a] != m or b >= self.k_values.size or self.k_values[b] != k:
            raise KeyError((m, k))
        return float(self.cost[a, b])


def compute_cost_surface(frame, search: SearchSpec, serpentine: bool, cost: str = "mvg") -> CostSurface:
    """Evaluate the chosen cost at every (m, k) of ``search``.

    ``cost="mvg"`` runs on the selected kernel backend; ``cost="tv"`` is a
    NumPy-only comparison cost.
    """
    frame = np.asarray(frame, dtype=float)
    ms, ks = search.m_values, search.k_values
    if cost == "mvg":
        sums, pairs = kernels.cost_surface(frame, ms, ks, serpentine)
        ok = pairs >= search.min_valid_pairs
        with np.errstate(invalid="ignore", divide="ignore"):
            j = np.where(ok, sums / np.maximum(pairs, 1), np.nan)
        return CostSurface(ms, ks, j, pairs, sums)
    if cost != "tv":
        raise ValueError(f"unknown cost {cost!r}")
    j = np.full((ms.size, ks.size), np.nan)
    pairs = np.zeros((ms.size, ks.size), dtype=np.int64)
    n = frame.shape[0]
    for a, m in enumerate(ms):
        for b, k in enumerate(ks):
            if m >= n or k > n - m:
                continue
            grid = reshape_frame(frame, m, k, serpentine)
            if grid.rows_used < 2:
                continue
            vert = _vertical_pairs(grid.values)
            pairs[a, b] = vert.size
            if vert.size < search.min_valid_pairs:
                continue
            try:
                j[a, b] = tv_cost(grid)
            except NoSignalError:
                pass
    return CostSurface(ms, ks, j, pairs)


@dataclass
class CalibrationResult:
    m_star: int
    k_star: int
    t_s: float
    cost_surface: CostSurface
    degenerate: bool
    best_cost: float = float("nan")
    runner_up_cost: float = float("nan")


def _argmin_and_runner_up(surface: CostSurface):
    cost = surface.cost
    ok = surface.admissible
    if not ok.any():
        raise CalibrationFailedError("every (m, k) hypothesis is inadmissible")
    best = np.nanmin(cost)
    # row-major scan finds the smallest m first, then the smallest k
    a, b = (int(v) for v in np.argwhere(ok & (cost == best))[0])
    outside = ok.copy()
    outside[max(a - 1, 0):a + 2, max(b - 1, 0):b + 2] = False
    runner = float(cost[outside].min()) if outside.any() else float("nan")
    return a, b, float(best), runner


def _is_degenerate(best: float, runner: float, ratio: float) -> bool:
    if np.isnan(runner):
        return False
    if best == 0.0:
        return runner == 0.0
    return (runner - best) / best < ratio


def calibrate_frame(frame, search: SearchSpec, pattern: ScanPattern, cost: str = "mvg") -> CalibrationResult:
    """Recover the start offset and pulses per row of one frame by exhaustive search."""
    frame = np.asarray(frame, dtype=float)
    n = frame.shape[0]
    if n < 2 * search.k_range[0]:
        raise HypothesisOutOfRangeError("frame shorter than two rows of the smallest k")
    if search.k_range[1] > n:
        raise HypothesisOutOfRangeError("k_range exceeds the frame length")
    surface = compute_cost_surface(frame, search, pattern.serpentine, cost)
    a, b, best, runner = _argmin_and_runner_up(surface)
    m_star = int(surface.m_values[a])
    k_star = int(surface.k_values[b])
    return CalibrationResult(
        m_star=m_star,
        k_star=k_star,
        t_s=pattern.delta_t * m_star,
        cost_surface=surface,
        degenerate=_is_degenerate(best, runner, search.degeneracy_ratio),
        best_cost=best,
        runner_up_cost=runner,
    )


def drift_from_track(m_track, delta_t: float) -> float:
    """Mean absolute frame-to-frame change of the start offset, in seconds."""
    m = np.asarray(m_track, dtype=float)
    if m.size < 2:
        raise DriftEstimationError("need at least 2 frames")
    return float(delta_t / (m.size - 1) * np.abs(np.diff(m)).sum())


@dataclass
class DriftEstimate:
    t_e: float
    m_track: List[int]
    signed_slope: float
    k_star: int = 0
    frames: List[int] = field(default_factory=list)
    excluded_frames: List[int] = field(default_factory=list)
    degenerate_frames: List[int] = field(default_factory=list)


def _probe_indices(n_frames: int, probe_frames: int | None) -> np.ndarray:
    if probe_frames is None or probe_frames >= n_frames:
        return np.arange(n_frames)
    return np.unique(np.linspace(0, n_frames - 1, probe_frames).round().astype(int))


def track_offsets(stream: RangeStream, search: SearchSpec, pattern: ScanPattern,
                  probe_frames: int | None = 5) -> DriftEstimate:
    """Per-frame start offsets and the frame-drift estimate derived from them.

    The full (m, k) search runs on ``probe_frames`` evenly spaced frames
    (all frames when None); the modal k from that pass is then held fixed
    while m is recovered for every frame.
    """
    if stream.n_frames < 2:
        raise DriftEstimationError("stream needs at least 2 frames")
    k_votes = []
    for j in _probe_indices(stream.n_frames, probe_frames):
        try:
            k_votes.append(calibrate_frame(stream.frames[j], search, pattern).k_star)
        except CalibrationFailedError:
            log.warning("frame %d failed during the k pass", j)
    if not k_votes:
        raise DriftEstimationError("no frame could be calibrated")
    values, counts = np.unique(k_votes, return_counts=True)
    k_mode = int(values[np.argmax(counts)])  # ties go to the smaller k

    fixed = search.with_k(k_mode)
    frames, m_track, excluded, degenerate = [], [], [], []
    for j in range(stream.n_frames):
        try:
            res = calibrate_frame(stream.frames[j], fixed, pattern)
        except CalibrationFailedError:
            log.warning("frame %d excluded: calibration failed", j)
            excluded.append(j)
            continue
        frames.append(j)
        m_track.append(res.m_star)
        if res.degenerate:
            degenerate.append(j)
    if len(m_track) < 2:
        raise DriftEstimationError(f"only {len(m_track)} frame(s) survived calibration")
    slope = float(np.polyfit(frames, np.asarray(m_track, dtype=float) * stream.delta_t, 1)[0])
    return DriftEstimate(
        t_e=drift_from_track(m_track, stream.delta_t),
        m_track=m_track,
        signed_slope=slope,
        k_star=k_mode,
        frames=frames,
        excluded_frames=excluded,
        degenerate_frames=degenerate,
    )


def reconstruct_point_cloud(frame, m: int, k: int, pattern: ScanPattern) -> np.ndarray:
    """Pair each grid cell with its design azimuth and project; returns an (N, 3) array.

    Rows beyond the pattern's row count and invalid cells are omitted.
    """
    grid = reshape_frame(frame, m, k, pattern.serpentine)
    n_rows = min(grid.rows_used, pattern.rows)
    theta = column_angles(pattern, k)
    phi = row_angles(pattern)[:n_rows]
    th, ph = np.meshgrid(theta, phi)
    r = grid.values[:n_rows]
    keep = ~np.isnan(r)
    return polar_to_cartesian_array(th[keep], ph[keep], r[keep]).reshape(-1, 3)


def plane_residual_rms(points, normal, offset) -> float:
    """RMS signed distance of ``points`` to the plane ``normal . x = offset``."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if points.shape[0] == 0:
        return float("nan")
    d = points @ np.asarray(normal, dtype=float) - offset
    return float(np.sqrt(np.mean(d * d)))
