"""Static scenes of planes and axis-aligned boxes, ray-cast from the sensor origin."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

INVALID = float("nan")  # invalid-echo sentinel used in every range array


@dataclass(frozen=True)
class Plane:
    """Infinite plane ``{x : normal . x = offset}``."""

    normal: Tuple[float, float, float]
    offset: float

    def __post_init__(self):
        n = tuple(float(v) for v in self.normal)
        if len(n) != 3:
            raise ValueError("plane normal must have 3 components")
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def intersect(self, dirs: np.ndarray) -> np.ndarray:
        denom = dirs @ np.asarray(self.normal)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = self.offset / denom
        return np.where((denom != 0) & (t > 0), t, np.inf)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by its min and max corners."""

    min_corner: Tuple[float, float, float]
    max_corner: Tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min_corner)
        hi = tuple(float(v) for v in self.max_corner)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box corners must have 3 components")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("box min corner must be < max corner on every axis")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    def intersect(self, dirs: np.ndarray) -> np.ndarray:
        # slab method, rays from the origin
        lo = np.asarray(self.min_corner)
        hi = np.asarray(self.max_corner)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / dirs
            t0 = lo * inv
            t1 = hi * inv
        tmin = np.minimum(t0, t1)
        tmax = np.maximum(t0, t1)
        # a zero direction component leaves the slab test to the origin's position
        zero = dirs == 0
        inside = (lo <= 0) & (0 <= hi)
        tmin = np.where(zero, np.where(inside, -np.inf, np.inf), tmin)
        tmax = np.where(zero, np.where(inside, np.inf, -np.inf), tmax)
        t_near = tmin.max(axis=-1)
        t_far = tmax.min(axis=-1)
        hit = t_near <= t_far
        t = np.where(t_near > 0, t_near, t_far)
        return np.where(hit & (t > 0), t, np.inf)


Primitive = Union[Plane, Box]


@dataclass(frozen=True)
class Scene:
    primitives: Tuple[Primitive, ...] = field(default_factory=tuple)
    background_range: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        if self.background_range is not None and not self.background_range >= 0:
            raise ValueError("background_range must be >= 0")


def ray_directions(theta, phi) -> np.ndarray:
    """Unit ray directions along (tan theta, tan phi, 1)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    d = np.stack(np.broadcast_arrays(np.tan(theta), np.tan(phi), np.ones_like(theta)), axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def ray_ranges(scene: Scene, theta, phi) -> np.ndarray:
    """Distance to the nearest hit for each (theta, phi); background or NaN on a miss."""
    dirs = ray_directions(theta, phi)
    t = np.full(dirs.shape[:-1], np.inf)
    for prim in scene.primitives:
        t = np.minimum(t, prim.intersect(dirs))
    miss = INVALID if scene.background_range is None else scene.background_range
    return np.where(np.isfinite(t), t, miss)


def ray_range(scene: Scene, theta: float, phi: float) -> float:
    """Range along a single pulse direction; NaN signals an invalid echo."""
    return float(ray_ranges(scene, theta, phi))


def make_scene(planes: Sequence[Plane] = (), boxes: Sequence[Box] = (), background_range=None) -> Scene:
    return Scene(tuple(planes) + tuple(boxes), background_range)
