"""Bin-array environment: axis-aligned box obstacles, named interior regions,
and the signed-distance queries the collision costs are built on."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .kinematics import ArmModel, forward_kinematics

try:
    from numba import njit as _njit

    @_njit(cache=True, fastmath=False)
    def _sdf_min_kernel(px, py, cx, cy, hx, hy, out):  # pragma: no cover - jitted
        for i in range(px.size):
            best = np.inf
            for m in range(cx.size):
                dx = abs(px[i] - cx[m]) - hx[m]
                dy = abs(py[i] - cy[m]) - hy[m]
                ox = dx if dx > 0.0 else 0.0
                oy = dy if dy > 0.0 else 0.0
                outside = np.sqrt(ox * ox + oy * oy)
                mx = dx if dx > dy else dy
                inside = mx if mx < 0.0 else 0.0
                d = outside + inside
                if d < best:
                    best = d
            out[i] = best

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

__all__ = [
    "Box",
    "World",
    "WorldConfigError",
    "sdf_point",
    "arm_clearance",
    "region_of",
    "build_bin_array",
]


class WorldConfigError(ValueError):
    """Invalid world geometry or builder parameters."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle, min strictly below max on both axes."""

    min: NDArray[np.float64]
    max: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "min", np.asarray(self.min, dtype=np.float64))
        object.__setattr__(self, "max", np.asarray(self.max, dtype=np.float64))
        if not np.all(self.min < self.max):
            raise WorldConfigError(f"degenerate box: min={self.min}, max={self.max}")

    def contains(self, p: NDArray) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(p >= self.min) and np.all(p <= self.max))

    @property
    def center(self) -> NDArray[np.float64]:
        return 0.5 * (self.min + self.max)

    @property
    def half(self) -> NDArray[np.float64]:
        return 0.5 * (self.max - self.min)


def _open_overlap(a: Box, b: Box, tol: float = 1e-9) -> bool:
    """True when the open interiors of two boxes overlap by more than ``tol``."""
    return bool(np.all(a.min < b.max - tol) and np.all(b.min < a.max - tol))


@dataclass(frozen=True)
class World:
    """Immutable obstacle set plus named interior regions.

    bin_opening_y is the y-coordinate above which the space over the bin row
    is free of obstacles.
    """

    obstacles: tuple[Box, ...]
    regions: dict[str, Box]
    bin_opening_y: float
    _cx: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    _cy: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    _hx: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    _hy: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if not self.obstacles:
            raise WorldConfigError("world needs at least one obstacle")
        for name, region in self.regions.items():
            for obs in self.obstacles:
                if _open_overlap(region, obs):
                    raise WorldConfigError(
                        f"region {name!r} intersects an obstacle at {obs.min}..{obs.max}"
                    )
            if name.startswith("bin") and region.max[1] > self.bin_opening_y + 1e-12:
                raise WorldConfigError(f"bin region {name!r} extends above the opening")
        centers = np.array([b.center for b in self.obstacles])
        halves = np.array([b.half for b in self.obstacles])
        object.__setattr__(self, "_cx", np.ascontiguousarray(centers[:, 0]))
        object.__setattr__(self, "_cy", np.ascontiguousarray(centers[:, 1]))
        object.__setattr__(self, "_hx", np.ascontiguousarray(halves[:, 0]))
        object.__setattr__(self, "_hy", np.ascontiguousarray(halves[:, 1]))


def sdf_point(world: World, p: NDArray) -> NDArray[np.float64]:
    """Signed distance from point(s) ``(..., 2)`` to the nearest obstacle.

    Negative inside an obstacle; exact Euclidean distance outside, including
    corner regions. Coordinates are handled separately to keep the hot loop
    free of axis stacking.
    """
    p = np.asarray(p, dtype=np.float64)
    if _HAVE_NUMBA and p.ndim >= 1:
        px = np.ascontiguousarray(p[..., 0]).reshape(-1)
        py = np.ascontiguousarray(p[..., 1]).reshape(-1)
        out = np.empty(px.size)
        _sdf_min_kernel(px, py, world._cx, world._cy, world._hx, world._hy, out)
        return out.reshape(p.shape[:-1])
    dx = np.abs(p[..., 0, None] - world._cx)
    dx -= world._hx
    dy = np.abs(p[..., 1, None] - world._cy)
    dy -= world._hy
    ox = np.maximum(dx, 0.0)
    oy = np.maximum(dy, 0.0)
    ox *= ox
    oy *= oy
    ox += oy
    outside = np.sqrt(ox, out=ox)
    inside = np.minimum(np.maximum(dx, dy), 0.0)
    outside += inside
    return np.min(outside, axis=-1)


def link_sample_points(
    model: ArmModel, q: NDArray, samples_per_link: int, points: NDArray | None = None
) -> NDArray[np.float64]:
    """Uniform samples (endpoints inclusive) along every link, ``(..., N*S, 2)``."""
    if samples_per_link < 2:
        raise ValueError("samples_per_link must be >= 2")
    if points is None:
        points = forward_kinematics(model, q)
    a = points[..., :-1, :]  # (..., N, 2)
    b = points[..., 1:, :]
    ts = np.linspace(0.0, 1.0, samples_per_link)
    samples = a[..., :, None, :] + ts[:, None] * (b - a)[..., :, None, :]
    return samples.reshape(samples.shape[:-3] + (-1, 2))


def arm_clearance(
    world: World,
    model: ArmModel,
    q: NDArray,
    samples_per_link: int,
    points: NDArray | None = None,
) -> NDArray[np.float64]:
    """Minimum signed distance over sampled arm points; negative in collision."""
    samples = link_sample_points(model, q, samples_per_link, points=points)
    return np.min(sdf_point(world, samples), axis=-1)


def region_of(world: World, p: NDArray) -> str:
    """Name of the region containing ``p`` (boundaries inclusive), else "free".

    Ties on shared boundaries go to the lexicographically first region name.
    """
    for name in sorted(world.regions):
        if world.regions[name].contains(p):
            return name
    return "free"


def build_bin_array(
    bin_count: int,
    bin_width: float,
    bin_depth: float,
    wall_thickness: float,
    row_x0: float,
    floor_y: float,
    floor_thickness: float,
    tote: dict,
    fill_levels: list[float] | None = None,
    wall_heights: list[float] | None = None,
) -> World:
    """Construct a row of open-top bins plus a shipping tote.

    The bin row starts at ``row_x0`` (left face of the first wall) and sits on
    a floor whose top is ``floor_y``. ``tote`` gives {x0, width, depth,
    wall_thickness} for a shallower open-top container, which must not overlap
    the bin row. ``fill_levels`` optionally gives the height of the contents
    resting in each bin; filled volume becomes an obstacle and the bin's
    region shrinks to the air between the fill surface and the opening.
    ``wall_heights`` optionally gives each of the ``bin_count + 1`` dividing
    walls its own height (default: ``bin_depth`` for all); the opening — the
    y level above which the row is obstacle-free — is the tallest wall's top.
    """
    if bin_count < 2:
        raise WorldConfigError("need at least 2 bins")
    for name, v in (
        ("bin_width", bin_width),
        ("bin_depth", bin_depth),
        ("wall_thickness", wall_thickness),
        ("floor_thickness", floor_thickness),
    ):
        if v <= 0:
            raise WorldConfigError(f"{name} must be positive, got {v}")

    if wall_heights is None:
        wall_heights = [bin_depth] * (bin_count + 1)
    if len(wall_heights) != bin_count + 1:
        raise WorldConfigError("wall_heights must give one height per wall")
    if any(h <= 0 for h in wall_heights):
        raise WorldConfigError("wall heights must be positive")
    opening_y = floor_y + max(wall_heights)
    pitch = bin_width + wall_thickness
    row_x1 = row_x0 + wall_thickness + bin_count * pitch

    obstacles: list[Box] = []
    regions: dict[str, Box] = {}
    for i in range(bin_count + 1):
        x = row_x0 + i * pitch
        obstacles.append(
            Box((x, floor_y), (x + wall_thickness, floor_y + wall_heights[i]))
        )
    obstacles.append(Box((row_x0, floor_y - floor_thickness), (row_x1, floor_y)))
    if fill_levels is None:
        fill_levels = [0.0] * bin_count
    if len(fill_levels) != bin_count:
        raise WorldConfigError("fill_levels must give one height per bin")
    for i, fill in enumerate(fill_levels):
        if not 0.0 <= fill < opening_y - floor_y:
            raise WorldConfigError(
                f"fill level {fill} of bin {i} must lie in [0, opening height)"
            )
        x = row_x0 + wall_thickness + i * pitch
        if fill > 0.0:
            obstacles.append(Box((x, floor_y), (x + bin_width, floor_y + fill)))
        regions[f"bin_{i}"] = Box((x, floor_y + fill), (x + bin_width, opening_y))

    tw = float(tote["wall_thickness"])
    if tw <= 0:
        raise WorldConfigError("tote wall_thickness must be positive")
    tx0, twidth, tdepth = float(tote["x0"]), float(tote["width"]), float(tote["depth"])
    tfloor_y = float(tote.get("floor_y", floor_y))
    ttop = tfloor_y + tdepth
    if ttop > opening_y:
        raise WorldConfigError("tote walls must not rise above the bin opening")
    tx1 = tx0 + 2 * tw + twidth
    if tx1 > row_x0 and tx0 < row_x1:
        raise WorldConfigError("tote overlaps the bin row")
    obstacles.append(Box((tx0, tfloor_y), (tx0 + tw, ttop)))
    obstacles.append(Box((tx0 + tw + twidth, tfloor_y), (tx1, ttop)))
    obstacles.append(Box((tx0, tfloor_y - floor_thickness), (tx1, tfloor_y)))
    regions["tote"] = Box((tx0 + tw, tfloor_y), (tx0 + tw + twidth, ttop))

    return World(obstacles=tuple(obstacles), regions=regions, bin_opening_y=opening_y)
