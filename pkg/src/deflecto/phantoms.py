"""Synthetic refractive-index maps: a fiber bundle, a homogeneous ball and the
Shepp-Logan head. Values are offsets from the surrounding medium index, so the
background is 0.

A pixel belongs to a shape when its center does (no anti-aliasing), which keeps
the images exactly piecewise constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import RimImage
from .errors import InvalidArgument
from .grids import CartesianGrid

FIBER_DELTA_N = 12.1e-3
FIBER_RADIUS = 8.0
BALL_DELTA_N = 2.8e-3
BALL_RADIUS = 60.0


def default_fiber_centers() -> list[tuple[float, float]]:
    """Central fiber, a ring of 3 at radius 30 and a ring of 6 at radius 65 (pixels)."""
    centers = [(0.0, 0.0)]
    for k in range(3):
        a = math.radians(90 + 120 * k)
        centers.append((round(30 * math.cos(a), 6), round(30 * math.sin(a), 6)))
    for k in range(6):
        a = math.radians(30 + 60 * k)
        centers.append((round(65 * math.cos(a), 6), round(65 * math.sin(a), 6)))
    return centers


def ball_default_center(grid: CartesianGrid) -> tuple[float, float]:
    """Pixel (154, 154) of a 1-based 256 x 256 matrix, scaled to ``grid``."""
    scale = grid.n0 / 256
    return ((154 - 1 - 128) * scale, (154 - 1 - 128) * scale)


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    delta_n: float | None = None
    centers: tuple = field(default=())
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("fibers", "ball", "shepp_logan"):
            raise InvalidArgument(f"unknown phantom kind {self.kind!r}")
        if self.radius is not None and not self.radius > 0:
            raise InvalidArgument("radius must be > 0")

    def build(self, grid: CartesianGrid) -> RimImage:
        scale = grid.n0 / 256
        if self.kind == "fibers":
            dn = FIBER_DELTA_N if self.delta_n is None else self.delta_n
            centers = self.centers or [(scale * a, scale * b) for a, b in default_fiber_centers()]
            radius = self.radius if self.radius is not None else FIBER_RADIUS * scale
            return make_fibers(grid, centers, radius, dn)
        if self.kind == "ball":
            dn = BALL_DELTA_N if self.delta_n is None else self.delta_n
            center = self.centers[0] if self.centers else ball_default_center(grid)
            radius = self.radius if self.radius is not None else BALL_RADIUS * scale
            return make_ball(grid, center, radius, dn)
        return make_shepp_logan(grid, 1.0 if self.delta_n is None else self.delta_n)


def _disc_mask(grid: CartesianGrid, center, radius) -> np.ndarray:
    r1, r2 = grid.coordinates()
    c1, c2 = (float(c) * grid.delta_r for c in center)
    return (r1 - c1) ** 2 + (r2 - c2) ** 2 <= (radius * grid.delta_r) ** 2


def _check_inside(grid: CartesianGrid, center, radius):
    # every pixel whose center can fall in the disc must be an interior pixel
    h = grid.n0 // 2
    lo, hi = -h + 1, h - 2
    c1, c2 = center
    if not radius > 0:
        raise InvalidArgument(f"radius must be > 0, got {radius!r}")
    if c1 - radius < lo or c1 + radius > hi or c2 - radius < lo or c2 + radius > hi:
        raise InvalidArgument(f"disc at {center} with radius {radius} reaches the FoV border")


def make_fibers(grid: CartesianGrid, centers, radius: float = FIBER_RADIUS,
                delta_n: float = FIBER_DELTA_N) -> RimImage:
    """Discs of equal radius and contrast at the given signed pixel centers."""
    centers = [tuple(map(float, c)) for c in centers]
    if not centers:
        raise InvalidArgument("at least one fiber center is required")
    for c in centers:
        _check_inside(grid, c, radius)
    for i, a in enumerate(centers):
        for b in centers[i + 1:]:
            if math.dist(a, b) <= 2 * radius:
                raise InvalidArgument(f"fibers at {a} and {b} overlap")
    mask = np.zeros(grid.shape, dtype=bool)
    for c in centers:
        mask |= _disc_mask(grid, c, radius)
    return RimImage.from_2d(grid, np.where(mask, float(delta_n), 0.0))


def make_ball(grid: CartesianGrid, center, radius: float = BALL_RADIUS,
              delta_n: float = BALL_DELTA_N) -> RimImage:
    center = tuple(map(float, center))
    _check_inside(grid, center, radius)
    return RimImage.from_2d(grid, np.where(_disc_mask(grid, center, radius), float(delta_n), 0.0))


# Modified Shepp-Logan table: intensity, semi-axes a, b, center x0, y0, angle (deg)
SHEPP_LOGAN = np.array([
    [1.0, 0.69, 0.92, 0.0, 0.0, 0],
    [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0],
    [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18],
    [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18],
    [0.1, 0.2100, 0.2500, 0.0, 0.35, 0],
    [0.1, 0.0460, 0.0460, 0.0, 0.1, 0],
    [0.1, 0.0460, 0.0460, 0.0, -0.1, 0],
    [0.1, 0.0460, 0.0230, -0.08, -0.605, 0],
    [0.1, 0.0230, 0.0230, 0.0, -0.606, 0],
    [0.1, 0.0230, 0.0460, 0.06, -0.605, 0],
])


def shepp_logan_raw(grid: CartesianGrid) -> np.ndarray:
    """Unscaled sum of ellipse intensities on normalized coordinates ``m / (n0/2)``."""
    h = grid.n0 // 2
    x = grid.pixel_range / h
    yy, xx = np.meshgrid(x, x, indexing="ij")
    img = np.zeros(grid.shape)
    for A, a, b, x0, y0, phi in SHEPP_LOGAN:
        t = math.radians(phi)
        dx, dy = xx - x0, yy - y0
        u = dx * math.cos(t) + dy * math.sin(t)
        v = -dx * math.sin(t) + dy * math.cos(t)
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += A
    return img


def make_shepp_logan(grid: CartesianGrid, delta_n_scale: float = 1.0) -> RimImage:
    """Modified Shepp-Logan head rescaled to ``[0, delta_n_scale]``."""
    # round away cancellation residue (1 - 0.8 - 0.2) so the background is exactly 0
    img = np.round(shepp_logan_raw(grid), 12)
    lo, hi = img.min(), img.max()
    img = (img - lo) / (hi - lo) * float(delta_n_scale)
    img[grid.boundary_mask] = 0.0
    return RimImage.from_2d(grid, img)


def make_phantom(kind: str, grid: CartesianGrid, **kwargs) -> RimImage:
    return PhantomSpec(kind, **kwargs).build(grid)
