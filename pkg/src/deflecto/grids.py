"""Sampling domains: the Cartesian pixel grid, the signed polar measurement
grid and its frequency counterpart.

Storage conventions
-------------------
* Images are ``(n0, n0)`` arrays indexed ``[n + n0/2, m + n0/2]`` so that the
  vectorized index is row-major in ``(n, m)``: ``j = (n + n0/2) * n0 + (m + n0/2)``.
  Pixel ``(m, n)`` sits at ``r = (m * delta_r, n * delta_r)``.
* Polar data (sinograms, full frequency grids) are ``(n_theta, n_tau)`` arrays,
  row-major in ``(t, s)``: ``j = t * n_tau + (s + n_tau/2)``.
* The half frequency grid keeps ``0 <= s' < n_tau/2`` and is stored as a
  ``(n_theta, n_tau/2)`` array: ``k = t * (n_tau/2) + s'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgument


def _check_even(name: str, value: int) -> int:
    if int(value) != value or value < 2 or value % 2:
        raise InvalidArgument(f"{name} must be an even integer >= 2, got {value!r}")
    return int(value)


def _check_positive(name: str, value: float) -> float:
    if not (np.isfinite(value) and value > 0):
        raise InvalidArgument(f"{name} must be finite and > 0, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class CartesianGrid:
    n0: int
    delta_r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "n0", _check_even("n0", self.n0))
        object.__setattr__(self, "delta_r", _check_positive("delta_r", self.delta_r))

    @property
    def N(self) -> int:
        return self.n0 * self.n0

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n0, self.n0)

    @cached_property
    def pixel_range(self) -> np.ndarray:
        """Signed pixel indices ``-n0/2 .. n0/2 - 1``."""
        return np.arange(-self.n0 // 2, self.n0 // 2)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical coordinates ``(r1, r2)`` of every pixel as two image arrays."""
        idx = self.pixel_range * self.delta_r
        r2, r1 = np.meshgrid(idx, idx, indexing="ij")
        return r1, r2

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        mask.setflags(write=False)
        return mask

    @property
    def boundary_indices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary_mask)

    @property
    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    def index(self, m: int, n: int) -> int:
        h = self.n0 // 2
        if not (-h <= m < h and -h <= n < h):
            raise InvalidArgument(f"pixel ({m}, {n}) outside the {self.n0}x{self.n0} grid")
        return (n + h) * self.n0 + (m + h)

    def coords_of(self, j: int) -> tuple[int, int]:
        if not 0 <= j < self.N:
            raise InvalidArgument(f"pixel index {j} out of range [0, {self.N})")
        h = self.n0 // 2
        row, col = divmod(int(j), self.n0)
        return col - h, row - h


@dataclass(frozen=True)
class PolarGrid:
    """Signed parallel-beam grid ``tau_s = s * delta_tau``, ``theta_t = t * delta_theta``.

    ``full_circle`` switches the angular span from ``[0, pi)`` to ``[0, 2 pi)``;
    it only exists for raw experimental sinograms, see :func:`deflecto.forward.fold_full_circle`.
    """

    n_tau: int
    n_theta: int
    delta_tau: float = 1.0
    full_circle: bool = False

    def __post_init__(self):
        object.__setattr__(self, "n_tau", _check_even("n_tau", self.n_tau))
        if int(self.n_theta) != self.n_theta or self.n_theta < 1:
            raise InvalidArgument(f"n_theta must be a positive integer, got {self.n_theta!r}")
        object.__setattr__(self, "n_theta", int(self.n_theta))
        object.__setattr__(self, "delta_tau", _check_positive("delta_tau", self.delta_tau))

    @property
    def M(self) -> int:
        return self.n_tau * self.n_theta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_tau)

    @property
    def delta_theta(self) -> float:
        span = 2 * math.pi if self.full_circle else math.pi
        return span / self.n_theta

    @property
    def s_range(self) -> np.ndarray:
        return np.arange(-self.n_tau // 2, self.n_tau // 2)

    @property
    def taus(self) -> np.ndarray:
        return self.s_range * self.delta_tau

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.delta_theta

    def index(self, s: int, t: int) -> int:
        h = self.n_tau // 2
        if not (-h <= s < h and 0 <= t < self.n_theta):
            raise InvalidArgument(f"polar coordinate (s={s}, t={t}) outside the grid")
        return t * self.n_tau + (s + h)

    def coords_of(self, j: int) -> tuple[int, int]:
        if not 0 <= j < self.M:
            raise InvalidArgument(f"polar index {j} out of range [0, {self.M})")
        t, col = divmod(int(j), self.n_tau)
        return col - self.n_tau // 2, t


@dataclass(frozen=True)
class FrequencyPolarGrid:
    """Signed frequency polar grid ``omega_s' = s' * delta_omega`` with
    ``delta_omega = 1 / (n_tau * delta_tau)``, plus its half grid ``s' >= 0``."""

    n_tau: int
    n_theta: int
    delta_tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "n_tau", _check_even("n_tau", self.n_tau))
        if int(self.n_theta) != self.n_theta or self.n_theta < 1:
            raise InvalidArgument(f"n_theta must be a positive integer, got {self.n_theta!r}")
        object.__setattr__(self, "n_theta", int(self.n_theta))
        object.__setattr__(self, "delta_tau", _check_positive("delta_tau", self.delta_tau))

    @classmethod
    def from_polar(cls, polar: PolarGrid) -> "FrequencyPolarGrid":
        if polar.full_circle:
            raise InvalidArgument("fold a full-circle sinogram to [0, pi) before building frequencies")
        return cls(polar.n_tau, polar.n_theta, polar.delta_tau)

    @property
    def polar(self) -> PolarGrid:
        return PolarGrid(self.n_tau, self.n_theta, self.delta_tau)

    @property
    def M(self) -> int:
        return self.n_tau * self.n_theta

    @property
    def half(self) -> int:
        """Number of half-grid nodes, ``M / 2``."""
        return self.M // 2

    @property
    def delta_omega(self) -> float:
        return 1.0 / (self.n_tau * self.delta_tau)

    @property
    def delta_theta(self) -> float:
        return math.pi / self.n_theta

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.delta_theta

    @property
    def s_range(self) -> np.ndarray:
        return np.arange(-self.n_tau // 2, self.n_tau // 2)

    @property
    def omegas(self) -> np.ndarray:
        return self.s_range * self.delta_omega

    @property
    def half_omegas(self) -> np.ndarray:
        return np.arange(self.n_tau // 2) * self.delta_omega

    def directions(self) -> np.ndarray:
        """Unit vectors ``p_theta = (-sin theta, cos theta)``, shape ``(n_theta, 2)``."""
        th = self.thetas
        return np.stack([-np.sin(th), np.cos(th)], axis=1)

    def _nodes(self, omegas: np.ndarray) -> np.ndarray:
        p = self.directions()
        return (p[:, None, :] * omegas[None, :, None]).reshape(-1, 2)

    def nodes(self) -> np.ndarray:
        """All ``M`` nodes ``omega * p_theta`` (t-major, s' ascending), shape ``(M, 2)``."""
        return self._nodes(self.omegas)

    def half_nodes(self) -> np.ndarray:
        """The ``M/2`` nodes with ``s' >= 0`` in the same order."""
        return self._nodes(self.half_omegas)

    def node_omegas(self) -> np.ndarray:
        return np.tile(self.omegas, self.n_theta)

    def half_node_omegas(self) -> np.ndarray:
        return np.tile(self.half_omegas, self.n_theta)

    def index(self, s: int, t: int) -> int:
        h = self.n_tau // 2
        if not (-h <= s < h and 0 <= t < self.n_theta):
            raise InvalidArgument(f"frequency coordinate (s'={s}, t={t}) outside the grid")
        return t * self.n_tau + (s + h)

    def coords_of(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.M:
            raise InvalidArgument(f"frequency index {k} out of range [0, {self.M})")
        t, col = divmod(int(k), self.n_tau)
        return col - self.n_tau // 2, t

    def half_index(self, s: int, t: int) -> int:
        h = self.n_tau // 2
        if not (0 <= s < h and 0 <= t < self.n_theta):
            raise InvalidArgument(f"(s'={s}, t={t}) is not on the half grid")
        return t * h + s

    def half_coords_of(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.half:
            raise InvalidArgument(f"half-grid index {k} out of range [0, {self.half})")
        t, s = divmod(int(k), self.n_tau // 2)
        return s, t


def build_cartesian(n0: int, delta_r: float = 1.0) -> CartesianGrid:
    return CartesianGrid(n0, delta_r)


def build_polar(n_tau: int, n_theta: int, delta_tau: float = 1.0) -> PolarGrid:
    return PolarGrid(n_tau, n_theta, delta_tau)


def build_frequency_grid(n_tau: int, n_theta: int, delta_tau: float = 1.0) -> FrequencyPolarGrid:
    return FrequencyPolarGrid(n_tau, n_theta, delta_tau)


def default_n_tau(n0: int) -> int:
    """Smallest even ray count whose span covers the FoV diagonal when
    ``delta_tau == delta_r`` plus a two-ray margin on each side (368 for the 256 grid)."""
    n = math.ceil(math.sqrt(2.0) * n0) + 4
    return n + (n % 2)


def paired_grids(n0: int, n_theta: int, delta_r: float = 1.0,
                 n_tau: int | None = None) -> tuple[CartesianGrid, PolarGrid, FrequencyPolarGrid]:
    """Cartesian, polar and frequency grids sharing ``delta_tau = delta_r``.

    The rays then sample at the pixel pitch and the largest radial frequency is
    the pixel Nyquist frequency ``1 / (2 delta_r)``; ``n_tau`` defaults to
    :func:`default_n_tau` so every ray through the FoV is recorded.
    """
    cart = CartesianGrid(n0, delta_r)
    n_tau = default_n_tau(n0) if n_tau is None else n_tau
    polar = PolarGrid(n_tau, n_theta, delta_r)
    check_fov(cart, polar)
    return cart, polar, FrequencyPolarGrid.from_polar(polar)


def check_fov(cart: CartesianGrid, polar: PolarGrid | FrequencyPolarGrid) -> None:
    """Raise unless the ray span covers the FoV width without oversampling
    frequencies beyond the pixel Nyquist limit."""
    span = polar.n_tau * polar.delta_tau
    width = cart.n0 * cart.delta_r
    if span < width * (1 - 1e-9):
        raise InvalidArgument(f"ray span {span:g} does not cover the FoV width {width:g}")
    if polar.delta_tau < cart.delta_r * (1 - 1e-9):
        raise InvalidArgument("delta_tau < delta_r would sample frequencies beyond the pixel Nyquist limit")
