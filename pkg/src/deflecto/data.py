"""Grid-bound value containers passed between the pipeline stages."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .grids import CartesianGrid, FrequencyPolarGrid, PolarGrid


def _as_values(values, size: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=float).reshape(-1)
    if arr.size != size:
        raise InvalidArgument(f"{what} needs {size} values, got {arr.size}")
    return arr


@dataclass(frozen=True, eq=False)
class RimImage:
    """Refractive-index offset ``n - n_r`` sampled on a Cartesian grid."""

    grid: CartesianGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values, self.grid.N, "RimImage"))

    def as_2d(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    @classmethod
    def from_2d(cls, grid: CartesianGrid, arr: np.ndarray) -> "RimImage":
        return cls(grid, np.asarray(arr).reshape(-1))


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Deflection sines on a polar grid, stored ``(n_theta, n_tau)``."""

    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        vals = _as_values(self.values, self.grid.M, "Sinogram")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgument("sinogram contains non-finite values")
        object.__setattr__(self, "values", vals)

    def as_2d(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    @classmethod
    def from_2d(cls, grid: PolarGrid, arr: np.ndarray) -> "Sinogram":
        return cls(grid, np.asarray(arr).reshape(-1))


@dataclass(frozen=True, eq=False)
class FdmVector:
    """Real-packed frequency deflectometric measurements.

    The first ``M/2`` entries are real parts on the half grid, the last ``M/2``
    the imaginary parts, both in canonical half-grid order.
    """

    grid: FrequencyPolarGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values, self.grid.M, "FdmVector"))

    @property
    def real(self) -> np.ndarray:
        return self.values[: self.grid.half].reshape(self.grid.n_theta, -1)

    @property
    def imag(self) -> np.ndarray:
        return self.values[self.grid.half:].reshape(self.grid.n_theta, -1)
