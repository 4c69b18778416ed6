"""Rotation-center calibration of measured sinograms."""
from __future__ import annotations

import numpy as np

from ..data import Sinogram
from ..errors import CalibrationUndefined


def center_shifts(sinogram: Sinogram) -> np.ndarray:
    """Integer shift per angle moving the midpoint of the extreme deflections to ``tau = 0``."""
    data = sinogram.as_2d()
    h = sinogram.grid.n_tau // 2
    flat = np.ptp(data, axis=1) == 0
    if np.any(flat):
        raise CalibrationUndefined(f"flat trace at angle index {int(np.flatnonzero(flat)[0])}")
    mid = 0.5 * (np.argmax(data, axis=1) + np.argmin(data, axis=1))
    return np.rint(h - mid).astype(int)


def _shift(row: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(row)
    if k >= 0:
        out[k:] = row[: row.size - k]
    else:
        out[:k] = row[-k:]
    return out


def calibrate_center(sinogram: Sinogram, return_shifts: bool = False):
    """Shift every angle so its max/min midpoint sits on the central ray, zero filling the edges."""
    shifts = center_shifts(sinogram)
    data = sinogram.as_2d()
    out = np.stack([_shift(row, int(k)) for row, k in zip(data, shifts)])
    cal = Sinogram.from_2d(sinogram.grid, out)
    return (cal, shifts) if return_shifts else cal


def decenter(sinogram: Sinogram, shifts) -> Sinogram:
    """Apply integer shifts per angle (a scalar applies to all), zero filling the edges."""
    data = sinogram.as_2d()
    shifts = np.broadcast_to(np.asarray(shifts, dtype=int), (data.shape[0],))
    return Sinogram.from_2d(sinogram.grid, np.stack([_shift(r, int(k)) for r, k in zip(data, shifts)]))
