"""Filtered back projection for deflection sinograms.

Deflections are ``(1/n_r) d/dtau`` of the Radon transform, so the ramp filter
of ordinary FBP collapses to a Hilbert kernel ``(n_r / 2)(-i sign omega)``.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from ..data import FdmVector, RimImage, Sinogram
from ..errors import InvalidArgument
from ..forward import inverse_radial_dft
from ..grids import CartesianGrid


def hilbert_filter(sinogram: Sinogram, n_r: float, pad: int = 2) -> np.ndarray:
    """Per-angle ``(n_r/2)(-i sign omega)`` filtering with ``pad``-fold zero padding."""
    g = sinogram.grid
    data = sinogram.as_2d()
    L = pad * g.n_tau
    F = np.fft.fft(data, n=L, axis=1)
    sign = np.sign(np.fft.fftfreq(L))
    sign[L // 2] = 0.0
    out = np.fft.ifft(F * (-0.5j * n_r * sign), axis=1).real
    return out[:, : g.n_tau]


@numba.njit(cache=True)
def _backproject(filt, thetas, tau0, dtau, coords, out):
    nt, ns = filt.shape
    n0 = coords.shape[0]
    for t in range(nt):
        p1 = -math.sin(thetas[t])
        p2 = math.cos(thetas[t])
        row = filt[t]
        for i in range(n0):
            y = coords[i] * p2
            for j in range(n0):
                u = (coords[j] * p1 + y - tau0) / dtau
                k = int(math.floor(u))
                if 0 <= k < ns - 1:
                    f = u - k
                    out[i, j] += (1.0 - f) * row[k] + f * row[k + 1]
    return out


def backproject(filtered: np.ndarray, sinogram_grid, cart: CartesianGrid) -> np.ndarray:
    """``(1/N_theta) sum_t f(r . p_t, theta_t)`` with linear interpolation in tau."""
    coords = cart.pixel_range * cart.delta_r
    out = np.zeros(cart.shape)
    taus = sinogram_grid.taus
    _backproject(np.ascontiguousarray(filtered), sinogram_grid.thetas, float(taus[0]),
                 sinogram_grid.delta_tau, coords.astype(float), out)
    return out / sinogram_grid.n_theta


def reconstruct_fbp(sinogram: Sinogram, cart: CartesianGrid, n_r: float = 1.0) -> RimImage:
    """FBP image; its mean is arbitrary since the data carry no DC information."""
    if not n_r > 0:
        raise InvalidArgument(f"n_r must be > 0, got {n_r!r}")
    if sinogram.grid.full_circle:
        raise InvalidArgument("fold a full-circle sinogram to [0, pi) first")
    filt = hilbert_filter(sinogram, n_r)
    return RimImage.from_2d(cart, backproject(filt, sinogram.grid, cart))


def fbp_from_fdm(fdm: FdmVector, cart: CartesianGrid, n_r: float = 1.0) -> RimImage:
    return reconstruct_fbp(inverse_radial_dft(fdm), cart, n_r)
