"""Deflection sinograms computed directly from the continuous ray model.

These are deliberately independent of the Fourier machinery: they integrate
the transverse index gradient along straight rays and serve as the oracle the
frequency-domain operator is checked against.
"""
from __future__ import annotations

import numpy as np

from ..data import RimImage, Sinogram
from ..errors import InvalidArgument
from ..grids import PolarGrid, check_fov
from . import _kernels

METHODS = ("bandlimited", "raymarch")


def simulate_deflections(image: RimImage, polar: PolarGrid, n_r: float,
                         method: str = "bandlimited") -> Sinogram:
    """Deflection sines ``Delta(tau_s, theta_t)`` of a refractive-index image.

    ``Delta`` is ``(1/n_r)`` times the integral of ``grad n . p_theta`` along the
    line ``r . p_theta = tau``, which equals ``(1/n_r) d/dtau`` of the Radon
    transform of ``n``.

    method : {"bandlimited", "raymarch"}
        ``bandlimited`` models every pixel as a radially band-limited bump
        (cutoff ``1/(2 delta_r)``) whose projection is ``delta_r sinc(tau/delta_r)``;
        the derivative of that projection is summed exactly, so the only
        approximation is the pixel model itself.
        ``raymarch`` samples the forward-difference gradient (staggered to the
        midpoints between pixels) by bilinear interpolation every ``delta_r``
        along each ray. It is cheaper to reason about but carries O(delta_r)
        errors at high frequencies.
    """
    if not n_r > 0:
        raise InvalidArgument(f"n_r must be > 0, got {n_r!r}")
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}, expected one of {METHODS}")
    check_fov(image.grid, polar)
    if method == "bandlimited":
        out = _bandlimited(image, polar)
    else:
        out = _raymarch(image, polar)
    return Sinogram.from_2d(polar, out / n_r)


def _bandlimited(image, polar):
    cart = image.grid
    r1, r2 = cart.coordinates()
    nz = np.flatnonzero(image.values)
    out = np.zeros(polar.shape)
    if nz.size == 0:
        return out
    return _kernels.bandlimited_deflections(
        image.values[nz], r1.reshape(-1)[nz], r2.reshape(-1)[nz],
        polar.taus.astype(float), polar.thetas, cart.delta_r, out)


def _bilinear(arr, c, r):
    """Sample ``arr`` at fractional (col, row) positions, zero outside."""
    c0 = np.floor(c).astype(np.int64)
    r0 = np.floor(r).astype(np.int64)
    fc = c - c0
    fr = r - r0
    out = np.zeros(c.shape)
    nr, nc = arr.shape
    for dr, wr in ((0, 1 - fr), (1, fr)):
        for dc, wc in ((0, 1 - fc), (1, fc)):
            rr = r0 + dr
            cc = c0 + dc
            ok = (rr >= 0) & (rr < nr) & (cc >= 0) & (cc < nc)
            out[ok] += arr[rr[ok], cc[ok]] * wr[ok] * wc[ok]
    return out


def _raymarch(image, polar):
    cart = image.grid
    dr = cart.delta_r
    u = image.as_2d()
    # forward differences, zero past the last pixel; g1 lives at (m + 1/2, n),
    # g2 at (m, n + 1/2)
    g1 = np.zeros_like(u)
    g2 = np.zeros_like(u)
    g1[:, :-1] = (u[:, 1:] - u[:, :-1]) / dr
    g2[:-1, :] = (u[1:, :] - u[:-1, :]) / dr
    h = cart.n0 // 2
    # symmetric samples, so reversing a ray visits the same points
    k = int(np.ceil(np.hypot(h, h))) + 2
    steps = np.arange(-k, k + 1) * dr
    taus = polar.taus
    out = np.zeros(polar.shape)
    for t, th in enumerate(polar.thetas):
        p = np.array([-np.sin(th), np.cos(th)])
        q = np.array([np.cos(th), np.sin(th)])
        x = taus[:, None] * p[0] + steps[None, :] * q[0]
        y = taus[:, None] * p[1] + steps[None, :] * q[1]
        col = x / dr + h
        row = y / dr + h
        s1 = _bilinear(g1, col - 0.5, row)
        s2 = _bilinear(g2, col, row - 0.5)
        out[t] = (s1 * p[0] + s2 * p[1]).sum(axis=1) * dr
    return out


def fold_full_circle(sinogram: Sinogram) -> Sinogram:
    """Fold a ``[0, 2 pi)`` sinogram onto ``[0, pi)`` using
    ``Delta(-tau, theta + pi) = -Delta(tau, theta)``, averaging the two copies.

    The ray ``s = -n_tau/2`` has no mirror on the grid and keeps its value.
    """
    g = sinogram.grid
    if not g.full_circle:
        raise InvalidArgument("sinogram already spans [0, pi)")
    if g.n_theta % 2:
        raise InvalidArgument("folding needs an even number of angles over [0, 2 pi)")
    half = g.n_theta // 2
    data = sinogram.as_2d()
    a, b = data[:half], data[half:]
    mirrored = np.empty_like(b)
    mirrored[:, 1:] = -b[:, :0:-1]
    mirrored[:, 0] = a[:, 0]
    folded = 0.5 * (a + mirrored)
    return Sinogram.from_2d(PolarGrid(g.n_tau, half, g.delta_tau), folded)
