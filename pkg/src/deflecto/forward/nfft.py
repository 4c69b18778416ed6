"""Gaussian-window NFFT for images on the Cartesian grid.

The NDFT ``f_hat(k) = sum_j f_j exp(-2 pi i k . r_j)`` is approximated by
deconvolving with the window's Fourier coefficients, an oversampled FFT and a
short separable Gaussian interpolation at each node.
"""
from __future__ import annotations

import math

import numpy as np

from ..data import RimImage
from ..errors import InvalidArgument
from ..grids import CartesianGrid, FrequencyPolarGrid
from . import _kernels


def window_cutoff(epsilon: float, kappa: float = 2.0) -> int:
    """Half-width ``m`` of the truncated Gaussian reaching accuracy ``epsilon``."""
    return max(1, math.ceil(math.log(1.0 / epsilon) / (math.pi * (1.0 - 1.0 / (2.0 * kappa - 1.0)))))


def _check(epsilon, kappa):
    if not (0.0 < epsilon < 1.0):
        raise InvalidArgument(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if not kappa > 1.0:
        raise InvalidArgument(f"kappa must be > 1, got {kappa!r}")


class GaussianNfft:
    """Precomputed NFFT plan for fixed nodes.

    Parameters
    ----------
    cart : CartesianGrid
        Image grid, ``n0 x n0`` pixels.
    nodes : (M, 2) array
        Physical frequencies ``k``. Their normalized values ``k * delta_r``
        must lie in ``[-1/2, 1/2]``.
    epsilon : float
        Target accuracy; ``|F~f - Ff|_inf <= 4 |f|_1 epsilon``.
    kappa : float
        Oversampling factor; the FFT grid has ``n = ceil(kappa n0)`` (even) points.
    """

    def __init__(self, cart: CartesianGrid, nodes: np.ndarray, epsilon: float = 1e-10,
                 kappa: float = 2.0):
        _check(epsilon, kappa)
        self.cart = cart
        self.epsilon = float(epsilon)
        self.kappa = float(kappa)
        n = math.ceil(kappa * cart.n0)
        self.n = n + (n % 2)
        self.m = window_cutoff(epsilon, self.n / cart.n0)
        self.L = 2 * self.m + 2
        sigma = self.n / cart.n0
        self.b = 2.0 * sigma * self.m / ((2.0 * sigma - 1.0) * math.pi)

        x = np.asarray(nodes, dtype=float) * cart.delta_r
        if x.ndim != 2 or x.shape[1] != 2:
            raise InvalidArgument("nodes must be an (M, 2) array")
        if np.any(np.abs(x) > 0.5 + 1e-12):
            raise InvalidArgument("normalized nodes must lie in [-1/2, 1/2]")
        self.M = x.shape[0]
        self._i1, self._w1 = self._weights(x[:, 0])
        self._i2, self._w2 = self._weights(x[:, 1])

        k = cart.pixel_range
        deconv = np.exp(self.b * (math.pi * k / self.n) ** 2)
        self._deconv = np.outer(deconv, deconv)
        self._slot = k % self.n  # where pixel frequency k lands on the FFT grid

    def _weights(self, x):
        nx = self.n * x
        base = np.floor(nx).astype(np.int64) - self.m
        l = base[:, None] + np.arange(self.L)[None, :]
        w = np.exp(-((nx[:, None] - l) ** 2) / self.b) / math.sqrt(math.pi * self.b)
        return base % self.n, np.ascontiguousarray(w)

    def forward(self, u: np.ndarray) -> np.ndarray:
        U = np.asarray(u).reshape(self.cart.shape)
        G = np.zeros((self.n, self.n), dtype=complex)
        G[np.ix_(self._slot, self._slot)] = U * self._deconv
        g = np.fft.fft2(G)
        ge = np.pad(g, ((0, self.L), (0, self.L)), mode="wrap")
        out = np.empty(self.M, dtype=complex)
        return _kernels.gather(ge, self._i1, self._i2, self._w1, self._w2, out)

    def adjoint(self, v: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`forward`; returns a complex ``(n0, n0)`` image."""
        v = np.ascontiguousarray(v, dtype=complex).reshape(-1)
        if v.size != self.M:
            raise InvalidArgument(f"spectrum needs {self.M} entries, got {v.size}")
        P = self.n + self.L
        ge = np.zeros((P, P), dtype=complex)
        _kernels.spread(v, self._i1, self._i2, self._w1, self._w2, ge)
        h = _kernels.fold_wrapped(ge, self.n)
        H = np.fft.ifft2(h) * (self.n * self.n)
        return H[np.ix_(self._slot, self._slot)] * self._deconv


def nfft_forward(image: RimImage, freq: FrequencyPolarGrid, epsilon: float = 1e-10,
                 kappa: float = 2.0) -> np.ndarray:
    """NFFT approximation of :func:`ndft_exact` at all ``M`` polar nodes."""
    plan = GaussianNfft(image.grid, freq.nodes(), epsilon, kappa)
    return plan.forward(image.values)
