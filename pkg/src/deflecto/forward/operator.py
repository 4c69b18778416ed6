"""The composed measurement operator ``Phi = Theta D F`` and its adjoint."""
from __future__ import annotations

import numpy as np

from ..data import FdmVector, RimImage
from ..errors import InvalidArgument
from ..grids import CartesianGrid, FrequencyPolarGrid, check_fov
from .fourier import d_weights, ndft_adjoint_nodes, ndft_nodes, pack_half, unpack_half
from .nfft import GaussianNfft, _check


class ForwardOperator:
    """Linear map from images to packed FDM vectors.

    Only the ``M/2`` half-grid nodes are ever evaluated: the packed vector
    never needs the others, and the adjoint
    ``Phi* y = Re F_h^H (conj(d_h) (a + i b))`` involves the same nodes.

    Parameters
    ----------
    cart, freq : grids
    n_r : float
        Reference refractive index of the surrounding medium.
    mode : {"exact", "nfft"}
    epsilon, kappa : float
        NFFT accuracy and oversampling (ignored in exact mode).
    include_d : bool
        ``True`` gives the deflectometric operator, ``False`` the absorption
        tomography variant ``Theta F``.
    """

    def __init__(self, cart: CartesianGrid, freq: FrequencyPolarGrid, n_r: float = 1.0,
                 mode: str = "nfft", epsilon: float = 1e-10, kappa: float = 2.0,
                 include_d: bool = True):
        if mode not in ("exact", "nfft"):
            raise InvalidArgument(f"mode must be 'exact' or 'nfft', got {mode!r}")
        if not n_r > 0:
            raise InvalidArgument(f"n_r must be > 0, got {n_r!r}")
        check_fov(cart, freq)
        self.cart = cart
        self.freq = freq
        self.n_r = float(n_r)
        self.mode = mode
        self.include_d = bool(include_d)
        self._nodes = freq.half_nodes()
        if mode == "nfft":
            _check(epsilon, kappa)
            self.epsilon = float(epsilon)
            self.kappa = float(kappa)
            self._plan = GaussianNfft(cart, self._nodes, epsilon, kappa)
        else:
            self.epsilon = 0.0
            self.kappa = None
            self._plan = None
        if include_d:
            self._d = d_weights(freq, cart.delta_r, n_r, half=True)
        else:
            self._d = np.ones(freq.half, dtype=complex)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.freq.M, self.cart.N)

    def with_mode(self, mode: str, epsilon: float = 1e-10) -> "ForwardOperator":
        return ForwardOperator(self.cart, self.freq, self.n_r, mode, epsilon,
                               self.kappa or 2.0, self.include_d)

    def _F(self, u):
        if self._plan is None:
            return ndft_nodes(u, self._nodes, self.cart)
        return self._plan.forward(u)

    def _FH(self, v):
        if self._plan is None:
            return ndft_adjoint_nodes(v, self._nodes, self.cart)
        return self._plan.adjoint(v)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Packed ``Phi x`` for a flat real image vector ``x``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.cart.N:
            raise InvalidArgument(f"image needs {self.cart.N} values, got {x.size}")
        z = self._d * self._F(x)
        return np.concatenate([z.real, z.imag])

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """``Phi* y`` as a flat real image vector."""
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != self.freq.M:
            raise InvalidArgument(f"FDM vector needs {self.freq.M} values, got {y.size}")
        h = self.freq.half
        w = self._d.conj() * (y[:h] + 1j * y[h:])
        return self._FH(w).real.reshape(-1)

    def normal(self, x: np.ndarray) -> np.ndarray:
        return self.adjoint(self.apply(x))


def forward_apply(op: ForwardOperator, image: RimImage) -> FdmVector:
    if image.grid != op.cart:
        raise InvalidArgument("image grid does not match the operator")
    return FdmVector(op.freq, op.apply(image.values))


def forward_adjoint(op: ForwardOperator, fdm: FdmVector) -> np.ndarray:
    if fdm.grid != op.freq:
        raise InvalidArgument("FDM grid does not match the operator")
    return op.adjoint(fdm.values)


__all__ = ["ForwardOperator", "forward_apply", "forward_adjoint", "pack_half", "unpack_half"]
