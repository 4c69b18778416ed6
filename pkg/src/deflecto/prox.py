"""Proximal operators and projections used by the primal-dual solvers.

Gradient fields are arrays of shape ``(2, n0, n0)``: component 0 differences
along ``r1`` (columns), component 1 along ``r2`` (rows).
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument
from .grids import CartesianGrid


def _img(x, n0=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        n = int(round(np.sqrt(x.size))) if n0 is None else n0
        if n * n != x.size:
            raise InvalidArgument(f"cannot view {x.size} values as a square image")
        return x.reshape(n, n)
    return x


def grad(image) -> np.ndarray:
    """Forward differences, zero across the last column / row."""
    u = _img(image)
    g = np.zeros((2,) + u.shape)
    g[0, :, :-1] = u[:, 1:] - u[:, :-1]
    g[1, :-1, :] = u[1:, :] - u[:-1, :]
    return g


def div(field: np.ndarray) -> np.ndarray:
    """Discrete divergence, the negative adjoint of :func:`grad`. Returns a 2-D image."""
    p = np.asarray(field, dtype=float)
    if p.ndim != 3 or p.shape[0] != 2:
        raise InvalidArgument("gradient field must have shape (2, n0, n0)")
    p1, p2 = p[0], p[1]
    d = np.zeros(p.shape[1:])
    d[:, :-1] += p1[:, :-1]
    d[:, 1:] -= p1[:, :-1]
    d[:-1, :] += p2[:-1, :]
    d[1:, :] -= p2[:-1, :]
    return d


def tv_norm(image) -> float:
    """Isotropic total variation ``sum_k |(grad u)_k|``."""
    g = grad(image)
    return float(np.sqrt(g[0] ** 2 + g[1] ** 2).sum())


def project_dual_ball(field: np.ndarray) -> np.ndarray:
    """Pixelwise projection onto ``{|q_k| <= 1}``; the prox of the TV conjugate for any step."""
    q = np.asarray(field, dtype=float)
    mag = np.sqrt(q[0] ** 2 + q[1] ** 2)
    return q / np.maximum(1.0, mag)


def project_fidelity_ball(v, y, eps: float) -> np.ndarray:
    """Projection onto ``{u : |u - y| <= eps}``."""
    if not eps >= 0:
        raise InvalidArgument(f"eps must be >= 0, got {eps!r}")
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    r = v - y
    nr = np.linalg.norm(r)
    if nr <= eps:
        return v.copy()
    return y + r * (eps / nr)


def prox_fidelity_conjugate(s, y, eps: float, nu: float) -> np.ndarray:
    """``prox_{nu F*}(s) = s - nu * P_C(s / nu)`` for ``F`` the indicator of the
    fidelity ball ``C`` (Moreau decomposition)."""
    if not nu > 0:
        raise InvalidArgument(f"nu must be > 0, got {nu!r}")
    s = np.asarray(s, dtype=float)
    return s - nu * project_fidelity_ball(s / nu, y, eps)


def project_positive_zero_border(x, cart: CartesianGrid) -> np.ndarray:
    """Positive part on the interior, exact zeros on the FoV border."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    u = np.maximum(x.reshape(cart.shape), 0.0)
    u[cart.boundary_mask] = 0.0
    return u.reshape(shape)


def prox_l2_norm(x, mu: float) -> np.ndarray:
    """Block soft threshold ``x max(0, 1 - mu / |x|)``, the prox of ``mu |.|_2``."""
    if not mu >= 0:
        raise InvalidArgument(f"mu must be >= 0, got {mu!r}")
    x = np.asarray(x, dtype=float)
    nx = np.linalg.norm(x)
    if nx <= mu:
        return np.zeros_like(x)
    return x * (1.0 - mu / nx)


def prox_product_g(zetas: Sequence[np.ndarray], mu: float,
                   inner_prox: Callable[[np.ndarray, float], np.ndarray]) -> list[np.ndarray]:
    """Prox of ``G(x_1..x_p) = H(x_1) + indicator(x_1 = ... = x_p)``.

    ``inner_prox(v, step)`` must return ``prox_{step H}(v)``. All returned blocks
    equal ``prox_{(mu/p) H}(mean(zetas))``.
    """
    if len(zetas) < 1:
        raise InvalidArgument("need at least one block")
    arrs = [np.asarray(z, dtype=float) for z in zetas]
    if any(a.shape != arrs[0].shape for a in arrs):
        raise InvalidArgument("all blocks must share one shape")
    p = len(arrs)
    x = inner_prox(sum(arrs) / p, mu / p)
    return [x.copy() for _ in range(p)]
