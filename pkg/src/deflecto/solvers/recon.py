"""TV-l2, minimum-energy and absorption-baseline reconstructions."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..data import FdmVector, RimImage
from ..errors import InvalidArgument
from ..forward import ForwardOperator, d_weights, pack_half, unpack_half
from ..metrics import rsnr
from ..prox import (div, grad, project_dual_ball, project_positive_zero_border,
                    prox_fidelity_conjugate, prox_l2_norm)
from .cp import DualBlock, ReconResult, SolverParams, init_state, run_cp
from .fbp import fbp_from_fdm
from .linear import GRAD_NORM, GradientOperator, ScaledOperator, StackedOperator, operator_norm


def _check_inputs(y: FdmVector, op: ForwardOperator, eps: float):
    if not eps >= 0:
        raise InvalidArgument(f"eps must be >= 0, got {eps!r}")
    if y.grid != op.freq:
        raise InvalidArgument("measurement grid does not match the operator")


def fidelity_block(op, y: np.ndarray, eps: float, scale: float = 1.0) -> DualBlock:
    """``indicator(|K x - y| <= eps)`` with ``K = op / scale`` (data and radius scaled alike)."""
    if scale != 1.0:
        op = ScaledOperator(op, scale)
        y = y / scale
        eps = eps / scale
    return DualBlock(op.apply, op.adjoint,
                     lambda s, nu: prox_fidelity_conjugate(s, y, eps, nu), "fidelity")


def tv_block(n0: int) -> DualBlock:
    shape = (2, n0, n0)
    return DualBlock(lambda x: grad(x.reshape(n0, n0)).reshape(-1),
                     lambda s: -div(s.reshape(shape)).reshape(-1),
                     lambda s, nu: project_dual_ball(s.reshape(shape)).reshape(-1), "tv")


def fidelity_scale(op, params: SolverParams) -> float:
    """Scalar that brings ``|||Phi|||`` to ``|||grad|||`` when balancing is on, else 1."""
    if not params.balance:
        return 1.0
    phi = operator_norm(op, params.norm_iters, params.seed, safety=1.0)
    return phi / GRAD_NORM if phi > 0 else 1.0


def tv_operator_norm(op, params: SolverParams, scale: float = 1.0) -> float:
    """``|||K|||`` of the stacked map ``x -> (grad x, Phi x / scale)``."""
    phi = op if scale == 1.0 else ScaledOperator(op, scale)
    return operator_norm(StackedOperator(GradientOperator(op.cart.n0), phi),
                         params.norm_iters, params.seed)


def tv_norms(op, params: SolverParams) -> tuple[float, float]:
    scale = fidelity_scale(op, params)
    return scale, tv_operator_norm(op, params, scale)


def _steps(params: SolverParams, knorm: float):
    if knorm <= 0:
        raise InvalidArgument("operator norm must be > 0")
    mu = params.mu0 if params.mu0 is not None else 0.9 / knorm
    nu = params.nu0 if params.nu0 is not None else 0.9 / knorm
    return mu, nu


def _scorer(truth: RimImage | None, mean_removed: bool):
    if truth is None:
        return None
    return lambda x: rsnr(truth, x, mean_removed=mean_removed)


def reconstruct_tv_l2(y: FdmVector, op: ForwardOperator, eps: float,
                      params: SolverParams | None = None, ground_truth: RimImage | None = None,
                      x0: np.ndarray | None = None, norms: tuple[float, float] | None = None,
                      callback: Callable | None = None) -> ReconResult:
    """``min TV(u)`` s.t. ``|y - Phi u| <= eps``, ``u >= 0`` and ``u = 0`` on the border.

    Product-space primal-dual iterations with adaptive stepsizes, started from
    the FBP image with zero duals and ``x_bar = 0``. ``norms`` may carry a
    precomputed ``(scale, |||K|||)`` pair (see :func:`tv_norms`) to skip the
    power iterations.
    """
    params = params or SolverParams()
    _check_inputs(y, op, eps)
    cart = op.cart
    scale, knorm = norms if norms is not None else tv_norms(op, params)
    mu, nu = _steps(params, knorm)
    if x0 is None:
        x0 = fbp_from_fdm(y, cart, op.n_r).values
    blocks = [tv_block(cart.n0), fidelity_block(op, y.values, eps, scale)]
    prox_h = lambda v, step: project_positive_zero_border(v, cart)  # noqa: E731
    state = init_state(x0, blocks, mu, nu, params.rho0)
    state, reason, wall = run_cp(state, blocks, prox_h, params, _scorer(ground_truth, False), callback)
    return ReconResult(RimImage(cart, state.x), state.k, reason, state.trace, wall, state)


def reconstruct_me(y: FdmVector, op: ForwardOperator, eps: float = 0.0,
                   params: SolverParams | None = None, ground_truth: RimImage | None = None,
                   knorm: float | None = None, callback: Callable | None = None) -> ReconResult:
    """Minimum-energy image ``min |u|_2`` s.t. ``|y - Phi u| <= eps``, started from 0.

    Recorded RSNRs use the mean-removed convention.
    """
    params = params or SolverParams(adaptive=False)
    _check_inputs(y, op, eps)
    if knorm is None:
        knorm = operator_norm(op, params.norm_iters, params.seed)
    mu, nu = _steps(params, knorm)
    blocks = [fidelity_block(op, y.values, eps)]
    state = init_state(np.zeros(op.cart.N), blocks, mu, nu, params.rho0)
    state, reason, wall = run_cp(state, blocks, prox_l2_norm, params,
                                 _scorer(ground_truth, True), callback)
    return ReconResult(RimImage(op.cart, state.x), state.k, reason, state.trace, wall, state)


def remove_d(y: FdmVector, op: ForwardOperator) -> FdmVector:
    """Divide FDM data by the ``D`` weights; ``omega = 0`` nodes become 0.

    Turns deflectometric data into absorption-tomography data for ``Theta F``.
    """
    d = d_weights(op.freq, op.cart.delta_r, op.n_r, half=True)
    z = unpack_half(y)
    out = np.zeros_like(z)
    nz = d != 0
    out[nz] = z[nz] / d[nz]
    return pack_half(out, y.grid)


def remove_d_eps(sigma_packed: float, op: ForwardOperator, chernoff_c: float = 2.0) -> float:
    """Fidelity radius after :func:`remove_d` for white packed noise of level ``sigma_packed``.

    Each nonzero node contributes two entries of variance ``sigma**2 / |d|**2``;
    the same Chernoff margin as the direct budget is applied.
    """
    d = d_weights(op.freq, op.cart.delta_r, op.n_r, half=True)
    w = np.abs(d[d != 0]) ** -2
    var = 2.0 * sigma_packed ** 2 * w.sum()
    m = 2 * w.size
    return math.sqrt(var * (1.0 + chernoff_c / math.sqrt(m)))


def reconstruct_at_baseline(y_at: FdmVector, op_at: ForwardOperator, eps: float,
                            params: SolverParams | None = None, method: str = "me",
                            ground_truth: RimImage | None = None, **kwargs) -> ReconResult:
    """ME or TV-l2 reconstruction against the absorption operator ``Theta F``.

    Feed it AT data directly, or deflectometric data passed through
    :func:`remove_d` for the ODT-without-``D`` pathway.
    """
    if op_at.include_d:
        raise InvalidArgument("the baseline needs an operator built with include_d=False")
    if method == "me":
        return reconstruct_me(y_at, op_at, eps, params, ground_truth, **kwargs)
    if method == "tv":
        kwargs.setdefault("x0", np.zeros(op_at.cart.N))  # FBP assumes deflection data
        return reconstruct_tv_l2(y_at, op_at, eps, params, ground_truth, **kwargs)
    raise InvalidArgument(f"unknown baseline method {method!r}")
