"""Generic primal-dual (Chambolle-Pock) engine on a product space.

The problem is ``min_x H(x) + sum_j F_j(K_j x)``. Each term ``F_j o K_j`` is a
:class:`DualBlock`; the primal variable is duplicated once per block and the
copies are tied together, so the primal prox becomes ``prox_{(mu/p) H}`` of
the block average. With ``p = 1`` this is the plain iteration.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import InvalidArgument, NumericalFailure
from ..metrics import TraceRecord


@dataclass
class DualBlock:
    """One ``F_j(K_j x)`` term: the operator pair and ``prox_{nu F_j*}``."""

    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    prox_conj: Callable[[np.ndarray, float], np.ndarray]
    name: str = ""


@dataclass
class SolverParams:
    """Stepsizes, adaptivity and stopping rules.

    ``mu0``/``nu0`` default to ``0.9 / |||K|||``. ``rule`` selects the
    direction of the adaptive update: ``"grow-primal"`` enlarges ``mu`` (and
    shrinks ``nu``) when the primal residual dominates, ``p > c d Gamma``;
    ``"shrink-primal"`` does the opposite. ``max_iter`` and ``threshold`` stop
    the loop.

    ``balance`` rescales the data-fidelity block by a scalar so that its
    operator norm matches the gradient's. The constraint set is unchanged
    (``|Phi x - y| <= eps`` iff ``|Phi x / a - y / a| <= eps / a``); only the
    relative size of the two dual blocks moves, which the product-space
    iteration is very sensitive to. Residuals and stepsizes in the trace
    are those of the balanced problem.
    """

    mu0: float | None = None
    nu0: float | None = None
    rho0: float = 0.5
    gamma: float = 1.1
    beta: float = 0.95
    c_balance: float = 1000.0
    theta_relax: float = 1.0
    max_iter: int = 500_000
    threshold: float = 1e-5
    adaptive: bool = True
    rule: str = "grow-primal"
    balance: bool = True
    norm_iters: int = 60
    seed: int = 0

    def __post_init__(self):
        if not self.gamma > 1:
            raise InvalidArgument("gamma must be > 1")
        if not 0 < self.beta < 1:
            raise InvalidArgument("beta must lie in (0, 1)")
        if not 0 <= self.rho0 < 1:
            raise InvalidArgument("rho0 must lie in [0, 1)")
        if not self.c_balance > 0:
            raise InvalidArgument("c_balance must be > 0")
        if self.rule not in ("shrink-primal", "grow-primal"):
            raise InvalidArgument(f"unknown adaptive rule {self.rule!r}")
        if int(self.max_iter) < 0:
            raise InvalidArgument("max_iter must be >= 0")
        if not self.threshold >= 0:
            raise InvalidArgument("threshold must be >= 0")
        for name in ("mu0", "nu0"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidArgument(f"{name} must be > 0")


@dataclass
class SolverState:
    x: np.ndarray
    x_bar: np.ndarray
    duals: list
    mu: float
    nu: float
    rho: float
    k: int = 0
    # cached K_j x and K_j x_bar, so each iteration needs one apply per block
    Kx: list = field(default_factory=list)
    Kx_bar: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def s1(self):
        return self.duals[0]

    @property
    def s2(self):
        return self.duals[1] if len(self.duals) > 1 else None


def init_state(x0, blocks: Sequence[DualBlock], mu: float, nu: float, rho: float,
               x_bar0=None, duals0=None) -> SolverState:
    x0 = np.asarray(x0, dtype=float).copy()
    x_bar = np.zeros_like(x0) if x_bar0 is None else np.asarray(x_bar0, dtype=float).copy()
    Kx = [b.apply(x0) for b in blocks]
    Kx_bar = [b.apply(x_bar) for b in blocks]
    if duals0 is None:
        duals = [np.zeros_like(v) for v in Kx]
    else:
        duals = [np.asarray(s, dtype=float).copy() for s in duals0]
    return SolverState(x0, x_bar, duals, float(mu), float(nu), float(rho), 0, Kx, Kx_bar)


def _l1(a) -> float:
    return float(np.abs(a).sum())


def cp_iterate(state: SolverState, blocks: Sequence[DualBlock],
               prox_g: Callable[[np.ndarray, float], np.ndarray],
               params: SolverParams) -> tuple[SolverState, TraceRecord]:
    """One primal-dual step, residuals and (optionally) the adaptive stepsize update.

    ``prox_g(v, step)`` returns ``prox_{step H}(v)``. Returns the new state
    (the input is not modified) and the iteration's trace record without RSNR.
    """
    mu, nu, th = state.mu, state.nu, params.theta_relax
    p = len(blocks)
    duals = [b.prox_conj(s + nu * kxb, nu) for b, s, kxb in zip(blocks, state.duals, state.Kx_bar)]
    step = state.x.copy()
    for b, s in zip(blocks, duals):
        step -= (mu / p) * b.adjoint(s)
    x = prox_g(step, mu / p)
    Kx = [b.apply(x) for b in blocks]
    x_bar = x + th * (x - state.x)
    Kx_bar = [kn + th * (kn - ko) for kn, ko in zip(Kx, state.Kx)]

    p_res = _l1((p / mu) * (state.x - x))
    d_res = sum(_l1((so - sn) / nu + (kxb - kn))
                for so, sn, kxb, kn in zip(state.duals, duals, state.Kx_bar, Kx))
    if not (math.isfinite(p_res) and math.isfinite(d_res)):
        raise NumericalFailure(f"non-finite iterates at iteration {state.k + 1}")
    nx = float(np.linalg.norm(state.x))
    step_norm = float(np.linalg.norm(x - state.x))
    # from x = 0 the ratio is undefined: a fixed point only if the duals also stayed put
    if nx > 0:
        rel = step_norm / nx
    else:
        rel = 0.0 if step_norm == 0 and d_res == 0 else math.inf

    new_mu, new_nu, rho = mu, nu, state.rho
    if params.adaptive:
        c, g = params.c_balance, params.gamma
        primal_big = p_res > c * d_res * g
        dual_big = p_res < c * d_res / g
        if primal_big or dual_big:
            shrink_mu = primal_big == (params.rule == "shrink-primal")
            f = 1.0 - rho
            if shrink_mu:
                new_mu, new_nu = mu * f, nu / f
            else:
                new_mu, new_nu = mu / f, nu * f
            rho = rho * params.beta
    rec = TraceRecord(state.k + 1, p_res, d_res, rel, new_mu, new_nu, rho)
    new = SolverState(x, x_bar, duals, new_mu, new_nu, rho, state.k + 1, Kx, Kx_bar, state.trace)
    return new, rec


@dataclass
class ReconResult:
    image: object
    iterations: int
    stop_reason: str
    trace: list
    wall_time: float
    state: SolverState | None = None


def run_cp(state: SolverState, blocks, prox_g, params: SolverParams,
           score: Callable[[np.ndarray], float] | None = None,
           callback: Callable[[SolverState, TraceRecord], bool | None] | None = None):
    """Iterate until ``rel_change <= threshold`` or ``max_iter``.

    ``score(x)`` adds an RSNR to each trace record. ``callback(state, record)``
    runs after every iteration; returning ``True`` stops the loop.
    Returns ``(state, stop_reason, wall_time)``.
    """
    t0 = time.perf_counter()
    reason = "max_iter"
    for _ in range(int(params.max_iter)):
        state, rec = cp_iterate(state, blocks, prox_g, params)
        if score is not None:
            rec = TraceRecord(*[getattr(rec, f) for f in TraceRecord.FIELDS[:-1]], score(state.x))
        state.trace.append(rec)
        if callback is not None and callback(state, rec):
            reason = "callback"
            break
        if rec.rel_change <= params.threshold:
            reason = "threshold"
            break
    return state, reason, time.perf_counter() - t0
