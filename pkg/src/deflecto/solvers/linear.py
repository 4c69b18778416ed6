"""Small linear-operator helpers and the power iteration for ``|||K|||``."""
from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidArgument
from ..prox import div, grad


class MatrixOperator:
    """Dense matrix with the ``apply``/``adjoint`` protocol."""

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise InvalidArgument("matrix operator needs a 2-D array")

    @property
    def shape(self):
        return self.A.shape

    def apply(self, x):
        return self.A @ x

    def adjoint(self, y):
        return self.A.T @ y


class GradientOperator:
    """``x -> grad(x)`` flattened, on ``n0 x n0`` images."""

    def __init__(self, n0: int):
        self.n0 = n0
        self.shape = (2 * n0 * n0, n0 * n0)

    def apply(self, x):
        return grad(np.reshape(x, (self.n0, self.n0))).reshape(-1)

    def adjoint(self, g):
        return -div(np.reshape(g, (2, self.n0, self.n0))).reshape(-1)


GRAD_NORM = 2.0 * math.sqrt(2.0)  # sup of |||grad||| over all grid sizes


class ScaledOperator:
    """``x -> op(x) / scale``."""

    def __init__(self, op, scale: float):
        if not scale > 0:
            raise InvalidArgument("scale must be > 0")
        self.op = op
        self.scale = float(scale)
        self.shape = op.shape

    def apply(self, x):
        return self.op.apply(x) / self.scale

    def adjoint(self, y):
        return self.op.adjoint(y) / self.scale


class StackedOperator:
    """``x -> (K_1 x, ..., K_p x)``; ``K*K = sum_j K_j* K_j``."""

    def __init__(self, *ops):
        if not ops:
            raise InvalidArgument("need at least one operator")
        self.ops = ops
        self._sizes = [op.shape[0] for op in ops]
        self.shape = (sum(self._sizes), ops[0].shape[1])

    def apply(self, x):
        return np.concatenate([op.apply(x) for op in self.ops])

    def adjoint(self, y):
        out = None
        start = 0
        for op, n in zip(self.ops, self._sizes):
            part = op.adjoint(y[start:start + n])
            out = part if out is None else out + part
            start += n
        return out


def _domain_size(op) -> int:
    shape = getattr(op, "shape", None)
    if shape is None:
        raise InvalidArgument("operator must expose shape")
    return int(shape[1])


def operator_norm(op, n_iter: int = 100, seed: int = 0, safety: float = 1.01,
                  return_history: bool = False):
    """Largest singular value by power iteration on ``K* K``, times ``safety``.

    The Rayleigh quotients ``|K v|`` for unit ``v`` form a nondecreasing sequence;
    they are returned (before the safety factor) when ``return_history`` is set.
    """
    if n_iter < 1:
        raise InvalidArgument("n_iter must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(_domain_size(op))
    v /= np.linalg.norm(v)
    history = []
    est = 0.0
    for _ in range(int(n_iter)):
        Kv = op.apply(v)
        est = float(np.linalg.norm(Kv))
        history.append(est)
        w = op.adjoint(Kv)
        nw = float(np.linalg.norm(w))
        if nw == 0.0 or not math.isfinite(nw):
            break
        v = w / nw
    result = est * safety
    return (result, history) if return_history else result
