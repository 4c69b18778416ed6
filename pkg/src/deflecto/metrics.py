"""Reconstruction and measurement quality in dB, plus solver trace records."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

DB_CAP = 300.0


def _values(x):
    return np.asarray(x.values if hasattr(x, "values") else x, dtype=float).reshape(-1)


def snr_db(signal_norm: float, error_norm: float) -> float:
    if error_norm == 0.0:
        return DB_CAP
    return min(DB_CAP, 20.0 * math.log10(signal_norm / error_norm))


def rsnr(truth, estimate, mean_removed: bool = False) -> float:
    """``20 log10(|n| / |n - n~|)``, capped at 300 dB.

    With ``mean_removed`` the estimate's mean is replaced by the truth's mean
    first, which discards the unobservable constant offset.
    """
    t = _values(truth)
    e = _values(estimate)
    if t.shape != e.shape:
        raise InvalidArgument("truth and estimate differ in size")
    nt = float(np.linalg.norm(t))
    if nt == 0.0:
        raise InvalidArgument("RSNR is undefined for an all-zero ground truth")
    if mean_removed:
        e = e - e.mean() + t.mean()
    return snr_db(nt, float(np.linalg.norm(t - e)))


def msnr(clean, noisy) -> float:
    """``20 log10(|Delta| / |eta|)`` with ``eta = noisy - clean``, capped at 300 dB."""
    c = _values(clean)
    n = _values(noisy)
    if c.shape != n.shape:
        raise InvalidArgument("clean and noisy differ in size")
    nc = float(np.linalg.norm(c))
    if nc == 0.0:
        raise InvalidArgument("MSNR is undefined for an all-zero clean signal")
    return snr_db(nc, float(np.linalg.norm(n - c)))


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    p_res: float
    d_res: float
    rel_change: float
    mu: float
    nu: float
    rho: float
    rsnr_db: float | None = None

    FIELDS = ("iter", "p_res", "d_res", "rel_change", "mu", "nu", "rho", "rsnr_db")


def residual_energy(trace) -> np.ndarray:
    """``|P|_1**2 + |D|_1**2`` per record."""
    trace = list(trace)
    if not trace:
        raise InvalidArgument("empty trace")
    p = np.array([r.p_res for r in trace])
    d = np.array([r.d_res for r in trace])
    return p * p + d * d
