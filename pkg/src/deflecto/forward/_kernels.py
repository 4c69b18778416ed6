"""Compiled inner loops. Kept in one module so numba can cache them on disk."""
import math

import numba
import numpy as np


@numba.njit(cache=True, fastmath=True)
def gather(ge, i1, i2, w1, w2, out):
    # ge is the oversampled grid padded by wrap-around so no modulo is needed
    M, L = w1.shape
    for j in range(M):
        acc = 0j
        r0 = i2[j]
        c0 = i1[j]
        for a in range(L):
            row = ge[r0 + a]
            s = 0j
            for b in range(L):
                s += row[c0 + b] * w1[j, b]
            acc += s * w2[j, a]
        out[j] = acc
    return out


@numba.njit(cache=True, fastmath=True)
def spread(v, i1, i2, w1, w2, ge):
    M, L = w1.shape
    for j in range(M):
        r0 = i2[j]
        c0 = i1[j]
        for a in range(L):
            va = v[j] * w2[j, a]
            for b in range(L):
                ge[r0 + a, c0 + b] += va * w1[j, b]
    return ge


@numba.njit(cache=True)
def _dsinc(u):
    # derivative of sin(pi u) / (pi u)
    if abs(u) < 1e-8:
        return -(math.pi ** 2) * u / 3.0
    pu = math.pi * u
    return (math.cos(pu) - math.sin(pu) / pu) / u


@numba.njit(cache=True)
def bandlimited_deflections(vals, r1, r2, taus, thetas, delta_r, out):
    """out[t, s] = sum_j vals[j] * sinc'((tau_s - r_j . p_t) / delta_r)."""
    nt = thetas.shape[0]
    ns = taus.shape[0]
    for t in range(nt):
        p1 = -math.sin(thetas[t])
        p2 = math.cos(thetas[t])
        for j in range(vals.shape[0]):
            proj = r1[j] * p1 + r2[j] * p2
            v = vals[j]
            for s in range(ns):
                out[t, s] += v * _dsinc((taus[s] - proj) / delta_r)
    return out


def fold_wrapped(ge, n):
    """Sum a wrap-padded ``(n + L, n + L)`` grid back onto ``(n, n)``."""
    P = ge.shape[0]
    rows = np.zeros((n, P), dtype=ge.dtype)
    for k in range(0, P, n):
        chunk = ge[k:k + n]
        rows[: chunk.shape[0]] += chunk
    out = np.zeros((n, n), dtype=ge.dtype)
    for k in range(0, P, n):
        chunk = rows[:, k:k + n]
        out[:, : chunk.shape[1]] += chunk
    return out
