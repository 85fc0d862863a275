"""Elementwise hot loops with numba and pure-numpy implementations.

Every public kernel has a numpy twin in ``NUMPY`` so tests and the benchmark
can compare both paths inside one process.  The active implementation is
chosen once at import time by :mod:`wkblab._jit`.
"""

from __future__ import annotations

import math
from types import SimpleNamespace

import numpy as np

from ._jit import jit_or

# exp(1 - q) underflows to zero well before q reaches this
_Q_CUTOFF = 745.0


def _wrap_np(x: np.ndarray, period: float) -> np.ndarray:
    return (x + 0.5 * period) % period - 0.5 * period


def bump_numpy(x, center, half_width, amplitude, period, deriv):
    r = _wrap_np(np.asarray(x, dtype=float) - center, period) / half_width
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    ri = r[inside]
    q = 1.0 / (1.0 - ri * ri)
    keep = q < _Q_CUTOFF
    ri, q = ri[keep], q[keep]
    g = amplitude * np.exp(1.0 - q)
    if deriv == 1:
        g = -2.0 * ri * q * q * g / half_width
    elif deriv == 2:
        g = g * (4.0 * ri**2 * q**4 - 2.0 * q**2 - 8.0 * ri**2 * q**3) / half_width**2
    idx = np.flatnonzero(inside)[keep]
    out.reshape(-1)[idx] = g
    return out


def _bump_loop(x, center, half_width, amplitude, period, deriv):
    flat = x.reshape(-1)
    out = np.zeros(flat.size)
    half = 0.5 * period
    for i in range(flat.size):
        d = (flat[i] - center + half) % period - half
        r = d / half_width
        if r <= -1.0 or r >= 1.0:
            continue
        q = 1.0 / (1.0 - r * r)
        if q >= _Q_CUTOFF:
            continue
        g = amplitude * math.exp(1.0 - q)
        if deriv == 1:
            g = -2.0 * r * q * q * g / half_width
        elif deriv == 2:
            r2 = r * r
            g = g * (4.0 * r2 * q**4 - 2.0 * q * q - 8.0 * r2 * q**3) / (half_width * half_width)
        out[i] = g
    return out.reshape(x.shape)


_bump_jit = jit_or(None)(_bump_loop)


def bump(x, center: float, half_width: float, amplitude: float, period: float, deriv: int = 0) -> np.ndarray:
    """Compactly supported bump ``amplitude*exp(1 - 1/(1-r^2))`` and its first two derivatives."""
    if deriv not in (0, 1, 2):
        raise ValueError("bump derivatives are available up to order 2")
    x = np.ascontiguousarray(x, dtype=float)
    if _bump_jit is None:
        return bump_numpy(x, center, half_width, amplitude, period, deriv)
    return _bump_jit(x, float(center), float(half_width), float(amplitude), float(period), int(deriv))


def weighted_sq_sum_numpy(coeffs, weights):
    return float(np.sum(weights * (coeffs.real**2 + coeffs.imag**2)))


@jit_or(weighted_sq_sum_numpy)
def _weighted_sq_sum(coeffs, weights):
    acc = 0.0
    for i in range(coeffs.size):
        c = coeffs[i]
        acc += weights[i] * (c.real * c.real + c.imag * c.imag)
    return acc


def weighted_sq_sum(coeffs: np.ndarray, weights: np.ndarray) -> float:
    """Return sum_k w_k |c_k|^2 over arrays of equal shape."""
    c = np.ascontiguousarray(coeffs, dtype=complex).reshape(-1)
    w = np.ascontiguousarray(np.broadcast_to(weights, coeffs.shape), dtype=float).reshape(-1)
    return float(_weighted_sq_sum(c, w))


# Lawson (integrating-factor) RK4 stage arithmetic on flattened spectra.

def stage_numpy(u, pu, k, pk, h, out):
    np.multiply(pu, u, out=out)
    out += h * pk * k
    return out


@jit_or(stage_numpy)
def _stage(u, pu, k, pk, h, out):
    for i in range(u.size):
        out[i] = pu[i] * u[i] + h * pk[i] * k[i]
    return out


def final_numpy(u, k1, k2, k3, k4, e, e2, dt, out):
    np.multiply(e, u, out=out)
    out += (dt / 6.0) * (e * k1 + 2.0 * e2 * (k2 + k3) + k4)
    return out


@jit_or(final_numpy)
def _final(u, k1, k2, k3, k4, e, e2, dt, out):
    c = dt / 6.0
    for i in range(u.size):
        out[i] = e[i] * u[i] + c * (e[i] * k1[i] + 2.0 * e2[i] * (k2[i] + k3[i]) + k4[i])
    return out


def lawson_stage(u, pu, k, pk, h: float, out):
    """out = pu*u + h*pk*k (all arrays share one shape)."""
    _stage(u.reshape(-1), pu.reshape(-1), k.reshape(-1), pk.reshape(-1), float(h), out.reshape(-1))
    return out


def lawson_final(u, k1, k2, k3, k4, e, e2, dt: float, out):
    """out = e*u + dt/6 (e*k1 + 2 e2 (k2+k3) + k4)."""
    _final(
        u.reshape(-1), k1.reshape(-1), k2.reshape(-1), k3.reshape(-1), k4.reshape(-1),
        e.reshape(-1), e2.reshape(-1), float(dt), out.reshape(-1),
    )
    return out


NUMPY = SimpleNamespace(
    bump=bump_numpy,
    weighted_sq_sum=weighted_sq_sum_numpy,
    stage=stage_numpy,
    final=final_numpy,
)
