"""Spherical Bessel j_l and Neumann n_l functions for real arguments.

All routines return a table over orders 0..lmax for an array of arguments.
The scaled forms

    jhat_l(x) = j_l(x) / x**l,        nhat_l(x) = x**(l+1) * n_l(x)

are smooth at x = 0 (jhat_l(0) = 1/(2l+1)!!, nhat_l(0) = -(2l-1)!!) and are
what the self-energy kernels use so that small arguments never under- or
overflow.
"""
from __future__ import annotations

import numpy as np

_SERIES_MAX = 1.0


def _double_factorial_odd(l: int) -> float:
    """(2l+1)!!"""
    out = 1.0
    for i in range(3, 2 * l + 2, 2):
        out *= i
    return out


def _jhat_series(lmax: int, x: np.ndarray) -> np.ndarray:
    y = -0.5 * x * x
    out = np.empty((lmax + 1, x.size))
    for l in range(lmax + 1):
        term = np.full(x.size, 1.0 / _double_factorial_odd(l))
        acc = term.copy()
        for k in range(1, 40):
            term = term * y / (k * (2 * l + 2 * k + 1))
            acc += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
                break
        out[l] = acc
    return out


def _j_upward(lmax: int, x: np.ndarray) -> np.ndarray:
    out = np.empty((lmax + 1, x.size))
    s, c = np.sin(x), np.cos(x)
    out[0] = s / x
    if lmax >= 1:
        out[1] = s / (x * x) - c / x
    for l in range(1, lmax):
        out[l + 1] = (2 * l + 1) / x * out[l] - out[l - 1]
    return out


def _j_miller(lmax: int, x: np.ndarray) -> np.ndarray:
    """Downward recurrence, normalised to whichever of j_0, j_1 is larger."""
    start = lmax + 20 + int(np.ceil(np.max(x))) if x.size else lmax + 20
    # Extra margin so the trial solution has converged onto the minimal one.
    start += int(np.sqrt(40.0 * start))
    out = np.zeros((lmax + 1, x.size))
    hi = np.zeros(x.size)
    cur = np.full(x.size, 1e-300)
    scale = np.ones(x.size)
    trial0 = trial1 = None
    for l in range(start, 0, -1):
        nxt = (2 * l + 1) / x * cur - hi
        hi, cur = cur, nxt
        big = np.abs(cur) > 1e250
        if np.any(big):
            cur[big] *= 1e-250
            hi[big] *= 1e-250
            out[:, big] *= 1e-250
        if l - 1 <= lmax:
            out[l - 1] = cur
        if l - 1 == 1:
            trial1 = cur.copy()
    trial0 = out[0]
    if trial1 is None:
        trial1 = hi
    s, c = np.sin(x), np.cos(x)
    j0 = s / x
    j1 = s / (x * x) - c / x
    use0 = np.abs(j0) >= np.abs(j1)
    scale = np.where(use0, j0 / np.where(use0, trial0, 1.0), j1 / np.where(use0, 1.0, trial1))
    return out * scale


def spherical_jn_table(lmax: int, x) -> np.ndarray:
    """j_0..j_lmax at real ``x``; shape (lmax+1, *x.shape)."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    ax = np.abs(x.ravel())
    out = np.empty((lmax + 1, ax.size))
    small = ax < _SERIES_MAX
    if np.any(small):
        xs = ax[small]
        powers = xs[None, :] ** np.arange(lmax + 1)[:, None]
        out[:, small] = _jhat_series(lmax, xs) * powers
    up = (~small) & (ax >= lmax)
    if np.any(up):
        out[:, up] = _j_upward(lmax, ax[up])
    mid = (~small) & (ax < lmax)
    if np.any(mid):
        out[:, mid] = _j_miller(lmax, ax[mid])
    neg = x.ravel() < 0
    if np.any(neg):
        parity = (-1.0) ** np.arange(lmax + 1)
        out[:, neg] *= parity[:, None]
    return out.reshape((lmax + 1,) + shape)


def scaled_jn_table(lmax: int, x) -> np.ndarray:
    """jhat_l(x) = j_l(x)/x**l for l = 0..lmax (even in x)."""
    x = np.abs(np.asarray(x, dtype=float))
    shape = x.shape
    ax = x.ravel()
    out = np.empty((lmax + 1, ax.size))
    small = ax < _SERIES_MAX
    if np.any(small):
        out[:, small] = _jhat_series(lmax, ax[small])
    if np.any(~small):
        xb = ax[~small]
        j = spherical_jn_table(lmax, xb)
        out[:, ~small] = j * xb[None, :] ** (-np.arange(lmax + 1.0))[:, None]
    return out.reshape((lmax + 1,) + shape)


def scaled_yn_table(lmax: int, x) -> np.ndarray:
    """nhat_l(x) = x**(l+1) n_l(x) for l = 0..lmax (even in x)."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty((lmax + 1,) + x.shape)
    c = np.cos(x)
    out[0] = -c
    if lmax >= 1:
        out[1] = -c - x * np.sin(x)
    x2 = x * x
    for l in range(1, lmax):
        out[l + 1] = (2 * l + 1) * out[l] - x2 * out[l - 1]
    return out


def spherical_yn_table(lmax: int, x) -> np.ndarray:
    """n_0..n_lmax at real nonzero ``x`` (upward recurrence)."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise ValueError("n_l is singular at z = 0")
    ax = np.abs(x)
    with np.errstate(over="ignore", divide="ignore"):
        out = scaled_yn_table(lmax, ax) / ax ** (np.arange(lmax + 1.0).reshape((-1,) + (1,) * x.ndim) + 1)
    neg = x < 0
    if np.any(neg):
        parity = (-1.0) ** (np.arange(lmax + 1) + 1)
        out[:, neg] *= parity.reshape(-1, 1)
    return out


def bessel_jl(l: int, z):
    """Spherical Bessel function j_l(z)."""
    out = spherical_jn_table(l, z)[l]
    return float(out) if np.ndim(z) == 0 else out


def bessel_nl(l: int, z):
    """Spherical Neumann function n_l(z) (a.k.a. y_l); singular at z = 0."""
    out = spherical_yn_table(l, z)[l]
    return float(out) if np.ndim(z) == 0 else out
