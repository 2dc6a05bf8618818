"""Stencil kernels on interior-node grids.

Every kernel exists twice: a numba ``@njit`` loop version and a vectorised
numpy version. Both take arrays of interior values shaped ``(nx, ny)`` and
treat the surrounding boundary ring as zero.

The active implementation is picked at import time. Set
``MAGNETOELASTIC_DISABLE_NUMBA=1`` to force the numpy path (useful when
debugging or when numba is unavailable).
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

ENV_FLAG = "MAGNETOELASTIC_DISABLE_NUMBA"


# -- numpy path ---------------------------------------------------------------

def _pad(u):
    out = np.zeros((u.shape[0] + 2, u.shape[1] + 2), dtype=u.dtype)
    out[1:-1, 1:-1] = u
    return out


def grad_inner_numpy(u, v, hx, hy):
    """sum over edges of Du * conj(Dv) for forward differences."""
    pu, pv = _pad(u), _pad(v)
    dxu = np.diff(pu[:, 1:-1], axis=0) / hx
    dxv = np.diff(pv[:, 1:-1], axis=0) / hx
    dyu = np.diff(pu[1:-1, :], axis=1) / hy
    dyv = np.diff(pv[1:-1, :], axis=1) / hy
    return complex(np.sum(dxu * np.conj(dxv)) + np.sum(dyu * np.conj(dyv)))


def laplacian_numpy(u, hx, hy):
    p = _pad(u)
    c = p[1:-1, 1:-1]
    return ((p[2:, 1:-1] - 2.0 * c + p[:-2, 1:-1]) / hx**2
            + (p[1:-1, 2:] - 2.0 * c + p[1:-1, :-2]) / hy**2)


def dx_centered_numpy(u, hx):
    p = _pad(u)
    return (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * hx)


def dy_centered_numpy(u, hy):
    p = _pad(u)
    return (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * hy)


def curl_numpy(h1, h2, hx, hy):
    return dx_centered_numpy(h2, hx) - dy_centered_numpy(h1, hy)


# -- numba path ---------------------------------------------------------------

def _grad_inner_loops(u, v, hx, hy):
    nx, ny = u.shape
    acc = 0.0 + 0.0j
    for j in range(ny):
        prev_u = 0.0 + 0.0j
        prev_v = 0.0 + 0.0j
        for i in range(nx + 1):
            cu = u[i, j] if i < nx else 0.0 + 0.0j
            cv = v[i, j] if i < nx else 0.0 + 0.0j
            acc += (cu - prev_u) * np.conj(cv - prev_v)
            prev_u, prev_v = cu, cv
    sx = acc / (hx * hx)
    acc = 0.0 + 0.0j
    for i in range(nx):
        prev_u = 0.0 + 0.0j
        prev_v = 0.0 + 0.0j
        for j in range(ny + 1):
            cu = u[i, j] if j < ny else 0.0 + 0.0j
            cv = v[i, j] if j < ny else 0.0 + 0.0j
            acc += (cu - prev_u) * np.conj(cv - prev_v)
            prev_u, prev_v = cu, cv
    return sx + acc / (hy * hy)


def _laplacian_loops(u, hx, hy):
    nx, ny = u.shape
    out = np.empty_like(u)
    ax = 1.0 / (hx * hx)
    ay = 1.0 / (hy * hy)
    for i in range(nx):
        for j in range(ny):
            c = u[i, j]
            w = u[i - 1, j] if i > 0 else 0.0
            e = u[i + 1, j] if i < nx - 1 else 0.0
            s = u[i, j - 1] if j > 0 else 0.0
            n = u[i, j + 1] if j < ny - 1 else 0.0
            out[i, j] = ax * (e - 2.0 * c + w) + ay * (n - 2.0 * c + s)
    return out


def _dx_centered_loops(u, hx):
    nx, ny = u.shape
    out = np.empty_like(u)
    for i in range(nx):
        for j in range(ny):
            e = u[i + 1, j] if i < nx - 1 else 0.0
            w = u[i - 1, j] if i > 0 else 0.0
            out[i, j] = (e - w) / (2.0 * hx)
    return out


def _dy_centered_loops(u, hy):
    nx, ny = u.shape
    out = np.empty_like(u)
    for i in range(nx):
        for j in range(ny):
            n = u[i, j + 1] if j < ny - 1 else 0.0
            s = u[i, j - 1] if j > 0 else 0.0
            out[i, j] = (n - s) / (2.0 * hy)
    return out


def _curl_loops(h1, h2, hx, hy):
    nx, ny = h1.shape
    out = np.empty_like(h1)
    for i in range(nx):
        for j in range(ny):
            e = h2[i + 1, j] if i < nx - 1 else 0.0
            w = h2[i - 1, j] if i > 0 else 0.0
            n = h1[i, j + 1] if j < ny - 1 else 0.0
            s = h1[i, j - 1] if j > 0 else 0.0
            out[i, j] = (e - w) / (2.0 * hx) - (n - s) / (2.0 * hy)
    return out


numpy_impl = SimpleNamespace(
    name="numpy",
    grad_inner=grad_inner_numpy,
    laplacian=laplacian_numpy,
    dx_centered=dx_centered_numpy,
    dy_centered=dy_centered_numpy,
    curl=curl_numpy,
)

if numba is not None:
    _jit = numba.njit(cache=True)
    _grad_inner_jit = _jit(_grad_inner_loops)

    def _grad_inner_numba(u, v, hx, hy):
        return complex(_grad_inner_jit(np.ascontiguousarray(u, dtype=np.complex128),
                                       np.ascontiguousarray(v, dtype=np.complex128),
                                       float(hx), float(hy)))

    numba_impl = SimpleNamespace(
        name="numba",
        grad_inner=_grad_inner_numba,
        laplacian=_jit(_laplacian_loops),
        dx_centered=_jit(_dx_centered_loops),
        dy_centered=_jit(_dy_centered_loops),
        curl=_jit(_curl_loops),
    )
else:  # pragma: no cover
    numba_impl = None


def _select():
    if numba_impl is None or os.environ.get(ENV_FLAG, "").strip() not in ("", "0"):
        return numpy_impl
    return numba_impl


active = _select()
