import os
import subprocess
import sys

import numpy as np
import pytest

from magnetoelastic import kernels
from magnetoelastic.field import build_domain
from magnetoelastic.operators import centered_parts, gradient, laplacian_dirichlet

IMPLS = [kernels.numpy_impl] + ([kernels.numba_impl] if kernels.numba_impl else [])


@pytest.fixture(params=IMPLS, ids=lambda k: k.name)
def impl(request):
    return request.param


@pytest.fixture
def grid():
    d = build_domain(1.5, 0.8, 7, 5)
    rng = np.random.default_rng(4)
    u = rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)
    v = rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)
    return d, u, v


def test_grad_inner_against_sparse_gradient(impl, grid):
    d, u, v = grid
    G = gradient(d).matrix
    expected = np.vdot(G @ v.ravel(), G @ u.ravel())
    assert impl.grad_inner(u, v, d.hx, d.hy) == pytest.approx(expected, rel=1e-13)


def test_laplacian_against_sparse(impl, grid):
    d, u, _ = grid
    np.testing.assert_allclose(impl.laplacian(u, d.hx, d.hy).ravel(),
                               laplacian_dirichlet(d).matrix @ u.ravel(), rtol=1e-13, atol=1e-10)


def test_centered_and_curl_against_sparse(impl, grid):
    d, u, v = grid
    D1, D2 = centered_parts(d)
    np.testing.assert_allclose(impl.dx_centered(u, d.hx).ravel(), D1 @ u.ravel(), atol=1e-12)
    np.testing.assert_allclose(impl.dy_centered(u, d.hy).ravel(), D2 @ u.ravel(), atol=1e-12)
    np.testing.assert_allclose(impl.curl(u, v, d.hx, d.hy).ravel(),
                               D1 @ v.ravel() - D2 @ u.ravel(), atol=1e-12)


def test_real_input(impl):
    d = build_domain(1, 1, 4, 3)
    u = np.arange(12.0).reshape(4, 3)
    out = impl.laplacian(u, d.hx, d.hy)
    assert out.dtype == np.float64


def test_env_flag_selects_numpy():
    code = "from magnetoelastic import kernels; print(kernels.active.name)"
    env = dict(os.environ, MAGNETOELASTIC_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("MAGNETOELASTIC_DISABLE_NUMBA")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == ("numba" if kernels.numba_impl else "numpy")
