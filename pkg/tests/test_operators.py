import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from magnetoelastic.field import BetaMode, FieldState, PhysicsConfig, build_domain, make_initial
from magnetoelastic.operators import (assemble_generator, assemble_L0, assemble_V, centered_parts,
                                      coupling_backward, coupling_forward, dirichlet_form, gradient,
                                      laplacian_dirichlet, weight_matrix)

from conftest import centered_loop, dense_gradient, random_state


def test_gradient_impulse_stencil(unit2):
    u = np.zeros(4)
    u[0] = 1.0
    g = gradient(unit2).matrix @ u
    nz = g[np.abs(g) > 0]
    assert nz.size == 4
    np.testing.assert_allclose(np.abs(nz), 3.0)


def test_gradient_zero_field(rect):
    assert np.all(gradient(rect).matrix @ np.zeros(rect.n_nodes) == 0)


def test_gradient_matches_dense_oracle(rect):
    X, _ = rect.coordinates()
    oracle = np.array([r for _, r in dense_gradient(rect)])
    Gsp = gradient(rect).toarray().real
    # row order may differ: compare as sets of (row vector) via sorting keys
    keys = [k for k, _ in dense_gradient(rect)]
    order = sorted(range(len(keys)), key=lambda k: keys[k])
    nxe = (rect.nx + 1) * rect.ny
    sp_keys = [("x", i, j) for i in range(rect.nx + 1) for j in range(rect.ny)] + \
              [("y", i, j) for i in range(rect.nx) for j in range(rect.ny + 1)]
    sp_order = sorted(range(len(sp_keys)), key=lambda k: sp_keys[k])
    assert len(sp_keys) == nxe + rect.nx * (rect.ny + 1)
    np.testing.assert_allclose(Gsp[sp_order], oracle[order], rtol=0, atol=1e-12)
    f = X.ravel()
    np.testing.assert_allclose(Gsp[sp_order] @ f, oracle[order] @ f, atol=1e-12)


def test_laplacian_is_negated_gradient_gram(rect):
    lap = laplacian_dirichlet(rect).matrix
    G = gradient(rect).matrix
    assert abs(lap + G.T @ G).max() <= 1e-12 * abs(lap).max()


def test_laplacian_stencil_row():
    d = build_domain(1, 1, 5, 5)
    lap = laplacian_dirichlet(d).toarray().real
    c = 2 * 5 + 2
    h2 = d.hx**2
    assert lap[c, c] == pytest.approx(-4 / h2)
    for nb in (c - 1, c + 1, c - 5, c + 5):
        assert lap[c, nb] == pytest.approx(1 / h2)
    assert np.count_nonzero(lap[c]) == 5


def test_laplacian_smallest_eigenvalue_unit2(unit2):
    vals = np.linalg.eigvalsh(-laplacian_dirichlet(unit2).toarray().real)
    # (8/h^2) sin^2(pi h / 2) with h = 1/3
    assert vals[0] == pytest.approx(18.0, rel=1e-12)


def test_laplacian_on_sampled_mode(square8):
    u = make_initial(square8, "mode", m=1, n=1, block="U1").U[0].real.ravel()
    w = 8 / square8.hx**2 * np.sin(np.pi * square8.hx / 2) ** 2
    np.testing.assert_allclose(laplacian_dirichlet(square8).matrix @ u, -w * u, atol=1e-12 * w)


def _cross_oracle_forward(domain, h1, h2, B):
    curl = centered_loop(h2, 0, domain.hx) - centered_loop(h1, 1, domain.hy)
    out = np.zeros((2,) + domain.shape)
    for i in range(domain.nx):
        for j in range(domain.ny):
            v = np.cross([0.0, 0.0, curl[i, j]], [B, 0.0, 0.0])
            out[0, i, j], out[1, i, j] = v[0], v[1]
    return out


def test_coupling_forward_cross_product_oracle(rect):
    rng = np.random.default_rng(0)
    h = rng.standard_normal((2,) + rect.shape)
    B = 1.7
    got = (coupling_forward(rect, B).matrix @ h.ravel()).real.reshape(2, *rect.shape)
    np.testing.assert_allclose(got, _cross_oracle_forward(rect, h[0], h[1], B), atol=1e-12)


def test_coupling_forward_constant_and_linear(square8):
    B = 2.0
    F = coupling_forward(square8, B).matrix
    X, _ = square8.coordinates()
    out = (F @ np.concatenate([np.ones(square8.n_nodes), np.ones(square8.n_nodes)])).real.reshape(2, 8, 8)
    assert np.all(out[:, 1:-1, 1:-1] == 0)
    out = (F @ np.concatenate([np.zeros(square8.n_nodes), X.ravel()])).real.reshape(2, 8, 8)
    assert np.all(out[0] == 0)
    np.testing.assert_allclose(out[1, 1:-1, :], B, rtol=1e-12)


def test_coupling_backward_formula_and_transpose(rect):
    B = 0.9
    C = coupling_backward(rect, B).matrix
    F = coupling_forward(rect, B).matrix
    assert abs(C + F.T).max() == 0
    rng = np.random.default_rng(1)
    p = rng.standard_normal((2,) + rect.shape)
    got = (C @ p.ravel()).real.reshape(2, *rect.shape)
    # curl(pi x B) for pi = (pi1, pi2, 0), B = (B, 0, 0)
    expected = np.stack([-B * centered_loop(p[1], 1, rect.hy), B * centered_loop(p[1], 0, rect.hx)])
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_coupling_backward_constant_and_linear(square8):
    C = coupling_backward(square8, 1.5).matrix
    _, Y = square8.coordinates()
    p = np.concatenate([np.zeros(square8.n_nodes), Y.ravel()])
    out = (C @ p).real.reshape(2, 8, 8)
    np.testing.assert_allclose(out[0, :, 1:-1], -1.5, rtol=1e-12)
    assert np.all(out[1, 1:-1] == 0)


def test_composed_coupling_is_wide_laplacian(square8):
    """forward o backward on the pi2 channel is B^2 (D1^2 + D2^2)."""
    B = 1.3
    F = coupling_forward(square8, B).matrix
    C = coupling_backward(square8, B).matrix
    N = square8.n_nodes
    comp = (F @ C)[N:, N:]
    D1, D2 = centered_parts(square8)
    assert abs(comp - B**2 * (D1 @ D1 + D2 @ D2)).max() <= 1e-12 * abs(comp).max()
    assert abs((F @ C)[:N]).max() == 0


def test_L0_block_structure(square6):
    for variant, s in (("section1", -1), ("appendix", 1)):
        L0 = assemble_L0(square6, variant)
        x = random_state(square6, 0)
        only_h = FieldState(0 * x.U, 0 * x.pi, x.h)
        out = L0.apply(only_h)
        lap = laplacian_dirichlet(square6).matrix
        assert np.all(out.U == 0) and np.all(out.pi == 0)
        np.testing.assert_allclose(out.h[0].ravel(), s * (lap @ x.h[0].ravel()))
        only_u = FieldState(x.U, 0 * x.pi, 0 * x.h)
        out = L0.apply(only_u)
        assert np.all(out.U == 0) and np.all(out.h == 0)
        np.testing.assert_allclose(out.pi[1].ravel(), 1j * (lap @ x.U[1].ravel()))


def test_V_properties(square6):
    assert assemble_V(square6, 0.0).matrix.nnz == 0 or abs(assemble_V(square6, 0.0).matrix).max() == 0
    V = assemble_V(square6, 1.0).matrix
    assert abs(V - V.T.conj()).max() == 0
    assert np.all(V.imag.toarray() == 0)
    z = np.zeros((2, 6, 6))
    pi = np.zeros((2, 6, 6))
    pi[0] = np.random.default_rng(0).standard_normal((6, 6))
    pi[1] = 3.0
    out = assemble_V(square6, 1.0).apply(FieldState(z, pi, z))
    assert np.all(out.h[:, 1:-1, 1:-1] == 0)
    pi[1] = 0.0
    assert np.all(assemble_V(square6, 1.0).apply(FieldState(z, pi, z)).to_vector() == 0)


def test_generator_imaginary_B0_is_iL0(square6):
    g = assemble_generator(square6, PhysicsConfig(0.0, BetaMode.IMAGINARY))
    assert abs(g.matrix - 1j * assemble_L0(square6).matrix).max() == 0


def test_generator_real_is_real(square6):
    g = assemble_generator(square6, PhysicsConfig(1.0, BetaMode.REAL, 2.0))
    assert np.all(g.matrix.imag.toarray() == 0)
    x = random_state(square6, 3, real=True)
    assert np.all(g.apply(x).to_vector().imag == 0)


def test_weight_matrix_reproduces_energy(rect):
    from magnetoelastic.field import energy_norm
    W = weight_matrix(rect)
    x = random_state(rect, 9)
    v = x.to_vector()
    assert np.vdot(v, W @ v).real == pytest.approx(energy_norm(x, rect), rel=1e-13)
    assert abs(dirichlet_form(rect) + laplacian_dirichlet(rect).matrix.real).max() < 1e-9


@pytest.mark.parametrize("builder", [
    lambda d: assemble_L0(d), lambda d: assemble_V(d, 1.3),
    lambda d: assemble_generator(d, PhysicsConfig(1.0, "real", 0.5)),
    lambda d: assemble_generator(d, PhysicsConfig(0.7, "imaginary")), gradient, laplacian_dirichlet])
def test_sparse_matches_dense_reference(rect, builder):
    assert builder(rect).self_check() <= 1e-13


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), re=st.floats(-3, 3), im=st.floats(-3, 3))
def test_generator_linearity(seed, re, im):
    d = build_domain(1, 1, 4, 5)
    A = assemble_generator(d, PhysicsConfig(1.1, "imaginary")).matrix
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(d.n_unknowns) + 1j * rng.standard_normal(d.n_unknowns)
    y = rng.standard_normal(d.n_unknowns) + 1j * rng.standard_normal(d.n_unknowns)
    c = complex(re, im)
    lhs = A @ (x + c * y)
    rhs = A @ x + c * (A @ y)
    assert np.linalg.norm(lhs - rhs) <= 1e-13 * max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1.0)


def test_dump_coo(tmp_path, unit2):
    op = assemble_L0(unit2)
    path = tmp_path / "l0.txt"
    op.dump_coo(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# L0 24 24")
    rows = [tuple(float(v) for v in ln.split()) for ln in lines[1:]]
    assert len(rows) == op.matrix.nnz
    dense = np.zeros((24, 24), dtype=complex)
    for r, c, re, im in rows:
        dense[int(r), int(c)] = re + 1j * im
    np.testing.assert_array_equal(dense, op.toarray())
