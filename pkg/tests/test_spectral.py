import math

import numpy as np
import pytest

from magnetoelastic.errors import ConfigError, DimensionError
from magnetoelastic.field import FieldState, build_domain
from magnetoelastic.operators import assemble_L0, assemble_V, laplacian_dirichlet
from magnetoelastic.spectral import (closed_form_eig, composed_coupling_spectrum, dirichlet_eigs,
                                     kernel_projector, predicted_rate, v_spectrum)


def test_ground_eigenvalue_unit2(unit2):
    assert dirichlet_eigs(unit2, 1)[0][0] == pytest.approx(18.0, rel=1e-12)


def test_ground_eigenvalue_fine_grid():
    lam0 = dirichlet_eigs(build_domain(1, 1, 63, 63), 1)[0][0]
    assert abs(lam0 - 2 * math.pi**2) <= 0.005 * 2 * math.pi**2


@pytest.mark.parametrize("method", ["separable", "full"])
def test_eigs_match_closed_form(rect, method):
    pairs = dirichlet_eigs(rect, rect.n_nodes, method=method)
    expected = sorted(closed_form_eig(rect, m, n) for m in range(1, rect.nx + 1)
                      for n in range(1, rect.ny + 1))
    got = [w for w, _ in pairs]
    np.testing.assert_allclose(got, expected, rtol=1e-10)
    assert all(b >= a for a, b in zip(got, got[1:])) and got[0] > 0


def test_eigenvector_residuals(rect):
    A = -laplacian_dirichlet(rect).toarray().real
    for w, v in dirichlet_eigs(rect, 8):
        assert np.linalg.norm(v) == pytest.approx(1.0)
        assert np.linalg.norm(A @ v - w * v) <= 1e-10 * w


def test_eigs_k_out_of_range(unit2):
    with pytest.raises(ConfigError):
        dirichlet_eigs(unit2, 0)
    with pytest.raises(ConfigError):
        dirichlet_eigs(unit2, 5)


def test_v_spectrum_B0(square6):
    rep = v_spectrum(square6, 0.0)
    assert np.all(np.array(rep.v_eigs) == 0)
    assert rep.pairing_table == [] and rep.predicted_rate == 0.0


def test_v_spectrum_structure(square8):
    rep = v_spectrum(square8, 1.0)
    lam = np.array(rep.v_eigs)
    assert rep.symmetry_residual <= 1e-10 * np.abs(lam).max()
    np.testing.assert_allclose(np.sort(lam), np.sort(-lam), atol=1e-10 * np.abs(lam).max())
    assert max(rep.pairing_residuals) <= 1e-8
    dense = np.sort(np.linalg.eigvalsh(assemble_V(square8, 1.0).toarray().real))
    np.testing.assert_allclose(lam, dense, atol=1e-12)


def test_v_pairing_scales_with_B(square6):
    """lambda^2 = B^2 mu where mu is the B = 1 composed spectrum."""
    mu1 = composed_coupling_spectrum(square6, 1.0)
    for B in (0.5, 3.0):
        rep = v_spectrum(square6, B)
        pos = np.sort(np.array(rep.v_eigs))[-len(mu1):]
        np.testing.assert_allclose(pos**2, B**2 * mu1, rtol=1e-9)
        row = rep.pairing_table[0]
        assert row["lambda_sq_over_B2"] == pytest.approx(mu1[0], rel=1e-9)
        assert row["lambda_sq_over_B"] == pytest.approx(B * mu1[0], rel=1e-9)


def test_composed_spectrum_closed_form(square6):
    """Centered differences: mu = cos^2(k pi/(n+1))/h^2 summed over both axes."""
    d = square6
    cx = [math.cos(k * math.pi / (d.nx + 1)) ** 2 / d.hx**2 for k in range(1, d.nx + 1)]
    cy = [math.cos(k * math.pi / (d.ny + 1)) ** 2 / d.hy**2 for k in range(1, d.ny + 1)]
    expected = np.sort([a + b for a in cx for b in cy])
    np.testing.assert_allclose(composed_coupling_spectrum(d, 1.0), expected, rtol=1e-10, atol=1e-10)


def test_v_spectrum_size_limit():
    with pytest.raises(DimensionError):
        v_spectrum(build_domain(1, 1, 40, 40), 1.0)


def test_predicted_rate_values(square6):
    assert predicted_rate(square6, 0.0) == 0.0
    assert predicted_rate(square6, 1.0) == pytest.approx(4.442883, abs=1e-6)
    assert predicted_rate(square6, 4.0) == pytest.approx(8.885766, abs=1e-6)
    assert predicted_rate(square6, 1.0, "discrete") == pytest.approx(
        math.sqrt(closed_form_eig(square6, 1, 1)))


def test_predicted_rate_second_order_convergence():
    cont = predicted_rate(build_domain(1, 1, 3, 3), 1.0)
    errs = [cont - predicted_rate(build_domain(1, 1, n, n), 1.0, "discrete") for n in (7, 15, 31, 63)]
    assert all(e > 0 for e in errs)
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.8 <= r <= 4.2 for r in ratios), ratios


def test_kernel_projector_trivial(square6):
    L0, V = assemble_L0(square6), assemble_V(square6, 1.0)
    P = kernel_projector(L0, V, square6)
    assert P.dim == 0
    assert np.all(P(np.zeros(square6.n_unknowns)) == 0)


def test_pi1_channel_in_ker_V(square6):
    rng = np.random.default_rng(0)
    z = np.zeros((2, 6, 6))
    pi = np.zeros((2, 6, 6))
    pi[0] = rng.standard_normal((6, 6))
    x = FieldState(z, pi, z)
    assert np.all(assemble_V(square6, 1.0).apply(x).to_vector() == 0)
    # L0 maps pi to i pi in the U block, so the state is not in Ker L0
    assert np.linalg.norm(assemble_L0(square6).apply(x).to_vector()) > 0


def test_projector_axioms_nontrivial_kernel(square6):
    """Construct operators with a known common kernel and check P."""
    L0 = assemble_L0(square6).toarray()
    V = assemble_V(square6, 1.0).toarray()
    n = L0.shape[0]
    keep = np.ones(n)
    keep[[5, 40, 100]] = 0
    L = L0 * keep[None, :]
    Vk = V * keep[None, :]
    P = kernel_projector(L, Vk, square6)
    assert P.dim == 3
    M = P.matrix
    assert np.abs(M @ M - M).max() <= 1e-10 * max(1, np.abs(M).max())
    assert np.abs(M - P.adjoint_matrix()).max() <= 1e-10 * max(1, np.abs(M).max())
    assert np.linalg.norm(Vk @ M) <= 1e-8 * n and np.linalg.norm(L @ M) <= 1e-8 * n
