"""Sparse finite-difference operators and block assembly.

All scalar operators act on C-ordered flattened interior grids (index
``i * ny + j``). Block operators act on flattened :class:`FieldState`
vectors. Differences use zero extension past the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .field import BetaMode, DomainConfig, FieldState, PhysicsConfig

TAGS = ("L0", "V", "generator-imaginary", "generator-real", "laplacian",
        "gradient", "coupling-forward", "coupling-backward", "weight", "custom")


@dataclass(frozen=True, eq=False)
class SparseOperator:
    matrix: sp.csr_matrix
    tag: str = "custom"

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown operator tag {self.tag!r}")
        m = sp.csr_matrix(self.matrix, dtype=np.complex128)
        m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, FieldState):
            return self.apply(other)
        return self.matrix @ other

    def apply(self, state: FieldState) -> FieldState:
        nx, ny = state.grid_shape
        out = self.matrix @ state.to_vector()
        blocks = out.reshape(3, 2, nx, ny)
        return FieldState(blocks[0], blocks[1], blocks[2])

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def self_check(self, trials: int = 3, seed: int = 0) -> float:
        """Largest relative gap between sparse and dense products on random vectors."""
        rng = np.random.default_rng(seed)
        dense = self.toarray()
        worst = 0.0
        for _ in range(trials):
            v = rng.standard_normal(self.shape[1]) + 1j * rng.standard_normal(self.shape[1])
            ref = dense @ v
            scale = max(np.linalg.norm(ref), np.finfo(float).tiny)
            worst = max(worst, np.linalg.norm(self.matrix @ v - ref) / scale)
        return worst

    def dump_coo(self, path) -> None:
        """Write ``row col re im`` lines, 0-based, in row-major order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# {self.tag} {self.shape[0]} {self.shape[1]} nnz={coo.nnz}\n")
            for k in order:
                v = coo.data[k]
                fh.write(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}\n")


# -- 1D building blocks -------------------------------------------------------

def _forward_1d(n: int, h: float) -> sp.csr_matrix:
    """(n+1) x n edge differences (u_k - u_{k-1}) / h with u_{-1} = u_n = 0."""
    e = sp.eye(n + 1, n, k=0) - sp.eye(n + 1, n, k=-1)
    return sp.csr_matrix(e / h)


def _centered_1d(n: int, h: float) -> sp.csr_matrix:
    """(u_{k+1} - u_{k-1}) / 2h with zero extension; antisymmetric."""
    return sp.csr_matrix((sp.eye(n, k=1) - sp.eye(n, k=-1)) / (2.0 * h))


def _second_1d(n: int, h: float) -> sp.csr_matrix:
    return sp.csr_matrix(sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n)) / h**2)


def gradient_parts(domain: DomainConfig):
    """Real x- and y-edge difference matrices ``(Gx, Gy)``."""
    Gx = sp.kron(_forward_1d(domain.nx, domain.hx), sp.eye(domain.ny), format="csr")
    Gy = sp.kron(sp.eye(domain.nx), _forward_1d(domain.ny, domain.hy), format="csr")
    return Gx, Gy


def centered_parts(domain: DomainConfig):
    """Real centered-difference matrices ``(D1, D2)`` on interior nodes."""
    D1 = sp.kron(_centered_1d(domain.nx, domain.hx), sp.eye(domain.ny), format="csr")
    D2 = sp.kron(sp.eye(domain.nx), _centered_1d(domain.ny, domain.hy), format="csr")
    return D1, D2


def gradient(domain: DomainConfig) -> SparseOperator:
    """Edge gradient G: ``(nx+1)*ny`` x-edges stacked over ``nx*(ny+1)`` y-edges."""
    Gx, Gy = gradient_parts(domain)
    return SparseOperator(sp.vstack([Gx, Gy], format="csr"), "gradient")


def laplacian_dirichlet(domain: DomainConfig) -> SparseOperator:
    """Five-point Dirichlet Laplacian assembled directly from its stencil.

    It coincides with ``-G^T G`` for :func:`gradient`; the tests check this.
    """
    lap = (sp.kron(_second_1d(domain.nx, domain.hx), sp.eye(domain.ny))
           + sp.kron(sp.eye(domain.nx), _second_1d(domain.ny, domain.hy)))
    return SparseOperator(sp.csr_matrix(lap), "laplacian")


def dirichlet_form(domain: DomainConfig) -> sp.csr_matrix:
    """Real matrix ``G^T G`` (the negated Laplacian, positive definite)."""
    G = gradient(domain).matrix.real
    return sp.csr_matrix(G.T @ G)


def coupling_forward(domain: DomainConfig, B: float) -> SparseOperator:
    """h -> (curl h) x (B, 0, 0) = (0, B (D1 h2 - D2 h1))."""
    D1, D2 = centered_parts(domain)
    N = domain.n_nodes
    Z = sp.csr_matrix((N, N))
    return SparseOperator(sp.bmat([[Z, Z], [-B * D2, B * D1]], format="csr"),
                          "coupling-forward")


def coupling_backward(domain: DomainConfig, B: float) -> SparseOperator:
    """pi -> curl(pi x (B, 0, 0)) = (-B D2 pi2, B D1 pi2).

    Defined as the exact negated transpose of :func:`coupling_forward`.
    """
    forward = coupling_forward(domain, B).matrix
    return SparseOperator(sp.csr_matrix(-forward.T), "coupling-backward")


def _blocks(rows):
    return sp.csr_matrix(sp.bmat(rows, format="csr"), dtype=np.complex128)


def _vector_laplacian(domain):
    lap = laplacian_dirichlet(domain).matrix
    return sp.block_diag([lap, lap], format="csr")


def assemble_L0(domain: DomainConfig, variant: str = "section1") -> SparseOperator:
    """[[0, iI, 0], [i Lap, 0, 0], [0, 0, s Lap]] with s = -1 (section1) or +1 (appendix)."""
    if variant not in ("section1", "appendix"):
        raise ValueError(f"unknown L0 variant {variant!r}")
    s = -1.0 if variant == "section1" else 1.0
    lap2 = _vector_laplacian(domain)
    I2 = sp.eye(2 * domain.n_nodes, format="csr")
    return SparseOperator(_blocks([[None, 1j * I2, None],
                                   [1j * lap2, None, None],
                                   [None, None, s * lap2]]), "L0")


def assemble_V(domain: DomainConfig, B: float) -> SparseOperator:
    """[[0, 0, 0], [0, 0, F], [0, -C, 0]] with F forward and C backward coupling."""
    F = coupling_forward(domain, B).matrix
    C = coupling_backward(domain, B).matrix
    n2 = 2 * domain.n_nodes
    Z = sp.csr_matrix((n2, n2))
    return SparseOperator(_blocks([[Z, None, None],
                                   [None, None, F],
                                   [None, -C, Z]]), "V")


def wave_diffusion_part(domain: DomainConfig, beta: float) -> sp.csr_matrix:
    """Uncoupled real-conductivity blocks [[0, -I, 0], [-Lap, 0, 0], [0, 0, Lap/beta]]."""
    lap2 = _vector_laplacian(domain)
    I2 = sp.eye(2 * domain.n_nodes, format="csr")
    return _blocks([[None, -I2, None], [-lap2, None, None], [None, None, lap2 / beta]])


def real_coupling_part(domain: DomainConfig, B: float) -> sp.csr_matrix:
    """Coupling blocks for the real-conductivity system, with pi = -dU/dt.

    pi' picks up -F h and h' picks up -C pi. Because C = -F^T the block is
    skew, so coupling exchanges energy without creating or destroying it.
    """
    F = coupling_forward(domain, B).matrix
    C = coupling_backward(domain, B).matrix
    n2 = 2 * domain.n_nodes
    Z = sp.csr_matrix((n2, n2))
    return _blocks([[Z, None, None], [None, None, -F], [None, -C, Z]])


def assemble_generator(domain: DomainConfig, physics: PhysicsConfig,
                       variant: str = "section1") -> SparseOperator:
    """Right-hand side matrix A of x' = A x for the chosen conductivity model."""
    if physics.beta_mode is BetaMode.IMAGINARY:
        L0 = assemble_L0(domain, variant).matrix
        V = assemble_V(domain, physics.B).matrix
        return SparseOperator(1j * L0 - V, "generator-imaginary")
    A = wave_diffusion_part(domain, physics.beta) + real_coupling_part(domain, physics.B)
    return SparseOperator(A, "generator-real")


def weight_matrix(domain: DomainConfig) -> sp.csr_matrix:
    """Gram matrix W of the energy product: <x, y> = y^H W x."""
    K = dirichlet_form(domain)
    I = sp.eye(domain.n_nodes, format="csr")
    return sp.csr_matrix(domain.weight * sp.block_diag([K, K, I, I, I, I], format="csr"))
