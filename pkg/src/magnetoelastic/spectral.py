"""Spectra of the discrete operators: Dirichlet Laplacian, coupling block V,
predicted decay rates and the common-kernel projector."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConfigError, DimensionError
from .field import DomainConfig
from .operators import (SparseOperator, assemble_V, coupling_backward, coupling_forward,
                        laplacian_dirichlet, weight_matrix)

DENSE_NODE_LIMIT = 4096
V_NODE_LIMIT = 1024


def closed_form_eig(domain: DomainConfig, m: int, n: int) -> float:
    """Five-point Dirichlet eigenvalue for sine mode (m, n) on the rectangle."""
    return (4.0 / domain.hx**2 * math.sin(m * math.pi * domain.hx / (2 * domain.Lx)) ** 2
            + 4.0 / domain.hy**2 * math.sin(n * math.pi * domain.hy / (2 * domain.Ly)) ** 2)


def _second_difference_dense(n, h):
    return (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2


def dirichlet_eigs(domain: DomainConfig, k: int, method: str = "separable"):
    """The ``k`` smallest eigenpairs of -Lap_h, ascending.

    ``separable`` diagonalises the two 1D second-difference matrices and
    combines them through the Kronecker-sum structure; ``full`` runs a dense
    symmetric eigensolver on the assembled 2D matrix. Eigenvectors are
    normalised in the plain grid product (unit Euclidean norm).
    """
    N = domain.n_nodes
    if not 1 <= k <= N:
        raise ConfigError(f"k must be in 1..{N}, got {k}")
    if method == "full":
        if N > DENSE_NODE_LIMIT:
            raise DimensionError(f"{N} nodes exceed dense limit {DENSE_NODE_LIMIT}")
        vals, vecs = np.linalg.eigh(-laplacian_dirichlet(domain).toarray().real)
        return [(float(vals[i]), vecs[:, i]) for i in range(k)]
    if method != "separable":
        raise ValueError(f"unknown method {method!r}")
    ax, qx = np.linalg.eigh(_second_difference_dense(domain.nx, domain.hx))
    ay, qy = np.linalg.eigh(_second_difference_dense(domain.ny, domain.hy))
    total = (ax[:, None] + ay[None, :]).ravel()
    order = np.argsort(total, kind="stable")[:k]
    pairs = []
    for flat in order:
        i, j = divmod(int(flat), domain.ny)
        pairs.append((float(total[flat]), np.kron(qx[:, i], qy[:, j])))
    return pairs


def predicted_rate(domain: DomainConfig, B: float, mode: str = "continuum") -> float:
    """sqrt(B * lambda0) with lambda0 the continuum or discrete Dirichlet ground eigenvalue."""
    if B < 0:
        raise ConfigError(f"B must be >= 0, got {B}")
    if mode == "continuum":
        lam0 = math.pi**2 * (1.0 / domain.Lx**2 + 1.0 / domain.Ly**2)
    elif mode == "discrete":
        lam0 = dirichlet_eigs(domain, 1)[0][0]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return math.sqrt(B * lam0)


@dataclass
class SpectralReport:
    lambda0: float
    laplacian_eigs: list
    v_eigs: list
    composed_eigs: list
    pairing_residuals: list
    predicted_rate: float
    predicted_rate_discrete: float
    symmetry_residual: float
    pairing_table: list = field(default_factory=list)
    B: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def composed_coupling_spectrum(domain: DomainConfig, B: float) -> np.ndarray:
    """Eigenvalues of -(forward o backward) on the pi2 channel, ascending.

    Computed independently of V: the forward/backward matrices are
    multiplied and the pi2 block extracted.
    """
    F = coupling_forward(domain, B).toarray().real
    C = coupling_backward(domain, B).toarray().real
    N = domain.n_nodes
    comp = -(F @ C)[N:, N:]
    return np.sort(np.linalg.eigvalsh(0.5 * (comp + comp.T)))


def v_spectrum(domain: DomainConfig, B: float, zero_tol: float = 1e-9) -> SpectralReport:
    """All eigenvalues of V plus their pairing with the composed coupling spectrum.

    Rows and columns of V that are structurally zero (the U and pi1 blocks)
    contribute exact zero eigenvalues; only the remaining principal block goes
    through the dense symmetric eigensolver.
    """
    if domain.n_nodes > V_NODE_LIMIT:
        raise DimensionError(f"{domain.n_nodes} nodes exceed the V-spectrum limit {V_NODE_LIMIT}")
    Vs = assemble_V(domain, B).matrix.real
    live = np.flatnonzero(np.asarray((abs(Vs).sum(axis=0) + abs(Vs).sum(axis=1).T)).ravel())
    core = Vs[live][:, live].toarray()
    zeros = np.zeros(Vs.shape[0] - live.size)
    lam = np.sort(np.concatenate([np.linalg.eigvalsh(0.5 * (core + core.T)), zeros]))
    scale = max(float(np.max(np.abs(lam))), 1.0)
    sym = float(np.max(np.abs(lam + lam[::-1]))) if lam.size else 0.0

    mu = composed_coupling_spectrum(domain, B)
    pos = lam[lam > zero_tol * scale]
    mu_nz = mu[mu > (zero_tol * scale) ** 2]
    residuals = []
    count = min(pos.size, mu_nz.size)
    for a, b in zip(pos[:count] ** 2, mu_nz[:count]):
        residuals.append(float(abs(a - b) / max(abs(b), np.finfo(float).tiny)))
    if pos.size != mu_nz.size:
        residuals.append(math.inf)

    lap = [w for w, _ in dirichlet_eigs(domain, domain.n_nodes)]
    table = []
    for idx in range(count):
        l2 = float(pos[idx] ** 2)
        table.append({
            "index": idx,
            "lambda": float(pos[idx]),
            "lambda_sq": l2,
            "lambda_sq_over_B": l2 / B if B > 0 else None,
            "lambda_sq_over_B2": l2 / B**2 if B > 0 else None,
            "composed_eig": float(mu_nz[idx]),
            "laplacian_eig": float(lap[idx]) if idx < len(lap) else None,
        })
    return SpectralReport(
        lambda0=float(lap[0]),
        laplacian_eigs=[float(w) for w in lap],
        v_eigs=[float(v) for v in lam],
        composed_eigs=[float(v) for v in mu],
        pairing_residuals=residuals,
        predicted_rate=predicted_rate(domain, B, "continuum"),
        predicted_rate_discrete=math.sqrt(B * lap[0]),
        symmetry_residual=sym,
        pairing_table=table,
        B=float(B),
    )


@dataclass
class KernelProjector:
    """Energy-orthogonal projector onto Ker V intersected with Ker L0.

    ``basis`` holds an energy-orthonormal basis of the common kernel (columns).
    """

    basis: np.ndarray
    W: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        Z = self.basis
        return Z @ (Z.conj().T @ self.W)

    def __call__(self, vec):
        Z = self.basis
        if Z.shape[1] == 0:
            return np.zeros_like(vec, dtype=np.complex128)
        return Z @ (Z.conj().T @ (self.W @ vec))

    def adjoint_matrix(self) -> np.ndarray:
        """Adjoint of the projector with respect to the energy product."""
        P = self.matrix
        return np.linalg.solve(self.W, P.conj().T @ self.W)


def kernel_projector(L0, V, domain: DomainConfig, tol: float | None = None) -> KernelProjector:
    """Null space of the stacked operator [V; L0], made energy-orthonormal.

    Singular values below ``tol`` count as zero; the default is 1e-8 times the
    largest singular value.
    """
    L = L0.toarray() if isinstance(L0, SparseOperator) else np.asarray(L0)
    Vd = V.toarray() if isinstance(V, SparseOperator) else np.asarray(V)
    stacked = np.vstack([Vd, L])
    _, s, vh = np.linalg.svd(stacked)
    cutoff = tol if tol is not None else 1e-8 * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cutoff))
    null = vh[rank:].conj().T
    W = weight_matrix(domain).toarray()
    if null.shape[1]:
        gram = null.conj().T @ W @ null
        Lc = np.linalg.cholesky(0.5 * (gram + gram.conj().T))
        null = null @ np.linalg.inv(Lc).conj().T
    return KernelProjector(null, W)
