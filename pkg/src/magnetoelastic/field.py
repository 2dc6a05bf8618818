"""Grid geometry, field states, the energy inner product and initial data.

Fields live on the interior nodes of a uniform rectangular grid; boundary
values are zero and never stored. A state is the triple (U, pi, h) of
two-component complex grid functions, flattened in the order
``U1, U2, pi1, pi2, h1, h2`` with C-ordered ``(nx, ny)`` blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import ConfigError

BLOCKS = ("U1", "U2", "pi1", "pi2", "h1", "h2")


@dataclass(frozen=True)
class DomainConfig:
    Lx: float
    Ly: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ConfigError(f"domain lengths must be positive, got Lx={self.Lx}, Ly={self.Ly}")
        if self.nx < 2 or self.ny < 2:
            raise ConfigError(f"need nx >= 2 and ny >= 2 interior nodes, got nx={self.nx}, ny={self.ny}")

    @property
    def hx(self) -> float:
        return self.Lx / (self.nx + 1)

    @property
    def hy(self) -> float:
        return self.Ly / (self.ny + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_unknowns(self) -> int:
        return 6 * self.nx * self.ny

    @property
    def weight(self) -> float:
        """Quadrature weight attached to every interior node."""
        return self.hx * self.hy

    def coordinates(self):
        """Interior node coordinates as ``(X, Y)`` arrays of shape ``(nx, ny)``."""
        x = self.hx * np.arange(1, self.nx + 1)
        y = self.hy * np.arange(1, self.ny + 1)
        return np.meshgrid(x, y, indexing="ij")


def build_domain(Lx: float, Ly: float, nx: int, ny: int) -> DomainConfig:
    return DomainConfig(float(Lx), float(Ly), int(nx), int(ny))


class BetaMode(str, Enum):
    IMAGINARY = "imaginary"
    REAL = "real"


@dataclass(frozen=True)
class PhysicsConfig:
    """External field magnitude ``B`` (field direction is x) and conductivity model."""

    B: float = 1.0
    beta_mode: BetaMode = BetaMode.REAL
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta_mode", BetaMode(self.beta_mode))
        if not self.B >= 0:
            raise ConfigError(f"B must be >= 0, got {self.B}")
        if self.beta_mode is BetaMode.REAL and not self.beta > 0:
            raise ConfigError(f"real conductivity needs beta > 0, got {self.beta}")


@dataclass(frozen=True)
class FieldState:
    """Displacement ``U``, velocity ``pi`` and magnetic perturbation ``h``.

    Each block is a complex array of shape ``(2, nx, ny)``.
    """

    U: np.ndarray
    pi: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        blocks = []
        for name in ("U", "pi", "h"):
            arr = np.array(getattr(self, name), dtype=np.complex128)
            if arr.ndim != 3 or arr.shape[0] != 2:
                raise ValueError(f"block {name} must have shape (2, nx, ny), got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            blocks.append(arr.shape)
        if len(set(blocks)) != 1:
            raise ValueError(f"blocks disagree in shape: {blocks}")

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.U.shape[1:]

    def check_domain(self, domain: DomainConfig):
        if self.grid_shape != domain.shape:
            raise ValueError(f"state grid {self.grid_shape} does not match domain {domain.shape}")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.U.ravel(), self.pi.ravel(), self.h.ravel()])

    @classmethod
    def from_vector(cls, vec, domain: DomainConfig) -> "FieldState":
        vec = np.asarray(vec)
        if vec.shape != (domain.n_unknowns,):
            raise ValueError(f"expected vector of length {domain.n_unknowns}, got {vec.shape}")
        blocks = vec.reshape(3, 2, domain.nx, domain.ny)
        return cls(blocks[0], blocks[1], blocks[2])

    @classmethod
    def zeros(cls, domain: DomainConfig) -> "FieldState":
        z = np.zeros((2, domain.nx, domain.ny), dtype=np.complex128)
        return cls(z, z, z)

    def block(self, name: str) -> np.ndarray:
        idx = BLOCKS.index(name)
        return (self.U, self.pi, self.h)[idx // 2][idx % 2]

    def scaled(self, c) -> "FieldState":
        return FieldState(c * self.U, c * self.pi, c * self.h)

    def __add__(self, other):
        return FieldState(self.U + other.U, self.pi + other.pi, self.h + other.h)

    def __sub__(self, other):
        return FieldState(self.U - other.U, self.pi - other.pi, self.h - other.h)


def inner_product(x: FieldState, y: FieldState, domain: DomainConfig) -> complex:
    """Energy inner product, linear in ``x`` and conjugate-linear in ``y``.

    The displacement block is weighted by the Dirichlet form of the discrete
    gradient; velocity and magnetic blocks use the plain grid product.
    """
    x.check_domain(domain)
    y.check_domain(domain)
    k = kernels.active
    grad = sum(k.grad_inner(x.U[c], y.U[c], domain.hx, domain.hy) for c in range(2))
    plain = np.vdot(y.pi, x.pi) + np.vdot(y.h, x.h)
    return complex(domain.weight * (grad + plain))


def energy_norm(state: FieldState, domain: DomainConfig) -> float:
    """Discrete energy: weighted sum of |grad U|^2 + |pi|^2 + |h|^2 over the grid.

    This is the squared norm induced by :func:`inner_product`.
    """
    return max(inner_product(state, state, domain).real, 0.0)


def _mode_sample(domain: DomainConfig, m: int, n: int) -> np.ndarray:
    X, Y = domain.coordinates()
    return np.sin(m * np.pi * X / domain.Lx) * np.sin(n * np.pi * Y / domain.Ly)


def make_initial(domain: DomainConfig, kind: str, **params) -> FieldState:
    """Build initial data.

    ``kind`` is one of:

    * ``"mode"`` with ``m``, ``n``, ``block``: samples sin(m pi x/Lx) sin(n pi y/Ly)
      into one scalar block (``U1 .. h2``), everything else zero.
    * ``"random"`` with ``seed``: fills every block from a seeded generator and
      rescales to unit energy.
    * ``"impulse"`` with ``i``, ``j``, ``block``: a single node set to 1 (0-based).
    """
    data = np.zeros((6, domain.nx, domain.ny), dtype=np.complex128)
    if kind == "mode":
        m, n = int(params["m"]), int(params["n"])
        if not (1 <= m <= domain.nx and 1 <= n <= domain.ny):
            raise ConfigError(f"mode indices ({m}, {n}) outside 1..{domain.nx} x 1..{domain.ny}")
        data[_block_index(params["block"])] = _mode_sample(domain, m, n)
    elif kind == "impulse":
        i, j = int(params["i"]), int(params["j"])
        if not (0 <= i < domain.nx and 0 <= j < domain.ny):
            raise ConfigError(f"impulse node ({i}, {j}) is not an interior node")
        data[_block_index(params["block"]), i, j] = 1.0
    elif kind == "random":
        rng = np.random.default_rng(int(params.get("seed", 0)))
        data = rng.standard_normal(data.shape) + 1j * rng.standard_normal(data.shape)
        if params.get("real", False):
            data = data.real.astype(np.complex128)
        state = FieldState(data[0:2], data[2:4], data[4:6])
        return state.scaled(1.0 / np.sqrt(energy_norm(state, domain)))
    else:
        raise ConfigError(f"unknown initial kind {kind!r}")
    return FieldState(data[0:2], data[2:4], data[4:6])


def _block_index(block: str) -> int:
    try:
        return BLOCKS.index(block)
    except ValueError:
        raise ConfigError(f"unknown block {block!r}; expected one of {', '.join(BLOCKS)}") from None
