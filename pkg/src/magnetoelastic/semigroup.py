"""Time evolution: dense exponential, Trotter products, Crank-Nicolson/IMEX
steppers for the real-conductivity system, and resolvent solves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import ConfigError, DimensionError, NumericalError
from .field import BetaMode, DomainConfig, FieldState, PhysicsConfig, energy_norm
from .operators import (SparseOperator, assemble_generator, assemble_L0, assemble_V,
                        real_coupling_part, wave_diffusion_part, weight_matrix)

DENSE_LIMIT = 3 * 64 * 64


def _dense(op) -> np.ndarray:
    if isinstance(op, SparseOperator):
        op = op.matrix
    if sp.issparse(op):
        if op.shape[0] > DENSE_LIMIT:
            raise DimensionError(f"{op.shape[0]} unknowns exceed the dense limit {DENSE_LIMIT}")
        return op.toarray()
    return np.asarray(op)


def _vec(state):
    return state.to_vector() if isinstance(state, FieldState) else np.asarray(state)


def _like(vec, state):
    if isinstance(state, FieldState):
        nx, ny = state.grid_shape
        b = vec.reshape(3, 2, nx, ny)
        return FieldState(b[0], b[1], b[2])
    return vec


def exponential_matrix(gen, t: float) -> np.ndarray:
    """Dense e^{tA} by scaling and squaring (scipy's Pade-13 expm)."""
    if not math.isfinite(t):
        raise NumericalError(f"non-finite time {t}")
    A = _dense(gen)
    if t == 0:
        return np.eye(A.shape[0], dtype=np.complex128)
    return sla.expm(t * A.astype(np.complex128))


def exact_exponential_step(gen, state, t: float):
    """Apply e^{tA} to a state (or flat vector)."""
    if t == 0:
        return state
    return _like(exponential_matrix(gen, t) @ _vec(state), state)


def trotter_matrix(A1, A2, t: float, n: int) -> np.ndarray:
    """Dense Lie product (e^{t A1 / n} e^{t A2 / n})^n; the A2 factor acts first."""
    if n < 1:
        raise ConfigError(f"trotter n must be >= 1, got {n}")
    one = exponential_matrix(A1, t / n) @ exponential_matrix(A2, t / n)
    return np.linalg.matrix_power(one, n)


def trotter_step(L0, V, state, t: float, n: int):
    """[exp(i t L0 / n) exp(-t V / n)]^n applied to ``state``."""
    if t == 0:
        return state
    iL0 = 1j * _dense(L0)
    mV = -_dense(V)
    x = _vec(state)
    F1 = exponential_matrix(iL0, t / n)
    F2 = exponential_matrix(mV, t / n)
    for _ in range(n):
        x = F1 @ (F2 @ x)
    return _like(x, state)


class RealBetaStepper:
    """One-step integrator for the real-conductivity system.

    ``scheme="imex"``: Strang splitting, half-step Crank-Nicolson on the wave
    and diffusion blocks, one explicit midpoint (RK2) step on the coupling,
    half-step Crank-Nicolson again. Second order in ``dt``. The coupling is
    applied matrix-free through :mod:`magnetoelastic.kernels`.

    ``scheme="cn"``: Crank-Nicolson on the whole generator. Second order and
    the energy can never increase, whatever ``dt``.

    For IMEX the step operator's growth factor is estimated once by power
    iteration in the energy norm; steps whose factor exceeds 1 are refused.
    """

    def __init__(self, domain: DomainConfig, physics: PhysicsConfig, dt: float,
                 scheme: str = "imex", growth_tol: float = 1e-9, power_iters: int = 60):
        if physics.beta_mode is not BetaMode.REAL:
            raise ConfigError("RealBetaStepper needs beta_mode = real")
        if not (dt >= 0 and math.isfinite(dt)):
            raise ConfigError(f"dt must be finite and >= 0, got {dt}")
        if scheme not in ("imex", "cn"):
            raise ConfigError(f"unknown scheme {scheme!r}")
        self.domain, self.physics, self.dt, self.scheme = domain, physics, dt, scheme
        self.growth_factor = 1.0
        if dt == 0:
            return
        n = domain.n_unknowns
        I = sp.identity(n, dtype=np.complex128, format="csc")
        if scheme == "cn":
            A = assemble_generator(domain, physics).matrix
            self._lu = spla.splu(sp.csc_matrix(I - 0.5 * dt * A))
            self._rhs = sp.csr_matrix(I + 0.5 * dt * A)
        else:
            S = wave_diffusion_part(domain, physics.beta)
            self._lu = spla.splu(sp.csc_matrix(I - 0.25 * dt * S))
            self._rhs = sp.csr_matrix(I + 0.25 * dt * S)
            self.growth_factor = self._estimate_growth(growth_tol, power_iters)
            if self.growth_factor > 1.0 + growth_tol:
                raise NumericalError(
                    f"dt={dt} is above the IMEX stability threshold "
                    f"(growth factor {self.growth_factor:.12g} per step)")

    def _half(self, x):
        return self._lu.solve(self._rhs @ x)

    def _coupling(self, x):
        d, B = self.domain, self.physics.B
        nx, ny = d.shape
        k = kernels.active
        blocks = x.reshape(3, 2, nx, ny)
        out = np.zeros_like(blocks)
        # pi2' = -B curl h ; h' = (B D2 pi2, -B D1 pi2)
        out[1, 1] = -B * k.curl(blocks[2, 0], blocks[2, 1], d.hx, d.hy)
        out[2, 0] = B * k.dy_centered(blocks[1, 1], d.hy)
        out[2, 1] = -B * k.dx_centered(blocks[1, 1], d.hx)
        return out.ravel()

    def _raw_step(self, x):
        if self.scheme == "cn":
            return self._lu.solve(self._rhs @ x)
        y = self._half(x)
        dt = self.dt
        y = y + dt * self._coupling(y + 0.5 * dt * self._coupling(y))
        return self._half(y)

    def _estimate_growth(self, tol, iters):
        W = weight_matrix(self.domain)
        norm = lambda v: math.sqrt(max(np.vdot(v, W @ v).real, 0.0))
        rng = np.random.default_rng(12345)
        x = rng.standard_normal(self.domain.n_unknowns).astype(np.complex128)
        x /= norm(x)
        worst = 0.0
        for _ in range(iters):
            y = self._raw_step(x)
            g = norm(y)
            if not math.isfinite(g):
                return math.inf
            worst = g
            x = y / g
        return worst

    def step(self, state):
        if self.dt == 0:
            return state
        out = self._raw_step(_vec(state))
        if not np.all(np.isfinite(out)):
            raise NumericalError("non-finite values after real-beta step")
        return _like(out, state)


def real_beta_step(domain: DomainConfig, physics: PhysicsConfig, state, dt: float,
                   scheme: str = "imex"):
    """Advance the real-conductivity system by one step of size ``dt``."""
    if dt == 0:
        return state
    return RealBetaStepper(domain, physics, dt, scheme).step(state)


def resolvent_solve(gen, alpha: float, y):
    """Solve (alpha I - A) x = y with a sparse LU factorisation."""
    if not alpha > 0:
        raise ConfigError(f"alpha must be > 0, got {alpha}")
    A = gen.matrix if isinstance(gen, SparseOperator) else sp.csr_matrix(gen)
    n = A.shape[0]
    M = sp.csc_matrix(alpha * sp.identity(n, dtype=np.complex128) - A)
    try:
        lu = spla.splu(M)
    except RuntimeError as exc:
        raise NumericalError(f"resolvent at alpha={alpha} is singular: {exc}") from exc
    pivot = float(np.min(np.abs(lu.U.diagonal())))
    scale = float(np.max(np.abs(lu.U.diagonal())))
    if pivot <= 1e-14 * scale:
        raise NumericalError(f"resolvent at alpha={alpha} is numerically singular "
                             f"(smallest pivot {pivot:.3e})")
    x = lu.solve(_vec(y).astype(np.complex128))
    return _like(x, y)


@dataclass
class EvolutionSpec:
    """What to integrate and how.

    ``method`` is ``exact``, ``trotter``, ``imex`` or ``cn``. Trotter needs
    the split operators ``parts = (A1, A2)``; for the imaginary model these
    are ``(i L0, -V)``. IMEX and CN need ``domain`` and ``physics``.
    """

    generator: SparseOperator
    method: str = "exact"
    t_final: float = 1.0
    steps: int = 100
    record_every: int = 1
    trotter_n: int = 1
    parts: tuple | None = None
    domain: DomainConfig | None = None
    physics: PhysicsConfig | None = None
    keep_states: bool = False

    def __post_init__(self):
        if not (self.t_final >= 0 and math.isfinite(self.t_final)):
            raise ConfigError(f"t_final must be finite and >= 0, got {self.t_final}")
        if self.steps < 1 or self.record_every < 1 or self.trotter_n < 1:
            raise ConfigError("steps, record_every and trotter_n must all be >= 1")
        if self.method not in ("exact", "trotter", "imex", "cn"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.method == "trotter" and self.parts is None:
            raise ConfigError("trotter method needs split operators")
        if self.method in ("imex", "cn") and (self.domain is None or self.physics is None):
            raise ConfigError(f"{self.method} method needs domain and physics")

    @classmethod
    def build(cls, domain: DomainConfig, physics: PhysicsConfig, method: str = "exact",
              variant: str = "section1", **kw) -> "EvolutionSpec":
        gen = assemble_generator(domain, physics, variant)
        parts = None
        if method == "trotter":
            if physics.beta_mode is BetaMode.IMAGINARY:
                parts = (1j * assemble_L0(domain, variant).matrix, -assemble_V(domain, physics.B).matrix)
            else:
                parts = (wave_diffusion_part(domain, physics.beta),
                         real_coupling_part(domain, physics.B))
        return cls(gen, method, parts=parts, domain=domain, physics=physics, **kw)

    @property
    def dt(self) -> float:
        return self.t_final / self.steps


@dataclass
class TimeSeries:
    times: np.ndarray
    energies: np.ndarray
    states: list = field(default_factory=list)


def simulate(spec: EvolutionSpec, initial: FieldState, domain: DomainConfig | None = None) -> TimeSeries:
    """Integrate from ``initial`` and record the energy every ``record_every`` steps."""
    domain = domain or spec.domain
    if domain is None:
        nx, ny = initial.grid_shape
        raise ConfigError(f"simulate needs the domain for a {nx}x{ny} state")
    initial.check_domain(domain)
    times = [0.0]
    energies = [energy_norm(initial, domain)]
    states = [initial] if spec.keep_states else []
    if spec.t_final == 0:
        return TimeSeries(np.array(times), np.array(energies), states)

    dt = spec.dt
    if spec.method == "exact":
        P = exponential_matrix(spec.generator, dt)
        advance = lambda v: P @ v
    elif spec.method == "trotter":
        P = trotter_matrix(spec.parts[0], spec.parts[1], dt, spec.trotter_n)
        advance = lambda v: P @ v
    else:
        stepper = RealBetaStepper(spec.domain, spec.physics, dt, spec.method)
        advance = stepper._raw_step

    x = initial.to_vector()
    for k in range(1, spec.steps + 1):
        x = advance(x)
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"non-finite state at step {k}")
        if k % spec.record_every == 0 or k == spec.steps:
            s = FieldState.from_vector(x, domain)
            times.append(k * dt)
            energies.append(energy_norm(s, domain))
            if spec.keep_states:
                states.append(s)
    return TimeSeries(np.array(times), np.array(energies), states)
