"""Numerical audits of the operator-theoretic claims, plus decay-rate fitting.

Each audit returns an :class:`AuditReport` of individual checks. A check is
``pass``/``fail`` against a threshold, or ``info`` when it records a
measurement whose expected outcome is itself under investigation.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .field import (BetaMode, DomainConfig, FieldState, PhysicsConfig, energy_norm,
                    inner_product, make_initial)
from .operators import (assemble_generator, assemble_L0, assemble_V, coupling_backward,
                        coupling_forward, dirichlet_form, gradient, laplacian_dirichlet,
                        weight_matrix)
from .semigroup import exponential_matrix, resolvent_solve
from .spectral import kernel_projector, predicted_rate


@dataclass
class CheckResult:
    check_id: str
    anchor: str
    measured: float
    threshold: float | None
    status: str
    note: str = ""


@dataclass
class AuditReport:
    name: str
    checks: list = field(default_factory=list)

    def add(self, check_id, anchor, measured, threshold=None, note="", compare="le"):
        measured = float(measured)
        if threshold is None:
            status = "info"
        elif compare == "le":
            status = "pass" if measured <= threshold else "fail"
        else:
            status = "pass" if measured >= threshold else "fail"
        self.checks.append(CheckResult(check_id, anchor, measured, threshold, status, note))
        return self.checks[-1]

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def get(self, check_id) -> CheckResult:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def _random_state(domain, rng, real=False):
    shape = (6, domain.nx, domain.ny)
    data = rng.standard_normal(shape)
    if not real:
        data = data + 1j * rng.standard_normal(shape)
    return FieldState(data[0:2], data[2:4], data[4:6])


def _energy_factor(domain):
    """Upper-triangular F with F^H F = W, so the energy norm of x is |F x|_2."""
    W = weight_matrix(domain).toarray().real
    return sla.cholesky(W, lower=False)


# -- adjointness --------------------------------------------------------------

def adjointness_audit(domain: DomainConfig, physics: PhysicsConfig, pairs: int = 20,
                      seed: int = 0, fault: bool = False) -> AuditReport:
    """Symmetry constraints on the block operators.

    With ``fault=True`` a single coupling entry is perturbed before the
    checks run (negative testing of the harness itself).
    """
    rep = AuditReport("adjointness")
    B = physics.B if physics.B > 0 else 1.0
    F = coupling_forward(domain, B).matrix
    C = coupling_backward(domain, B).matrix.tolil()
    if fault:
        C[domain.n_nodes, 0] += 1.0
    C = C.tocsr()
    rep.add("coupling.backward_is_neg_forward_transpose", "A-22",
            abs(C + F.T).max(), 0.0, "entrywise max |C + F^T|")

    lap = laplacian_dirichlet(domain).matrix
    rep.add("laplacian.symmetric", "A-14", abs(lap - lap.T).max(), 0.0,
            "entrywise max |Lap - Lap^T|")

    K = dirichlet_form(domain)
    lap_scale = abs(lap).max()
    # A = iI, B = i Lap, D = G:  A^* D^* D = -i G^T G must equal i Lap
    rep.add("laplacian.weighted_constraint", "A-14",
            abs(-1j * K - 1j * lap).max() / lap_scale, 1e-12,
            "max |A* G^T G - i Lap| relative to max |Lap|")

    V = assemble_V(domain, B).matrix
    if fault:
        V = V.tolil()
        V[2 * domain.n_nodes + domain.n_nodes, 4 * domain.n_nodes] += 1.0
        V = V.tocsr()
    rep.add("coupling.V_symmetric", "A-22", abs(V - V.T.conj()).max(), 0.0,
            "entrywise max |V - V^H|")

    rng = np.random.default_rng(seed)
    for variant in ("section1", "appendix"):
        L0 = assemble_L0(domain, variant)
        worst = 0.0
        for _ in range(pairs):
            x, y = _random_state(domain, rng), _random_state(domain, rng)
            lx, ly = L0.apply(x), L0.apply(y)
            gap = abs(inner_product(lx, y, domain) - inner_product(x, ly, domain))
            scale = (math.sqrt(energy_norm(lx, domain) * energy_norm(y, domain))
                     + math.sqrt(energy_norm(x, domain) * energy_norm(ly, domain)))
            worst = max(worst, gap / scale)
        rep.add(f"L0.weighted_symmetry.{variant}", "A-13", worst, 1e-12,
                f"max over {pairs} random pairs, relative to |L0x||y| + |x||L0y|")
    return rep


# -- resolvent ----------------------------------------------------------------

def resolvent_bound_audit(domain: DomainConfig, physics: PhysicsConfig, alphas=(0.1, 1.0, 10.0),
                          seed: int = 0, variant: str = "section1") -> AuditReport:
    """Resolvent bound 1/alpha for the imaginary-conductivity generator.

    On the subspace where V is nonnegative the bound follows from
    |(alpha - A) z| >= alpha |z|; the audit measures the smallest singular
    value of (alpha - A) restricted to that subspace in the energy norm. The
    full-space resolvent norm is recorded as information. When the physics is
    the real-conductivity model its generator is audited on the full space as
    well, where dissipativity makes the bound a hard check.
    """
    rep = AuditReport("resolvent")
    imag = PhysicsConfig(physics.B, BetaMode.IMAGINARY, physics.beta if physics.beta > 0 else 1.0)
    gen = assemble_generator(domain, imag, variant)
    A = gen.toarray()
    Fw = _energy_factor(domain)
    Finv = sla.solve_triangular(Fw, np.eye(Fw.shape[0]), lower=False)
    n = A.shape[0]

    V = assemble_V(domain, physics.B).toarray()
    Vt = Fw @ V @ Finv
    lam, Q = np.linalg.eigh(0.5 * (Vt + Vt.conj().T))
    vscale = max(float(np.max(np.abs(lam))), 1.0)
    Qplus = Q[:, lam >= -1e-12 * vscale]

    rng = np.random.default_rng(seed)
    for alpha in alphas:
        M = Fw @ (alpha * np.eye(n) - A) @ Finv
        s_full = np.linalg.svd(M, compute_uv=False)
        full_norm = 1.0 / s_full[-1]
        s_sub = np.linalg.svd(M @ Qplus, compute_uv=False)
        sub_norm = 1.0 / s_sub[-1]
        rep.add(f"resolvent.subspace_bound.alpha={alpha:g}", "A-10", sub_norm * alpha,
                1.0 + 1e-8, "alpha * |(alpha - A)^-1| on the V >= 0 subspace")
        rep.add(f"resolvent.full_space.alpha={alpha:g}", "A-10", full_norm * alpha, None,
                "alpha * |(alpha - A)^-1| on the full space (positivity premise under audit)")

        y = _random_state(domain, rng).to_vector()
        x = resolvent_solve(gen, alpha, y)
        res = np.linalg.norm((alpha * x - gen.matrix @ x) - y) / np.linalg.norm(y)
        rep.add(f"resolvent.solve_residual.alpha={alpha:g}", "A-4", res, 1e-10,
                "|(alpha - A) x - y| / |y|")

    if physics.beta_mode is BetaMode.REAL:
        Ar = assemble_generator(domain, physics).toarray()
        for alpha in alphas:
            M = Fw @ (alpha * np.eye(n) - Ar) @ Finv
            s = np.linalg.svd(M, compute_uv=False)[-1]
            rep.add(f"resolvent.real_generator_bound.alpha={alpha:g}", "A-24", alpha / s,
                    1.0 + 1e-8, "alpha * |(alpha - A_real)^-1|, full space")
    return rep


# -- kernel -------------------------------------------------------------------

def kernel_uniqueness_audit(domain: DomainConfig, physics: PhysicsConfig, tol: float = 1e-8,
                            variant: str = "section1") -> AuditReport:
    """Null space of (-V + i L0) versus the common kernel of V and L0."""
    rep = AuditReport("kernel")
    L0 = assemble_L0(domain, variant).toarray()
    V = assemble_V(domain, physics.B).toarray()
    A = -V + 1j * L0
    _, s, vh = np.linalg.svd(A)
    cutoff = tol * s[0]
    null = vh[np.sum(s > cutoff):].conj().T
    rep.add("kernel.null_dimension", "A-5", null.shape[1], None,
            "numerical null space dimension of -V + i L0")
    rep.add("kernel.smallest_singular_value", "A-5", s[-1] / s[0], None,
            "sigma_min / sigma_max of -V + i L0")

    P = kernel_projector(L0, V, domain)
    rep.add("kernel.common_kernel_dimension", "A-9", P.dim, None, "dim Ker V cap Ker L0")
    nV = max(np.linalg.norm(V, 2), 1.0)
    nL = np.linalg.norm(L0, 2)
    worst_split, worst_contain = 0.0, 0.0
    for k in range(null.shape[1]):
        v = null[:, k] / np.linalg.norm(null[:, k])
        worst_split = max(worst_split, np.linalg.norm(V @ v) / nV, np.linalg.norm(L0 @ v) / nL)
        worst_contain = max(worst_contain, np.linalg.norm(v - P(v)))
    rep.add("kernel.null_vectors_split", "A-7", worst_split, tol,
            "max |V v|/|V|, |L0 v|/|L0| over null vectors (0 when the null space is trivial)")
    rep.add("kernel.null_space_in_common_kernel", "A-9", worst_contain, tol,
            "max |v - P v| over null vectors")
    return rep


# -- contraction --------------------------------------------------------------

def contraction_audit(domain: DomainConfig, physics: PhysicsConfig, t_samples=(0.0, 0.5, 1.0),
                      trials: int = 8, seed: int = 0, variant: str = "section1") -> AuditReport:
    """Energy amplification sqrt(E(e^{tA} x)) over random unit-energy states."""
    rep = AuditReport("contraction")
    gen = assemble_generator(domain, physics, variant)
    real = physics.beta_mode is BetaMode.REAL
    rate = predicted_rate(domain, physics.B, "continuum")
    rng = np.random.default_rng(seed)
    starts = [make_initial(domain, "random", seed=int(rng.integers(2**31))) for _ in range(trials)]
    Fw = _energy_factor(domain)
    for t in t_samples:
        E = exponential_matrix(gen, t)
        worst = 0.0
        for x in starts:
            y = FieldState.from_vector(E @ x.to_vector(), domain)
            worst = max(worst, math.sqrt(energy_norm(y, domain) / energy_norm(x, domain)))
        if t == 0:
            worst = 1.0 if all(energy_norm(x, domain) > 0 for x in starts) else worst
        tag = f"t={t:g}"
        if real:
            rep.add(f"contraction.real.sampled.{tag}", "A-23", worst, 1.0 + 1e-10,
                    f"max over {trials} unit-energy states")
        else:
            rep.add(f"contraction.imaginary.sampled.{tag}", "A-23", worst, None,
                    f"max amplification; claimed bound exp(-t*rate) = {math.exp(-t * rate):.6g}")
        opnorm = np.linalg.norm(Fw @ E @ np.linalg.inv(Fw), 2) if t > 0 else 1.0
        rep.add(f"contraction.operator_norm.{tag}", "A-23", opnorm, None,
                "energy-norm operator norm of the propagator")
        if real and physics.B == 0 and t > 0:
            n2 = 2 * domain.n_nodes
            wave_worst, heat_worst = 0.0, 0.0
            for x in starts:
                v = x.to_vector()
                wave = v.copy(); wave[2 * n2:] = 0
                heat = v.copy(); heat[:2 * n2] = 0
                for vec, kind in ((wave, "wave"), (heat, "heat")):
                    s0 = FieldState.from_vector(vec, domain)
                    s1 = FieldState.from_vector(E @ vec, domain)
                    r = math.sqrt(energy_norm(s1, domain) / energy_norm(s0, domain))
                    if kind == "wave":
                        wave_worst = max(wave_worst, abs(r - 1.0))
                    else:
                        heat_worst = max(heat_worst, r)
            rep.add(f"contraction.decoupled_wave_conserved.{tag}", "A-24", wave_worst, 1e-10,
                    "|ratio - 1| for (U, pi) only states")
            rep.add(f"contraction.decoupled_heat_decays.{tag}", "A-24", heat_worst, 1.0 - 1e-12,
                    "ratio for h only states")
    return rep


# -- energy identity ----------------------------------------------------------

def dissipation_form(state: FieldState, domain: DomainConfig, beta: float) -> float:
    """-(2/beta) times the weighted Dirichlet form of the magnetic block."""
    G = gradient(domain).matrix
    total = sum(np.vdot(G @ state.h[c].ravel(), G @ state.h[c].ravel()).real for c in range(2))
    return -2.0 / beta * domain.weight * total


def energy_identity_audit(domain: DomainConfig, physics: PhysicsConfig, trials: int = 20,
                          seed: int = 0) -> AuditReport:
    """<Ax, x> + <x, Ax> against the diffusion dissipation on random real states."""
    rep = AuditReport("energy_identity")
    if physics.beta_mode is not BetaMode.REAL:
        rep.add("energy_identity.skipped", "A-24", 0.0, None, "needs real conductivity")
        return rep
    gen = assemble_generator(domain, physics)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = _random_state(domain, rng, real=True)
        ax = gen.apply(x)
        lhs = 2.0 * inner_product(ax, x, domain).real
        rhs = dissipation_form(x, domain, physics.beta)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    rep.add("energy_identity.random_states", "A-24", worst, 1e-10,
            f"max |2 Re<Ax,x> + (2/beta)|Gh|^2| / |(2/beta)|Gh|^2| over {trials} states")

    x = _random_state(domain, rng, real=True)
    x = FieldState(x.U, x.pi, np.zeros_like(x.h))
    lhs = 2.0 * inner_product(gen.apply(x), x, domain).real
    scale = math.sqrt(energy_norm(gen.apply(x), domain) * energy_norm(x, domain))
    rep.add("energy_identity.no_magnetic_field", "A-24", abs(lhs) / scale, 1e-12,
            "wave and coupling part is skew when h = 0")
    return rep


# -- decay fitting ------------------------------------------------------------

@dataclass
class DecayReport:
    times: list
    energies: list
    fitted_rate: float
    r_squared: float | None
    monotonicity_violations: int
    max_positive_jump: float
    predicted_rate: float | None
    rate_ratio_sqrt: float | None
    rate_ratio_2sqrt: float | None
    window: tuple

    def to_dict(self) -> dict:
        return asdict(self)


def fit_decay_rate(times, energies, window=None, predicted: float | None = None,
                   mono_tol: float = 1e-12) -> DecayReport:
    """Least-squares fit of log(energy) = c - rate * t over ``window``.

    The default window drops the first 20% of the time span. ``predicted`` is
    the reference rate sqrt(B lambda0); the report gives fitted/predicted
    against both that rate and twice it, since the energy is a squared norm.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if t.shape != e.shape or t.ndim != 1:
        raise ValueError("times and energies must be 1D arrays of equal length")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if window is None:
        window = (t[0] + 0.2 * (t[-1] - t[0]), t[-1])
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 3:
        raise ValueError(f"need >= 3 samples in window {window}, got {int(sel.sum())}")
    if np.any(e[sel] <= 0):
        raise ValueError("energies must be positive inside the fit window")
    ts, ys = t[sel], np.log(e[sel])
    X = np.column_stack([np.ones_like(ts), ts])
    (c0, slope), *_ = np.linalg.lstsq(X, ys, rcond=None)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    ss_res = float(np.sum((ys - (c0 + slope * ts)) ** 2))
    r2 = None if ss_tot <= 1e-28 * max(1.0, float(np.sum(ys ** 2))) else 1.0 - ss_res / ss_tot
    if r2 is None:
        slope = 0.0 if np.ptp(ys) == 0 else slope

    jumps = np.diff(e)
    tol = mono_tol * e[0]
    bad = jumps > tol
    rate = float(-slope) + 0.0
    ratio = lambda r: rate / r if r else None
    return DecayReport(
        times=t.tolist(), energies=e.tolist(), fitted_rate=rate, r_squared=r2,
        monotonicity_violations=int(bad.sum()),
        max_positive_jump=float(max(jumps.max(), 0.0)) if jumps.size else 0.0,
        predicted_rate=predicted,
        rate_ratio_sqrt=ratio(predicted) if predicted is not None else None,
        rate_ratio_2sqrt=ratio(2 * predicted) if predicted is not None else None,
        window=(float(lo), float(hi)),
    )
