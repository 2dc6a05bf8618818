"""Line-based run configuration: ``section.key = value`` with ``#`` comments."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .field import BLOCKS, BetaMode, DomainConfig, PhysicsConfig, build_domain, make_initial

AUDITS = ("adjointness", "resolvent", "kernel", "contraction", "energy_identity")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _names(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


# key -> (parser, default, help)
SCHEMA = {
    "domain.Lx": (float, 1.0, "domain length along x"),
    "domain.Ly": (float, 1.0, "domain length along y"),
    "grid.nx": (int, 16, "interior nodes along x (>= 2)"),
    "grid.ny": (int, 16, "interior nodes along y (>= 2)"),
    "physics.B": (float, 1.0, "external field magnitude (>= 0)"),
    "physics.beta_mode": (str, "real", "conductivity model: real | imaginary"),
    "physics.beta": (float, 1.0, "real conductivity (> 0)"),
    "physics.variant": (str, "section1", "L0 magnetic block sign: section1 (-Lap) | appendix (+Lap)"),
    "time.t_final": (float, 1.0, "final time (>= 0)"),
    "time.steps": (int, 100, "number of steps (>= 1)"),
    "time.record_every": (int, 1, "record the energy every k steps"),
    "integrator.method": (str, "exact", "exact | trotter | imex | cn"),
    "integrator.trotter_n": (int, 1, "Trotter factors per step"),
    "initial.kind": (str, "mode", "mode | random | impulse"),
    "initial.params": (str, "1,1,pi2", "mode: m,n,block  impulse: i,j,block  random: unused"),
    "initial.seed": (int, 0, "seed for random initial data"),
    "output.csv_path": (str, "", "CSV path (default <out-dir>/simulate.csv)"),
    "output.report_path": (str, "", "JSON report path (default <out-dir>/<command>_report.json)"),
    "checks.enabled": (_names, AUDITS, "comma list of audits"),
    "checks.kernel_tol": (float, 1e-8, "relative singular-value cutoff for kernels"),
    "checks.trials": (int, 8, "random states per contraction sample"),
    "checks.pairs": (int, 20, "random pairs for symmetry checks"),
    "checks.alphas": (_floats, (0.1, 1.0, 10.0), "resolvent shifts"),
    "checks.t_samples": (_floats, (0.0, 0.5, 1.0), "contraction sample times"),
    "checks.seed": (int, 0, "seed for audit sampling"),
}


def defaults_help() -> str:
    lines = []
    for key, (_, default, text) in SCHEMA.items():
        if isinstance(default, tuple):
            default = ",".join(str(v) for v in default)
        lines.append(f"  {key} = {default}    # {text}")
    return "\n".join(lines)


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def domain(self) -> DomainConfig:
        v = self.values
        return build_domain(v["domain.Lx"], v["domain.Ly"], v["grid.nx"], v["grid.ny"])

    @property
    def physics(self) -> PhysicsConfig:
        v = self.values
        return PhysicsConfig(v["physics.B"], v["physics.beta_mode"], v["physics.beta"])

    def initial_state(self):
        kind = self.values["initial.kind"]
        parts = _names(self.values["initial.params"])
        if kind == "random":
            return make_initial(self.domain, "random", seed=self.values["initial.seed"])
        if len(parts) != 3:
            raise ConfigError(f"initial.params for {kind} needs three fields, got {self.values['initial.params']!r}")
        a, b, block = parts
        if kind == "mode":
            return make_initial(self.domain, "mode", m=int(a), n=int(b), block=block)
        if kind == "impulse":
            return make_initial(self.domain, "impulse", i=int(a), j=int(b), block=block)
        raise ConfigError(f"unknown initial.kind {kind!r}")

    def validate(self) -> "RunConfig":
        v = self.values
        for key in ("grid.nx", "grid.ny"):
            if v[key] < 2:
                raise ConfigError(f"{key} must be >= 2, got {v[key]}")
        for key in ("domain.Lx", "domain.Ly"):
            if not v[key] > 0:
                raise ConfigError(f"{key} must be > 0, got {v[key]}")
        if not v["physics.B"] >= 0:
            raise ConfigError(f"physics.B must be >= 0, got {v['physics.B']}")
        if v["physics.beta_mode"] not in ("real", "imaginary"):
            raise ConfigError(f"physics.beta_mode must be real or imaginary, got {v['physics.beta_mode']!r}")
        if v["physics.beta_mode"] == "real" and not v["physics.beta"] > 0:
            raise ConfigError(f"physics.beta must be > 0 for real conductivity, got {v['physics.beta']}")
        physics = self.physics
        if v["physics.variant"] not in ("section1", "appendix"):
            raise ConfigError(f"physics.variant must be section1 or appendix, got {v['physics.variant']!r}")
        if not v["time.t_final"] >= 0:
            raise ConfigError("time.t_final must be >= 0")
        for key in ("time.steps", "time.record_every", "integrator.trotter_n", "checks.trials", "checks.pairs"):
            if v[key] < 1:
                raise ConfigError(f"{key} must be >= 1")
        method = v["integrator.method"]
        if method not in ("exact", "trotter", "imex", "cn"):
            raise ConfigError(f"unknown integrator.method {method!r}")
        if method in ("imex", "cn") and physics.beta_mode is not BetaMode.REAL:
            raise ConfigError(f"integrator.method = {method} needs physics.beta_mode = real")
        unknown = [a for a in v["checks.enabled"] if a not in AUDITS]
        if unknown:
            raise ConfigError(f"unknown checks: {', '.join(unknown)}")
        if any(a <= 0 for a in v["checks.alphas"]):
            raise ConfigError("checks.alphas must be positive")
        if v["initial.kind"] != "random":
            parts = _names(v["initial.params"])
            if len(parts) == 3 and parts[2] not in BLOCKS:
                raise ConfigError(f"unknown block {parts[2]!r}")
        self.initial_state()
        return self


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse config text, then apply ``key=value`` overrides, then validate."""
    values = {k: spec[1] for k, spec in SCHEMA.items()}
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        entries.append((key, value, lineno))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be section.key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        entries.append((key, value, None))
    for key, value, lineno in entries:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})", lineno) from None
    try:
        return RunConfig(values).validate()
    except ConfigError as exc:
        if exc.line is None:
            where = {k: ln for k, _, ln in entries}
            for key in SCHEMA:
                if key in str(exc) and where.get(key):
                    raise ConfigError(str(exc), where[key]) from None
        raise
