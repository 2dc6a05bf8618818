"""Command-line entry point: ``magnetoelastic {eig,simulate,check,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 failed check.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import audit
from .config import defaults_help, parse_config
from .errors import ConfigError, DimensionError, NumericalError
from .field import BetaMode
from .semigroup import EvolutionSpec, simulate
from .spectral import V_NODE_LIMIT, dirichlet_eigs, predicted_rate, v_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
THREADS_ENV = "MAGNETOELASTIC_THREADS"


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _clean(obj):
    """Make a report tree strict-JSON: non-finite floats become null."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


def write_json(path: Path, tree) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(tree), indent=2) + "\n", encoding="utf-8")


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _report_path(cfg, out_dir: Path, command: str) -> Path:
    return Path(cfg["output.report_path"]) if cfg["output.report_path"] else out_dir / f"{command}_report.json"


# -- eig ----------------------------------------------------------------------

def cmd_eig(cfg, out_dir: Path) -> dict:
    domain, physics = cfg.domain, cfg.physics
    k = min(domain.n_nodes, 20)
    lap = dirichlet_eigs(domain, k)
    tree = {
        "domain": {"Lx": domain.Lx, "Ly": domain.Ly, "nx": domain.nx, "ny": domain.ny},
        "B": physics.B,
        "lambda0": lap[0][0],
        "lambda0_continuum": math.pi**2 * (1 / domain.Lx**2 + 1 / domain.Ly**2),
        "laplacian_eigs": [w for w, _ in lap],
        "predicted_rate": predicted_rate(domain, physics.B, "continuum"),
        "predicted_rate_discrete": math.sqrt(physics.B * lap[0][0]),
    }
    if domain.n_nodes <= V_NODE_LIMIT:
        rep = v_spectrum(domain, physics.B)
        tree["v_spectrum"] = {
            "v_eigs": rep.v_eigs,
            "composed_eigs": rep.composed_eigs,
            "symmetry_residual": rep.symmetry_residual,
            "max_pairing_residual": max(rep.pairing_residuals, default=0.0),
            "pairing_table": rep.pairing_table,
        }
    else:
        tree["v_spectrum"] = {"skipped": f"more than {V_NODE_LIMIT} nodes"}
    write_json(_report_path(cfg, out_dir, "eig"), tree)
    print(f"lambda0 = {fmt(tree['lambda0'])}")
    print(f"predicted_rate (continuum) = {fmt(tree['predicted_rate'])}")
    print(f"predicted_rate (discrete) = {fmt(tree['predicted_rate_discrete'])}")
    return tree


# -- simulate -----------------------------------------------------------------

def run_simulation(cfg):
    domain, physics = cfg.domain, cfg.physics
    spec = EvolutionSpec.build(domain, physics, cfg["integrator.method"], variant=cfg["physics.variant"],
                               t_final=cfg["time.t_final"], steps=cfg["time.steps"],
                               record_every=cfg["time.record_every"], trotter_n=cfg["integrator.trotter_n"])
    series = simulate(spec, cfg.initial_state())
    rate = predicted_rate(domain, physics.B, "continuum")
    decay = None
    if len(series.times) >= 3 and all(e > 0 for e in series.energies):
        try:
            decay = audit.fit_decay_rate(series.times, series.energies, predicted=rate)
        except ValueError:
            decay = None
    return series, rate, decay


def cmd_simulate(cfg, out_dir: Path):
    csv_path = Path(cfg["output.csv_path"]) if cfg["output.csv_path"] else out_dir / "simulate.csv"
    series, rate, decay = run_simulation(cfg)
    e0 = series.energies[0]
    lines = ["t,energy,bound_sqrt,bound_2sqrt"]
    for t, e in zip(series.times, series.energies):
        lines.append(",".join(fmt(v) for v in (t, e, e0 * math.exp(-rate * t), e0 * math.exp(-2 * rate * t))))
    _write_atomic(csv_path, "\n".join(lines) + "\n")
    tree = {"predicted_rate": rate, "samples": len(series.times)}
    if decay is not None:
        tree["decay"] = decay.to_dict()
        tree["decay"].pop("times")
        tree["decay"].pop("energies")
    write_json(_report_path(cfg, out_dir, "simulate"), tree)
    print(f"wrote {csv_path} ({len(series.times)} rows)")
    if decay is not None:
        print(f"fitted_rate = {fmt(decay.fitted_rate)}  r_squared = {decay.r_squared}")
    return series, decay


# -- check --------------------------------------------------------------------

def run_checks(cfg, fault=False):
    domain, physics = cfg.domain, cfg.physics
    seed, variant = cfg["checks.seed"], cfg["physics.variant"]
    reports = []
    for name in cfg["checks.enabled"]:
        if name == "adjointness":
            reports.append(audit.adjointness_audit(domain, physics, cfg["checks.pairs"], seed, fault=fault))
        elif name == "resolvent":
            reports.append(audit.resolvent_bound_audit(domain, physics, cfg["checks.alphas"], seed, variant))
        elif name == "kernel":
            reports.append(audit.kernel_uniqueness_audit(domain, physics, cfg["checks.kernel_tol"], variant))
        elif name == "contraction":
            reports.append(audit.contraction_audit(domain, physics, cfg["checks.t_samples"],
                                                   cfg["checks.trials"], seed, variant))
            if physics.beta_mode is BetaMode.REAL:
                imag = type(physics)(physics.B, BetaMode.IMAGINARY, physics.beta)
                rep = audit.contraction_audit(domain, imag, cfg["checks.t_samples"],
                                              cfg["checks.trials"], seed, variant)
                rep.name = "contraction_imaginary"
                reports.append(rep)
        elif name == "energy_identity":
            reports.append(audit.energy_identity_audit(domain, physics, cfg["checks.pairs"], seed))
    return reports


def cmd_check(cfg, out_dir: Path, fault=False) -> int:
    reports = run_checks(cfg, fault)
    ok = all(r.passed for r in reports)
    write_json(_report_path(cfg, out_dir, "check"), {"passed": ok, "audits": [r.to_dict() for r in reports]})
    lines = ["audit,check_id,anchor,measured,threshold,status"]
    for r in reports:
        for c in r.checks:
            thr = "" if c.threshold is None else fmt(c.threshold)
            lines.append(f"{r.name},{c.check_id},{c.anchor},{fmt(c.measured)},{thr},{c.status}")
            print(f"[{c.status:4}] {c.check_id} ({c.anchor}): {c.measured:.3e}"
                  + ("" if c.threshold is None else f" <= {c.threshold:.3e}"))
    _write_atomic(out_dir / "checks.csv", "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_CHECK


# -- sweep --------------------------------------------------------------------

SWEEP_COLUMNS = ("value", "predicted_rate", "fitted_rate", "r_squared", "rate_ratio_sqrt",
                 "rate_ratio_2sqrt", "final_energy", "status")


def _sweep_one(text, overrides, axis, value):
    try:
        cfg = parse_config(text, list(overrides) + [f"{axis}={value}"])
        series, rate, decay = run_simulation(cfg)
        row = {"value": float(value), "predicted_rate": rate, "final_energy": series.energies[-1],
               "status": "ok"}
        if decay is not None:
            row.update(fitted_rate=decay.fitted_rate, r_squared=decay.r_squared,
                       rate_ratio_sqrt=decay.rate_ratio_sqrt, rate_ratio_2sqrt=decay.rate_ratio_2sqrt)
        return row
    except (ConfigError, NumericalError, DimensionError) as exc:
        return {"value": float(value), "status": f"failed: {type(exc).__name__}"}


def cmd_sweep(text, overrides, axis, values, out_dir: Path) -> int:
    cap = int(os.environ.get(THREADS_ENV, "0") or 0) or (os.cpu_count() or 1)
    order = sorted(range(len(values)), key=lambda i: float(values[i]))
    with ThreadPoolExecutor(max_workers=max(1, min(cap, len(values)))) as pool:
        futures = [pool.submit(_sweep_one, text, overrides, axis, values[i]) for i in order]
        rows = [f.result() for f in futures]
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        cells = []
        for col in SWEEP_COLUMNS:
            v = row.get(col)
            cells.append("" if v is None else (v if isinstance(v, str) else fmt(v)))
        lines.append(",".join(cells))
    _write_atomic(out_dir / "sweep.csv", "\n".join(lines) + "\n")
    print(f"wrote {out_dir / 'sweep.csv'} ({len(rows)} rows)")
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_NUMERIC


# -- entry --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="config file (section.key = value lines)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")
    common.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    parser = argparse.ArgumentParser(
        prog="magnetoelastic",
        description="2D magneto-elastic simulator and operator audits.",
        epilog="config keys and defaults:\n" + defaults_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("eig", parents=[common], help="Laplacian and V spectra, predicted rates")
    sub.add_parser("simulate", parents=[common], help="evolve and write the energy CSV")
    chk = sub.add_parser("check", parents=[common], help="run the operator audits")
    chk.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    sw = sub.add_parser("sweep", parents=[common], help="repeat simulate over one config key")
    sw.add_argument("--axis", required=True, help="config key to vary, e.g. physics.B")
    sw.add_argument("--values", required=True, help="comma-separated values")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = args.out_dir
    stage = None
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            parse_config(text, args.overrides)
            for v in values:
                parse_config(text, list(args.overrides) + [f"{args.axis}={v}"])
            return cmd_sweep(text, args.overrides, args.axis, values, out_dir)
        cfg = parse_config(text, args.overrides)
        if args.command == "eig":
            cmd_eig(cfg, out_dir)
            return EXIT_OK
        if args.command == "simulate":
            stage = Path(cfg["output.csv_path"]) if cfg["output.csv_path"] else out_dir / "simulate.csv"
            cmd_simulate(cfg, out_dir)
            return EXIT_OK
        return cmd_check(cfg, out_dir, fault=args.inject_fault)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, DimensionError) as exc:
        if stage is not None:
            for p in (stage, stage.with_name(stage.name + ".partial")):
                p.unlink(missing_ok=True)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
