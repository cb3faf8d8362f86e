"""Batch front door: certify, audit, sweep, and solve from the shell.

Configuration comes from an optional JSON file whose fields individual
flags override.  Every run writes its artifacts into the output
directory together with a manifest.json recording the sha256 of the
effective configuration and the package/numpy/scipy versions, so any
table can be traced back to the exact invocation that produced it.
Nothing time-dependent enters the artifacts: with a fixed seed, reruns
are byte-identical.

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical
refusal (failed certificate, singular or near-singular mode, divergent
Neumann series, exhausted ladder, quadrature failure).  Refusals also
leave a structured error.json in the output directory.

File formats.  An operator file holds {"m": m, "coeffs": [poly_0, ...,
poly_2m]} with each poly in the TrigPoly JSON form ({"K": ..., "kind":
..., "coeffs": [[k, [re, im]], ...]}); a bare poly is also accepted and
is read as the principal coefficient of a second-order operator.  A
Cauchy problem file holds {"operator": ..., "u0": poly, "T": ..., "mu":
..., "forcing": [{"decay": a, "poly": poly}, ...]}, the forcing terms
meaning f(t) = sum_i exp(-a_i t) poly_i; omit the list for f = 0.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field, asdict
from importlib import metadata
from pathlib import Path

import numpy as np

from .torus_core import TrigPoly, AliasingError
from .function_spaces import holder_norm, besov_norm
from .multiplier import (
    NonFiniteSymbolError,
    build_mj,
    eta2,
    marcinkiewicz_constants,
)
from .operators import (
    EllipticityError,
    OperatorSpec,
    check_normal_ellipticity,
    check_uniform_ellipticity,
    largest_normal_angle,
)
from .resolvent_localization import (
    LadderExhaustedError,
    LocalizedSolver,
    NearSingularError,
    NeumannDivergenceError,
    SingularModeError,
    TestDictionary,
    build_partition,
    find_thresholds,
    loglog_slope,
    resolvent_norm_estimate,
    resolvent_symbol,
    smallness_sweep,
)
from .evolution import (
    CauchyProblemSpec,
    E0_norm,
    E1_norm,
    QuadratureError,
    derivative_consistency,
    residual_profile,
    solve_cauchy,
    trace_norm,
    vanishing_check,
    weighted_sup_norm,
)

REFUSALS = (
    EllipticityError,
    QuadratureError,
    AliasingError,
    NonFiniteSymbolError,
    SingularModeError,
    NearSingularError,
    NeumannDivergenceError,
    LadderExhaustedError,
)


class ConfigError(ValueError):
    """Invalid run configuration or malformed input file."""


@dataclass
class RunConfig:
    """Effective knobs of one run; hashed into every artifact."""

    command: str
    input: str | None = None
    outdir: str = "artifacts"
    K: int = 64
    N: int = 256
    scan: int = 256
    lam0: float = 1.0
    factor: float = 2.0
    max_steps: int = 40
    eps: list = field(default_factory=lambda: [0.2])
    mu: float = 1.0
    T: float = 1.0
    M: int = 32
    alpha: float = 0.5
    theta: float = 2.356194490192345  # 3 pi / 4
    seed: int = 0

    def __post_init__(self):
        for name in ("K", "N", "scan", "lam0", "factor", "max_steps", "mu", "T", "M", "alpha", "theta"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not self.eps or any(e <= 0 for e in self.eps):
            raise ConfigError("eps list must be nonempty and positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    def hash(self) -> str:
        # identifies the computation, so the artifact destination stays out
        payload = {k: v for k, v in asdict(self).items() if k != "outdir"}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


# --------------------------------------------------------------------------
# input parsing and artifact writing


def _poly_from_obj(obj) -> TrigPoly:
    try:
        return TrigPoly.from_json(json.dumps(obj))
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"malformed TrigPoly object: {exc}") from exc


def _operator_from_obj(obj) -> OperatorSpec:
    if "m" in obj and "coeffs" in obj and isinstance(obj["coeffs"], list):
        m = int(obj["m"])
        coeffs = [_poly_from_obj(c) for c in obj["coeffs"]]
        return OperatorSpec(m, coeffs, name=obj.get("name", ""))
    # bare polynomial: principal coefficient of a second-order operator
    b = _poly_from_obj(obj)
    shape = b.coeffs.shape[1:]
    return OperatorSpec(1, [TrigPoly.zero(0, shape), TrigPoly.zero(0, shape), b])


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"input file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _require_input(cfg: RunConfig):
    if cfg.input is None:
        raise ConfigError(f"command '{cfg.command}' requires --input")
    return _load_json(cfg.input)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_json(outdir: Path, name: str, payload: dict, cfg_hash: str) -> str:
    payload = dict(payload)
    payload["config_hash"] = cfg_hash
    (outdir / name).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    return name


def _write_csv(outdir: Path, name: str, header: list, rows, cfg_hash: str) -> str:
    with open(outdir / name, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return name


def _constant_principal(A: OperatorSpec):
    b = A.principal
    if b.K > 0 and np.max(np.abs(np.delete(b.coeffs, b.K, axis=0))) > 0:
        raise ConfigError("this command needs a constant principal coefficient")
    val = b.coeff(0)
    return complex(val) if np.asarray(val).shape == () else np.asarray(val)


# --------------------------------------------------------------------------
# commands


def cmd_check(cfg: RunConfig, outdir: Path, h: str) -> list:
    A = _operator_from_obj(_require_input(cfg))
    payload: dict = {"operator": A.name or "input", "m": A.m, "dim": A.dim}
    if A.is_scalar:
        payload["uniform"] = check_uniform_ellipticity(A, cfg.N).as_dict()
    payload["normal"] = check_normal_ellipticity(A, cfg.theta, cfg.N).as_dict()
    payload["largest_normal_theta"] = largest_normal_angle(A, cfg.N)
    return [_write_json(outdir, "check.json", payload, h)]


def cmd_norms(cfg: RunConfig, outdir: Path, h: str) -> list:
    f = _poly_from_obj(_require_input(cfg))
    thetas = [0.25, 0.5, 0.75, 1.5, 2.5]
    if cfg.alpha not in thetas and abs(cfg.alpha - round(cfg.alpha)) > 1e-12:
        thetas.append(cfg.alpha)
    rows = [(th, holder_norm(f, th, cfg.N), besov_norm(f, th)) for th in sorted(thetas)]
    art = [_write_csv(outdir, "norms.csv", ["theta", "holder_est", "besov_est"], rows, h)]
    summary = {"K": f.K, "sup_est": f.sup_norm_estimate(cfg.N), "l2": f.l2_norm()}
    art.append(_write_json(outdir, "norms.json", summary, h))
    return art


def cmd_multiplier_audit(cfg: RunConfig, outdir: Path, h: str) -> list:
    A = _operator_from_obj(_require_input(cfg))
    b = _constant_principal(A)
    sym = resolvent_symbol(b, A.m, cfg.lam0)
    report = marcinkiewicz_constants(sym, cfg.scan, include_s3=not A.is_scalar)
    payload = {"lam": cfg.lam0, "m": A.m, "marcinkiewicz": report.as_dict()}
    rows = []
    j = 0
    while 2 ** j <= cfg.scan:
        rows.append((j, eta2(build_mj(sym, j))))
        j += 1
    payload["eta2"] = {str(j): val for j, val in rows}
    art = [_write_json(outdir, "multiplier_audit.json", payload, h)]
    art.append(_write_csv(outdir, "multiplier_audit.csv", ["j", "eta2"], rows, h))
    return art


def cmd_resolvent_sweep(cfg: RunConfig, outdir: Path, h: str) -> list:
    A = _operator_from_obj(_require_input(cfg))
    b = _constant_principal(A)
    dictionary = TestDictionary(K_modes=cfg.scan, n_random=8, K_random=cfg.K,
                                seed=cfg.seed, dim=A.dim, geometric=True)
    lams = [cfg.lam0 * cfg.factor ** i for i in range(cfg.max_steps)]
    rows = []
    for lam in lams:
        rows.append((lam,
                     resolvent_norm_estimate(b, A.m, lam, dictionary, cfg.alpha, "same"),
                     resolvent_norm_estimate(b, A.m, lam, dictionary, cfg.alpha, "lower")))
    art = [_write_csv(outdir, "resolvent_sweep.csv",
                      ["lam", "est_same", "est_lower"], rows, h)]
    payload = {
        "slope_same": loglog_slope([r[0] for r in rows], [r[1] for r in rows]),
        "slope_lower": loglog_slope([r[0] for r in rows], [r[2] for r in rows]),
        "n_points": len(rows),
    }
    art.append(_write_json(outdir, "resolvent_sweep.json", payload, h))
    return art


def cmd_partition_audit(cfg: RunConfig, outdir: Path, h: str) -> list:
    A = _operator_from_obj(_require_input(cfg))
    # the localization machinery addresses the principal part
    shape = A.principal.coeffs.shape[1:]
    Ap = OperatorSpec(A.m, [TrigPoly.zero(0, shape) for _ in range(2 * A.m)] + [A.principal],
                      name=A.name)
    rows = []
    for eps in cfg.eps:
        loc = float(smallness_sweep(Ap.principal, [eps], cfg.alpha, N=cfg.N)[0])
        part = build_partition(eps)
        solver = LocalizedSolver(Ap, part, K_pi=cfg.K, K_run=cfg.K, alpha=cfg.alpha)
        stride = max(1, part.n // 16)
        left, right = find_thresholds(solver, lam0=cfg.lam0, factor=cfg.factor,
                                      max_steps=cfg.max_steps, slot_stride=stride)
        rows.append((eps, part.n, loc, left.omega, right.omega))
    art = [_write_csv(outdir, "partition_audit.csv",
                      ["eps", "n_patches", "local_norm", "omega1", "omega2"], rows, h)]
    payload = {"rows": [{"eps": r[0], "omega1": r[3], "omega2": r[4]} for r in rows]}
    art.append(_write_json(outdir, "partition_audit.json", payload, h))
    return art


def _forcing_from_obj(terms):
    if not terms:
        return None
    parts = [(float(t["decay"]), _poly_from_obj(t["poly"])) for t in terms]

    def f(t):
        out = parts[0][1] * np.exp(-parts[0][0] * t)
        for a, p in parts[1:]:
            out = out + p * np.exp(-a * t)
        return out
    return f


def cmd_solve(cfg: RunConfig, outdir: Path, h: str) -> list:
    obj = _require_input(cfg)
    try:
        A = _operator_from_obj(obj["operator"])
        u0 = _poly_from_obj(obj["u0"])
        spec = CauchyProblemSpec(A, _forcing_from_obj(obj.get("forcing")), u0,
                                 float(obj.get("T", cfg.T)), float(obj.get("mu", cfg.mu)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed Cauchy problem file: {exc}") from exc
    theta_tr = 2 * A.m * spec.mu + cfg.alpha
    if abs(theta_tr - round(theta_tr)) < 1e-12:
        raise ConfigError(
            f"trace index 2*m*mu + alpha = {theta_tr:g} is an integer; adjust mu or alpha")
    traj = solve_cauchy(spec, cfg.K, cfg.M)

    modes = range(-cfg.K, cfg.K + 1)
    if traj.states[0].kind == "scalar":
        cols = [f"{part}_{k}" for k in modes for part in ("re", "im")]
        def flat(u):
            return [x for c in u.coeffs for x in (c.real, c.imag)]
    else:
        d = traj.states[0].dim
        cols = [f"{part}_{k}_{i}" for k in modes for i in range(d) for part in ("re", "im")]
        def flat(u):
            return [x for c in u.coeffs.reshape(-1) for x in (c.real, c.imag)]
    rows = [[t] + flat(u) for t, u in zip(traj.ts, traj.states)]
    art = [_write_csv(outdir, "trajectory.csv", ["t"] + cols, rows, h)]

    e1 = E1_norm(traj, A.m, cfg.alpha, cfg.N)
    data = (E0_norm(spec.f, traj.ts, spec.mu, cfg.alpha, cfg.N)
            + trace_norm(u0, A.m, spec.mu, cfg.alpha, cfg.N))
    payload = {
        "T": spec.T, "mu": spec.mu, "K": cfg.K, "M": cfg.M,
        "weighted_sup": weighted_sup_norm(traj, "sup", cfg.N),
        "E1": e1,
        "data_norm": data,
        "maxreg_forward": e1 / data if data > 0 else None,
        "maxreg_reverse": data / e1 if e1 > 0 else None,
        "vanishing_profile": list(vanishing_check(traj, "sup", cfg.N)),
        "derivative_consistency": derivative_consistency(traj),
        "residual_max": float(np.max(residual_profile(traj, A, spec.f))),
    }
    art.append(_write_json(outdir, "solve.json", payload, h))
    return art


COMMANDS = {
    "check": cmd_check,
    "norms": cmd_norms,
    "multiplier-audit": cmd_multiplier_audit,
    "resolvent-sweep": cmd_resolvent_sweep,
    "partition-audit": cmd_partition_audit,
    "solve": cmd_solve,
}


# --------------------------------------------------------------------------
# argument handling


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torspec",
        description="periodic elliptic-operator toolbox: certificates, audits, sweeps, solves")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("check", "ellipticity certificates for an operator file"),
        ("norms", "norm table for a TrigPoly file"),
        ("multiplier-audit", "Marcinkiewicz constants of a resolvent symbol"),
        ("resolvent-sweep", "resolvent norm estimates along a lambda ladder"),
        ("partition-audit", "localization thresholds along an epsilon list"),
        ("solve", "Cauchy problem solve with weighted norms"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--input", help="input JSON (operator, poly, or problem)")
        p.add_argument("--outdir", help="artifact directory (default artifacts)")
        p.add_argument("--K", type=int, help="bandwidth")
        p.add_argument("--N", type=int, help="sampling grid size")
        p.add_argument("--scan", type=int, help="symbol scan bound")
        p.add_argument("--lam0", type=float, help="ladder base point")
        p.add_argument("--factor", type=float, help="ladder multiplier")
        p.add_argument("--max-steps", type=int, dest="max_steps", help="ladder length cap")
        p.add_argument("--eps", type=float, nargs="+", help="partition width list")
        p.add_argument("--mu", type=float, help="time weight in (0, 1]")
        p.add_argument("--T", type=float, help="time horizon")
        p.add_argument("--M", type=int, help="time steps")
        p.add_argument("--alpha", type=float, help="Hoelder index")
        p.add_argument("--theta", type=float, help="sector half-angle for checks")
        p.add_argument("--seed", type=int, help="dictionary seed")
    return parser


def _merge_config(args: argparse.Namespace) -> RunConfig:
    fields = {}
    if args.config:
        raw = _load_json(args.config)
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(raw) - {f for f in RunConfig.__dataclass_fields__} - {"command"}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        fields.update(raw)
    for name in RunConfig.__dataclass_fields__:
        if name == "command":
            continue
        val = getattr(args, name, None)
        if val is not None:
            fields[name] = val
    try:
        return RunConfig(command=args.command, **fields)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    h = cfg.hash()
    try:
        artifacts = COMMANDS[cfg.command](cfg, outdir, h)
    except REFUSALS as exc:
        _write_json(outdir, "error.json",
                    {"error": type(exc).__name__, "message": str(exc)}, h)
        print(f"refused: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    versions = {"python": ".".join(map(str, sys.version_info[:3])), "numpy": np.__version__}
    try:
        versions["scipy"] = metadata.version("scipy")
        versions["torspec"] = metadata.version("torspec")
    except metadata.PackageNotFoundError:
        pass
    manifest = {"command": cfg.command, "config": asdict(cfg),
                "config_hash": h, "versions": versions, "artifacts": sorted(artifacts)}
    (outdir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
