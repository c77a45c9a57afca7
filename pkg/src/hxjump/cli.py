"""Experiment driver: analyze, solve, sweep and spectrum subcommands.

Configs are JSON documents, e.g.

    {"geometry": "half_cube", "n": 8, "case": "a", "sweep": [-8, -4, 0, 4, 8],
     "mode": "iterations", "tol": 1e-8, "seed": 0}

Output is deterministic for a fixed config and seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import geometries, hx, linalg, probe
from .assembly import MaxwellSystem, assemble_system, nodal_to_edge_interpolation
from .mesh import GeometryConfig, GeometryError, assign_subdomains, build_structured_cube, coarse_topology
from .topology import CoefficientField, analyze

log = logging.getLogger("hxjump")

CASES = ("a", "b", "checkerboard", "constant", "custom")
MODES = ("iterations", "dense_spectrum", "probe")
RHS_KINDS = ("random", "white", "manufactured", "zero")
DEFAULT_SWEEP = {"a": [-8, -4, 0, 4, 8], "b": [-8, -4, 0, 4, 8],
                 "checkerboard": [1e-2, 1e-4, 1e-6], "constant": [0], "custom": [0]}
FULL_SWEEP = {"a": list(range(-8, 9)), "b": list(range(-8, 9)),
              "checkerboard": [10.0 ** -j for j in range(0, 9)], "constant": [0], "custom": [0]}

CSV_COLUMNS = (
    "config", "k_or_eps", "n", "dofs", "ns", "pcg_iters", "converged", "lambda_min",
    "lambda_ns_plus_1", "lambda_max", "cond", "reduced_cond", "probe_ratio",
    "constrained_ratio", "F_value_of_witness", "breakdown",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: str = "single"
    n: int | list = 4
    case: str = "constant"
    sweep: list = field(default_factory=list)
    eta: float | None = None          # checkerboard beta on the cubes, defaults to eps
    tol: float = 1e-8
    maxit: int = 500
    mode: str = "iterations"
    tau: float = 10.0
    seed: int = 0
    regions: list | None = None       # custom geometry boxes and coefficients
    label: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**data)
        if not cfg.sweep:
            cfg = replace(cfg, sweep=list(DEFAULT_SWEEP.get(cfg.case, [0])))
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    @property
    def resolutions(self) -> list[int]:
        return [int(x) for x in (self.n if isinstance(self.n, (list, tuple)) else [self.n])]

    @property
    def name(self) -> str:
        return self.label or f"{self.geometry}:{self.case}"

    def validate(self) -> None:
        if self.geometry not in (*geometries.PRESETS, "custom"):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "custom" and not self.regions:
            raise ConfigError("custom geometry needs 'regions'")
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not self.sweep:
            raise ConfigError("sweep must be non-empty")
        if any(n < 1 for n in self.resolutions):
            raise ConfigError("n must be positive")
        if self.geometry not in ("single",) and any(n < 2 for n in self.resolutions):
            raise ConfigError("multi-subdomain geometries need n >= 2")
        if self.tau < 1:
            raise ConfigError("tau must be >= 1")
        if not self.tol > 0 or self.maxit < 1:
            raise ConfigError("tol must be positive and maxit at least 1")
        if self.case == "checkerboard" and any(not 0 < e <= 1 for e in self.sweep):
            raise ConfigError("checkerboard eps values must lie in (0, 1]")
        if self.eta is not None and self.case == "checkerboard" and any(not e <= self.eta <= 1 for e in self.sweep):
            raise ConfigError("eta must lie in [eps, 1]")

    def geometry_config(self) -> GeometryConfig:
        if self.geometry == "custom":
            return GeometryConfig.from_dict({"regions": self.regions, "label": self.label or "custom"})
        return geometries.PRESETS[self.geometry]()

    def coefficients(self, value, n_domains: int, geo: GeometryConfig) -> CoefficientField:
        one = (1.0,) * n_domains
        if self.case == "constant":
            return CoefficientField(one, one, self.tau)
        if self.case in ("a", "b"):
            if n_domains < 2:
                raise ConfigError(f"case {self.case!r} needs at least two subdomains")
            jump = tuple(10.0 ** float(value) if i == 1 else 1.0 for i in range(n_domains))
            return CoefficientField(one, jump, self.tau) if self.case == "a" else CoefficientField(jump, one, self.tau)
        if self.case == "checkerboard":
            if n_domains != 4:
                raise ConfigError("checkerboard case needs four subdomains")
            eps = float(value)
            eta = eps if self.eta is None else float(self.eta)
            return CoefficientField((1.0, 1.0, eps, eps), (eta, eta, eps, eps), self.tau)
        alpha = [r.alpha for r in geo.regions]
        beta = [r.beta for r in geo.regions]
        if any(x is None for x in alpha + beta):
            raise ConfigError("custom case needs alpha and beta on every region")
        return CoefficientField(tuple(alpha), tuple(beta), self.tau)


# --------------------------------------------------------------------------
# experiment points

@dataclass(frozen=True, eq=False)
class Point:
    value: float
    n: int
    system: MaxwellSystem
    graph: object
    report: object

    @property
    def ns(self) -> int:
        return self.report.ns


def build_point(cfg: ExperimentConfig, value, n: int) -> Point:
    geo = cfg.geometry_config()
    mesh = build_structured_cube(n)
    part = assign_subdomains(mesh, geo)
    graph = coarse_topology(mesh, part)
    coeffs = cfg.coefficients(value, part.n_domains, geo)
    system = assemble_system(mesh, part, coeffs)
    return Point(value, n, system, graph, analyze(graph, coeffs))


def iter_points(cfg: ExperimentConfig):
    for n in cfg.resolutions:
        for value in cfg.sweep:
            yield build_point(cfg, value, n)


def _smooth_field(x: np.ndarray) -> np.ndarray:
    s = np.sin(np.pi * x)
    return np.stack([s[:, 1] * s[:, 2], s[:, 0] * s[:, 2], s[:, 0] * s[:, 1]], axis=1)


def make_rhs(system: MaxwellSystem, kind: str, seed: int):
    """Right-hand side and (when known) exact solution on free edges.

    'random' draws the exact solution, so the initial error is white noise in
    the edge dofs; 'white' draws the right-hand side itself.
    """
    rng = np.random.default_rng(seed)
    n = system.n
    if kind == "zero":
        return np.zeros(n), np.zeros(n)
    if kind == "white":
        return rng.standard_normal(n), None
    if kind == "random":
        u = rng.standard_normal(n)
        return system.A @ u, u
    if kind == "manufactured":
        mesh = system.mesh
        nodal = _smooth_field(mesh.vertices)
        full = nodal_to_edge_interpolation(mesh, bc=False) @ nodal.T.ravel()
        u = full[system.dofs.free_edges]
        return system.A @ u, u
    raise ConfigError(f"unknown rhs kind {kind!r}")


def sweep_row(cfg: ExperimentConfig, pt: Point, mode: str | None = None) -> dict:
    mode = mode or cfg.mode
    s = pt.system
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update(config=cfg.name, k_or_eps=pt.value, n=pt.n, dofs=s.n, ns=pt.ns)
    try:
        B = hx.build_for_system(s)
        b, _ = make_rhs(s, "random", cfg.seed)
        res = linalg.pcg(s.A, B, b, tol=cfg.tol, maxit=cfg.maxit)
        row.update(pcg_iters=res.iterations, converged=res.converged)
        if res.breakdown:
            row["breakdown"] = res.breakdown
        method = "lanczos" if mode == "iterations" else "dense"
        spectrum = hx.measure(s.A, B, pt.ns, method=method, maxit=max(cfg.maxit, 500), seed=cfg.seed)
        if len(spectrum.eigenvalues):
            row.update(lambda_min=spectrum.lambda_min, lambda_ns_plus_1=spectrum.lambda_ns_plus_1,
                       lambda_max=spectrum.lambda_max, cond=spectrum.cond, reduced_cond=spectrum.reduced_cond)
        if mode == "probe":
            ops = probe.ProbeOperators.build(s)
            wc = probe.worst_case_ratio(s, ops=ops)
            row["probe_ratio"] = wc.ratio
            interior = [v for v in pt.report.strange if not v.on_boundary and v.n_v == 2]
            if interior:
                funcs = [probe.strange_vertex_functional(s, v) for v in interior]
                f = np.vstack([fn.coefficients for fn in funcs])
                row["F_value_of_witness"] = float(f[0] @ wc.witness)
                row["constrained_ratio"] = probe.worst_case_ratio(s, f, ops=ops).ratio
    except (linalg.NotSPDError, linalg.BreakdownError, ValueError) as exc:
        row["breakdown"] = f"{type(exc).__name__}: {exc}"
    return row


def _fmt(v) -> str:
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def run_sweep(cfg: ExperimentConfig) -> str:
    rows = []
    for pt in iter_points(cfg):
        log.info("sweep point %s n=%d", pt.value, pt.n)
        rows.append(sweep_row(cfg, pt))
    return rows_to_csv(rows)


def run_analyze(cfg: ExperimentConfig) -> dict:
    points = []
    for pt in iter_points(cfg):
        rep = pt.report.to_dict()
        rep["k_or_eps"] = pt.value
        points.append(rep)
    return {"config": cfg.name, "points": points}


def run_solve(cfg: ExperimentConfig, rhs: str = "random") -> dict:
    out = []
    for pt in iter_points(cfg):
        s = pt.system
        b, u_star = make_rhs(s, rhs, cfg.seed)
        B = hx.build_for_system(s)
        res = linalg.pcg(s.A, B, b, tol=cfg.tol, maxit=cfg.maxit)
        bn = float(np.linalg.norm(b))
        entry = {
            "k_or_eps": pt.value, "n": pt.n, "dofs": s.n, "rhs": rhs,
            "iterations": res.iterations, "converged": res.converged,
            "preconditioned_residual": float(res.residuals[-1]),
            "residual": float(np.linalg.norm(b - s.A @ res.x) / bn) if bn > 0 else 0.0,
            "breakdown": res.breakdown,
        }
        if u_star is not None:
            e = res.x - u_star
            un = float(np.sqrt(u_star @ (s.A @ u_star)))
            entry["energy_error"] = float(np.sqrt(e @ (s.A @ e)) / un) if un > 0 else float(np.sqrt(e @ (s.A @ e)))
        out.append(entry)
    return {"config": cfg.name, "solves": out}


def run_spectrum(cfg: ExperimentConfig) -> dict:
    out = []
    for pt in iter_points(cfg):
        s = pt.system
        B = hx.build_for_system(s)
        spectrum = hx.measure(s.A, B, pt.ns, method="dense")
        out.append({
            "k_or_eps": pt.value, "n": pt.n, "dofs": s.n, "ns": pt.ns,
            "lambda_min": spectrum.lambda_min, "lambda_ns_plus_1": spectrum.lambda_ns_plus_1,
            "lambda_max": spectrum.lambda_max, "cond": spectrum.cond, "reduced_cond": spectrum.reduced_cond,
            "eigenvalues": [float(x) for x in spectrum.eigenvalues],
        })
    return {"config": cfg.name, "spectra": out}


# --------------------------------------------------------------------------
# command line

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hxjump", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("analyze", "coefficient topology report (JSON)"),
                        ("solve", "PCG solve summary (JSON)"),
                        ("sweep", "one CSV row per sweep point"),
                        ("spectrum", "dense spectrum of the preconditioned operator (JSON)")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--geometry", choices=[*geometries.PRESETS, "custom"])
        p.add_argument("--n", type=int, nargs="+")
        p.add_argument("--case", choices=CASES)
        p.add_argument("--sweep", type=float, nargs="+")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--tol", type=float)
        p.add_argument("--maxit", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--tau", type=float)
        p.add_argument("--full-range", action="store_true", help="sweep every integer exponent -8..8 (eps 1..1e-8 for the checkerboard)")
        if name == "solve":
            p.add_argument("--rhs", choices=RHS_KINDS, default="random")
    return ap


def config_from_args(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for key in ("geometry", "case", "mode", "tol", "maxit", "seed", "tau"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.n:
        data["n"] = args.n if len(args.n) > 1 else args.n[0]
    if args.sweep:
        data["sweep"] = args.sweep
    if args.full_range:
        data["sweep"] = FULL_SWEEP[data.get("case", "constant")]
    return ExperimentConfig.from_dict(data)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "analyze":
            text = _dump(run_analyze(cfg))
        elif args.command == "solve":
            text = _dump(run_solve(cfg, args.rhs))
        elif args.command == "sweep":
            text = run_sweep(cfg)
        else:
            text = _dump(run_spectrum(cfg))
    except (ConfigError, GeometryError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
