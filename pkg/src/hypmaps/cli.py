"""Command-line driver: ``hypmaps <subcommand> [--config FILE.json] [overrides]``.

Every subcommand resolves its parameters as built-in defaults, then the JSON
config file, then explicit flags.  The resolved parameter set is written into
the CSV header together with its hash and the library version, so a CSV
identifies the run that produced it.  Exit status is 0 only when every
invariant checked by the run holds; 1 signals a failed invariant, 2 a usage
or configuration error, 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .geometry import build_grid, lp_norm

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
WORKERS_ENV = "HYPMAPS_WORKERS"

GRID = {"r_max": 20.0, "n": 400, "scheme": "uniform"}

DEFAULTS: dict[str, dict] = {
    "spectrum": {**GRID, "n": 2000, "target": "h2", "lambda": [0.5], "m_max": 2, "margin": 0.01, "k": 3,
                 "expect": "auto"},
    "hmhf": {**GRID, "target": "h2", "lambda": 0.5, "perturb": "m=1,amp=1e-2", "s_max": 40.0, "ds": 0.05,
             "integrator": "imex1", "record_every": 20, "fit_from": 20.0},
    "smap": {**GRID, "n": 500, "target": "h2", "lambda": 0.5, "perturb": "m=1,amp=1e-2", "t_max": 10.0,
             "dt": 1e-3, "record_every": 100, "drift_tol": 1e-6, "growth": 10.0},
    "caloric": {**GRID, "target": "h2", "lambda": 0.5, "perturb": "m=1,amp=5e-2", "s_max": 80.0,
                "s_min": 1e-4, "q": 2**0.125, "ds_max": 0.05, "a_s_tol": 1e-6, "recon_tol": 0.01},
    "heat-decay": {**GRID, "r_max": 40.0, "n": 800, "operator": "laplacian", "target": "h2", "lambda": 0.5,
                   "m": 0, "fit_from": 200.0, "fit_to": 400.0, "samples": 21, "max_step": 0.1, "seed": 0},
    "norms": {**GRID, "r_max": 40.0, "n": 600, "target": "h2", "lambda": 0.5, "m": 1, "t_max": 100.0,
              "dt": 0.025, "sample_every": 20, "count": 5, "seed": 0, "sponge_start": 25.0,
              "sponge_strength": 2.0, "window": 20.0, "growth": 0.10},
    "inequalities": {**GRID, "modes": [0, 1, 2], "count": 100, "seed": 0, "tolerance": 0.2},
    "regress": {"criteria": list(range(1, 14))},
}

HELP = {
    "spectrum": "lowest eigenvalues and threshold quotient of H_m (CSV: target, lambda, m, k, eigenvalue, "
                "resonance_quotient, residual)",
    "hmhf": "perturbed harmonic map heat flow (CSV: s, energy, distance, l2_distance, constraint_defect)",
    "smap": "perturbed Schroedinger map flow (CSV: t, energy, distance, l2_distance, constraint_defect)",
    "caloric": "caloric gauge of a perturbed map (CSV: s, psi_s_l2, a_ring_inf, a_s_inf)",
    "heat-decay": "long-time heat semigroup decay (CSV: s, l2_norm)",
    "norms": "local smoothing and Strichartz norms of linear evolutions (CSV: sample, le_half, le_full, "
             "growth, strichartz)",
    "inequalities": "empirical functional-inequality constants (CSV: inequality, mode, empirical_constant, n, r_max)",
    "regress": "run the acceptance suite (CSV: criterion, title, passed, value)",
}


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------------
# configuration and output
# ----------------------------------------------------------------------------


def worker_count(flag: int | None = None) -> int:
    if flag is not None:
        return max(1, flag)
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc


def parallel_map(fn, items, workers: int) -> list:
    """``[fn(x) for x in items]``, fanned out over processes when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def resolve_config(command: str, file_cfg: dict, overrides: dict) -> dict:
    cfg = dict(DEFAULTS[command])
    unknown = set(file_cfg) - set(cfg)
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg.update(file_cfg)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def config_hash(command: str, cfg: dict) -> str:
    blob = json.dumps({"command": command, **cfg}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


class Report:
    """CSV body plus ``#``-prefixed header lines and named results."""

    def __init__(self, command: str, cfg: dict, columns: list[str]):
        self.command, self.cfg, self.columns = command, cfg, columns
        self.rows: list[list] = []
        self.results: dict[str, object] = {}
        self.failures: list[str] = []

    def add(self, *row) -> None:
        self.rows.append(list(row))

    def check(self, name: str, ok: bool) -> None:
        self.results[f"check_{name}"] = bool(ok)
        if not ok:
            self.failures.append(name)

    def render(self) -> str:
        buf = io.StringIO()
        buf.write(f"# hypmaps {__version__} {self.command}\n")
        buf.write(f"# config_hash {config_hash(self.command, self.cfg)}\n")
        buf.write(f"# config {json.dumps(self.cfg, sort_keys=True, default=str)}\n")
        for k in sorted(self.results):
            buf.write(f"# result {k}={_fmt(self.results[k])}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _grid(cfg: dict):
    return build_grid(float(cfg["r_max"]), int(cfg["n"]), cfg["scheme"])


def _target(name: str):
    from .target import target_from_name

    try:
        return target_from_name(name)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"unknown target {name!r}") from exc


def parse_perturbation(pert: str) -> dict:
    """Parse ``m=1,amp=1e-2[,shape=gauss|bump][,center=3][,width=2]``."""
    out = {"m": 1, "amp": 1e-2, "shape": "gauss", "center": 3.0, "width": 2.0}
    for part in filter(None, (p.strip() for p in pert.split(","))):
        if "=" not in part:
            raise ConfigError(f"bad perturbation item {part!r}")
        k, v = (s.strip() for s in part.split("=", 1))
        if k not in out:
            raise ConfigError(f"unknown perturbation key {k!r}")
        out[k] = v if k == "shape" else (int(v) if k == "m" else float(v))
    if out["m"] != 1:
        raise ConfigError("only equivariant (m=1) perturbations are supported by the nonlinear flows")
    if out["shape"] not in ("gauss", "bump"):
        raise ConfigError("perturbation shape must be gauss or bump")
    return out


def _perturbed(cfg: dict):
    from .flows import bump, discrete_harmonic_state, perturb

    g = _grid(cfg)
    geom = _target(cfg["target"])
    pert = parse_perturbation(cfg["perturb"])
    base = discrete_harmonic_state(geom, float(cfg["lambda"]), g)
    r = g.nodes
    if pert["shape"] == "gauss":
        field = r * np.exp(-r * r / (2.0 * pert["width"] ** 2)) * (1.0 + 0.5j)
    else:
        field = bump(r, pert["center"], pert["width"]) * (1.0 + 0.5j)
    return g, geom, base, perturb(base, field, pert["amp"])


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------


def _spectrum_one(args):
    from .linop import stability_certificate

    cfg, lam = args
    return lam, stability_certificate(_target(cfg["target"]), lam, _grid(cfg), int(cfg["m_max"]),
                                      float(cfg["margin"]), 0.0, int(cfg["k"]))


def cmd_spectrum(cfg: dict, workers: int) -> Report:
    rep = Report("spectrum", cfg, ["target", "lambda", "m", "k", "eigenvalue", "resonance_quotient", "residual"])
    lams = cfg["lambda"] if isinstance(cfg["lambda"], list) else [cfg["lambda"]]
    results = sorted(parallel_map(_spectrum_one, [(cfg, float(l)) for l in lams], workers), key=lambda x: x[0])
    expect = cfg["expect"]
    if expect == "auto":
        expect = "strong" if _target(cfg["target"]).tau < 0 else "weak"
    if expect not in ("weak", "strong", "none"):
        raise ConfigError("expect must be auto, weak, strong or none")
    for lam, cert in results:
        for r in sorted(cert.report, key=lambda x: x.m):
            for k, mu in enumerate(r.lowest_eigenvalues):
                rep.add(r.target, lam, r.m, k, mu, r.resonance_quotient, r.residual)
        rep.results[f"min_eigenvalue_lambda_{lam:g}"] = cert.min_eigenvalue
        rep.results[f"strongly_stable_lambda_{lam:g}"] = cert.strongly_stable
        if expect == "weak":
            rep.check(f"weak_stability_lambda_{lam:g}", cert.weakly_stable)
        elif expect == "strong":
            rep.check(f"strong_stability_lambda_{lam:g}", cert.strongly_stable)
    return rep


def cmd_hmhf(cfg: dict, workers: int) -> Report:
    from .flows import run_hmhf
    from .linop import mode_operator

    g, geom, base, u = _perturbed(cfg)
    _, diag = run_hmhf(u, base, float(cfg["ds"]), float(cfg["s_max"]), cfg["integrator"], int(cfg["record_every"]))
    rep = Report("hmhf", cfg, ["s", "energy", "distance", "l2_distance", "constraint_defect"])
    for row in zip(diag.times, diag.energy, diag.distance, diag.l2_distance, diag.constraint_defect):
        rep.add(*row)
    mu = float(mode_operator(geom, float(cfg["lambda"]), g, 1).H.eigen(1)[0])
    rep.results["lowest_eigenvalue_m1"] = mu
    try:
        fit = diag.fit_decay(float(cfg["fit_from"]), use="l2")
        rep.results["fitted_rate"] = fit.rate
        rep.results["fitted_rate_stderr"] = fit.stderr
    except ValueError:
        rep.results["fitted_rate"] = "unavailable"
    rep.check("energy_monotone", diag.energy_monotone())
    return rep


def cmd_smap(cfg: dict, workers: int) -> Report:
    from .flows import run_smap

    g, geom, base, u = _perturbed(cfg)
    _, diag = run_smap(u, base, float(cfg["dt"]), float(cfg["t_max"]), int(cfg["record_every"]))
    rep = Report("smap", cfg, ["t", "energy", "distance", "l2_distance", "constraint_defect"])
    for row in zip(diag.times, diag.energy, diag.distance, diag.l2_distance, diag.constraint_defect):
        rep.add(*row)
    drift = diag.relative_energy_drift()
    d = np.asarray(diag.distance)
    growth = float(np.max(d) / d[0]) if d[0] > 0 else math.inf
    rep.results["relative_energy_drift"] = drift
    rep.results["distance_growth"] = growth
    rep.check("energy_drift", drift < float(cfg["drift_tol"]))
    rep.check("orbital_bound", growth < float(cfg["growth"]))
    return rep


def cmd_caloric(cfg: dict, workers: int) -> Report:
    from .caloric import (a_s_residual, build_caloric_gauge, caloric_s_grid, check_curvature_identity,
                          heat_flow_trajectory, heat_tension_residual, per_s_table, reconstruct)

    g, geom, base, u = _perturbed(cfg)
    s = caloric_s_grid(float(cfg["s_max"]), float(cfg["s_min"]), float(cfg["q"]))
    gt = build_caloric_gauge(heat_flow_trajectory(u, s, float(cfg["ds_max"])), base=base)
    rep = Report("caloric", cfg, ["s", "psi_s_l2", "a_ring_inf", "a_s_inf"])
    for row in per_s_table(gt):
        rep.add(*row)
    curv = check_curvature_identity(gt)
    a_s = a_s_residual(gt)
    recon = reconstruct(gt).mismatch(g)
    rep.results.update({"a_s_max": a_s, "curvature_r": curv["r"], "curvature_theta": curv["theta"],
                        "heat_tension": heat_tension_residual(gt), "reconstruction_mismatch": recon})
    rep.check("a_s", a_s < float(cfg["a_s_tol"]))
    rep.check("reconstruction", recon < float(cfg["recon_tol"]))
    return rep


def cmd_heat_decay(cfg: dict, workers: int) -> Report:
    from .heat import SemigroupStepper, decay_fit, decay_samples, heat_stepper
    from .linop import mode_operator

    g = _grid(cfg)
    m = int(cfg["m"])
    rng = np.random.default_rng(int(cfg["seed"]))
    f = rng.normal(size=g.n) * np.exp(-g.nodes / 4.0) * np.tanh(g.nodes) ** abs(m)
    if cfg["operator"] == "laplacian":
        st = heat_stepper(g, m, "be", float(cfg["max_step"]))
    elif cfg["operator"] == "H":
        op = mode_operator(_target(cfg["target"]), float(cfg["lambda"]), g, m)
        st = SemigroupStepper(op.H, g, "be", float(cfg["max_step"]))
    else:
        raise ConfigError("operator must be 'laplacian' or 'H'")
    s_fit = np.linspace(float(cfg["fit_from"]), float(cfg["fit_to"]), int(cfg["samples"]))
    samples = decay_samples(st, f, s_fit)
    rep = Report("heat-decay", cfg, ["s", "l2_norm"])
    for row in samples:
        rep.add(*row)
    fit = decay_fit(samples)
    mu = float(st.operator.eigen(1)[0])
    rep.results.update({"fitted_rate": fit.rate, "lowest_eigenvalue": mu})
    if cfg["operator"] == "laplacian" and m == 0:
        rep.check("rate_near_quarter", 0.23 <= fit.rate <= 0.27)
    else:
        rep.check("rate_vs_eigenvalue", fit.rate >= mu - 0.02)
    return rep


def cmd_norms(cfg: dict, workers: int) -> Report:
    from .flows import linear_schrodinger_evolve, sponge_profile
    from .linop import mode_operator
    from .norms import le_norm, smooth_corpus, strichartz_norm

    g = _grid(cfg)
    m = int(cfg["m"])
    op = mode_operator(_target(cfg["target"]), float(cfg["lambda"]), g, m)
    absorber = sponge_profile(g, float(cfg["sponge_start"]), float(cfg["sponge_strength"]))
    dt, every = float(cfg["dt"]), int(cfg["sample_every"])
    steps = int(round(float(cfg["t_max"]) / dt))
    corpus = smooth_corpus(g, m, 2 * int(cfg["count"]), seed=int(cfg["seed"]), support=6.0)
    rep = Report("norms", cfg, ["sample", "le_half", "le_full", "growth", "strichartz"])
    worst = 0.0
    for k in range(int(cfg["count"])):
        phi0 = corpus[2 * k] + 1j * corpus[2 * k + 1]
        phi0 = phi0 / lp_norm(g, phi0)
        U = linear_schrodinger_evolve(op, phi0, dt, steps, every, absorber)
        t = np.arange(U.shape[0]) * dt * every
        half = (U.shape[0] - 1) // 2
        a = le_norm(g, U[: half + 1], t[: half + 1], m, r_window=float(cfg["window"]))
        b = le_norm(g, U, t, m, r_window=float(cfg["window"]))
        st = strichartz_norm(g, U, t)
        rep.add(k, a, b, b / a - 1.0, st)
        worst = max(worst, b / a - 1.0)
    rep.results["max_growth"] = worst
    rep.check("le_growth", worst < float(cfg["growth"]))
    return rep


def cmd_inequalities(cfg: dict, workers: int) -> Report:
    from .norms import inequality_suite

    res = inequality_suite(_grid(cfg), tuple(int(m) for m in cfg["modes"]), int(cfg["count"]), int(cfg["seed"]),
                           float(cfg["tolerance"]))
    rep = Report("inequalities", cfg, ["inequality", "mode", "empirical_constant", "n", "r_max"])
    for row in res.to_csv_rows():
        rep.add(*row)
    for row in res.rows:
        rep.results[f"{row.inequality}_m{row.mode}_corpus_change"] = row.corpus_change
        rep.results[f"{row.inequality}_m{row.mode}_refinement_change"] = row.refinement_change
    rep.check("inequalities", res.passed)
    return rep


def cmd_regress(cfg: dict, workers: int) -> Report:
    from .acceptance import run_all

    results = run_all([int(c) for c in cfg["criteria"]], workers)
    rep = Report("regress", cfg, ["criterion", "title", "passed", "value"])
    for r in results:
        print(r.line(), file=sys.stderr)
        rep.add(r.number, r.title, r.passed, r.value)
        rep.check(f"criterion_{r.number}", r.passed)
    return rep


COMMANDS = {
    "spectrum": cmd_spectrum, "hmhf": cmd_hmhf, "smap": cmd_smap, "caloric": cmd_caloric,
    "heat-decay": cmd_heat_decay, "norms": cmd_norms, "inequalities": cmd_inequalities, "regress": cmd_regress,
}


# ----------------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


FLAG_TYPES = {"r_max": float, "n": int, "scheme": str, "target": str, "m_max": int, "margin": float, "k": int,
              "expect": str, "perturb": str, "s_max": float, "ds": float, "integrator": str, "record_every": int,
              "fit_from": float, "fit_to": float, "t_max": float, "dt": float, "drift_tol": float, "growth": float,
              "s_min": float, "q": float, "ds_max": float, "a_s_tol": float, "recon_tol": float, "operator": str,
              "m": int, "samples": int, "max_step": float, "seed": int, "sample_every": int, "count": int,
              "sponge_start": float, "sponge_strength": float, "window": float, "tolerance": float,
              "modes": _ints, "criteria": _ints}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypmaps", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hypmaps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", help="JSON file with parameter overrides")
        p.add_argument("--out", "-o", help="output CSV path (default: stdout)")
        p.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or 1)")
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            if key == "lambda":
                conv = _floats if isinstance(default, list) else float
                p.add_argument(flag, dest="lambda_", type=conv, help=f"default {default}")
            else:
                p.add_argument(flag, dest=key, type=FLAG_TYPES[key], help=f"default {default}")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    command = ns.command
    overrides = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "out", "workers")}
    if "lambda_" in overrides:
        overrides["lambda"] = overrides.pop("lambda_")
    try:
        file_cfg = {}
        if ns.config:
            with open(ns.config) as fh:
                file_cfg = json.load(fh)
            if not isinstance(file_cfg, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = resolve_config(command, file_cfg, overrides)
        workers = worker_count(ns.workers)
        rep = COMMANDS[command](cfg, workers)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"hypmaps {command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        print(f"hypmaps {command}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = rep.render()
    if ns.out:
        with open(ns.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if rep.failures:
        print(f"hypmaps {command}: failed checks: {', '.join(rep.failures)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
