"""Command-line front end.

    kswave <command> [options]

Commands: exact, limit, singular, manifolds, shoot, converge, pde, validate.
Options can also come from a flat ``key = value`` file given with
``--config`` (``#`` starts a comment); command-line flags win over the file,
and the KSWAVE_OUT environment variable overrides the output directory
unless ``--out`` is given explicitly.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, KSWaveError, MissingCommand, TypeMismatch, UnknownKey
from .exact import (
    asymptotic_ratio,
    exact_wave,
    exact_wave_derivatives,
    sample_profile,
    tw_ode_residual,
    WaveProfile,
)
from .io import profile_to_dict, write_json, write_profile_csv, write_table_csv
from .model import ModelParams, validate
from .pde import Grid1D, compare_profile, initial_field, measure_wave_speed, simulate
from .perturbed import (
    S_R_EPS,
    convergence_study,
    invariance_residual,
    perturbed_point,
    profile_distance,
    shoot_heteroclinic,
)
from .singular import S_A, S_R, assemble_singular_orbit, branch_point, classify_branch

log = logging.getLogger(__name__)

COMMANDS = ("exact", "limit", "singular", "manifolds", "shoot", "converge", "pde", "validate")
ENV_OUT = "KSWAVE_OUT"


def _float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


# key -> (converter, default, help)
OPTIONS = {
    "chi": (float, 2.0, "chemotactic coefficient chi"),
    "k": (float, 1.0, "consumption rate K"),
    "c": (float, 2.0, "wave speed c"),
    "a": (float, 4.0, "integration constant A of the closed-form wave"),
    "ur": (float, 1.0, "right end state u_r"),
    "mu": (float, 1.0, "diffusivity ratio mu (D_u = mu eps)"),
    "eps": (_float_list, [0.1], "eps = D_w; comma-separated list (sorted descending)"),
    "zmin": (float, -10.0, "left end of the z grid"),
    "zmax": (float, 5.0, "right end of the z grid"),
    "n": (int, 601, "number of z samples"),
    "u-tilde-start": (float, None, "shooting start on S_r_eps (default c u_r / 2)"),
    "delta": (float, 1e-8, "relative offset from S_r_eps along the unstable direction"),
    "rtol": (float, 1e-10, "integrator relative tolerance"),
    "atol": (float, 1e-12, "integrator absolute tolerance"),
    "workers": (int, 1, "processes for eps sweeps"),
    "xmin": (float, -30.0, "PDE domain left end"),
    "xmax": (float, 30.0, "PDE domain right end"),
    "cells": (int, 3000, "PDE cell count"),
    "t-end": (float, 5.0, "PDE final time"),
    "every": (float, 0.5, "PDE snapshot interval"),
    "init": (str, "exact", "PDE initial data: exact | limit | step | background"),
    "level": (float, 0.5, "front tracking level as a fraction of u_r"),
    "out": (str, "kswave-out", "output directory"),
    "format": (str, "csv", "profile format: csv | json"),
}
ALIASES = {"dw": "eps", "u-r": "ur"}


@dataclass
class ScenarioConfig:
    command: str
    params: ModelParams
    epsilons: list[float]
    settings: dict
    out_dir: Path
    fmt: str = "csv"

    def canonical(self) -> dict:
        """Everything that determines the output bytes, minus the output path."""
        return {
            "command": self.command,
            "params": vars(self.params),
            "epsilons": self.epsilons,
            "settings": {k: v for k, v in sorted(self.settings.items())},
            "format": self.fmt,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class RunReport:
    command: str
    params: dict
    files: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    exit_status: int = 0
    message: str = ""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if "unrecognized arguments" in message:
            raise UnknownKey(message)
        if "invalid choice" in message or "required" in message:
            raise MissingCommand(f"{message}\n{self.format_usage()}")
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kswave", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"kswave {__version__}")
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="scenario to run")
    parser.add_argument("--config", help="flat key=value config file")
    for key, (_, default, text) in OPTIONS.items():
        flags = [f"--{key}"] + [f"--{a}" for a, target in ALIASES.items() if target == key]
        parser.add_argument(*flags, dest=key.replace("-", "_"), default=None, help=f"{text} (default: {default})")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _canonical_key(raw: str) -> str:
    key = raw.strip().lower().replace("_", "-")
    return ALIASES.get(key, key)


def read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        raw, _, value = line.partition("=")
        key = _canonical_key(raw)
        if key != "command" and key not in OPTIONS:
            raise UnknownKey(f"{path}:{lineno}: unknown key {raw.strip()!r}")
        values[key] = value.strip()
    return values


def _convert(key, value):
    conv = OPTIONS[key][0]
    try:
        out = conv(value)
    except (TypeError, ValueError) as exc:
        raise TypeMismatch(f"{key}: cannot read {value!r} as {conv.__name__.lstrip('_')}") from exc
    if isinstance(out, float) and not math.isfinite(out):
        raise TypeMismatch(f"{key}: {value!r} is not finite")
    return out


def parse_config(argv=None, environ=None) -> ScenarioConfig:
    environ = os.environ if environ is None else environ
    ns = build_parser().parse_args(argv)
    raw = {key: default for key, (_, default, _) in OPTIONS.items()}
    file_values = read_config_file(ns.config) if ns.config else {}
    command = ns.command or file_values.pop("command", None)
    if command is None:
        raise MissingCommand(f"no command given\n{build_parser().format_usage()}")
    if command not in COMMANDS:
        raise MissingCommand(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    for key, value in file_values.items():
        raw[key] = _convert(key, value)
    if environ.get(ENV_OUT):
        raw["out"] = environ[ENV_OUT]
    for key in OPTIONS:
        value = getattr(ns, key.replace("-", "_"))
        if value is not None:
            raw[key] = _convert(key, value)

    eps = raw.pop("eps")
    if not eps or any(e <= 0 for e in eps):
        raise TypeMismatch(f"eps values must be strictly positive (got {eps})")
    eps = sorted(set(eps), reverse=True)
    if raw["format"] not in ("csv", "json"):
        raise TypeMismatch(f"format must be csv or json (got {raw['format']!r})")
    params = ModelParams(
        chi=raw.pop("chi"), K=raw.pop("k"), c=raw.pop("c"), u_r=raw.pop("ur"),
        A=raw.pop("a"), mu=raw.pop("mu"), eps=eps[0],
    )
    validate(params)
    out_dir = Path(raw.pop("out"))
    fmt = raw.pop("format")
    if ns.verbose:
        logging.basicConfig(level=logging.INFO)
    return ScenarioConfig(command, params, eps, raw, out_dir, fmt)


class _Writer:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.files: list[str] = []
        cfg.out_dir.mkdir(parents=True, exist_ok=True)

    def profile(self, name: str, profile: WaveProfile, extra=None):
        if self.cfg.fmt == "csv":
            path = write_profile_csv(profile, self.cfg.out_dir / f"{name}.csv", extra)
        else:
            data = profile_to_dict(profile)
            data.update(extra or {})
            path = write_json(data, self.cfg.out_dir / f"{name}.json")
        self.files.append(path.name)

    def table(self, name: str, rows):
        path = write_table_csv(rows, self.cfg.out_dir / f"{name}.csv")
        self.files.append(path.name)


def _tag(x: float) -> str:
    return format(x, "g")


def _z_grid(cfg):
    s = cfg.settings
    return np.linspace(s["zmin"], s["zmax"], s["n"])


def _run_exact(cfg, out):
    s = cfg.settings
    metrics = {}
    for dw in cfg.epsilons:
        p = cfg.params.replace(mu=0.0, eps=dw)
        validate(p, exact=True)
        prof = sample_profile("exact", s["zmin"], s["zmax"], s["n"], p)
        out.profile(f"exact_dw{_tag(dw)}", prof, {"d_w": dw})
        r_u, r_w = tw_ode_residual(None, prof.z, p, derivatives=lambda z: exact_wave_derivatives(z, p))
        metrics[f"max_residual_dw{_tag(dw)}"] = float(max(np.abs(r_u).max(), np.abs(r_w).max()))
    return metrics


def _run_limit(cfg, out):
    s = cfg.settings
    prof = sample_profile("limit", s["zmin"], s["zmax"], s["n"], cfg.params)
    out.profile("limit", prof)
    return {"asymptotic_ratio": asymptotic_ratio(cfg.params.replace(eps=0.0))}


def _run_singular(cfg, out):
    z = _z_grid(cfg)
    zmin = min(z[0], -1e-3)
    orbit = assemble_singular_orbit(cfg.params, z_min=zmin)
    u, w = orbit.trace(z)
    out.profile("singular", WaveProfile(z, u, w, construction="singular"))
    f = orbit.fibre
    fibre_prof = WaveProfile(f.y, f.points[:, 0], f.points[:, 2], construction="singular", coordinate="y")
    out.profile("singular_fibre", fibre_prof)
    end = f.end
    return {"fibre_landing_v": end.v, "fibre_landing_w": end.w, "jump_z": orbit.jump_z}


def _run_manifolds(cfg, out):
    p = cfg.params
    ut = np.linspace(0.0, 2 * p.c * p.u_r, 41)
    rows = []
    for e in cfg.epsilons:
        for x in ut:
            a = branch_point(S_A, x, p)
            r = branch_point(S_R, x, p)
            re = perturbed_point(S_R_EPS, x, p, e)
            rows.append(
                {"epsilon": e, "u_tilde": x, "Sa_u": a.u, "Sr_u": r.u, "Sr_v": r.v, "Sr_w": r.w,
                 "Sr_eps_u": re.u, "Sr_eps_v": re.v, "Sr_eps_w": re.w}
            )
    out.table("manifolds", rows)
    metrics = {}
    if p.mu > 0:
        ut_ref = p.c * p.u_r
        for branch in (S_A, S_R):
            rep = classify_branch(branch, ut_ref, p)
            metrics[f"{branch}_verdict"] = rep.verdict
            metrics[f"{branch}_eigenvalues_real"] = [float(v) for v in rep.eigenvalues.real]
    metrics["max_invariance_residual"] = max(
        invariance_residual(S_R_EPS, x, p, e) for e in cfg.epsilons for x in ut[1:]
    )
    return metrics


def _shoot_kw(cfg):
    s = cfg.settings
    return {"u_tilde_start": s["u-tilde-start"], "delta": s["delta"], "rtol": s["rtol"], "atol": s["atol"],
            "z_min": s["zmin"]}


def _run_shoot(cfg, out):
    metrics = {}
    for e in cfg.epsilons:
        res = shoot_heteroclinic(cfg.params, e, **_shoot_kw(cfg))
        out.profile(f"shoot_eps{_tag(e)}", res.profile, {"epsilon": e})
        metrics[f"eps{_tag(e)}"] = {
            "u_end": res.u_end,
            "end_state_gap": res.end_state_gap,
            "speed_offset": res.speed_offset,
            "profile_distance": profile_distance(res, cfg.params),
        }
    return metrics


def _run_converge(cfg, out):
    table = convergence_study(cfg.params, cfg.epsilons, workers=cfg.settings["workers"], **_shoot_kw(cfg))
    out.table("converge", table.rows())
    return {"fitted_slope": table.slope, "intercept": table.intercept, "table": table.rows()}


def _run_pde(cfg, out):
    s = cfg.settings
    p = cfg.params
    grid = Grid1D(s["xmin"], s["xmax"], s["cells"])
    init = initial_field(s["init"], grid, p)
    snaps = simulate(init, p, s["t-end"], s["every"])
    for k, snap in enumerate(snaps):
        out.profile(f"pde_{k:04d}", snap.as_profile(), {"t": snap.t})
    metrics = {"mass_initial": snaps[0].mass, "mass_final": snaps[-1].mass, "snapshots": len(snaps)}
    if s["init"] != "background":
        est = measure_wave_speed(snaps[1:], s["level"], p)
        metrics.update(speed=est.speed, speed_uncertainty=est.uncertainty)
        if s["init"] == "exact":
            ref = sample_profile("exact", s["xmin"] - 10, s["xmax"] + 10, 20001, p.replace(mu=0.0))
            cmp = compare_profile(snaps[-1], ref, (0.0, s["xmax"]))
            metrics.update(shift=cmp.shift, sup_u=cmp.sup_u, sup_w=cmp.sup_w, sup_w_rel=cmp.sup_w / ref.w.max())
    return metrics


def _run_validate(cfg, out):
    """Cheap self-checks; any failure gives a nonzero exit."""
    p = cfg.params
    z = np.linspace(-10, 5, 101)
    worst = 0.0
    for dw in (1.0, 0.5, 0.25, 0.1, 0.05):
        if dw >= p.chi:
            continue
        q = p.replace(mu=0.0, eps=dw)
        r_u, r_w = tw_ode_residual(None, z, q, derivatives=lambda zz: exact_wave_derivatives(zz, q))
        worst = max(worst, float(np.abs(r_u).max()), float(np.abs(r_w).max()))
    inv = max(
        invariance_residual(S_R_EPS, x, p, e) for x in (0.1, 1.0, 10.0) for e in cfg.epsilons if e < p.chi
    )
    checks = {"exact_residual": worst < 1e-8, "invariance": inv < 1e-12}
    if p.mu > 0:
        checks["S_a_attracting"] = classify_branch(S_A, 1.0, p).verdict == "attracting"
        checks["S_r_repelling"] = classify_branch(S_R, 1.0, p).verdict == "repelling"
    if p.d_w < p.chi:
        u, w = exact_wave(-40.0, p.replace(mu=0.0, eps=min(1.0, p.chi / 2)))
        checks["asymptotic_ratio"] = abs(w / u - asymptotic_ratio(p.replace(eps=min(1.0, p.chi / 2)))) < 1e-6
    out.table("validate", [{"check": k, "passed": str(v)} for k, v in checks.items()])
    return {"max_exact_residual": worst, "max_invariance_residual": inv, "checks": checks,
            "all_passed": all(checks.values())}


RUNNERS = {
    "exact": _run_exact,
    "limit": _run_limit,
    "singular": _run_singular,
    "manifolds": _run_manifolds,
    "shoot": _run_shoot,
    "converge": _run_converge,
    "pde": _run_pde,
    "validate": _run_validate,
}


def run(cfg: ScenarioConfig) -> RunReport:
    report = RunReport(cfg.command, dict(vars(cfg.params)))
    out = _Writer(cfg)
    try:
        report.metrics = RUNNERS[cfg.command](cfg, out)
        if cfg.command == "validate" and not report.metrics["all_passed"]:
            report.exit_status = 1
            report.message = "validation checks failed"
    except (KSWaveError, ValueError) as exc:
        report.exit_status = 1
        report.message = f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        report.exit_status = 1
        report.message = f"I/O error on {exc.filename}: {exc.strerror}"
    report.files = list(out.files)
    summary = {
        "command": report.command,
        "parameters": report.params,
        "epsilons": cfg.epsilons,
        "settings": cfg.settings,
        "files": report.files,
        "metrics": report.metrics,
        "exit_status": report.exit_status,
        "message": report.message,
        "provenance": {"artifact": "kswave", "version": __version__, "config_hash": cfg.config_hash()},
    }
    try:
        write_json(summary, cfg.out_dir / f"{cfg.command}_summary.json")
    except OSError as exc:
        report.exit_status = 1
        report.message = f"I/O error on {exc.filename}: {exc.strerror}"
    return report


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except KSWaveError as exc:
        print(f"kswave: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    report = run(cfg)
    if report.exit_status:
        print(f"kswave: {report.message}", file=sys.stderr)
    else:
        print(json.dumps({"command": report.command, "files": report.files}, sort_keys=True))
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())
