"""Command-line front end.

Every subcommand reads parameters from (lowest to highest precedence) the
built-in defaults, an optional ``--preset``, an optional flat JSON
``--config`` file and explicit flags. Output goes to ``--out`` (stdout by
default) as CSV with a ``#`` metadata block or as JSON with a
``metadata`` key.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import warnings
from dataclasses import fields

import numpy as np

from . import __version__
from .dimer import asymmetric_modes, mode_census, symmetric_modes
from .errors import Blowup, NoConvergence, NotSteady, PtFanoError
from .lattice import (LatticeConfig, TRAJECTORY_HEADER, probe_stability, run_scattering_sim)
from .model import DimerParams
from .pinned import pinned_asymmetric, pinned_saturated_symmetric, pinned_symmetric
from .scattering import (RESIDUAL_TOL, Branch, SolverOpts, linear_spectrum, linear_transmissivity,
                         power_sweep, solve_scattering, ultimate_power)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

PARAM_KEYS = tuple(f.name for f in fields(DimerParams))
LATTICE_KEYS = ("n_sites", "dt", "absorber_width", "absorber_max", "ramp_time", "horizon",
                "record_every")

FIG3 = {"E": 0.1, "gamma0": 0.01, "gamma2": 1e-4, "chi": 0.0, "V": 0.2, "C": 1.0, "omega": 0.1}

# per-command options: key -> (type, default, help)
COMMANDS = {
    "dimer-modes": ({
        "omega": (float, None, "frequency for the symmetric family (default: census frequency)"),
    }, {}),
    "spectrum": ({
        "gamma0_list": (str, "", "comma-separated gamma0 values (default: the gamma0 parameter)"),
        "omega_min": (float, -1.95, "lowest frequency"),
        "omega_max": (float, 1.95, "highest frequency"),
        "n_omega": (int, 391, "number of frequencies"),
    }, {
        "fig2": {"E": 0.1, "V": 0.2, "C": 1.0, "gamma2": 0.0, "chi": 0.0,
                 "gamma0_list": "0,0.001,0.005,0.01"},
    }),
    "power-sweep": ({
        "omega": (float, 0.1, "frequency"),
        "pin": (float, None, "single incident power (overrides the grid)"),
        "pin_min": (float, 0.01, "lowest incident power"),
        "pin_max": (float, 5.0, "highest incident power"),
        "n_pin": (int, 100, "number of grid powers"),
        "n_starts": (int, 64, "random Newton starts per point"),
    }, {"fig3": FIG3}),
    "scatter-solve": ({
        "omega": (float, 0.1, "frequency"),
        "pin": (float, 1.0, "incident power I^2"),
        "n_starts": (int, 64, "random Newton starts"),
    }, {"fig3": FIG3}),
    "stability": ({
        "omega": (float, 0.1, "frequency"),
        "pin": (float, None, "incident power (default: ultimate power for ultimate branches, else 4)"),
        "branch": (str, Branch.ULTIMATE_LOSS.value, "branch tag of the probed solution"),
        "index": (int, 0, "which solution of that tag, in solver order"),
        "eps": (float, 1e-4, "relative perturbation of the dimer amplitudes"),
        "n_starts": (int, 64, "random Newton starts"),
        "trajectory": (str, None, "also write the trajectory CSV here"),
        **{k: (type(getattr(LatticeConfig(), k)), getattr(LatticeConfig(), k), "lattice setting")
           for k in LATTICE_KEYS},
    }, {"fig4": FIG3}),
    "simulate": ({
        "omega": (float, 0.1, "frequency"),
        "pin": (float, 1.0, "incident power"),
        "trajectory": (str, None, "also write the trajectory CSV here"),
        **{k: (type(getattr(LatticeConfig(), k)), getattr(LatticeConfig(), k), "lattice setting")
           for k in LATTICE_KEYS},
    }, {}),
    "pinned": ({
        "omega": (float, None, "frequency for symmetric modes (omitted: saturated and asymmetric modes)"),
        "below_band": (bool, False, "allow omega < -2C (staggered profile)"),
        "half_width": (int, 30, "profile sites on each side of the dimer"),
    }, {}),
}

COMMON = {
    "seed": (int, 0, "PRNG seed (env PT_FANO_SEED overrides the default)"),
    "format": (str, "csv", "output format: csv or json"),
    "out": (str, None, "output path (default: stdout)"),
}

PRESET_NOTES = {
    "fig2": "gamma0 values are an illustrative choice",
}


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptfano", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (opts, presets) in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat JSON file with parameter and option keys")
        if presets:
            sp.add_argument("--preset", choices=sorted(presets))
        for key in PARAM_KEYS:
            sp.add_argument(f"--{key}", type=float, default=argparse.SUPPRESS)
        for key, (typ, default, help_) in {**opts, **COMMON}.items():
            kind = _parse_bool if typ is bool else typ
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind,
                            default=argparse.SUPPRESS, help=f"{help_} (default: {default})")
    return parser


def _coerce(key: str, value, typ):
    if value is None:
        return None
    if typ is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"{key} must be a boolean")
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if typ is str and isinstance(value, str):
        return value
    raise ConfigError(f"{key} must be of type {typ.__name__}, got {value!r}")


def resolve_config(command: str, ns: argparse.Namespace) -> dict:
    """Merge defaults, preset, config file and flags; reject unknown keys."""
    opts, presets = COMMANDS[command]
    schema = {**{k: (float, getattr(DimerParams(), k), "") for k in PARAM_KEYS}, **opts, **COMMON}
    cfg = {k: v[1] for k, v in schema.items()}
    env_seed = os.environ.get("PT_FANO_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"PT_FANO_SEED must be an integer, got {env_seed!r}") from None
    preset = getattr(ns, "preset", None)
    if preset:
        cfg.update(presets[preset])
    if ns.config:
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a flat JSON object")
        unknown = sorted(set(data) - set(schema))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for k, v in data.items():
            cfg[k] = _coerce(k, v, schema[k][0])
    for k in schema:
        if hasattr(ns, k):
            cfg[k] = getattr(ns, k)
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    cfg["preset"] = preset
    return cfg


def _params(cfg: dict) -> DimerParams:
    return DimerParams(**{k: cfg[k] for k in PARAM_KEYS})


def _lattice(cfg: dict) -> LatticeConfig:
    return LatticeConfig(**{k: cfg[k] for k in LATTICE_KEYS})


def _metadata(command: str, cfg: dict, extra: dict | None = None) -> dict:
    meta = {
        "command": command,
        "version": __version__,
        "preset": cfg["preset"],
        "params": {k: cfg[k] for k in PARAM_KEYS},
        "options": {k: v for k, v in cfg.items()
                    if k not in PARAM_KEYS and k not in ("preset", "out", "format")},
        "seed": cfg["seed"],
        "tolerances": {"residual": RESIDUAL_TOL, "dedup": SolverOpts().dedup_tol},
    }
    if cfg["preset"] in PRESET_NOTES:
        meta["note"] = PRESET_NOTES[cfg["preset"]]
    if extra:
        meta.update(extra)
    return meta


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def render_csv(meta: dict, header, rows) -> str:
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def render_json(meta: dict, payload: dict) -> str:
    return json.dumps({"metadata": meta, **payload}, indent=2, sort_keys=True) + "\n"


def _emit(cfg: dict, text: str):
    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(cfg, meta, header, rows, payload=None) -> str:
    rows = list(rows)
    if cfg["format"] == "csv":
        return render_csv(meta, header, rows)
    if payload is None:
        payload = {"rows": [dict(zip(header, r)) for r in rows]}
    return render_json(meta, payload)


# ---------------------------------------------------------------- commands

def cmd_dimer_modes(cfg):
    p = _params(cfg)
    report = mode_census(p)
    omega = report.omega if cfg["omega"] is None else cfg["omega"]
    modes = list(symmetric_modes(p, omega)) + list(asymmetric_modes(p))
    header = ("kind", "omega", "Asq", "Bsq", "delta", "psiA_re", "psiA_im", "psiB_re", "psiB_im")
    rows = [(m.kind, m.omega, m.Asq, getattr(m, "Bsq", m.Asq), m.delta, m.psiA.real,
             m.psiA.imag, m.psiB.real, m.psiB.imag) for m in modes]
    rep = {"omega": report.omega, "symmetric_regime": report.symmetric_regime.value,
           "symmetric_count": report.symmetric_count,
           "asymmetric_count": report.asymmetric_count, "multistable": report.multistable}
    meta = _metadata("dimer-modes", cfg, {"census": rep})
    return _table(cfg, meta, header, rows,
                  {"census": rep, "modes": [dict(zip(header, r)) for r in rows]})


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of numbers: {text!r}") from None


def cmd_spectrum(cfg):
    p = _params(cfg)
    gammas = _float_list(cfg["gamma0_list"]) or [p.gamma0]
    if cfg["n_omega"] < 1:
        raise ConfigError("n_omega must be >= 1")
    omegas = np.round(np.linspace(cfg["omega_min"], cfg["omega_max"], cfg["n_omega"]), 12)
    rows = []
    for g in gammas:
        q = p.replace(gamma0=g)
        for w, t_num, _ in linear_spectrum(q, omegas):
            rows.append((g, w, linear_transmissivity(q, w), t_num))
    header = ("gamma0", "omega", "transmissivity", "transmissivity_numeric")
    return _table(cfg, _metadata("spectrum", cfg), header, rows)


def cmd_power_sweep(cfg):
    p = _params(cfg)
    if cfg["pin"] is not None:
        grid = [cfg["pin"]]
    else:
        if cfg["n_pin"] < 1 or cfg["pin_min"] < 0:
            raise ConfigError("need n_pin >= 1 and pin_min >= 0")
        grid = list(np.linspace(cfg["pin_min"], cfg["pin_max"], cfg["n_pin"]))
    opts = SolverOpts(n_starts=cfg["n_starts"], seed=cfg["seed"])
    diagram = power_sweep(p, cfg["omega"], grid, opts)
    records = list(diagram.rows())
    counts = {}
    if len(grid) == 1:
        for s in diagram.solutions_at(0):
            counts[s.branch.value] = counts.get(s.branch.value, 0) + 1
    extra = {"gaps": [[g, msg] for g, msg in diagram.gaps], "n_branches": len(diagram.branches)}
    if counts:
        extra["counts"] = dict(sorted(counts.items()))
    header = tuple(records[0]) if records else ("branch_id", "branch", "Pin", "transmissivity")
    rows = [tuple(r[h] for h in header) for r in records]
    return _table(cfg, _metadata("power-sweep", cfg, extra), header, rows)


def _solve(cfg, p):
    if cfg["pin"] < 0:
        raise ConfigError("pin must be >= 0")
    opts = SolverOpts(n_starts=cfg["n_starts"], seed=cfg["seed"])
    return solve_scattering(p, cfg["omega"], math.sqrt(cfg["pin"]), opts)


SOLUTION_HEADER = ("branch", "Pin", "transmissivity", "reflectivity", "intensityA", "intensityB",
                   "psiA_re", "psiA_im", "psiB_re", "psiB_im", "residual")


def _solution_row(s):
    return (s.branch.value, s.Pin, s.transmissivity, s.reflectivity, abs(s.psiA) ** 2,
            abs(s.psiB) ** 2, s.psiA.real, s.psiA.imag, s.psiB.real, s.psiB.imag, s.residual)


def cmd_scatter_solve(cfg):
    p = _params(cfg)
    sols = _solve(cfg, p)
    meta = _metadata("scatter-solve", cfg, {"n_solutions": len(sols)})
    return _table(cfg, meta, SOLUTION_HEADER, [_solution_row(s) for s in sols],
                  {"solutions": [s.to_dict() for s in sols]})


def _write_trajectory(path, traj, I):
    rows = traj.rows(I)
    with open(path, "w", newline="") as fh:
        fh.write(render_csv({}, TRAJECTORY_HEADER, rows))


def cmd_stability(cfg):
    p = _params(cfg)
    try:
        tag = Branch(cfg["branch"])
    except ValueError:
        raise ConfigError(f"unknown branch tag {cfg['branch']!r}; "
                          f"choose from {', '.join(b.value for b in Branch)}") from None
    if cfg["pin"] is None:
        ultimate = tag in (Branch.ULTIMATE_LOSS, Branch.ULTIMATE_GAIN)
        cfg = {**cfg, "pin": ultimate_power(p) if ultimate else 4.0}
    sols = [s for s in _solve(cfg, p) if s.branch is tag]
    if cfg["index"] >= len(sols):
        raise NoConvergence(f"only {len(sols)} solution(s) tagged {tag.value} at Pin={cfg['pin']}")
    sol = sols[cfg["index"]]
    verdict = probe_stability(p, _lattice(cfg), sol, cfg["eps"])
    if cfg["trajectory"]:
        _write_trajectory(cfg["trajectory"], verdict.trajectory, sol.I)
    summary = verdict.summary()
    meta = _metadata("stability", cfg, {"solution": sol.to_dict()})
    header = tuple(summary)
    row = tuple(summary[h] if not isinstance(summary[h], list) else " ".join(_fmt(v) for v in summary[h])
                for h in header)
    return _table(cfg, meta, header, [row], {"solution": sol.to_dict(), "verdict": summary})


def cmd_simulate(cfg):
    p = _params(cfg)
    if cfg["pin"] <= 0:
        raise ConfigError("pin must be > 0")
    I = math.sqrt(cfg["pin"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NotSteady)
        res = run_scattering_sim(p, _lattice(cfg), cfg["omega"], I)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if cfg["trajectory"]:
        _write_trajectory(cfg["trajectory"], res.trajectory, I)
    header = ("omega", "Pin", "t_est", "r_est", "spread", "steady")
    row = (cfg["omega"], cfg["pin"], res.t_est, res.r_est, res.spread, res.steady)
    return _table(cfg, _metadata("simulate", cfg), header, [row])


def cmd_pinned(cfg):
    p = _params(cfg)
    if cfg["omega"] is not None:
        modes = [("symmetric", m) for m in pinned_symmetric(p, cfg["omega"], cfg["below_band"])]
    else:
        modes = [("saturated", m) for m in pinned_saturated_symmetric(p)]
        modes += [("asymmetric", m) for m in pinned_asymmetric(p)]
    header = ("mode", "kind", "omega", "lambda", "n", "psi_re", "psi_im")
    rows = []
    for i, (kind, m) in enumerate(modes):
        for n, re, im in m.profile_rows(cfg["half_width"]):
            rows.append((i, kind, m.omega, m.lam, n, re, im))
    summary = [{"mode": i, "kind": kind, "omega": m.omega, "lambda": m.lam, "Veff": m.Veff,
                "Eeff": m.Eeff, "Asq": abs(m.psiA) ** 2, "Bsq": abs(m.psiB) ** 2,
                "residual": m.residual} for i, (kind, m) in enumerate(modes)]
    meta = _metadata("pinned", cfg, {"modes": summary})
    return _table(cfg, meta, header, rows,
                  {"modes": summary, "profiles": [dict(zip(header, r)) for r in rows]})


HANDLERS = {
    "dimer-modes": cmd_dimer_modes,
    "spectrum": cmd_spectrum,
    "power-sweep": cmd_power_sweep,
    "scatter-solve": cmd_scatter_solve,
    "stability": cmd_stability,
    "simulate": cmd_simulate,
    "pinned": cmd_pinned,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve_config(ns.command, ns)
        text = HANDLERS[ns.command](cfg)
        _emit(cfg, text)
    except (NoConvergence, Blowup) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, PtFanoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main():
    sys.exit(run())
