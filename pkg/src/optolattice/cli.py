"""Command-line driver.

Every subcommand resolves a flat JSON-style configuration (file values, then
flag overrides), writes one table to ``--out`` and a ``<out>.meta.json``
sidecar with the resolved configuration, package version and timings.
Exit codes: 0 success, 1 validation error, 2 numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from importlib import metadata

import numpy as np

from .errors import NumericalError, OptolatticeError, ValidationError
from .gaussian import (
    build_third_quantization,
    evolve_covariance,
    log_negativity,
    nu_minus,
    populations,
    quadrature_block,
    saturation_negativity,
    stationary_covariance,
)
from .io import FORMATS, Table, emit, write_text
from .lattice import Boundary, ChainParams, DisorderKind, DisorderSpec, build_chain, dissipation_data
from .selfcheck import format_table, run_checks
from .spectra import PhaseTolerances, eigenspectrum, phase_diagram, sweep_line
from .topology import chern_number
from .twosite import TwoSiteParams, asymptote_large_gplus, asymptote_small_gplus, cubic_small_gplus, twosite_poles

THREADS_ENV = "OPTOLATTICE_THREADS"

CHAIN_KEYS = ("g_plus", "g_minus", "j_hop", "kappa", "gamma", "n_c", "n_m", "n_cells", "boundary")
COMMON_KEYS = CHAIN_KEYS + ("seed", "out", "format", "threads")

# subcommand -> extra config keys and their defaults
COMMAND_KEYS = {
    "spectrum": {"mode": "sweep", "g_plus_min": 0.0, "g_plus_max": 0.4, "steps": 41},
    "phase-diagram": {
        "g_minus_min": 0.05, "g_minus_max": 2.0, "g_plus_min": 0.0, "g_plus_max": 1.0,
        "grid": [40, 50], "delta_gap": 1e-3,
    },
    "chern": {"grid_k": 64, "grid_eta": 64, "eta_max": None, "max_refinements": 3, "curvature": False},
    "steady": {},
    "negativity": {"pair": [[1, "a"], [1, "b"]], "g_plus_values": None, "n_m_values": None},
    "saturation": {"pair": [[1, "a"], [1, "b"]], "n_max": 20, "tolerance": 1e-4},
    "twosite": {"g_plus_min": 0.0, "g_plus_max": 1.0, "steps": 101},
    "evolve": {"pair": [[1, "a"], [1, "b"]], "t_max": 100.0, "steps": 11},
    "disorder": {"kind": "HoppingJ", "amplitude": 0.1},
    "selfcheck": {},
}

FLAG_KEYS = {
    "g_plus": float, "g_minus": float, "j_hop": float, "kappa": float, "gamma": float,
    "n_c": float, "n_m": float, "n_cells": int, "boundary": str, "seed": int, "out": str,
    "format": str, "threads": int,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="optolattice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMAND_KEYS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON object with configuration keys")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=JSON",
                       help="override one configuration key, value parsed as JSON")
        for key, kind in FLAG_KEYS.items():
            flag = "--" + key.replace("_", "-")
            extra = {"choices": FORMATS} if key == "format" else {}
            if key == "boundary":
                extra = {"choices": [b.value for b in Boundary]}
            p.add_argument(flag, dest=key, type=kind, default=None, **extra)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    config = {"seed": 0, "format": "csv", "out": None, "threads": None}
    config.update(ChainParams().as_dict())
    config.update(COMMAND_KEYS[command])
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        allowed = set(COMMON_KEYS) | set(COMMAND_KEYS[command])
        unknown = sorted(set(loaded) - allowed)
        if unknown:
            raise ValidationError(f"unknown config keys for {command}: {', '.join(unknown)}")
        config.update(loaded)
    for item in args.overrides:
        key, sep, raw = item.partition("=")
        if not sep or key not in set(COMMON_KEYS) | set(COMMAND_KEYS[command]):
            raise ValidationError(f"--set expects KEY=JSON with a known key, got {item!r}")
        try:
            config[key] = json.loads(raw)
        except json.JSONDecodeError:
            config[key] = raw
    for key in FLAG_KEYS:
        value = getattr(args, key)
        if value is not None:
            config[key] = value
    if config["format"] not in FORMATS:
        raise ValidationError(f"format must be one of {FORMATS}")
    if config["threads"] is None:
        env = os.environ.get(THREADS_ENV)
        try:
            config["threads"] = int(env) if env else 1
        except ValueError:
            raise ValidationError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if config["out"] is None:
        config["out"] = f"{command}.{config['format']}"
    return config


def chain_params(config: dict) -> ChainParams:
    return ChainParams(**{k: config[k] for k in CHAIN_KEYS})


def _pair(config):
    pair = config["pair"]
    try:
        (i, xi), (j, eta) = pair
        return (int(i), str(xi)), (int(j), str(eta))
    except (TypeError, ValueError):
        raise ValidationError(f"pair must look like [[1, \"a\"], [1, \"b\"]], got {pair!r}") from None


def _spectrum_rows(rep) -> Table:
    table = Table(("index", "re_e", "im_e", "localization", "label"))
    order = np.lexsort((rep.eigenvalues.real, rep.eigenvalues.imag))
    for n, i in enumerate(order):
        e = rep.eigenvalues[i]
        table.add(n, e.real, e.imag, rep.localization[i], rep.labels[i].value)
    return table


def cmd_spectrum(config, params):
    if config["mode"] == "eigenvalues":
        return _spectrum_rows(eigenspectrum(build_chain(params))), {}
    if config["mode"] != "sweep":
        raise ValidationError("spectrum mode must be 'sweep' or 'eigenvalues'")
    sweep = sweep_line(params, (config["g_plus_min"], config["g_plus_max"]), config["steps"], config["threads"])
    return Table(sweep.columns, sweep.rows()), {}


def cmd_phase_diagram(config, params):
    tol = PhaseTolerances(delta_gap=float(config["delta_gap"]))
    diagram = phase_diagram(
        (config["g_minus_min"], config["g_minus_max"]),
        (config["g_plus_min"], config["g_plus_max"]),
        config["grid"], params, tol, config["threads"],
    )
    table = Table(("g_minus", "g_plus", "region", "im_e_end", "im_e_bulk_max"))
    for gm, row in zip(diagram.g_minus, diagram.labels):
        for gp, lab in zip(diagram.g_plus, row):
            table.add(gm, gp, lab.region.value, lab.im_e_end, lab.im_e_bulk_max)
    return table, {}


def cmd_chern(config, params):
    rep = chern_number(params, config["grid_k"], config["grid_eta"], config["eta_max"], config["max_refinements"])
    summary = {
        "chern": rep.chern, "chern_integer": rep.chern_integer, "boundary_flux": rep.boundary_flux,
        "min_gap": rep.min_gap, "grid_dims": list(rep.grid_dims), "eta_window": rep.eta_window,
        "trace": [list(t[0]) + [t[1], t[2], t[3]] for t in rep.trace],
    }
    if config["curvature"]:
        table = Table(("k", "eta", "curvature"))
        for i, k in enumerate(rep.k_grid):
            for j, eta in enumerate(rep.eta_grid[:-1]):
                table.add(k, eta, rep.curvature[i, j])
    else:
        table = Table(("chern", "chern_integer", "boundary_flux", "min_gap", "grid_k", "grid_eta", "eta_window"))
        table.add(rep.chern, rep.chern_integer, rep.boundary_flux, rep.min_gap, *rep.grid_dims, rep.eta_window)
    return table, summary


def cmd_steady(config, params):
    state = stationary_covariance(build_chain(params), dissipation_data(params))
    pops = populations(state)
    table = Table(("site", "n_opt", "n_mech"))
    for s, (no, nm) in enumerate(zip(pops.optical, pops.mechanical), start=1):
        table.add(s, no, nm)
    return table, {"notes": list(state.notes)}


def cmd_negativity(config, params):
    first, second = _pair(config)
    gps = config["g_plus_values"] or [params.g_plus]
    nms = config["n_m_values"] or [params.n_m]
    table = Table(("g_plus", "n_m", "nu_minus", "e_n"))
    for nm in nms:
        for gp in gps:
            p = params.replace(g_plus=float(gp), n_m=float(nm))
            state = stationary_covariance(build_chain(p), dissipation_data(p))
            q = quadrature_block(state, *first, *second)
            table.add(p.g_plus, p.n_m, nu_minus(q), log_negativity(q))
    return table, {}


def cmd_saturation(config, params):
    res = saturation_negativity(params, _pair(config), config["n_max"], config["tolerance"])
    table = Table(("t", "nu_minus", "population_1", "population_2"))
    for t, nu, (p1, p2) in zip(res.times, res.nu_iterates, res.pair_populations):
        table.add(t, nu, p1, p2)
    return table, {"e_n": res.e_n, "nu_limit": res.nu_limit, "growth_rate": res.growth_rate}


def cmd_twosite(config, params):
    lo, hi, steps = config["g_plus_min"], config["g_plus_max"], int(config["steps"])
    grid = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    table = Table(("g_plus", "max_im", "im_2", "im_3", "im_4", "small_gplus", "large_gplus", "cubic"))
    for gp in grid:
        p = TwoSiteParams(float(gp), params.g_minus, params.j_hop, params.kappa, params.gamma)
        poles = twosite_poles(p)
        small = asymptote_small_gplus(p).value if p.j_hop < p.g_minus else math.nan
        table.add(gp, *poles.imag, small, asymptote_large_gplus(p), cubic_small_gplus(p))
    return table, {}


def cmd_evolve(config, params):
    first, second = _pair(config)
    steps = int(config["steps"])
    times = np.linspace(0.0, float(config["t_max"]), steps) if steps > 1 else np.array([0.0])
    data = build_third_quantization(params)
    table = Table(("t", "population_1", "population_2", "nu_minus", "e_n"))
    for t in times:
        state = evolve_covariance(data, float(t)).state
        pops = populations(state)
        occ = [pops.optical[s - 1] if sp == "a" else pops.mechanical[s - 1] for s, sp in (first, second)]
        q = quadrature_block(state, *first, *second)
        table.add(t, occ[0], occ[1], nu_minus(q), log_negativity(q))
    return table, {}


def cmd_disorder(config, params):
    spec = DisorderSpec(DisorderKind(config["kind"]), config["amplitude"], config["seed"])
    rep = eigenspectrum(build_chain(params, [spec]))
    end = rep.end_eigenvalues
    summary = {
        "n_end": rep.n_end,
        "max_abs_re_end": float(np.abs(end.real).max()) if end.size else None,
        "im_e_end": rep.im_e_end,
        "im_e_bulk_max": rep.im_e_bulk_max,
    }
    return _spectrum_rows(rep), summary


def cmd_selfcheck(config, params):
    results = run_checks()
    print(format_table(results))
    table = Table(("check", "passed", "value", "threshold", "seconds"))
    for r in results:
        table.add(r.name, r.passed, r.value, r.threshold, r.seconds)
    summary = {"all_passed": all(r.passed for r in results)}
    return table, summary


COMMANDS = {
    "spectrum": cmd_spectrum,
    "phase-diagram": cmd_phase_diagram,
    "chern": cmd_chern,
    "steady": cmd_steady,
    "negativity": cmd_negativity,
    "saturation": cmd_saturation,
    "twosite": cmd_twosite,
    "evolve": cmd_evolve,
    "disorder": cmd_disorder,
    "selfcheck": cmd_selfcheck,
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__

        return __version__


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = resolve_config(args.command, args)
        params = chain_params(config)
        start = time.perf_counter()
        table, summary = COMMANDS[args.command](config, params)
        elapsed = time.perf_counter() - start
        emit(table, config["format"], config["out"])
        meta = {
            "command": args.command,
            "config": config,
            "version": _version(),
            "timings": {"compute_seconds": elapsed},
            "result": summary,
        }
        write_text(config["out"] + ".meta.json", json.dumps(meta, indent=1, default=str, allow_nan=True) + "\n")
        if args.command == "selfcheck" and not summary["all_passed"]:
            print("error[selfcheck-failed]: at least one oracle check failed", file=sys.stderr)
            return 2
        return 0
    except ValidationError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 2
    except OptolatticeError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
