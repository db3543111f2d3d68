"""Command-line front end: scan, run, validate, sweep.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import AUTO, RESONANCE, RunConfig, load
from .cycle import FIRST_LAW_TOL, run_engine, suppression
from .dressed import n_thermal
from .errors import ConfigError, OttoCavityError
from .spectral import locate_resonance, scan_spectrum

log = logging.getLogger("otto_cavity")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _out_dir(cfg: RunConfig, override) -> Path:
    out = Path(override or cfg.data["outputs"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _wants(cfg: RunConfig, fmt: str) -> bool:
    return fmt in cfg.data["outputs"]["formats"]


def resonances(cfg: RunConfig, need_scan: bool = True):
    """Spectrum scan plus one crossing entry per wall.

    A wall with zero coupling has no avoided crossing; its bare resonance
    omega_j / 2 is reported with zero gap instead.
    """
    s = cfg.data["scan"]
    grid = np.linspace(s["omega_min"], s["omega_max"], s["n_points"])
    model = cfg.model()
    scan = scan_spectrum(model, grid, cfg.truncation, s["n_levels"]) if need_scan else None
    crossings = {}
    for j, (omega, g) in enumerate(((model.omega_1, model.g_1), (model.omega_2, model.g_2)), start=1):
        if g == 0:
            crossings[f"wall{j}"] = {"omega_eff": omega / 2, "gap": 0.0, "level_pair": None,
                                     "scan_range": [float(grid[0]), float(grid[-1])], "kind": "bare"}
        else:
            rep = locate_resonance(scan, omega / 2, s["window"])
            crossings[f"wall{j}"] = dict(rep.as_dict(), kind="avoided")
    return scan, crossings


def resolve_frequencies(cfg: RunConfig):
    """(omega_c for H_s, omega_eff_1, omega_eff_2, crossings or None)."""
    d, m = cfg.data["drive"], cfg.data["model"]
    crossings = None
    if AUTO in (d["omega_eff_1"], d["omega_eff_2"]):
        _, crossings = resonances(cfg)
    w1 = crossings["wall1"]["omega_eff"] if d["omega_eff_1"] == AUTO else d["omega_eff_1"]
    w2 = crossings["wall2"]["omega_eff"] if d["omega_eff_2"] == AUTO else d["omega_eff_2"]
    wc = w1 if m["omega_c"] == RESONANCE else m["omega_c"]
    return wc, w1, w2, crossings


def cmd_scan(cfg: RunConfig, out: Path, args) -> int:
    scan, crossings = resonances(cfg)
    tag = f"config_hash={cfg.hash}"
    if _wants(cfg, "csv"):
        scan.to_csv(out / "spectrum.csv", comment=tag)
    payload = {
        "config_hash": cfg.hash,
        "omega_eff_1": crossings["wall1"]["omega_eff"],
        "omega_eff_2": crossings["wall2"]["omega_eff"],
        "gap_1": crossings["wall1"]["gap"],
        "gap_2": crossings["wall2"]["gap"],
        "crossings": crossings,
    }
    if _wants(cfg, "json"):
        _dump(out / "crossings.json", payload)
    print(json.dumps({k: payload[k] for k in ("omega_eff_1", "omega_eff_2", "gap_1", "gap_2")}))
    return EXIT_OK


def execute_run(cfg: RunConfig, out: Path, seed=None) -> int:
    """Run the engine and write ledger.csv, cycles.json and run_meta.json."""
    started = time.time()
    wc, w1, w2, crossings = resolve_frequencies(cfg)
    baths = cfg.baths
    g = cfg.data["integrator"]
    run = run_engine(
        cfg.model(wc), baths, cfg.schedule(w1, w2), cfg.truncation,
        n_cycles=cfg.data["drive"]["n_cycles"], h=g["h"], stride=g["stride"],
        plateau=cfg.plateau, strict_first_law=False,
    )
    tag = f"config_hash={cfg.hash}"
    ledger = run.ledger
    if _wants(cfg, "csv"):
        ledger.write_csv(out / "ledger.csv", reference=run.reference, comment=tag)

    cycles = []
    for r in run.reports:
        d = r.as_dict()
        d["suppression_hot"] = suppression(r.N_c_end_hot, w2, baths.T_h)
        d["suppression_cold"] = suppression(r.N_c_end_cold, w1, baths.T_c)
        cycles.append(d)
    residual = float(np.max(np.abs(ledger.first_law_residuals()), initial=0.0))
    min_eig = min((v for _, v in ledger.min_eigenvalues), default=0.0)
    summary = {
        "config_hash": cfg.hash,
        "eta_carnot": baths.carnot,
        "omega_eff_1": w1,
        "omega_eff_2": w2,
        "n_thermal_cold": n_thermal(w1, baths.T_c),
        "n_thermal_hot": n_thermal(w2, baths.T_h),
        "cycles": cycles,
    }
    meta = {
        "config_hash": cfg.hash,
        "config_source": cfg.source,
        "code_version": __version__,
        "resolved": cfg.data,
        "defaults_applied": cfg.defaults_applied,
        "omega_c_hamiltonian": wc,
        "crossings": crossings,
        "seed": seed,
        "transient_plateau": run.transient_plateau,
        "reference_time": run.reference.t,
        "cycle_starts": list(run.schedule.cycle_starts),
        "block_shape": list(run.generator.shape),
        "checks": {
            "first_law_max": residual,
            "trace_error_max": float(ledger.column("trace_error").max(initial=0.0)),
            "hermiticity_error_max": float(ledger.column("hermiticity_error").max(initial=0.0)),
            "min_eigenvalue": min_eig,
            "positive": bool(ledger.column("positive").all()),
            "renormalizations": ledger.renormalizations,
        },
        "wall_clock_s": time.time() - started,
    }
    if _wants(cfg, "json"):
        _dump(out / "cycles.json", summary)
        _dump(out / "run_meta.json", meta)
    for c in cycles:
        eta = "n/a" if c["eta"] is None else f"{c['eta']:.4f}"
        print(f"cycle {c['index']}: W_out={c['W_out']:.6e} Q_in={c['Q_in']:.6e} eta={eta} engine={c['engine']}")
    if residual > FIRST_LAW_TOL:
        print(f"error: first-law residual {residual:.3e} exceeds {FIRST_LAW_TOL}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_run(cfg: RunConfig, out: Path, args) -> int:
    return execute_run(cfg, out, seed=args.seed)


def cmd_validate(cfg: RunConfig, out, args) -> int:
    print(json.dumps({"config_hash": cfg.hash, "resolved": cfg.data,
                      "defaults_applied": cfg.defaults_applied}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    sw = cfg.data["sweep"]
    if not sw["parameter"] or not sw["values"]:
        raise ConfigError("sweep.parameter and sweep.values are required for the sweep command")
    variants = [cfg.with_value(sw["parameter"], v) for v in sw["values"]]

    def one(k):
        sub = out / f"sweep_{k:03d}"
        sub.mkdir(parents=True, exist_ok=True)
        try:
            return execute_run(variants[k], sub, seed=args.seed)
        except OttoCavityError as exc:
            log.error("sweep point %d failed: %s", k, exc)
            return EXIT_NUMERICAL

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        codes = list(pool.map(one, range(len(variants))))
    _dump(out / "sweep.json", {
        "config_hash": cfg.hash,
        "parameter": sw["parameter"],
        "points": [{"value": v, "directory": f"sweep_{k:03d}", "exit_code": c, "config_hash": variants[k].hash}
                   for k, (v, c) in enumerate(zip(sw["values"], codes))],
    })
    return max(codes, default=EXIT_OK)


COMMANDS = {"scan": cmd_scan, "run": cmd_run, "validate": cmd_validate, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otto-cavity", description="Two-wall cavity Otto engine simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides outputs.directory)")
        p.add_argument("--seed", type=int, default=None, help="reserved; the integrator is deterministic")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweep")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = None if args.command == "validate" else _out_dir(cfg, args.out)
        return COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except OttoCavityError as exc:
        where = f" (t={exc.t:.6g})" if hasattr(exc, "t") else ""
        print(f"numerical error{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
