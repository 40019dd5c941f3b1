"""Command-line front end: experiment orchestration and artifact emission.

Outputs per run directory: manifest.json (config hash, versions, wall time,
seed), JSON result records, CSV tables for sweeps and time series (schema
documented in --help), HFLD field snapshots.  All files are written to a
temporary name and renamed, so readers never see partial artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._fft import set_workers
from .config import ConfigError, RunConfig, load_config
from .dynamics import (
    OrbitReference,
    default_dt,
    evolve,
    soliton_check,
    stability_experiment,
)
from .energy import energy
from .grids import Field, Grid, gaussian_field, load_field, save_field, smooth_random_field
from .groundstate import (
    FlowOptions,
    binding_check,
    i_of_lambda,
    minimize,
    minimizer_diagnostics,
    symmetrization_probe,
)
from .lorentz import (
    c2_estimate,
    default_k_trial_family,
    k_lower_bound,
    lambda_star_upper,
    weak_norm_analytic,
)

CSV_SCHEMA_VERSION = 1

COLUMN_DOCS = """\
CSV column reference (schema v1):
  sweep-lambda: lambda,I,mu,residual,converged
      mass, attained minimal energy, constraint multiplier, stationary-equation
      residual, convergence flag (0/1)
  evolve/soliton-check/stability traces: t,mass,energy,h1,orbit_dist
      sample time, squared L2 norm, total energy, squared homogeneous-H1
      seminorm, H1 distance to the reference orbit (empty when no reference)
"""

SUBCOMMANDS = (
    "energy", "norms", "kconst", "groundstate", "sweep-lambda", "bind-check",
    "rearrange-check", "evolve", "soliton-check", "stability",
)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_atomic(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data)
    os.replace(tmp, path)


def _sanitize(obj):
    """Strict-JSON form: non-finite floats become their repr strings."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return repr(float(obj))
    return obj


def _write_json(path: Path, obj) -> None:
    payload = json.dumps(_sanitize(obj), indent=2, sort_keys=True, default=_json_default)
    _write_atomic(path, payload + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [f"# hartreelab csv schema v{CSV_SCHEMA_VERSION}", ",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    _write_atomic(path, "\n".join(lines) + "\n")


def _manifest(out: Path, cfg_text: str, seed: int, t0: float, extras: dict) -> None:
    _write_json(
        out / "manifest.json",
        {
            "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
            "package_version": __version__,
            "numpy_version": np.__version__,
            "seed": seed,
            "wall_time_s": time.time() - t0,
            **extras,
        },
    )


def _flow_options(cfg: RunConfig, initial: Field | None = None) -> FlowOptions:
    gs = cfg.groundstate
    return FlowOptions(
        tau=gs.tau, tol_energy=gs.tol_energy, tol_residual=gs.tol_residual,
        max_iter=gs.max_iter, sigma0=gs.sigma0, initial=initial,
    )


def _solve_reference(cfg: RunConfig, grid: Grid):
    lam = cfg.groundstate.lambdas[0]
    return minimize(lam, cfg.kernel, grid, _flow_options(cfg))


def _initial_state(cfg: RunConfig, grid: Grid):
    """Initial datum for evolution runs: converged ground state or snapshot."""
    if cfg.evolve.initial == "groundstate":
        res = _solve_reference(cfg, grid)
        return res.u, OrbitReference.from_result(res)
    u = load_field(cfg.evolve.initial)
    return u, None


def _trace_rows(trace) -> list[list]:
    rows = []
    for i, t in enumerate(trace.times):
        dist = "" if trace.orbit_distance is None else repr(float(trace.orbit_distance[i]))
        rows.append([repr(float(t)), repr(float(trace.mass[i])), repr(float(trace.energy[i])),
                     repr(float(trace.h1[i])), dist])
    return rows


def _result_record(res) -> dict:
    return {
        "lambda": res.lam,
        "I_lambda": res.I_lambda,
        "mu": res.mu,
        "residual": res.residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "flag": res.flag,
        "boundary_ratio": res.boundary_ratio,
    }


def run(subcommand: str, cfg: RunConfig, cfg_text: str, out: Path, seed: int) -> int:
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    grid = Grid(cfg.grid.N, cfg.grid.L)
    kernel = cfg.kernel

    if subcommand == "energy":
        if cfg.evolve.initial != "groundstate":
            u = load_field(cfg.evolve.initial)
        else:
            u = gaussian_field(grid, grid.L / 8.0, mass_target=cfg.groundstate.lambdas[0])
        br = energy(u, kernel)
        _write_json(out / "energy.json", {
            "kinetic": br.kinetic, "interaction": br.interaction, "total": br.total,
            "kernel": kernel.label(),
        })

    elif subcommand == "norms":
        records = []
        for p in cfg.norms.p_values:
            v = weak_norm_analytic(kernel, p)
            records.append({
                "kernel": kernel.label(), "p": p, "q": "inf",
                "value": v if math.isfinite(v) else "inf",
                "method": "analytic-level-sets",
            })
        c2 = c2_estimate(kernel)
        records.append({
            "kernel": kernel.label(), "p": 1.5, "q": "inf", "value": c2,
            "method": "infimal-core-norm",
        })
        _write_json(out / "norms.json", records)

    elif subcommand == "kconst":
        fields, specs = default_k_trial_family(grid)
        k_est, table = k_lower_bound(fields, specs)
        c2 = c2_estimate(kernel)
        _write_json(out / "kconst.json", {
            "k_lower_bound": k_est,
            "trial_table": table,
            "kernel": kernel.label(),
            "c2": c2,
            "lambda_star_upper": lambda_star_upper(c2, k_est) if c2 >= 0 else None,
        })

    elif subcommand == "groundstate":
        res = _solve_reference(cfg, grid)
        diag = minimizer_diagnostics(res)
        save_field(res.u, out / "u_star.hfld")
        _write_json(out / "result.json", {
            **_result_record(res),
            "kernel": kernel.label(),
            "diagnostics": {
                "phase": diag.phase,
                "min_phase_fixed_real": diag.min_phase_fixed_real,
                "monotonicity_defect": diag.monotonicity_defect,
                "spectral_tail_fraction": diag.spectral_tail_fraction,
            },
        })

    elif subcommand == "sweep-lambda":
        rows = i_of_lambda(sorted(cfg.groundstate.lambdas), kernel, grid, _flow_options(cfg))
        _write_csv(out / "sweep.csv", ["lambda", "I", "mu", "residual", "converged"],
                   [[r.lam, r.I_lambda, r.mu, r.residual, r.converged] for r in rows])

    elif subcommand == "bind-check":
        lam = cfg.groundstate.lambdas[0]
        report = binding_check(lam, [f * lam for f in cfg.binding.fractions],
                               kernel, grid, _flow_options(cfg))
        _write_json(out / "binding.json", report)

    elif subcommand == "rearrange-check":
        rng = np.random.default_rng(seed)
        reports = []
        for _ in range(4):
            u = smooth_random_field(grid, rng)
            reports.append(symmetrization_probe(u, kernel))
        _write_json(out / "rearrange.json", {
            "reports": reports, "pass": all(r["pass"] for r in reports),
        })

    elif subcommand == "evolve":
        u0, ref = _initial_state(cfg, grid)
        dt = cfg.evolve.dt or default_dt(grid)
        sink = None
        if cfg.evolve.snapshot_every:
            def sink(step, fld):  # noqa: E306
                save_field(fld, out / f"snapshot_{step:08d}.hfld")
        trace = evolve(u0, kernel, cfg.evolve.T, dt, cfg.evolve.sample_every,
                       orbit_ref=ref, snapshot_every=cfg.evolve.snapshot_every,
                       snapshot_sink=sink)
        _write_csv(out / "trace.csv", ["t", "mass", "energy", "h1", "orbit_dist"],
                   _trace_rows(trace))
        _write_json(out / "evolve.json", {
            "dt": dt, "aborted": trace.aborted, "flag": trace.flag,
            "smallness": trace.budget.smallness if trace.budget else None,
            "smallness_satisfied": trace.budget.satisfied if trace.budget else None,
            "h1_ceiling": trace.budget.h1_ceiling if trace.budget else None,
            "ceiling_respected": trace.ceiling_respected,
        })

    elif subcommand == "soliton-check":
        res = _solve_reference(cfg, grid)
        ref = OrbitReference.from_result(res)
        dt = cfg.evolve.dt or default_dt(grid)
        report = soliton_check(ref, kernel, cfg.evolve.T, dt)
        _write_json(out / "soliton.json", {**report, **_result_record(res)})

    elif subcommand == "stability":
        res = _solve_reference(cfg, grid)
        ref = OrbitReference.from_result(res)
        dt = cfg.stability.dt or default_dt(grid)
        report = stability_experiment(ref, kernel, cfg.stability.deltas,
                                      cfg.stability.T, dt, seed=seed)
        _write_csv(out / "stability.csv",
                   ["delta", "initial_distance", "sup_distance", "ratio", "pass"],
                   [[r["delta"], r["initial_distance"], r["sup_distance"], r["ratio"], r["pass"]]
                    for r in report["rows"]])
        _write_json(out / "stability.json", report)

    else:
        raise AssertionError(f"unhandled subcommand {subcommand}")

    _manifest(out, cfg_text, seed, t0, {"subcommand": subcommand})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hartreelab",
        description="Hartree ground states, thresholds and dynamics on a periodic spectral grid.",
        epilog=COLUMN_DOCS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", default="runs/latest", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed recorded in the manifest")
    parser.add_argument("--threads", type=int, default=0,
                        help="FFT worker threads (speed only, never results)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads > 0:
        set_workers(args.threads)
    try:
        cfg_text = Path(args.config).read_text()
        cfg = load_config(args.config)
        return run(args.subcommand, cfg, cfg_text, Path(args.out), args.seed)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
