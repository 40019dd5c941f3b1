"""TOML run configuration: parsing, validation and defaults.

Unknown keys, type mismatches and range violations are reported with their
section path; syntax errors keep the parser's line/column message.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .kernels import KernelSpec


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    N: int = 32
    L: float = 16.0


@dataclass
class GroundStateConfig:
    lambdas: list[float] = field(default_factory=lambda: [1.0])
    tau: float = 0.1
    tol_energy: float = 1e-12
    tol_residual: float = 1e-6
    max_iter: int = 2000
    sigma0: float | None = None


@dataclass
class EvolveConfig:
    T: float = 1.0
    dt: float | None = None
    sample_every: int = 10
    snapshot_every: int | None = None
    initial: str = "groundstate"   # or a path to an HFLD snapshot


@dataclass
class StabilityConfig:
    deltas: list[float] = field(default_factory=lambda: [1e-2])
    T: float = 1.0
    dt: float | None = None


@dataclass
class BindingConfig:
    fractions: list[float] = field(default_factory=lambda: [0.25, 0.5, 0.75])


@dataclass
class NormsConfig:
    p_values: list[float] = field(default_factory=lambda: [1.5])


@dataclass
class RunConfig:
    grid: GridConfig
    kernel: KernelSpec
    groundstate: GroundStateConfig
    evolve: EvolveConfig
    stability: StabilityConfig
    binding: BindingConfig
    norms: NormsConfig
    raw: dict


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _take(section: dict, where: str, key: str, kind, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"[{where}] missing required key '{key}'")
        return default
    val = section.pop(key)
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"[{where}] key '{key}': expected {kind.__name__}, got {type(val).__name__}")
    return val


def _no_leftovers(section: dict, where: str) -> None:
    if section:
        raise ConfigError(f"[{where}] unknown key '{next(iter(section))}'")


def _float_list(section: dict, where: str, key: str, default: list[float]) -> list[float]:
    if key not in section:
        return list(default)
    val = section.pop(key)
    if not isinstance(val, list) or not val:
        raise ConfigError(f"[{where}] key '{key}': expected a nonempty list of numbers")
    out = []
    for x in val:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"[{where}] key '{key}': expected numbers, got {type(x).__name__}")
        out.append(float(x))
    return out


def _parse_kernel(section: dict) -> KernelSpec:
    family = _take(section, "kernel", "family", str, required=True)
    g = _take(section, "kernel", "g", float, default=1.0)
    try:
        if family == "power_law":
            alpha = _take(section, "kernel", "alpha", float, required=True)
            _no_leftovers(section, "kernel")
            return KernelSpec("power_law", g=g, alpha=alpha)
        if family == "gaussian_well":
            sigma = _take(section, "kernel", "sigma", float, default=1.0)
            _no_leftovers(section, "kernel")
            return KernelSpec("gaussian_well", g=g, sigma=sigma)
        if family == "yukawa":
            m = _take(section, "kernel", "m", float, default=1.0)
            _no_leftovers(section, "kernel")
            return KernelSpec("yukawa", g=g, m=m)
        if family == "compact_well":
            r0 = _take(section, "kernel", "r0", float, default=1.0)
            _no_leftovers(section, "kernel")
            return KernelSpec("compact_well", g=g, r0=r0)
    except ValueError as exc:
        raise ConfigError(f"[kernel] {exc}") from exc
    raise ConfigError(f"[kernel] unknown family '{family}'")


def parse_config(text: str) -> RunConfig:
    try:
        data = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    raw = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}

    gsec = dict(data.pop("grid", {}))
    N = _take(gsec, "grid", "N", int, default=32)
    L = _take(gsec, "grid", "L", float, default=16.0)
    _no_leftovers(gsec, "grid")
    _require(N % 2 == 0 and N >= 8, "[grid] N must be an even integer >= 8")
    _require(L > 0, "[grid] L must be positive")
    grid = GridConfig(N=N, L=L)

    ksec = dict(data.pop("kernel", {}))
    _require(bool(ksec), "missing [kernel] section")
    kernel = _parse_kernel(ksec)

    ssec = dict(data.pop("groundstate", {}))
    lambdas = _float_list(ssec, "groundstate", "lambdas", [1.0])
    if "lambda" in ssec:
        lambdas = [float(_take(ssec, "groundstate", "lambda", float))]
    gs = GroundStateConfig(
        lambdas=lambdas,
        tau=_take(ssec, "groundstate", "tau", float, default=0.1),
        tol_energy=_take(ssec, "groundstate", "tol_energy", float, default=1e-12),
        tol_residual=_take(ssec, "groundstate", "tol_residual", float, default=1e-6),
        max_iter=_take(ssec, "groundstate", "max_iter", int, default=2000),
        sigma0=_take(ssec, "groundstate", "sigma0", float, default=None),
    )
    _no_leftovers(ssec, "groundstate")
    _require(all(l > 0 for l in gs.lambdas), "[groundstate] masses must be positive")
    _require(gs.tau > 0, "[groundstate] tau must be positive")
    _require(gs.max_iter >= 1, "[groundstate] max_iter must be >= 1")

    esec = dict(data.pop("evolve", {}))
    ev = EvolveConfig(
        T=_take(esec, "evolve", "T", float, default=1.0),
        dt=_take(esec, "evolve", "dt", float, default=None),
        sample_every=_take(esec, "evolve", "sample_every", int, default=10),
        snapshot_every=_take(esec, "evolve", "snapshot_every", int, default=None),
        initial=_take(esec, "evolve", "initial", str, default="groundstate"),
    )
    _no_leftovers(esec, "evolve")
    _require(ev.T >= 0, "[evolve] T must be nonnegative")
    _require(ev.dt is None or ev.dt > 0, "[evolve] dt must be positive")
    _require(ev.sample_every >= 1, "[evolve] sample_every must be >= 1")
    if ev.initial != "groundstate":
        _require(Path(ev.initial).exists(), f"[evolve] initial snapshot '{ev.initial}' does not exist")

    tsec = dict(data.pop("stability", {}))
    st = StabilityConfig(
        deltas=_float_list(tsec, "stability", "deltas", [1e-2]),
        T=_take(tsec, "stability", "T", float, default=1.0),
        dt=_take(tsec, "stability", "dt", float, default=None),
    )
    _no_leftovers(tsec, "stability")
    _require(all(d >= 0 for d in st.deltas), "[stability] deltas must be nonnegative")

    bsec = dict(data.pop("binding", {}))
    bd = BindingConfig(fractions=_float_list(bsec, "binding", "fractions", [0.25, 0.5, 0.75]))
    _no_leftovers(bsec, "binding")
    _require(
        all(0.05 <= f <= 0.95 for f in bd.fractions),
        "[binding] fractions must lie in [0.05, 0.95]",
    )

    nsec = dict(data.pop("norms", {}))
    nm = NormsConfig(p_values=_float_list(nsec, "norms", "p_values", [1.5]))
    _no_leftovers(nsec, "norms")
    _require(all(p > 1 for p in nm.p_values), "[norms] p values must exceed 1")

    if data:
        raise ConfigError(f"unknown section [{next(iter(data))}]")

    return RunConfig(
        grid=grid, kernel=kernel, groundstate=gs, evolve=ev,
        stability=st, binding=bd, norms=nm, raw=raw,
    )


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())
