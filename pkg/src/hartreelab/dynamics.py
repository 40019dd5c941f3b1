"""Split-step time integration of the Hartree equation and orbit diagnostics.

The propagator for i u_t = -Laplacian(u) + (w*|u|^2) u is the symmetric
composition of exact substeps: a potential phase e^{-i (w*|u|^2) dt/2}
applied pointwise (exact because the convolution only sees |u|, which the
phase leaves untouched) and a kinetic phase e^{-i |k|^2 dt} applied in
spectrum.  Both substeps are unitary on the grid, so mass is conserved to
rounding; the scheme is second order in dt and time reversible.  Trailing
and leading half kicks between samples share one convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._fft import fftn, ifftn
from .energy import convolve
from .grids import (
    Field,
    Grid,
    h1_norm_sq,
    k_squared,
    mass,
    normalize_mass,
    smooth_random_field,
)
from .kernels import KernelSpec, fourier_symbol, kernel_value
from .lorentz import (
    GAUSSIAN_INVERSE_SQUARE_RATIO,
    weak_norm_analytic,
)

FLAG_BLOWUP = "blowup_suspected"


def default_dt(grid: Grid, max_phase: float = math.pi / 4.0) -> float:
    """Largest step keeping the kinetic phase per step below max_phase at the
    grid's extreme wavenumber |k|^2 = 3 (pi N / L)^2."""
    k2_max = 3.0 * (math.pi * grid.N / grid.L) ** 2
    return max_phase / k2_max


@dataclass
class GwpBudget:
    """Smallness condition and a-priori kinetic ceiling for global existence.

    Built from a concrete bounded-tail/weak-core splitting of the kernel at
    radius split_R, with the certified lower bound k_est for the universal
    quartic constant.  Since k_est underestimates the true constant, a
    satisfied smallness condition is genuine, while the ceiling is the
    correspondingly weaker (larger) bound.
    """

    k_est: float
    split_R: float
    w1_inf: float
    w2_weak: float
    smallness: float          # k_est * lam * w2_weak, global existence needs < 2
    satisfied: bool
    h1_ceiling: float | None  # (4|E0| + lam^2 w1_inf) / (2 - smallness)


def _tail_sup(spec: KernelSpec, R: float) -> float:
    """sup of |w| outside radius R (catalog kernels decrease in radius)."""
    return float(abs(kernel_value(spec, np.asarray([R]))[0]))


def gwp_budget(
    spec: KernelSpec,
    lam: float,
    total_energy: float,
    k_est: float = GAUSSIAN_INVERSE_SQUARE_RATIO,
) -> GwpBudget:
    """Best split over a radius grid: minimizes the kinetic ceiling subject to
    the smallness condition; falls back to the smallest-budget split."""
    radii = np.logspace(-3, 2, 51)
    best: GwpBudget | None = None
    for R in radii:
        w2 = weak_norm_analytic(spec, 1.5, r_max=float(R))
        if not math.isfinite(w2):
            continue
        w1 = _tail_sup(spec, float(R))
        smallness = k_est * lam * w2
        if smallness < 2.0:
            ceiling = (4.0 * abs(total_energy) + lam**2 * w1) / (2.0 - smallness)
            cand = GwpBudget(k_est, float(R), w1, w2, smallness, True, ceiling)
            if best is None or not best.satisfied or (
                best.h1_ceiling is not None and cand.h1_ceiling < best.h1_ceiling
            ):
                best = cand
        elif best is None or (not best.satisfied and smallness < best.smallness):
            best = GwpBudget(k_est, float(R), w1, w2, smallness, False, None)
    assert best is not None
    return best


@dataclass
class EvolutionTrace:
    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    h1: np.ndarray
    orbit_distance: np.ndarray | None
    final: Field
    aborted: bool = False
    flag: str | None = None
    budget: GwpBudget | None = None
    ceiling_respected: bool | None = None


def strang_step(u: Field, kernel: KernelSpec, dt: float) -> Field:
    """One symmetric kick-drift-kick step of size dt (dt < 0 steps backward)."""
    if dt == 0:
        raise ValueError("dt must be nonzero")
    sym = fourier_symbol(kernel, u.grid)
    K2 = k_squared(u.grid)
    v = u.values
    phi = convolve(sym, v.real**2 + v.imag**2)
    v = v * np.exp(-0.5j * dt * phi)
    v = ifftn(fftn(v) * np.exp(-1j * dt * K2))
    phi = convolve(sym, v.real**2 + v.imag**2)
    v = v * np.exp(-0.5j * dt * phi)
    return Field(u.grid, v)


def _orbit_reference_arrays(ref: "OrbitReference"):
    g = ref.u_star.grid
    K2 = k_squared(g)
    weight = (1.0 + K2) * (g.cell_volume / g.N**3)
    s_hat = fftn(ref.u_star.values)
    ref_norm_sq = float(np.sum(weight * (s_hat.real**2 + s_hat.imag**2)))
    return K2, weight, s_hat, ref_norm_sq


@dataclass
class OrbitReference:
    """A converged ground state used as the representative of the orbit set."""

    u_star: Field
    lam: float
    mu: float

    @classmethod
    def from_result(cls, result) -> "OrbitReference":
        return cls(u_star=result.u, lam=result.lam, mu=result.mu)


def orbit_distance(v: Field, ref: OrbitReference) -> float:
    """Upper bound on the H^1 distance from v to the ground-state orbit.

    Minimizes ||v - e^{i theta} u*(. - a)||_{H^1} jointly over the global
    phase (optimized in closed form through the H^1 pairing) and over all
    whole-cell translations: the pairing against every shift comes from one
    inverse transform of the weighted cross spectrum.  The winning candidate
    is then re-evaluated as an explicit difference, which avoids the
    catastrophic cancellation of the norm-expansion formula near zero
    distance.  Only one orbit representative is available, so the true
    infimum can only be smaller.
    """
    if v.grid != ref.u_star.grid:
        raise ValueError("field and orbit reference live on different grids")
    g = v.grid
    _, weight, s_hat, _ = _orbit_reference_arrays(ref)
    v_hat = fftn(v.values)
    cross = ifftn(np.conj(v_hat) * s_hat * weight) * g.N**3
    t = np.unravel_index(int(np.argmax(np.abs(cross))), cross.shape)

    m = np.rint(np.fft.fftfreq(g.N, d=1.0 / g.N)).astype(np.int64)
    best = math.inf
    for sign in (1, -1):
        # spectral translation of the reference by a = sign * t * h
        ph = [np.exp(-2j * np.pi * m * (sign * tj) / g.N) for tj in t]
        shift = ph[0][:, None, None] * ph[1][None, :, None] * ph[2][None, None, :]
        s_shift = s_hat * shift
        pairing = complex(np.sum(weight * np.conj(v_hat) * s_shift))
        phase = pairing / abs(pairing) if pairing != 0 else 1.0
        diff = v_hat - np.conj(phase) * s_shift
        d2 = float(np.sum(weight * (diff.real**2 + diff.imag**2)))
        best = min(best, d2)
    return math.sqrt(max(best, 0.0))


def evolve(
    u0: Field,
    kernel: KernelSpec,
    T: float,
    dt: float | None = None,
    sample_every: int = 10,
    orbit_ref: OrbitReference | None = None,
    snapshot_every: int | None = None,
    snapshot_sink=None,
) -> EvolutionTrace:
    """Propagate u0 over [0, T], recording conserved quantities at samples.

    Aborts with flag 'blowup_suspected' on the first non-finite sample,
    keeping the last finite one.  snapshot_sink(step, field) is called every
    snapshot_every steps when provided.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    g = u0.grid
    dt = default_dt(g) if dt is None else float(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    sym = fourier_symbol(kernel, g)
    K2 = k_squared(g)
    h3 = g.cell_volume
    kin_phase = np.exp(-1j * dt * K2)
    n_steps = int(round(T / dt)) if T > 0 else 0

    times = []
    masses = []
    energies = []
    h1s = []
    dists = [] if orbit_ref is not None else None

    def record(t: float, v: np.ndarray, phi: np.ndarray, rho: np.ndarray) -> bool:
        vh = fftn(v)
        h1 = float(np.sum(K2 * (vh.real**2 + vh.imag**2)) * h3 / g.N**3)
        m = float(np.sum(rho) * h3)
        e = 0.5 * h1 + 0.25 * float(np.sum(phi * rho) * h3)
        if not (math.isfinite(m) and math.isfinite(e) and math.isfinite(h1)):
            return False
        times.append(t)
        masses.append(m)
        energies.append(e)
        h1s.append(h1)
        if dists is not None:
            dists.append(orbit_distance(Field(g, v), orbit_ref))
        return True

    v = u0.values.copy()
    rho = v.real**2 + v.imag**2
    phi = convolve(sym, rho)
    ok = record(0.0, v, phi, rho)
    if not ok:
        return EvolutionTrace(
            times=np.array([]), mass=np.array([]), energy=np.array([]),
            h1=np.array([]), orbit_distance=np.array([]) if orbit_ref else None,
            final=Field(g, v), aborted=True, flag=FLAG_BLOWUP, budget=None,
        )
    budget = gwp_budget(kernel, masses[0], energies[0]) if n_steps > 0 else None

    aborted = False
    step = 0
    while step < n_steps:
        seg = min(sample_every, n_steps - step)
        # [half kick, (drift, full kick) x (seg-1), drift, half kick]
        v = v * np.exp(-0.5j * dt * phi)
        for j in range(seg):
            v = ifftn(fftn(v) * kin_phase)
            rho = v.real**2 + v.imag**2
            phi = convolve(sym, rho)
            if j < seg - 1:
                v = v * np.exp(-1j * dt * phi)
        v = v * np.exp(-0.5j * dt * phi)
        step += seg
        # phi is built from moduli, which the trailing half kick preserves
        if not record(step * dt, v, phi, rho):
            aborted = True
            break
        if snapshot_sink is not None and snapshot_every and step % snapshot_every == 0:
            snapshot_sink(step, Field(g, v.copy()))

    h1_arr = np.array(h1s)
    ceiling_ok = None
    if budget is not None and budget.satisfied and budget.h1_ceiling is not None:
        ceiling_ok = bool(np.all(h1_arr <= budget.h1_ceiling))
    return EvolutionTrace(
        times=np.array(times),
        mass=np.array(masses),
        energy=np.array(energies),
        h1=h1_arr,
        orbit_distance=np.array(dists) if dists is not None else None,
        final=Field(g, v),
        aborted=aborted,
        flag=FLAG_BLOWUP if aborted else None,
        budget=budget,
        ceiling_respected=ceiling_ok,
    )


def soliton_check(
    ref: OrbitReference,
    kernel: KernelSpec,
    T: float,
    dt: float,
    sample_every: int = 50,
    phase_rate: float | None = None,
) -> dict:
    """Defects of the standing-wave prediction u(t) = e^{-i mu t} u*.

    phase_rate overrides the rotation rate (the modulus defect ignores it;
    the full defect documents how sensitive the phase prediction is to the
    choice of rate).
    """
    g = ref.u_star.grid
    sym = fourier_symbol(kernel, g)
    K2 = k_squared(g)
    rate = ref.mu if phase_rate is None else phase_rate
    kin_phase = np.exp(-1j * dt * K2)
    n_steps = int(round(T / dt))
    ref_norm = math.sqrt(mass(ref.u_star))
    s_abs = np.abs(ref.u_star.values)
    h3 = g.cell_volume

    v = ref.u_star.values.copy()
    rho = v.real**2 + v.imag**2
    phi = convolve(sym, rho)
    max_full = 0.0
    max_modulus = 0.0
    step = 0
    while step < n_steps:
        seg = min(sample_every, n_steps - step)
        v = v * np.exp(-0.5j * dt * phi)
        for j in range(seg):
            v = ifftn(fftn(v) * kin_phase)
            phi = convolve(sym, v.real**2 + v.imag**2)
            if j < seg - 1:
                v = v * np.exp(-1j * dt * phi)
        v = v * np.exp(-0.5j * dt * phi)
        step += seg
        t = step * dt
        pred = np.exp(-1j * rate * t) * ref.u_star.values
        diff = v - pred
        full = math.sqrt(float(np.sum(diff.real**2 + diff.imag**2)) * h3) / ref_norm
        mod = math.sqrt(float(np.sum((np.abs(v) - s_abs) ** 2)) * h3) / ref_norm
        max_full = max(max_full, full)
        max_modulus = max(max_modulus, mod)
    return {
        "T": T,
        "dt": dt,
        "phase_rate": rate,
        "max_full_defect": max_full,
        "max_modulus_defect": max_modulus,
    }


def perturbation_field(grid: Grid, seed: int) -> Field:
    """Fixed-seed smooth random field scaled to unit H^1 norm."""
    rng = np.random.default_rng(seed)
    r = smooth_random_field(grid, rng, n_bumps=8)
    return Field(grid, r.values / math.sqrt(h1_norm_sq(r)))


def stability_experiment(
    ref: OrbitReference,
    kernel: KernelSpec,
    deltas: list[float],
    T: float,
    dt: float,
    seed: int = 0,
    sample_every: int = 25,
    growth_budget: float = 10.0,
) -> dict:
    """Orbit-distance growth of perturbed ground states over [0, T].

    Each run starts from u* + delta * r renormalized to the reference mass,
    with r a fixed-seed unit-H^1 smooth field; it passes when the supremum of
    the orbit distance stays within growth_budget times its initial value.
    """
    g = ref.u_star.grid
    r = perturbation_field(g, seed)
    rows = []
    all_pass = True
    for delta in deltas:
        u0 = Field(g, ref.u_star.values + delta * r.values)
        u0 = normalize_mass(u0, ref.lam)
        d0 = orbit_distance(u0, ref)
        trace = evolve(u0, kernel, T, dt, sample_every=sample_every, orbit_ref=ref)
        sup = float(np.max(trace.orbit_distance))
        passed = (not trace.aborted) and sup <= growth_budget * d0 if delta > 0 else not trace.aborted
        all_pass = all_pass and passed
        rows.append(
            {
                "delta": delta,
                "initial_distance": d0,
                "sup_distance": sup,
                "ratio": sup / d0 if d0 > 0 else math.inf,
                "mass_drift": float(np.max(np.abs(trace.mass - trace.mass[0])) / trace.mass[0]),
                "smallness": trace.budget.smallness if trace.budget else math.nan,
                "aborted": trace.aborted,
                "pass": passed,
            }
        )
    return {"T": T, "dt": dt, "seed": seed, "rows": rows, "pass": all_pass}
