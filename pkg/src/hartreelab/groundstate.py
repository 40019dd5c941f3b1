"""Constrained minimization of the Hartree energy by a normalized spectral flow.

One flow step maps u to

    normalize_lambda( (1 + tau |k|^2)^{-1} F[ u - tau ((w*|u|^2) - mu) u ] )

where mu is the current constraint multiplier.  Without the scalar mu shift
the map's fixed points solve an eigenproblem whose kinetic term is rescaled
by 1 + O(tau |mu|), which stalls the stationary-equation residual well above
any useful tolerance at practical step sizes; with the shift the fixed points
are exactly the discrete stationary states, so the residual converges to
rounding level.  Energy is forced monotone by halving tau on any increase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._fft import fftn, ifftn
from .energy import convolve, density
from .grids import (
    Field,
    Grid,
    boundary_amplitude_ratio,
    coords,
    gaussian_field,
    k_squared,
    mass,
    normalize_mass,
    warn_if_boundary_leak,
)
from .kernels import KernelSpec, fourier_symbol
from .lorentz import GAUSSIAN_INVERSE_SQUARE_RATIO, c2_estimate

ENERGY_DIVERGENCE_FLOOR = -1e6

#: Boundary-to-peak amplitude above which an iterate counts as delocalized:
#: the discrete minimum then reflects the finite box, not the open problem.
DELOCALIZED_RATIO = 0.1

FLAG_UNBOUNDED = "unbounded_below_suspected"
FLAG_DELOCALIZED = "delocalized_I_near_zero"
FLAG_STEP_REJECTED = "step_rejected"


@dataclass
class FlowOptions:
    tau: float = 0.1
    tol_energy: float = 1e-12      # relative energy stall over the last 10 steps
    tol_residual: float = 1e-6
    max_iter: int = 2000
    sigma0: float | None = None    # initial Gaussian width, default L/8
    initial: Field | None = None
    residual_every: int = 10
    max_halvings: int = 20
    record_traces: bool = True

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class GroundStateResult:
    u: Field
    lam: float
    I_lambda: float
    mu: float
    residual: float
    iterations: int
    converged: bool
    flag: str | None = None
    tau_final: float = 0.0
    boundary_ratio: float = 0.0
    energy_trace: np.ndarray | None = None
    h1_trace: np.ndarray | None = None


def initial_guess(grid: Grid, lam: float, opts: FlowOptions) -> Field:
    if opts.initial is not None:
        if opts.initial.grid != grid:
            raise ValueError("initial guess lives on a different grid")
        return normalize_mass(opts.initial, lam)
    sigma = opts.sigma0 if opts.sigma0 is not None else grid.L / 8.0
    return gaussian_field(grid, sigma, mass_target=lam)


def _a_priori_unbounded(spec: KernelSpec, lam: float) -> bool:
    # Critical power law: coercivity budget K * lam * C2 >= 2 admits collapse.
    if spec.family == "power_law" and spec.alpha == 2.0:
        return GAUSSIAN_INVERSE_SQUARE_RATIO * lam * c2_estimate(spec) >= 2.0
    return False


def minimize(
    lam: float,
    kernel: KernelSpec,
    grid: Grid,
    opts: FlowOptions | None = None,
) -> GroundStateResult:
    """Ground state of the mass-lam constrained Hartree energy on the grid.

    Returns the best iterate with converged=False when the iteration budget
    runs out; sets flag to note suspected unboundedness (critical kernels
    above the coercivity budget) or a delocalized iterate (constrained
    infimum numerically indistinguishable from the finite-box floor).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    opts = opts or FlowOptions()
    h3 = grid.cell_volume
    K2 = k_squared(grid)
    sym = fourier_symbol(kernel, grid)

    u = initial_guess(grid, lam, opts).values
    if _a_priori_unbounded(kernel, lam):
        f = Field(grid, u)
        return GroundStateResult(
            u=f, lam=lam, I_lambda=math.nan, mu=math.nan, residual=math.inf,
            iterations=0, converged=False, flag=FLAG_UNBOUNDED, tau_final=opts.tau,
            boundary_ratio=boundary_amplitude_ratio(f),
        )

    tau = opts.tau
    halvings = 0
    e_trace: list[float] = []
    h1_trace: list[float] = []
    e_prev = math.inf
    state_prev = None
    res = math.inf
    mu = 0.0
    it = 0
    converged = False
    flag = None

    for it in range(opts.max_iter):
        rho = u.real**2 + u.imag**2
        phi = convolve(sym, rho)
        uh = fftn(u)
        h1 = float(np.sum(K2 * (uh.real**2 + uh.imag**2)) * h3 / grid.N**3)
        quartic = float(np.sum(phi * rho) * h3)
        e = 0.5 * h1 + 0.25 * quartic
        mu = (h1 + quartic) / lam

        if e > e_prev + 1e-13 * abs(e_prev) and state_prev is not None:
            u, rho, phi, uh, h1, quartic, e, mu = state_prev
            tau *= 0.5
            halvings += 1
            if halvings > opts.max_halvings:
                flag = FLAG_STEP_REJECTED
                break
        else:
            if opts.record_traces:
                e_trace.append(e)
                h1_trace.append(h1)

            energy_stalled = (
                len(e_trace) > 10
                and abs(e_trace[-1] - e_trace[-11]) <= opts.tol_energy * max(abs(e), 1e-300)
            )
            check_res = energy_stalled or it % opts.residual_every == 0 or it == opts.max_iter - 1
            if check_res:
                hu = ifftn(K2 * uh) + phi * u
                diff = hu - mu * u
                res = float(np.sqrt(np.sum(diff.real**2 + diff.imag**2) * h3 / lam))
                if res <= opts.tol_residual and energy_stalled:
                    converged = True
                    break
            if e < ENERGY_DIVERGENCE_FLOOR:
                flag = FLAG_UNBOUNDED
                break
            state_prev = (u, rho, phi, uh, h1, quartic, e, mu)
            e_prev = e

        g = u - tau * (phi - mu) * u
        gh = fftn(g)
        gh /= 1.0 + tau * K2
        u = ifftn(gh)
        n = float(np.sum(u.real**2 + u.imag**2) * h3)
        u *= math.sqrt(lam / n)

    result_field = Field(grid, u)
    bratio = boundary_amplitude_ratio(result_field)
    if flag is None and bratio > DELOCALIZED_RATIO:
        flag = FLAG_DELOCALIZED
    if flag != FLAG_UNBOUNDED:
        warn_if_boundary_leak(result_field, "ground-state iterate")

    return GroundStateResult(
        u=result_field,
        lam=lam,
        I_lambda=e_trace[-1] if e_trace else math.nan,
        mu=mu,
        residual=res,
        iterations=it + 1,
        converged=converged,
        flag=flag,
        tau_final=tau,
        boundary_ratio=bratio,
        energy_trace=np.array(e_trace) if opts.record_traces else None,
        h1_trace=np.array(h1_trace) if opts.record_traces else None,
    )


@dataclass
class LambdaPoint:
    lam: float
    I_lambda: float
    mu: float
    residual: float
    converged: bool
    flag: str | None


def i_of_lambda(
    lambdas: list[float],
    kernel: KernelSpec,
    grid: Grid,
    opts: FlowOptions | None = None,
    warm_start: bool = True,
) -> list[LambdaPoint]:
    """Minimal energy along a mass sweep, warm-starting from the previous state."""
    if any(l <= 0 for l in lambdas):
        raise ValueError("masses must be positive")
    opts = opts or FlowOptions()
    rows: list[LambdaPoint] = []
    prev: Field | None = None
    for lam in lambdas:
        o = FlowOptions(**{**opts.__dict__, "initial": prev if warm_start else opts.initial})
        r = minimize(lam, kernel, grid, o)
        rows.append(LambdaPoint(lam, r.I_lambda, r.mu, r.residual, r.converged, r.flag))
        if warm_start and r.flag != FLAG_UNBOUNDED:
            prev = r.u
    return rows


NEGATIVITY_TOL = 1e-6


def _indicator_negative(
    lam: float, kernel: KernelSpec, grid: Grid, opts: FlowOptions
) -> tuple[bool, float]:
    """Does the measured minimal energy fall below -NEGATIVITY_TOL?

    The flow energy is monotone, so the verdict is final as soon as the trace
    crosses the threshold; the zero side is decided by the stalled trace.
    """
    r = minimize(lam, kernel, grid, opts)
    e = r.I_lambda
    return (e < -NEGATIVITY_TOL), e


def bisect_lambda_star(
    kernel: KernelSpec,
    bracket: tuple[float, float],
    grid: Grid,
    opts: FlowOptions | None = None,
    rel_width: float = 1e-2,
) -> dict:
    """Mass threshold below which the measured minimal energy sits at zero.

    Bisection on the indicator I(lam) < -1e-6; strict subhomogeneity of the
    minimal energy makes the indicator monotone in the mass.  The result is a
    numerical baseline with the grid and tolerance recorded: energies within
    NEGATIVITY_TOL of zero are indistinguishable from it at finite resolution.
    """
    opts = opts or FlowOptions()
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError("invalid bracket")
    neg_lo, e_lo = _indicator_negative(lo, kernel, grid, opts)
    neg_hi, e_hi = _indicator_negative(hi, kernel, grid, opts)
    if neg_lo or not neg_hi:
        raise ValueError(
            f"invalid bracket: I({lo}) = {e_lo:.3e}, I({hi}) = {e_hi:.3e} "
            f"(need I(lo) ~ 0 and I(hi) < -{NEGATIVITY_TOL})"
        )
    probes = 0
    while (hi - lo) > rel_width * 0.5 * (hi + lo):
        mid = math.sqrt(lo * hi)
        neg, _ = _indicator_negative(mid, kernel, grid, opts)
        if neg:
            hi = mid
        else:
            lo = mid
        probes += 1
        if probes > 60:
            break
    return {
        "lambda_star": 0.5 * (lo + hi),
        "bracket": (lo, hi),
        "probes": probes,
        "grid": (grid.N, grid.L),
        "negativity_tol": NEGATIVITY_TOL,
    }


def binding_check(
    lam: float,
    alphas: list[float],
    kernel: KernelSpec,
    grid: Grid,
    opts: FlowOptions | None = None,
    margin_tol: float = 1e-5,
    require_converged: bool = True,
) -> dict:
    """Strict subadditivity margins I(a) + I(lam-a) - I(lam) over the probes.

    Probes closer than 5% of the total mass to either endpoint are rejected:
    the margin degenerates there and the sub-solves lose meaning.  A
    non-converged sub-solve raises unless require_converged is cleared.
    """
    for a in alphas:
        if not 0.05 * lam <= a <= 0.95 * lam:
            raise ValueError("binding probes must satisfy 0.05 lam <= a <= 0.95 lam")
    opts = opts or FlowOptions()
    needed = sorted({lam} | {a for a in alphas} | {lam - a for a in alphas})
    table: dict[float, GroundStateResult] = {}
    prev: Field | None = None
    for m in needed:
        o = FlowOptions(**{**opts.__dict__, "initial": prev})
        r = minimize(m, kernel, grid, o)
        if require_converged and not r.converged:
            raise RuntimeError(f"binding sub-solve at mass {m} did not converge "
                               f"(residual {r.residual:.2e})")
        table[m] = r
        prev = r.u
    rows = []
    ok = True
    for a in alphas:
        margin = table[a].I_lambda + table[lam - a].I_lambda - table[lam].I_lambda
        passed = margin > margin_tol
        ok = ok and passed
        rows.append(
            {
                "alpha": a,
                "I_alpha": table[a].I_lambda,
                "I_rest": table[lam - a].I_lambda,
                "I_total": table[lam].I_lambda,
                "margin": margin,
                "pass": passed,
            }
        )
    return {"lambda": lam, "rows": rows, "pass": ok, "margin_tol": margin_tol}


# ---------------------------------------------------------------------------
# Structural diagnostics of converged states
# ---------------------------------------------------------------------------


@dataclass
class MinimizerDiagnostics:
    phase: float
    min_phase_fixed_real: float
    max_imag_after_phase_fix: float
    radial_bins: np.ndarray
    radial_profile: np.ndarray
    monotonicity_defect: float
    spectral_tail_fraction: float
    boundary_ratio: float


def _center_of_mass(u: Field) -> np.ndarray:
    """Center of |u|^2 via circular means, robust to periodic wrap."""
    g = u.grid
    rho = density(u)
    total = rho.sum()
    X, Y, Z = coords(g)
    out = np.empty(3)
    for i, C in enumerate((X, Y, Z)):
        ang = 2.0 * np.pi * C / g.L
        z = np.sum(rho * np.exp(1j * ang)) / total
        out[i] = math.atan2(z.imag, z.real) * g.L / (2.0 * np.pi)
    return out


def minimizer_diagnostics(result: GroundStateResult, n_bins: int | None = None) -> MinimizerDiagnostics:
    """Phase fixing, positivity margin, radial monotonicity and spectral decay."""
    u = result.u
    g = u.grid
    a = np.abs(u.values)
    amp = Field(g, a.astype(np.complex128))
    ph = complex(np.vdot(amp.values.ravel(), u.values.ravel()))
    theta = math.atan2(ph.imag, ph.real)
    fixed = u.values * np.exp(-1j * theta)

    com = _center_of_mass(u)
    X, Y, Z = coords(g)
    half = g.L / 2.0
    dx = (X - com[0] + half) % g.L - half
    dy = (Y - com[1] + half) % g.L - half
    dz = (Z - com[2] + half) % g.L - half
    r = np.sqrt(dx**2 + dy**2 + dz**2)

    n_bins = n_bins or g.N // 2
    edges = np.linspace(0.0, half, n_bins + 1)
    which = np.clip(np.digitize(r.ravel(), edges) - 1, 0, n_bins - 1)
    sums = np.bincount(which, weights=a.ravel(), minlength=n_bins)
    counts = np.bincount(which, minlength=n_bins)
    valid = counts > 0
    profile = np.where(valid, sums / np.maximum(counts, 1), 0.0)
    prof = profile[valid]
    increase = np.diff(prof)
    defect = float(max(0.0, increase.max())) if increase.size else 0.0

    F = fftn(u.values)
    p = F.real**2 + F.imag**2
    k_cut = 0.5 * np.pi * g.N / g.L
    tail = float(p[k_squared(g) > k_cut**2].sum() / p.sum())

    return MinimizerDiagnostics(
        phase=theta,
        min_phase_fixed_real=float(fixed.real.min()),
        max_imag_after_phase_fix=float(np.abs(fixed.imag).max()),
        radial_bins=0.5 * (edges[:-1] + edges[1:])[valid],
        radial_profile=prof,
        monotonicity_defect=defect,
        spectral_tail_fraction=tail,
        boundary_ratio=result.boundary_ratio,
    )


def symmetrization_probe(u: Field, kernel: KernelSpec, slack: float = 1e-3) -> dict:
    """Energy change under symmetric decreasing rearrangement.

    For radially non-decreasing kernels the rearranged field can only lower
    the energy up to discretization slack (kinetic term by Polya-Szego,
    quartic term by Riesz).
    """
    from .energy import energy as energy_breakdown
    from .lorentz import symmetric_decreasing_rearrangement

    if not kernel.is_radial_nondecreasing:
        raise ValueError("symmetrization probe requires a radial non-decreasing kernel")
    before = energy_breakdown(u, kernel)
    after = energy_breakdown(symmetric_decreasing_rearrangement(u), kernel)
    delta = after.total - before.total
    scale = abs(before.total) + before.kinetic
    return {
        "E_before": before.total,
        "E_after": after.total,
        "delta": delta,
        "kinetic_delta": after.kinetic - before.kinetic,
        "interaction_delta": after.interaction - before.interaction,
        "scale": scale,
        "pass": delta <= slack * scale,
    }
