"""Decreasing rearrangements, Lorentz quasi-norms, kernel splitting constants.

The splitting machinery quantifies how much of a kernel must be treated as a
weak-L^{3/2} core: C2 is the infimal core quasi-norm over bounded-tail
splittings, K is a universal ratio constant bounding the quartic term, and
1/(C2*K) caps the masses for which the energy stays coercive.  K is only ever
reported as a lower bound obtained from a documented trial family; the
variational supremum itself is not computable from below and above at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import interaction
from .grids import Field, Grid, coords, gaussian_field, h1_seminorm_sq, mass
from .kernels import KernelSpec, gaussian_well, compact_well, level_radius, power_law, yukawa

BALL_VOLUME_COEFF = 4.0 * math.pi / 3.0

#: Ratio attained by a Gaussian trial against the inverse-square kernel;
#: equals 2 / (3 * (4 pi / 3)^(2/3)) exactly and is the default certified
#: lower bound for the universal constant K.
GAUSSIAN_INVERSE_SQUARE_RATIO = 2.0 / (3.0 * BALL_VOLUME_COEFF ** (2.0 / 3.0))


@dataclass
class RearrangementProfile:
    """Magnitudes of a field sorted non-increasingly, with the cell volume."""

    values: np.ndarray
    cell_volume: float


def decreasing_rearrangement(u: Field) -> RearrangementProfile:
    mags = np.abs(u.values).ravel()
    mags = np.sort(mags)[::-1]
    return RearrangementProfile(np.ascontiguousarray(mags), u.grid.cell_volume)


def lorentz_quasinorm(profile: RearrangementProfile, p: float, q: float = math.inf) -> float:
    """Discrete L^{p,q} quasi-norm of the rearrangement profile.

    q = inf:   max_i  f*_i (i h^3)^{1/p}
    finite q: (sum_i f*_i^q (i h^3)^{q/p} / i)^{1/q}, the step-function
               Riemann sum of the t^{1/p} f*(t) integral against dt/t; for
               q = p it reproduces the L^p quadrature norm exactly.
    """
    if p <= 1:
        raise ValueError("p must be > 1")
    if q != math.inf and q < 1:
        raise ValueError("q must be >= 1 or inf")
    f = profile.values
    nz = int(np.count_nonzero(f))
    if nz == 0:
        return 0.0
    f = f[:nz]
    t = np.arange(1, nz + 1, dtype=float) * profile.cell_volume
    if q == math.inf:
        return float(np.max(f * t ** (1.0 / p)))
    return float(np.sum(f**q * t ** (q / p) / np.arange(1, nz + 1)) ** (1.0 / q))


# ---------------------------------------------------------------------------
# Weak norms of radial kernels from exact level-set volumes
# ---------------------------------------------------------------------------


def weak_norm_analytic(
    spec: KernelSpec,
    p: float = 1.5,
    r_min: float = 0.0,
    r_max: float = math.inf,
) -> float:
    """L^{p,inf} quasi-norm of |w| restricted to the radial window (r_min, r_max].

    Uses sup_t t |{|w| > t}|^{1/p} with the exact ball/shell volumes of the
    radially non-increasing catalog kernels.  Returns math.inf when the sup
    diverges (e.g. any untruncated power-law tail slower than r^{-3/p}).
    """
    if p <= 1:
        raise ValueError("p must be > 1")
    g = spec.g

    if spec.family == "power_law" and r_min == 0.0:
        a = spec.alpha
        if math.isinf(r_max):
            # t |B(g/t)^{1/a}|^{1/p} = c * t^{1 - 3/(a p)}: finite iff a p = 3
            if a * p == 3.0:
                return BALL_VOLUME_COEFF ** (1.0 / p) * g
            return math.inf
        # core w * 1_{r <= R}: sup at the level t = g R^-a when a p <= 3
        if a * p > 3.0:
            return math.inf
        return BALL_VOLUME_COEFF ** (1.0 / p) * g * r_max ** (3.0 / p - a)

    def shell_volume(t: float) -> float:
        r_t = level_radius(spec, t)
        hi = min(r_t, r_max)
        if hi <= r_min:
            return 0.0
        return BALL_VOLUME_COEFF * (hi**3 - r_min**3)

    def phi(t: float) -> float:
        v = shell_volume(t)
        return t * v ** (1.0 / p) if v > 0 else 0.0

    # closed-form shortcuts for full-kernel windows
    if r_min == 0.0 and math.isinf(r_max):
        if spec.family == "gaussian_well":
            # sup of t * (4pi/3)^{1/p} sigma^{3/p} ln(g/t)^{3/(2p)}
            ts = g * math.exp(-1.5 / p)
            return phi(ts)
        if spec.family == "compact_well":
            return BALL_VOLUME_COEFF ** (1.0 / p) * g * spec.r0 ** (3.0 / p)

    # generic: sup over a log grid in t, refined around the best point
    t_ref = g if spec.family != "power_law" else g * max(r_min, 1e-6) ** (-spec.alpha)
    grid_t = t_ref * np.logspace(-10, 10, 481)
    vals = np.array([phi(t) for t in grid_t])
    i = int(np.argmax(vals))
    best = vals[i]
    # divergence check: growth persisting at the grid ends
    if i == 0 or i == len(grid_t) - 1:
        edge = phi(grid_t[i] * (1e-3 if i == 0 else 1e3))
        if edge > best * (1.0 + 1e-9):
            return math.inf
    lo = grid_t[max(i - 1, 0)]
    hi = grid_t[min(i + 1, len(grid_t) - 1)]
    fine = np.geomspace(lo, hi, 200)
    return float(max(best, max(phi(t) for t in fine)))


def c2_split_scan(spec: KernelSpec, radii: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Core quasi-norms ||w 1_{r<=R}||_{3/2,inf} over a logarithmic split grid."""
    if radii is None:
        radii = np.logspace(-3, 2, 26)
    norms = np.array([weak_norm_analytic(spec, 1.5, r_max=float(R)) for R in radii])
    return radii, norms


def c2_estimate(spec: KernelSpec) -> float:
    """Infimal weak-L^{3/2} core norm over bounded-tail splittings of the kernel.

    Threshold splittings w = w 1_{r>R} + w 1_{r<=R} realize the infimum for
    the radial catalog: every kernel in L^{3/2} and every power law softer
    than r^-2 admits arbitrarily small cores (the scan norms vanish with R),
    while the critical r^-2 core norm is R-independent.
    """
    if spec.family == "power_law":
        if spec.alpha < 2.0:
            return 0.0
        return BALL_VOLUME_COEFF ** (2.0 / 3.0) * spec.g
    if spec.is_L32:
        return 0.0
    raise ValueError(f"no bounded-tail splitting known for {spec.label()}")


def lambda_star_upper(c2: float, k_est: float) -> float:
    """Coercivity mass ceiling 1/(C2 * K).

    Computed with a certified lower bound for K, so the returned value is an
    upper estimate for the true ceiling; it is infinite when C2 vanishes.
    """
    if k_est <= 0:
        raise ValueError("k_est must be positive")
    if c2 < 0:
        raise ValueError("c2 must be nonnegative")
    if c2 == 0.0:
        return math.inf
    return 1.0 / (c2 * k_est)


# ---------------------------------------------------------------------------
# Lower bounds for the universal quartic-term constant K
# ---------------------------------------------------------------------------


def k_ratio(u: Field, spec: KernelSpec) -> float:
    """|quartic(u, w)| / (||w||_{3/2,inf} ||u||_L2^2 |u|_{H^1dot}^2) for one trial."""
    lam = mass(u)
    if lam <= 0:
        raise ValueError("zero trial field")
    wnorm = weak_norm_analytic(spec, 1.5)
    if not math.isfinite(wnorm):
        raise ValueError(f"{spec.label()} is not in weak L^(3/2)")
    return abs(interaction(u, spec)) / (wnorm * lam * h1_seminorm_sq(u))


def default_k_trial_family(grid: Grid) -> tuple[list[Field], list[KernelSpec]]:
    """Documented trial family: centered Gaussians at 5 dilations x 4 kernels."""
    sigmas = [0.5, 1.0 / math.sqrt(2.0), 1.0, math.sqrt(2.0), 2.0]
    fields = [gaussian_field(grid, s, mass_target=1.0) for s in sigmas]
    specs = [power_law(2.0), gaussian_well(1.0, 1.0), yukawa(1.0, 1.0), compact_well(1.0, 1.0)]
    return fields, specs


def k_lower_bound(
    trial_fields: list[Field],
    trial_kernels: list[KernelSpec],
) -> tuple[float, list[dict]]:
    """Certified lower bound for K: the best ratio over the trial family.

    Returns (max ratio, per-trial records).  The true constant satisfies
    K >= max ratio; no upper certificate is attempted.
    """
    if not trial_fields or not trial_kernels:
        raise ValueError("empty trial family")
    records = []
    best = 0.0
    for spec in trial_kernels:
        for i, u in enumerate(trial_fields):
            r = k_ratio(u, spec)
            records.append({"kernel": spec.label(), "trial": i, "ratio": r})
            best = max(best, r)
    return best, records


# ---------------------------------------------------------------------------
# Symmetric decreasing rearrangement on the grid
# ---------------------------------------------------------------------------


def _rearrangement_order(grid: Grid) -> np.ndarray:
    """Cells ranked by distance to the box center; ties by flat index (ix fastest)."""
    X, Y, Z = coords(grid)
    r2 = (X**2 + Y**2 + Z**2).ravel(order="F")
    return np.argsort(r2, kind="stable")


def symmetric_decreasing_rearrangement(u: Field) -> Field:
    """Equimeasurable field with |u| radially non-increasing about the center."""
    g = u.grid
    order = _rearrangement_order(g)
    mags = np.sort(np.abs(u.values).ravel())[::-1]
    out = np.empty(g.N**3, dtype=np.complex128)
    out[order] = mags
    return Field(g, out.reshape((g.N,) * 3, order="F"))
