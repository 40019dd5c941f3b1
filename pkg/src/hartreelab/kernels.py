"""Catalog of attractive interaction potentials and their truncated Fourier symbols.

Convolutions against these kernels are evaluated in symbol space on a
zero-padded 2N grid.  The symbol is the exact continuum transform of the
kernel truncated at L_t = sqrt(3) * L,

    w_hat_T(k) = (4 pi / |k|) * int_0^{L_t} r sin(|k| r) W(r) dr,

which is an entire function of k even for kernels singular at the origin, so
the lattice sampling below is spectrally accurate.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import sici

from .grids import Grid

TRUNCATION_FACTOR = math.sqrt(3.0)

_QUAD_REL_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Adaptive quadrature for a kernel symbol failed to converge."""


@dataclass(frozen=True)
class KernelSpec:
    """Radial interaction potential w(x) = W(|x|).

    Families (all attractive where nonzero):
      power_law     W(r) = -g r^-alpha, 0 < alpha <= 2
      gaussian_well W(r) = -g exp(-r^2 / sigma^2)
      yukawa        W(r) = -g exp(-m r) / r
      compact_well  W(r) = -g for r <= r0, else 0
    """

    family: str
    g: float = 1.0
    alpha: float | None = None
    sigma: float | None = None
    m: float | None = None
    r0: float | None = None

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("strength g must be positive")
        if self.family == "power_law":
            if self.alpha is None or not 0.0 < self.alpha <= 2.0:
                raise ValueError("power_law requires 0 < alpha <= 2")
        elif self.family == "gaussian_well":
            if self.sigma is None or self.sigma <= 0:
                raise ValueError("gaussian_well requires sigma > 0")
        elif self.family == "yukawa":
            if self.m is None or self.m <= 0:
                raise ValueError("yukawa requires m > 0")
        elif self.family == "compact_well":
            if self.r0 is None or self.r0 <= 0:
                raise ValueError("compact_well requires r0 > 0")
        else:
            raise ValueError(f"unknown kernel family {self.family!r}")

    @property
    def is_radial_nondecreasing(self) -> bool:
        # -|W| increases toward zero with r for every catalog family.
        return True

    @property
    def is_L32(self) -> bool:
        """Membership in L^{3/2}(R^3).  Power laws fail it through the slow tail."""
        return self.family != "power_law"

    @property
    def singular_at_origin(self) -> bool:
        return self.family in ("power_law", "yukawa")

    def label(self) -> str:
        if self.family == "power_law":
            return f"power_law(alpha={self.alpha}, g={self.g})"
        if self.family == "gaussian_well":
            return f"gaussian_well(g={self.g}, sigma={self.sigma})"
        if self.family == "yukawa":
            return f"yukawa(g={self.g}, m={self.m})"
        return f"compact_well(g={self.g}, r0={self.r0})"


def power_law(alpha: float, g: float = 1.0) -> KernelSpec:
    return KernelSpec("power_law", g=g, alpha=alpha)


def coulomb(g: float = 1.0) -> KernelSpec:
    return power_law(1.0, g=g)


def gaussian_well(g: float = 1.0, sigma: float = 1.0) -> KernelSpec:
    return KernelSpec("gaussian_well", g=g, sigma=sigma)


def yukawa(g: float = 1.0, m: float = 1.0) -> KernelSpec:
    return KernelSpec("yukawa", g=g, m=m)


def compact_well(g: float = 1.0, r0: float = 1.0) -> KernelSpec:
    return KernelSpec("compact_well", g=g, r0=r0)


def kernel_value(spec: KernelSpec, r):
    """W(r) for r > 0 (vectorized); the singular families diverge as r -> 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("kernel_value requires r > 0")
    if spec.family == "power_law":
        return -spec.g * r ** (-spec.alpha)
    if spec.family == "gaussian_well":
        return -spec.g * np.exp(-(r**2) / spec.sigma**2)
    if spec.family == "yukawa":
        return -spec.g * np.exp(-spec.m * r) / r
    return np.where(r <= spec.r0, -spec.g, 0.0)


def level_radius(spec: KernelSpec, t: float) -> float:
    """Radius of the super-level set {|w| > t} (|W| is radially non-increasing)."""
    g = spec.g
    if t <= 0:
        return math.inf
    if spec.family == "power_law":
        return (g / t) ** (1.0 / spec.alpha)
    if spec.family == "gaussian_well":
        return spec.sigma * math.sqrt(math.log(g / t)) if t < g else 0.0
    if spec.family == "compact_well":
        return spec.r0 if t < g else 0.0
    # yukawa: g e^{-m r} / r = t has a unique positive root
    from scipy.optimize import brentq

    f = lambda r: g * math.exp(-spec.m * r) / r - t
    lo = 1e-12
    hi = 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    return float(brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))


def catalog_attributes(spec: KernelSpec) -> dict:
    """Flags used to pick the diagnostics applicable to a kernel."""
    return {
        "family": spec.family,
        "label": spec.label(),
        "is_radial_nondecreasing": spec.is_radial_nondecreasing,
        "is_L32": spec.is_L32,
        "singular_at_origin": spec.singular_at_origin,
        "attractive": True,
    }


# ---------------------------------------------------------------------------
# Radial transforms of the truncated kernel
# ---------------------------------------------------------------------------


def _power_series_sin_int(alpha: float, kappa: np.ndarray, eps: float) -> np.ndarray:
    """int_0^eps r^{1-alpha} sin(kappa r) dr by its absolutely convergent series."""
    out = np.zeros_like(kappa)
    term_k = kappa.copy()  # kappa^{2j+1} running power
    fact = 1.0
    for j in range(16):
        expo = 2 * j + 3 - alpha
        out += ((-1) ** j) * term_k * eps**expo / (fact * expo)
        term_k = term_k * kappa * kappa
        fact *= (2 * j + 2) * (2 * j + 3)
    return out


def _power_sin_integral(alpha: float, kappa: np.ndarray, L_t: float) -> np.ndarray:
    """int_0^{L_t} r^{1-alpha} sin(kappa r) dr, vectorized over kappa > 0."""
    kmax = float(np.max(kappa))
    eps = min(0.5 / max(kmax, 1e-30), 0.1 * L_t)
    head = _power_series_sin_int(alpha, kappa, eps)
    tail = np.empty_like(kappa)
    f = lambda r: r ** (1.0 - alpha)
    for i, k in enumerate(kappa):
        val, err = quad(f, eps, L_t, weight="sin", wvar=float(k),
                        epsabs=1e-13, epsrel=1e-12,
                        limit=max(200, int(4 * k * L_t / np.pi) + 50))
        scale = abs(val) + abs(head[i]) + 1e-300
        if err > _QUAD_REL_TOL * scale + 1e-13:
            raise QuadratureError(
                f"sin-weighted quadrature did not converge (alpha={alpha}, kappa={k})"
            )
        tail[i] = val
    return head + tail


def radial_symbol(spec: KernelSpec, kappa, L_t: float) -> np.ndarray:
    """Transform of the kernel truncated at radius L_t, at radial wavenumbers kappa."""
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    out = np.empty_like(kappa)
    zero = kappa == 0.0
    nz = ~zero
    k = kappa[nz]
    g = spec.g

    if spec.family == "power_law":
        a = spec.alpha
        if a == 1.0:
            out[nz] = -4.0 * np.pi * g * (1.0 - np.cos(L_t * k)) / k**2
            out[zero] = -2.0 * np.pi * g * L_t**2
        elif a == 2.0:
            si, _ = sici(k * L_t)
            out[nz] = -4.0 * np.pi * g * si / k
            out[zero] = -4.0 * np.pi * g * L_t
        else:
            out[nz] = (-4.0 * np.pi * g / k) * _power_sin_integral(a, k, L_t)
            out[zero] = -4.0 * np.pi * g * L_t ** (3.0 - a) / (3.0 - a)
    elif spec.family == "gaussian_well":
        s = spec.sigma
        if L_t >= 12.0 * s:
            # truncation correction below exp(-144); use the full-space transform
            out[nz] = -g * s**3 * np.pi**1.5 * np.exp(-(s**2) * k**2 / 4.0)
            out[zero] = -g * s**3 * np.pi**1.5
        else:
            return _generic_radial_symbol(spec, kappa, L_t)
    elif spec.family == "yukawa":
        m = spec.m
        damp = math.exp(-m * L_t)
        out[nz] = (
            -4.0 * np.pi * g
            * (k - damp * (k * np.cos(k * L_t) + m * np.sin(k * L_t)))
            / (k * (k**2 + m**2))
        )
        out[zero] = -4.0 * np.pi * g * (1.0 - damp * (1.0 + m * L_t)) / m**2
    else:  # compact_well
        R = min(spec.r0, L_t)
        out[nz] = -4.0 * np.pi * g * (np.sin(k * R) - k * R * np.cos(k * R)) / k**3
        out[zero] = -4.0 * np.pi * g * R**3 / 3.0
    return out


def _generic_radial_symbol(spec: KernelSpec, kappa: np.ndarray, L_t: float) -> np.ndarray:
    """Adaptive-quadrature fallback for regular-at-origin kernels."""
    out = np.empty_like(kappa)

    def rW(r: float) -> float:
        return r * float(kernel_value(spec, max(r, 1e-300)))

    for i, k in enumerate(kappa):
        if k == 0.0:
            val, err = quad(lambda r: r * rW(r), 0.0, L_t, epsabs=1e-13, epsrel=1e-12, limit=400)
            out[i] = 4.0 * np.pi * val
        else:
            val, err = quad(rW, 0.0, L_t, weight="sin", wvar=float(k),
                            epsabs=1e-13, epsrel=1e-12,
                            limit=max(200, int(4 * k * L_t / np.pi) + 50))
            out[i] = 4.0 * np.pi * val / k
        if err > _QUAD_REL_TOL * (abs(val) + 1e-300) + 1e-13:
            raise QuadratureError(f"symbol quadrature did not converge at kappa={k}")
    return out


@dataclass
class KernelSymbol:
    """Sampled truncated-kernel transform on the padded grid of a base grid."""

    spec: KernelSpec
    base_grid: Grid
    grid: Grid          # the padded 2N grid
    L_t: float
    values: np.ndarray  # real, shape (2N, 2N, 2N), fftfreq ordering

    def half(self) -> np.ndarray:
        """Slice matching rfftn output on the padded grid."""
        M = self.grid.N
        return self.values[..., : M // 2 + 1]


_symbol_cache: dict[tuple, KernelSymbol] = {}
_cache_lock = threading.Lock()


def clear_symbol_cache() -> None:
    with _cache_lock:
        _symbol_cache.clear()


def fourier_symbol(spec: KernelSpec, grid: Grid, use_cache: bool = True) -> KernelSymbol:
    """Symbol of the kernel truncated at sqrt(3)*L, sampled on the padded 2N grid.

    Cached per (spec, grid); recomputation is bit-identical.
    """
    key = (spec, grid.N, grid.L)
    if use_cache:
        with _cache_lock:
            hit = _symbol_cache.get(key)
        if hit is not None:
            return hit

    padded = grid.padded
    M = padded.N
    L_t = TRUNCATION_FACTOR * grid.L
    m = np.rint(np.fft.fftfreq(M, d=1.0 / M)).astype(np.int64)
    m2 = m * m
    n2 = m2[:, None, None] + m2[None, :, None] + m2[None, None, :]
    uniq, inv = np.unique(n2, return_inverse=True)
    kappa = (np.pi / grid.L) * np.sqrt(uniq.astype(float))
    vals = radial_symbol(spec, kappa, L_t)
    symbol_values = vals[inv].reshape((M, M, M))
    sym = KernelSymbol(spec, grid, padded, L_t, symbol_values)
    if use_cache:
        with _cache_lock:
            _symbol_cache.setdefault(key, sym)
    return sym
