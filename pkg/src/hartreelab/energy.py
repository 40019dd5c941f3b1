"""Hartree energy functional, interaction term, operator action and residual.

The energy of a field u with interaction kernel w is

    E(u) = 1/2 ||u||_{H^1dot}^2 + 1/4 * iint |u(x)|^2 w(x-y) |u(y)|^2 dx dy.

The quartic term is evaluated through the truncated-kernel symbol on the
zero-padded grid, which costs O(N^3 log N) instead of the O(N^6) double sum
and is exact (to spectral accuracy) for fields that decay inside the box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._fft import fftn, ifftn, irfftn, rfftn
from .grids import Field, Grid, h1_seminorm_sq, k_squared, mass
from .kernels import KernelSpec, KernelSymbol, fourier_symbol

CONV_IMAG_TOL = 1e-10


@dataclass
class EnergyBreakdown:
    """kinetic = 1/2 |u|_{H^1dot}^2, interaction = 1/4 * quartic term."""

    kinetic: float
    interaction: float

    @property
    def total(self) -> float:
        return self.kinetic + self.interaction


def _resolve_symbol(kernel: KernelSpec | KernelSymbol, grid: Grid) -> KernelSymbol:
    if isinstance(kernel, KernelSymbol):
        if kernel.base_grid != grid:
            raise ValueError("kernel symbol was built for a different grid")
        return kernel
    return fourier_symbol(kernel, grid)


def density(u: Field) -> np.ndarray:
    """Pointwise |u|^2 as a real array."""
    v = u.values
    return v.real**2 + v.imag**2


def convolve(symbol: KernelSymbol, rho: np.ndarray) -> np.ndarray:
    """Free-space convolution w * rho of a real density on the base grid.

    Zero-pads rho to the 2N grid, multiplies by the truncated-kernel symbol
    and crops back.  The result is real by construction (real even symbol,
    real input via the Hermitian transform).  Periodic kernel images touch
    only pair distances beyond (2 - sqrt(3)) L, so for fields that decay in
    the box the pollution is weighted away by the density tails.
    """
    N = symbol.base_grid.N
    if rho.shape != (N, N, N):
        raise ValueError("density shape does not match the symbol's base grid")
    if np.iscomplexobj(rho):
        im = float(np.max(np.abs(rho.imag)))
        scale = float(np.max(np.abs(rho.real))) + 1e-300
        if im > CONV_IMAG_TOL * scale:
            raise ValueError("convolve expects a real density (imaginary residue too large)")
        rho = rho.real
    M = symbol.grid.N
    pad = np.zeros((M, M, M), dtype=np.float64)
    pad[:N, :N, :N] = rho
    F = rfftn(pad)
    F *= symbol.half()
    out = irfftn(F, s=(M, M, M))
    return np.ascontiguousarray(out[:N, :N, :N])


def interaction(u: Field, kernel: KernelSpec | KernelSymbol) -> float:
    """Quartic term iint |u(x)|^2 w(x-y) |u(y)|^2 dx dy (<= 0 for the catalog)."""
    sym = _resolve_symbol(kernel, u.grid)
    rho = density(u)
    phi = convolve(sym, rho)
    return float(np.sum(phi * rho) * u.grid.cell_volume)


def energy(u: Field, kernel: KernelSpec | KernelSymbol) -> EnergyBreakdown:
    kin = 0.5 * h1_seminorm_sq(u)
    inter = 0.25 * interaction(u, kernel)
    return EnergyBreakdown(kinetic=kin, interaction=inter)


def hartree_apply(u: Field, kernel: KernelSpec | KernelSymbol) -> Field:
    """H[u] u = -Laplacian(u) + (w * |u|^2) u.

    This is the gradient of the energy in the convention
    d/de E(u + e v)|_0 = Re <v, H[u] u>, verified against centered finite
    differences in the test suite.
    """
    sym = _resolve_symbol(kernel, u.grid)
    phi = convolve(sym, density(u))
    lap = ifftn(k_squared(u.grid) * fftn(u.values))
    return Field(u.grid, lap + phi * u.values)


def multiplier(u: Field, kernel: KernelSpec | KernelSymbol) -> float:
    """Constraint multiplier mu = (|u|_{H^1dot}^2 + quartic) / mass(u)."""
    lam = mass(u)
    if lam <= 0:
        raise ValueError("multiplier of a zero field is undefined")
    return (h1_seminorm_sq(u) + interaction(u, kernel)) / lam


def residual(u: Field, kernel: KernelSpec | KernelSymbol) -> float:
    """Relative defect ||H[u]u - mu u||_L2 / ||u||_L2 of the stationary equation."""
    lam = mass(u)
    if lam <= 0:
        raise ValueError("residual of a zero field is undefined")
    hu = hartree_apply(u, kernel)
    mu = (h1_seminorm_sq(u) + interaction(u, kernel)) / lam
    diff = hu.values - mu * u.values
    return float(np.sqrt(np.sum(diff.real**2 + diff.imag**2) * u.grid.cell_volume / lam))
