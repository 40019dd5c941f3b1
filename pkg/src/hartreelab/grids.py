"""Periodic cubic grids, complex fields, spectral transforms and norms."""

from __future__ import annotations

import functools
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._fft import fftn, ifftn

HFLD_MAGIC = b"HFLD"
HFLD_VERSION = 1

# A field whose boundary amplitude exceeds this fraction of its peak no longer
# represents a decaying state on the open domain; callers get warned.
BOUNDARY_WARN_RATIO = 1e-6


class BoundaryLeakWarning(UserWarning):
    """Field amplitude at the box faces is no longer negligible."""


@dataclass(frozen=True)
class Grid:
    """Uniform N^3 discretization of the periodic cube [-L/2, L/2)^3.

    Sample points per axis are x_i = i*h - L/2 with h = L/N, and the
    wavenumbers are k_m = 2*pi*m/L for m in {-N/2, ..., N/2 - 1}.
    """

    N: int
    L: float

    def __post_init__(self):
        if self.N % 2 != 0:
            raise ValueError("N must be even")
        if self.N < 8:
            raise ValueError("N must be at least 8")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def padded(self) -> "Grid":
        """The 2N grid of side 2L used for free-space convolutions."""
        return Grid(2 * self.N, 2.0 * self.L)

    def axis(self) -> np.ndarray:
        return np.arange(self.N) * self.h - self.L / 2.0

    def k_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)


def make_grid(N: int, L: float) -> Grid:
    return Grid(int(N), float(L))


@functools.lru_cache(maxsize=32)
def coords(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = grid.axis()
    return np.meshgrid(x, x, x, indexing="ij")


@functools.lru_cache(maxsize=32)
def radius_sq(grid: Grid) -> np.ndarray:
    X, Y, Z = coords(grid)
    return X**2 + Y**2 + Z**2


@functools.lru_cache(maxsize=32)
def k_squared(grid: Grid) -> np.ndarray:
    k = grid.k_axis()
    KX, KY, KZ = np.meshgrid(k, k, k, indexing="ij")
    return KX**2 + KY**2 + KZ**2


@functools.lru_cache(maxsize=32)
def _center_sign(grid: Grid) -> np.ndarray:
    # (-1)^(mx+my+mz): converts numpy's origin-at-index-0 DFT into the
    # transform anchored at the box center x = 0.
    m = np.fft.fftfreq(grid.N, d=1.0 / grid.N).astype(np.int64)
    s = np.where(m % 2 == 0, 1.0, -1.0)
    return s[:, None, None] * s[None, :, None] * s[None, None, :]


@dataclass
class Field:
    """Complex samples of a function on a :class:`Grid` (axes ix, iy, iz)."""

    grid: Grid
    values: np.ndarray

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclass
class SpectralField:
    """DFT coefficients u_hat(k) = h^3 * sum_x u(x) e^{-i k.x}."""

    grid: Grid
    coefficients: np.ndarray


def make_field(grid: Grid, values: np.ndarray) -> Field:
    """Validate and wrap raw samples as a Field (copies to complex128)."""
    arr = np.asarray(values)
    shape = (grid.N,) * 3
    if arr.shape != shape:
        raise ValueError(f"values shape {arr.shape} does not match grid {shape}")
    arr = np.ascontiguousarray(arr, dtype=np.complex128)
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ValueError("field contains non-finite samples")
    return Field(grid, arr)


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros((grid.N,) * 3, dtype=np.complex128))


def gaussian_field(
    grid: Grid,
    sigma: float,
    center: tuple[float, float, float] = (0.0, 0.0, 0.0),
    amplitude: complex = 1.0,
    mass_target: float | None = None,
) -> Field:
    """Gaussian bump amplitude*exp(-|x-c|^2 / (2 sigma^2)), optionally rescaled
    so that its squared L2 norm equals mass_target."""
    X, Y, Z = coords(grid)
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2 + (Z - center[2]) ** 2
    u = Field(grid, amplitude * np.exp(-r2 / (2.0 * sigma**2)).astype(np.complex128))
    if mass_target is not None:
        u = normalize_mass(u, mass_target)
    return u


def smooth_random_field(
    grid: Grid,
    rng: np.random.Generator,
    n_bumps: int = 6,
    complex_amplitudes: bool = True,
    spread: float = 0.25,
) -> Field:
    """Random superposition of Gaussian bumps, smooth and decaying at the faces.

    Centers are drawn inside the inner `2*spread` fraction of the box so the
    samples stay representative of fields on the open domain.
    """
    L = grid.L
    X, Y, Z = coords(grid)
    vals = np.zeros((grid.N,) * 3, dtype=np.complex128)
    for _ in range(n_bumps):
        c = rng.uniform(-spread * L, spread * L, size=3)
        w = rng.uniform(L / 16.0, L / 6.0)
        if complex_amplitudes:
            a = rng.normal() + 1j * rng.normal()
        else:
            a = abs(rng.normal()) + 0.05
        r2 = (X - c[0]) ** 2 + (Y - c[1]) ** 2 + (Z - c[2]) ** 2
        vals += a * np.exp(-r2 / (2.0 * w**2))
    return Field(grid, vals)


def _check_same_grid(u: Field, v: Field) -> None:
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")


def mass(u: Field) -> float:
    """Squared L2 norm h^3 * sum |u|^2 (the conserved particle number)."""
    v = u.values.ravel()
    return float(np.vdot(v, v).real) * u.grid.cell_volume


def normalize_mass(u: Field, target: float) -> Field:
    m = mass(u)
    if m <= 0.0:
        raise ValueError("cannot normalize a zero field")
    return Field(u.grid, u.values * np.sqrt(target / m))


def lp_norm(u: Field, p: float) -> float:
    """Quadrature L^p norm (h^3 sum |u|^p)^(1/p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(u.values)
    if p == 2:
        return float(np.sqrt(np.sum(a**2) * u.grid.cell_volume))
    return float((np.sum(a**p) * u.grid.cell_volume) ** (1.0 / p))


def inner(u: Field, v: Field) -> complex:
    """L2 pairing h^3 * sum conj(u) v (conjugate-linear in the first slot)."""
    _check_same_grid(u, v)
    return complex(np.vdot(u.values.ravel(), v.values.ravel()) * u.grid.cell_volume)


def h1_seminorm_sq(u: Field) -> float:
    """Squared homogeneous H^1 seminorm, L^-3 * sum |k|^2 |u_hat(k)|^2."""
    g = u.grid
    F = fftn(u.values)
    # h^6 / L^3 = h^3 / N^3 collects the DFT and quadrature weights.
    return float(np.sum(k_squared(g) * (F.real**2 + F.imag**2)) * g.cell_volume / g.N**3)


def h1_norm_sq(u: Field) -> float:
    return mass(u) + h1_seminorm_sq(u)


def forward(u: Field) -> SpectralField:
    """Forward transform with the box-centered phase convention."""
    g = u.grid
    coeff = fftn(u.values) * (_center_sign(g) * g.cell_volume)
    return SpectralField(g, coeff)


def inverse(s: SpectralField) -> Field:
    g = s.grid
    vals = ifftn(s.coefficients * _center_sign(g)) / g.cell_volume
    return Field(g, vals)


def translate(u: Field, shift: tuple[int, int, int]) -> Field:
    """Circular shift by whole cells (periodic translation)."""
    return Field(u.grid, np.roll(u.values, shift, axis=(0, 1, 2)))


def boundary_amplitude_ratio(u: Field) -> float:
    """max |u| over the six outermost faces divided by max |u| overall."""
    a = np.abs(u.values)
    peak = a.max()
    if peak == 0.0:
        return 0.0
    faces = max(
        a[0, :, :].max(), a[-1, :, :].max(),
        a[:, 0, :].max(), a[:, -1, :].max(),
        a[:, :, 0].max(), a[:, :, -1].max(),
    )
    return float(faces / peak)


def warn_if_boundary_leak(u: Field, context: str = "field") -> float:
    ratio = boundary_amplitude_ratio(u)
    if ratio > BOUNDARY_WARN_RATIO:
        warnings.warn(
            f"{context}: boundary amplitude is {ratio:.2e} of the peak; "
            "increase the box size L for an accurate open-domain answer",
            BoundaryLeakWarning,
            stacklevel=3,
        )
    return ratio


# ---------------------------------------------------------------------------
# HFLD snapshot format: little-endian, magic 'HFLD', uint32 version, uint32 N,
# float64 L, then N^3 (re, im) float64 pairs with ix varying fastest.
# ---------------------------------------------------------------------------

_HFLD_HEADER = struct.Struct("<4sII d")


def save_field(u: Field, path: str | Path) -> None:
    path = Path(path)
    payload = np.ascontiguousarray(u.values.ravel(order="F"), dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(_HFLD_HEADER.pack(HFLD_MAGIC, HFLD_VERSION, u.grid.N, u.grid.L))
        fh.write(payload.tobytes())


def load_field(path: str | Path) -> Field:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HFLD_HEADER.size or raw[:4] != HFLD_MAGIC:
        raise ValueError(f"{path}: not an HFLD file")
    magic, version, N, L = _HFLD_HEADER.unpack_from(raw)
    if version != HFLD_VERSION:
        raise ValueError(f"{path}: unsupported HFLD version {version}")
    expected = _HFLD_HEADER.size + 16 * N**3
    if len(raw) != expected:
        raise ValueError(f"{path}: corrupt snapshot (size {len(raw)}, expected {expected})")
    grid = Grid(N, L)
    flat = np.frombuffer(raw, dtype="<c16", offset=_HFLD_HEADER.size)
    values = flat.reshape((N, N, N), order="F").astype(np.complex128)
    return Field(grid, values)
