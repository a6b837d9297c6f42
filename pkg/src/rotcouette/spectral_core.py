"""Discretization of T x R x T and spectral field storage.

The y-direction (R in the continuum problem) is approximated by a periodic
box of length ``ly``. Coefficients follow a Riemann-sum version of the
continuum inversion formula

    phi(x, y, z) = sum_{k, l} sum_eta c(k, eta, l) exp(i(kx + eta y + lz)) d_eta,

so that ``sum |c|^2 d_eta`` approximates the continuum L^2 norm (measure
dx dy dz / (2 pi)^3). Arrays are indexed ``(component, k, eta, l)`` in FFT
order along every axis.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Number of threads handed to scipy.fft (results do not depend on it)."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


class Frame(enum.IntEnum):
    STATIONARY = 0
    MOVING = 1


class ModeClass(enum.Enum):
    DOUBLE_ZERO = "double_zero"  # k = 0, l = 0
    SIMPLE_ZERO = "simple_zero"  # k = 0, l != 0
    NONZERO = "nonzero"  # k != 0


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    nz: int
    ly: float = 2 * math.pi * 16
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if n < 4 or n % 2:
                raise ValueError(f"{name} must be even and >= 4, got {n}")
        if not self.ly > 0:
            raise ValueError(f"ly must be positive, got {self.ly}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def d_eta(self) -> float:
        return 2 * math.pi / self.ly

    @cached_property
    def k(self) -> np.ndarray:
        return np.fft.fftfreq(self.nx, 1.0 / self.nx)

    @cached_property
    def eta(self) -> np.ndarray:
        return self.d_eta * np.fft.fftfreq(self.ny, 1.0 / self.ny)

    @cached_property
    def l(self) -> np.ndarray:  # noqa: E743
        return np.fft.fftfreq(self.nz, 1.0 / self.nz)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (k, eta, l) arrays of shapes (nx,1,1), (1,ny,1), (1,1,nz)."""
        return (
            self.k[:, None, None],
            self.eta[None, :, None],
            self.l[None, None, :],
        )

    def _cutoff(self, n: int) -> int:
        # largest kept index K with 3K < n, i.e. exact dealiasing for f = 2/3
        return max(0, math.ceil(self.dealias_fraction * n / 2) - 1)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean (nx, ny, nz) mask of retained modes (box truncation per axis)."""
        masks = []
        for n in self.shape:
            idx = np.fft.fftfreq(n, 1.0 / n)
            masks.append(np.abs(idx) <= self._cutoff(n))
        mx, my, mz = masks
        mask = mx[:, None, None] & my[None, :, None] & mz[None, None, :]
        mask.setflags(write=False)
        return mask

    def class_mask(self, cls: ModeClass) -> np.ndarray:
        k, _, l = self.mesh
        kk = np.broadcast_to(k, self.shape)
        ll = np.broadcast_to(l, self.shape)
        if cls is ModeClass.DOUBLE_ZERO:
            return (kk == 0) & (ll == 0)
        if cls is ModeClass.SIMPLE_ZERO:
            return (kk == 0) & (ll != 0)
        return kk != 0

    def shear_eta(self, t: float) -> np.ndarray:
        """eta - k t on the lattice, shape (nx, ny, 1)."""
        k, eta, _ = self.mesh
        return eta - k * t

    def kappa2(self, t: float) -> np.ndarray:
        """|k, eta - kt, l|^2 on the lattice, shape (nx, ny, nz)."""
        k, _, l = self.mesh
        return k**2 + self.shear_eta(t) ** 2 + l**2

    def bracket(self) -> np.ndarray:
        """<k, eta, l> = sqrt(1 + |k, eta, l|^2) (stationary labels)."""
        k, eta, l = self.mesh
        return np.sqrt(1.0 + k**2 + eta**2 + l**2)

    def physical_coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = 2 * math.pi * np.arange(self.nx) / self.nx
        y = self.ly * np.arange(self.ny) / self.ny
        z = 2 * math.pi * np.arange(self.nz) / self.nz
        return x, y, z


@dataclass(frozen=True)
class ModeIndex:
    k: int
    eta: float
    l: int

    @property
    def is_zero(self) -> bool:
        return self.k == 0 and self.eta == 0 and self.l == 0

    @property
    def norm2(self) -> float:
        return float(self.k**2 + self.eta**2 + self.l**2)

    @property
    def mode_class(self) -> ModeClass:
        if self.k != 0:
            return ModeClass.NONZERO
        return ModeClass.SIMPLE_ZERO if self.l != 0 else ModeClass.DOUBLE_ZERO


@dataclass(frozen=True)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray
    frame: Frame = Frame.MOVING
    time: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == 3:
            c = c[None]
        if c.ndim != 4 or c.shape[1:] != self.grid.shape or c.shape[0] not in (1, 3):
            raise ValueError(
                f"coeffs must have shape (1|3, {self.grid.shape}), got {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, grid: Grid, components: int = 3, frame: Frame = Frame.MOVING, time: float = 0.0):
        return cls(grid, np.zeros((components,) + grid.shape, complex), frame, time)

    def replace(self, coeffs: np.ndarray | None = None, time: float | None = None) -> "SpectralField":
        return SpectralField(
            self.grid,
            self.coeffs if coeffs is None else coeffs,
            self.frame,
            self.time if time is None else time,
        )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_compatible(self, other)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_compatible(self, other)
        return self.replace(self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return l2_norm(self)

    def to_physical(self) -> np.ndarray:
        return inverse(self.coeffs, self.grid)


def _check_compatible(f: SpectralField, g: SpectralField) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {g.grid}")
    if f.frame != g.frame:
        raise GridMismatchError("frame mismatch")
    # moving-frame symbols depend on t; allow accumulated round-off only
    if not math.isclose(f.time, g.time, rel_tol=1e-12, abs_tol=1e-12):
        raise GridMismatchError(f"time mismatch: {f.time} vs {g.time}")


# --- transforms -----------------------------------------------------------

def forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Physical samples (..., nx, ny, nz) -> coefficients in the module's convention."""
    scale = grid.ly / (2 * math.pi) / (grid.nx * grid.ny * grid.nz)
    return scipy.fft.fftn(values, axes=(-3, -2, -1), workers=_FFT_WORKERS) * scale


def inverse(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Coefficients -> real physical samples. Imaginary round-off is discarded."""
    scale = grid.d_eta * grid.nx * grid.ny * grid.nz
    return scipy.fft.ifftn(coeffs, axes=(-3, -2, -1), workers=_FFT_WORKERS).real * scale


def from_physical(values: np.ndarray, grid: Grid, frame: Frame = Frame.MOVING, time: float = 0.0) -> SpectralField:
    return SpectralField(grid, forward(np.asarray(values, float), grid), frame, time)


def physical_l2_norm(values: np.ndarray, grid: Grid) -> float:
    """L^2 norm w.r.t. dx dy dz / (2 pi)^3 of real samples on the grid."""
    v = np.asarray(values, float)
    return math.sqrt(float(np.sum(v * v)) / (grid.nx * grid.ny * grid.nz) * grid.ly / (2 * math.pi))


def l2_norm(f: SpectralField) -> float:
    return math.sqrt(float(np.sum(np.abs(f.coeffs) ** 2)) * f.grid.d_eta)


def conjugate_partner(coeffs: np.ndarray) -> np.ndarray:
    """c(-k, -eta, -l) rearranged onto the (k, eta, l) positions."""
    flipped = np.flip(coeffs, axis=(-3, -2, -1))
    return np.roll(flipped, 1, axis=(-3, -2, -1))


def conjugate_symmetry_error(f: SpectralField | np.ndarray) -> float:
    c = f.coeffs if isinstance(f, SpectralField) else f
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(conjugate_partner(c) - np.conj(c)))) / scale


def symmetrize(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(conjugate_partner(coeffs)))


# --- symbols --------------------------------------------------------------

def shear_frequency(mode: ModeIndex, t: float) -> float:
    """y-frequency eta - k t of the moving-frame derivative at time t."""
    return mode.eta - mode.k * t


def laplacian_L_symbol(mode: ModeIndex, t: float) -> float:
    return -(mode.k**2 + shear_frequency(mode, t) ** 2 + mode.l**2)


def project_modes(f: SpectralField, cls: ModeClass) -> SpectralField:
    mask = f.grid.class_mask(cls)
    return f.replace(np.where(mask[None], f.coeffs, 0))


def dealias(f: SpectralField) -> SpectralField:
    return f.replace(np.where(f.grid.dealias_mask[None], f.coeffs, 0))


def convolve_dealiased(f: SpectralField, g: SpectralField) -> SpectralField:
    """Coefficients of the pointwise product f * g, truncated to the dealias box.

    A scalar factor multiplies every component of a vector factor.
    """
    _check_compatible(f, g)
    if f.components != g.components and 1 not in (f.components, g.components):
        raise ValueError("component counts must match or one field must be scalar")
    grid = f.grid
    mask = grid.dealias_mask[None]
    pf = inverse(np.where(mask, f.coeffs, 0), grid)
    pg = inverse(np.where(mask, g.coeffs, 0), grid)
    prod = forward(pf * pg, grid)
    return f.replace(np.where(mask, prod, 0))


# --- snapshot format ------------------------------------------------------

SNAPSHOT_MAGIC = b"RCSF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIddI")


def write_snapshot(path: str | Path, f: SpectralField) -> None:
    """Binary snapshot: header then interleaved little-endian (re, im) float64."""
    g = f.grid
    header = _HEADER.pack(
        SNAPSHOT_MAGIC, SNAPSHOT_VERSION, f.components, g.nx, g.ny, g.nz,
        float(g.ly), float(f.time), int(f.frame),
    )
    body = np.ascontiguousarray(f.coeffs).astype("<c16").view("<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes())


def read_snapshot(path: str | Path, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, comps, nx, ny, nz, ly, time, frame = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    n = comps * nx * ny * nz
    expected = _HEADER.size + 16 * n
    if len(data) != expected:
        raise ValueError(f"snapshot size {len(data)} != expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    coeffs = (flat[0::2] + 1j * flat[1::2]).reshape(comps, nx, ny, nz)
    grid = Grid(nx, ny, nz, ly, dealias_fraction)
    return SpectralField(grid, coeffs, Frame(frame), time)


# --- moving-frame vector calculus -------------------------------------------

def wavevector(grid: Grid, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(k, eta - kt, l) broadcast to the full lattice: symbol of -i grad_L."""
    k, _, l = grid.mesh
    shape = grid.shape
    return (
        np.broadcast_to(k, shape),
        np.broadcast_to(grid.shear_eta(t), shape),
        np.broadcast_to(l, shape),
    )


def divergence_residual(u: SpectralField) -> float:
    """max |kappa . u| / max |kappa| |u|, evaluated at the field's time."""
    if u.components != 3:
        raise ValueError("divergence needs a 3-component field")
    kv = wavevector(u.grid, u.time if u.frame == Frame.MOVING else 0.0)
    div = sum(kv[i] * u.coeffs[i] for i in range(3))
    scale = float(np.max(np.sqrt(u.grid.kappa2(u.time if u.frame == Frame.MOVING else 0.0))
                         * np.sqrt(np.sum(np.abs(u.coeffs) ** 2, axis=0))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(div))) / scale


def leray_project(u: SpectralField) -> SpectralField:
    """Remove the gradient part of a vector field w.r.t. grad_L at the field's time.

    At the origin only the y-component is removed, matching the limit of the
    double-zero lattice (0, eta -> 0, 0).
    """
    t = u.time if u.frame == Frame.MOVING else 0.0
    kv = wavevector(u.grid, t)
    k2 = u.grid.kappa2(t)
    safe = np.where(k2 == 0, 1.0, k2)
    div = sum(kv[i] * u.coeffs[i] for i in range(3)) / safe
    out = np.array([u.coeffs[i] - kv[i] * div for i in range(3)])
    origin = k2 == 0
    out[1][origin] = 0.0
    return u.replace(out)
