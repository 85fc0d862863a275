"""Periodic grids, Fourier-represented fields, derivatives and norms.

Convention: c_k = (1/L) * integral over one period of f(x) exp(-i k x) dx, so
||f||_{L^2}^2 = L * sum |c_k|^2.  Grids may carry a period L other than 2*pi;
this is used for the dilated tori of the physical frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import kernels
from .errors import GridError, StructureError

TWO_PI = 2.0 * math.pi


@dataclass
class Tolerances:
    """Numerical thresholds shared across the package; overridable from a run config."""

    hermitian: float = 1e-12
    antiderivative_mean: float = 1e-10
    max_grid_points: int = 2**23


TOL = Tolerances()


def set_tolerances(**overrides) -> None:
    for key, value in overrides.items():
        if not hasattr(TOL, key):
            raise KeyError(f"unknown tolerance {key!r}")
        setattr(TOL, key, type(getattr(TOL, key))(value))


def next_pow2(n: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(int(n), 1))))


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class TorusGrid1D:
    carrier_N: int
    oversample: int
    num_points: int
    period: float = TWO_PI

    ndim = 1

    def __post_init__(self):
        if self.carrier_N < 1 or self.oversample < 1:
            raise GridError("carrier_N and oversample must be positive")
        if not _is_pow2(self.num_points):
            raise GridError(f"num_points={self.num_points} is not a power of two")
        if self.num_points < 24 * self.carrier_N:
            raise GridError(f"num_points={self.num_points} does not resolve the third harmonic of N={self.carrier_N}")

    @property
    def eps(self) -> float:
        return 1.0 / self.carrier_N

    @property
    def shape(self) -> tuple[int]:
        return (self.num_points,)

    @property
    def periods(self) -> tuple[float]:
        return (self.period,)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.num_points) * (self.period / self.num_points)

    @property
    def dx(self) -> float:
        return self.period / self.num_points

    def modes(self) -> tuple[np.ndarray]:
        return (np.fft.fftfreq(self.num_points, 1.0 / self.num_points),)

    def wavenumbers(self) -> tuple[np.ndarray]:
        return (self.modes()[0] * (TWO_PI / self.period),)

    def with_period(self, period: float) -> "TorusGrid1D":
        return TorusGrid1D(self.carrier_N, self.oversample, self.num_points, period)


@dataclass(frozen=True)
class TorusGrid2D:
    """Anisotropic grid: x-oscillation at k1*N, y-oscillation at k2*N^2."""

    carrier_Nx: int
    num_points_x: int
    num_points_y: int
    k1: int = 1
    k2: int = 1

    ndim = 2
    period = TWO_PI

    def __post_init__(self):
        if self.carrier_Nx < 1:
            raise GridError("carrier_Nx must be positive")
        if self.k1 == 0:
            raise GridError("k1 must be nonzero")
        for n in (self.num_points_x, self.num_points_y):
            if not _is_pow2(n):
                raise GridError(f"{n} is not a power of two")
        if self.num_points_x < 24 * abs(self.k1) * self.carrier_Nx:
            raise GridError("x resolution below 24|k1|N")
        if self.num_points_y < 24 * abs(self.k2) * self.carrier_Ny_sq:
            raise GridError("y resolution below 24|k2|N^2")

    @property
    def carrier_Ny_sq(self) -> int:
        return self.carrier_Nx**2

    @property
    def eps(self) -> float:
        return 1.0 / self.carrier_Nx

    @property
    def carrier_N(self) -> int:
        return self.carrier_Nx

    @property
    def shape(self) -> tuple[int, int]:
        return (self.num_points_x, self.num_points_y)

    @property
    def periods(self) -> tuple[float, float]:
        return (TWO_PI, TWO_PI)

    @property
    def dx(self) -> float:
        return TWO_PI / self.num_points_x

    @property
    def dy(self) -> float:
        return TWO_PI / self.num_points_y

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.arange(self.num_points_x) * self.dx,
            np.arange(self.num_points_y) * self.dy,
        )

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def open_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable (Mx, 1) and (1, My) coordinate arrays."""
        x, y = self.axes()
        return x[:, None], y[None, :]

    def modes(self) -> tuple[np.ndarray, np.ndarray]:
        mx = np.fft.fftfreq(self.num_points_x, 1.0 / self.num_points_x)
        my = np.fft.fftfreq(self.num_points_y, 1.0 / self.num_points_y)
        return mx[:, None], my[None, :]

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        return self.modes()


Grid = Union[TorusGrid1D, TorusGrid2D]


def make_grid(
    carrier: int,
    oversample: int = 8,
    *,
    k1: int = 1,
    k2: int | None = None,
    min_points_y: int = 64,
    max_points: int | None = None,
) -> Grid:
    """Build a grid from the resolution rule.

    1D: next power of two >= max(oversample*N, 24|k1|N).  Passing ``k2``
    builds the KP grid, whose y-axis must resolve 24|k2|N^2.
    """
    if carrier < 2:
        raise GridError(f"carrier={carrier} must be at least 2")
    if oversample < 8:
        raise GridError(f"oversample={oversample} must be at least 8")
    if k1 == 0:
        raise GridError("k1 must be nonzero")
    cap = TOL.max_grid_points if max_points is None else max_points
    nx = next_pow2(max(oversample * carrier, 24 * abs(k1) * carrier))
    if k2 is None:
        if k1 != 1:
            raise GridError("1D grids carry the KdV phase with k1 = 1")
        return TorusGrid1D(carrier, oversample, nx)
    ny = next_pow2(max(oversample * carrier, 24 * abs(k2) * carrier**2, min_points_y))
    if nx * ny > cap:
        raise GridError(f"2D grid {nx}x{ny} exceeds the point cap {cap}")
    return TorusGrid2D(carrier, nx, ny, k1, k2)


def _reflect(c: np.ndarray) -> np.ndarray:
    """Array indexed by -k (per axis) in FFT ordering."""
    out = c
    for ax in range(c.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray = field(repr=False)
    real: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise GridError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        if self.real:
            scale = np.max(np.abs(c)) if c.size else 0.0
            if scale > 0 and np.max(np.abs(c - np.conj(_reflect(c)))) > TOL.hermitian * scale:
                raise StructureError("coefficients flagged real are not Hermitian-symmetric")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def _trusted(cls, grid: Grid, coeffs: np.ndarray, real: bool) -> "SpectralField":
        # Results of structure-preserving operations skip the symmetry audit.
        obj = object.__new__(cls)
        coeffs = np.asarray(coeffs, dtype=complex)
        coeffs.flags.writeable = False
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "coeffs", coeffs)
        object.__setattr__(obj, "real", bool(real))
        return obj

    @classmethod
    def from_samples(cls, grid: Grid, samples, real: bool | None = None) -> "SpectralField":
        samples = np.asarray(samples)
        if real is None:
            real = not np.iscomplexobj(samples)
        if real:
            samples = np.real(samples)
        return cls._trusted(grid, np.fft.fftn(samples) / samples.size, real)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable, real: bool | None = None) -> "SpectralField":
        pts = (grid.x,) if grid.ndim == 1 else grid.mesh()
        return cls.from_samples(grid, fn(*pts), real)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex), True)

    def samples(self) -> np.ndarray:
        vals = np.fft.ifftn(self.coeffs) * self.coeffs.size
        return vals.real if self.real else vals

    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise GridError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField._trusted(self.grid, self.coeffs + other.coeffs, self.real and other.real)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField._trusted(self.grid, self.coeffs - other.coeffs, self.real and other.real)
        return NotImplemented

    def __neg__(self):
        return SpectralField._trusted(self.grid, -self.coeffs, self.real)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        real = self.real and np.isreal(scalar)
        return SpectralField._trusted(self.grid, self.coeffs * scalar, bool(real))

    __rmul__ = __mul__

    def conj(self) -> "SpectralField":
        return SpectralField._trusted(self.grid, np.conj(_reflect(self.coeffs)), self.real)

    def real_part(self) -> "SpectralField":
        return SpectralField._trusted(self.grid, 0.5 * (self.coeffs + np.conj(_reflect(self.coeffs))), True)

    def imag_part(self) -> "SpectralField":
        return SpectralField._trusted(self.grid, -0.5j * (self.coeffs - np.conj(_reflect(self.coeffs))), True)


def multiply(a: SpectralField, b: SpectralField, dealias_result: bool = True) -> SpectralField:
    """Pointwise product computed in physical space."""
    a._check(b)
    real = a.real and b.real
    prod = SpectralField.from_samples(a.grid, a.samples() * b.samples(), real)
    return dealias(prod) if dealias_result else prod


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode with |n| > (2/3) n_max on any axis (n_max = M/2)."""
    keep = np.ones(f.grid.shape, dtype=bool)
    for m, size in zip(f.grid.modes(), f.grid.shape):
        keep = keep & (np.abs(m) <= (2.0 / 3.0) * (size // 2))
    return SpectralField._trusted(f.grid, np.where(keep, f.coeffs, 0.0), f.real)


def derivative(f: SpectralField, axis: str = "x", order: int = 1, antiderivative_x: bool = False) -> SpectralField:
    """Multiply by (ik)^order along ``axis``; ``antiderivative_x`` applies 1/(ik_x) instead."""
    ax = {"x": 0, "y": 1}[axis]
    if ax >= f.grid.ndim:
        raise GridError(f"axis {axis!r} absent from a {f.grid.ndim}D grid")
    k = f.grid.wavenumbers()[ax]
    if antiderivative_x:
        if axis != "x" or order != 1:
            raise ValueError("the antiderivative is defined for axis x and order 1 only")
        zero_plane = f.coeffs[0] if f.grid.ndim == 2 else f.coeffs[:1]
        scale = np.max(np.abs(f.coeffs))
        if scale > 0 and np.max(np.abs(zero_plane)) > TOL.antiderivative_mean * scale:
            raise StructureError("field has a non-negligible x-mean; the x-antiderivative is undefined")
        inv = np.zeros_like(k, dtype=complex)
        nz = k != 0
        inv[nz] = 1.0 / (1j * k[nz])
        return SpectralField._trusted(f.grid, f.coeffs * inv, f.real)
    if order < 0:
        raise ValueError("order must be non-negative")
    sym = (1j * k) ** order
    # An odd derivative of the Nyquist mode has no real representative.
    if f.real and order % 2 == 1:
        size = f.grid.shape[ax]
        sym = np.where(np.abs(f.grid.modes()[ax]) == size // 2, 0.0, sym)
    return SpectralField._trusted(f.grid, f.coeffs * sym, f.real)


def project_zero_x_mean(f: SpectralField) -> SpectralField:
    """Remove the k_x = 0 plane (the x-mean at every y)."""
    c = np.array(f.coeffs)
    c[0] = 0.0
    return SpectralField._trusted(f.grid, c, f.real)


def x_mean_ratio(f: SpectralField) -> float:
    """Largest k_x = 0 coefficient relative to the largest coefficient."""
    scale = float(np.max(np.abs(f.coeffs)))
    return float(np.max(np.abs(f.coeffs[0]))) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class NormSpec:
    kind: str
    s: float = 0.0
    s1: float = 0.0
    s2: float = 0.0
    k: int = 2
    eps: float = 1.0
    anisotropic: bool = False

    def __post_init__(self):
        if self.kind not in {"sobolev", "aniso", "semiclassical"}:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "semiclassical":
            if not 0.0 < self.eps <= 1.0:
                raise ValueError("semiclassical eps must lie in (0, 1]")
            if self.k < 1:
                raise ValueError("semiclassical order must be positive")

    @classmethod
    def sobolev(cls, s: float) -> "NormSpec":
        return cls("sobolev", s=float(s))

    @classmethod
    def aniso(cls, s1: float, s2: float) -> "NormSpec":
        return cls("aniso", s1=float(s1), s2=float(s2))

    @classmethod
    def semiclassical(cls, k: int, eps: float, anisotropic: bool = False) -> "NormSpec":
        return cls("semiclassical", k=int(k), eps=float(eps), anisotropic=anisotropic)

    def label(self) -> str:
        if self.kind == "sobolev":
            return f"H^{self.s:g}"
        if self.kind == "aniso":
            return f"H^{{{self.s1:g},{self.s2:g}}}"
        return f"H^{self.k}_eps" + ("(aniso)" if self.anisotropic else "")


def norm_weights(grid: Grid, spec: NormSpec) -> np.ndarray:
    """Squared multiplier of the norm on each Fourier mode."""
    ks = grid.wavenumbers()
    if spec.kind == "sobolev":
        k2 = sum(k**2 for k in ks)
        return (1.0 + k2) ** spec.s
    if spec.kind == "aniso":
        if grid.ndim != 2:
            raise GridError("anisotropic Sobolev norms need a 2D grid")
        return (1.0 + ks[0] ** 2) ** spec.s1 * (1.0 + ks[1] ** 2) ** spec.s2
    w = 1.0 + (spec.eps * ks[0]) ** (2 * spec.k)
    if spec.anisotropic:
        if grid.ndim != 2:
            raise GridError("anisotropic semiclassical norms need a 2D grid")
        w = w + (spec.eps**2 * ks[1]) ** (2 * spec.k)
    return w


def norm(f: SpectralField, spec: NormSpec) -> float:
    if not np.all(np.isfinite(f.coeffs)):
        raise StructureError("norm of a non-finite field")
    w = np.broadcast_to(norm_weights(f.grid, spec), f.grid.shape)
    return math.sqrt(math.prod(f.grid.periods) * kernels.weighted_sq_sum(f.coeffs, w))


def l2_norm(f: SpectralField) -> float:
    return norm(f, NormSpec.sobolev(0.0))


def mean(f: SpectralField) -> complex:
    """Average over the torus, which is the zero coefficient under this convention."""
    return complex(f.coeffs.flat[0])


def _pad_axis(c: np.ndarray, ax: int, factor: int) -> np.ndarray:
    m = c.shape[ax]
    h = m // 2
    shape = list(c.shape)
    shape[ax] = m * factor
    out = np.zeros(shape, dtype=complex)
    lo = [slice(None)] * c.ndim
    hi = [slice(None)] * c.ndim
    lo[ax] = slice(0, h)
    out[tuple(lo)] = c[tuple(lo)]
    hi[ax] = slice(m - h, m)
    dst = list(hi)
    dst[ax] = slice(m * factor - h, m * factor)
    out[tuple(dst)] = c[tuple(hi)]
    return out


def upsampled_samples(f: SpectralField, factor: int = 2) -> np.ndarray:
    """Physical samples of the trigonometric interpolant on a ``factor``-times finer grid."""
    c = f.coeffs
    for ax in range(c.ndim):
        c = _pad_axis(c, ax, factor)
    vals = np.fft.ifftn(c) * c.size
    return vals.real if f.real else vals


def linf_norm(f: SpectralField) -> float:
    return float(np.max(np.abs(upsampled_samples(f, 2))))
