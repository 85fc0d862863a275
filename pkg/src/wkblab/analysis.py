"""Harmonic demodulation, WKB error metrics, oscillatory-norm scalings and slope fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridError
from .profiles import Profile
from .spectral import NormSpec, SpectralField, TorusGrid1D, TorusGrid2D, l2_norm, next_pow2, norm
from .solvers import Trajectory
from .wkb_kdv import KdVAnsatz, assemble_uapp_kdv

HARMONICS = (-3, -2, -1, 0, 1, 2, 3)


@dataclass(frozen=True)
class PowerLawFit:
    eps_list: tuple[float, ...]
    values: tuple[float, ...]
    slope: float
    intercept: float
    r_squared: float

    def predict(self, eps: float) -> float:
        return math.exp(self.intercept) * eps**self.slope

    def local_slopes(self) -> list[float]:
        le, lv = np.log(self.eps_list), np.log(self.values)
        return list(np.diff(lv) / np.diff(le))


def fit_power_law(eps_list: Sequence[float], values: Sequence[float]) -> PowerLawFit:
    """Least-squares line through (log eps, log value)."""
    e = np.asarray(eps_list, dtype=float)
    v = np.asarray(values, dtype=float)
    if e.size != v.size or e.size < 3:
        raise ValueError("a power-law fit needs at least three (eps, value) pairs")
    if np.any(~np.isfinite(v)) or np.any(v <= 0) or np.any(e <= 0):
        raise ValueError("power-law fits need finite positive eps and values")
    x, y = np.log(e), np.log(v)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(tuple(e), tuple(v), float(slope), float(intercept), min(max(r2, 0.0), 1.0))


def _window(grid, j: int, carrier: int, k1: int = 1) -> tuple[np.ndarray, int, int]:
    """Boolean window |n_x - j k1 N| < |k1| N / 2 and the (x, y) mode shifts of harmonic j."""
    mx = np.ravel(grid.modes()[0])
    half = abs(k1) * carrier / 2.0
    win = np.abs(mx - j * k1 * carrier) < half
    shift_y = j * grid.k2 * carrier**2 if isinstance(grid, TorusGrid2D) else 0
    return win, j * k1 * carrier, shift_y


def extract_harmonic(f: SpectralField, j: int, eps: float, t: float = 0.0, omega: float = 1.0) -> SpectralField:
    """Slowly varying amplitude of harmonic j, demodulated by exp(-i j (phase + omega t)/eps).

    For j = 0 this is the low-pass window |k| < N/2 with no demodulation.
    """
    if abs(j) > 3:
        raise ValueError("only harmonics |j| <= 3 have disjoint windows")
    grid = f.grid
    n = round(1.0 / eps)
    if n != grid.carrier_N:
        raise GridError("field grid is not commensurate with eps")
    k1 = getattr(grid, "k1", 1)
    if 7 * abs(k1) * n > grid.shape[0]:
        raise GridError("harmonic windows overlap on this grid")
    win, sx, sy = _window(grid, j, n, k1)
    c = np.where(win if f.coeffs.ndim == 1 else win.reshape(-1, 1), f.coeffs, 0.0)
    c = np.roll(c, -sx, axis=0)
    if sy:
        c = np.roll(c, -sy, axis=1)
    c = c * np.exp(-1j * j * omega * t / eps)
    return SpectralField._trusted(grid, c, f.real and j == 0)


def remodulate(amplitude: SpectralField, j: int, eps: float, t: float = 0.0, omega: float = 1.0) -> SpectralField:
    grid = amplitude.grid
    n = round(1.0 / eps)
    k1 = getattr(grid, "k1", 1)
    _, sx, sy = _window(grid, j, n, k1)
    c = np.roll(amplitude.coeffs, sx, axis=0)
    if sy:
        c = np.roll(c, sy, axis=1)
    return SpectralField._trusted(grid, c * np.exp(1j * j * omega * t / eps), False)


@dataclass(frozen=True)
class HarmonicDecomposition:
    eps: float
    t: float
    omega: float
    harmonics: dict
    residual: SpectralField

    def reconstruct(self) -> SpectralField:
        total = self.residual
        for j, amp in self.harmonics.items():
            total = total + remodulate(amp, j, self.eps, self.t, self.omega)
        return total if not self.residual.real else total.real_part()


def decompose(f: SpectralField, eps: float, t: float = 0.0, omega: float = 1.0) -> HarmonicDecomposition:
    n = round(1.0 / eps)
    k1 = getattr(f.grid, "k1", 1)
    covered = np.zeros(f.grid.shape[0], dtype=bool)
    harmonics = {}
    for j in HARMONICS:
        win, _, _ = _window(f.grid, j, n, k1)
        if np.any(covered & win):
            raise GridError("harmonic windows overlap")
        covered |= win
        harmonics[j] = extract_harmonic(f, j, eps, t, omega)
    mask = covered if f.coeffs.ndim == 1 else covered.reshape(-1, 1)
    residual = SpectralField._trusted(f.grid, np.where(mask, 0.0, f.coeffs), f.real)
    return HarmonicDecomposition(eps, t, omega, harmonics, residual)


def _snapshot(trajectory: Trajectory, t: float) -> SpectralField:
    if t < trajectory.times[0] - 1e-12 or t > trajectory.times[-1] + 1e-12:
        raise ValueError(f"t={t} lies outside the trajectory range [{trajectory.times[0]}, {trajectory.times[-1]}]")
    return trajectory.at(t)


def wkb_error_kdv(trajectory: Trajectory, ansatz: KdVAnsatz, times: Sequence[float] | None = None) -> tuple[list[float], float]:
    """||u(t) - u_app(t)||_{H^2_eps} at the requested snapshot times, and their maximum."""
    times = trajectory.times if times is None else list(times)
    spec = NormSpec.semiclassical(2, ansatz.eps)
    series = []
    for t in times:
        u = _snapshot(trajectory, t)
        series.append(norm(u - assemble_uapp_kdv(ansatz, t, u.grid), spec))
    return series, max(series)


def zero_mode_check(trajectory: Trajectory, ansatz: KdVAnsatz, t: float) -> float:
    """||eps^{-1} ZeroMode(u(t)) - a0(t)||_{L^2}."""
    u = _snapshot(trajectory, t)
    zero = extract_harmonic(u, 0, ansatz.eps)
    return l2_norm((1.0 / ansatz.eps) * zero - ansatz.field("a0", t, u.grid))


def scaling_eps(kappa: float) -> tuple[float, ...]:
    """Default sweep for lemma51_measure.

    With kappa = 0 the norm moves only through eps^{(2-beta)/3} dilation, so the
    sweep spans many decades; with kappa != 0 the carrier mode grows like
    eps^{-(1+beta)/3} and five dyadic steps already reach 2^20 grid points.
    """
    if kappa != 0:
        return tuple(2.0**-k for k in range(6, 11))
    return tuple(2.0**-k for k in range(12, 37, 6))


def lemma51_exponent(beta: float, s: float, kappa: float) -> float:
    """Predicted eps-exponent of ||I^eps(f, kappa)||_{H^s}."""
    if kappa != 0:
        return (beta - 2.0) / 6.0 + abs(s) * (beta + 1.0) / 3.0
    return 0.0 if beta == 2 else (beta - 2.0) / 6.0


@dataclass(frozen=True)
class Lemma51Result:
    beta: float
    s: float
    kappa: float
    fit: PowerLawFit
    predicted_exponent: float
    modes: tuple[int, ...]
    torus_scales: tuple[float, ...]
    note: str = "torus analogue"


def oscillatory_profile(profile: Profile, beta: float, kappa: float, eps: float,
                        min_points: int = 1024, torus_factor: float = 1.0) -> tuple[SpectralField, int]:
    """I^eps(f, kappa)(x) = f(x eps^{(2-beta)/3}) exp(i kappa x / eps^{(1+beta)/3}) on a torus of period 2 pi P.

    With P = torus_factor * eps^{-(2-beta)/3} the dilated profile is the original one
    on the standard torus and the carrier becomes the integer mode round(kappa P / eps^{(1+beta)/3}).
    """
    dil = eps ** ((2.0 - beta) / 3.0)
    P = torus_factor / dil
    # dilated support 2w/dil against torus length 2 pi P
    if torus_factor < 1.0 or profile.half_width >= math.pi * torus_factor:
        raise GridError("dilated profile support overflows the torus")
    freq = kappa * P / eps ** ((1.0 + beta) / 3.0)
    m = int(round(freq))
    carrier = max(1, abs(m))
    grid = TorusGrid1D(carrier, 8, next_pow2(max(24 * carrier, min_points)), 2.0 * math.pi * P)
    x = grid.x
    vals = profile(x * dil, period=2.0 * math.pi * torus_factor)
    field_ = SpectralField.from_samples(grid, vals * np.exp(1j * m * x / P), real=(m == 0))
    return field_, m


def lemma51_measure(profile: Profile, beta: float, s: float, kappa: float, eps_list: Sequence[float],
                    min_points: int = 1024) -> Lemma51Result:
    if not 0.0 < beta <= 2.0:
        raise ValueError("beta must lie in (0, 2]")
    if s > 0:
        raise ValueError("the oscillatory scaling law concerns s <= 0")
    values, modes, scales = [], [], []
    for eps in eps_list:
        f, m = oscillatory_profile(profile, beta, kappa, eps, min_points)
        values.append(norm(f, NormSpec.sobolev(s)))
        modes.append(m)
        scales.append(f.grid.period / (2.0 * math.pi))
    return Lemma51Result(beta, s, kappa, fit_power_law(eps_list, values), lemma51_exponent(beta, s, kappa),
                         tuple(modes), tuple(scales))
