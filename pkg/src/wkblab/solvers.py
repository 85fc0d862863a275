"""Integrating-factor RK4 solvers for the semiclassical KdV and KP equations.

KdV:  u_t = -eps^2 u_xxx + 6 eps u u_x
KP:   u_t = -eps^2 u_xxx - lam eps^2 d_x^{-1} u_yy - (eps/2) d_x(u^2)

The dispersive part is propagated exactly in Fourier space (Lawson's
integrating-factor RK4); the quadratic term is 2/3-dealiased.  Internally the
state is a real-to-complex spectrum, so only half the modes are stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import NumericalFailure, StructureError
from .spectral import (
    SpectralField,
    TorusGrid1D,
    TorusGrid2D,
    derivative,
    l2_norm,
    linf_norm,
    x_mean_ratio,
)
from .wkb_kp import KPPhase

Reference = Callable[[float], SpectralField]


@dataclass(frozen=True)
class SolverConfig:
    dt_factor: float = 0.1
    final_time: float = 0.5
    integrator: str = "integrating_factor_rk4"
    dealias: bool = True
    conservation_check_interval: int = 16
    snapshots: int = 16
    richardson: bool = True
    richardson_tol: float = 1e-6
    conservation_tol: float = 1e-8
    max_halvings: int = 3
    cfl_safety: float = 0.5
    # test hook: scales the quadratic term (0 gives the linear flow)
    nonlinearity: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.dt_factor <= 1.0:
            raise ValueError("dt_factor must lie in (0, 1]")
        if self.integrator != "integrating_factor_rk4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")
        if self.final_time < 0 or self.snapshots < 1 or self.conservation_check_interval < 1:
            raise ValueError("final_time, snapshots and conservation_check_interval must be positive")


@dataclass
class Trajectory:
    times: list[float]
    snapshots: list[SpectralField]
    mass: list[float]
    l2: list[float]
    bootstrap_series: list[float] = field(default_factory=list)
    dt: float = 0.0
    steps: int = 0
    halvings: int = 0
    richardson_diff: float = float("nan")
    mass_drift: float = 0.0
    l2_drift: float = 0.0
    converged: bool = True

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1]

    @property
    def grid(self):
        return self.snapshots[0].grid

    @property
    def bootstrap_max(self) -> float:
        return max(self.bootstrap_series) if self.bootstrap_series else float("nan")

    @property
    def bootstrap_ok(self) -> bool:
        return bool(self.bootstrap_series) and self.bootstrap_max <= 1.0

    def at(self, t: float, atol: float = 1e-9) -> SpectralField:
        for ti, snap in zip(self.times, self.snapshots):
            if abs(ti - t) <= atol * max(1.0, abs(t)):
                return snap
        raise ValueError(f"t={t} is not a stored snapshot time (have {self.times[0]}..{self.times[-1]})")

    def snapshot_times(self) -> list[float]:
        return list(self.times)


class _Equation:
    """Real-to-complex spectral description of one evolution equation."""

    def __init__(self, grid, symbol: np.ndarray, nonlinear: Callable, project: Optional[Callable]):
        self.grid = grid
        self.symbol = symbol
        self.nonlinear = nonlinear
        self.project = project

    def to_state(self, f: SpectralField) -> np.ndarray:
        return np.fft.rfftn(f.samples())

    def to_field(self, state: np.ndarray) -> SpectralField:
        return SpectralField.from_samples(self.grid, np.fft.irfftn(state, s=self.grid.shape, axes=tuple(range(state.ndim))), real=True)

    def moments(self, state: np.ndarray) -> tuple[float, float]:
        """(integral of u, integral of u^2) from a half spectrum."""
        size = math.prod(self.grid.shape)
        area = math.prod(self.grid.periods)
        c = state / size
        w = np.full(c.shape[-1], 2.0)
        w[0] = 1.0
        if self.grid.shape[-1] % 2 == 0:
            w[-1] = 1.0
        energy = area * float(np.sum(w * (c.real**2 + c.imag**2)))
        return area * float(c.flat[0].real), energy


def _half_modes(grid) -> list[np.ndarray]:
    """Integer modes for an rfftn layout, broadcastable per axis."""
    shape = grid.shape
    out = []
    for ax, m in enumerate(shape):
        if ax == len(shape) - 1:
            k = np.arange(m // 2 + 1, dtype=float)
        else:
            k = np.fft.fftfreq(m, 1.0 / m)
        view = [1] * len(shape)
        view[ax] = k.size
        out.append(k.reshape(view))
    return out


def _mask(grid, modes) -> np.ndarray:
    keep = np.ones(np.broadcast_shapes(*(k.shape for k in modes)), dtype=bool)
    for k, m in zip(modes, grid.shape):
        keep = keep & (np.abs(k) <= (2.0 / 3.0) * (m // 2))
    return keep


def _nyquist(grid, modes) -> np.ndarray:
    hit = np.zeros(np.broadcast_shapes(*(k.shape for k in modes)), dtype=bool)
    for k, m in zip(modes, grid.shape):
        hit = hit | (np.abs(k) == m // 2)
    return hit


def kdv_equation(grid: TorusGrid1D, eps: float, cfg: SolverConfig) -> _Equation:
    (k,) = _half_modes(grid)
    k = k * (2 * math.pi / grid.period)
    symbol = 1j * eps**2 * k**3
    symbol = np.where(_nyquist(grid, _half_modes(grid)), 0.0, symbol)
    mask = _mask(grid, _half_modes(grid)) if cfg.dealias else np.ones_like(k, dtype=bool)
    factor = np.where(mask, 3.0 * eps * cfg.nonlinearity * 1j * k, 0.0)
    shape = grid.shape

    def nonlinear(state: np.ndarray) -> np.ndarray:
        u = np.fft.irfft(np.where(mask, state, 0.0), n=shape[0])
        return factor * np.fft.rfft(u * u)

    return _Equation(grid, symbol, nonlinear, None)


def kp_equation(grid: TorusGrid2D, eps: float, phase: KPPhase, cfg: SolverConfig) -> _Equation:
    modes = _half_modes(grid)
    kx, ky = modes
    with np.errstate(divide="ignore", invalid="ignore"):
        symbol = 1j * (eps**2 * kx**3 - phase.lam * eps**2 * ky**2 / kx)
    symbol = np.where((kx == 0) | _nyquist(grid, modes), 0.0, symbol)
    mask = _mask(grid, modes) if cfg.dealias else np.ones(symbol.shape, dtype=bool)
    factor = np.where(mask, -0.5 * eps * cfg.nonlinearity * 1j * kx, 0.0)
    shape = grid.shape

    def nonlinear(state: np.ndarray) -> np.ndarray:
        u = np.fft.irfft2(np.where(mask, state, 0.0), s=shape)
        return factor * np.fft.rfft2(u * u)

    def project(state: np.ndarray) -> np.ndarray:
        state[0] = 0.0
        return state

    return _Equation(grid, symbol, nonlinear, project)


def bootstrap_quantity(u: SpectralField, reference: SpectralField, eps: float) -> float:
    """||eps d_x (u - reference)||_inf, the quantity kept below 1 in the continuation argument."""
    return linf_norm(eps * derivative(u - reference, "x", 1))


def _integrate(eq: _Equation, u0: SpectralField, dt_target: float, cfg: SolverConfig) -> Trajectory:
    T = cfg.final_time
    nsteps = max(1, math.ceil(T / dt_target - 1e-9)) if T > 0 else 0
    dt = T / nsteps if nsteps else 0.0
    e = np.exp(eq.symbol * dt)
    e2 = np.exp(eq.symbol * (0.5 * dt))
    ones = np.ones_like(e2)
    u = eq.to_state(u0)
    if eq.project:
        u = eq.project(u)
    k1, k2, k3, k4, tmp, new = (np.empty_like(u) for _ in range(6))
    snap_steps = sorted({round(j * nsteps / cfg.snapshots) for j in range(cfg.snapshots + 1)})
    m0, q0 = eq.moments(u)
    scale_mass = math.sqrt(math.prod(eq.grid.periods) * q0) if q0 > 0 else 1.0
    traj = Trajectory([], [], [], [], dt=dt, steps=nsteps)

    def record(step: int, state: np.ndarray) -> None:
        f = eq.to_field(state)
        t = step * dt
        m, q = eq.moments(state)
        traj.times.append(t)
        traj.snapshots.append(f)
        traj.mass.append(m)
        traj.l2.append(math.sqrt(q))

    def audit(step: int, state: np.ndarray) -> None:
        if not np.all(np.isfinite(state)):
            raise NumericalFailure(f"non-finite state at step {step} (t={step * dt:.6g})")
        m, q = eq.moments(state)
        traj.mass_drift = max(traj.mass_drift, abs(m - m0) / scale_mass)
        traj.l2_drift = max(traj.l2_drift, abs(q - q0) / q0 if q0 > 0 else 0.0)
        if eq.project is not None and np.max(np.abs(state[0])) > 1e-8 * max(np.max(np.abs(state)), 1e-300):
            raise StructureError(f"x-mean grew beyond tolerance at step {step}")

    proj = eq.project or (lambda s: s)
    record(0, u)
    for step in range(1, nsteps + 1):
        k1[...] = eq.nonlinear(u)
        kernels.lawson_stage(u, e2, k1, e2, 0.5 * dt, tmp)
        k2[...] = eq.nonlinear(proj(tmp))
        kernels.lawson_stage(u, e2, k2, ones, 0.5 * dt, tmp)
        k3[...] = eq.nonlinear(proj(tmp))
        kernels.lawson_stage(u, e, k3, e2, dt, tmp)
        k4[...] = eq.nonlinear(proj(tmp))
        kernels.lawson_final(u, k1, k2, k3, k4, e, e2, dt, new)
        u, new = proj(new), u
        if step % cfg.conservation_check_interval == 0 or step == nsteps:
            audit(step, u)
        if step in snap_steps:
            record(step, u)
    return traj


def _check_cfl(u0: SpectralField, eps: float, dt: float, cfg: SolverConfig, coefficient: float) -> None:
    umax = float(np.max(np.abs(u0.samples())))
    spacing = min(p / m for p, m in zip(u0.grid.periods, u0.grid.shape))
    if umax == 0 or cfg.nonlinearity == 0:
        return
    limit = cfg.cfl_safety * spacing / (coefficient * eps * umax * abs(cfg.nonlinearity))
    if dt > limit:
        raise NumericalFailure(
            f"CFL violation: dt={dt:.3e} exceeds {limit:.3e}; lower dt_factor below {limit / eps:.3e}"
        )


def _run(eq: _Equation, u0: SpectralField, eps: float, cfg: SolverConfig, reference, coefficient: float) -> Trajectory:
    if not u0.real:
        raise StructureError("initial data must be real-valued")
    dt = cfg.dt_factor * eps
    _check_cfl(u0, eps, dt, cfg, coefficient)
    traj = _integrate(eq, u0, dt, cfg)
    if cfg.richardson:
        traj = _richardson(eq, u0, dt, cfg, traj)
    if reference is not None:
        traj.bootstrap_series = [
            bootstrap_quantity(f, reference(t), eps) for t, f in zip(traj.times, traj.snapshots)
        ]
    return traj


def _richardson(eq: _Equation, u0: SpectralField, dt: float, cfg: SolverConfig, coarse: Trajectory) -> Trajectory:
    """Compare dt with dt/2 and keep halving (at most cfg.max_halvings times) until both agree."""
    for halving in range(cfg.max_halvings + 1):
        fine = _integrate(eq, u0, 0.5 * dt, cfg)
        fine.richardson_diff = l2_norm(coarse.final - fine.final) / max(l2_norm(fine.final), 1e-300)
        fine.halvings = halving
        if fine.richardson_diff <= cfg.richardson_tol and max(fine.l2_drift, fine.mass_drift) <= cfg.conservation_tol:
            return fine
        coarse, dt = fine, 0.5 * dt
    coarse.converged = False
    return coarse


def solve_kdv(u0: SpectralField, eps: float, cfg: SolverConfig, reference: Optional[Reference] = None) -> Trajectory:
    """Integrate eps u_t + eps^3 u_xxx = 6 eps^2 u u_x up to cfg.final_time.

    ``reference`` (typically the approximate solution) turns on the bootstrap
    series ||eps d_x (u - reference)||_inf at every snapshot.
    """
    if round(1.0 / eps) != u0.grid.carrier_N:
        raise StructureError("grid is not commensurate with eps")
    return _run(kdv_equation(u0.grid, eps, cfg), u0, eps, cfg, reference, 6.0)


def solve_kp(u0: SpectralField, phase: KPPhase, eps: float, cfg: SolverConfig,
             reference: Optional[Reference] = None) -> Trajectory:
    if not isinstance(u0.grid, TorusGrid2D):
        raise StructureError("KP data lives on a 2D grid")
    if round(1.0 / eps) != u0.grid.carrier_Nx:
        raise StructureError("grid is not commensurate with eps")
    if x_mean_ratio(u0) > 1e-10:
        raise StructureError("KP data must have zero x-mean at every y")
    return _run(kp_equation(u0.grid, eps, phase, cfg), u0, eps, cfg, reference, 1.0)


def linear_symbol(grid, eps: float, phase: Optional[KPPhase] = None) -> np.ndarray:
    """Full-spectrum generator of the linear flow (kx = 0 plane set to zero for KP)."""
    ks = grid.wavenumbers()
    if phase is None:
        sym = 1j * eps**2 * ks[0] ** 3
    else:
        kx, ky = ks
        with np.errstate(divide="ignore", invalid="ignore"):
            sym = 1j * (eps**2 * kx**3 - phase.lam * eps**2 * ky**2 / kx)
        sym = np.where(kx == 0, 0.0, sym)
    # the Nyquist modes of a real field must stay real
    nyq = np.zeros(grid.shape, dtype=bool)
    for m, size in zip(grid.modes(), grid.shape):
        nyq = nyq | (np.abs(m) == size // 2)
    return np.where(nyq, 0.0, sym)


def propagate_linear(f: SpectralField, eps: float, t: float, phase: Optional[KPPhase] = None) -> SpectralField:
    """Exact dispersive flow over time t; unitary on every Sobolev space."""
    sym = np.broadcast_to(linear_symbol(f.grid, eps, phase), f.grid.shape)
    return SpectralField._trusted(f.grid, f.coeffs * np.exp(sym * t), f.real)
