"""WKB approximate solution of the semiclassical KP equation

    eps u_t + eps^3 u_xxx + lam eps^3 d_x^{-1} u_yy + (eps^2/2) d_x(u^2) = 0

with phase k1 x/eps + k2 y/eps^2 + omega t/eps.  The approximate solution is
an exact x-derivative plus the zero mode:

    u_app = eps d_x( sum_j eps^{j-1} (a_j + eps b_j) e^{i j phi} + c.c. ) + eps a0.

Tilde amplitudes are a~_j = i j k1 a_j and b~_j = i j k1 b_j + d_x a_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import GridError, StructureError
from .profiles import Profile
from .spectral import (
    NormSpec,
    SpectralField,
    TorusGrid2D,
    derivative,
    multiply,
    project_zero_x_mean,
)
from .wkb_kdv import fd_time_derivative, halving_residual, integrate_characteristic, roundoff_floor

# relative size of the k_x = 0 plane tolerated before the x-antiderivative
MEAN_TOL = 1e-8


def kp_dispersion(k1: int, k2: int, lam: int) -> float:
    if k1 == 0:
        raise ValueError("the KP phase requires k1 != 0")
    return float(Fraction(k1) ** 3 - lam * Fraction(k2) ** 2 / k1)


@dataclass(frozen=True)
class KPPhase:
    k1: int = 1
    k2: int = 1
    lam: int = 1

    def __post_init__(self):
        if self.k1 == 0:
            raise ValueError("the KP phase requires k1 != 0")
        if self.lam not in (1, -1):
            raise ValueError("lambda must be +1 or -1")

    @property
    def omega_exact(self) -> Fraction:
        return Fraction(self.k1) ** 3 - self.lam * Fraction(self.k2) ** 2 / self.k1

    @property
    def omega(self) -> float:
        return float(self.omega_exact)

    @property
    def speed_exact(self) -> Fraction:
        """Transport speed c of the first harmonic: a1(t, x, y) = alpha(x + c t, y)."""
        return 3 * Fraction(self.k1) ** 2 + self.lam * Fraction(self.k2) ** 2 / Fraction(self.k1) ** 2

    @property
    def speed(self) -> float:
        return float(self.speed_exact)

    def eikonal(self, k1: float | None = None, k2: float | None = None) -> float:
        """-omega k1 + k1^4 - lam k2^2, which vanishes on the dispersion relation."""
        a = self.k1 if k1 is None else k1
        b = self.k2 if k2 is None else k2
        return -self.omega * a + a**4 - self.lam * b**2


@dataclass(frozen=True)
class KPAnsatz:
    """Separable KP amplitudes alpha(x, y) = profile_x(x) profile_y(y); evaluators take (t, x, y)."""

    profile_x: Profile
    profile_y: Profile
    phase: KPPhase
    eps: float
    quadrature_steps: int = 256

    @property
    def c(self) -> float:
        return self.phase.speed

    def _ax(self, t, x, deriv=0):
        return self.profile_x(np.asarray(x) + self.c * t, deriv)

    def _ay(self, y, deriv=0):
        return self.profile_y(np.asarray(y), deriv)

    # untilded amplitudes
    def a1(self, t, x, y):
        return (self._ax(t, x) * self._ay(y)).astype(complex)

    def a1_x(self, t, x, y):
        return (self._ax(t, x, 1) * self._ay(y)).astype(complex)

    def a2(self, t, x, y):
        return 1j * self.a1(t, x, y) ** 2 / (12.0 * self.phase.k1)

    def a3(self, t, x, y):
        return -self.a1(t, x, y) ** 3 / (144.0 * self.phase.k1**2)

    def a0(self, t, x, y):
        k1, c = self.phase.k1, self.c
        ax0, ax = self._ax(0.0, x), self._ax(t, x)
        return (k1**2 / c) * (ax0**2 - ax**2) * self._ay(y) ** 2

    # tilde amplitudes
    def at(self, j: int, t, x, y):
        return 1j * j * self.phase.k1 * getattr(self, f"a{j}")(t, x, y)

    def _b1_rhs(self, s, x, y):
        """Source of (d_t - c d_x) b1 = R1 from the eps^2 first-harmonic relation."""
        k1, k2, lam, c = self.phase.k1, self.phase.k2, self.phase.lam, self.c
        a1_xx = self._ax(s, x, 2) * self._ay(y)
        a1_y = self._ax(s, x) * self._ay(y, 1)
        t1, t2 = self.at(1, s, x, y), self.at(2, s, x, y)
        return (1j / k1) * (
            (c - 6.0 * k1**2) * a1_xx
            + 2j * lam * k2 * a1_y
            + 1j * k1 * (self.a0(s, x, y) * t1 + np.conj(t1) * t2)
        )

    def _b1_rhs_factors(self, s, x):
        """x-factors of R1 multiplying alpha_y, alpha_y' and alpha_y^3 (profiles are real)."""
        k1, k2, lam, c = self.phase.k1, self.phase.k2, self.phase.lam, self.c
        ax, ax0 = self._ax(s, x), self._ax(0.0, x)
        zero_mode = (k1**2 / c) * (ax0**2 - ax**2)
        cubic = 1j * k1 * (1j * k1 * zero_mode * ax + 1j * k1 * ax**3 / 6.0)
        return np.stack([
            (1j / k1) * (c - 6.0 * k1**2) * self._ax(s, x, 2),
            (1j / k1) * 2j * lam * k2 * ax,
            (1j / k1) * cubic,
        ])

    def b1(self, t, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if t == 0.0:
            return np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=complex)
        if x.ndim == 2 and x.shape[1] == 1 and y.ndim == 2 and y.shape[0] == 1:
            # separable fast path: the same quadrature, run on the x-axis only
            fx = integrate_characteristic(self._b1_rhs_factors, t, self.c, self.quadrature_steps, x[:, 0])
            ay, ay1 = self._ay(y), self._ay(y, 1)
            return fx[0][:, None] * ay + fx[1][:, None] * ay1 + fx[2][:, None] * ay**3
        return integrate_characteristic(self._b1_rhs, t, self.c, self.quadrature_steps, x, y)

    def bt1(self, t, x, y, b1=None):
        b1 = self.b1(t, x, y) if b1 is None else b1
        return 1j * self.phase.k1 * b1 + self.a1_x(t, x, y)

    def b2(self, t, x, y, b1=None):
        """Second-harmonic corrector; it enters u_app at order eps^2 after the outer eps d_x."""
        k1 = self.phase.k1
        t1 = self.at(1, t, x, y)
        t1_x = 1j * k1 * self.a1_x(t, x, y)
        a2_x = 1j * 2.0 * self.a1(t, x, y) * self.a1_x(t, x, y) / (12.0 * k1)
        return -(-24j * k1**3 * a2_x + 2j * k1 * t1 * self.bt1(t, x, y, b1) + t1 * t1_x) / (12.0 * k1**4)

    def field(self, name: str, t: float, grid: TorusGrid2D) -> SpectralField:
        x, y = grid.open_mesh()
        vals = getattr(self, name)(t, x, y)
        return SpectralField.from_samples(grid, vals, real=np.isrealobj(vals))


def build_kp_ansatz(
    profiles: tuple[Profile, Profile], phase: KPPhase, eps: float, quadrature_steps: int = 256
) -> KPAnsatz:
    if phase.speed_exact == 0:
        raise ValueError("degenerate transport speed c = 0 (lambda = -1, k2^2 = 3 k1^4)")
    if quadrature_steps < 16 or quadrature_steps % 2:
        raise ValueError("quadrature_steps must be even and at least 16")
    n = round(1.0 / eps)
    if n < 2 or abs(n * eps - 1.0) > 1e-12:
        raise ValueError(f"eps={eps} is not 1/N with integer N >= 2")
    px, py = profiles
    return KPAnsatz(px, py, phase, 1.0 / n, quadrature_steps)


def _check_grid(ansatz: KPAnsatz, grid: TorusGrid2D) -> None:
    if not isinstance(grid, TorusGrid2D):
        raise GridError("KP fields live on a 2D grid")
    if round(1.0 / ansatz.eps) != grid.carrier_Nx:
        raise GridError(f"grid carrier N={grid.carrier_Nx} does not match eps={ansatz.eps}")
    if (grid.k1, grid.k2) != (ansatz.phase.k1, ansatz.phase.k2):
        raise GridError("grid was resolved for a different (k1, k2)")


def kp_phase_factor(grid: TorusGrid2D, phase: KPPhase, t: float) -> np.ndarray:
    x, y = grid.open_mesh()
    n = grid.carrier_Nx
    # integer modes k1 N and k2 N^2 keep the phase periodic on the torus
    return np.exp(1j * (phase.k1 * n * x + phase.k2 * n * n * y + phase.omega * n * t))


def assemble_potential_kp(ansatz: KPAnsatz, t: float, grid: TorusGrid2D, include_b2: bool = True) -> SpectralField:
    """The real oscillatory sum whose eps d_x is the oscillating part of u_app."""
    _check_grid(ansatz, grid)
    eps = ansatz.eps
    x, y = grid.open_mesh()
    e1 = kp_phase_factor(grid, ansatz.phase, t)
    b1 = ansatz.b1(t, x, y)
    b2 = ansatz.b2(t, x, y, b1) if include_b2 else 0.0
    osc = (
        (ansatz.a1(t, x, y) + eps * b1) * e1
        + eps * (ansatz.a2(t, x, y) + eps * b2) * e1**2
        + eps**2 * ansatz.a3(t, x, y) * e1**3
    )
    return SpectralField.from_samples(grid, 2.0 * osc.real, real=True)


def assemble_uapp_kp(ansatz: KPAnsatz, t: float, grid: TorusGrid2D, include_b2: bool = True) -> SpectralField:
    pot = assemble_potential_kp(ansatz, t, grid, include_b2)
    x, y = grid.open_mesh()
    zero = SpectralField.from_samples(grid, ansatz.a0(t, x, y), real=True)
    return ansatz.eps * derivative(pot, "x", 1) + ansatz.eps * zero


def kp_operator(
    u: SpectralField, dudt: SpectralField, eps: float, lam: int, nonlinearity: float = 1.0
) -> SpectralField:
    """eps u_t + eps^3 u_xxx + lam eps^3 d_x^{-1} u_yy + (eps^2/2) d_x(u^2)."""
    out = eps * dudt + eps**3 * derivative(u, "x", 3)
    uyy = project_zero_x_mean(derivative(u, "y", 2))
    out = out + (lam * eps**3) * derivative(uyy, "x", 1, antiderivative_x=True)
    if nonlinearity:
        out = out + (0.5 * eps**2 * nonlinearity) * derivative(multiply(u, u), "x", 1)
    return out


def residual_from_assembly_kp(
    assemble, t: float, eps: float, lam: int, dt_fd: float | None = None, nonlinearity: float = 1.0
) -> SpectralField:
    h = 1e-3 * eps if dt_fd is None else dt_fd
    u = assemble(t)

    def sigma(step: float) -> SpectralField:
        dudt = fd_time_derivative(assemble, t, step)
        expr = kp_operator(u, dudt, eps, lam, nonlinearity)
        # measured against the size of the terms, since expr itself may be pure roundoff
        scale = max(eps * np.max(np.abs(dudt.coeffs)), np.max(np.abs(expr.coeffs)))
        if np.max(np.abs(expr.coeffs[0])) > MEAN_TOL * scale:
            raise StructureError("KP residual expression has a non-negligible x-mean")
        return (1.0 / eps) * derivative(project_zero_x_mean(expr), "x", 1, antiderivative_x=True)

    spec = NormSpec.semiclassical(2, eps, anisotropic=True)
    return halving_residual(sigma, h, spec, abs_floor=roundoff_floor(u, spec))


def residual_kp(
    ansatz: KPAnsatz, t: float, grid: TorusGrid2D, dt_fd: float | None = None, include_b2: bool = True
) -> SpectralField:
    """Sigma with eps d_x Sigma equal to the KP operator applied to u_app."""
    _check_grid(ansatz, grid)
    return residual_from_assembly_kp(
        lambda s: assemble_uapp_kp(ansatz, s, grid, include_b2), t, ansatz.eps, ansatz.phase.lam, dt_fd
    )
