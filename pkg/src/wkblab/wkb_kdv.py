"""WKB approximate solution of the semiclassical KdV equation

    eps u_t + eps^3 u_xxx = 6 eps^2 u u_x

built on the phase phi_1 = x + t with harmonics j = 1, 2, 3 and a zero mode.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GridError, NumericalFailure
from .profiles import Profile
from .spectral import (
    NormSpec,
    SpectralField,
    TorusGrid1D,
    derivative,
    multiply,
    norm,
)


def dispersion_kdv(j: int) -> int:
    return j**3


def resonance_pair(j: int, k: int) -> bool:
    return (j + k) ** 3 == j**3 + k**3


def resonance_triple(k1: int, k2: int, k3: int) -> bool:
    return k1 + k2 + k3 == 0 and k1**3 + k2**3 + k3**3 == 0


def resonance_table(kmax: int) -> tuple[list[tuple[int, int, bool]], list[tuple[int, int, int]]]:
    """All pairs with their resonance flag, and all resonant triples, for |k| <= kmax."""
    rng = range(-kmax, kmax + 1)
    pairs = [(j, k, resonance_pair(j, k)) for j, k in itertools.product(rng, rng)]
    triples = [t for t in itertools.product(rng, rng, rng) if resonance_triple(*t)]
    return pairs, triples


def simpson_weights(steps: int) -> np.ndarray:
    if steps < 2 or steps % 2:
        raise ValueError("composite Simpson needs an even number of panels")
    w = np.ones(steps + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * steps)


def integrate_characteristic(
    rhs: Callable[..., np.ndarray], t: float, speed: float, steps: int, x: np.ndarray, *rest: np.ndarray
) -> np.ndarray:
    """Solve (d_t - speed d_x) b = rhs(t, x, ...) with b(0) = 0 at time t.

    Along the characteristic x + speed*t = const,
    b(t, x) = int_0^t rhs(s, x + speed (t - s)) ds, evaluated by composite Simpson.
    """
    if t == 0.0:
        return np.zeros(np.broadcast_shapes(x.shape, *(r.shape for r in rest)), dtype=complex)
    acc = 0.0
    for s, w in zip(np.linspace(0.0, t, steps + 1), simpson_weights(steps)):
        acc = acc + w * rhs(s, x + speed * (t - s), *rest)
    return t * acc


@dataclass(frozen=True)
class KdVAnsatz:
    """Amplitude evaluators of the KdV WKB construction; all take (t, x) arrays."""

    profile: Profile
    eps: float
    quadrature_steps: int = 256

    SPEED = 3.0

    def _alpha(self, t, x, deriv=0):
        return self.profile(np.asarray(x) + self.SPEED * t, deriv)

    def a1(self, t, x):
        return self._alpha(t, x).astype(complex)

    def a2(self, t, x):
        return -self.a1(t, x) ** 2

    def a3(self, t, x):
        return -0.75 * self.a1(t, x) * self.a2(t, x)

    def a0(self, t, x):
        return 2.0 * (self._alpha(t, x) ** 2 - self.profile(np.asarray(x)) ** 2)

    def c1(self, t, x):
        return np.zeros(np.shape(x), dtype=complex)

    def _b1_rhs(self, s, x):
        a1 = self.a1(s, x)
        return 1j * (6.0 * (self.a0(s, x) * a1 + np.conj(a1) * self.a2(s, x)) - 3.0 * self._alpha(s, x, 2))

    def b1(self, t, x):
        x = np.asarray(x, dtype=float)
        return integrate_characteristic(self._b1_rhs, t, self.SPEED, self.quadrature_steps, x)

    def b2(self, t, x, b1=None):
        # Solved from (d_t - 12 d_x) a2 - 6i b2 = 12i a1 b1 + 6 a1 d_x a1.
        b1 = self.b1(t, x) if b1 is None else b1
        a1 = self.a1(t, x)
        a1_x = self._alpha(t, x, 1)
        transport_a2 = -2.0 * a1 * a1_x * (self.SPEED - 12.0)
        return -(1j / 6.0) * (transport_a2 - 12j * a1 * b1 - 6.0 * a1 * a1_x)

    def field(self, name: str, t: float, grid: TorusGrid1D) -> SpectralField:
        vals = getattr(self, name)(t, grid.x)
        return SpectralField.from_samples(grid, vals, real=np.isrealobj(vals))


def build_kdv_ansatz(profile: Profile, eps: float, quadrature_steps: int = 256) -> KdVAnsatz:
    if quadrature_steps < 16:
        raise ValueError(f"quadrature_steps={quadrature_steps} under-resolves b1 (need >= 16)")
    if quadrature_steps % 2:
        raise ValueError("quadrature_steps must be even for composite Simpson")
    n = round(1.0 / eps)
    if n < 2 or abs(n * eps - 1.0) > 1e-12:
        raise ValueError(f"eps={eps} is not 1/N with integer N >= 2")
    return KdVAnsatz(profile, 1.0 / n, quadrature_steps)


def _check_grid(eps: float, grid) -> None:
    if round(1.0 / eps) != grid.carrier_N:
        raise GridError(f"grid carrier N={grid.carrier_N} does not match eps={eps}")


def assemble_uapp_kdv(ansatz: KdVAnsatz, t: float, grid: TorusGrid1D) -> SpectralField:
    _check_grid(ansatz.eps, grid)
    eps, x = ansatz.eps, grid.x
    e1 = np.exp(1j * grid.carrier_N * (x + t))
    b1 = ansatz.b1(t, x)
    osc = (
        (ansatz.a1(t, x) + eps * b1) * e1
        + eps * (ansatz.a2(t, x) + eps * ansatz.b2(t, x, b1)) * e1**2
        + eps**2 * ansatz.a3(t, x) * e1**3
    )
    return SpectralField.from_samples(grid, 2.0 * osc.real + eps * ansatz.a0(t, x), real=True)


def fd_time_derivative(assemble: Callable[[float], SpectralField], t: float, h: float) -> SpectralField:
    """Fourth-order central difference of a field-valued function of time."""
    fm2, fm1, fp1, fp2 = (assemble(t + j * h) for j in (-2, -1, 1, 2))
    return (fm2 - fp2 + 8.0 * (fp1 - fm1)) * (1.0 / (12.0 * h))


def kdv_operator(u: SpectralField, dudt: SpectralField, eps: float, nonlinearity: float = 1.0) -> SpectralField:
    """eps u_t + eps^3 u_xxx - 6 eps^2 u u_x."""
    out = eps * dudt + eps**3 * derivative(u, "x", 3)
    if nonlinearity:
        out = out - (6.0 * eps**2 * nonlinearity) * multiply(u, derivative(u, "x", 1))
    return out


def roundoff_floor(u: SpectralField, spec: NormSpec) -> float:
    """Residual size below which step halving only compares roundoff."""
    return max(1e-11, 1e-9 * norm(u, spec))


def halving_residual(
    operator: Callable[[float], SpectralField],
    dt_fd: float,
    spec: NormSpec,
    rel_tol: float = 0.05,
    abs_floor: float = 1e-11,
) -> SpectralField:
    """Evaluate ``operator(h)`` at h and h/2 and insist their norms agree to ``rel_tol``."""
    coarse, fine = operator(dt_fd), operator(0.5 * dt_fd)
    nc, nf = norm(coarse, spec), norm(fine, spec)
    if abs(nc - nf) > max(rel_tol * nf, abs_floor):
        raise NumericalFailure(
            f"finite-difference step not converged: residual norm {nc:.3e} at h vs {nf:.3e} at h/2"
        )
    return fine


def residual_from_assembly(
    assemble: Callable[[float], SpectralField],
    t: float,
    eps: float,
    dt_fd: float | None = None,
    nonlinearity: float = 1.0,
) -> SpectralField:
    h = 1e-3 * eps if dt_fd is None else dt_fd
    u = assemble(t)
    spec = NormSpec.semiclassical(2, eps)
    return halving_residual(
        lambda step: kdv_operator(u, fd_time_derivative(assemble, t, step), eps, nonlinearity),
        h,
        spec,
        abs_floor=roundoff_floor(u, spec),
    )


def residual_kdv(ansatz: KdVAnsatz, t: float, grid: TorusGrid1D, dt_fd: float | None = None) -> SpectralField:
    """Residual Sigma of the KdV equation evaluated on the assembled approximate solution."""
    _check_grid(ansatz.eps, grid)
    return residual_from_assembly(lambda s: assemble_uapp_kdv(ansatz, s, grid), t, ansatz.eps, dt_fd)
