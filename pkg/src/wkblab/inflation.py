"""Physical-frame scalings and norm-inflation sweeps.

A semiclassical solution u^eps(t, x) corresponds to the physical solution
v(T, X) = eps^{-alpha} u^eps(T eps^{-beta}, X eps^{-gamma}).  For beta < 2 the
spatial dilation turns the 2 pi torus into one of period 2 pi eps^{gamma};
on the Fourier side this only relabels wavenumbers, so the coefficients are
reused on a grid carrying the larger period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .analysis import PowerLawFit, extract_harmonic, fit_power_law, zero_mode_check
from .errors import ConfigError, GridError, WkbLabError
from .profiles import Profile
from .solvers import SolverConfig, Trajectory, solve_kdv, solve_kp
from .spectral import NormSpec, SpectralField, TorusGrid1D, l2_norm, make_grid, norm
from .wkb_kdv import assemble_uapp_kdv, build_kdv_ansatz
from .wkb_kp import KPPhase, assemble_uapp_kp, build_kp_ansatz

Sigma = Union[float, tuple[float, float]]


@dataclass(frozen=True)
class ScalingParams:
    beta: float
    alpha: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.beta <= 2.0:
            raise ValueError("beta must lie in (0, 2]")
        chain = (1.0 + self.beta, 3.0 + 3.0 * self.gamma, 2.0 + self.alpha + self.gamma)
        if max(chain) - min(chain) > 1e-12:
            raise ValueError(f"inconsistent scaling exponents {self}")


def scaling_params(beta: float) -> ScalingParams:
    if not 0.0 < beta <= 2.0:
        raise ValueError("beta must lie in (0, 2]")
    return ScalingParams(beta, (2.0 * beta - 1.0) / 3.0, (beta - 2.0) / 3.0)


def to_physical_kdv(u: SpectralField, eps: float, params: ScalingParams, t_wkb: float) -> tuple[SpectralField, float]:
    """Map a semiclassical field at WKB time t to the physical field and time eps^beta t."""
    if u.grid.ndim != 1 or abs(u.grid.period - 2.0 * math.pi) > 1e-12:
        raise GridError("to_physical_kdv expects a field on the standard 2 pi torus")
    grid = u.grid.with_period(2.0 * math.pi * eps**params.gamma)
    v = SpectralField._trusted(grid, u.coeffs * eps ** (-params.alpha), u.real)
    return v, eps**params.beta * t_wkb


def from_physical_kdv(v: SpectralField, eps: float, params: ScalingParams, t_phys: float) -> tuple[SpectralField, float]:
    grid = v.grid.with_period(2.0 * math.pi)
    u = SpectralField._trusted(grid, v.coeffs * eps**params.alpha, v.real)
    return u, t_phys * eps ** (-params.beta)


def to_physical_kp(u: SpectralField, eps: float, t_wkb: float) -> tuple[SpectralField, float]:
    """v(t, x, y) = eps^{-1} u(t / eps^2, x, y)."""
    return (1.0 / eps) * u, eps**2 * t_wkb


def from_physical_kp(v: SpectralField, eps: float, t_phys: float) -> tuple[SpectralField, float]:
    return eps * v, t_phys / eps**2


def choose_tau(profile: Profile, speed: float = 3.0, margin: float = 0.2) -> float:
    """Time after which the translate alpha(. + speed tau) has left supp alpha, on the torus."""
    w = profile.half_width
    if w >= math.pi / 2:
        raise ValueError("half_width must be below pi/2")
    shift = 2.0 * w + margin
    if shift + 2.0 * w > 2.0 * math.pi:
        raise ValueError(f"no admissible tau: supports of width {2 * w:.3f} cannot be disjoint after shift {shift:.3f}")
    return shift / abs(speed)


def supports_disjoint(profile: Profile, shift: float) -> bool:
    """Interval check that [c-w, c+w] and its translate by -shift do not meet mod 2 pi."""
    w = profile.half_width
    d = shift % (2.0 * math.pi)
    return d >= 2.0 * w and 2.0 * math.pi - d >= 2.0 * w


def prepare_initial_kdv(profile: Profile, eps: float, grid: TorusGrid1D) -> SpectralField:
    """alpha e^{ix/eps} - eps alpha^2 e^{2ix/eps} + c.c."""
    if round(1.0 / eps) != grid.carrier_N:
        raise GridError("grid is not commensurate with eps")
    x, n = grid.x, grid.carrier_N
    a = profile(x)
    return SpectralField.from_samples(grid, 2.0 * (a * np.cos(n * x) - eps * a**2 * np.cos(2 * n * x)), real=True)


def prepare_initial(equation: str, profiles, eps: float, grid, phase: Optional[KPPhase] = None) -> SpectralField:
    if equation == "kdv":
        profile = profiles[0] if isinstance(profiles, (tuple, list)) else profiles
        return prepare_initial_kdv(profile, eps, grid)
    if equation == "kp":
        ansatz = build_kp_ansatz(tuple(profiles), phase or KPPhase(), eps)
        return assemble_uapp_kp(ansatz, 0.0, grid)
    raise ValueError(f"unknown equation {equation!r}")


@dataclass(frozen=True)
class InflationConfig:
    equation: str = "kdv"
    s1: float = -1.5
    s2: float = -0.25
    sigma_list: tuple = (-1.5, -2.0, -3.0)
    K: float = 3.0
    beta: float = 2.0
    eps_list: tuple = (1 / 16, 1 / 32, 1 / 64, 1 / 128)
    tau: Optional[float] = None
    profiles: tuple = (Profile(0.0, 1.5, 1.0),)
    amplitude_boost: Optional[float] = None
    delta: float = 0.5
    phase: KPPhase = KPPhase()
    oversample: int = 8
    solver: SolverConfig = SolverConfig(dt_factor=0.05)
    expected_data_slope: Optional[float] = None
    expected_ratio_slope: Optional[float] = None
    slope_tol: float = 0.1
    min_limit_slope: Optional[float] = None
    limit_sigma: Optional[Sigma] = None

    def violations(self) -> list[str]:
        out = []
        if self.equation not in ("kdv", "kp"):
            out.append(f"equation must be kdv or kp, got {self.equation!r}")
            return out
        if self.equation == "kdv" and not self.s1 < -1:
            out.append("s1 < -1 required (Theorem 1.1 hypothesis)")
        if self.equation == "kp" and not self.s1 + 2 * self.s2 < -1:
            out.append("s1 + 2 s2 < -1 required (KP inflation hypothesis)")
        if not 0.0 < self.beta <= 2.0:
            out.append("beta must lie in (0, 2]")
        if self.equation == "kp" and self.beta != 2.0:
            out.append("KP sweeps use the beta = 2 scaling")
        if self.K <= 0:
            out.append("K must be positive")
        if self.delta <= 0:
            out.append("delta must be positive")
        if self.amplitude_boost is not None and self.amplitude_boost < 1:
            out.append("amplitude_boost must be >= 1")
        for sig in self.sigma_list:
            level = sig[0] + 2 * sig[1] if isinstance(sig, (tuple, list)) else sig
            if not -self.K <= level < -1:
                out.append(f"sigma {sig} must satisfy -K <= sigma < -1")
        eps = list(self.eps_list)
        if len(eps) < 3:
            out.append("eps_list needs at least three values")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            out.append("eps_list must be decreasing")
        if any(abs(round(1 / e) * e - 1) > 1e-12 for e in eps):
            out.append("every eps must be the reciprocal of an integer")
        return out

    def validate(self) -> None:
        bad = self.violations()
        if bad:
            raise ConfigError(bad)

    @property
    def speed(self) -> float:
        return 3.0 if self.equation == "kdv" else self.phase.speed


@dataclass
class InflationRow:
    eps: float
    status: str = "ok"
    data_norm: float = float("nan")
    sigma_norms: dict = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)
    limit_errors: dict = field(default_factory=dict)
    bootstrap_max: float = float("nan")
    mass_drift: float = float("nan")
    l2_drift: float = float("nan")
    richardson_diff: float = float("nan")
    halvings: int = 0
    t_physical: float = float("nan")
    zero_mode_error: float = float("nan")
    zero_mode_ratio: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class InflationReport:
    config: InflationConfig
    tau: float
    amplitude_boost: float
    a0_floor: float
    rows: list[InflationRow]
    data_fit: Optional[PowerLawFit] = None
    ratio_fits: dict = field(default_factory=dict)
    limit_fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _sigma_spec(sig: Sigma) -> NormSpec:
    return NormSpec.aniso(*sig) if isinstance(sig, (tuple, list)) else NormSpec.sobolev(sig)


def _top_sigma(sigmas) -> Sigma:
    return max(sigmas, key=lambda s: s[0] + 2 * s[1] if isinstance(s, (tuple, list)) else s)


def _a0_field(cfg: InflationConfig, profiles, tau: float, grid) -> SpectralField:
    if cfg.equation == "kdv":
        return build_kdv_ansatz(profiles[0], 0.5).field("a0", tau, grid)
    return build_kp_ansatz(tuple(profiles), cfg.phase, 0.5).field("a0", tau, grid)


def _reference_grid(cfg: InflationConfig):
    if cfg.equation == "kdv":
        return TorusGrid1D(2, 8, 1024)
    return make_grid(2, 32, k1=cfg.phase.k1, k2=cfg.phase.k2, min_points_y=256)


def a0_floor(cfg: InflationConfig, profiles, tau: float) -> float:
    """inf over sigma_list of ||a0(tau)||_{H^sigma}.

    H^sigma norms grow with sigma, so the infimum sits at the most negative index;
    every index is evaluated since anisotropic pairs are only partially ordered.
    """
    a0 = _a0_field(cfg, profiles, tau, _reference_grid(cfg))
    return min(norm(a0, _sigma_spec(s)) for s in cfg.sigma_list)


def find_amplitude_boost(cfg: InflationConfig, tau: float, iterations: int = 60) -> float:
    """Smallest boost N >= 1 (to bisection accuracy) with inf_sigma ||a0(tau)||_{H^sigma} > 2/delta."""
    target = 2.0 / cfg.delta

    def floor(boost: float) -> float:
        return a0_floor(cfg, [p.scaled(boost) for p in cfg.profiles], tau)

    if floor(1.0) > target:
        return 1.0
    lo, hi = 1.0, 2.0
    while floor(hi) <= target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise WkbLabError("no amplitude boost reaches the a0 threshold")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if floor(mid) <= target else (lo, mid)
    return hi


def _kdv_row(cfg: InflationConfig, profile: Profile, eps: float, tau: float, params: ScalingParams) -> InflationRow:
    row = InflationRow(eps)
    grid = make_grid(round(1 / eps), cfg.oversample)
    ansatz = build_kdv_ansatz(profile, eps)
    u0 = prepare_initial_kdv(profile, eps, grid)
    solver = replace(cfg.solver, final_time=tau)
    traj = solve_kdv(u0, eps, solver, reference=lambda t: assemble_uapp_kdv(ansatz, t, grid))
    _fill_run(row, traj)
    v0, _ = to_physical_kdv(u0, eps, params, 0.0)
    v, row.t_physical = to_physical_kdv(traj.final, eps, params, tau)
    a0_phys, _ = to_physical_kdv(eps * ansatz.field("a0", tau, grid), eps, params, tau)
    _fill_norms(row, cfg, v0, v, a0_phys)
    row.zero_mode_error = zero_mode_check(traj, ansatz, traj.times[-1])
    a0 = ansatz.field("a0", tau, grid)
    row.zero_mode_ratio = l2_norm(extract_harmonic(traj.final, 0, eps)) / (eps * l2_norm(a0))
    return row


def _kp_row(cfg: InflationConfig, profiles, eps: float, tau: float) -> InflationRow:
    row = InflationRow(eps)
    grid = make_grid(round(1 / eps), cfg.oversample, k1=cfg.phase.k1, k2=cfg.phase.k2)
    ansatz = build_kp_ansatz(tuple(profiles), cfg.phase, eps)
    u0 = assemble_uapp_kp(ansatz, 0.0, grid)
    solver = replace(cfg.solver, final_time=tau)
    traj = solve_kp(u0, cfg.phase, eps, solver, reference=lambda t: assemble_uapp_kp(ansatz, t, grid))
    _fill_run(row, traj)
    v0, _ = to_physical_kp(u0, eps, 0.0)
    v, row.t_physical = to_physical_kp(traj.final, eps, tau)
    _fill_norms(row, cfg, v0, v, ansatz.field("a0", tau, grid))
    return row


def _fill_run(row: InflationRow, traj: Trajectory) -> None:
    row.bootstrap_max = traj.bootstrap_max
    row.mass_drift, row.l2_drift = traj.mass_drift, traj.l2_drift
    row.richardson_diff, row.halvings = traj.richardson_diff, traj.halvings
    if not traj.converged:
        row.status = "unconverged"


def _fill_norms(row: InflationRow, cfg: InflationConfig, v0, v, a0) -> None:
    data_spec = NormSpec.aniso(cfg.s1, cfg.s2) if cfg.equation == "kp" else NormSpec.sobolev(cfg.s1)
    row.data_norm = norm(v0, data_spec)
    for sig in cfg.sigma_list:
        spec = _sigma_spec(sig)
        row.sigma_norms[sig] = norm(v, spec)
        row.ratios[sig] = row.sigma_norms[sig] / row.data_norm
        row.limit_errors[sig] = norm(v - a0, spec)
    if cfg.limit_sigma is not None and cfg.limit_sigma not in row.limit_errors:
        row.limit_errors[cfg.limit_sigma] = norm(v - a0, _sigma_spec(cfg.limit_sigma))


@dataclass(frozen=True)
class _RowJob:
    cfg: InflationConfig
    profiles: tuple
    tau: float

    def __call__(self, eps: float) -> InflationRow:
        try:
            if self.cfg.equation == "kdv":
                return _kdv_row(self.cfg, self.profiles[0], eps, self.tau, scaling_params(self.cfg.beta))
            return _kp_row(self.cfg, self.profiles, eps, self.tau)
        except WkbLabError as exc:
            return InflationRow(eps, status=f"failed: {exc}")


def run_inflation(cfg: InflationConfig, jobs: int = 1) -> InflationReport:
    """One solver run per eps (rows may run in worker processes), then the slope fits."""
    from .sweeps import pmap

    cfg.validate()
    tau = cfg.tau if cfg.tau is not None else choose_tau(cfg.profiles[0], cfg.speed)
    boost = cfg.amplitude_boost if cfg.amplitude_boost is not None else find_amplitude_boost(cfg, tau)
    profiles = tuple(p.scaled(boost) for p in cfg.profiles)
    rows = pmap(_RowJob(cfg, profiles, tau), list(cfg.eps_list), jobs)
    report = InflationReport(cfg, tau, boost, a0_floor(cfg, profiles, tau), rows)
    _summarize(report)
    return report


def _summarize(report: InflationReport) -> None:
    cfg = report.config
    good = [r for r in report.rows if r.ok]
    report.checks["all_rows_completed"] = len(good) == len(report.rows)
    report.checks["a0_above_threshold"] = report.a0_floor > 2.0 / cfg.delta
    if len(good) < 3:
        report.checks["enough_rows"] = False
        return
    eps = [r.eps for r in good]
    report.data_fit = fit_power_law(eps, [r.data_norm for r in good])
    for sig in cfg.sigma_list:
        report.ratio_fits[sig] = fit_power_law(eps, [r.ratios[sig] for r in good])
    for sig in good[0].limit_errors:
        report.limit_fits[sig] = fit_power_law(eps, [r.limit_errors[sig] for r in good])
    report.checks["inflation_shape"] = report.data_fit.slope > 0 and all(
        f.slope < 0 for f in report.ratio_fits.values()
    )
    if cfg.expected_data_slope is not None:
        report.checks["data_slope"] = abs(report.data_fit.slope - cfg.expected_data_slope) <= cfg.slope_tol
    if cfg.expected_ratio_slope is not None:
        report.checks["ratio_slopes"] = all(
            abs(f.slope - cfg.expected_ratio_slope) <= cfg.slope_tol for f in report.ratio_fits.values()
        )
    if cfg.equation == "kdv" and cfg.beta == 2.0:
        # ||v - a0||_{H^sigma} <~ eps^{|sigma|-1} + eps^2
        report.checks["limit_slopes"] = all(
            report.limit_fits[sig].slope >= min(abs(sig) - 1.0, 2.0) - 0.2 for sig in cfg.sigma_list
        )
    if cfg.min_limit_slope is not None:
        sig = cfg.limit_sigma if cfg.limit_sigma is not None else _top_sigma(cfg.sigma_list)
        report.checks["limit_slope"] = report.limit_fits[sig].slope >= cfg.min_limit_slope
    over = [r.eps for r in good if not r.bootstrap_max <= 1.0]
    if over:
        report.warnings.append(
            "bootstrap quantity exceeded 1 at eps = " + ", ".join(f"1/{round(1 / e)}" for e in over)
        )
