"""Epsilon sweeps shared by the CLI and the acceptance harness.

Each sweep point is an independent job; ``jobs > 1`` farms them out to worker
processes.  Results are collected in input order, so output is identical for
any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .analysis import PowerLawFit, extract_harmonic, fit_power_law, wkb_error_kdv, zero_mode_check
from .inflation import choose_tau, prepare_initial_kdv
from .profiles import Profile
from .solvers import SolverConfig, solve_kdv, solve_kp
from .spectral import NormSpec, l2_norm, make_grid, norm
from .wkb_kdv import assemble_uapp_kdv, build_kdv_ansatz, residual_kdv
from .wkb_kp import KPPhase, assemble_uapp_kp, build_kp_ansatz, residual_kp


def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class SweepResult:
    eps_list: tuple[float, ...]
    values: tuple[float, ...]
    fit: PowerLawFit
    extras: tuple[dict, ...] = ()


def _sweep(fn: Callable, eps_list: Sequence[float], jobs: int) -> SweepResult:
    out = pmap(fn, list(eps_list), jobs)
    values = tuple(v for v, _ in out)
    return SweepResult(tuple(eps_list), values, fit_power_law(eps_list, values), tuple(x for _, x in out))


def sample_times(tau: float) -> tuple[float, float, float]:
    return (0.0, 0.5 * tau, tau)


@dataclass(frozen=True)
class _KdVResidualJob:
    profile: Profile
    times: Optional[tuple[float, ...]]

    def __call__(self, eps: float):
        ansatz = build_kdv_ansatz(self.profile, eps)
        grid = make_grid(round(1 / eps), 8)
        times = self.times or sample_times(choose_tau(self.profile))
        spec = NormSpec.semiclassical(2, eps)
        vals = [norm(residual_kdv(ansatz, t, grid), spec) for t in times]
        return max(vals), {"per_time": vals, "times": times}


def residual_sweep_kdv(profile: Profile, eps_list: Sequence[float], times=None, jobs: int = 1) -> SweepResult:
    """max over sample times of ||Sigma||_{H^2_eps}, for each eps."""
    return _sweep(_KdVResidualJob(profile, times), eps_list, jobs)


@dataclass(frozen=True)
class _KPResidualJob:
    profiles: tuple[Profile, Profile]
    phase: KPPhase
    times: Optional[tuple[float, ...]]
    include_b2: bool

    def __call__(self, eps: float):
        ansatz = build_kp_ansatz(self.profiles, self.phase, eps)
        grid = make_grid(round(1 / eps), 8, k1=self.phase.k1, k2=self.phase.k2)
        times = self.times or sample_times(choose_tau(self.profiles[0], self.phase.speed))
        spec = NormSpec.semiclassical(2, eps, anisotropic=True)
        vals = [norm(residual_kp(ansatz, t, grid, include_b2=self.include_b2), spec) for t in times]
        return max(vals), {"per_time": vals, "times": times}


def residual_sweep_kp(profiles, phase: KPPhase, eps_list: Sequence[float], times=None,
                      include_b2: bool = True, jobs: int = 1) -> SweepResult:
    return _sweep(_KPResidualJob(tuple(profiles), phase, times, include_b2), eps_list, jobs)


@dataclass(frozen=True)
class _KdVRunJob:
    profile: Profile
    solver: SolverConfig
    tau: Optional[float] = None
    keep_trajectory: bool = False

    def __call__(self, eps: float):
        tau = self.tau if self.tau is not None else choose_tau(self.profile)
        ansatz = build_kdv_ansatz(self.profile, eps)
        grid = make_grid(round(1 / eps), 8)
        u0 = prepare_initial_kdv(self.profile, eps, grid)
        cfg = replace(self.solver, final_time=tau)
        traj = solve_kdv(u0, eps, cfg, reference=lambda t: assemble_uapp_kdv(ansatz, t, grid))
        _, err = wkb_error_kdv(traj, ansatz)
        a0 = ansatz.field("a0", tau, grid)
        info = {
            "bootstrap_max": traj.bootstrap_max,
            "mass_drift": traj.mass_drift,
            "l2_drift": traj.l2_drift,
            "richardson_diff": traj.richardson_diff,
            "halvings": traj.halvings,
            "converged": traj.converged,
            "zero_mode_error": zero_mode_check(traj, ansatz, tau),
            "a0_l2": l2_norm(a0),
            "zero_mode_l2": l2_norm(extract_harmonic(traj.final, 0, eps)),
        }
        if self.keep_trajectory:
            info["trajectory"] = traj
        return err, info


def kdv_runs(profile: Profile, eps_list: Sequence[float], solver: SolverConfig = SolverConfig(),
             tau: Optional[float] = None, keep_trajectory: bool = False, jobs: int = 1) -> list[tuple[float, dict]]:
    """(sup over snapshots of ||u - u_app||_{H^2_eps}, diagnostics) for each eps."""
    return pmap(_KdVRunJob(profile, solver, tau, keep_trajectory), list(eps_list), jobs)


def wkb_error_sweep_kdv(profile: Profile, eps_list: Sequence[float], solver: SolverConfig = SolverConfig(),
                        jobs: int = 1) -> SweepResult:
    return _sweep(_KdVRunJob(profile, solver), eps_list, jobs)


@dataclass(frozen=True)
class _KPRunJob:
    profiles: tuple[Profile, Profile]
    phase: KPPhase
    solver: SolverConfig

    def __call__(self, eps: float):
        ansatz = build_kp_ansatz(self.profiles, self.phase, eps)
        grid = make_grid(round(1 / eps), 8, k1=self.phase.k1, k2=self.phase.k2)
        u0 = assemble_uapp_kp(ansatz, 0.0, grid)
        traj = solve_kp(u0, self.phase, eps, self.solver,
                        reference=lambda t: assemble_uapp_kp(ansatz, t, grid))
        return traj.bootstrap_max, {
            "mass_drift": traj.mass_drift,
            "l2_drift": traj.l2_drift,
            "richardson_diff": traj.richardson_diff,
            "halvings": traj.halvings,
            "converged": traj.converged,
        }


def run_sweep_kp(profiles, phase: KPPhase, eps_list: Sequence[float], solver: SolverConfig, jobs: int = 1):
    return pmap(_KPRunJob(tuple(profiles), phase, solver), list(eps_list), jobs)
