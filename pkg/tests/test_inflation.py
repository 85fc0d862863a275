import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkblab.analysis import decompose, fit_power_law
from wkblab.errors import ConfigError, GridError
from wkblab.inflation import (
    InflationConfig,
    a0_floor,
    choose_tau,
    find_amplitude_boost,
    from_physical_kdv,
    from_physical_kp,
    prepare_initial,
    prepare_initial_kdv,
    run_inflation,
    scaling_params,
    supports_disjoint,
    to_physical_kdv,
    to_physical_kp,
)
from wkblab.profiles import Profile
from wkblab.solvers import SolverConfig
from wkblab.spectral import NormSpec, SpectralField, l2_norm, make_grid, norm
from wkblab.wkb_kp import KPPhase


class TestScaling:
    @pytest.mark.parametrize("beta,alpha,gamma", [(2, 1, 0), (0.5, 0, -0.5), (1.7, 0.8, -0.1)])
    def test_examples(self, beta, alpha, gamma):
        p = scaling_params(beta)
        assert p.alpha == pytest.approx(alpha, abs=1e-15)
        assert p.gamma == pytest.approx(gamma, abs=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=1e-6, max_value=2.0))
    def test_consistency_chain(self, beta):
        p = scaling_params(beta)
        assert 1 + p.beta == pytest.approx(3 + 3 * p.gamma, abs=1e-12)
        assert 1 + p.beta == pytest.approx(2 + p.alpha + p.gamma, abs=1e-12)

    @pytest.mark.parametrize("beta", [0.0, -1.0, 2.1])
    def test_out_of_range(self, beta):
        with pytest.raises(ValueError):
            scaling_params(beta)

    def test_beta_two_is_amplitude_rescale(self):
        eps, tau = 1 / 16, 0.4
        u = prepare_initial_kdv(Profile(), eps, make_grid(16))
        v, t = to_physical_kdv(u, eps, scaling_params(2), tau)
        assert np.allclose(v.samples(), u.samples() / eps, rtol=1e-15, atol=0)
        assert t == pytest.approx(eps**2 * tau, rel=1e-15)
        assert v.grid.period == pytest.approx(2 * math.pi, rel=1e-15)

    @pytest.mark.parametrize("beta", [2.0, 1.7, 1.0])
    def test_round_trip(self, beta):
        eps = 1 / 16
        p = scaling_params(beta)
        u = prepare_initial_kdv(Profile(), eps, make_grid(16))
        v, t = to_physical_kdv(u, eps, p, 0.4)
        back, t0 = from_physical_kdv(v, eps, p, t)
        assert l2_norm(back - u) <= 1e-12 * l2_norm(u)
        assert t0 == pytest.approx(0.4, rel=1e-12)

    def test_dilated_torus(self):
        eps = 1 / 16
        v, _ = to_physical_kdv(prepare_initial_kdv(Profile(), eps, make_grid(16)), eps, scaling_params(1.7), 0.0)
        assert v.grid.period == pytest.approx(2 * math.pi * eps**-0.1, rel=1e-14)

    def test_kp_round_trip(self):
        g = make_grid(4, 8, k1=1, k2=1)
        u = prepare_initial("kp", (Profile(), Profile()), 1 / 4, g)
        v, t = to_physical_kp(u, 1 / 4, 0.3)
        assert t == pytest.approx(0.3 / 16)
        back, t0 = from_physical_kp(v, 1 / 4, t)
        assert l2_norm(back - u) <= 1e-12 * l2_norm(u) and t0 == pytest.approx(0.3)

    def test_requires_standard_torus(self):
        u = SpectralField.zeros(make_grid(16).with_period(3.0))
        with pytest.raises(GridError):
            to_physical_kdv(u, 1 / 16, scaling_params(2), 0.0)

    def test_data_norm_decay(self):
        # ||v0||_{H^{-1.5}} ~ eps^{|s|(beta+1)/3 - beta/2} = eps^{0.5} at beta = 2
        eps_list = [1 / 16, 1 / 32, 1 / 64, 1 / 128]
        vals = []
        for eps in eps_list:
            u0 = prepare_initial_kdv(Profile(half_width=1.5), eps, make_grid(round(1 / eps)))
            v0, _ = to_physical_kdv(u0, eps, scaling_params(2), 0.0)
            vals.append(norm(v0, NormSpec.sobolev(-1.5)))
        assert fit_power_law(eps_list, vals).slope == pytest.approx(0.5, abs=0.1)


class TestTau:
    def test_default_profile(self):
        assert choose_tau(Profile(half_width=0.5)) == pytest.approx(0.4, abs=1e-15)

    def test_wide_profile(self):
        p = Profile(half_width=1.4)
        tau = choose_tau(p)
        assert tau == pytest.approx(1.0, abs=1e-15)
        assert supports_disjoint(p, 3 * tau)

    def test_near_limit_errors(self):
        # 4w + 0.2 exceeds 2 pi when w > 1.5208
        with pytest.raises(ValueError):
            choose_tau(Profile(half_width=1.55))

    @pytest.mark.parametrize("w", [0.3, 0.5, 1.0, 1.2, 1.5])
    def test_supports_disjoint_interval_oracle(self, w):
        p = Profile(center=0.2, half_width=w)
        shift = 3 * choose_tau(p)
        # sample both supports and check no point of one lies in the other mod 2 pi
        xs = np.linspace(p.center - w, p.center + w, 2001)
        moved = (xs - shift - (p.center - w)) % (2 * math.pi)
        assert np.all(moved > 2 * w - 1e-12)
        assert supports_disjoint(p, shift)
        assert not supports_disjoint(p, shift - 0.3)

    def test_kp_speed(self):
        assert choose_tau(Profile(), speed=KPPhase().speed) == pytest.approx(1.2 / 4)


class TestInitialData:
    def test_kdv_harmonic_content(self):
        eps, p = 1 / 128, Profile(half_width=1.5)
        g = make_grid(128)
        dec = decompose(prepare_initial_kdv(p, eps, g), eps)
        # the bump is not band-limited; what reaches the empty windows is spectral tail only
        assert l2_norm(dec.harmonics[0]) <= 1e-4
        assert l2_norm(dec.harmonics[3]) <= 1e-6
        two = dec.harmonics[2].samples()
        assert np.max(np.abs(two + eps * p(g.x) ** 2)) <= 1e-2 * eps
        assert np.max(np.abs(dec.harmonics[1].samples() - p(g.x))) <= 1e-3

    def test_kdv_data_is_real(self):
        u = prepare_initial("kdv", Profile(), 1 / 16, make_grid(16))
        assert u.real and np.isrealobj(u.samples())

    def test_kp_zero_x_mean(self):
        u = prepare_initial("kp", (Profile(), Profile()), 1 / 4, make_grid(4, 8, k1=1, k2=1))
        assert np.max(np.abs(u.coeffs[0])) <= 1e-12

    def test_grid_mismatch(self):
        with pytest.raises(GridError):
            prepare_initial_kdv(Profile(), 1 / 8, make_grid(16))


class TestConfig:
    def test_defaults_valid(self):
        assert InflationConfig().violations() == []

    def test_s1_hypothesis_message(self):
        assert "s1 < -1 required (Theorem 1.1 hypothesis)" in InflationConfig(s1=-0.5).violations()

    def test_all_violations_collected(self):
        bad = InflationConfig(s1=-0.5, sigma_list=(-0.5,), eps_list=(1 / 8, 1 / 4, 1 / 16), delta=0).violations()
        assert len(bad) >= 4
        with pytest.raises(ConfigError):
            InflationConfig(s1=-0.5).validate()

    def test_kp_constraint(self):
        ok = InflationConfig(equation="kp", s1=-1, s2=-0.25, sigma_list=((-1, -0.25),))
        assert ok.violations() == []
        assert InflationConfig(equation="kp", s1=-0.5, s2=-0.1, sigma_list=((-1, -0.25),)).violations()

    def test_a0_floor_is_worst_sigma(self):
        cfg = InflationConfig()
        tau = choose_tau(cfg.profiles[0])
        floors = [a0_floor(InflationConfig(sigma_list=(s,)), cfg.profiles, tau) for s in cfg.sigma_list]
        # weaker norms see less of the zero mode
        assert floors == sorted(floors, reverse=True)
        assert a0_floor(cfg, cfg.profiles, tau) == min(floors) == floors[-1]

    def test_amplitude_boost_is_minimal(self):
        cfg = InflationConfig()
        tau = choose_tau(cfg.profiles[0])
        boost = find_amplitude_boost(cfg, tau)
        target = 2 / cfg.delta
        assert a0_floor(cfg, [p.scaled(boost) for p in cfg.profiles], tau) > target
        assert a0_floor(cfg, [p.scaled(boost * (1 - 1e-6)) for p in cfg.profiles], tau) <= target
        # a0 is quadratic in the amplitude
        assert a0_floor(cfg, [p.scaled(2) for p in cfg.profiles], tau) == pytest.approx(
            4 * a0_floor(cfg, cfg.profiles, tau), rel=1e-12)


class TestRun:
    def test_small_kdv_sweep(self):
        cfg = InflationConfig(eps_list=(1 / 8, 1 / 12, 1 / 16), solver=SolverConfig(dt_factor=0.01, richardson=False))
        report = run_inflation(cfg)
        assert len(report.rows) == 3 and all(r.ok for r in report.rows)
        assert report.a0_floor > 2 / cfg.delta
        assert set(report.ratio_fits) == set(cfg.sigma_list)
        for row in report.rows:
            assert row.t_physical == pytest.approx(row.eps**2 * report.tau)
            assert math.isfinite(row.bootstrap_max) and row.l2_drift <= 1e-6
        assert report.checks["all_rows_completed"]
        assert "inflation_shape" in report.checks

    def test_failed_row_does_not_abort(self):
        cfg = InflationConfig(eps_list=(1 / 8, 1 / 12, 1 / 16), amplitude_boost=200.0,
                              solver=SolverConfig(dt_factor=1.0, richardson=False))
        report = run_inflation(cfg)
        assert all(r.status.startswith("failed") for r in report.rows)
        assert not report.passed
