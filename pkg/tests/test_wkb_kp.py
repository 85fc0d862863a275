import math

import numpy as np
import pytest

from wkblab.analysis import extract_harmonic
from wkblab.errors import GridError
from wkblab.profiles import Profile
from wkblab.spectral import NormSpec, SpectralField, l2_norm, make_grid, norm
from wkblab.wkb_kp import (
    KPPhase,
    assemble_potential_kp,
    assemble_uapp_kp,
    build_kp_ansatz,
    kp_dispersion,
    residual_from_assembly_kp,
    residual_kp,
)

PROFILES = (Profile(), Profile())
PHASE = KPPhase()


def mesh(grid):
    return grid.open_mesh()


class TestPhase:
    @pytest.mark.parametrize("k,w", [((1, 1, 1), 0.0), ((1, 1, -1), 2.0), ((2, 3, 1), 3.5)])
    def test_dispersion_examples(self, k, w):
        assert kp_dispersion(*k) == w

    def test_rejects_zero_k1(self):
        with pytest.raises(ValueError):
            kp_dispersion(0, 1, 1)
        with pytest.raises(ValueError):
            KPPhase(k1=0)
        with pytest.raises(ValueError):
            KPPhase(lam=2)

    def test_omega_is_exact_rational(self):
        ph = KPPhase(3, 2, 1)
        assert ph.omega_exact.numerator == 77 and ph.omega_exact.denominator == 3

    def test_eikonal_vanishes_on_dispersion_relation(self):
        for lam in (1, -1):
            for k1 in [k for k in range(-10, 11) if k]:
                for k2 in range(-10, 11):
                    ph = KPPhase(k1, k2, lam)
                    assert ph.eikonal() == pytest.approx(0.0, abs=1e-9 * k1**4)

    def test_transport_speed_never_degenerate_for_integer_modes(self):
        # c = 0 needs k2^2 = 3 k1^4, which has no integer solution
        for k1 in [k for k in range(-10, 11) if k]:
            for k2 in range(-10, 11):
                assert KPPhase(k1, k2, -1).speed_exact != 0


class TestAmplitudes:
    eps = 1 / 4
    ansatz = build_kp_ansatz(PROFILES, PHASE, eps)
    grid = make_grid(4, 8, k1=1, k2=1)

    def test_tilde_relations(self):
        x, y = mesh(self.grid)
        k1 = PHASE.k1
        for t in (0.0, 0.3):
            t1, t2, t3 = (self.ansatz.at(j, t, x, y) for j in (1, 2, 3))
            assert np.allclose(t1, 1j * k1 * self.ansatz.a1(t, x, y), atol=1e-15)
            assert np.max(np.abs(t2 - t1**2 / (6 * k1**2))) <= 1e-12
            assert np.max(np.abs(t3 - t1 * t2 / (8 * k1**2))) <= 1e-12

    def test_tilde_round_trip(self):
        x, y = mesh(self.grid)
        for j in (1, 2, 3):
            back = self.ansatz.at(j, 0.2, x, y) / (1j * j * PHASE.k1)
            assert np.max(np.abs(back - getattr(self.ansatz, f"a{j}")(0.2, x, y))) <= 1e-14

    @pytest.mark.parametrize("phase", [KPPhase(1, 1, 1), KPPhase(1, 1, -1), KPPhase(2, 3, 1), KPPhase(-1, 2, -1)])
    def test_harmonic_plug_back(self, phase):
        an = build_kp_ansatz(PROFILES, phase, 1 / 4)
        x = np.linspace(-0.4, 0.4, 33)[:, None]
        y = np.linspace(-0.4, 0.4, 17)[None, :]
        k1, k2, lam, w = phase.k1, phase.k2, phase.lam, phase.omega
        t1, t2, t3 = (an.at(j, 0.1, x, y) for j in (1, 2, 3))
        a2, a3 = an.a2(0.1, x, y), an.a3(0.1, x, y)
        second = 2j * w * t2 - 1j * (2 * k1) ** 3 * t2 - lam * (2 * k2) ** 2 * a2 + 1j * k1 * t1**2
        third = 3j * w * t3 - 1j * (3 * k1) ** 3 * t3 - lam * (3 * k2) ** 2 * a3 + 3j * k1 * t1 * t2
        assert np.max(np.abs(second)) <= 1e-10
        assert np.max(np.abs(third)) <= 1e-10

    def test_zero_mode_initially_zero_and_real(self):
        x, y = mesh(self.grid)
        assert np.all(self.ansatz.a0(0.0, x, y) == 0.0)
        assert np.isrealobj(self.ansatz.a0(0.4, x, y))

    def test_zero_mode_against_time_quadrature(self):
        # a0(tau) = -k1^2 int_0^tau d_x |a1|^2 ds, with d_x |a1|^2 = 2 a a' (x + c s) a_y^2
        tau = 0.4
        x, y = mesh(self.grid)
        px, py = PROFILES
        c, k1 = PHASE.speed, PHASE.k1
        nodes, weights = np.polynomial.legendre.leggauss(40)
        acc = np.zeros(np.broadcast_shapes(x.shape, y.shape))
        for panel in range(20):
            lo, hi = panel * tau / 20, (panel + 1) * tau / 20
            for s, w in zip(0.5 * (hi - lo) * nodes + 0.5 * (hi + lo), weights):
                acc = acc + 0.5 * (hi - lo) * w * (-(k1**2) * 2 * px(x + c * s) * px(x + c * s, 1) * py(y) ** 2)
        diff = SpectralField.from_samples(self.grid, self.ansatz.a0(tau, x, y) - acc)
        assert l2_norm(diff) <= 1e-10

    def test_zero_mode_is_rank_one(self):
        x, y = mesh(self.grid)
        s = np.linalg.svd(self.ansatz.a0(0.5, x, y), compute_uv=False)
        assert s[1] <= 1e-10 * s[0]

    def test_zero_mode_total_integral_vanishes(self):
        # separable, so integrate the x-factor on a fine grid and the y-factor on the grid
        xf = np.linspace(0, 2 * math.pi, 8192, endpoint=False)[:, None]
        _, y = mesh(self.grid)
        for t in (0.1, 0.5, 1.0):
            total = np.sum(self.ansatz.a0(t, xf, y)) * (2 * math.pi / 8192) * self.grid.dy
            assert abs(total) <= 1e-12

    def test_separable_b1_matches_generic_quadrature(self):
        x, y = mesh(self.grid)
        fast = self.ansatz.b1(0.3, x, y)
        X, Y = np.broadcast_arrays(x, y)
        slow = self.ansatz.b1(0.3, X.copy(), Y.copy())
        assert np.max(np.abs(fast - slow)) <= 1e-12 * max(1.0, np.max(np.abs(slow)))

    def test_rejects_bad_eps_and_quadrature(self):
        with pytest.raises(ValueError):
            build_kp_ansatz(PROFILES, PHASE, 0.3)
        with pytest.raises(ValueError):
            build_kp_ansatz(PROFILES, PHASE, 1 / 4, quadrature_steps=15)


class TestAssembly:
    eps = 1 / 4
    grid = make_grid(4, 8, k1=1, k2=1)

    @pytest.mark.parametrize("lam", [1, -1])
    def test_oscillatory_part_has_zero_x_mean(self, lam):
        an = build_kp_ansatz(PROFILES, KPPhase(1, 1, lam), self.eps)
        x, y = mesh(self.grid)
        for t in (0.0, 0.3):
            u = assemble_uapp_kp(an, t, self.grid)
            osc = u - SpectralField.from_samples(self.grid, self.eps * an.a0(t, x, y))
            assert np.max(np.abs(osc.coeffs[0])) <= 1e-12

    def test_assembly_is_real(self):
        an = build_kp_ansatz(PROFILES, PHASE, self.eps)
        u = assemble_uapp_kp(an, 0.3, self.grid)
        raw = np.fft.ifft2(u.coeffs) * u.coeffs.size
        assert np.max(np.abs(raw.imag)) <= 1e-12

    def test_first_harmonic_tracks_tilde_amplitude(self):
        p = (Profile(half_width=1.2), Profile(half_width=1.2))
        errs = []
        for n in (4, 8):
            g = make_grid(n, 8, k1=1, k2=1)
            an = build_kp_ansatz(p, PHASE, 1 / n)
            x, y = mesh(g)
            h = extract_harmonic(assemble_uapp_kp(an, 0.0, g), 1, 1 / n)
            ref = SpectralField.from_samples(g, an.at(1, 0.0, x, y), real=False)
            errs.append(l2_norm(h - ref) / l2_norm(ref))
        # O(eps) discrepancy: eps d_x a1 plus window leakage
        assert errs[1] < errs[0] and errs[1] <= 0.25

    def test_grid_checks(self):
        an = build_kp_ansatz(PROFILES, PHASE, self.eps)
        with pytest.raises(GridError):
            assemble_potential_kp(an, 0.0, make_grid(4, 8, k1=1, k2=2))
        with pytest.raises(GridError):
            assemble_potential_kp(an, 0.0, make_grid(4))


class TestResidual:
    @pytest.mark.parametrize("phase", [KPPhase(1, 1, 1), KPPhase(1, 1, -1)])
    def test_linear_plane_wave_exact(self, phase):
        n = 4
        g = make_grid(n, 8, k1=phase.k1, k2=phase.k2)
        x, y = g.open_mesh()

        def wave(s):
            return SpectralField.from_samples(
                g, 2 * np.cos(phase.k1 * n * x + phase.k2 * n * n * y + phase.omega * n * s))

        sigma = residual_from_assembly_kp(wave, 0.2, 1 / n, phase.lam, nonlinearity=0.0)
        assert l2_norm(sigma) <= 1e-10

    def test_default_residual_recorded(self):
        an = build_kp_ansatz(PROFILES, PHASE, 1 / 6)
        g = make_grid(6, 8, k1=1, k2=1)
        value = norm(residual_kp(an, 0.2, g), NormSpec.semiclassical(2, 1 / 6, anisotropic=True))
        assert math.isfinite(value) and value > 0
