import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkblab.errors import GridError, StructureError
from wkblab.spectral import (
    NormSpec,
    SpectralField,
    TorusGrid1D,
    dealias,
    derivative,
    l2_norm,
    linf_norm,
    make_grid,
    mean,
    multiply,
    norm,
    upsampled_samples,
)

TWO_PI = 2 * math.pi


def trig_poly(grid, modes, coeffs):
    """Samples of sum c_k e^{ikx} built directly, without any FFT."""
    x = grid.x
    return sum(c * np.exp(1j * k * x) for k, c in zip(modes, coeffs))


class TestGrid:
    def test_resolution_rule_small_carrier(self):
        assert make_grid(2, 8).num_points == 64

    def test_resolution_rule_oversample_below_harmonic_floor(self):
        # 16*16 = 256 < 24*16 = 384, so the rule lands on 512
        assert make_grid(16, 16).num_points == 512

    def test_oversample_dominates(self):
        assert make_grid(16, 64).num_points == 1024

    def test_kp_grid_resolves_y_carrier(self):
        g = make_grid(4, 8, k1=1, k2=1)
        assert g.shape == (128, 512)
        assert g.num_points_y >= 24 * 16
        assert g.carrier_Ny_sq == 16

    def test_rejects_out_of_range(self):
        with pytest.raises(GridError):
            make_grid(1, 8)
        with pytest.raises(GridError):
            make_grid(4, 4)

    def test_memory_cap(self):
        with pytest.raises(GridError):
            make_grid(16, 8, k1=1, k2=1, max_points=1 << 16)

    def test_invariants_enforced_on_direct_construction(self):
        with pytest.raises(GridError):
            TorusGrid1D(16, 8, 256)  # below 24 N
        with pytest.raises(GridError):
            TorusGrid1D(4, 8, 100)  # not a power of two

    def test_eps_is_exact_reciprocal(self):
        g = make_grid(32)
        assert g.eps * g.carrier_N == 1.0


class TestField:
    def test_sample_round_trip(self):
        rng = np.random.default_rng(1)
        g = make_grid(4)
        vals = rng.standard_normal(g.num_points)
        f = SpectralField.from_samples(g, vals)
        assert np.max(np.abs(f.samples() - vals)) <= 1e-12 * np.max(np.abs(vals))

    def test_hermitian_check(self):
        g = make_grid(2)
        c = np.zeros(g.shape, dtype=complex)
        c[1] = 1.0
        with pytest.raises(StructureError):
            SpectralField(g, c, real=True)
        SpectralField(g, c, real=False)

    def test_grid_mismatch(self):
        a = SpectralField.zeros(make_grid(2))
        b = SpectralField.zeros(make_grid(4))
        with pytest.raises(GridError):
            a + b

    def test_mean_is_average(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, lambda x: 3.0 + np.cos(x))
        assert mean(f) == pytest.approx(3.0, abs=1e-14)


class TestDerivative:
    def test_first_derivative_single_mode(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, lambda x: np.exp(3j * x), real=False)
        d = derivative(f, "x", 1)
        assert np.allclose(d.samples(), 3j * np.exp(3j * g.x), atol=1e-12)

    def test_antiderivative_of_cos(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, np.cos)
        assert np.allclose(derivative(f, "x", 1, antiderivative_x=True).samples(), np.sin(g.x), atol=1e-13)

    def test_antiderivative_rejects_mean(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, lambda x: 1.0 + np.cos(x))
        with pytest.raises(StructureError):
            derivative(f, "x", 1, antiderivative_x=True)

    def test_kp_operator_on_monomial(self):
        # d_y^2 sin x cos y = -sin x cos y; d_x^{-1} of that = cos x cos y
        g = make_grid(4, 8, k1=1, k2=1)
        f = SpectralField.from_function(g, lambda x, y: np.sin(x) * np.cos(y))
        out = derivative(derivative(f, "y", 2), "x", 1, antiderivative_x=True)
        x, y = g.mesh()
        # roundoff grows like k_y^2 on the 512-point y axis
        assert np.max(np.abs(out.samples() - np.cos(x) * np.cos(y))) <= 1e-10

    def test_y_axis_absent_in_1d(self):
        with pytest.raises(GridError):
            derivative(SpectralField.zeros(make_grid(2)), "y", 1)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_derivative_then_antiderivative_identity(self, seed):
        rng = np.random.default_rng(seed)
        g = make_grid(2)
        c = np.zeros(g.shape, dtype=complex)
        c[1:9] = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        c[-8:] = np.conj(c[1:9][::-1])
        f = SpectralField(g, c)
        back = derivative(derivative(f, "x", 1), "x", 1, antiderivative_x=True)
        assert l2_norm(back - f) <= 1e-12 * l2_norm(f)


class TestNorms:
    def test_constant(self):
        g = make_grid(2)
        one = SpectralField.from_function(g, lambda x: np.ones_like(x))
        for s in (-3.0, -1.0, 0.0, 2.0):
            assert norm(one, NormSpec.sobolev(s)) == pytest.approx(math.sqrt(TWO_PI), rel=1e-14)

    def test_single_mode_negative_index(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, lambda x: np.exp(4j * x), real=False)
        assert norm(f, NormSpec.sobolev(-1)) == pytest.approx(math.sqrt(TWO_PI / 17), rel=1e-13)

    def test_semiclassical_carrier(self):
        n = 16
        g = make_grid(n)
        f = SpectralField.from_function(g, lambda x: np.exp(1j * n * x), real=False)
        assert norm(f, NormSpec.semiclassical(2, 1 / n)) == pytest.approx(math.sqrt(4 * math.pi), rel=1e-13)

    def test_sobolev_matches_direct_coefficient_sum(self):
        rng = np.random.default_rng(7)
        g = make_grid(4)
        modes = np.arange(-12, 13)
        c = rng.standard_normal(modes.size) + 1j * rng.standard_normal(modes.size)
        f = SpectralField.from_samples(g, trig_poly(g, modes, c), real=False)
        s = -1.5
        oracle = math.sqrt(TWO_PI * sum((1 + k * k) ** s * abs(ck) ** 2 for k, ck in zip(modes, c)))
        assert norm(f, NormSpec.sobolev(s)) == pytest.approx(oracle, rel=1e-10)

    def test_sobolev_matches_fine_quadrature(self):
        # coefficients recovered by trapezoid quadrature on a 16x finer grid
        rng = np.random.default_rng(8)
        g = make_grid(4)
        modes = np.arange(-10, 11)
        c = rng.standard_normal(modes.size) + 1j * rng.standard_normal(modes.size)
        f = SpectralField.from_samples(g, trig_poly(g, modes, c), real=False)
        xf = np.linspace(0, TWO_PI, 16 * g.num_points, endpoint=False)
        vals = sum(ck * np.exp(1j * k * xf) for k, ck in zip(modes, c))
        quad = {k: np.mean(vals * np.exp(-1j * k * xf)) for k in modes}
        oracle = math.sqrt(TWO_PI * sum((1 + k * k) ** -1.5 * abs(quad[k]) ** 2 for k in modes))
        assert norm(f, NormSpec.sobolev(-1.5)) == pytest.approx(oracle, rel=1e-10)

    def test_aniso_weights(self):
        g = make_grid(2, 8, k1=1, k2=1)
        f = SpectralField.from_function(g, lambda x, y: np.exp(1j * (2 * x + 3 * y)), real=False)
        expected = math.sqrt(TWO_PI**2 * (1 + 4) ** -1 * (1 + 9) ** -0.5)
        assert norm(f, NormSpec.aniso(-1, -0.5)) == pytest.approx(expected, rel=1e-13)

    def test_semiclassical_aniso_y_weight(self):
        n = 2
        g = make_grid(n, 8, k1=1, k2=1)
        f = SpectralField.from_function(g, lambda x, y: np.exp(1j * n * n * y), real=False)
        # (eps^2 k_y)^{2k} = 1 at k_y = N^2
        assert norm(f, NormSpec.semiclassical(2, 1 / n, anisotropic=True)) == pytest.approx(
            math.sqrt(2 * TWO_PI**2), rel=1e-13)

    def test_linf_and_l2_single_mode(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, lambda x: np.exp(3j * x), real=False)
        assert linf_norm(f) == pytest.approx(1.0, rel=1e-13)
        assert l2_norm(f) == pytest.approx(math.sqrt(TWO_PI), rel=1e-13)
        assert linf_norm(SpectralField.from_function(g, lambda x: 2 * np.cos(x))) == pytest.approx(2.0, rel=1e-13)

    def test_linf_against_refined_sampling(self):
        rng = np.random.default_rng(3)
        g = make_grid(2)
        modes = np.arange(-6, 7)
        c = rng.standard_normal(13) + 1j * rng.standard_normal(13)
        f = SpectralField.from_samples(g, trig_poly(g, modes, c), real=False)
        xf = np.linspace(0, TWO_PI, 10 * 2 * g.num_points, endpoint=False)
        oracle = np.max(np.abs(sum(ck * np.exp(1j * k * xf) for k, ck in zip(modes, c))))
        # twofold upsampling: never above the true sup, and within a percent of it
        assert linf_norm(f) <= oracle * (1 + 1e-12)
        assert linf_norm(f) >= oracle * (1 - 1e-2)

    def test_upsampling_interpolates(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, lambda x: np.sin(5 * x))
        xf = np.linspace(0, TWO_PI, 2 * g.num_points, endpoint=False)
        assert np.allclose(upsampled_samples(f, 2), np.sin(5 * xf), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-3, 1), st.floats(0.1, 2))
    def test_monotone_in_s_and_homogeneous(self, seed, s, step):
        rng = np.random.default_rng(seed)
        g = make_grid(2)
        f = SpectralField.from_samples(g, rng.standard_normal(g.num_points))
        lo, hi = norm(f, NormSpec.sobolev(s)), norm(f, NormSpec.sobolev(s - step))
        assert hi <= lo * (1 + 1e-12)
        assert norm(3.5 * f, NormSpec.sobolev(s)) == pytest.approx(3.5 * lo, rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_parseval_and_semiclassical_dominance(self, seed):
        rng = np.random.default_rng(seed)
        g = make_grid(4)
        vals = rng.standard_normal(g.num_points)
        f = SpectralField.from_samples(g, vals)
        assert l2_norm(f) ** 2 == pytest.approx(np.sum(vals**2) * g.dx, rel=1e-12)
        assert norm(f, NormSpec.semiclassical(2, 0.25)) >= l2_norm(f)

    def test_sobolev_embedding_bound(self):
        # |eps f'|_inf <= C eps^{-1/2} |f|_{H^2_eps}; Cauchy-Schwarz gives C = 1 with room
        C = 1.0
        rng = np.random.default_rng(11)
        worst = 0.0
        for i in range(200):
            n = (4, 8, 16, 32)[i % 4]
            g = make_grid(n)
            kmax = int(rng.integers(1, 3 * n))
            modes = np.arange(-kmax, kmax + 1)
            c = (rng.standard_normal(modes.size) + 1j * rng.standard_normal(modes.size)) / (1 + np.abs(modes))
            f = SpectralField.from_samples(g, trig_poly(g, modes, c), real=False)
            eps = 1 / n
            lhs = linf_norm(eps * derivative(f, "x", 1))
            rhs = eps**-0.5 * norm(f, NormSpec.semiclassical(2, eps))
            worst = max(worst, lhs / rhs)
        assert worst <= C


class TestDealias:
    def test_low_band_unchanged(self):
        g = make_grid(2)
        f = SpectralField.from_function(g, lambda x: np.cos(5 * x))
        assert l2_norm(dealias(f) - f) <= 1e-14 * l2_norm(f)

    def test_top_mode_removed(self):
        g = make_grid(2)
        kmax = g.num_points // 2 - 1
        f = SpectralField.from_function(g, lambda x: np.exp(1j * kmax * x), real=False)
        assert l2_norm(dealias(f)) <= 1e-14 * l2_norm(f)

    def test_product_matches_fine_grid(self):
        rng = np.random.default_rng(5)
        g, fine = make_grid(2), TorusGrid1D(2, 8, 128)
        modes = np.arange(-10, 11)
        ca, cb = (rng.standard_normal(21) + 1j * rng.standard_normal(21) for _ in range(2))
        a = SpectralField.from_samples(g, trig_poly(g, modes, ca), real=False)
        b = SpectralField.from_samples(g, trig_poly(g, modes, cb), real=False)
        prod = multiply(a, b, dealias_result=False)
        af = SpectralField.from_samples(fine, trig_poly(fine, modes, ca), real=False)
        bf = SpectralField.from_samples(fine, trig_poly(fine, modes, cb), real=False)
        exact = multiply(af, bf, dealias_result=False)
        # the product has modes |k| <= 20 < 32, so both grids hold it exactly
        coarse_on_fine = np.zeros(fine.shape, dtype=complex)
        coarse_on_fine[:33] = prod.coeffs[:33]
        coarse_on_fine[-31:] = prod.coeffs[-31:]
        assert np.sqrt(TWO_PI * np.sum(np.abs(coarse_on_fine - exact.coeffs) ** 2)) <= 1e-12 * l2_norm(exact)
