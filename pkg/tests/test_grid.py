"""Grid construction, quadrature, spectral norms, and the modulus calculus."""

import numpy as np
import pytest

import cnls
from cnls.grid import EPS_MODULUS, _spectral_partial_real

from conftest import random_complex_states


class TestGridConstruction:
    def test_basic_1d(self):
        g = cnls.Grid((64,), (10.0,))
        assert g.n_dims == 1
        assert g.shape == (64,)
        assert np.isclose(g.cell_volume, 10.0 / 64)
        assert np.isclose(g.coords[0][0], -5.0)
        # wavenumbers cover (2 pi / L) * {-n/2, ..., n/2 - 1}
        expected = 2 * np.pi / 10.0 * np.arange(-32, 32)
        assert np.allclose(np.sort(g.wavenumbers[0]), expected)

    def test_3d_shape(self):
        g = cnls.Grid((8, 16, 8), (1.0, 2.0, 3.0))
        assert g.shape == (8, 16, 8)
        assert np.isclose(g.box_volume, 6.0)
        assert g.k_sq.shape == (8, 16, 8)

    @pytest.mark.parametrize("points,lengths", [
        ((7,), (1.0,)),          # not a power of two
        ((4,), (1.0,)),          # below the minimum
        ((64,), (-1.0,)),        # nonpositive length
        ((64, 64), (1.0,)),      # dimension mismatch
        ((8, 8, 8, 8), (1.0,) * 4),  # too many dimensions
    ])
    def test_invalid_grids_rejected(self, points, lengths):
        with pytest.raises(ValueError):
            cnls.Grid(points, lengths)

    def test_field_shape_validation(self):
        g = cnls.Grid((64,), (10.0,))
        with pytest.raises(ValueError):
            cnls.ComplexField(g, np.zeros(32, dtype=complex))
        with pytest.raises(ValueError):
            cnls.RealField(g, np.full(64, np.nan))

    def test_field_vector_needs_shared_grid(self):
        g1 = cnls.Grid((64,), (10.0,))
        g2 = cnls.Grid((64,), (12.0,))
        a = cnls.ComplexField(g1, np.zeros(64, dtype=complex))
        b = cnls.ComplexField(g2, np.zeros(64, dtype=complex))
        with pytest.raises(ValueError):
            cnls.FieldVector((a, b))
        with pytest.raises(ValueError):
            cnls.FieldVector(())


class TestIntegrate:
    def test_constant(self):
        g = cnls.Grid((64,), (10.0,))
        assert cnls.integrate(cnls.RealField(g, np.ones(64))) == pytest.approx(10.0)

    def test_band_limited_sin_sq(self):
        g = cnls.Grid((64,), (10.0,))
        x = g.coords[0]
        f = np.sin(2 * np.pi * x / 10.0) ** 2
        assert cnls.integrate(cnls.RealField(g, f)) == pytest.approx(5.0, abs=1e-13)

    def test_zero(self):
        g = cnls.Grid((64,), (10.0,))
        assert cnls.integrate(cnls.RealField(g, np.zeros(64))) == 0.0

    def test_deterministic_bitwise(self):
        g = cnls.Grid((256,), (17.0,))
        rng = np.random.default_rng(3)
        f = cnls.RealField(g, rng.standard_normal(256))
        values = {cnls.integrate(f) for _ in range(8)}
        assert len(values) == 1


class TestNorms:
    def test_l2_zero(self, bench_grid):
        z = cnls.ComplexField(bench_grid, np.zeros(512, dtype=complex))
        assert cnls.l2_norm_sq(z) == 0.0

    def test_l2_constant_one_plus_i(self):
        g = cnls.Grid((64,), (10.0,))
        z = cnls.ComplexField(g, np.full(64, 1.0 + 1.0j))
        assert cnls.l2_norm_sq(z) == pytest.approx(20.0, rel=1e-14)

    def test_l2_sech(self, bench_grid):
        x = bench_grid.coords[0]
        z = cnls.ComplexField(bench_grid, (np.sqrt(2) / np.cosh(x)).astype(complex))
        assert cnls.l2_norm_sq(z) == pytest.approx(4.0, abs=1e-10)

    def test_gradient_constant_is_zero(self):
        g = cnls.Grid((64,), (10.0,))
        z = cnls.ComplexField(g, np.full(64, 2.0 - 1.0j))
        assert cnls.gradient_sq_norm(z) == pytest.approx(0.0, abs=1e-25)

    def test_gradient_plane_wave(self):
        g = cnls.Grid((64,), (10.0,))
        k = 2 * np.pi / 10.0
        z = cnls.ComplexField(g, np.exp(1j * k * g.coords[0]))
        assert cnls.gradient_sq_norm(z) == pytest.approx(k * k * 10.0, rel=1e-12)

    def test_gradient_sech(self, bench_grid):
        x = bench_grid.coords[0]
        z = cnls.ComplexField(bench_grid, (np.sqrt(2) / np.cosh(x)).astype(complex))
        assert cnls.gradient_sq_norm(z) == pytest.approx(4.0 / 3.0, abs=1e-8)

    def test_parseval(self, bench_grid):
        for z in random_complex_states(bench_grid, 1, 4, seed=11):
            vals = z.components[0].values
            physical = cnls.l2_norm_sq(z.components[0])
            spectrum = np.fft.fftn(vals)
            spectral = float(np.sum(np.abs(spectrum) ** 2)) \
                * bench_grid.cell_volume / bench_grid.total_points
            assert physical == pytest.approx(spectral, rel=1e-12)

    def test_spectral_derivative_exact_on_plane_wave(self):
        g = cnls.Grid((128,), (10.0,))
        x = g.coords[0]
        k = 5 * 2 * np.pi / 10.0
        dw = _spectral_partial_real(g, np.sin(k * x), 0)
        assert np.max(np.abs(dw - k * np.cos(k * x))) <= 1e-12 * k


class TestModulus:
    def test_constant(self):
        g = cnls.Grid((64,), (10.0,))
        z = cnls.ComplexField(g, np.full(64, 3.0 + 4.0j))
        assert np.allclose(cnls.modulus(z).values, 5.0)

    def test_real_nonnegative_unchanged(self):
        g = cnls.Grid((64,), (10.0,))
        w = np.exp(-g.coords[0] ** 2)
        z = cnls.ComplexField(g, w.astype(complex))
        np.testing.assert_allclose(cnls.modulus(z).values, w, atol=1e-15)

    def test_phase_removal(self):
        g = cnls.Grid((128,), (20.0,))
        x = g.coords[0]
        w = np.exp(-(x / 2) ** 2)
        z = cnls.ComplexField(g, w * np.exp(1j * np.sin(2 * np.pi * x / 20.0)))
        np.testing.assert_allclose(cnls.modulus(z).values, w, atol=1e-15)

    def test_phase_rotation_invariance(self, bench_grid):
        for z in random_complex_states(bench_grid, 2, 2, seed=5):
            rotated = cnls.FieldVector.from_arrays(
                bench_grid, [a * np.exp(1j * 0.77 * (j + 1))
                             for j, a in enumerate(z.arrays())])
            for before, after in zip(z.components, rotated.components):
                np.testing.assert_allclose(
                    cnls.modulus(after).values, cnls.modulus(before).values,
                    atol=1e-15)


class TestModulusPartial:
    def test_real_positive_equals_derivative(self):
        g = cnls.Grid((256,), (40.0,))
        x = g.coords[0]
        w = np.exp(-(x / 3) ** 2) + 0.5
        z = cnls.ComplexField(g, w.astype(complex))
        dw = _spectral_partial_real(g, w, 0)
        np.testing.assert_allclose(cnls.modulus_partial(z, 0).values, dw, atol=1e-12)

    def test_plane_phase_drops_out(self):
        g = cnls.Grid((256,), (40.0,))
        x = g.coords[0]
        w = np.exp(-(x / 2.5) ** 2)
        k = 3 * 2 * np.pi / 40.0
        z = cnls.ComplexField(g, w * np.exp(1j * k * x))
        dw = _spectral_partial_real(g, w, 0)
        mask = w > EPS_MODULUS
        err = np.abs(cnls.modulus_partial(z, 0).values - dw)[mask]
        assert np.max(err) <= 1e-10

    def test_zero_field_zero(self):
        g = cnls.Grid((64,), (10.0,))
        z = cnls.ComplexField(g, np.zeros(64, dtype=complex))
        assert np.all(cnls.modulus_partial(z, 0).values == 0.0)

    def test_chain_bound(self, bench_grid):
        for z in random_complex_states(bench_grid, 1, 6, seed=21):
            comp = z.components[0]
            u, v = comp.values.real, comp.values.imag
            du = _spectral_partial_real(bench_grid, u, 0)
            dv = _spectral_partial_real(bench_grid, v, 0)
            mp = cnls.modulus_partial(comp, 0).values
            lhs = np.sum(mp * mp) * bench_grid.cell_volume
            rhs = np.sum(du * du + dv * dv) * bench_grid.cell_volume
            assert lhs <= rhs + 1e-10

    def test_axis_out_of_range(self, bench_grid):
        z = cnls.ComplexField(bench_grid, np.zeros(512, dtype=complex))
        with pytest.raises(ValueError):
            cnls.modulus_partial(z, 1)


class TestH1Distance:
    def test_identical_states(self, bench_grid):
        z = random_complex_states(bench_grid, 2, 1, seed=2)[0]
        assert cnls.h1_distance(z, z) == 0.0

    def test_sech_vs_zero(self, bench_grid):
        x = bench_grid.coords[0]
        a = cnls.FieldVector.from_arrays(
            bench_grid, [(np.sqrt(2) / np.cosh(x)).astype(complex)])
        b = cnls.FieldVector.from_arrays(
            bench_grid, [np.zeros(512, dtype=complex)])
        assert cnls.h1_distance(a, b) == pytest.approx(np.sqrt(16.0 / 3.0), abs=1e-8)

    def test_symmetry(self, bench_grid):
        a, b = random_complex_states(bench_grid, 2, 2, seed=9)
        assert cnls.h1_distance(a, b) == pytest.approx(cnls.h1_distance(b, a), rel=1e-15)

    def test_mismatch_rejected(self, bench_grid):
        a = random_complex_states(bench_grid, 1, 1, seed=1)[0]
        b = random_complex_states(bench_grid, 2, 1, seed=1)[0]
        with pytest.raises(ValueError):
            cnls.h1_distance(a, b)
        other = cnls.Grid((512,), (41.0,))
        c = random_complex_states(other, 1, 1, seed=1)[0]
        with pytest.raises(ValueError):
            cnls.h1_distance(a, c)
