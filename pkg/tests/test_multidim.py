"""Two- and three-dimensional coverage of the spectral and solver paths."""

import numpy as np
import pytest

import cnls
from cnls.stability import make_orbit_proxy, orbit_distance


@pytest.fixture(scope="module")
def grid2d():
    return cnls.Grid((32, 32), (16.0, 16.0))


@pytest.fixture(scope="module")
def ctx2d(grid2d):
    # quadratic coupling keeps the two-dimensional problem mass-subcritical
    return cnls.EnergyContext(grid2d, cnls.scalar_power(2.0))


@pytest.fixture(scope="module")
def result2d(ctx2d):
    opts = cnls.MinimizeOptions(seed=1, max_iterations=5000)
    return cnls.minimize(ctx2d, cnls.ConstraintSet((2.0,)), opts)


class TestSpectral2D3D:
    def test_plane_wave_gradient_2d(self, grid2d):
        kx = 2 * 2 * np.pi / 16.0
        ky = 3 * 2 * np.pi / 16.0
        x, y = grid2d.coord_arrays()
        z = cnls.ComplexField(grid2d, np.exp(1j * (kx * x + ky * y)))
        expected = (kx**2 + ky**2) * grid2d.box_volume
        assert cnls.gradient_sq_norm(z) == pytest.approx(expected, rel=1e-12)

    def test_integrate_3d_constant(self):
        g = cnls.Grid((8, 8, 8), (2.0, 3.0, 4.0))
        f = cnls.RealField(g, np.ones((8, 8, 8)))
        assert cnls.integrate(f) == pytest.approx(24.0, rel=1e-14)

    def test_plane_wave_gradient_3d(self):
        g = cnls.Grid((16, 16, 16), (8.0, 8.0, 8.0))
        k = 2 * np.pi / 8.0
        x, y, zc = g.coord_arrays()
        z = cnls.ComplexField(g, np.exp(1j * k * (x + y + zc)))
        assert cnls.gradient_sq_norm(z) == pytest.approx(
            3 * k * k * g.box_volume, rel=1e-12)

    def test_modulus_partial_axes_2d(self, grid2d):
        x, y = grid2d.coord_arrays()
        w = np.exp(-(x**2 + y**2) / 4.0)
        k = 2 * np.pi / 16.0
        z = cnls.ComplexField(grid2d, w * np.exp(1j * k * (x + y)))
        from cnls.grid import _spectral_partial_real
        for axis in range(2):
            dw = _spectral_partial_real(grid2d, w + 0 * x + 0 * y, axis)
            mp = cnls.modulus_partial(z, axis).values
            mask = (w + 0 * x + 0 * y) > 1e-12
            assert np.max(np.abs(mp - dw)[mask]) < 1e-10


class TestGroundState2D:
    def test_converges_with_exact_masses(self, result2d):
        assert result2d.converged
        np.testing.assert_allclose(cnls.charges(result2d.state), [4.0], rtol=1e-12)

    def test_bound_state(self, result2d):
        assert result2d.value < 0.0
        assert result2d.multipliers[0] < 0.0
        assert result2d.residual <= 1e-5

    def test_localized(self, result2d):
        assert result2d.boundary_decay < 1e-3


class TestDynamics2D:
    def test_conservation(self, ctx2d, result2d):
        traj = cnls.evolve(ctx2d, result2d.state,
                           cnls.EvolveOptions(dt=2e-3, t_final=1.0, sample_every=50))
        rep = cnls.conservation_report(traj)
        assert rep.max_charge_drift <= 1e-12
        assert rep.energy_drift <= 1e-7


class TestOrbitDistance2D:
    def test_translated_phased_reference_absorbed(self, ctx2d, result2d):
        proxy = make_orbit_proxy(ctx2d, result2d, cnls.ConstraintSet((2.0,)))
        grid = ctx2d.grid
        spectrum = np.fft.fftn(result2d.state.arrays()[0])
        shift = np.exp(-1j * (grid.wavenumber_array(0) * 1.3
                              + grid.wavenumber_array(1) * (-0.7)))
        moved = np.fft.ifftn(spectrum * shift) * np.exp(0.6j)
        z = cnls.FieldVector.from_arrays(grid, [moved])
        assert orbit_distance(proxy, z) <= 1e-8
