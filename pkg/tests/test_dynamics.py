"""Split-step integration: exactness, conservation, order, reversibility."""

import numpy as np
import pytest

import cnls
from cnls.groundstate import _lowpass_noise


@pytest.fixture(scope="module")
def free_ctx(bench_grid):
    return cnls.EnergyContext(bench_grid, cnls.free_field())


def _perturbed_soliton(bench_result, bench_grid, delta, seed):
    rng = np.random.default_rng(seed)
    g = _lowpass_noise(bench_grid, rng) + 1j * _lowpass_noise(bench_grid, rng)
    gv = cnls.FieldVector.from_arrays(bench_grid, [g])
    g = g * (delta / np.sqrt(cnls.h1_norm_sq(gv)))
    return cnls.FieldVector.from_arrays(
        bench_grid, [bench_result.state.arrays()[0] + g])


class TestStep:
    def test_free_plane_wave_exact(self, free_ctx, bench_grid):
        k = 5 * 2 * np.pi / 40.0
        z = cnls.FieldVector.from_arrays(
            bench_grid, [np.exp(1j * k * bench_grid.coords[0])])
        dt = 0.37
        out = cnls.step(free_ctx, z, dt)
        expected = z.arrays()[0] * np.exp(-1j * k * k * dt)
        np.testing.assert_allclose(out.arrays()[0], expected, atol=1e-12)

    def test_zero_state(self, bench_ctx, bench_grid):
        z = cnls.FieldVector.from_arrays(bench_grid, [np.zeros(512, dtype=complex)])
        out = cnls.step(bench_ctx, z, 1e-2)
        np.testing.assert_array_equal(out.arrays()[0], 0.0)

    def test_standing_wave_local_error(self, bench_ctx, bench_result):
        dt = 1e-3
        out = cnls.step(bench_ctx, bench_result.state, dt)
        exact = cnls.standing_wave(bench_result.state, bench_result.multipliers, dt)
        assert cnls.h1_distance(out, exact) < 1e-8  # local error is O(dt^3)

    def test_zero_dt_rejected(self, bench_ctx, bench_result):
        with pytest.raises(ValueError):
            cnls.step(bench_ctx, bench_result.state, 0.0)


class TestEvolve:
    def test_soliton_tracks_standing_wave(self, bench_ctx, bench_result,
                                          bench_soliton_run):
        final = bench_soliton_run.final_state
        exact = cnls.standing_wave(bench_result.state, bench_result.multipliers, 10.0)
        # allow a global phase: optimize it in closed form
        a, b = final.arrays()[0], exact.arrays()[0]
        inner = np.sum(a * np.conj(b))
        phase = inner / abs(inner)
        aligned = cnls.FieldVector.from_arrays(bench_ctx.grid, [b * phase])
        assert cnls.h1_distance(final, aligned) < 1e-4

    def test_free_gaussian_conserves_exactly(self, free_ctx, bench_grid):
        x = bench_grid.coords[0]
        z = cnls.FieldVector.from_arrays(
            bench_grid, [np.exp(-(x / 3.0) ** 2).astype(complex)])
        traj = cnls.evolve(free_ctx, z, cnls.EvolveOptions(dt=1e-2, t_final=5.0,
                                                           sample_every=50))
        rep = cnls.conservation_report(traj)
        assert rep.max_charge_drift <= 1e-12
        assert rep.energy_drift <= 1e-12

    def test_manakov_charges_conserved(self, bench_grid):
        ctx = cnls.EnergyContext(bench_grid, cnls.manakov())
        x = bench_grid.coords[0]
        comps = [(np.sqrt(2) / np.cosh(x - 8)).astype(complex),
                 (np.sqrt(2) / np.cosh(x + 8)).astype(complex)]
        z = cnls.FieldVector.from_arrays(bench_grid, comps)
        traj = cnls.evolve(ctx, z, cnls.EvolveOptions(dt=1e-3, t_final=1.0,
                                                      sample_every=100))
        rep = cnls.conservation_report(traj)
        assert rep.max_charge_drift <= 1e-12

    def test_snapshots_taken_at_nearest_steps(self, bench_ctx, bench_result):
        opts = cnls.EvolveOptions(dt=1e-2, t_final=0.5, sample_every=10,
                                  snapshot_times=[0.0, 0.25, 0.5])
        traj = cnls.evolve(bench_ctx, bench_result.state, opts)
        times = [t for t, _ in traj.snapshots]
        assert times == pytest.approx([0.0, 0.25, 0.5])

    def test_monitor_called(self, bench_ctx, bench_result):
        seen = []
        opts = cnls.EvolveOptions(dt=1e-2, t_final=0.2, sample_every=10)
        cnls.evolve(bench_ctx, bench_result.state, opts,
                    monitor=lambda t, s: seen.append(t))
        assert seen == pytest.approx([0.0, 0.1, 0.2])


class TestConservation:
    def test_soliton_drifts(self, bench_soliton_run):
        rep = cnls.conservation_report(bench_soliton_run)
        assert rep.max_charge_drift <= 1e-12
        assert rep.energy_drift <= 1e-8

    def test_energy_drift_second_order_on_moving_data(self, bench_ctx, bench_result,
                                                      bench_grid):
        # A stationary soliton has superconvergent (fourth-order) energy
        # drift: both conserved quantities whose gradients span the energy
        # gradient at the minimizer are scheme-exact.  The second-order
        # signature needs genuinely moving data, so perturb the soliton.
        z0 = _perturbed_soliton(bench_result, bench_grid, delta=0.02, seed=7)
        drifts = {}
        for dt in (1e-3, 5e-4):
            traj = cnls.evolve(bench_ctx, z0,
                               cnls.EvolveOptions(dt=dt, t_final=10.0,
                                                  sample_every=int(0.1 / dt)))
            drifts[dt] = cnls.conservation_report(traj).energy_drift
        assert drifts[1e-3] <= 1e-8
        ratio = drifts[1e-3] / drifts[5e-4]
        assert 3.5 <= ratio <= 4.5

    def test_zero_state_report(self, bench_ctx, bench_grid):
        z = cnls.FieldVector.from_arrays(bench_grid, [np.zeros(512, dtype=complex)])
        traj = cnls.evolve(bench_ctx, z, cnls.EvolveOptions(dt=1e-2, t_final=0.1))
        rep = cnls.conservation_report(traj)
        assert rep.max_charge_drift == 0.0
        assert rep.energy_drift == 0.0


class TestReversibility:
    def test_forward_backward_returns(self, bench_ctx, bench_result, bench_grid):
        z0 = _perturbed_soliton(bench_result, bench_grid, delta=0.05, seed=11)
        T, dt, n = 2.0, 1e-3, 2000
        state = z0
        for _ in range(n):
            state = cnls.step(bench_ctx, state, dt)
        for _ in range(n):
            state = cnls.step(bench_ctx, state, -dt)
        assert cnls.h1_distance(state, z0) < 1e-8


class TestGaugeCovariance:
    def test_phase_commutes_with_flow(self, bench_ctx, bench_result):
        theta = 1.234
        opts = cnls.EvolveOptions(dt=1e-3, t_final=0.2, sample_every=100)
        base = cnls.evolve(bench_ctx, bench_result.state, opts).final_state
        rotated_in = cnls.FieldVector.from_arrays(
            bench_ctx.grid, [a * np.exp(1j * theta)
                             for a in bench_result.state.arrays()])
        rotated_out = cnls.evolve(bench_ctx, rotated_in, opts).final_state
        expected = cnls.FieldVector.from_arrays(
            bench_ctx.grid, [a * np.exp(1j * theta) for a in base.arrays()])
        assert cnls.h1_distance(rotated_out, expected) <= 1e-12 * 10


class TestBlowUp:
    def test_overflowing_coupling_reports_blow_up(self, bench_grid):
        ctx = cnls.EnergyContext(bench_grid, cnls.scalar_power(9.0))
        huge = cnls.FieldVector.from_arrays(
            bench_grid, [np.full(512, 1e60, dtype=complex)])
        with pytest.raises(cnls.BlowUpError) as info:
            with np.errstate(over="ignore"):
                cnls.evolve(ctx, huge, cnls.EvolveOptions(dt=1e-3, t_final=0.1))
        assert info.value.time is not None

    def test_options_validated(self):
        with pytest.raises(ValueError):
            cnls.EvolveOptions(dt=0.0, t_final=1.0)
        with pytest.raises(ValueError):
            cnls.EvolveOptions(dt=1e-2, t_final=1e-3)
        with pytest.raises(ValueError):
            cnls.EvolveOptions(dt=1e-2, t_final=1.0, sample_every=0)
