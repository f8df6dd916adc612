import numpy as np
import pytest

import cnls


@pytest.fixture(scope="session")
def bench_grid():
    return cnls.Grid((512,), (40.0,))


@pytest.fixture(scope="session")
def bench_ctx(bench_grid):
    return cnls.EnergyContext(bench_grid, cnls.scalar_cubic())


@pytest.fixture(scope="session")
def bench_result(bench_ctx):
    """Converged scalar-cubic ground state at c = 2 (the sech benchmark)."""
    result = cnls.minimize(bench_ctx, cnls.ConstraintSet((2.0,)))
    assert result.converged
    return result


@pytest.fixture(scope="session")
def bench_soliton_run(bench_ctx, bench_result):
    """The benchmark soliton evolved to T = 10 with dt = 1e-3."""
    opts = cnls.EvolveOptions(dt=1e-3, t_final=10.0, sample_every=100)
    return cnls.evolve(bench_ctx, bench_result.state, opts)


def random_complex_states(grid, ell, count, seed, with_phase=True):
    """Smooth seeded complex states for property checks."""
    from cnls.groundstate import _lowpass_noise

    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        comps = []
        for _ in range(ell):
            re = _lowpass_noise(grid, rng)
            im = _lowpass_noise(grid, rng) if with_phase else np.zeros(grid.shape)
            comps.append(re + 1j * im)
        states.append(cnls.FieldVector.from_arrays(grid, comps))
    return states
