"""Orbit distances and perturb-and-evolve stability experiments.

The set of constrained minimizers is not computable as a set; it is
approximated by the symmetry orbit of one computed minimizer (per-component
constant phases, plus spatial translations when the coupling ignores
position).  Distances reported here are therefore upper bounds for the true
distance to the minimizer set, and every report says so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize as scipy_minimize
from scipy.optimize import minimize_scalar

from .dynamics import BlowUpError, EvolveOptions, Trajectory, evolve
from .energy import ConstraintSet, EnergyContext, charges
from .grid import FieldVector, Grid, h1_norm_sq
from .groundstate import GroundStateResult, _lowpass_noise

__all__ = [
    "OrbitProxy",
    "StabilityReport",
    "SweepResult",
    "make_orbit_proxy",
    "orbit_distance",
    "perturbed_state",
    "stability_experiment",
    "delta_eps_sweep",
]

DISTANCE_NOTE = ("distance to the symmetry orbit of the reference minimizer; "
                 "an upper bound for the distance to the minimizer set")


@dataclass(frozen=True)
class OrbitProxy:
    """Symmetry orbit of one reference minimizer, with spectral caches.

    Phases are always part of the orbit; translations only when the coupling
    is position-independent.
    """

    reference: FieldVector
    constraints: ConstraintSet
    translations: bool
    # caches (set in __post_init__)
    spectra: tuple[np.ndarray, ...] = field(init=False, repr=False)
    h1_weight: np.ndarray = field(init=False, repr=False)
    h1_sq_ref: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ref_charges = charges(self.reference)
        targets = np.array(self.constraints.charges)
        if ref_charges.shape != targets.shape:
            raise ValueError("reference and constraints disagree on component count")
        rel = np.abs(ref_charges - targets) / targets
        if np.any(rel > 1e-10):
            raise ValueError(
                f"reference charges {ref_charges} mismatch targets {targets} "
                f"(worst relative error {rel.max():.3e})")
        grid = self.reference.grid
        object.__setattr__(self, "spectra",
                           tuple(np.fft.fftn(a) for a in self.reference.arrays()))
        object.__setattr__(self, "h1_weight",
                           (1.0 + grid.k_sq) * grid.cell_volume / grid.total_points)
        object.__setattr__(self, "h1_sq_ref", h1_norm_sq(self.reference))

    @property
    def grid(self) -> Grid:
        return self.reference.grid


def make_orbit_proxy(ctx: EnergyContext, result: GroundStateResult,
                     constraints: ConstraintSet) -> OrbitProxy:
    """Build the orbit proxy from a converged minimization result.

    Refuses a non-converged result: without an attained minimum there is no
    orbit to measure distances to.
    """
    if not result.converged:
        raise ValueError(
            f"ground state did not converge (stop reason: {result.stop_reason}); "
            "the minimizer set proxy is unavailable")
    ctx.check_state(result.state)
    return OrbitProxy(reference=result.state, constraints=constraints,
                      translations=not ctx.spec.x_dependent)


def _component_overlaps(proxy: OrbitProxy, z_spectra: list[np.ndarray]) -> list[np.ndarray]:
    """Spectral overlap densities G_j(k) with sum_k G_j e^(ik.y) = <z_j, w_j(.-y)>_H1."""
    return [proxy.h1_weight * zs * np.conj(ws)
            for zs, ws in zip(z_spectra, proxy.spectra)]


def _distance_given_overlap(h1_sq_z: float, h1_sq_w: float, overlap_mags: float) -> float:
    val = h1_sq_z + h1_sq_w - 2.0 * overlap_mags
    return float(np.sqrt(max(val, 0.0)))


def orbit_distance(proxy: OrbitProxy, z: FieldVector) -> float:
    """Sobolev distance from z to the symmetry orbit of the reference state.

    Per-component phases are optimal in closed form (the phase of the H1
    overlap); the translation, when active, is found by an exact search over
    all whole-cell shifts (an inverse transform of the overlap densities)
    followed by a local continuous refinement.
    """
    if z.grid != proxy.grid:
        raise ValueError("state grid does not match the proxy grid")
    if z.ell != proxy.reference.ell:
        raise ValueError("component count does not match the reference")
    grid = proxy.grid
    z_spectra = [np.fft.fftn(a) for a in z.arrays()]
    h1_sq_z = h1_norm_sq(z)
    overlaps = _component_overlaps(proxy, z_spectra)

    if not proxy.translations:
        total = sum(abs(np.sum(g)) for g in overlaps)
        return _distance_given_overlap(h1_sq_z, proxy.h1_sq_ref, total)

    # Exact whole-cell search: the overlap at shift index m (i.e. y = m * dx,
    # taken modulo the box) is the inverse transform of G_j at index m, times
    # the point count.
    shift_maps = [np.fft.ifftn(g) * grid.total_points for g in overlaps]
    score = np.zeros(grid.shape)
    for m in shift_maps:
        score += np.abs(m)
    best_idx = np.unravel_index(int(np.argmax(score)), grid.shape)
    y0 = np.empty(grid.n_dims)
    for i in range(grid.n_dims):
        y = best_idx[i] * grid.spacings[i]
        length = grid.lengths_per_dim[i]
        y0[i] = y - length if y > length / 2 else y

    ks = [grid.wavenumber_array(i) for i in range(grid.n_dims)]

    def neg_overlap(y: np.ndarray) -> float:
        phase = np.zeros(grid.shape, dtype=np.complex128)
        for i in range(grid.n_dims):
            phase = phase + 1j * ks[i] * y[i]
        shifter = np.exp(phase)
        return -sum(abs(np.sum(g * shifter)) for g in overlaps)

    if grid.n_dims == 1:
        dx = grid.spacings[0]
        res = minimize_scalar(lambda t: neg_overlap(np.array([t])),
                              bounds=(y0[0] - dx, y0[0] + dx),
                              method="bounded", options={"xatol": 1e-12})
    else:
        res = scipy_minimize(neg_overlap, y0, method="Nelder-Mead",
                             options={"xatol": 1e-10, "fatol": 1e-14,
                                      "initial_simplex": _simplex_around(y0, grid)})
    best = max(-res.fun, float(score[best_idx]))
    return _distance_given_overlap(h1_sq_z, proxy.h1_sq_ref, float(best))


def _simplex_around(y0: np.ndarray, grid: Grid) -> np.ndarray:
    n = grid.n_dims
    simplex = np.tile(y0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] += 0.5 * grid.spacings[i]
    return simplex


@dataclass
class StabilityReport:
    """Distance series of one perturb-and-evolve run.

    sup_distance is the maximum of the series; a set blow_up_time means the
    run ended early with a non-finite state (instability evidence).
    """

    delta: float
    times: np.ndarray
    distances: np.ndarray
    sup_distance: float
    seed: int
    metadata: dict
    blow_up_time: Optional[float] = None
    note: str = DISTANCE_NOTE

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        self.distances = np.asarray(self.distances, dtype=np.float64)
        if self.times.shape != self.distances.shape:
            raise ValueError("times and distances series disagree")
        if self.distances.size and not np.isclose(
                self.sup_distance, float(np.max(self.distances))):
            raise ValueError("sup_distance must be the maximum of the series")


def perturbed_state(proxy: OrbitProxy, delta: float, seed: int) -> FieldVector:
    """Reference state plus a smooth random direction of Sobolev size delta."""
    if delta < 0:
        raise ValueError("perturbation size must be nonnegative")
    grid = proxy.grid
    if delta == 0.0:
        return proxy.reference
    rng = np.random.default_rng(seed)
    bumps = [_lowpass_noise(grid, rng) + 1j * _lowpass_noise(grid, rng)
             for _ in range(proxy.reference.ell)]
    direction = FieldVector.from_arrays(grid, bumps)
    norm = np.sqrt(h1_norm_sq(direction))
    scale = delta / norm
    return FieldVector.from_arrays(
        grid, [a + scale * b for a, b in zip(proxy.reference.arrays(), bumps)])


def stability_experiment(ctx: EnergyContext, proxy: OrbitProxy, delta: float,
                         seed: int, opts: EvolveOptions) -> StabilityReport:
    """Evolve a delta-sized perturbation and track the orbit distance.

    Blow-up is caught and reported (blow_up_time set, series truncated); it
    counts as instability evidence, not as a toolkit failure.
    """
    z0 = perturbed_state(proxy, delta, seed)
    times: list[float] = []
    dists: list[float] = []

    def monitor(t: float, state: FieldVector) -> None:
        times.append(t)
        dists.append(orbit_distance(proxy, state))

    metadata = {
        "grid_points": ctx.grid.points_per_dim,
        "grid_lengths": ctx.grid.lengths_per_dim,
        "dt": opts.dt,
        "t_final": opts.t_final,
        "seed": seed,
        "family": ctx.spec.name,
    }
    blow_up = None
    try:
        evolve(ctx, z0, opts, monitor=monitor)
    except BlowUpError as exc:
        blow_up = exc.time
    sup = float(np.max(dists)) if dists else float("nan")
    return StabilityReport(delta=delta, times=np.array(times), distances=np.array(dists),
                           sup_distance=sup, seed=seed, metadata=metadata,
                           blow_up_time=blow_up)


@dataclass
class SweepResult:
    """Worst-case response table of a delta sweep: eps(delta) over seeds."""

    deltas: np.ndarray
    epsilons: np.ndarray
    monotone: bool
    runs: list[StabilityReport]
    note: str = DISTANCE_NOTE

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.deltas.tolist(), self.epsilons.tolist()))

    def __str__(self) -> str:
        lines = ["delta -> eps (max over seeds)"]
        for d, e in self.rows():
            lines.append(f"  {d:.6e} -> {e:.6e}")
        lines.append(f"monotone nondecreasing: {self.monotone}")
        return "\n".join(lines)


def delta_eps_sweep(ctx: EnergyContext, proxy: OrbitProxy, deltas: Sequence[float],
                    seeds: Sequence[int], opts: EvolveOptions) -> SweepResult:
    """Run the experiment grid and aggregate the worst response per delta."""
    deltas = list(deltas)
    if not deltas:
        raise ValueError("need at least one perturbation size")
    if any(d < 0 for d in deltas):
        raise ValueError("perturbation sizes must be nonnegative")
    if not seeds:
        raise ValueError("need at least one seed")
    runs: list[StabilityReport] = []
    epsilons = []
    for d in deltas:
        worst = 0.0
        for seed in seeds:
            rep = stability_experiment(ctx, proxy, d, seed, opts)
            runs.append(rep)
            value = rep.sup_distance if np.isfinite(rep.sup_distance) else float("inf")
            if rep.blow_up_time is not None:
                value = float("inf")
            worst = max(worst, value)
        epsilons.append(worst)
    order = np.argsort(deltas)
    sorted_eps = np.array(epsilons)[order]
    monotone = bool(np.all(np.diff(sorted_eps) >= -1e-15))
    return SweepResult(deltas=np.array(deltas), epsilons=np.array(epsilons),
                       monotone=monotone, runs=runs)
