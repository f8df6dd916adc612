"""Constrained energy minimization by normalized gradient descent.

Each component's mass is renormalized to its target after every step, which
is the exact projection for independent per-component constraints.  The
descent direction is the energy gradient filtered through an inverse shifted
Laplacian (in Fourier space), which removes the stiffness of the kinetic term
without changing the minimizers; a pure L^2 flow is available by switching
the preconditioner off.  Backtracking guarantees a monotone energy trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import ConstraintSet, EnergyContext, charges
from .grid import FieldVector, Grid, _l2_sq, _laplacian
from .energy import _energy_arrays, _gradient_arrays
from .nonlinearity import eval_hj

__all__ = [
    "MinimizeOptions",
    "GroundStateResult",
    "EnergyDivergedError",
    "minimize",
    "complex_minimize",
    "lagrange_multipliers",
    "elliptic_residual",
    "standing_wave",
]


class EnergyDivergedError(RuntimeError):
    """Raised when the constrained energy runs away to -infinity."""


@dataclass
class MinimizeOptions:
    """Knobs of the constrained descent.

    initial_guess: "gaussian" (seeded off-center bumps), "random" (low-pass
    noise moduli) or "given" (start from given_state).  precond_shift is the
    positive shift of the inverse-Laplacian filter; None disables filtering.
    """

    initial_guess: str = "gaussian"
    given_state: Optional[FieldVector] = None
    step_size: float = 0.5
    backtrack_factor: float = 0.5
    max_iterations: int = 20000
    # Projected-gradient tolerance, measured against the energy scale
    # max(1, |E|) so deep and shallow wells converge alike.
    tol_grad: float = 1e-7
    stagnation_window: int = 400
    seed: int = 0
    precond_shift: Optional[float] = 1.0
    max_backtracks: int = 60
    boundary_decay_tol: float = 1e-3

    def __post_init__(self) -> None:
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.tol_grad <= 0:
            raise ValueError("tol_grad must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.stagnation_window < 2:
            raise ValueError("stagnation_window must be >= 2")
        if self.initial_guess not in ("gaussian", "random", "given"):
            raise ValueError(f"unknown initial_guess policy '{self.initial_guess}'")
        if self.initial_guess == "given" and self.given_state is None:
            raise ValueError("initial_guess='given' needs given_state")
        if self.precond_shift is not None and self.precond_shift <= 0:
            raise ValueError("precond_shift must be positive (or None)")


@dataclass
class GroundStateResult:
    """Outcome of one constrained minimization run.

    converged means the projected gradient met its tolerance AND the minimizer
    decays at the box boundary; a boundary-supported profile signals that the
    box truncation is not representing a localized whole-space state (for
    H = 0 the infimum is approached by spreading, never attained).
    """

    state: FieldVector
    value: float
    multipliers: np.ndarray
    residual: float
    iterations: int
    converged: bool
    energy_trace: np.ndarray
    grad_norm: float
    boundary_decay: float
    stop_reason: str
    seed: int


def _rescale(grid: Grid, arrays: list[np.ndarray], targets) -> None:
    """Set each component's L^2 norm to its target, in place."""
    for j, a in enumerate(arrays):
        norm = np.sqrt(_l2_sq(grid, a))
        if norm == 0.0:
            raise ZeroDivisionError(
                f"component {j} vanished identically; cannot renormalize")
        a *= targets[j] / norm


def _boundary_decay(grid: Grid, arrays: list[np.ndarray]) -> float:
    """Largest boundary-shell modulus relative to the overall peak."""
    peak = max(float(np.max(np.abs(a))) for a in arrays)
    if peak == 0.0:
        return 0.0
    worst = 0.0
    for a in arrays:
        mag = np.abs(a)
        for axis in range(grid.n_dims):
            edge0 = np.take(mag, 0, axis=axis)
            worst = max(worst, float(np.max(edge0)))
    return worst / peak


def _recenter(grid: Grid, arrays: list[np.ndarray]) -> list[np.ndarray]:
    """Shift the state so the total-modulus centroid sits at the box center.

    The centroid of a periodic density is taken circularly (phase of the
    first Fourier mode per axis) and the shift applied spectrally, which is
    exact for the band-limited states the solver produces.
    """
    density = np.zeros(grid.shape)
    for a in arrays:
        density += a.real * a.real + a.imag * a.imag
    total = float(np.sum(density))
    if total <= 0.0:
        return arrays
    offsets = []
    for axis in range(grid.n_dims):
        x = grid.coords[axis]
        length = grid.lengths_per_dim[axis]
        axes = tuple(i for i in range(grid.n_dims) if i != axis)
        marginal = np.sum(density, axis=axes) if axes else density
        phase = np.angle(np.sum(marginal * np.exp(2j * np.pi * x / length)))
        offsets.append(phase * length / (2.0 * np.pi))
    if all(abs(c) < 1e-15 for c in offsets):
        return arrays
    shift_phase = np.zeros(grid.shape, dtype=np.complex128)
    for axis, c in enumerate(offsets):
        shift_phase = shift_phase + 1j * c * grid.wavenumber_array(axis)
    factor = np.exp(shift_phase)  # multiplies spectra: f(x) -> f(x + c)
    return [np.fft.ifftn(np.fft.fftn(a) * factor) for a in arrays]


def _gaussian_guess(grid: Grid, ell: int, rng: np.random.Generator,
                    complex_phases: bool) -> list[np.ndarray]:
    coords = grid.coord_arrays()
    out = []
    for _ in range(ell):
        widths = [length / 10.0 for length in grid.lengths_per_dim]
        centers = [rng.uniform(-length / 4.0, length / 4.0)
                   for length in grid.lengths_per_dim]
        expo = np.zeros(grid.shape)
        for x, c, w in zip(coords, centers, widths):
            expo = expo + ((x - c) / w) ** 2
        bump = np.exp(-0.5 * expo)
        if complex_phases:
            theta = rng.uniform(0.0, 2.0 * np.pi)
            ripple = _lowpass_noise(grid, rng)
            ripple *= 0.5 / max(1e-300, float(np.max(np.abs(ripple))))
            out.append(bump * np.exp(1j * (theta + ripple)))
        else:
            out.append(bump.astype(np.complex128))
    return out


def _lowpass_noise(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Smooth real noise: white noise with the top third of each axis spectrum zeroed."""
    noise = rng.standard_normal(grid.shape)
    spectrum = np.fft.fftn(noise)
    for axis in range(grid.n_dims):
        n = grid.points_per_dim[axis]
        idx = np.abs(np.fft.fftfreq(n) * n)
        keep = idx <= n // 3
        shape = [1] * grid.n_dims
        shape[axis] = n
        spectrum *= keep.reshape(shape)
    return np.fft.ifftn(spectrum).real


def _random_guess(grid: Grid, ell: int, rng: np.random.Generator,
                  complex_phases: bool) -> list[np.ndarray]:
    out = []
    for _ in range(ell):
        base = np.abs(_lowpass_noise(grid, rng)) + 0.1
        if complex_phases:
            phase = _lowpass_noise(grid, rng)
            out.append(base * np.exp(1j * phase))
        else:
            out.append(base.astype(np.complex128))
    return out


def _initial_arrays(ctx: EnergyContext, constraints: ConstraintSet,
                    opts: MinimizeOptions, complex_phases: bool) -> list[np.ndarray]:
    rng = np.random.default_rng(opts.seed)
    if opts.initial_guess == "given":
        ctx.check_state(opts.given_state)
        arrays = [a.copy() for a in opts.given_state.arrays()]
    elif opts.initial_guess == "random":
        arrays = _random_guess(ctx.grid, ctx.spec.ell, rng, complex_phases)
    else:
        arrays = _gaussian_guess(ctx.grid, ctx.spec.ell, rng, complex_phases)
    _rescale(ctx.grid, arrays, constraints.c)
    return arrays


def _projected_gradient(grid: Grid, arrays, grads) -> tuple[np.ndarray, list, float]:
    """Multipliers, tangential gradients, and the tangential gradient norm."""
    dV = grid.cell_volume
    lams = np.zeros(len(arrays))
    tangential = []
    norm_sq = 0.0
    for j, (a, g) in enumerate(zip(arrays, grads)):
        mass = _l2_sq(grid, a)
        inner = float(np.sum(g.real * a.real + g.imag * a.imag)) * dV
        lam = inner / mass
        pg = g - lam * a
        lams[j] = lam
        tangential.append(pg)
        norm_sq += _l2_sq(grid, pg)
    return lams, tangential, float(np.sqrt(norm_sq))


def _descent(ctx: EnergyContext, constraints: ConstraintSet, opts: MinimizeOptions,
             clamp: bool) -> GroundStateResult:
    grid = ctx.grid
    if constraints.ell != ctx.spec.ell:
        raise ValueError(
            f"constraints have {constraints.ell} components, coupling expects {ctx.spec.ell}")
    arrays = _initial_arrays(ctx, constraints, opts, complex_phases=not clamp)
    if clamp:
        arrays = [np.maximum(a.real, 0.0).astype(np.complex128) for a in arrays]
        _rescale(grid, arrays, constraints.c)

    filt = None
    if opts.precond_shift is not None:
        filt = 1.0 / (opts.precond_shift + grid.k_sq)

    energy = _energy_arrays(ctx, arrays)
    trace = [energy]
    tau = opts.step_size
    tau_cap = 10.0 * opts.step_size
    grad_norm = np.inf
    stop_reason = "max-iterations"

    for _ in range(opts.max_iterations):
        grads = _gradient_arrays(ctx, arrays)
        _, tangential, grad_norm = _projected_gradient(grid, arrays, grads)
        if grad_norm < opts.tol_grad * max(1.0, abs(energy)):
            stop_reason = "gradient-tolerance"
            break

        # Filter the *tangential* gradient: stationary points of the
        # renormalized iteration then stay exactly the constrained critical
        # points (filtering the raw gradient would shift them).
        if filt is not None:
            directions = [np.fft.ifftn(np.fft.fftn(g) * filt) for g in tangential]
        else:
            directions = tangential
        if clamp:
            directions = [d.real for d in directions]

        accepted = False
        for _ in range(opts.max_backtracks):
            trial = [a - tau * d for a, d in zip(arrays, directions)]
            if clamp:
                trial = [np.maximum(t.real, 0.0).astype(np.complex128) for t in trial]
            try:
                _rescale(grid, trial, constraints.c)
            except ZeroDivisionError:
                tau *= opts.backtrack_factor
                continue
            trial_energy = _energy_arrays(ctx, trial)
            if not np.isfinite(trial_energy):
                tau *= opts.backtrack_factor
                continue
            if trial_energy < energy:
                arrays = trial
                energy = trial_energy
                trace.append(energy)
                tau = min(tau * 1.1, tau_cap)
                accepted = True
                break
            tau *= opts.backtrack_factor
        if not accepted:
            stop_reason = "line-search-stalled"
            break
        if energy < -1e15:
            raise EnergyDivergedError(
                f"constrained energy diverged ({energy:.3e}) after {iteration} steps")

        window = opts.stagnation_window
        if len(trace) > window:
            gain = trace[-window - 1] - trace[-1]
            if gain < 1e-15 * max(1.0, abs(energy)) * window:
                stop_reason = "stagnation"
                break

    if not ctx.spec.x_dependent:
        # Translation is only a symmetry of x-independent couplings; gauge
        # fixing would change the energy otherwise.
        arrays = _recenter(grid, arrays)
        if clamp:
            # The spectral shift can leave roundoff-size imaginary parts and
            # undershoots; restore the nonnegative cone and the exact masses.
            arrays = [np.maximum(a.real, 0.0).astype(np.complex128) for a in arrays]
            _rescale(grid, arrays, constraints.c)
    if not clamp:
        # Per-component global phases are gauge freedom; pin them so reruns
        # and dumps are comparable.
        for j, a in enumerate(arrays):
            pivot = complex(np.sum(a))
            if pivot != 0:
                arrays[j] = a * np.exp(-1j * np.angle(pivot))

    energy = _energy_arrays(ctx, arrays)
    grads = _gradient_arrays(ctx, arrays)
    lams, tangential, grad_norm = _projected_gradient(grid, arrays, grads)
    residual = float(np.sqrt(sum(_l2_sq(grid, t) for t in tangential)))
    decay = _boundary_decay(grid, arrays)
    tol_eff = opts.tol_grad * max(1.0, abs(energy))
    converged = grad_norm <= tol_eff and decay <= opts.boundary_decay_tol
    if stop_reason == "gradient-tolerance" and decay > opts.boundary_decay_tol:
        stop_reason = "boundary-supported"

    # The elliptic multipliers flip sign relative to the gradient projection:
    # grad = -(lap u + h u) pointwise, so lambda_j = +<grad_j, u_j>/|u_j|^2
    # already matches lap u + h u + lambda u = 0.
    state = FieldVector.from_arrays(grid, arrays)
    return GroundStateResult(
        state=state,
        value=energy,
        multipliers=lams,
        residual=residual,
        iterations=len(trace) - 1,
        converged=converged,
        energy_trace=np.array(trace),
        grad_norm=grad_norm,
        boundary_decay=decay,
        stop_reason=stop_reason,
        seed=opts.seed,
    )


def minimize(ctx: EnergyContext, constraints: ConstraintSet,
             opts: MinimizeOptions | None = None) -> GroundStateResult:
    """Minimize the energy over real nonnegative states with prescribed masses.

    Iterates are clamped to the nonnegative cone (minimizing over moduli) and
    renormalized exactly after every step; steps are accepted only when the
    energy decreases, so the trace is monotone.
    """
    return _descent(ctx, constraints, opts or MinimizeOptions(), clamp=True)


def complex_minimize(ctx: EnergyContext, constraints: ConstraintSet,
                     opts: MinimizeOptions | None = None) -> GroundStateResult:
    """Minimize the Hamiltonian over complex states with prescribed masses.

    Same flow as `minimize` without the nonnegativity clamp; started from
    random-phase data this probes that the complex and real constrained
    infima coincide and that minimizers carry constant phases.
    """
    return _descent(ctx, constraints, opts or MinimizeOptions(), clamp=False)


def lagrange_multipliers(ctx: EnergyContext, u: FieldVector) -> np.ndarray:
    """Multipliers making each elliptic residual orthogonal to its component.

    lambda_j = -<lap u_j + h_j u_j, u_j> / |u_j|_2^2; undefined (raises) for a
    vanishing component.
    """
    ctx.check_state(u)
    grid = ctx.grid
    arrays = u.arrays()
    grads = _gradient_arrays(ctx, arrays)  # grad_j = -(lap u_j + h_j u_j)
    lams = np.zeros(len(arrays))
    for j, (a, g) in enumerate(zip(arrays, grads)):
        mass = _l2_sq(grid, a)
        if mass == 0.0:
            raise ValueError(f"component {j} has zero mass; multiplier undefined")
        lams[j] = float(np.sum(g.real * a.real + g.imag * a.imag)) * grid.cell_volume / mass
    return lams


def elliptic_residual(ctx: EnergyContext, u: FieldVector, lambdas) -> float:
    """L^2 norm of the standing-wave system defect lap u_j + h_j u_j + lambda_j u_j."""
    ctx.check_state(u)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.shape != (u.ell,):
        raise ValueError(f"expected {u.ell} multipliers, got shape {lambdas.shape}")
    grid = ctx.grid
    arrays = u.arrays()
    s_sq = np.stack([a.real * a.real + a.imag * a.imag for a in arrays])
    total = 0.0
    for j, a in enumerate(arrays):
        h = eval_hj(ctx.spec, j, ctx.coords, s_sq)
        defect = _laplacian(grid, a) + h * a + lambdas[j] * a
        total += _l2_sq(grid, defect)
    return float(np.sqrt(total))


def standing_wave(u: FieldVector, lambdas, t: float) -> FieldVector:
    """The standing-wave state at time t: component j is u_j * exp(-i lambda_j t)."""
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.shape != (u.ell,):
        raise ValueError(f"expected {u.ell} multipliers, got shape {lambdas.shape}")
    phases = np.exp(-1j * lambdas * t)
    return FieldVector.from_arrays(
        u.grid, [a * phases[j] for j, a in enumerate(u.arrays())])
