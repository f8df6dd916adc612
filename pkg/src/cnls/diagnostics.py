"""Identity and hypothesis diagnostics run by the command-line `diag` path.

Each check measures a margin with at least tenfold headroom against its
tolerance, so verdicts do not flip with the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .energy import (
    ConstraintSet,
    EnergyContext,
    coercivity_check,
    coercivity_gamma,
    diamagnetic_defect,
    energy_hat,
    energy_gradient,
)
from .grid import (
    EPS_MODULUS,
    ComplexField,
    FieldVector,
    Grid,
    _l2_sq,
    _spectral_partial_real,
    gradient_sq_norm,
    h1_norm_sq,
    l2_norm_sq,
    modulus_partial,
)
from .groundstate import (
    MinimizeOptions,
    _lowpass_noise,
    complex_minimize,
    minimize,
)

__all__ = ["DiagRow", "run_diagnostics", "random_states"]


@dataclass(frozen=True)
class DiagRow:
    name: str
    value: Optional[float]
    tolerance: Optional[float]
    passed: bool
    note: str = ""

    def __str__(self) -> str:
        val = "" if self.value is None else f"{self.value:.6e}"
        tol = "" if self.tolerance is None else f"{self.tolerance:.1e}"
        verdict = "pass" if self.passed else "FAIL"
        return f"{self.name:<28} {verdict:<5} value={val:<14} tol={tol:<8} {self.note}"


def random_states(grid: Grid, ell: int, count: int, seed: int) -> list[FieldVector]:
    """Seeded smooth complex states with order-one amplitudes."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        comps = [_lowpass_noise(grid, rng) + 1j * _lowpass_noise(grid, rng)
                 for _ in range(ell)]
        out.append(FieldVector.from_arrays(grid, comps))
    return out


def _gradient_fd_error(ctx: EnergyContext, states, seed: int) -> float:
    rng = np.random.default_rng(seed + 1)
    eps = 1e-5
    worst = 0.0
    for z in states:
        direction = [_lowpass_noise(ctx.grid, rng) + 1j * _lowpass_noise(ctx.grid, rng)
                     for _ in range(z.ell)]
        plus = FieldVector.from_arrays(
            ctx.grid, [a + eps * d for a, d in zip(z.arrays(), direction)])
        minus = FieldVector.from_arrays(
            ctx.grid, [a - eps * d for a, d in zip(z.arrays(), direction)])
        fd = (energy_hat(ctx, plus) - energy_hat(ctx, minus)) / (2.0 * eps)
        grad = energy_gradient(ctx, z)
        inner = sum(
            float(np.sum(g.real * d.real + g.imag * d.imag)) * ctx.grid.cell_volume
            for g, d in zip(grad.arrays(), direction))
        worst = max(worst, abs(fd - inner) / max(1.0, abs(inner)))
    return worst


def _phase_removal_error(grid: Grid) -> float:
    """Prop-style oracle: |w e^(ikx)| has derivative exactly dw."""
    # Envelope width L/16 puts the boundary 8 sigma out (values ~ 1e-28), so
    # the periodic spectral derivative sees a smooth field.
    x = grid.coord_arrays()
    envelope = np.exp(-sum((xi / (length / 16.0)) ** 2
                           for xi, length in zip(x, grid.lengths_per_dim)) / 2.0)
    envelope = envelope + 0.0 * x[0]
    k = 2.0 * np.pi / grid.lengths_per_dim[0]
    z = ComplexField(grid, envelope * np.exp(1j * k * (x[0] + 0.0 * envelope)))
    worst = 0.0
    for axis in range(grid.n_dims):
        dw = _spectral_partial_real(grid, envelope, axis)
        mp = modulus_partial(z, axis).values
        mask = envelope > EPS_MODULUS
        worst = max(worst, float(np.max(np.abs(mp - dw)[mask])))
    return worst


def _chain_bound_violation(grid: Grid, states) -> float:
    worst = -np.inf
    for z in states:
        for comp in z.components:
            u, v = comp.values.real, comp.values.imag
            for axis in range(grid.n_dims):
                du = _spectral_partial_real(grid, u, axis)
                dv = _spectral_partial_real(grid, v, axis)
                mp = modulus_partial(comp, axis).values
                lhs = float(np.sum(mp * mp)) * grid.cell_volume
                rhs = float(np.sum(du * du + dv * dv)) * grid.cell_volume
                worst = max(worst, lhs - rhs)
    return worst


def _gauge_error(ctx: EnergyContext, states, seed: int) -> float:
    rng = np.random.default_rng(seed + 2)
    worst = 0.0
    for z in states:
        thetas = rng.uniform(0.0, 2.0 * np.pi, size=z.ell)
        rotated = FieldVector.from_arrays(
            ctx.grid, [a * np.exp(1j * t) for a, t in zip(z.arrays(), thetas)])
        e0 = energy_hat(ctx, z)
        e1 = energy_hat(ctx, rotated)
        worst = max(worst, abs(e1 - e0) / max(1.0, abs(e0)))
    return worst


def _translation_error(ctx: EnergyContext, states, seed: int) -> float:
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    for z in states:
        shifts = [int(rng.integers(1, n)) for n in ctx.grid.points_per_dim]
        moved = FieldVector.from_arrays(
            ctx.grid,
            [np.roll(a, shifts, axis=tuple(range(ctx.grid.n_dims))) for a in z.arrays()])
        e0 = energy_hat(ctx, z)
        e1 = energy_hat(ctx, moved)
        worst = max(worst, abs(e1 - e0) / max(1.0, abs(e0)))
    return worst


def run_diagnostics(ctx: EnergyContext, constraints: ConstraintSet,
                    opts: MinimizeOptions, seed: int = 0,
                    n_states: int = 20) -> list[DiagRow]:
    """Run the identity suite on seeded random fields plus the solved minimizer."""
    rows: list[DiagRow] = []
    grid = ctx.grid
    states = random_states(grid, ctx.spec.ell, n_states, seed)

    # Constraint-term exponent of the kinetic lower bound.
    ell1 = ctx.spec.growth_exponent
    if ell1 is not None and 0.0 < ell1 < 4.0 / grid.n_dims:
        gamma = coercivity_gamma(ell1, grid.n_dims)
        rows.append(DiagRow("coercivity-exponent", gamma, None, gamma > 2.0,
                            f"gamma for growth exponent {ell1:g} in {grid.n_dims}-d"))
    else:
        rows.append(DiagRow("coercivity-exponent", None, None, True,
                            "not applicable for this coupling"))

    rows.append(DiagRow("gradient-fd", _gradient_fd_error(ctx, states[:10], seed),
                        1e-6, True, "directional derivative vs gradient"))

    # Ground state (benchmark states for the remaining identities).
    result = minimize(ctx, constraints, opts)
    min_note = (f"value {result.value:.9g}, iterations {result.iterations}, "
                f"stop {result.stop_reason}")
    rows.append(DiagRow("groundstate-converged", result.residual, None,
                        result.converged, min_note))

    defect_states = list(states)
    if result.converged:
        arrays = result.state.arrays()
        rng = np.random.default_rng(seed + 4)
        twisted = [a * np.exp(1j * rng.uniform(0, 2 * np.pi)) for a in arrays]
        defect_states.append(FieldVector.from_arrays(grid, twisted))

    worst_rel = 0.0
    most_negative = 0.0
    for z in defect_states:
        d = diamagnetic_defect(ctx, z)
        scale = max(1.0, abs(d.direct), abs(d.formula))
        worst_rel = max(worst_rel, d.discrepancy / scale)
        most_negative = min(most_negative, d.direct, d.formula)
    rows.append(DiagRow("diamagnetic-agreement", worst_rel, 1e-8, worst_rel <= 1e-8,
                        "two evaluations of the modulus-energy excess"))
    rows.append(DiagRow("diamagnetic-nonneg", most_negative, 1e-10,
                        most_negative >= -1e-10, "defect must not be negative"))

    phase_err = _phase_removal_error(grid)
    rows.append(DiagRow("modulus-phase-removal", phase_err, 1e-10, phase_err <= 1e-10,
                        "plane-phase envelope derivative oracle"))

    chain = _chain_bound_violation(grid, states[:5])
    rows.append(DiagRow("modulus-chain-bound", chain, 1e-10, chain <= 1e-10,
                        "modulus gradient never exceeds the component gradients"))

    gauge = _gauge_error(ctx, states[:10], seed)
    rows.append(DiagRow("gauge-invariance", gauge, 1e-12, gauge <= 1e-12,
                        "energy under constant per-component phases"))

    if not ctx.spec.x_dependent:
        trans = _translation_error(ctx, states[:10], seed)
        rows.append(DiagRow("translation-invariance", trans, 1e-12, trans <= 1e-12,
                            "energy under whole-cell shifts"))

    # Coercivity constant over rescalings of the sampled states.
    scaled = []
    for lam in (1.0, 2.0):
        for z in states[:5]:
            scaled.append(FieldVector.from_arrays(
                grid, [lam * a for a in z.arrays()]))
    co = coercivity_check(ctx, scaled)
    if co.applicable:
        rows.append(DiagRow("coercivity-constant", co.constant, None, True,
                            f"estimated C (growth flag: {co.growth_flag})"))
    else:
        rows.append(DiagRow("coercivity-constant", None, None, True, co.reason))

    # Complex minimization must land on the same constrained infimum.
    if result.converged:
        cres = complex_minimize(ctx, constraints, opts)
        gap = abs(cres.value - result.value) / max(1.0, abs(result.value))
        rows.append(DiagRow("complex-vs-real-infimum", gap, 1e-5, gap <= 1e-5,
                            "complex and real constrained minima coincide"))
        cdef = diamagnetic_defect(ctx, cres.state)
        rows.append(DiagRow("complex-min-defect", cdef.direct, 1e-6,
                            abs(cdef.direct) <= 1e-6,
                            "complex minimizer is a phase times a real profile"))
    else:
        rows.append(DiagRow("complex-vs-real-infimum", None, None, True,
                            "skipped: no converged real minimizer"))

    return rows
