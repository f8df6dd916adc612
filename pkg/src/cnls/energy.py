"""Hamiltonian energy, its gradient, charges, and the energy identities.

The energy of a state z = (z_1, ..., z_ell) is
    E_hat(z) = 1/2 { sum_j |grad z_j|_2^2 - int H(x, |z_1|, ..., |z_ell|) },
its restriction to real states is E(u) = E_hat(u + 0i), and its L^2 gradient
is componentwise -lap(z_j) - h_j(x, |z|^2) z_j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import (
    EPS_MODULUS,
    ComplexField,
    FieldVector,
    Grid,
    _gradient_sq,
    _l2_sq,
    _laplacian,
    _spectral_partial_real,
)
from .nonlinearity import (
    HypothesisSampler,
    NonlinearitySpec,
    check_consistency,
    eval_H,
    eval_hj,
)

__all__ = [
    "ConstraintSet",
    "EnergyContext",
    "InconsistentNonlinearityError",
    "DiamagneticDefect",
    "CoercivityReport",
    "energy_hat",
    "energy_real",
    "energy_gradient",
    "charges",
    "diamagnetic_defect",
    "coercivity_gamma",
    "coercivity_check",
]


class InconsistentNonlinearityError(ValueError):
    """Raised when a coupling fails its H/h consistency check."""


@dataclass(frozen=True)
class ConstraintSet:
    """Per-component mass constraints: target L^2 norms c_j > 0."""

    c: tuple[float, ...]

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.c)
        if len(c) < 1:
            raise ValueError("need at least one constraint")
        for v in c:
            if not np.isfinite(v) or v <= 0.0:
                raise ValueError(f"constraint norms must be positive, got {v}")
        object.__setattr__(self, "c", c)

    @property
    def ell(self) -> int:
        return len(self.c)

    @property
    def charges(self) -> tuple[float, ...]:
        return tuple(v * v for v in self.c)

    @property
    def total_charge(self) -> float:
        return float(sum(v * v for v in self.c))


class EnergyContext:
    """Grid plus coupling, with coordinates cached for x-dependent couplings.

    Construction runs the H/h consistency check and refuses inconsistent
    couplings; everything downstream (ground states, dynamics, stability)
    goes through a context, so a broken coupling never reaches a solver.
    """

    def __init__(self, grid: Grid, spec: NonlinearitySpec,
                 consistency_sampler: Optional[HypothesisSampler] = None,
                 consistency_tol: float = 1e-6) -> None:
        sampler = consistency_sampler or HypothesisSampler(n_dims=grid.n_dims)
        report = check_consistency(spec, sampler, tol=consistency_tol)
        if not report.passed:
            raise InconsistentNonlinearityError(
                f"coupling '{spec.name}' violates dH/ds_j = 2 h_j s_j: {report}"
            )
        self.grid = grid
        self.spec = spec
        self.coords = grid.coord_arrays() if spec.x_dependent else None
        self.consistency = report

    def check_state(self, z: FieldVector) -> None:
        if z.grid != self.grid:
            raise ValueError("state grid does not match the context grid")
        if z.ell != self.spec.ell:
            raise ValueError(
                f"state has {z.ell} components, coupling '{self.spec.name}' "
                f"expects {self.spec.ell}"
            )


# ---------------------------------------------------------------------------
# energy and gradient (array-level kernels + public wrappers)
# ---------------------------------------------------------------------------

def _coupling_integral(ctx: EnergyContext, moduli: list[np.ndarray]) -> float:
    vals = eval_H(ctx.spec, ctx.coords, np.stack(moduli))
    return float(np.sum(vals) * ctx.grid.cell_volume)


def _energy_arrays(ctx: EnergyContext, arrays: Sequence[np.ndarray]) -> float:
    kinetic = sum(_gradient_sq(ctx.grid, a) for a in arrays)
    moduli = [np.hypot(a.real, a.imag) if np.iscomplexobj(a) else np.abs(a) for a in arrays]
    return 0.5 * (kinetic - _coupling_integral(ctx, moduli))


def _gradient_arrays(ctx: EnergyContext, arrays: Sequence[np.ndarray]) -> list[np.ndarray]:
    s_sq = np.stack([(a.real * a.real + a.imag * a.imag) if np.iscomplexobj(a) else a * a
                     for a in arrays])
    out = []
    for j, a in enumerate(arrays):
        h = eval_hj(ctx.spec, j, ctx.coords, s_sq)
        out.append(-_laplacian(ctx.grid, a) - h * a)
    return out


def energy_hat(ctx: EnergyContext, z: FieldVector) -> float:
    """The Hamiltonian on complex states."""
    ctx.check_state(z)
    return _energy_arrays(ctx, z.arrays())


def energy_real(ctx: EnergyContext, u: FieldVector) -> float:
    """The energy on real states; equals energy_hat on the complexification."""
    ctx.check_state(u)
    for c in u.components:
        if np.any(c.values.imag != 0.0):
            raise ValueError("energy_real expects components with zero imaginary part")
    return energy_hat(ctx, u)


def energy_gradient(ctx: EnergyContext, z: FieldVector) -> FieldVector:
    """L^2 gradient of the Hamiltonian: component j is -lap(z_j) - h_j z_j."""
    ctx.check_state(z)
    return FieldVector.from_arrays(ctx.grid, _gradient_arrays(ctx, z.arrays()))


def charges(z: FieldVector) -> np.ndarray:
    """Squared L^2 norms of the components (the conserved masses)."""
    return np.array([_l2_sq(c.grid, c.values) for c in z.components])


# ---------------------------------------------------------------------------
# the diamagnetic defect, computed two independent ways
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiamagneticDefect:
    """E_hat(z) - E(|z|), by direct energy difference and by the phase-current
    quotient integral; the two must agree and both must be nonnegative."""

    direct: float
    formula: float

    @property
    def discrepancy(self) -> float:
        return abs(self.direct - self.formula)


def diamagnetic_defect(ctx: EnergyContext, z: FieldVector) -> DiamagneticDefect:
    """Energy excess of a complex state over its modulus state.

    direct: E_hat(z) minus the energy of |z| with the modulus gradient taken
    from the weak-derivative quotient.  formula: the integral of
    (u dv - v du)^2 / (u^2 + v^2) summed over components and axes, halved.
    Both use the EPS_MODULUS cutoff on the vanishing set.
    """
    ctx.check_state(z)
    grid = ctx.grid
    dV = grid.cell_volume
    arrays = z.arrays()
    moduli = [np.hypot(a.real, a.imag) for a in arrays]

    kin_z = sum(_gradient_sq(grid, a) for a in arrays)
    H_int = _coupling_integral(ctx, moduli)

    kin_mod = 0.0
    current_sq = 0.0
    for a, m in zip(arrays, moduli):
        u, v = a.real, a.imag
        m_sq = u * u + v * v
        mask = m > EPS_MODULUS
        for axis in range(grid.n_dims):
            du = _spectral_partial_real(grid, u, axis)
            dv = _spectral_partial_real(grid, v, axis)
            radial = np.zeros_like(m)
            np.divide(u * du + v * dv, m, out=radial, where=mask)
            kin_mod += float(np.sum(radial * radial)) * dV
            swirl = np.zeros_like(m)
            np.divide((u * dv - v * du) ** 2, m_sq, out=swirl, where=mask)
            current_sq += float(np.sum(swirl)) * dV

    e_hat = 0.5 * (kin_z - H_int)
    e_mod = 0.5 * (kin_mod - H_int)
    return DiamagneticDefect(direct=e_hat - e_mod, formula=0.5 * current_sq)


# ---------------------------------------------------------------------------
# coercivity diagnostics
# ---------------------------------------------------------------------------

def coercivity_gamma(ell1: float, n_dims: int) -> float:
    """Exponent of the constraint term in the kinetic lower bound.

    gamma = 2 (2 ell1 + 4 - N ell1) / (4 - N ell1), defined for
    0 < ell1 < 4/N and always > 2 there.
    """
    if n_dims not in (1, 2, 3):
        raise ValueError("n_dims must be 1, 2 or 3")
    if not 0.0 < ell1 < 4.0 / n_dims:
        raise ValueError(f"ell1 must lie in (0, {4.0 / n_dims:g}), got {ell1}")
    gamma = 2.0 * (2.0 * ell1 + 4.0 - n_dims * ell1) / (4.0 - n_dims * ell1)
    assert gamma > 2.0
    return gamma


@dataclass(frozen=True)
class CoercivityReport:
    """Smallest constant C making E_hat(z) >= |grad z|^2/4 - C (c^2 + c^gamma)
    hold on the sampled states; diagnostic only (C is estimated, never proven).
    """

    applicable: bool
    constant: float = 0.0
    gamma: float = 0.0
    witness_index: int = -1
    per_mass: tuple[tuple[float, float], ...] = ()
    growth_flag: bool = False
    reason: str = ""

    def __str__(self) -> str:
        if not self.applicable:
            return f"coercivity check not applicable: {self.reason}"
        flag = " (C grows with c: red flag)" if self.growth_flag else ""
        return (f"coercivity bound holds with C = {self.constant:.6e} "
                f"(gamma = {self.gamma:.4f}, witness state {self.witness_index}){flag}")


def coercivity_check(ctx: EnergyContext, states: Sequence[FieldVector]) -> CoercivityReport:
    """Estimate the coercivity constant over a batch of constrained states.

    Any finite batch admits a finite C; the diagnostic value lies in the size
    of C and in whether it grows as the total mass c increases.
    """
    ell1 = ctx.spec.growth_exponent
    if ell1 is None:
        # No growth exponent at all (e.g. H = 0): the bound holds with C = 0.
        if all(abs(eval_H(ctx.spec, ctx.coords, np.stack(
                [np.hypot(a.real, a.imag) for a in s.arrays()]))).max() == 0.0
               for s in states):
            return CoercivityReport(applicable=True, constant=0.0, gamma=2.0,
                                    witness_index=0, per_mass=())
        return CoercivityReport(applicable=False,
                                reason="coupling has no declared growth exponent")
    if not 0.0 < ell1 < 4.0 / ctx.grid.n_dims:
        return CoercivityReport(
            applicable=False,
            reason=f"growth exponent {ell1:g} outside (0, {4.0 / ctx.grid.n_dims:g})")
    gamma = coercivity_gamma(ell1, ctx.grid.n_dims)

    needed = []
    masses = []
    for s in states:
        ctx.check_state(s)
        kin = sum(_gradient_sq(ctx.grid, a) for a in s.arrays())
        e = energy_hat(ctx, s)
        c_sq = float(np.sum(charges(s)))
        c = np.sqrt(c_sq)
        denom = c_sq + c**gamma
        needed.append(max(0.0, (0.25 * kin - e) / denom))
        masses.append(c)

    needed_arr = np.array(needed)
    k = int(np.argmax(needed_arr))
    per_mass: dict[float, float] = {}
    for c, val in zip(masses, needed):
        key = round(c, 9)
        per_mass[key] = max(per_mass.get(key, 0.0), val)
    table = tuple(sorted(per_mass.items()))
    growth_flag = False
    if len(table) >= 2 and table[0][1] > 0.0:
        growth_flag = table[-1][1] > 10.0 * table[0][1]
    return CoercivityReport(applicable=True, constant=float(needed_arr[k]), gamma=gamma,
                            witness_index=k, per_mass=table, growth_flag=growth_flag)
