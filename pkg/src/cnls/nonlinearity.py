"""Coupling nonlinearities and their sampled hypothesis checks.

A nonlinearity is described by two evaluators tied together by the relation
dH/ds_j = 2 h_j(x, s_1^2, ..., s_ell^2) s_j: H enters the energy, the h_j
enter the evolution equations and the elliptic system.  `check_consistency`
verifies the relation by finite differences; `check_hypotheses` probes the
structural assumptions (H0)-(H7) used by the stability theory on a sampled
cloud of (x, s, r, theta) points.  A sampled "pass" means "no violation found
at the recorded sample count", never a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

__all__ = [
    "NonlinearitySpec",
    "HypothesisParams",
    "HypothesisEntry",
    "HypothesisReport",
    "ConsistencyReport",
    "HypothesisSampler",
    "eval_H",
    "eval_hj",
    "check_consistency",
    "check_hypotheses",
    "scalar_power",
    "scalar_cubic",
    "manakov",
    "coupled_product",
    "x_modulated",
    "free_field",
    "inconsistent_fixture",
    "build_family",
    "FAMILY_BUILDERS",
]

# Relative step for the central finite differences used on H.
FD_REL_STEP = 1e-5
# Smallest modulus at which derivatives of H are sampled (keeps s - h > 0).
FD_FLOOR = 1e-3
# Relative slack granted to every sampled inequality before it counts as violated.
CHECK_TOL = 1e-12


@dataclass(frozen=True)
class NonlinearitySpec:
    """Evaluators for a coupling H and its component functions h_j.

    eval_H(x, s): x is a tuple of coordinate arrays (or None when the family
    ignores position), s is an array of ell nonnegative moduli stacked on the
    leading axis; broadcasts over any trailing shape.  eval_hj(j, x, s_sq)
    consumes squared moduli with 0-based component index j.
    """

    name: str
    ell: int
    eval_H: Callable
    eval_hj: Callable
    x_dependent: bool = False
    params: Mapping[str, float] = field(default_factory=dict)
    # Growth exponent of H beyond quadratic (the mass-critical comparison
    # exponent); None when unknown or meaningless (e.g. H = 0).
    growth_exponent: Optional[float] = None
    # Large-|x| limit of the coupling, when the family has one.
    infty: Optional["NonlinearitySpec"] = None


def eval_H(spec: NonlinearitySpec, x, s) -> np.ndarray:
    """Evaluate H(x, s) on nonnegative moduli."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] != spec.ell:
        raise ValueError(f"expected {spec.ell} modulus rows, got {s.shape[0]}")
    if np.any(s < 0):
        raise ValueError("moduli must be nonnegative")
    out = np.asarray(spec.eval_H(x, s), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"H evaluation of family '{spec.name}' is not finite")
    return out


def eval_hj(spec: NonlinearitySpec, j: int, x, s_sq) -> np.ndarray:
    """Evaluate h_j(x, s_sq) for 0-based component j on squared moduli."""
    if not 0 <= j < spec.ell:
        raise IndexError(f"component {j} out of range for ell={spec.ell}")
    s_sq = np.asarray(s_sq, dtype=np.float64)
    if np.any(s_sq < 0):
        raise ValueError("squared moduli must be nonnegative")
    out = np.asarray(spec.eval_hj(j, x, s_sq), dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"h_{j} evaluation of family '{spec.name}' is not finite")
    return out


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------

def scalar_power(p: float = 3.0, name: str | None = None) -> NonlinearitySpec:
    """Single-component power coupling: h(x, t) = t^((p-1)/2), H = 2 s^(p+1) / (p+1)."""
    if p < 1.0:
        raise ValueError(f"power exponent must be >= 1, got {p}")
    exp_h = (p - 1.0) / 2.0

    def H(x, s):
        return (2.0 / (p + 1.0)) * s[0] ** (p + 1.0)

    def hj(j, x, s_sq):
        if exp_h == 1.0:
            return np.asarray(s_sq[0], dtype=np.float64)
        return s_sq[0] ** exp_h

    return NonlinearitySpec(
        name=name or f"scalar_power(p={p:g})",
        ell=1,
        eval_H=H,
        eval_hj=hj,
        params={"p": p},
        growth_exponent=p - 1.0,
    )


def scalar_cubic() -> NonlinearitySpec:
    """The cubic focusing coupling, h(x, t) = t; the sech-soliton benchmark."""
    return scalar_power(3.0, name="scalar_cubic")


def manakov(ell: int = 2) -> NonlinearitySpec:
    """Symmetric cross-coupled system: h_j = sum_k s_k^2, H = (sum_k s_k^2)^2 / 2."""
    if ell < 1:
        raise ValueError("manakov needs at least one component")

    def H(x, s):
        total = np.sum(s * s, axis=0)
        return 0.5 * total * total

    def hj(j, x, s_sq):
        return np.sum(s_sq, axis=0)

    return NonlinearitySpec(
        name=f"manakov(ell={ell})", ell=ell, eval_H=H, eval_hj=hj, growth_exponent=2.0
    )


def coupled_product(strength: float = 1.0, alpha1: float = 2.0, alpha2: float = 2.0
                    ) -> NonlinearitySpec:
    """Two-component product coupling H = strength * s_1^alpha1 * s_2^alpha2.

    Exponents must be >= 2 so the associated h_j stay finite at the axes.
    """
    if strength <= 0:
        raise ValueError("coupling strength must be positive")
    if alpha1 < 2.0 or alpha2 < 2.0:
        raise ValueError("product exponents must be >= 2")
    alphas = (alpha1, alpha2)

    def H(x, s):
        return strength * s[0] ** alpha1 * s[1] ** alpha2

    def hj(j, x, s_sq):
        a = alphas[j]
        b = alphas[1 - j]
        own = s_sq[j] ** ((a - 2.0) / 2.0) if a != 2.0 else np.ones_like(s_sq[j])
        other = s_sq[1 - j] ** (b / 2.0)
        return 0.5 * strength * a * own * other

    return NonlinearitySpec(
        name=f"coupled_product({strength:g},{alpha1:g},{alpha2:g})",
        ell=2,
        eval_H=H,
        eval_hj=hj,
        params={"strength": strength, "alpha1": alpha1, "alpha2": alpha2},
        growth_exponent=alpha1 + alpha2 - 2.0,
    )


def x_modulated(base: NonlinearitySpec | None = None) -> NonlinearitySpec:
    """Position-modulated coupling (1 + e^-|x|) * H_base(s), decaying to H_base.

    The base family doubles as the large-|x| limit; being x-independent it is
    periodic with any integer period.
    """
    base = base if base is not None else scalar_cubic()
    if base.x_dependent:
        raise ValueError("the modulation base must be x-independent")

    def _radius(x, tail_shape):
        if x is None:
            raise ValueError("x-dependent coupling evaluated without coordinates")
        r_sq = None
        for xi in x:
            xi = np.asarray(xi, dtype=np.float64)
            r_sq = xi * xi if r_sq is None else r_sq + xi * xi
        return np.sqrt(r_sq)

    def H(x, s):
        w = 1.0 + np.exp(-_radius(x, s.shape[1:]))
        return w * base.eval_H(None, s)

    def hj(j, x, s_sq):
        w = 1.0 + np.exp(-_radius(x, s_sq.shape[1:]))
        return w * base.eval_hj(j, None, s_sq)

    return NonlinearitySpec(
        name=f"x_modulated[{base.name}]",
        ell=base.ell,
        eval_H=H,
        eval_hj=hj,
        x_dependent=True,
        params=dict(base.params),
        growth_exponent=base.growth_exponent,
        infty=base,
    )


def free_field(ell: int = 1) -> NonlinearitySpec:
    """No coupling at all: H = 0, h_j = 0 (the linear dispersive system)."""

    def H(x, s):
        return np.zeros(np.shape(s)[1:], dtype=np.float64)

    def hj(j, x, s_sq):
        return np.zeros(np.shape(s_sq)[1:], dtype=np.float64)

    return NonlinearitySpec(name=f"free(ell={ell})", ell=ell, eval_H=H, eval_hj=hj)


def inconsistent_fixture() -> NonlinearitySpec:
    """Deliberately broken pair (H = s^4 with h = t): exercises the rejection path."""

    def H(x, s):
        return s[0] ** 4

    def hj(j, x, s_sq):
        return np.asarray(s_sq[0], dtype=np.float64)

    return NonlinearitySpec(
        name="inconsistent_fixture", ell=1, eval_H=H, eval_hj=hj, growth_exponent=2.0
    )


def _build_scalar_power(ell, params):
    return scalar_power(float(params.get("p", 3.0)))


def _build_scalar_cubic(ell, params):
    return scalar_cubic()


def _build_manakov(ell, params):
    return manakov(ell=ell if ell else 2)


def _build_coupled_product(ell, params):
    return coupled_product(
        strength=float(params.get("strength", 1.0)),
        alpha1=float(params.get("alpha1", 2.0)),
        alpha2=float(params.get("alpha2", 2.0)),
    )


def _build_x_modulated(ell, params):
    base_name = params.get("base", "scalar_cubic")
    base_params = {k: v for k, v in params.items() if k != "base"}
    return x_modulated(build_family(base_name, ell=ell, params=base_params))


def _build_free(ell, params):
    return free_field(ell=ell if ell else 1)


def _build_inconsistent(ell, params):
    return inconsistent_fixture()


FAMILY_BUILDERS = {
    "scalar_power": _build_scalar_power,
    "scalar_cubic": _build_scalar_cubic,
    "manakov": _build_manakov,
    "coupled_product": _build_coupled_product,
    "x_modulated": _build_x_modulated,
    "free": _build_free,
    "inconsistent_fixture": _build_inconsistent,
}


def build_family(name: str, ell: int | None = None, params: Mapping | None = None
                 ) -> NonlinearitySpec:
    """Construct a built-in family by name (the CLI configuration entry point)."""
    try:
        builder = FAMILY_BUILDERS[name]
    except KeyError:
        known = ", ".join(sorted(FAMILY_BUILDERS))
        raise ValueError(f"unknown nonlinearity family '{name}' (known: {known})") from None
    spec = builder(ell, dict(params or {}))
    if ell is not None and spec.ell != ell:
        raise ValueError(f"family '{name}' has {spec.ell} components, config says {ell}")
    return spec


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisSampler:
    """Seeded sample cloud for the consistency and hypothesis checks.

    Moduli are log-uniform over several decades; corner rows (zero vector,
    axis points, unit scalings) are always appended since violations tend to
    hide there.
    """

    n_dims: int = 1
    n_samples: int = 400
    seed: int = 0
    s_log_range: tuple[float, float] = (-3.0, 3.0)
    x_radius: float = 60.0
    theta_cap: float = 8.0

    def _directions(self, rng, count: int, ell: int) -> np.ndarray:
        d = np.abs(rng.standard_normal((count, ell)))
        norms = np.linalg.norm(d, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return d / norms

    def draw_moduli(self, ell: int, floor: float = 0.0) -> np.ndarray:
        """(M, ell) nonnegative moduli including corner rows."""
        rng = np.random.default_rng(self.seed)
        lo, hi = self.s_log_range
        mags = 10.0 ** rng.uniform(lo, hi, size=self.n_samples)
        body = self._directions(rng, self.n_samples, ell) * mags[:, None]
        corners = [np.zeros(ell)]
        for mag in (10.0 ** lo, 1.0, 10.0 ** hi):
            corners.append(np.full(ell, mag / np.sqrt(ell)))
            for j in range(ell):
                axis = np.zeros(ell)
                axis[j] = mag
                corners.append(axis)
        out = np.vstack([body, np.array(corners)])
        if floor > 0.0:
            out = np.maximum(out, floor)
        return out

    def draw_points(self, count: int | None = None, min_radius: float = 0.0) -> np.ndarray:
        """(M, n_dims) sample positions, radius in [min_radius, min_radius + x_radius]."""
        rng = np.random.default_rng(self.seed + 1)
        count = count if count is not None else self.n_samples
        dirs = rng.standard_normal((count, self.n_dims))
        norms = np.linalg.norm(dirs, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radii = min_radius + self.x_radius * rng.uniform(0.0, 1.0, size=count)
        return dirs / norms * radii[:, None]

    def draw_thetas(self, ell: int) -> np.ndarray:
        """(M, ell) per-component scalings >= 1, including unit and uniform rows."""
        rng = np.random.default_rng(self.seed + 2)
        body = 1.0 + (self.theta_cap - 1.0) * rng.uniform(0.0, 1.0, (self.n_samples, ell)) ** 2
        uniform = np.repeat(
            1.0 + (self.theta_cap - 1.0) * rng.uniform(0.0, 1.0, (8, 1)), ell, axis=1
        )
        ones = np.ones((1, ell))
        out = np.vstack([body, uniform, ones])
        return out


def _points_tuple(xs: np.ndarray) -> tuple[np.ndarray, ...]:
    """Split an (M, n_dims) position block into per-axis arrays of shape (M,)."""
    return tuple(xs[:, i] for i in range(xs.shape[1]))


# ---------------------------------------------------------------------------
# consistency of H against the h_j
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConsistencyReport:
    passed: bool
    max_deviation: float
    n_samples: int
    tol: float
    witness: Optional[dict] = None

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"consistency {status}: max deviation {self.max_deviation:.3e} "
                f"(tol {self.tol:.1e}, {self.n_samples} samples)")


def _fd_partial_H(spec: NonlinearitySpec, x, s: np.ndarray, j: int) -> np.ndarray:
    """Central finite difference of H in the j-th modulus, relative step."""
    h = FD_REL_STEP * np.maximum(np.abs(s[j]), FD_FLOOR)
    sp = s.copy()
    sm = s.copy()
    sp[j] = s[j] + h
    sm[j] = s[j] - h
    return (eval_H(spec, x, sp) - eval_H(spec, x, sm)) / (2.0 * h)


def _consistency_moduli(ell: int, sampler: HypothesisSampler) -> np.ndarray:
    """(ell, M) moduli for the derivative comparison.

    Components of one sample stay within a common decade (wildly mixed
    magnitudes make the finite difference of H pure cancellation noise);
    axis points cover the pure single-component directions instead.
    """
    rng = np.random.default_rng(sampler.seed + 5)
    lo, hi = sampler.s_log_range
    mags = 10.0 ** rng.uniform(lo, hi, size=sampler.n_samples)
    dirs = rng.uniform(0.1, 1.0, size=(sampler.n_samples, ell))
    body = dirs * mags[:, None]
    rows = [body]
    for mag in (10.0 ** lo, 1.0, 10.0 ** hi):
        rows.append(np.full((1, ell), mag))
        for j in range(ell):
            axis = np.full(ell, FD_FLOOR)
            axis[j] = mag
            rows.append(axis[None, :])
    return np.vstack(rows).T


def check_consistency(spec: NonlinearitySpec,
                      sampler: HypothesisSampler | None = None,
                      tol: float = 1e-6) -> ConsistencyReport:
    """Verify dH/ds_j = 2 h_j s_j by central differences on a sample cloud.

    Deviations are measured relative to the derivative scale after
    subtracting the finite-difference noise budget eps * |H| / step, so the
    check neither fakes precision the difference quotient cannot deliver nor
    misses a genuine mismatch (which shows up at order one).
    """
    sampler = sampler or HypothesisSampler()
    ss = _consistency_moduli(spec.ell, sampler)  # (ell, M)
    if spec.x_dependent:
        xs = _points_tuple(sampler.draw_points(count=ss.shape[1]))
    else:
        xs = None
    H_mag = np.abs(eval_H(spec, xs, ss))
    worst = 0.0
    witness = None
    for j in range(spec.ell):
        fd = _fd_partial_H(spec, xs, ss, j)
        rhs = 2.0 * eval_hj(spec, j, xs, ss * ss) * ss[j]
        step = FD_REL_STEP * np.maximum(np.abs(ss[j]), FD_FLOOR)
        noise = 64.0 * np.finfo(float).eps * H_mag / step
        scale = np.maximum(1.0, np.maximum(np.abs(fd), np.abs(rhs)))
        dev = np.maximum(0.0, np.abs(fd - rhs) - noise) / scale
        k = int(np.argmax(dev))
        if dev[k] > worst:
            worst = float(dev[k])
            witness = {
                "component": j,
                "s": ss[:, k].copy(),
                "x": None if xs is None else np.array([xi[k] for xi in xs]),
                "fd_dH": float(fd[k]),
                "two_h_s": float(rhs[k]),
            }
    passed = worst <= tol
    return ConsistencyReport(
        passed=passed,
        max_deviation=worst,
        n_samples=ss.shape[1] * spec.ell,
        tol=tol,
        witness=None if passed else witness,
    )


# ---------------------------------------------------------------------------
# hypothesis parameters and report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisParams:
    """Constants entering the structural hypotheses; leave a group at None to
    skip its checks.

    n_dims is the spatial dimension the constants refer to (it constrains the
    admissible exponents).  R and S bound the far-field lower-bound test
    (positions |x| >= R, moduli |s| < S); R doubles as the modulus-ball radius
    of the bounded-set Lipschitz test in one dimension.
    """

    n_dims: int = 1
    K: Optional[float] = None            # (H0) growth constant
    ell1: Optional[float] = None         # (H0) growth exponent, in (0, 4/N)
    c_prime: Optional[float] = None      # (H1) Lipschitz constant
    alpha: Optional[float] = None        # (H1) growth of the Lipschitz envelope
    B: Optional[float] = None            # (H2) derivative growth constant
    Delta: Optional[float] = None        # (H3) far-field lower-bound constant
    R: Optional[float] = None            # (H3) inner radius
    S: Optional[float] = None            # (H3) modulus cap
    alphas: Optional[tuple[float, ...]] = None  # (H3) product exponents
    t_exp: Optional[float] = None        # (H3) radial decay exponent, in [0, 2)
    Gamma: Optional[float] = None        # (H5) comparison exponent, in (0, 4/N)
    A_prime: Optional[float] = None      # (H6) growth constant for the limit
    B_prime: Optional[float] = None      # (H6) derivative constant for the limit
    beta: Optional[float] = None         # (H6) lower growth exponent, < ell1
    sigma: Optional[float] = None        # (H7) scaling exponent, in (0, 4/N)
    period: Optional[tuple[int, ...]] = None  # integer periods of the limit coupling

    def __post_init__(self) -> None:
        if self.n_dims not in (1, 2, 3):
            raise ValueError("n_dims must be 1, 2 or 3")
        crit = 4.0 / self.n_dims
        if self.ell1 is not None and not 0.0 < self.ell1 < crit:
            raise ValueError(f"ell1 must lie in (0, {crit:g}), got {self.ell1}")
        if self.t_exp is not None and not 0.0 <= self.t_exp < 2.0:
            raise ValueError(f"t_exp must lie in [0, 2), got {self.t_exp}")
        if self.beta is not None:
            if self.ell1 is None or not self.beta < self.ell1:
                raise ValueError("beta requires ell1 with beta < ell1")
        if self.sigma is not None and not 0.0 < self.sigma < crit:
            raise ValueError(f"sigma must lie in (0, {crit:g}), got {self.sigma}")
        if self.Gamma is not None and not 0.0 < self.Gamma < crit:
            raise ValueError(f"Gamma must lie in (0, {crit:g}), got {self.Gamma}")
        if self.alphas is not None:
            object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
            if any(a <= 0 for a in self.alphas):
                raise ValueError("product exponents must be positive")
            t = self.t_exp if self.t_exp is not None else 0.0
            total = sum(self.alphas)
            if not self.n_dims + 2.0 > 0.5 * self.n_dims * total + t:
                raise ValueError(
                    f"exponent budget violated: need N+2 > (N/2)*sum(alphas)+t, "
                    f"got {self.n_dims + 2} <= {0.5 * self.n_dims * total + t}"
                )
        if self.period is not None:
            object.__setattr__(self, "period", tuple(int(p) for p in self.period))


@dataclass
class HypothesisEntry:
    name: str
    status: str                     # "pass" | "fail" | "not-applicable"
    description: str
    margin: Optional[float] = None  # min over samples of normalized (lhs - rhs)
    n_samples: int = 0
    witness: Optional[dict] = None  # populated on failure

    def __post_init__(self) -> None:
        if self.status == "fail" and self.witness is None:
            raise ValueError(f"{self.name}: a failing entry must carry a witness")


@dataclass
class HypothesisReport:
    family: str
    entries: dict[str, HypothesisEntry]

    def status(self, name: str) -> str:
        return self.entries[name].status

    def passed(self, name: str) -> bool:
        return self.entries[name].status == "pass"

    def rows(self) -> list[tuple[str, str, str, str]]:
        out = []
        for name, e in self.entries.items():
            margin = "" if e.margin is None else f"{e.margin:.6e}"
            out.append((name, e.status, margin, str(e.n_samples)))
        return out

    def __str__(self) -> str:
        lines = [f"hypothesis report for {self.family}"]
        for name, e in self.entries.items():
            margin = "" if e.margin is None else f"  margin={e.margin:.3e}"
            lines.append(f"  {name:<14} {e.status:<15}{margin}  [{e.description}]")
        return "\n".join(lines)


def _margin_entry(name: str, description: str, lhs: np.ndarray, rhs: np.ndarray,
                  witness_data: Callable[[int], dict], n_samples: int) -> HypothesisEntry:
    """Build an entry from sampled lhs >= rhs values using a relative margin."""
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    margins = (lhs - rhs) / scale
    k = int(np.argmin(margins))
    worst = float(margins[k])
    if worst < -CHECK_TOL:
        return HypothesisEntry(name, "fail", description, margin=worst,
                               n_samples=n_samples, witness=witness_data(k))
    return HypothesisEntry(name, "pass", description, margin=worst, n_samples=n_samples)


def _na(name: str, description: str) -> HypothesisEntry:
    return HypothesisEntry(name, "not-applicable", description)


def _growth_envelope(s_norm: np.ndarray, exponent: float) -> np.ndarray:
    return s_norm**2 + s_norm ** (exponent + 2.0)


def check_hypotheses(spec: NonlinearitySpec,
                     hp: HypothesisParams,
                     sampler: HypothesisSampler | None = None,
                     infty_spec: NonlinearitySpec | None = None) -> HypothesisReport:
    """Probe (H0)-(H7) on sampled points; limit checks need an asymptotic family.

    Raises ValueError when constants for (H5)-(H7) are supplied but no
    asymptotic coupling is available (neither the argument nor spec.infty).
    """
    sampler = sampler or HypothesisSampler(n_dims=hp.n_dims)
    if sampler.n_dims != hp.n_dims:
        raise ValueError("sampler and hypothesis constants disagree on n_dims")
    infty = infty_spec if infty_spec is not None else spec.infty
    wants_limit = any(v is not None for v in (hp.Gamma, hp.A_prime, hp.sigma))
    if wants_limit and infty is None:
        raise ValueError("limit-coupling checks requested but no asymptotic family is available")

    ell = spec.ell
    ss = sampler.draw_moduli(ell)            # (M, ell)
    s_norm = np.linalg.norm(ss, axis=1)
    xs_block = sampler.draw_points(count=ss.shape[0])
    xs = _points_tuple(xs_block) if spec.x_dependent else None
    M = ss.shape[0]
    entries: dict[str, HypothesisEntry] = {}

    H_vals = eval_H(spec, xs, ss.T)

    # --- H0: 0 <= H <= K (|s|^2 + |s|^(ell1+2)) -----------------------------
    if hp.K is not None and hp.ell1 is not None:
        desc = "growth bound 0 <= H <= K(|s|^2 + |s|^(ell1+2))"
        envelope = hp.K * _growth_envelope(s_norm, hp.ell1)
        lhs = np.concatenate([H_vals, envelope])
        rhs = np.concatenate([np.zeros(M), H_vals])

        def _wit_h0(k):
            i = k % M
            side = "H >= 0" if k < M else "H <= K envelope"
            return {"side": side, "s": ss[i].copy(),
                    "x": None if xs is None else xs_block[i].copy(),
                    "H": float(H_vals[i])}

        entries["H0"] = _margin_entry("H0", desc, lhs, rhs, _wit_h0, 2 * M)
    else:
        entries["H0"] = _na("H0", "growth bound (needs K, ell1)")

    # --- H1 / H1-Lipschitz: difference bound on h_j s_j ---------------------
    rs = HypothesisSampler(
        n_dims=sampler.n_dims, n_samples=sampler.n_samples,
        seed=sampler.seed + 7, s_log_range=sampler.s_log_range,
    ).draw_moduli(ell)
    n_pairs = min(len(ss), len(rs))
    sp, rp = ss[:n_pairs], rs[:n_pairs]
    xp = _points_tuple(xs_block[:n_pairs]) if spec.x_dependent else None
    diff_norm = np.linalg.norm(sp - rp, axis=1)
    max_delta = np.zeros(n_pairs)
    for j in range(ell):
        a = eval_hj(spec, j, xp, (sp * sp).T) * sp[:, j]
        b = eval_hj(spec, j, xp, (rp * rp).T) * rp[:, j]
        max_delta = np.maximum(max_delta, np.abs(a - b))

    def _wit_h1(k):
        return {"s": sp[k].copy(), "r": rp[k].copy(), "delta": float(max_delta[k])}

    if hp.c_prime is not None and hp.alpha is not None and hp.n_dims >= 2:
        desc = "locally Lipschitz with polynomial envelope"
        sn, rn = np.linalg.norm(sp, axis=1), np.linalg.norm(rp, axis=1)
        bound = hp.c_prime * (1.0 + sn**hp.alpha + rn**hp.alpha) * diff_norm
        entries["H1"] = _margin_entry("H1", desc, bound, max_delta, _wit_h1, n_pairs)
    else:
        entries["H1"] = _na("H1", "envelope Lipschitz bound (needs c_prime, alpha; N >= 2)")

    if hp.c_prime is not None and hp.n_dims == 1:
        radius = hp.R if hp.R is not None else float(np.max(np.linalg.norm(sp, axis=1) * 2))
        mask = (np.linalg.norm(sp, axis=1) + np.linalg.norm(rp, axis=1)) <= radius
        if np.any(mask):
            desc = f"Lipschitz on the modulus ball |s|+|r| <= {radius:g}"
            idx = np.flatnonzero(mask)

            def _wit_lip(k):
                return _wit_h1(idx[k])

            entries["H1-Lipschitz"] = _margin_entry(
                "H1-Lipschitz", desc,
                hp.c_prime * diff_norm[mask], max_delta[mask], _wit_lip, int(mask.sum()),
            )
        else:
            entries["H1-Lipschitz"] = _na("H1-Lipschitz", "no sampled pair inside the ball")
    else:
        entries["H1-Lipschitz"] = _na(
            "H1-Lipschitz", "bounded-set Lipschitz bound (needs c_prime; N = 1)")

    # --- H2: |d_j H| <= B (|s| + |s|^(ell1+1)) ------------------------------
    if hp.B is not None and hp.ell1 is not None:
        ssf = np.maximum(ss, FD_FLOOR)
        snf = np.linalg.norm(ssf, axis=1)
        bound = hp.B * (snf + snf ** (hp.ell1 + 1.0))
        worst_abs = np.zeros(M)
        for j in range(ell):
            worst_abs = np.maximum(worst_abs, np.abs(_fd_partial_H(spec, xs, ssf.T, j)))

        def _wit_h2(k):
            return {"s": ssf[k].copy(), "dH": float(worst_abs[k]), "bound": float(bound[k])}

        entries["H2"] = _margin_entry(
            "H2", "derivative growth bound |dH/ds_j| <= B(|s| + |s|^(ell1+1))",
            bound, worst_abs, _wit_h2, M * ell)
    else:
        entries["H2"] = _na("H2", "derivative growth bound (needs B, ell1)")

    # --- H3: far-field lower bound (confirmed for the given constants) ------
    h3_needed = (hp.Delta, hp.R, hp.S, hp.alphas, hp.t_exp)
    if all(v is not None for v in h3_needed):
        if len(hp.alphas) != ell:
            raise ValueError(f"(H3) needs {ell} product exponents, got {len(hp.alphas)}")
        far_x = sampler.draw_points(count=M, min_radius=hp.R)
        radii = np.linalg.norm(far_x, axis=1)
        rng = np.random.default_rng(sampler.seed + 11)
        small = sampler._directions(rng, M, ell) * (
            hp.S * rng.uniform(0.0, 1.0, size=M)[:, None])
        lhs = eval_H(spec, _points_tuple(far_x) if spec.x_dependent else None, small.T)
        prod = np.ones(M)
        for j, a in enumerate(hp.alphas):
            prod *= small[:, j] ** a
        rhs = hp.Delta * radii ** (-hp.t_exp) * prod

        def _wit_h3(k):
            return {"x": far_x[k].copy(), "s": small[k].copy(),
                    "H": float(lhs[k]), "bound": float(rhs[k])}

        e = _margin_entry(
            "H3", "far-field lower bound, confirmed for the given constants",
            lhs, rhs, _wit_h3, M)
        entries["H3"] = e
    else:
        entries["H3"] = _na("H3", "far-field lower bound (needs Delta, R, S, alphas, t_exp)")

    # --- H4: H(theta s) >= theta_scale^2 H(s) -------------------------------
    # The scaling comparison uses the smallest per-component factor; a factor
    # of 1 in any component therefore reduces the bound to monotonicity, and
    # uniform scalings recover the full power law.
    thetas = sampler.draw_thetas(ell)
    n_th = min(len(thetas), M)
    th, sb = thetas[:n_th], ss[:n_th]
    xb = _points_tuple(xs_block[:n_th]) if spec.x_dependent else None
    H_base = H_vals[:n_th]
    H_scaled = eval_H(spec, xb, (th * sb).T)
    th_scale = np.min(th, axis=1)

    def _wit_scaling(k):
        return {"s": sb[k].copy(), "theta": th[k].copy(),
                "H_scaled": float(H_scaled[k]), "H": float(H_base[k])}

    entries["H4"] = _margin_entry(
        "H4", "scaling lower bound H(theta s) >= theta_scale^2 H(s)",
        H_scaled, th_scale**2 * H_base, _wit_scaling, n_th)

    # --- H5-H7: behavior of the asymptotic coupling -------------------------
    if infty is None:
        entries["H5"] = _na("H5", "convergence to a limit coupling (needs one)")
        entries["H6"] = _na("H6", "limit growth bounds (needs a limit coupling)")
        entries["H7"] = _na("H7", "limit scaling bound (needs a limit coupling)")
        return HypothesisReport(family=spec.name, entries=entries)

    if hp.Gamma is not None:
        # Quotient (H - H_limit) / (|s|^2 + |s|^(Gamma+2)) on an expanding
        # radius schedule; pass needs the largest-radius quotient at zero.
        base_r = max(1.0, hp.R if hp.R is not None else 1.0)
        schedule = [base_r * 2.0**k for k in range(7)]
        rng = np.random.default_rng(sampler.seed + 13)
        quotients = []
        env = _growth_envelope(np.maximum(s_norm, 1e-12), hp.Gamma)
        period = hp.period if hp.period is not None else (1,) * hp.n_dims
        per_margin = 0.0
        for r in schedule:
            dirs = rng.standard_normal((8, hp.n_dims))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            worst_q = 0.0
            for d in dirs:
                pts = np.repeat((r * d)[None, :], M, axis=0)
                xt = _points_tuple(pts)
                Hx = eval_H(spec, xt, ss.T)
                Hinf = eval_H(infty, xt if infty.x_dependent else None, ss.T)
                worst_q = max(worst_q, float(np.max(np.abs(Hx - Hinf) / env)))
                if infty.x_dependent:
                    shifted = _points_tuple(pts + np.asarray(period, dtype=np.float64))
                    Hper = eval_H(infty, shifted, ss.T)
                    scale = np.maximum(1.0, np.abs(Hinf))
                    per_margin = max(per_margin, float(np.max(np.abs(Hper - Hinf) / scale)))
            quotients.append(worst_q)
        tail = quotients[-1]
        converged = tail <= max(1e-8, 1e-6 * (quotients[0] + 1e-300))
        periodic_ok = per_margin <= CHECK_TOL
        desc = ("uniform convergence to the limit coupling; quotient schedule "
                + ", ".join(f"{q:.2e}" for q in quotients)
                + f"; limit periodicity deviation {per_margin:.2e}")
        if converged and periodic_ok:
            entries["H5"] = HypothesisEntry("H5", "pass", desc, margin=-tail,
                                            n_samples=len(schedule) * 8 * M)
        else:
            entries["H5"] = HypothesisEntry(
                "H5", "fail", desc, margin=-tail, n_samples=len(schedule) * 8 * M,
                witness={"quotients": quotients, "periodicity": per_margin})
    else:
        entries["H5"] = _na("H5", "convergence to the limit coupling (needs Gamma)")

    Hinf_vals = eval_H(infty, xs_block.T if infty.x_dependent else None, ss.T)
    if hp.A_prime is not None and hp.beta is not None and hp.ell1 is not None:
        env6 = hp.A_prime * (s_norm ** (hp.beta + 2.0) + s_norm ** (hp.ell1 + 2.0))
        lhs = np.concatenate([Hinf_vals, env6])
        rhs = np.concatenate([np.zeros(M), Hinf_vals])

        def _wit_h6(k):
            i = k % M
            return {"s": ss[i].copy(), "H_limit": float(Hinf_vals[i])}

        e6 = _margin_entry(
            "H6", "limit growth 0 <= H_limit <= A'(|s|^(beta+2) + |s|^(ell1+2))",
            lhs, rhs, _wit_h6, 2 * M)
        if e6.status == "pass" and hp.B_prime is not None:
            ssf = np.maximum(ss, FD_FLOOR)
            snf = np.linalg.norm(ssf, axis=1)
            bound = hp.B_prime * (snf ** (hp.beta + 1.0) + snf ** (hp.ell1 + 1.0))
            worst_d = np.zeros(M)
            xif = xs_block.T if infty.x_dependent else None
            for j in range(ell):
                worst_d = np.maximum(worst_d, _fd_partial_H(infty, xif, ssf.T, j))

            def _wit_h6d(k):
                return {"s": ssf[k].copy(), "dH_limit": float(worst_d[k])}

            e6d = _margin_entry("H6", e6.description + " and derivative bound",
                                bound, worst_d, _wit_h6d, M * ell)
            e6d.margin = min(e6.margin, e6d.margin)
            e6d.n_samples += e6.n_samples
            e6 = e6d
        entries["H6"] = e6
    else:
        entries["H6"] = _na("H6", "limit growth bounds (needs A_prime, beta, ell1)")

    if hp.sigma is not None:
        Hinf_base = Hinf_vals[:n_th]
        xbi = xs_block[:n_th].T if infty.x_dependent else None
        Hinf_scaled = eval_H(infty, xbi, (th * sb).T)

        def _wit_h7(k):
            return {"s": sb[k].copy(), "theta": th[k].copy(),
                    "H_limit_scaled": float(Hinf_scaled[k])}

        entries["H7"] = _margin_entry(
            "H7", "limit scaling bound H_limit(theta s) >= theta_scale^(sigma+2) H_limit(s)",
            Hinf_scaled, th_scale ** (hp.sigma + 2.0) * Hinf_base, _wit_h7, n_th)
    else:
        entries["H7"] = _na("H7", "limit scaling bound (needs sigma)")

    return HypothesisReport(family=spec.name, entries=entries)
