"""Run configuration: one TOML file with named blocks, strictly validated.

Unknown keys anywhere are hard errors (a silently ignored typo in a tolerance
name would corrupt an acceptance run).  Block invariants are checked here, at
load time, before any computation starts.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import EvolveOptions
from .energy import ConstraintSet
from .grid import Grid
from .groundstate import MinimizeOptions
from .nonlinearity import HypothesisParams, NonlinearitySpec, build_family

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Configuration file is malformed or violates a block invariant."""


_TOP_KEYS = {"seed", "problem", "grid", "constraints", "solver", "dynamics",
             "stability", "output"}
_PROBLEM_KEYS = {"n_dims", "ell", "family", "params", "hypothesis"}
_GRID_KEYS = {"points", "lengths"}
_CONSTRAINT_KEYS = {"c"}
_SOLVER_KEYS = {"initial_guess", "step_size", "backtrack_factor", "max_iterations",
                "tol_grad", "stagnation_window", "precond_shift", "boundary_decay_tol"}
_DYNAMICS_KEYS = {"dt", "t_final", "sample_every", "snapshot_times"}
_STABILITY_KEYS = {"deltas", "seeds", "t_final", "dt", "sample_every"}
_OUTPUT_KEYS = {"directory", "formats", "plots"}
_HYPOTHESIS_KEYS = {"K", "ell1", "c_prime", "alpha", "B", "Delta", "R", "S",
                    "alphas", "t_exp", "Gamma", "A_prime", "B_prime", "beta",
                    "sigma", "period"}


def _require_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")


def _number(block: dict, key: str, where: str, default=None):
    if key not in block:
        if default is None:
            raise ConfigError(f"[{where}] is missing required key '{key}'")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"[{where}].{key} must be a number, got {v!r}")
    return v


@dataclass
class RunConfig:
    """Validated configuration; build_* methods construct the domain objects."""

    path: Path
    sha256: str
    seed: int
    problem: dict
    grid: Optional[dict]
    constraints: Optional[dict]
    solver: dict = field(default_factory=dict)
    dynamics: Optional[dict] = None
    stability: Optional[dict] = None
    output: dict = field(default_factory=dict)

    # -- builders ----------------------------------------------------------

    def build_spec(self) -> NonlinearitySpec:
        try:
            return build_family(self.problem["family"], ell=self.problem.get("ell"),
                                params=self.problem.get("params", {}))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_grid(self) -> Grid:
        if self.grid is None:
            raise ConfigError("this command needs a [grid] block")
        try:
            g = Grid(tuple(self.grid["points"]), tuple(self.grid["lengths"]))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid [grid]: {exc}") from exc
        if g.n_dims != self.problem["n_dims"]:
            raise ConfigError(
                f"[grid] is {g.n_dims}-dimensional but [problem].n_dims = "
                f"{self.problem['n_dims']}")
        return g

    def build_constraints(self) -> ConstraintSet:
        if self.constraints is None:
            raise ConfigError("this command needs a [constraints] block")
        try:
            cons = ConstraintSet(tuple(self.constraints["c"]))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid [constraints]: {exc}") from exc
        ell = self.problem.get("ell")
        if ell is not None and cons.ell != ell:
            raise ConfigError(
                f"[constraints] lists {cons.ell} masses but [problem].ell = {ell}")
        return cons

    def build_minimize_options(self, seed: Optional[int] = None) -> MinimizeOptions:
        kwargs = dict(self.solver)
        kwargs["seed"] = self.seed if seed is None else seed
        try:
            return MinimizeOptions(**kwargs)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid [solver]: {exc}") from exc

    def build_evolve_options(self) -> EvolveOptions:
        if self.dynamics is None:
            raise ConfigError("this command needs a [dynamics] block")
        try:
            return EvolveOptions(**self.dynamics)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid [dynamics]: {exc}") from exc

    def build_stability_evolve_options(self) -> EvolveOptions:
        if self.stability is None:
            raise ConfigError("this command needs a [stability] block")
        dyn = self.dynamics or {}
        dt = self.stability.get("dt", dyn.get("dt"))
        if dt is None:
            raise ConfigError("[stability] needs dt (or a [dynamics] block to inherit it)")
        try:
            return EvolveOptions(
                dt=dt,
                t_final=self.stability["t_final"],
                sample_every=self.stability.get(
                    "sample_every", dyn.get("sample_every", 100)),
            )
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"invalid [stability]: {exc}") from exc

    def stability_deltas(self) -> list[float]:
        if self.stability is None:
            raise ConfigError("this command needs a [stability] block")
        deltas = self.stability.get("deltas")
        if not isinstance(deltas, list) or not deltas:
            raise ConfigError("[stability].deltas must be a nonempty list")
        for d in deltas:
            if isinstance(d, bool) or not isinstance(d, (int, float)) or d < 0:
                raise ConfigError(f"[stability].deltas entries must be >= 0, got {d!r}")
        return [float(d) for d in deltas]

    def stability_seeds(self) -> list[int]:
        seeds = self.stability.get("seeds", [self.seed])
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("[stability].seeds must be a nonempty list")
        for s in seeds:
            if isinstance(s, bool) or not isinstance(s, int):
                raise ConfigError(f"[stability].seeds entries must be integers, got {s!r}")
        return list(seeds)

    def build_hypothesis_params(self) -> Optional[HypothesisParams]:
        hyp = self.problem.get("hypothesis")
        if hyp is None:
            return None
        kwargs: dict[str, Any] = {"n_dims": self.problem["n_dims"]}
        for key, value in hyp.items():
            if key in ("alphas", "period"):
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        try:
            return HypothesisParams(**kwargs)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid [problem.hypothesis]: {exc}") from exc

    @property
    def output_directory(self) -> str:
        return self.output.get("directory", "out")

    @property
    def output_formats(self) -> list[str]:
        return list(self.output.get("formats", ["csv"]))

    @property
    def plots_enabled(self) -> bool:
        return bool(self.output.get("plots", True))


def _validate_problem(block: Any) -> dict:
    if not isinstance(block, dict):
        raise ConfigError("[problem] must be a table")
    _require_keys(block, _PROBLEM_KEYS, "problem")
    n_dims = block.get("n_dims")
    if n_dims not in (1, 2, 3):
        raise ConfigError(f"[problem].n_dims must be 1, 2 or 3, got {n_dims!r}")
    family = block.get("family")
    if not isinstance(family, str):
        raise ConfigError("[problem].family must be a string")
    ell = block.get("ell")
    if ell is not None and (isinstance(ell, bool) or not isinstance(ell, int) or ell < 1):
        raise ConfigError(f"[problem].ell must be a positive integer, got {ell!r}")
    params = block.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("[problem].params must be a table")
    hyp = block.get("hypothesis")
    if hyp is not None:
        if not isinstance(hyp, dict):
            raise ConfigError("[problem.hypothesis] must be a table")
        _require_keys(hyp, _HYPOTHESIS_KEYS, "problem.hypothesis")
    return block


def _validate_list(block: dict, key: str, where: str, kind=(int, float)) -> None:
    v = block.get(key)
    if not isinstance(v, list) or not v:
        raise ConfigError(f"[{where}].{key} must be a nonempty list")
    for item in v:
        if isinstance(item, bool) or not isinstance(item, kind):
            raise ConfigError(f"[{where}].{key} entries must be numbers, got {item!r}")


def load_config(path) -> RunConfig:
    """Parse and validate a configuration file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    _require_keys(data, _TOP_KEYS, "top level")
    if "problem" not in data:
        raise ConfigError("config needs a [problem] block")
    problem = _validate_problem(data["problem"])

    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")

    grid = data.get("grid")
    if grid is not None:
        if not isinstance(grid, dict):
            raise ConfigError("[grid] must be a table")
        _require_keys(grid, _GRID_KEYS, "grid")
        _validate_list(grid, "points", "grid", kind=int)
        _validate_list(grid, "lengths", "grid")

    constraints = data.get("constraints")
    if constraints is not None:
        if not isinstance(constraints, dict):
            raise ConfigError("[constraints] must be a table")
        _require_keys(constraints, _CONSTRAINT_KEYS, "constraints")
        _validate_list(constraints, "c", "constraints")

    solver = data.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("[solver] must be a table")
    _require_keys(solver, _SOLVER_KEYS, "solver")

    dynamics = data.get("dynamics")
    if dynamics is not None:
        if not isinstance(dynamics, dict):
            raise ConfigError("[dynamics] must be a table")
        _require_keys(dynamics, _DYNAMICS_KEYS, "dynamics")
        _number(dynamics, "dt", "dynamics")
        _number(dynamics, "t_final", "dynamics")

    stability = data.get("stability")
    if stability is not None:
        if not isinstance(stability, dict):
            raise ConfigError("[stability] must be a table")
        _require_keys(stability, _STABILITY_KEYS, "stability")

    output = data.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("[output] must be a table")
    _require_keys(output, _OUTPUT_KEYS, "output")

    return RunConfig(
        path=path,
        sha256=hashlib.sha256(raw).hexdigest(),
        seed=seed,
        problem=problem,
        grid=grid,
        constraints=constraints,
        solver=solver,
        dynamics=dynamics,
        stability=stability,
        output=output,
    )
