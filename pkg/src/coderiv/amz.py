"""Parametric coincidence solver for ``f(x) = h(x, s) + omega(s)``.

For each parameter ``s`` the equation is solved near the anchor ``xbar`` by
damped Newton iteration, and the distance to the anchor is compared with

    |sigma(s) - xbar| <= |ybar - h(xbar, s) - omega(s)| / (alpha - beta)

where ``beta`` is the Lipschitz modulus of ``h(., s)`` and ``alpha`` is below
the covering constant of ``f`` (which is 1 everywhere).

Scenario files are flat ``key = value`` text; ``#`` starts a comment::

    xbar = 1, 0
    perturbation = zero          # zero | linear | param_linear | sincos | affine
    perturbation_coeffs =
    omega = circle               # circle | constant | anchor | affine
    omega_coeffs = 1
    beta = 0
    alpha = 0.9
    s_min = 0
    s_max = 0.5

``ybar`` may be given explicitly; it defaults to ``f(xbar)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .covering import covering_estimate
from .derivatives import jacobian_f
from .errors import ConfigError, NoConvergence
from .mappings import MapId, as_point, eval_f
from .sampling import ball_points, child_rng

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
MAX_ITER = 200
THETA_GUARD = 1e-8
BOUND_SLACK = 1e-12

PERTURBATIONS = ("zero", "linear", "param_linear", "sincos", "affine")
OMEGAS = ("circle", "constant", "anchor", "affine")

__all__ = [
    "Scenario",
    "SolveReport",
    "builtin_scenario",
    "dist_to_G",
    "lipschitz_estimate",
    "load_scenario",
    "parse_s_grid",
    "parse_scenario",
    "solve_parametric",
    "sweep",
    "validate_scenario",
    "verify_bound",
]


# -- scenario ---------------------------------------------------------------------


def _perturbation(kind: str, c: Sequence[float]) -> Callable[[np.ndarray, float], np.ndarray]:
    c = [float(v) for v in c]
    if kind == "zero":
        return lambda x, s: np.zeros(2)
    if kind == "linear":
        (k,) = c or [0.0]
        return lambda x, s: k * x
    if kind == "param_linear":
        (k,) = c or [0.0]
        return lambda x, s: k * s * x
    if kind == "sincos":
        (k,) = c or [0.0]
        return lambda x, s: k * np.array([math.sin(x[0]), math.cos(x[1])])
    if kind == "affine":
        # h(x, s) = A x + s b, coefficients a11 a12 a21 a22 b1 b2
        if len(c) != 6:
            raise ConfigError("affine perturbation needs 6 coefficients")
        a = np.array(c[:4]).reshape(2, 2)
        b = np.array(c[4:])
        return lambda x, s: a @ x + s * b
    raise ConfigError(f"unknown perturbation {kind!r}; expected one of {PERTURBATIONS}")


def _omega(kind: str, c: Sequence[float], xbar, h) -> Callable[[float], np.ndarray]:
    c = [float(v) for v in c]
    if kind == "circle":
        r = c[0] if c else 1.0
        return lambda s: r * np.array([math.cos(s), math.sin(s)])
    if kind == "constant":
        if len(c) != 2:
            raise ConfigError("constant omega needs 2 coefficients")
        w = np.array(c)
        return lambda s: w.copy()
    if kind == "anchor":
        ybar = eval_f(xbar)
        return lambda s: ybar - h(xbar, s)
    if kind == "affine":
        # omega(s) = a + s b
        if len(c) != 4:
            raise ConfigError("affine omega needs 4 coefficients")
        a, b = np.array(c[:2]), np.array(c[2:])
        return lambda s: a + s * b
    raise ConfigError(f"unknown omega {kind!r}; expected one of {OMEGAS}")


@dataclass(frozen=True)
class Scenario:
    xbar: np.ndarray
    ybar: np.ndarray
    perturbation: str
    omega: str
    beta: float
    alpha: float
    perturbation_coeffs: tuple[float, ...] = ()
    omega_coeffs: tuple[float, ...] = ()
    s_min: float = 0.0
    s_max: float = 1.0
    name: str = "scenario"
    h: Callable = field(init=False, repr=False, compare=False)
    w: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xbar = as_point(self.xbar, 2)
        object.__setattr__(self, "xbar", xbar)
        object.__setattr__(self, "ybar", as_point(self.ybar, 2))
        h = _perturbation(self.perturbation, self.perturbation_coeffs)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "w", _omega(self.omega, self.omega_coeffs, xbar, h))

    def with_alpha(self, alpha: float) -> "Scenario":
        return replace(self, alpha=float(alpha))

    def residual(self, x, s: float) -> np.ndarray:
        return eval_f(x) - self.h(x, s) - self.w(s)


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(t) for t in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        raw[key] = value
    known = {"xbar", "ybar", "perturbation", "perturbation_coeffs", "omega", "omega_coeffs",
             "beta", "alpha", "s_min", "s_max", "name"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("xbar", "perturbation", "omega", "beta", "alpha"):
        if key not in raw:
            raise ConfigError(f"scenario is missing {key!r}")
    try:
        xbar = np.array(_floats(raw["xbar"]))
        ybar = np.array(_floats(raw["ybar"])) if "ybar" in raw else eval_f(xbar)
        return Scenario(
            xbar=xbar,
            ybar=ybar,
            perturbation=raw["perturbation"],
            omega=raw["omega"],
            beta=float(raw["beta"]),
            alpha=float(raw["alpha"]),
            perturbation_coeffs=_floats(raw.get("perturbation_coeffs", "")),
            omega_coeffs=_floats(raw.get("omega_coeffs", "")),
            s_min=float(raw.get("s_min", 0.0)),
            s_max=float(raw.get("s_max", 1.0)),
            name=raw.get("name", name),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def builtin_scenario(name: str, alpha: float = 0.9) -> Scenario:
    """``rotation``: h = 0, omega(s) = (cos s, sin s).
    ``scaled``: h(x, s) = 0.2 s x, omega keeps xbar a solution."""
    if name == "rotation":
        return Scenario(np.array([1.0, 0.0]), np.array([1.0, 0.0]), "zero", "circle", 0.0, alpha,
                        omega_coeffs=(1.0,), s_min=0.0, s_max=0.5, name=name)
    if name == "scaled":
        return Scenario(np.array([1.0, 0.0]), np.array([1.0, 0.0]), "param_linear", "anchor", 0.2, alpha,
                        perturbation_coeffs=(0.2,), s_min=0.0, s_max=1.0, name=name)
    raise ConfigError(f"no built-in scenario {name!r}")


BUILTINS = ("rotation", "scaled")


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Read a scenario file, or return a built-in by name."""
    p = Path(path_or_name)
    if not p.exists() and str(path_or_name) in BUILTINS:
        return builtin_scenario(str(path_or_name))
    return parse_scenario(p.read_text(), name=p.stem)


# -- checks -------------------------------------------------------------------------


def lipschitz_estimate(scenario: Scenario, neighborhood_radius: float = 0.5, samples: int = 200,
                       seed: int = 0, check: bool = True) -> float:
    """Largest difference quotient of ``h(., s)`` over sampled pairs and parameters."""
    if samples < 100:
        raise ConfigError("lipschitz_estimate needs at least 100 samples")
    rng = child_rng(seed, 11)
    s_vals = np.concatenate([[scenario.s_min, scenario.s_max],
                             rng.uniform(scenario.s_min, scenario.s_max, 8)])
    best = 0.0
    for s in s_vals:
        a = ball_points(scenario.xbar, neighborhood_radius, samples, rng)
        b = ball_points(scenario.xbar, neighborhood_radius, samples, rng)
        for p, q in zip(a, b):
            d = np.linalg.norm(p - q)
            if d < 1e-9:
                continue
            best = max(best, float(np.linalg.norm(scenario.h(p, s) - scenario.h(q, s)) / d))
    if check and best > 1.05 * scenario.beta + 1e-12:
        raise ConfigError(f"estimated Lipschitz modulus {best:.6g} exceeds declared beta {scenario.beta}")
    return best


def validate_scenario(scenario: Scenario, check_covering: bool = True, seed: int = 0) -> None:
    if np.all(scenario.xbar == 0):
        raise ConfigError("xbar must not be the origin")
    if np.max(np.abs(scenario.ybar - eval_f(scenario.xbar))) > 1e-12:
        raise ConfigError("ybar must equal f(xbar)")
    if not 0 <= scenario.beta < scenario.alpha < 1:
        raise ConfigError(f"need 0 <= beta < alpha < 1, got beta={scenario.beta}, alpha={scenario.alpha}")
    if check_covering:
        est = covering_estimate(MapId.F2, scenario.xbar, z_samples=64, seed=seed).estimate
        if abs(est - 1.0) > 1e-6:
            raise ConfigError(f"covering constant of f at xbar estimated as {est}, expected 1")


def dist_to_G(scenario: Scenario, s: float) -> float:
    return float(np.linalg.norm(scenario.ybar - scenario.h(scenario.xbar, s) - scenario.w(s)))


# -- solver -----------------------------------------------------------------------------


@dataclass
class SolveReport:
    s: float
    sigma: np.ndarray | None
    residual: float
    distance: float
    bound: float
    bound_satisfied: bool
    iterations: int
    converged: bool = True
    error: str | None = None
    trace: list[float] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "sigma": None if self.sigma is None else [float(v) for v in self.sigma],
            "residual": self.residual,
            "distance": self.distance,
            "bound": self.bound,
            "bound_satisfied": self.bound_satisfied,
            "iterations": self.iterations,
            "converged": self.converged,
            "error": self.error,
        }


def _fd_jacobian_h(h, x: np.ndarray, s: float, step: float = 1e-6) -> np.ndarray:
    """Standard-layout Jacobian ``[i, j] = dh_i / dx_j`` by central differences."""
    out = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        out[:, j] = (h(x + e, s) - h(x - e, s)) / (2 * step)
    return out


def _newton(scenario: Scenario, s: float, x0: np.ndarray) -> tuple[np.ndarray, int, list[float]]:
    x = np.array(x0, dtype=float)
    r = scenario.residual(x, s)
    rn = float(np.linalg.norm(r))
    trace = [rn]
    for it in range(1, MAX_ITER + 1):
        if rn <= RESIDUAL_TOL:
            return x, it - 1, trace
        jac = jacobian_f(x).T - _fd_jacobian_h(scenario.h, x, s)
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        accepted = False
        for _ in range(40):
            cand = x + t * dx
            if np.linalg.norm(cand) > THETA_GUARD:
                rc = scenario.residual(cand, s)
                rcn = float(np.linalg.norm(rc))
                if np.isfinite(rcn) and rcn < rn:
                    accepted = True
                    break
            t /= 2
        if not accepted:
            break
        x, r, rn = cand, rc, rcn
        trace.append(rn)
    if rn <= RESIDUAL_TOL:
        return x, len(trace) - 1, trace
    raise NoConvergence(f"residual {rn:.3e} after {len(trace) - 1} iterations at s={s}", trace=trace)


def solve_parametric(scenario: Scenario, s: float, x0=None) -> SolveReport:
    """Solve at one parameter value, starting from ``x0`` (default ``xbar``)."""
    s = float(s)
    start = scenario.xbar if x0 is None else as_point(x0, 2)
    sigma, iters, trace = _newton(scenario, s, start)
    residual = float(np.linalg.norm(scenario.residual(sigma, s)))
    distance = float(np.linalg.norm(sigma - scenario.xbar))
    bound = dist_to_G(scenario, s) / (scenario.alpha - scenario.beta)
    return SolveReport(s, sigma, residual, distance, bound, distance <= bound + BOUND_SLACK, iters, trace=trace)


def verify_bound(report: SolveReport, scenario: Scenario, alpha: float | None = None) -> bool:
    """Check the distance bound; with the scenario's own alpha, also cross-check ``report.bound``."""
    if not report.converged:
        return False
    a = scenario.alpha if alpha is None else float(alpha)
    if not scenario.beta < a:
        raise ConfigError("alpha must exceed beta")
    bound = dist_to_G(scenario, report.s) / (a - scenario.beta)
    if alpha is None and abs(bound - report.bound) > 1e-12 * max(1.0, abs(bound)):
        return False
    return report.distance <= bound + BOUND_SLACK


def sweep(scenario: Scenario, s_grid: Sequence[float], warm_start: bool = True) -> list[SolveReport]:
    reports = []
    prev = None
    for s in s_grid:
        try:
            rep = solve_parametric(scenario, s, x0=prev if warm_start else None)
        except NoConvergence as exc:
            log.info("no convergence at s=%g: %s", s, exc)
            nan = float("nan")
            rep = SolveReport(float(s), None, exc.trace[-1] if exc.trace else nan, nan,
                              dist_to_G(scenario, s) / (scenario.alpha - scenario.beta), False,
                              len(exc.trace) - 1, converged=False, error=f"NoConvergence: {exc}",
                              trace=list(exc.trace))
            prev = None
        else:
            prev = rep.sigma
        reports.append(rep)
    return reports


def parse_s_grid(text: str) -> np.ndarray:
    """``a:b:step`` inclusive of both ends (up to rounding of the step count)."""
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"s-grid must be a:b:step, got {text!r}") from exc
    if step <= 0 or b < a or not all(map(math.isfinite, (a, b, step))):
        raise ConfigError("s-grid needs a <= b and step > 0")
    n = int(math.floor((b - a) / step + 1e-9))
    return a + step * np.arange(n + 1)
