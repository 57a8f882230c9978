"""Definition-level numerics used to check the closed forms.

Nothing here uses the analytic derivatives: the finite-difference Jacobian,
the coderivative quotient and the directional probes evaluate the maps
themselves, so they can act as independent oracles.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .mappings import MapId, as_point, evaluate, evaluate_batch, is_origin
from .sampling import child_rng, special_directions, sphere_directions

DEFAULT_RADII = tuple(10.0 ** -k for k in range(1, 7))

SQRT2 = float(np.sqrt(2.0))


class Parametrization(enum.Enum):
    RADIAL = "radial"
    CUSTOM_CURVE = "custom_curve"


@dataclass(frozen=True)
class DirectionSchedule:
    """Approach path ``u(t) = z + t * direction`` (or ``z + curve(t)``) for ``t`` in ``radii``."""

    direction: np.ndarray
    radii: tuple[float, ...] = DEFAULT_RADII
    parametrization: Parametrization = Parametrization.RADIAL
    curve: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("schedule direction must have unit norm")
        r = np.asarray(self.radii)
        if r.size < 2 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise ValueError("radii must be positive and strictly decreasing")
        if self.parametrization is Parametrization.CUSTOM_CURVE and self.curve is None:
            raise ValueError("custom curve schedule needs a curve")

    def offset(self, t: float) -> np.ndarray:
        if self.parametrization is Parametrization.CUSTOM_CURVE:
            return np.asarray(self.curve(t), dtype=float)
        return t * self.direction


@dataclass
class ProbeReport:
    values: list[float]
    extrapolated_limit: float
    converged: bool
    limit_vector: np.ndarray | None = None


def _converged(values: Sequence[float]) -> bool:
    a, b = values[-2], values[-1]
    return abs(a - b) < 1e-8 or abs(a - b) < 1e-4 * max(abs(a), abs(b))


def _richardson(radii: Sequence[float], values):
    """Linear-in-t extrapolation to t = 0 from the two finest samples."""
    t0, t1 = radii[-2], radii[-1]
    v0, v1 = np.asarray(values[-2]), np.asarray(values[-1])
    return (t0 * v1 - t1 * v0) / (t0 - t1)


# -- finite differences --------------------------------------------------------


def fd_jacobian(map_id, z, step: float = 1e-5) -> np.ndarray:
    """Central differences, laid out like the analytic Jacobians (row = input)."""
    map_id = MapId.parse(map_id)
    z = as_point(z, map_id.dim)
    if np.linalg.norm(z) <= 10 * step:
        raise DomainError("point too close to the origin for this step")
    out = np.empty((map_id.dim, map_id.dim))
    for j in range(map_id.dim):
        e = np.zeros(map_id.dim)
        e[j] = step
        out[j] = (evaluate(map_id, z + e) - evaluate(map_id, z - e)) / (2 * step)
    return out


def fd_jacobian_batch(map_id, pts: np.ndarray, step: float = 1e-5) -> np.ndarray:
    map_id = MapId.parse(map_id)
    pts = np.asarray(pts, dtype=float)
    n, dim = pts.shape
    out = np.empty((n, dim, dim))
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = step
        out[:, j, :] = (evaluate_batch(map_id, pts + e) - evaluate_batch(map_id, pts - e)) / (2 * step)
    return out


# -- coderivative quotient -------------------------------------------------------


def coderiv_quotient(map_id, z, x, y, u) -> float:
    """The quotient whose limsup as ``u -> z`` decides ``x in D*map(z)(y)``."""
    map_id = MapId.parse(map_id)
    dim = map_id.dim
    z, x, y, u = (as_point(v, dim) for v in (z, x, y, u))
    du = u - z
    if not np.any(du):
        raise DomainError("quotient undefined at u = z")
    dm = evaluate(map_id, u) - evaluate(map_id, z)
    return float((x @ du - y @ dm) / (np.linalg.norm(du) + np.linalg.norm(dm)))


def _quotients_batch(map_id, z, x, y, us):
    du = us - z
    dm = evaluate_batch(map_id, us) - evaluate(map_id, z)
    return (du @ x - dm @ y) / (np.linalg.norm(du, axis=1) + np.linalg.norm(dm, axis=1))


@dataclass
class LimsupEstimate:
    radii: tuple[float, ...]
    per_radius: list[float]
    estimate: float

    def member(self, tol: float = 1e-3) -> bool:
        """Membership verdict read off the two finest spheres."""
        return max(self.per_radius[-2:]) <= tol

    @property
    def finest(self) -> float:
        return max(self.per_radius[-2:])


def limsup_estimate(
    map_id,
    z,
    x,
    y,
    radii: Sequence[float] = DEFAULT_RADII,
    dirs_per_radius: int = 256,
    seed: int = 0,
) -> LimsupEstimate:
    """Max of the quotient over sampled spheres around ``z``.

    Sampling can only under-estimate the supremum on each sphere, so a large
    value is a certificate of non-membership while a small one is evidence.
    The signed axis and block diagonals are always included.
    """
    map_id = MapId.parse(map_id)
    dim = map_id.dim
    z, x, y = (as_point(v, dim) for v in (z, x, y))
    radii = tuple(float(r) for r in radii)
    if any(b >= a for a, b in zip(radii, radii[1:])) or min(radii) <= 0:
        raise ValueError("radii must be positive and strictly decreasing")
    if dirs_per_radius < 8:
        raise ValueError("need at least 8 directions per radius")
    fixed = special_directions(dim)
    per_radius = []
    for i, r in enumerate(radii):
        dirs = np.vstack([fixed, sphere_directions(dim, dirs_per_radius, child_rng(seed, i))])
        per_radius.append(float(np.max(_quotients_batch(map_id, z, x, y, z + r * dirs))))
    return LimsupEstimate(radii, per_radius, float(max(per_radius)))


# -- Frechet residual probes -----------------------------------------------------


def frechet_residual_probe(map_id, z, candidate, schedule: DirectionSchedule) -> ProbeReport:
    """Residual ``|map(u) - map(z) - (u - z) @ candidate| / |u - z|`` along a path.

    A limit bounded away from zero certifies that ``candidate`` is not the
    Frechet derivative at ``z``.
    """
    map_id = MapId.parse(map_id)
    z = as_point(z, map_id.dim)
    a = np.asarray(candidate, dtype=float)
    base = evaluate(map_id, z)
    vecs = []
    for t in schedule.radii:
        du = schedule.offset(t)
        vecs.append((evaluate(map_id, z + du) - base - du @ a) / np.linalg.norm(du))
    values = [float(np.linalg.norm(v)) for v in vecs]
    limit_vec = _richardson(schedule.radii, vecs)
    return ProbeReport(values, float(np.linalg.norm(limit_vec)), _converged(values), limit_vec)


def origin_candidate_schedule(map_id, z, candidate, radii: Sequence[float] = DEFAULT_RADII):
    """Path through a zero block of ``z`` that defeats a candidate derivative.

    Along ``u = z - sign(a) t e_k`` (or ``z + t e_k`` when the diagonal entry
    ``a`` vanishes) the residual limit is ``e_k - sigma * candidate[k]``, i.e.
    ``1 + |a|`` in slot ``k`` and ``sign(a)`` times the rest of row ``k``.
    Returns ``(schedule, expected_limit_vector)``.
    """
    map_id = MapId.parse(map_id)
    z = as_point(z, map_id.dim)
    a = np.asarray(candidate, dtype=float)
    k = None
    if map_id is MapId.F2:
        if not is_origin(z):
            raise DomainError("f is differentiable away from the origin")
        k = 0
    elif map_id is MapId.G4:
        for kk in (0, 2):
            if z[kk] == 0 and z[kk + 1] == 0:
                k = kk
                break
        if k is None:
            raise DomainError("g is differentiable when both blocks are nonzero")
    else:
        raise DomainError("origin schedules are defined for f and g only")
    akk = a[k, k]
    sigma = -np.sign(akk) if akk != 0 else 1.0
    direction = np.zeros(map_id.dim)
    direction[k] = sigma
    expected = -sigma * a[k]
    expected[k] += 1.0
    return DirectionSchedule(direction, tuple(radii)), expected


# -- slopes along the vertical direction -----------------------------------------


def directional_slopes_AB(z, s: float) -> tuple[float, float]:
    """Slopes ``(f_i(z1, z2 + s) - f_i(z)) / s`` in cancellation-free form."""
    z = as_point(z, 2)
    z1, z2 = z
    if is_origin(z) or s == 0 or (z1 == 0 and z2 + s == 0):
        raise DomainError("slopes need z != 0, s != 0 and (z1, z2 + s) != 0")
    rr = z1 * z1 + z2 * z2
    r = np.sqrt(rr)
    rs = np.sqrt(rr + 2 * s * z2 + s * s)
    common = rs * r * (r + rs)
    a = -(z1 * z1 - z2 * z2) * (2 * z2 + s) / common + (-2 * z2 - s) / rs
    b = -2 * z1 * z2 * (2 * z2 + s) / common + 2 * z1 / rs
    return float(a), float(b)


def slope_limit_estimate(z, s: float = 1e-6) -> tuple[float, float]:
    """Average of the upward and downward slopes; the O(s) terms cancel."""
    up = directional_slopes_AB(z, s)
    down = directional_slopes_AB(z, -s)
    return (up[0] + down[0]) / 2, (up[1] + down[1]) / 2


def slope_limits_AB(z) -> tuple[float, float]:
    """Closed-form limits of the two slopes as ``s -> 0``."""
    z = as_point(z, 2)
    z1, z2 = z
    rr = z1 * z1 + z2 * z2
    r = np.sqrt(rr)
    lim_a = -(z1 * z1 - z2 * z2) * z2 / (rr * r) - 2 * z2 / r
    lim_b = -2 * z1 * z2 * z2 / (rr * r) + 2 * z1 / r
    return float(lim_a), float(lim_b)


# -- origin analysis for f ---------------------------------------------------------


@dataclass
class OriginCase:
    """One directional test at the origin.

    ``closed_form(x, y)`` is the exact limit of the quotient along
    ``direction``; the case excludes ``x`` whenever it is positive.
    """

    name: str
    hypothesis: str
    schedule: str
    direction: np.ndarray
    closed_form: Callable[[np.ndarray, np.ndarray], float]
    alternate_schedule: str | None = None
    alternate_direction: np.ndarray | None = None


def _unit(*v):
    v = np.array(v, dtype=float)
    return v / np.linalg.norm(v)


ORIGIN_CASES: tuple[OriginCase, ...] = (
    OriginCase("case1", "x1 > y1", "u2 = 0, u1 -> 0+", _unit(1, 0),
               lambda x, y: (x[0] - y[0]) / 2),
    OriginCase("case2", "-x1 > y1", "u2 = 0, u1 -> 0-", _unit(-1, 0),
               lambda x, y: (-x[0] - y[0]) / 2),
    OriginCase("case3", "x1 + x2 > sqrt2 y2", "u1 = u2, u1 -> 0+", _unit(1, 1),
               lambda x, y: (x[0] + x[1] - SQRT2 * y[1]) / (2 * SQRT2)),
    # The limit value belongs to u1 = u2 -> 0-; the u1 = -u2 path is kept
    # alongside so both readings are reported.
    OriginCase("case4", "-x1 - x2 > sqrt2 y2", "u1 = u2, u1 -> 0-", _unit(-1, -1),
               lambda x, y: (-x[0] - x[1] - SQRT2 * y[1]) / (2 * SQRT2),
               "u1 = -u2, u1 -> 0-", _unit(-1, 1)),
    OriginCase("case5", "-x1 + x2 > -sqrt2 y2", "u1 = -u2, u2 -> 0+", _unit(-1, 1),
               lambda x, y: (-x[0] + x[1] + SQRT2 * y[1]) / (2 * SQRT2),
               "u1 = u2, u2 -> 0+", _unit(1, 1)),
    OriginCase("case6", "x1 - x2 > -sqrt2 y2", "u1 = -u2, u2 -> 0-", _unit(1, -1),
               lambda x, y: (x[0] - x[1] + SQRT2 * y[1]) / (2 * SQRT2)),
    OriginCase("vertical", "y1 > x2", "u1 = 0, u2 -> 0-", _unit(0, -1),
               lambda x, y: (y[0] - x[1]) / 2),
)


@dataclass
class OriginProbe:
    case: str
    hypothesis_holds: bool
    closed_form: float
    probe: ProbeReport
    alternate: ProbeReport | None = None
    extra: dict = field(default_factory=dict)


def _origin_quotient_probe(x, y, direction, radii) -> ProbeReport:
    theta = np.zeros(2)
    vals = [coderiv_quotient(MapId.F2, theta, x, y, t * direction) for t in radii]
    lim = float(_richardson(radii, vals))
    return ProbeReport(vals, lim, _converged(vals))


def probe_origin_f(x, y, radii: Sequence[float] = DEFAULT_RADII) -> list[OriginProbe]:
    """Evaluate every origin case for the pair ``(x, y)``."""
    x = as_point(x, 2)
    y = as_point(y, 2)
    radii = tuple(radii)
    out = []
    for case in ORIGIN_CASES:
        cf = float(case.closed_form(x, y))
        probe = _origin_quotient_probe(x, y, case.direction, radii)
        alt = None
        if case.alternate_direction is not None:
            alt = _origin_quotient_probe(x, y, case.alternate_direction, radii)
        out.append(OriginProbe(case.name, cf > 0, cf, probe, alt))
    return out


def origin_certificate_f(x, y, radii: Sequence[float] = DEFAULT_RADII) -> OriginProbe | None:
    """A case whose probe limit is positive, i.e. a proof that ``x`` is excluded.

    Returns ``None`` only if every probe is non-positive, which forces
    ``x = y = 0``.
    """
    best = None
    for p in probe_origin_f(x, y, radii):
        if p.probe.extrapolated_limit > 0 and (best is None or p.closed_form > best.closed_form):
            best = p
    return best


def origin_chain_f(y) -> str | None:
    """Run the chain of necessary conditions at the origin for dual vector ``y``.

    Returns the label of the first link that fails (so the coderivative is
    empty), or ``None`` when every link holds, which happens only for
    ``y = 0``.
    """
    y = as_point(y, 2)
    # (iii)-(vi) are only jointly satisfiable when y2 = 0
    if y[1] != 0:
        return "I: y2 must vanish"
    # with y2 = 0, (iii)-(vi) force x = 0; (i)/(ii) then need y1 >= 0
    if y[0] < 0:
        return "IV: y1 must be nonnegative"
    # the vertical probe excludes y1 > 0
    if y[0] > 0:
        return "V: y1 must vanish"
    return None


def origin_certificate_g(x, y, radii: Sequence[float] = DEFAULT_RADII):
    """Block reduction at the origin of R^4: test the block where ``y`` is nonzero.

    Restricting ``u`` to one block turns the g-quotient into the f-quotient of
    that block, with the other block contributing nothing.
    """
    x = as_point(x, 4)
    y = as_point(y, 4)
    for k in (0, 2):
        cert = origin_certificate_f(x[k : k + 2], y[k : k + 2], radii)
        if cert is not None:
            return k, cert
    return None


def numeric_quotient_limit(map_id, z, x, y, direction, radii: Sequence[float] = DEFAULT_RADII) -> ProbeReport:
    """Quotient values along ``u = z + t * direction``."""
    map_id = MapId.parse(map_id)
    z = as_point(z, map_id.dim)
    d = as_point(direction, map_id.dim)
    vals = [coderiv_quotient(map_id, z, x, y, z + t * d) for t in radii]
    return ProbeReport(vals, float(_richardson(radii, vals)), _converged(vals))


__all__ = [
    "DEFAULT_RADII",
    "DirectionSchedule",
    "LimsupEstimate",
    "ORIGIN_CASES",
    "OriginCase",
    "OriginProbe",
    "Parametrization",
    "ProbeReport",
    "coderiv_quotient",
    "directional_slopes_AB",
    "fd_jacobian",
    "fd_jacobian_batch",
    "frechet_residual_probe",
    "limsup_estimate",
    "numeric_quotient_limit",
    "origin_candidate_schedule",
    "origin_certificate_f",
    "origin_certificate_g",
    "origin_chain_f",
    "probe_origin_f",
    "slope_limit_estimate",
    "slope_limits_AB",
]
