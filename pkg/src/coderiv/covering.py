"""Covering-constant estimates for f, g and h.

The covering constant at ``zbar`` is

    sup over eta > 0 of inf { |x| : x in D*map(z)(y), z in B(zbar, eta),
                              map(z) in B(map(zbar), eta), |y| = 1 }

Each eta on a finite ladder gets a sample of points ``z`` from the ball (plus
the centre and the axis-aligned boundary points). Points whose coderivative is
empty for every unit ``y`` are skipped. For the rest, the inner infimum over
``y`` is either the smallest singular value of the Jacobian restricted to the
admissible dual subspace (SPECTRAL) or a minimum over sampled unit vectors
(DEFINITIONAL).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .derivatives import jacobian_batch
from .errors import ConfigError, DomainError
from .mappings import MapId, as_point, evaluate, evaluate_batch, is_origin
from .sampling import ball_points, child_rng, sphere_directions

log = logging.getLogger(__name__)

DEFAULT_ETAS = tuple(10.0 ** -k for k in range(1, 7))

__all__ = [
    "DEFAULT_ETAS",
    "CoveringEstimate",
    "Method",
    "YConstraint",
    "covering_estimate",
    "equality_locus_y",
    "h_covering_bound",
    "sigma_min",
    "sigma_min_batch",
    "singular_values_batch",
]


class Method(enum.Enum):
    SPECTRAL = "spectral"
    DEFINITIONAL = "definitional"


class YConstraint(enum.Enum):
    FULL_SPHERE = "full_sphere"
    ADMISSIBLE_SUBSPACE = "admissible_subspace"
    EQUALITY_LOCUS = "equality_locus"


@dataclass
class CoveringEstimate:
    center: np.ndarray
    image: np.ndarray
    etas: tuple[float, ...]
    inf_per_eta: list[float]
    estimate: float
    method: Method
    samples_used: dict = field(default_factory=dict)


# -- singular values -----------------------------------------------------------


def _sv2(m: np.ndarray) -> np.ndarray:
    """Closed-form singular values of a stack of 2x2 matrices, descending."""
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    fro = a * a + b * b + c * c + d * d
    det = np.abs(a * d - b * c)
    disc = np.sqrt(np.maximum(fro * fro - 4 * det * det, 0.0))
    smax = np.sqrt((fro + disc) / 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        smin = np.where(smax > 0, det / np.where(smax > 0, smax, 1.0), 0.0)
    return np.stack([smax, smin], axis=-1)


def _jacobi_sv(m: np.ndarray, max_sweeps: int = 30) -> np.ndarray:
    """One-sided Jacobi SVD on a stack of square matrices, descending values.

    Column pairs are rotated until mutually orthogonal; the column norms are
    then the singular values, with high relative accuracy even for tiny ones.
    """
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[-1]
    eps = np.finfo(float).eps
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                ap, aq = a[..., :, p], a[..., :, q]
                alpha = np.einsum("...i,...i->...", ap, ap)
                beta = np.einsum("...i,...i->...", aq, aq)
                gamma = np.einsum("...i,...i->...", ap, aq)
                act = np.abs(gamma) > eps * np.sqrt(alpha * beta)
                if not np.any(act):
                    continue
                rotated = True
                g = np.where(act, gamma, 1.0)
                zeta = (beta - alpha) / (2 * g)
                t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1 + zeta * zeta))
                cs = 1 / np.sqrt(1 + t * t)
                sn = cs * t
                cs = np.where(act, cs, 1.0)[..., None]
                sn = np.where(act, sn, 0.0)[..., None]
                new_p = cs * ap - sn * aq
                new_q = sn * ap + cs * aq
                a[..., :, p] = new_p
                a[..., :, q] = new_q
        if not rotated:
            break
    sv = np.linalg.norm(a, axis=-2)
    return -np.sort(-sv, axis=-1)


def singular_values_batch(ms) -> np.ndarray:
    ms = np.asarray(ms, dtype=float)
    if ms.shape[-2:] == (2, 2):
        return _sv2(ms)
    if ms.shape[-1] != ms.shape[-2]:
        raise ValueError("square matrices expected")
    return _jacobi_sv(ms)


def sigma_min_batch(ms) -> np.ndarray:
    return singular_values_batch(ms)[..., -1]


def sigma_min(m) -> float:
    """Smallest singular value of a 2x2 or 4x4 matrix."""
    m = np.asarray(m, dtype=float)
    if m.shape not in ((2, 2), (4, 4)):
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return float(sigma_min_batch(m[None])[0])


# -- closed-form pieces ----------------------------------------------------------


def _locus_block(a: float, b: float) -> np.ndarray:
    v = np.array([(a * a - b * b) / 2.0, a * b])
    return v / np.linalg.norm(v)


def equality_locus_y(z, map_id=MapId.F2) -> np.ndarray:
    """Unit dual vector on which the coderivative preserves the norm.

    Solves ``y1 z1 z2 = y2 (z1^2 - z2^2) / 2`` (blockwise for g, with zero
    dual blocks over zero blocks of ``z``).
    """
    map_id = MapId.parse(map_id)
    if map_id is MapId.H4:
        raise DomainError("no norm-preserving dual direction is known for h")
    z = as_point(z, map_id.dim)
    if is_origin(z):
        raise DomainError("the coderivative is empty at the origin")
    y = np.zeros(map_id.dim)
    for k in range(0, map_id.dim, 2):
        if z[k] == 0 and z[k + 1] == 0:
            continue
        y[k : k + 2] = _locus_block(z[k], z[k + 1])
    return y / np.linalg.norm(y)


def h_covering_bound(zbar) -> float | None:
    """Upper bound on the covering constant of h for special centres.

    * a whole block of ``zbar`` is zero: 0;
    * ``zbar_i = 0``: ``2 |zbar_j|^3 / |zbar|^3`` with ``j`` the partner
      coordinate in the same block (the smallest such bound if several
      coordinates vanish);
    * all four coordinates of equal magnitude: ``1 / sqrt(2)``;
    * otherwise ``None``.

    The cube is taken of the absolute value so the bound is nonnegative.
    """
    z = as_point(zbar, 4)
    if is_origin(z):
        raise DomainError("h bounds are stated away from the origin")
    if (z[0] == 0 and z[1] == 0) or (z[2] == 0 and z[3] == 0):
        return 0.0
    norm3 = float(np.linalg.norm(z)) ** 3
    partner = {0: 1, 1: 0, 2: 3, 3: 2}
    bounds = [2 * abs(z[partner[i]]) ** 3 / norm3 for i in range(4) if z[i] == 0]
    if bounds:
        log.debug("h bound at %s uses absolute cubes of the partner coordinates", z)
        return float(min(bounds))
    if np.all(np.abs(z) == abs(z[0])):
        return float(1 / np.sqrt(2))
    return None


# -- estimator -------------------------------------------------------------------


def _inner_inf_spectral(map_id: MapId, pts: np.ndarray) -> np.ndarray:
    jac = jacobian_batch(map_id, pts)
    if map_id is MapId.G4:
        # admissible duals vanish over zero blocks, so only live blocks count
        vals = []
        for k in (0, 2):
            live = (pts[:, k] != 0) | (pts[:, k + 1] != 0)
            s = np.full(pts.shape[0], np.inf)
            s[live] = _sv2(jac[live, k : k + 2, k : k + 2])[:, 1]
            vals.append(s)
        return np.minimum(*vals)
    return sigma_min_batch(jac)


def _min_norm_over(jac: np.ndarray, ys: np.ndarray, polish: int = 200) -> np.ndarray:
    """``min_y |jac @ y|`` for each matrix in the stack, ``ys`` as rows.

    The best sampled ``y`` is then polished by projected gradient steps on the
    unit sphere; every iterate is still a unit vector, so the value never
    drops below the true infimum.
    """
    gram = np.einsum("nki,nkj->nij", jac, jac)
    img = jac @ ys.T
    q = np.einsum("nim,nim->nm", img, img)
    y = ys[np.argmin(q, axis=1)]
    # norms of the image directly, avoiding the square-root floor of gram
    best = np.linalg.norm(np.einsum("nij,nj->ni", jac, y), axis=1)
    step = 1.0 / np.maximum(np.trace(gram, axis1=1, axis2=2), 1e-300)
    for i in range(polish):
        y = y - step[:, None] * np.einsum("nij,nj->ni", gram, y)
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        cur = np.minimum(best, np.linalg.norm(np.einsum("nij,nj->ni", jac, y), axis=1))
        stalled = np.all(best - cur <= 1e-17 + 1e-15 * cur)
        best = cur
        if stalled and i >= 5:
            break
    return best


def _inner_inf_definitional(map_id: MapId, pts: np.ndarray, n_y: int, rng) -> np.ndarray:
    jac = jacobian_batch(map_id, pts)
    if map_id is not MapId.G4:
        return _min_norm_over(jac, sphere_directions(map_id.dim, n_y, rng))
    out = np.full(pts.shape[0], np.inf)
    live = [(pts[:, k] != 0) | (pts[:, k + 1] != 0) for k in (0, 2)]
    both = live[0] & live[1]
    if np.any(both):
        out[both] = _min_norm_over(jac[both], sphere_directions(4, n_y, rng))
    ys2 = sphere_directions(2, n_y, rng)
    for idx, k in enumerate((0, 2)):
        only = live[idx] & ~live[1 - idx]
        if np.any(only):
            out[only] = _min_norm_over(jac[only, k : k + 2, k : k + 2], ys2)
    return out


def _coderivative_nonempty(map_id: MapId, pts: np.ndarray) -> np.ndarray:
    """Points at which some unit dual vector has a nonempty coderivative."""
    return np.any(pts != 0, axis=1)


def covering_estimate(
    map_id,
    zbar,
    etas: Sequence[float] = DEFAULT_ETAS,
    y_samples: int = 512,
    z_samples: int = 512,
    method: Method | str = Method.SPECTRAL,
    seed: int = 0,
) -> CoveringEstimate:
    map_id = MapId.parse(map_id)
    method = Method(method) if not isinstance(method, Method) else method
    zbar = as_point(zbar, map_id.dim)
    etas = tuple(float(e) for e in etas)
    if not etas:
        raise ConfigError("the eta ladder is empty")
    if min(etas) <= 0 or any(b >= a for a, b in zip(etas, etas[1:])):
        raise ConfigError("etas must be positive and strictly decreasing")
    if y_samples < 32 or z_samples < 32:
        raise ConfigError("sample counts must be at least 32")
    wbar = evaluate(map_id, zbar)
    dim = map_id.dim
    eye = np.eye(dim)

    own = []
    used = {"z_points": [], "y_per_point": y_samples if method is Method.DEFINITIONAL else 0}
    for i, eta in enumerate(etas):
        rng = child_rng(seed, i)
        pts = np.vstack([zbar[None], zbar + eta * eye, zbar - eta * eye, ball_points(zbar, eta, z_samples, rng)])
        img = evaluate_batch(map_id, pts)
        keep = (np.linalg.norm(img - wbar, axis=1) <= eta) & _coderivative_nonempty(map_id, pts)
        pts = pts[keep]
        used["z_points"].append(int(pts.shape[0]))
        if pts.shape[0] == 0:
            own.append(np.inf)
            continue
        if method is Method.SPECTRAL:
            vals = _inner_inf_spectral(map_id, pts)
        else:
            vals = _inner_inf_definitional(map_id, pts, y_samples, child_rng(seed, i, 1))
        own.append(float(np.min(vals)))

    # balls are nested, so each infimum also ranges over every smaller ball
    inf_per_eta = list(np.minimum.accumulate(own[::-1])[::-1])
    inf_per_eta = [float(v) for v in inf_per_eta]
    estimate = float(max(inf_per_eta))
    return CoveringEstimate(zbar, wbar, etas, inf_per_eta, estimate, method, used)
