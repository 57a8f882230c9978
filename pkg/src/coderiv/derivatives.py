"""Closed-form derivatives and coderivatives of f, g and h.

Matrix layout
-------------
Jacobians use the row-vector convention throughout: entry ``[j, i]`` is the
partial derivative of output ``i`` with respect to input ``j``, so that

    map(u) ~ map(z) + (u - z) @ jacobian(z)

The coderivative matrix is the transpose of that array, and the
coderivative image of a dual vector ``y`` is ``x = y @ coderivative_matrix``,
which is the same as ``jacobian(z) @ y`` in numpy terms. Every "action" helper
below returns that vector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mappings import MapId, as_point, is_origin

__all__ = [
    "CoderivKind",
    "CoderivResult",
    "jacobian_f",
    "jacobian_g",
    "jacobian_h",
    "jacobian",
    "jacobian_batch",
    "coderivative_matrix_f",
    "coderivative_matrix",
    "coderivative_action",
    "coderivative_f",
    "coderivative_g",
    "norm_identity_rhs_f",
    "norm_identity_rhs_g",
]


class CoderivKind(enum.Enum):
    UNIQUE = "unique"
    SINGLETON_THETA = "singleton_theta"
    EMPTY = "empty"


@dataclass(frozen=True)
class CoderivResult:
    """Value of a coderivative query: one vector, ``{theta}``, or the empty set."""

    kind: CoderivKind
    vector: np.ndarray | None = None

    @property
    def is_empty(self) -> bool:
        return self.kind is CoderivKind.EMPTY

    def as_set(self, dim: int) -> list[np.ndarray]:
        if self.kind is CoderivKind.UNIQUE:
            return [self.vector]
        if self.kind is CoderivKind.SINGLETON_THETA:
            return [np.zeros(dim)]
        return []

    @classmethod
    def unique(cls, vector) -> "CoderivResult":
        return cls(CoderivKind.UNIQUE, np.asarray(vector, dtype=float))


EMPTY = CoderivResult(CoderivKind.EMPTY)
SINGLETON_THETA = CoderivResult(CoderivKind.SINGLETON_THETA)


def _unit_scale(*cols):
    """Divide the coordinates by a common power of two so the largest lies in
    [0.5, 1). The Jacobians are invariant under positive scaling, and the
    exact rescale keeps cubes of tiny or huge inputs finite."""
    cols = [np.asarray(c, dtype=float) for c in cols]
    big = np.max(np.abs(np.stack(cols)), axis=0)
    e = np.where(big > 0, np.frexp(big)[1], 0)
    return [np.ldexp(c, -e) for c in cols]


def _f_block(a, b):
    """2x2 Jacobian block of the angle-doubling rule at (a, b); works on arrays."""
    a, b = _unit_scale(a, b)
    r2 = a * a + b * b
    d = r2 * np.sqrt(r2)
    return np.stack(
        [
            np.stack([(a * a + 3 * b * b) * a / d, 2 * b**3 / d], axis=-1),
            np.stack([-(3 * a * a + b * b) * b / d, 2 * a**3 / d], axis=-1),
        ],
        axis=-2,
    )


def jacobian_f(z) -> np.ndarray:
    z = as_point(z, 2)
    if is_origin(z):
        raise DomainError("f has no Frechet derivative at the origin")
    return _f_block(z[0], z[1])


def coderivative_matrix_f(z) -> np.ndarray:
    return jacobian_f(z).T


def jacobian_g(z) -> np.ndarray:
    z = as_point(z, 4)
    if (z[0] == 0 and z[1] == 0) or (z[2] == 0 and z[3] == 0):
        raise DomainError("g is not Frechet differentiable where a block vanishes")
    out = np.zeros((4, 4))
    out[:2, :2] = _f_block(z[0], z[1])
    out[2:, 2:] = _f_block(z[2], z[3])
    return out


def _h_matrix(z: np.ndarray) -> np.ndarray:
    z1, z2, z3, z4 = _unit_scale(*np.moveaxis(np.asarray(z, dtype=float), -1, 0))
    q1, q2 = z1 * z1, z2 * z2
    q3, q4 = z3 * z3, z4 * z4
    n2 = q1 + q2 + q3 + q4
    d = n2 * np.sqrt(n2)
    rows = [
        [
            (q1 + 3 * q2 + 2 * q3 + 2 * q4) * z1,
            2 * z2 * (q2 + q3 + q4),
            -(q3 - q4) * z1,
            -2 * z3 * z4 * z1,
        ],
        [
            -(3 * q1 + q2 + 2 * q3 + 2 * q4) * z2,
            2 * z1 * (q1 + q3 + q4),
            -(q3 - q4) * z2,
            -2 * z3 * z4 * z2,
        ],
        [
            -(q1 - q2) * z3,
            -2 * z1 * z2 * z3,
            (2 * q1 + 2 * q2 + q3 + 3 * q4) * z3,
            2 * z4 * (q1 + q2 + q4),
        ],
        [
            -(q1 - q2) * z4,
            -2 * z1 * z2 * z4,
            -(2 * q1 + 2 * q2 + 3 * q3 + q4) * z4,
            2 * z3 * (q1 + q2 + q3),
        ],
    ]
    m = np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)
    return m / np.asarray(d)[..., None, None]


def jacobian_h(z) -> np.ndarray:
    """Jacobian of h at ``z != 0`` with common denominator ``|z|^3``.

    Entries ``[0, 1]``, ``[1, 1]``, ``[2, 3]`` and ``[3, 3]`` carry the
    squared norm of the *whole* vector minus one coordinate, e.g.
    ``2 z2 (z2^2 + z3^2 + z4^2)``; dropping the other block's terms gives a
    matrix that fails the finite-difference check away from the coordinate
    planes.
    """
    z = as_point(z, 4)
    if is_origin(z):
        raise DomainError("h is only analysed away from the origin")
    return _h_matrix(z)


def jacobian(map_id, z) -> np.ndarray:
    map_id = MapId.parse(map_id)
    if map_id is MapId.F2:
        return jacobian_f(z)
    if map_id is MapId.G4:
        return jacobian_g(z)
    return jacobian_h(z)


def jacobian_batch(map_id, pts) -> np.ndarray:
    """Jacobians at each row of ``pts``; rows must be differentiable points.

    For g a zero block yields a zero 2x2 block rather than an error, which is
    exactly the surviving-block action used on admissible dual vectors.
    """
    map_id = MapId.parse(map_id)
    pts = np.asarray(pts, dtype=float)
    if map_id is MapId.F2:
        return _f_block(pts[:, 0], pts[:, 1])
    if map_id is MapId.H4:
        return _h_matrix(pts)
    out = np.zeros((pts.shape[0], 4, 4))
    for k in (0, 2):
        a, b = pts[:, k], pts[:, k + 1]
        ok = (a != 0) | (b != 0)
        out[ok, k : k + 2, k : k + 2] = _f_block(a[ok], b[ok])
    return out


def coderivative_matrix(map_id, z) -> np.ndarray:
    return jacobian(map_id, z).T


def coderivative_action(map_id, z, y) -> np.ndarray:
    """``y @ coderivative_matrix(z)``: the unique coderivative image at a smooth point."""
    map_id = MapId.parse(map_id)
    y = as_point(y, map_id.dim)
    return jacobian(map_id, z) @ y


def coderivative_f(z, y) -> CoderivResult:
    z = as_point(z, 2)
    y = as_point(y, 2)
    if not is_origin(z):
        return CoderivResult.unique(jacobian_f(z) @ y)
    # At the origin only (theta, theta) survives the six directional tests and
    # the vertical probe; theta itself makes the quotient identically zero.
    return SINGLETON_THETA if is_origin(y) else EMPTY


def coderivative_g(z, y) -> CoderivResult:
    """Full case split for g.

    * both blocks of ``z`` nonzero: the block-diagonal transpose action;
    * exactly one zero block: admissible only when the matching block of
      ``y`` is zero, and then the surviving block acts alone;
    * ``z = 0``: ``{0}`` for ``y = 0``, empty otherwise.
    """
    z = as_point(z, 4)
    y = as_point(y, 4)
    zero = [z[k] == 0 and z[k + 1] == 0 for k in (0, 2)]
    if all(zero):
        return SINGLETON_THETA if is_origin(y) else EMPTY
    x = np.zeros(4)
    for idx, k in enumerate((0, 2)):
        yk = y[k : k + 2]
        if zero[idx]:
            if np.any(yk != 0):
                return EMPTY
            continue
        x[k : k + 2] = _f_block(z[k], z[k + 1]) @ yk
    return CoderivResult.unique(x)


def _correction(a: float, b: float, y1: float, y2: float) -> float:
    r2 = a * a + b * b
    return 12.0 * (y1 * a * b / r2 - y2 * (a * a - b * b) / (2.0 * r2)) ** 2


def norm_identity_rhs_f(z, y) -> float:
    """``|y|^2`` plus the twelve-times-squared correction; equals ``|x|^2``."""
    z = as_point(z, 2)
    y = as_point(y, 2)
    if is_origin(z):
        raise DomainError("the norm identity needs z != 0")
    return float(y @ y + _correction(z[0], z[1], y[0], y[1]))


def norm_identity_rhs_g(z, y) -> float:
    z = as_point(z, 4)
    y = as_point(y, 4)
    total = float(y @ y)
    live = 0
    for k in (0, 2):
        if z[k] == 0 and z[k + 1] == 0:
            if y[k] != 0 or y[k + 1] != 0:
                raise DomainError("dual block over a zero block of z must vanish")
            continue
        live += 1
        total += _correction(z[k], z[k + 1], y[k], y[k + 1])
    if not live:
        raise DomainError("the norm identity needs a nonzero block in z")
    return total
