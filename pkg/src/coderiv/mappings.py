"""The three angle-doubling maps and their point conventions.

``f`` acts on R^2 and doubles the polar angle while keeping the radius.
``g`` applies the same rule to each half of a vector in R^4, and ``h``
uses the full R^4 norm as the common denominator.

Points are plain float arrays. The origin test is exact equality with
zero; every nonzero input, however small, takes the smooth branch.
"""

from __future__ import annotations

import enum

import numpy as np

__all__ = [
    "MapId",
    "as_point",
    "eval_f",
    "eval_g",
    "eval_h",
    "evaluate",
    "evaluate_batch",
    "is_origin",
]


class MapId(enum.Enum):
    F2 = "f"
    G4 = "g"
    H4 = "h"

    @property
    def dim(self) -> int:
        return 2 if self is MapId.F2 else 4

    @classmethod
    def parse(cls, value) -> "MapId":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown map {value!r}; expected one of f, g, h")


def as_point(p, dim: int | None = None) -> np.ndarray:
    """Validate ``p`` as a finite 1-D float vector (of length ``dim`` if given)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D point, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"expected a point in R^{dim}, got {arr.shape[0]} coordinates")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def is_origin(p) -> bool:
    return not np.any(np.asarray(p) != 0.0)


def _double_angle(a: float, b: float, denom: float) -> tuple[float, float]:
    return (a * a - b * b) / denom, 2.0 * a * b / denom


def _pow2_scale(p: np.ndarray) -> int:
    """Exponent ``e`` with ``max |p_i| / 2^e`` in [0.5, 1).

    The maps are positively homogeneous, so they are evaluated on
    ``p / 2^e`` and scaled back; powers of two make both steps exact and keep
    squares clear of underflow and overflow.
    """
    return int(np.frexp(np.max(np.abs(p)))[1])


def eval_f(p) -> np.ndarray:
    p = as_point(p, 2)
    if is_origin(p):
        return np.zeros(2)
    e = _pow2_scale(p)
    q = np.ldexp(p, -e)
    r = float(np.hypot(q[0], q[1]))
    return np.ldexp(np.array(_double_angle(q[0], q[1], r)), e)


def eval_g(p) -> np.ndarray:
    p = as_point(p, 4)
    out = np.zeros(4)
    for k in (0, 2):
        blk = p[k : k + 2]
        if blk[0] == 0.0 and blk[1] == 0.0:
            continue
        out[k : k + 2] = eval_f(blk)
    return out


def eval_h(p) -> np.ndarray:
    p = as_point(p, 4)
    if is_origin(p):
        return np.zeros(4)
    e = _pow2_scale(p)
    q = np.ldexp(p, -e)
    r = float(np.linalg.norm(q))
    return np.ldexp(np.array(_double_angle(q[0], q[1], r) + _double_angle(q[2], q[3], r)), e)


_EVALUATORS = {MapId.F2: eval_f, MapId.G4: eval_g, MapId.H4: eval_h}


def evaluate(map_id, p) -> np.ndarray:
    """Dispatch to ``eval_f``, ``eval_g`` or ``eval_h``."""
    return _EVALUATORS[MapId.parse(map_id)](p)


def evaluate_batch(map_id, pts: np.ndarray) -> np.ndarray:
    """Vectorised evaluation over the rows of ``pts``."""
    map_id = MapId.parse(map_id)
    pts = np.asarray(pts, dtype=float)
    out = np.zeros_like(pts)
    groups = [[(0, 1)]] if map_id is MapId.F2 else (
        [[(0, 1), (2, 3)]] if map_id is MapId.H4 else [[(0, 1)], [(2, 3)]])
    for blocks in groups:
        cols = [c for blk in blocks for c in blk]
        sub = pts[:, cols]
        ok = np.any(sub != 0, axis=1)
        e = np.frexp(np.max(np.abs(sub[ok]), axis=1))[1][:, None] if np.any(ok) else np.zeros((0, 1), int)
        q = np.ldexp(sub[ok], -e)
        r = np.linalg.norm(q, axis=1)
        for n, (i, j) in enumerate(blocks):
            a, b = q[:, 2 * n], q[:, 2 * n + 1]
            out[ok, i] = np.ldexp((a * a - b * b) / r, e[:, 0])
            out[ok, j] = np.ldexp(2.0 * a * b / r, e[:, 0])
    return out
