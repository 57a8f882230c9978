"""Deterministic sample sets derived from a master seed."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, qmc


def child_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator keyed by ``(seed, *keys)``; independent of call order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *keys]))


def sphere_directions(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` low-discrepancy unit vectors in R^dim.

    On the circle this is an equally spaced comb with a random phase; in
    higher dimensions a scrambled Halton sequence pushed through the normal
    quantile function and normalised.
    """
    if dim == 2:
        t = (np.arange(n) + rng.random()) * (2.0 * np.pi / n)
        return np.column_stack([np.cos(t), np.sin(t)])
    sampler = qmc.Halton(d=dim, scramble=True, seed=rng)
    u = sampler.random(n)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    v = norm.ppf(u)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def special_directions(dim: int) -> np.ndarray:
    """Signed axis and diagonal unit vectors within each 2-block."""
    out = []
    for k in range(0, dim, 2):
        for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)):
            v = np.zeros(dim)
            v[k], v[k + 1] = a, b
            out.append(v / np.linalg.norm(v))
    return np.array(out)


def ball_points(center: np.ndarray, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniformly distributed in the closed ball."""
    dim = center.shape[0]
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * rng.random(n) ** (1.0 / dim)
    return center + g * rad[:, None]
