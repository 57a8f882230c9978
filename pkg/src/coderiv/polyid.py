"""Exact polynomial identities over the integers.

Polynomials live in the eight variables ``y1..y4, z1..z4`` and are stored as
``{exponent tuple: int}`` with no zero coefficients, so equality is structural
and an identity holds iff the difference has no terms.

The norm identity for the coderivative of f, with denominators cleared
(``x = X / r^3`` where ``r^2 = z1^2 + z2^2``)::

    X1 = y1 (z1^2 + 3 z2^2) z1 + 2 y2 z2^3
    X2 = -y1 (3 z1^2 + z2^2) z2 + 2 y2 z1^3
    X1^2 + X2^2 = (y1^2 + y2^2) r^6 + 3 r^2 (2 y1 z1 z2 - y2 (z1^2 - z2^2))^2

The block version for g multiplies the two-block statement through by
``r1^6 r2^6``.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Mapping

from .errors import OverflowGuard

VARS = ("y1", "y2", "y3", "y4", "z1", "z2", "z3", "z4")
NVARS = len(VARS)
MAX_EXP = 64

__all__ = [
    "MAX_EXP",
    "Poly",
    "VARS",
    "poly_arith",
    "prop34_sides",
    "thm46_sides",
    "h_norm_sides",
    "verify_prop34_identity",
    "verify_thm46_identity",
    "verify_h_norm_identity",
    "numeric_agreement",
]


def _grlex_key(exps: tuple[int, ...]):
    return (-sum(exps), tuple(-e for e in exps))


class Poly:
    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, ...], int] | None = None):
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != NVARS or min(exps) < 0:
                raise ValueError(f"bad exponent vector {exps}")
            if max(exps) > MAX_EXP:
                raise OverflowGuard(f"exponent {max(exps)} exceeds {MAX_EXP}")
            if not isinstance(c, int):
                raise TypeError("coefficients must be Python ints")
            if c:
                clean[exps] = clean.get(exps, 0) + c
        self._terms = {k: v for k, v in clean.items() if v}

    # -- constructors

    @classmethod
    def const(cls, c: int) -> "Poly":
        return cls({(0,) * NVARS: c})

    @classmethod
    def var(cls, name: str) -> "Poly":
        exps = [0] * NVARS
        exps[VARS.index(name)] = 1
        return cls({tuple(exps): 1})

    @property
    def terms(self) -> dict[tuple[int, ...], int]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    # -- ring operations

    @staticmethod
    def _coerce(other) -> "Poly":
        if isinstance(other, Poly):
            return other
        if isinstance(other, int):
            return Poly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[tuple[int, ...], int] = {}
        for (ea, ca), (eb, cb) in itertools.product(self._terms.items(), other._terms.items()):
            e = tuple(a + b for a, b in zip(ea, eb))
            if max(e) > MAX_EXP:
                raise OverflowGuard(f"exponent {max(e)} exceeds {MAX_EXP}")
            out[e] = out.get(e, 0) + ca * cb
        return Poly(out)

    __rmul__ = __mul__

    def scale(self, c: int) -> "Poly":
        return Poly({k: v * c for k, v in self._terms.items()})

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        result, base = Poly.const(1), self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # -- substitution and evaluation

    def substitute(self, values: Mapping[str, "Poly | int"]) -> "Poly":
        """Replace variables by polynomials (or integers), exactly."""
        subs = {VARS.index(k): self._coerce(v) for k, v in values.items()}
        out = Poly()
        for exps, c in self._terms.items():
            term = Poly.const(c)
            keep = list(exps)
            for idx, p in subs.items():
                if exps[idx]:
                    term = term * p ** exps[idx]
                    keep[idx] = 0
            out = out + term * Poly({tuple(keep): 1})
        return out

    def evaluate(self, point: Mapping[str, float]) -> float:
        vals = [float(point.get(v, 0.0)) for v in VARS]
        total = 0.0
        for exps, c in self._terms.items():
            t = float(c)
            for v, e in zip(vals, exps):
                if e:
                    t *= v**e
            total += t
        return total

    # -- text form

    def dump(self) -> str:
        """One term per line, ``coeff*y1^a*...*z4^h``, graded lex order."""
        lines = []
        for exps in sorted(self._terms, key=_grlex_key):
            mono = "*".join(f"{v}^{e}" for v, e in zip(VARS, exps))
            lines.append(f"{self._terms[exps]}*{mono}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def parse(cls, text: str) -> "Poly":
        terms = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            coeff, *factors = line.split("*")
            exps = [0] * NVARS
            for fac in factors:
                name, e = fac.split("^")
                exps[VARS.index(name)] = int(e)
            terms[tuple(exps)] = terms.get(tuple(exps), 0) + int(coeff)
        return cls(terms)

    def __repr__(self):
        return f"Poly({len(self)} terms, degree {self.degree()})"


def poly_arith(op: str, a: Poly, b: "Poly | int | None" = None) -> Poly:
    """Functional entry point: ``add``, ``sub``, ``mul``, ``scale`` or ``pow``."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "scale":
        return a.scale(int(b))
    if op == "pow":
        return a ** int(b)
    raise ValueError(f"unknown operation {op!r}")


# -- the identities -----------------------------------------------------------------

y1, y2, y3, y4, z1, z2, z3, z4 = (Poly.var(v) for v in VARS)


def _block_numerators(ya, yb, za, zb, mutate: bool = False):
    three = 4 if mutate else 3
    xa = ya * (za**2 + zb**2 * three) * za + yb * zb**3 * 2
    xb = -(ya * (za**2 * 3 + zb**2) * zb) + yb * za**3 * 2
    return xa, xb


def _block_parts(ya, yb, za, zb, mutate: bool = False):
    """Cleared squares, ``r^2`` and the squared correction of one block."""
    xa, xb = _block_numerators(ya, yb, za, zb, mutate)
    rr = za**2 + zb**2
    corr = (ya * za * zb * 2 - yb * (za**2 - zb**2)) ** 2
    return xa**2 + xb**2, rr, corr


def prop34_sides(mutate: bool = False) -> tuple[Poly, Poly]:
    sq, rr, corr = _block_parts(y1, y2, z1, z2, mutate)
    return sq, (y1**2 + y2**2) * rr**3 + (rr * corr).scale(3)


def thm46_sides(mutate: bool = False) -> tuple[Poly, Poly]:
    sq1, rr1, c1 = _block_parts(y1, y2, z1, z2)
    sq2, rr2, c2 = _block_parts(y3, y4, z3, z4, mutate)
    r1_6, r2_6 = rr1**3, rr2**3
    lhs = sq1 * r2_6 + sq2 * r1_6
    ysq = y1**2 + y2**2 + y3**2 + y4**2
    rhs = ysq * r1_6 * r2_6 + (rr1 * c1 * r2_6).scale(3) + (rr2 * c2 * r1_6).scale(3)
    return lhs, rhs


def h_norm_sides(mutate: bool = False) -> tuple[Poly, Poly]:
    # x variables reuse the z symbols
    two = 3 if mutate else 2
    lhs = (z1**2 - z2**2) ** 2 + (z1 * z2).scale(two) ** 2 + (z3**2 - z4**2) ** 2 + (z3 * z4 * 2) ** 2
    rhs = (z1**2 + z2**2) ** 2 + (z3**2 + z4**2) ** 2
    return lhs, rhs


def _holds(sides) -> bool:
    lhs, rhs = sides
    return (lhs - rhs).is_zero()


def verify_prop34_identity(mutate: bool = False) -> bool:
    """Exact check of the cleared f norm identity; ``mutate`` perturbs a coefficient."""
    return _holds(prop34_sides(mutate))


def verify_thm46_identity(mutate: bool = False) -> bool:
    return _holds(thm46_sides(mutate))


def verify_h_norm_identity(mutate: bool = False) -> bool:
    return _holds(h_norm_sides(mutate))


def numeric_agreement(lhs: Poly, rhs: Poly, trials: int = 100, seed: int = 0) -> float:
    """Worst relative gap between the two sides at random real points."""
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(trials):
        pt = {v: rng.uniform(-2.0, 2.0) for v in VARS}
        a, b = lhs.evaluate(pt), rhs.evaluate(pt)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return worst


def monomials(poly: Poly) -> Iterable[tuple[int, ...]]:
    return sorted(poly.terms, key=_grlex_key)
