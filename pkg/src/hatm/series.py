"""Sparse polynomials in the convergence-control symbol ``hbar`` and time ``t``.

A :class:`BiPoly` stores ``{(a, b): c}`` meaning ``sum c * hbar**a * t**b``.
Values are immutable; every operation returns a new polynomial in canonical
form (no zero coefficients, non-negative exponents).
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

Key = tuple[int, int]


class BiPoly:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, float] | Iterable[tuple[Key, float]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Key, float] = {}
        for (a, b), c in items:
            a, b = int(a), int(b)
            if a < 0 or b < 0:
                raise ValueError(f"negative exponent in term ({a}, {b})")
            acc[(a, b)] = acc.get((a, b), 0.0) + float(c)
        self._terms = {k: v for k, v in acc.items() if v != 0.0}
        self._hash = None

    @classmethod
    def const(cls, c: float) -> BiPoly:
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, c: float, hbar_exp: int = 0, t_exp: int = 0) -> BiPoly:
        return cls({(hbar_exp, t_exp): c})

    @classmethod
    def _raw(cls, terms: dict[Key, float]) -> BiPoly:
        # caller guarantees canonical form
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @property
    def terms(self) -> dict[Key, float]:
        return dict(self._terms)

    def coef(self, hbar_exp: int, t_exp: int) -> float:
        return self._terms.get((hbar_exp, t_exp), 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms.items()))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, float)):
            other = BiPoly.const(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return "BiPoly(0)"
        parts = []
        for (a, b), c in sorted(self._terms.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            s = f"{c:.12g}"
            if a:
                s += "*h" + (f"^{a}" if a > 1 else "")
            if b:
                s += "*t" + (f"^{b}" if b > 1 else "")
            parts.append(s)
        return "BiPoly(" + " + ".join(parts).replace("+ -", "- ") + ")"

    # --- ring operations -------------------------------------------------

    def __add__(self, other: BiPoly | float) -> BiPoly:
        if isinstance(other, (int, float)):
            other = BiPoly.const(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            s = out.get(k, 0.0) + c
            if s == 0.0:
                out.pop(k, None)
            else:
                out[k] = s
        return BiPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> BiPoly:
        return BiPoly._raw({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: BiPoly | float) -> BiPoly:
        if isinstance(other, (int, float)):
            other = BiPoly.const(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: float) -> BiPoly:
        return BiPoly.const(other) - self

    def __mul__(self, other: BiPoly | float) -> BiPoly:
        if isinstance(other, (int, float)):
            return self.scale(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        out: dict[Key, float] = {}
        for (a1, b1), c1 in self._terms.items():
            for (a2, b2), c2 in other._terms.items():
                k = (a1 + a2, b1 + b2)
                out[k] = out.get(k, 0.0) + c1 * c2
        return BiPoly._raw({k: v for k, v in out.items() if v != 0.0})

    __rmul__ = __mul__

    def scale(self, factor: float) -> BiPoly:
        if factor == 0:
            return BiPoly()
        return BiPoly._raw({k: v for k, c in self._terms.items() if (v := c * factor) != 0.0})

    def shift_hbar(self, n: int = 1) -> BiPoly:
        """Multiply by ``hbar**n``."""
        return BiPoly._raw({(a + n, b): c for (a, b), c in self._terms.items()})

    # --- calculus in t -----------------------------------------------------

    def diff_t(self) -> BiPoly:
        return BiPoly._raw({(a, b - 1): c * b for (a, b), c in self._terms.items() if b > 0})

    def integrate_t(self) -> BiPoly:
        """Antiderivative in ``t`` that vanishes at ``t = 0``."""
        return BiPoly._raw({(a, b + 1): c / (b + 1) for (a, b), c in self._terms.items()})

    # --- inspection --------------------------------------------------------

    def degree_hbar(self) -> int:
        return max((a for a, _ in self._terms), default=-1)

    def degree_t(self) -> int:
        return max((b for _, b in self._terms), default=-1)

    def truncate(self, max_hbar: int | None = None, max_t: int | None = None) -> BiPoly:
        """Drop terms above the given degrees (diagnostics only)."""
        return BiPoly._raw({
            (a, b): c
            for (a, b), c in self._terms.items()
            if (max_hbar is None or a <= max_hbar) and (max_t is None or b <= max_t)
        })

    def at_t(self, t: float) -> BiPoly:
        """Substitute ``t`` and return a polynomial in ``hbar`` alone."""
        out: dict[Key, float] = {}
        for (a, b), c in self._terms.items():
            out[(a, 0)] = out.get((a, 0), 0.0) + c * t**b
        return BiPoly._raw({k: v for k, v in out.items() if v != 0.0})

    def to_array(self) -> np.ndarray:
        """Dense coefficient matrix ``C[a, b]`` for vectorized evaluation."""
        out = np.zeros((self.degree_hbar() + 1, self.degree_t() + 1)) if self._terms else np.zeros((1, 1))
        for (a, b), c in self._terms.items():
            out[a, b] = c
        return out

    def __call__(self, hbar: float, t: float) -> float:
        return self.eval(hbar, t)

    def eval(self, hbar: float, t: float) -> float:
        if not self._terms:
            return 0.0
        items = sorted(self._terms.items(), key=lambda kv: (kv[0][0] + kv[0][1], kv[0]))
        return math.fsum(c * hbar**a * t**b for (a, b), c in items)


ZERO = BiPoly()
ONE = BiPoly.const(1.0)


def poly_add(p: BiPoly, q: BiPoly) -> BiPoly:
    return p + q


def poly_mul(p: BiPoly, q: BiPoly) -> BiPoly:
    return p * q


def poly_diff_t(p: BiPoly) -> BiPoly:
    return p.diff_t()


def poly_integrate_t(p: BiPoly) -> BiPoly:
    return p.integrate_t()


def poly_eval(p: BiPoly, hbar: float, t: float) -> float:
    return p.eval(hbar, t)
