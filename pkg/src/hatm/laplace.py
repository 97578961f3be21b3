"""Laplace transforms of t-polynomials.

Images are finite sums ``sum_k c_k(hbar) / s**k`` with ``k >= 1``; only
polynomial inputs are supported, so no pole or partial-fraction machinery
is needed.
"""

from __future__ import annotations

import math
from typing import Mapping

from .series import BiPoly


class LaplaceImage:
    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, BiPoly] | None = None):
        out: dict[int, BiPoly] = {}
        for k, c in (terms or {}).items():
            k = int(k)
            if k < 1:
                raise ValueError(f"s-power must be >= 1, got {k}")
            if c.degree_t() > 0:
                raise ValueError("image coefficients must not depend on t")
            acc = out.get(k, BiPoly()) + c
            if acc:
                out[k] = acc
            else:
                out.pop(k, None)
        self._terms = out

    @property
    def terms(self) -> dict[int, BiPoly]:
        return dict(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LaplaceImage):
            return NotImplemented
        return self._terms == other._terms

    def __repr__(self) -> str:
        if not self._terms:
            return "LaplaceImage(0)"
        return "LaplaceImage(" + " + ".join(f"({c!r})/s^{k}" for k, c in sorted(self._terms.items())) + ")"

    def __add__(self, other: LaplaceImage) -> LaplaceImage:
        if not isinstance(other, LaplaceImage):
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, BiPoly()) + c
        return LaplaceImage(out)

    def __neg__(self) -> LaplaceImage:
        return LaplaceImage({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: LaplaceImage) -> LaplaceImage:
        return self + (-other)

    def scale(self, factor: float) -> LaplaceImage:
        return LaplaceImage({k: c.scale(factor) for k, c in self._terms.items()})

    def __mul__(self, factor: float) -> LaplaceImage:
        if not isinstance(factor, (int, float)):
            return NotImplemented
        return self.scale(factor)

    __rmul__ = __mul__


def laplace(p: BiPoly) -> LaplaceImage:
    """``c * hbar**a * t**b  ->  c * b! * hbar**a / s**(b+1)``."""
    out: dict[int, dict] = {}
    for (a, b), c in p.terms.items():
        out.setdefault(b + 1, {})[(a, 0)] = c * math.factorial(b)
    return LaplaceImage({k: BiPoly(v) for k, v in out.items()})


def inverse_laplace(image: LaplaceImage) -> BiPoly:
    """``c / s**k  ->  c * t**(k-1) / (k-1)!``."""
    terms: dict[tuple[int, int], float] = {}
    for k, c in image.terms.items():
        if k < 1:
            raise ValueError(f"malformed image: s-power {k} < 1")
        f = math.factorial(k - 1)
        for (a, _), v in c.terms.items():
            terms[(a, k - 1)] = v / f
    return BiPoly(terms)


def div_s(image: LaplaceImage) -> LaplaceImage:
    return LaplaceImage({k + 1: c for k, c in image.terms.items()})


def const_over_s(c: BiPoly, power: int = 1) -> LaplaceImage:
    """Image of a t-free coefficient divided by ``s**power``."""
    return LaplaceImage({power: c}) if c else LaplaceImage()
