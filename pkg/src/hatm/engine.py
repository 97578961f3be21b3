"""Homotopy analysis transform recurrence for quadratic ODE systems.

Order components are kept symbolic in ``hbar`` so a single solve serves
every hbar-curve and residual evaluation. The homotopy embedding parameter
never appears explicitly: each order of the recurrence is one coefficient of
its Taylor expansion.

For state ``i`` and order ``m >= 1``::

    R_i,m = L[x_i,m-1] - x_i,m-1(0)/s - (1 - chi_m) c_i/s**2
            - (1/s) L[sum_j A_ij x_j,m-1]
            - (1/s) L[sum_(j,k) B_ijk sum_r x_j,r x_k,m-1-r]
    x_i,m = chi_m x_i,m-1 + hbar L^-1[R_i,m]

The auxiliary functions are fixed to 1 and the zero-order guesses are the
constant initial values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .laplace import LaplaceImage, const_over_s, div_s, inverse_laplace, laplace
from .model import QuadraticOdeSystem
from .series import BiPoly

MAX_ORDER = 30

Method = Literal["laplace", "time"]


def chi(m: int) -> int:
    if m < 1:
        raise ValueError(f"chi is defined for m >= 1, got {m}")
    return 0 if m <= 1 else 1


@dataclass(frozen=True)
class DeformationSeries:
    system: QuadraticOdeSystem
    order: int
    components: tuple[tuple[BiPoly, ...], ...]

    def component(self, state: int, m: int) -> BiPoly:
        return self.components[state][m]

    def partial_sum(self, state: int) -> BiPoly:
        return partial_sum(self, state)

    def partial_sums(self) -> list[BiPoly]:
        return [partial_sum(self, i) for i in range(self.system.n)]


def _linear_part(sys: QuadraticOdeSystem, comps, i: int, m: int) -> BiPoly:
    out = BiPoly()
    for j, a in enumerate(sys.linear[i]):
        if a:
            out = out + comps[j][m - 1].scale(a)
    return out


def _quadratic_part(sys: QuadraticOdeSystem, comps, i: int, m: int) -> BiPoly:
    out = BiPoly()
    for q in sys.quadratic:
        if q.target != i:
            continue
        conv = BiPoly()
        for r in range(m):
            conv = conv + comps[q.j][r] * comps[q.k][m - 1 - r]
        out = out + conv.scale(q.coef)
    return out


def deformation_rhs(sys: QuadraticOdeSystem, comps, m: int) -> list[LaplaceImage]:
    """Transform-domain right-hand sides for order ``m``.

    ``comps[i]`` must hold at least orders ``0 .. m-1`` for every state.
    """
    if m < 1:
        raise ValueError(f"order must be >= 1, got {m}")
    carry = chi(m)
    out = []
    for i in range(sys.n):
        prev = comps[i][m - 1]
        image = laplace(prev) - const_over_s(prev.at_t(0.0))
        if not carry and sys.const_term[i]:
            image = image - const_over_s(BiPoly.const(sys.const_term[i]), 2)
        image = image - div_s(laplace(_linear_part(sys, comps, i, m)))
        image = image - div_s(laplace(_quadratic_part(sys, comps, i, m)))
        out.append(image)
    return out


def _time_domain_update(sys: QuadraticOdeSystem, comps, m: int) -> list[BiPoly]:
    # integrate the negated right-hand side directly, no transform layer
    carry = chi(m)
    out = []
    for i in range(sys.n):
        prev = comps[i][m - 1]
        integrand = prev.diff_t() - _linear_part(sys, comps, i, m) - _quadratic_part(sys, comps, i, m)
        if not carry:
            integrand = integrand - sys.const_term[i]
        step = integrand.integrate_t().shift_hbar(1)
        out.append(prev + step if carry else step)
    return out


def next_order(sys: QuadraticOdeSystem, comps, m: int) -> list[BiPoly]:
    carry = chi(m)
    out = []
    for i, image in enumerate(deformation_rhs(sys, comps, m)):
        step = inverse_laplace(image).shift_hbar(1)
        out.append(comps[i][m - 1] + step if carry else step)
    return out


def solve(sys: QuadraticOdeSystem, order: int, method: Method = "laplace") -> DeformationSeries:
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"N must be in [0, {MAX_ORDER}]")
    update = {"laplace": next_order, "time": _time_domain_update}[method]
    comps: list[list[BiPoly]] = [[BiPoly.const(x0)] for x0 in sys.init]
    for m in range(1, order + 1):
        for i, x in enumerate(update(sys, comps, m)):
            comps[i].append(x)
    return DeformationSeries(sys, order, tuple(tuple(c) for c in comps))


def partial_sum(series: DeformationSeries, state: int) -> BiPoly:
    out = BiPoly()
    for x in series.components[state]:
        out = out + x
    return out


def _max_abs(p: BiPoly) -> float:
    return max((abs(c) for c in p.terms.values()), default=0.0)


def telescoping_check(series: DeformationSeries) -> float:
    """Scaled defect of ``sum_{m=1..N} [x_m - chi_m x_{m-1}] = x_N``.

    Returns the worst state's max coefficient defect divided by
    ``max(1, max |coef of x_N|)``; zero up to rounding for a correct solve.
    """
    n_ord = series.order
    if n_ord == 0:
        return 0.0
    worst = 0.0
    for comps in series.components:
        acc = BiPoly()
        for m in range(1, n_ord + 1):
            acc = acc + comps[m]
            if chi(m):
                acc = acc - comps[m - 1]
        defect = _max_abs(acc - comps[n_ord]) / max(1.0, _max_abs(comps[n_ord]))
        worst = max(worst, defect)
    return worst
