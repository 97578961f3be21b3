"""A-posteriori diagnostics for a deformation series.

hbar-curves and plateau (convergence-region) detection, residual error
functions, residual-optimal hbar selection, and comparison against the
Runge-Kutta reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import DeformationSeries
from .model import rhs_eval
from .oracle import OracleSolution
from .series import BiPoly

DEFAULT_GRID = (-1.5, 0.0, 0.01)
DEFAULT_SLOPE_TOL = 1e-3
DEFAULT_HBAR = -0.8


def hbar_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive uniform grid, rounded so decimal steps land on decimal points."""
    if step <= 0 or hi < lo:
        raise ValueError(f"bad grid {lo}:{hi}:{step}")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


def _eval_grid(p: BiPoly, hbar, t) -> np.ndarray:
    """Evaluate on the outer product ``hbar x t``; returns shape (len(hbar), len(t))."""
    c = p.to_array()
    h = np.atleast_1d(np.asarray(hbar, dtype=float))
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    hp = h[:, None] ** np.arange(c.shape[0])[None, :]
    tp = tt[:, None] ** np.arange(c.shape[1])[None, :]
    return hp @ c @ tp.T


@dataclass(frozen=True)
class HbarCurve:
    state: int
    t_fixed: float
    hbar: np.ndarray
    values: np.ndarray
    derivative: int = 0

    def __post_init__(self):
        if self.hbar.size == 0:
            raise ValueError("empty hbar grid")
        if np.any(np.diff(self.hbar) <= 0):
            raise ValueError("hbar samples must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite curve values")

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.hbar.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class ConvergenceInterval:
    state: int
    lo: float
    hi: float
    order: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")


def hbar_curve(series: DeformationSeries, state: int, t_fixed: float = 1.0,
               grid: Sequence[float] | None = None, derivative: int = 0) -> HbarCurve:
    """Partial sum of ``state`` at ``t_fixed`` as a function of hbar.

    ``derivative`` selects the t-derivative order of the plotted quantity
    (0 = the value itself).
    """
    grid = hbar_grid(*DEFAULT_GRID) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty hbar grid")
    p = series.partial_sum(state)
    for _ in range(derivative):
        p = p.diff_t()
    values = np.array([p.eval(h, t_fixed) for h in grid])
    return HbarCurve(state, float(t_fixed), grid, values, derivative)


def detect_plateau(curve: HbarCurve, rel_slope_tol: float = DEFAULT_SLOPE_TOL,
                   order: int = -1) -> ConvergenceInterval | None:
    """Widest run of samples whose finite-difference slopes are all small.

    A slope qualifies when ``|dv/dh| <= rel_slope_tol * max(1, median|v|)``.
    At least three consecutive samples are needed to form a plateau.
    """
    h, v = curve.hbar, curve.values
    if h.size < 3:
        raise ValueError("plateau detection needs at least 3 samples")
    scale = max(1.0, float(np.median(np.abs(v))))
    flat = np.abs(np.diff(v) / np.diff(h)) <= rel_slope_tol * scale

    best = None
    k = 0
    while k < flat.size:
        if not flat[k]:
            k += 1
            continue
        j = k
        while j < flat.size and flat[j]:
            j += 1
        # slopes k..j-1 cover samples k..j
        if j - k >= 2 and (best is None or h[j] - h[k] > best[1] - best[0]):
            best = (float(h[k]), float(h[j]))
        k = j
    if best is None:
        return None
    return ConvergenceInterval(curve.state, best[0], best[1], order)


def residual(series: DeformationSeries, hbar: float, t: float) -> np.ndarray:
    """Residual ``d/dt S_i - rhs_i(S)`` of every partial sum at one point."""
    sums = series.partial_sums()
    x = np.array([p.eval(hbar, t) for p in sums])
    dx = np.array([p.diff_t().eval(hbar, t) for p in sums])
    return dx - rhs_eval(series.system, x)


@dataclass(frozen=True)
class ResidualGrid:
    order: int
    hbar: float
    t: np.ndarray
    values: np.ndarray  # shape (n_states, len(t))

    def __post_init__(self):
        if self.values.shape[1:] != self.t.shape:
            raise ValueError("residual values do not match the t samples")


def residual_grid(series: DeformationSeries, hbar: float, t: Sequence[float]) -> ResidualGrid:
    sys = series.system
    t = np.asarray(t, dtype=float)
    sums = series.partial_sums()
    x = np.vstack([_eval_grid(p, hbar, t)[0] for p in sums])
    dx = np.vstack([_eval_grid(p.diff_t(), hbar, t)[0] for p in sums])
    rhs = np.array(sys.const_term)[:, None] + np.array(sys.linear) @ x
    for q in sys.quadratic:
        rhs[q.target] += q.coef * x[q.j] * x[q.k]
    return ResidualGrid(series.order, float(hbar), t, dx - rhs)


def sup_residual(series: DeformationSeries, hbar: float, t_lo: float = 0.0, t_hi: float = 1.0,
                 samples: int = 201) -> np.ndarray:
    if not t_lo < t_hi:
        raise ValueError(f"bad t range [{t_lo}, {t_hi}]")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    grid = residual_grid(series, hbar, np.linspace(t_lo, t_hi, samples))
    return np.max(np.abs(grid.values), axis=1)


def residual_objective(series: DeformationSeries, hbar: float, t_lo: float, t_hi: float,
                       nodes: int = 101) -> float:
    """Sum over states of the trapezoid-rule integral of the squared residual."""
    grid = residual_grid(series, hbar, np.linspace(t_lo, t_hi, nodes))
    return float(np.sum(np.trapezoid(grid.values**2, grid.t, axis=1)))


def optimal_hbar(series: DeformationSeries, grid: Sequence[float], t_lo: float = 0.0,
                 t_hi: float = 1.0) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty hbar grid")
    scores = np.array([residual_objective(series, h, t_lo, t_hi) for h in grid])
    best = scores.min()
    # ties go to the point closest to -1
    candidates = grid[scores == best]
    return float(candidates[np.argmin(np.abs(candidates + 1.0))])


@dataclass(frozen=True)
class Comparison:
    t: np.ndarray
    hatm: np.ndarray  # shape (len(t), n)
    oracle: np.ndarray
    rel_err: np.ndarray

    @property
    def max_rel_err(self) -> np.ndarray:
        if self.t.size == 0:
            return np.zeros(self.hatm.shape[1])
        return self.rel_err.max(axis=0)


def comparison(series: DeformationSeries, hbar: float, oracle: OracleSolution,
               t_lo: float, t_hi: float) -> Comparison:
    nodes = oracle.t_nodes
    if t_lo < nodes[0] or t_hi > nodes[-1] or t_hi < t_lo:
        raise ValueError(f"range [{t_lo}, {t_hi}] outside oracle span [{nodes[0]}, {nodes[-1]}]")
    mask = (nodes >= t_lo) & (nodes <= t_hi)
    t = nodes[mask]
    ref = oracle.states[mask]
    approx = np.column_stack([_eval_grid(p, hbar, t)[0] for p in series.partial_sums()])
    rel = np.abs(approx - ref) / np.maximum(1.0, np.abs(ref))
    return Comparison(t, approx, ref, rel)


def compare(series: DeformationSeries, hbar: float, oracle: OracleSolution,
            t_lo: float, t_hi: float) -> np.ndarray:
    """Per-state max relative error against the oracle at its accepted nodes."""
    return comparison(series, hbar, oracle, t_lo, t_hi).max_rel_err


def leading_exponent(values: np.ndarray, t: np.ndarray) -> float:
    """Least-squares slope of ``log|E|`` against ``log t``."""
    mask = (t > 0) & (np.abs(values) > 0)
    if mask.sum() < 2:
        return np.inf
    slope, _ = np.polyfit(np.log(t[mask]), np.log(np.abs(values[mask])), 1)
    return float(slope)


def _abs_poly(p: BiPoly) -> BiPoly:
    return BiPoly({k: abs(c) for k, c in p.terms.items()})


def _rounding_floor(series: DeformationSeries, hbar: float, t: np.ndarray) -> np.ndarray:
    # eps times the magnitude of every term summed into the residual
    sys = series.system
    sums = series.partial_sums()
    x = np.vstack([_eval_grid(_abs_poly(p), abs(hbar), t)[0] for p in sums])
    dx = np.vstack([_eval_grid(_abs_poly(p.diff_t()), abs(hbar), t)[0] for p in sums])
    mag = dx + np.abs(np.array(sys.const_term))[:, None] + np.abs(np.array(sys.linear)) @ x
    for q in sys.quadratic:
        mag[q.target] += abs(q.coef) * x[q.j] * x[q.k]
    return np.finfo(float).eps * mag


@dataclass(frozen=True)
class ResidualOrder:
    exponent: np.ndarray  # per state; inf when the residual never rises above rounding
    t_hi: np.ndarray      # right end of the window actually used, per state
    n_used: np.ndarray


def residual_exponent(series: DeformationSeries, hbar: float, t_hi: float = 0.1,
                      samples: int = 200, min_samples: int = 20, noise_factor: float = 100.0,
                      t_cap: float = 1.0) -> ResidualOrder:
    """Fit the leading power of ``|E_i(t)|`` near ``t = 0``.

    Samples are log-spaced on ``[1e-3 t_hi, t_hi]``; samples whose residual is
    within ``noise_factor`` of the double-precision rounding floor are dropped.
    If fewer than ``min_samples`` survive, the window is widened by 1.5x until
    ``t_cap``.
    """
    n = series.system.n
    exps = np.full(n, np.inf)
    used_hi = np.full(n, t_hi)
    used_n = np.zeros(n, dtype=int)
    pending = set(range(n))
    hi = t_hi
    while pending:
        t = np.geomspace(hi * 1e-3, hi, samples)
        vals = residual_grid(series, hbar, t).values
        floor = _rounding_floor(series, hbar, t)
        for i in sorted(pending):
            keep = np.abs(vals[i]) > noise_factor * floor[i]
            if keep.sum() >= min_samples or hi >= t_cap:
                exps[i] = leading_exponent(vals[i][keep], t[keep])
                used_hi[i] = hi
                used_n[i] = int(keep.sum())
                pending.discard(i)
        hi = min(t_cap, hi * 1.5)
    return ResidualOrder(exps, used_hi, used_n)
