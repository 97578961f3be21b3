"""Adaptive Dormand-Prince 5(4) integrator used as the numerical reference."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import QuadraticOdeSystem, rhs_eval


class StepSizeUnderflow(RuntimeError):
    def __init__(self, t: float, h: float):
        self.t = float(t)
        self.h = float(h)
        super().__init__(f"step size underflow at t={self.t!r} (h={self.h:.3e})")


# Butcher tableau, 7 stages with FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

# PI controller (Hairer & Wanner, DOPRI5 defaults)
_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


@dataclass(frozen=True)
class OracleSolution:
    t_nodes: np.ndarray
    states: np.ndarray  # shape (len(t_nodes), n)
    accepted: int
    rejected: int
    n_evals: int

    def at(self, t: float) -> np.ndarray:
        idx = np.flatnonzero(self.t_nodes == t)
        if idx.size == 0:
            raise KeyError(f"t={t} is not an accepted node")
        return self.states[idx[0]]


def _initial_step(f, t0, y0, f0, t_end, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t_end - t0)


def dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_end: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    max_steps: int = 1_000_000,
) -> OracleSolution:
    if not t_end > 0:
        raise ValueError("t_end must be > 0")
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be > 0")

    t = 0.0
    y = np.asarray(y0, dtype=float).copy()
    k = np.empty((7, y.size))
    k[0] = f(t, y)
    n_evals = 1
    h = _initial_step(f, t, y, k[0], t_end, rel_tol, abs_tol)
    n_evals += 1
    err_old = 1e-4
    accepted = rejected = 0
    ts, ys = [t], [y.copy()]
    last_rejected = False

    while t < t_end:
        if accepted + rejected >= max_steps:
            raise RuntimeError(f"exceeded {max_steps} steps at t={t}")
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StepSizeUnderflow(t, h)
        if t + h >= t_end:
            h = t_end - t
        for s in range(1, 7):
            k[s] = f(t + _C[s] * h, y + h * np.dot(_A[s], k[:s]))
        n_evals += 6
        y_new = y + h * np.dot(_B5, k)
        err_vec = h * np.dot(_E, k)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0:
            err = max(err, 1e-10)
            fac = _SAFETY * err ** -_EXPO * err_old ** _BETA
            fac = min(_FAC_MAX, max(_FAC_MIN, fac))
            if last_rejected:
                fac = min(fac, 1.0)
            t_next = t_end if t + h >= t_end else t + h
            t, y = t_next, y_new
            k[0] = k[6]
            err_old = err
            accepted += 1
            last_rejected = False
            ts.append(t)
            ys.append(y.copy())
            h *= fac
        else:
            fac = max(_FAC_MIN, _SAFETY * err ** -_EXPO)
            h *= fac
            rejected += 1
            last_rejected = True

    return OracleSolution(np.array(ts), np.array(ys), accepted, rejected, n_evals)


def rk_reference(sys: QuadraticOdeSystem, t_end: float, rel_tol: float = 1e-10,
                 abs_tol: float = 1e-12) -> OracleSolution:
    return dopri5(lambda _t, x: rhs_eval(sys, x), sys.init, t_end, rel_tol, abs_tol)
