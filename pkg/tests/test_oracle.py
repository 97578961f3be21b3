import numpy as np
import pytest
from scipy.integrate import solve_ivp

from hatm.model import QuadraticOdeSystem, QuadraticTerm, rhs_eval
from hatm.oracle import StepSizeUnderflow, dopri5, rk_reference


def test_starts_at_initial_state(oracle, hiv):
    assert oracle.t_nodes[0] == 0.0
    np.testing.assert_array_equal(oracle.states[0], hiv.init)
    assert oracle.t_nodes[-1] == 1.0
    assert np.all(np.diff(oracle.t_nodes) > 0)


def test_forward_difference_matches_rhs(hiv):
    sol = rk_reference(hiv, 1.0, rel_tol=1e-12, abs_tol=1e-14)
    h = sol.t_nodes[1]
    slope = (sol.states[1, 0] - sol.states[0, 0]) / h
    assert slope == pytest.approx(-0.024, rel=1e-2)


def test_exponential_decay():
    decay = QuadraticOdeSystem(("x",), (1.0,), (0.0,), ((-1.0,),))
    for tol in (1e-6, 1e-9):
        sol = rk_reference(decay, 1.0, rel_tol=tol, abs_tol=tol * 1e-2)
        assert sol.states[-1, 0] == pytest.approx(np.exp(-1.0), rel=tol)


def test_matches_scipy_reference(hiv, oracle):
    ref = solve_ivp(lambda t, x: rhs_eval(hiv, x), (0, 1), hiv.init, method="DOP853",
                    rtol=1e-13, atol=1e-13, t_eval=oracle.t_nodes)
    rel = np.abs(ref.y.T - oracle.states) / np.maximum(1.0, np.abs(ref.y.T))
    assert rel.max() < 1e-9


def test_deterministic(hiv):
    a, b = rk_reference(hiv, 2.0, 1e-8, 1e-10), rk_reference(hiv, 2.0, 1e-8, 1e-10)
    np.testing.assert_array_equal(a.t_nodes, b.t_nodes)
    np.testing.assert_array_equal(a.states, b.states)
    assert (a.accepted, a.rejected) == (b.accepted, b.rejected)


def test_controller_stats(hiv):
    sol = rk_reference(hiv, 5.0, 1e-6, 1e-8)
    assert sol.accepted == len(sol.t_nodes) - 1
    assert sol.rejected >= 0
    assert sol.n_evals >= 6 * (sol.accepted + sol.rejected)


def test_tighter_tolerance_never_worse(hiv):
    tight = rk_reference(hiv, 1.0, 1e-12, 1e-14).states[-1]
    errs = []
    for tol in 1e-4 / 2.0 ** np.arange(12):
        end = rk_reference(hiv, 1.0, tol, tol * 1e-2).states[-1]
        errs.append(np.max(np.abs(end - tight) / np.maximum(1.0, np.abs(tight))))
    assert all(b <= a for a, b in zip(errs, errs[1:])), errs


def test_step_underflow_reports_time():
    # x' = x^2, x(0) = 1 blows up at t = 1
    blowup = QuadraticOdeSystem(("x",), (1.0,), (0.0,), ((0.0,),), (QuadraticTerm(0, 0, 0, 1.0),))
    with pytest.raises(StepSizeUnderflow) as exc:
        rk_reference(blowup, 2.0, 1e-8, 1e-10)
    assert exc.value.t == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("kwargs", [dict(t_end=0.0), dict(rel_tol=0.0), dict(abs_tol=-1.0)])
def test_bad_arguments(kwargs):
    args = dict(t_end=1.0, rel_tol=1e-6, abs_tol=1e-8) | kwargs
    with pytest.raises(ValueError):
        dopri5(lambda t, y: -y, [1.0], **args)


def test_at_lookup(oracle):
    np.testing.assert_array_equal(oracle.at(0.0), oracle.states[0])
    with pytest.raises(KeyError):
        oracle.at(0.123456789)
