import math

import numpy as np
import pytest

from frwflow.errors import IntegrationBudgetError
from frwflow.odekit import EventSpec, IntegratorSettings, integrate
from frwflow.verify import rk4_errors


def test_exponential_decay_to_1e9():
    sol = integrate(lambda t, y: -y, [1.0], (0.0, 1.0), IntegratorSettings())
    assert abs(sol.y[-1, 0] - math.exp(-1)) < 1e-9


def test_dense_output_on_grid():
    grid = np.linspace(0, 1, 37)
    sol = integrate(lambda t, y: -y, [1.0], (0.0, 1.0), IntegratorSettings(), t_eval=grid)
    np.testing.assert_array_equal(sol.t, grid)
    assert np.max(np.abs(sol.y[:, 0] - np.exp(-grid))) < 1e-9


def test_zero_rhs_is_exactly_constant():
    sol = integrate(lambda t, y: np.zeros_like(y), [1.5, -2.0], (0.0, 3.0), IntegratorSettings(), t_eval=np.linspace(0, 3, 11))
    assert np.all(sol.y == np.array([1.5, -2.0]))


def test_zero_length_span_returns_initial_row():
    sol = integrate(lambda t, y: -y, [2.0], (1.0, 1.0), IntegratorSettings())
    assert sol.t.tolist() == [1.0] and sol.y.tolist() == [[2.0]]


def test_rk4_fourth_order():
    errs = rk4_errors()
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    assert min(ratios) >= 2**4 * 0.95
    assert min(ratios) > 15.0


def test_adaptive_error_monotone_in_tolerance():
    errs = []
    for tol in (1e-6, 1e-8, 1e-10, 1e-12):
        st = IntegratorSettings(abs_tol=tol, rel_tol=tol)
        sol = integrate(lambda t, y: np.array([y[1], -y[0]]), [0.0, 1.0], (0.0, 10.0), st)
        errs.append(abs(sol.y[-1, 0] - math.sin(10.0)))
    assert all(errs[i] > errs[i + 1] for i in range(len(errs) - 1))


def test_event_bisection_intrinsic_crunch():
    # a a' = -2 with a(0) = 1: a^2 = 1 - 4t, floor at a = 1e-8 reached at t = (1 - 1e-16)/4
    ev = EventSpec("singularity-floor", lambda t, y: y[0] - 1e-8, True, -1)
    st = IntegratorSettings(abs_tol=1e-14, rel_tol=1e-12)
    sol = integrate(lambda t, y: np.array([-2.0 / y[0]]), [1.0], (0.0, 1.0), st, [ev])
    e = sol.events[-1]
    assert e.kind == "singularity-floor"
    assert abs(e.t_event - 0.25) < 1e-10
    assert e.bracket[1] - e.bracket[0] <= 1e-10
    assert e.bracket[0] <= sol.t[-1] <= e.bracket[1]


def test_nonterminal_event_recorded_and_run_continues():
    ev = EventSpec("turning-point", lambda t, y: y[1], False, 0)
    sol = integrate(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0], (0.0, 4.0), IntegratorSettings(), [ev])
    assert sol.t[-1] == 4.0
    assert [e.kind for e in sol.events] == ["turning-point"]
    assert abs(sol.events[0].t_event - math.pi) < 1e-9


def test_divergence_event_for_blowup():
    # y' = y^2, y(0) = 1 blows up at t = 1
    st = IntegratorSettings(h_min=1e-12)
    sol = integrate(lambda t, y: y * y, [1.0], (0.0, 2.0), st)
    assert sol.events and sol.events[-1].kind in ("divergence", "step-underflow")
    assert sol.t[-1] < 1.0 + 1e-6
    assert np.all(np.isfinite(sol.y))


def test_budget_error():
    with pytest.raises(IntegrationBudgetError):
        integrate(lambda t, y: -y, [1.0], (0.0, 100.0), IntegratorSettings(max_steps=5, h_max=0.01, h_init=0.01))


def test_settings_validation():
    with pytest.raises(ValueError):
        IntegratorSettings(h_min=1.0, h_init=0.1)
    with pytest.raises(ValueError):
        IntegratorSettings(abs_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorSettings(method="euler")


def test_determinism():
    f = lambda t, y: np.array([y[1], -np.sin(y[0])])
    a = integrate(f, [1.0, 0.0], (0, 20), IntegratorSettings(), t_eval=np.linspace(0, 20, 50))
    b = integrate(f, [1.0, 0.0], (0, 20), IntegratorSettings(), t_eval=np.linspace(0, 20, 50))
    assert a.y.tobytes() == b.y.tobytes()
