import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frwflow.errors import QuadratureResolutionError, SingularityError
from frwflow.flow import (
    PRINTED_SIGMA, FlowFormulation, calibrate_sigma, chi_form_residual, chi_residual, flow_rhs_direct,
    flow_rhs_hubble, integral_identity_residual, residual_stipulation,
)
from frwflow.geometry import ScaleState
from frwflow.odekit import IntegratorSettings
from frwflow.scenario import run
from frwflow.verify import flow_scenario, formulation_gaps, unit_relative


@pytest.mark.parametrize("a,ad,k,expected", [(1, 0, 0, 0.0), (1, 1, 0, -3.0), (2, 0.5, 1, -3.25)])
def test_direct_rhs_examples(a, ad, k, expected):
    add = flow_rhs_direct(ScaleState(0, a, ad), k)
    assert add == pytest.approx(expected, abs=1e-15)
    assert residual_stipulation(a, ad, add, k) == pytest.approx(0, abs=1e-14)


def test_direct_rhs_rejects_nonpositive_a():
    with pytest.raises(SingularityError):
        flow_rhs_direct(ScaleState(0, 0.0, 1.0), 0)


def test_hubble_rhs_examples():
    assert flow_rhs_hubble(0.0, 1.0, 0, -1) == 0
    assert flow_rhs_hubble(1.0, 1.0, 0, PRINTED_SIGMA) == -3 + PRINTED_SIGMA
    sigma = calibrate_sigma().sigma
    assert flow_rhs_hubble(1.0, 1.0, 0, sigma) == flow_rhs_direct(ScaleState(0, 1, 1), 0) - 1 == -4


def test_sigma_calibration_report():
    cal = calibrate_sigma()
    assert cal.sigma == -1
    assert cal.residuals[cal.sigma] <= 1e-12
    assert cal.residuals[PRINTED_SIGMA] > 1.0
    assert not cal.printed_consistent
    assert "INCONSISTENT" in cal.report()


def test_formulation_validation():
    with pytest.raises(ValueError):
        FlowFormulation("bogus")
    with pytest.raises(ValueError):
        FlowFormulation("hubble", 2)
    assert FlowFormulation("hubble").resolved_sigma() == calibrate_sigma().sigma


@pytest.mark.parametrize("k", [-1.0, 0.0, 1.0])
def test_intrinsic_matches_closed_form(k, tight):
    tr = run(flow_scenario(k, "intrinsic", a0=1.0, a_dot0=None, T=0.2, settings=tight))
    assert np.max(np.abs(tr["a"] / tr["a_exact"] - 1)) <= 1e-9
    assert tr.max_abs("identity_residual") < 1e-9


def test_intrinsic_closed_crunch_a0_3():
    tr = run(flow_scenario(1.0, "intrinsic", a0=3.0, a_dot0=None, T=3.0, settings=IntegratorSettings(abs_tol=1e-14, rel_tol=1e-12)))
    ev = tr.terminal_event
    assert ev.kind == "singularity-floor"
    assert abs(ev.t_event - 2.25) < 1e-8
    assert np.all(np.isfinite(tr["a"]))


def test_intrinsic_flat_is_stationary():
    tr = run(flow_scenario(0.0, "intrinsic", a0=2.0, a_dot0=None, T=1.0))
    assert np.all(tr["a"] == 2.0)


def test_direct_vs_hubble_spec_case():
    st = IntegratorSettings(abs_tol=1e-12, rel_tol=1e-11)
    d = run(flow_scenario(0.0, "direct", a0=1.0, a_dot0=1.0, T=0.5, settings=st))
    h = run(flow_scenario(0.0, "hubble", a0=1.0, a_dot0=1.0, T=0.5, settings=st))
    assert unit_relative(h["a"], d["a"]) <= 1e-6
    assert unit_relative(h["H"], d["H"]) <= 1e-6


def test_printed_sign_hubble_form_diverges_from_direct():
    d = run(flow_scenario(0.0, "direct", a0=1.0, a_dot0=1.0, T=0.5))
    p = run(flow_scenario(0.0, "hubble", a0=1.0, a_dot0=1.0, T=0.5, sigma=PRINTED_SIGMA))
    assert unit_relative(p["a"], d["a"]) > 1e-2


@pytest.mark.parametrize("k", [-1.0, 0.0, 1.0])
def test_formulations_agree(k):
    gap_h, gap_c, diag = formulation_gaps(k)
    assert gap_h <= 1e-6 and gap_c <= 1e-6
    assert diag.residual_chi <= 1e-6
    assert diag.residual_integral <= 1e-5
    assert diag.residual_stipulation <= 1e-12
    assert diag.c0 == pytest.approx(2.0**2 * 0.2, abs=1e-14)


def test_literal_chi_forms_are_reported_and_large():
    tr = run(flow_scenario(1.0, "direct", a0=2.0, a_dot0=0.2, T=1.0))
    diag = chi_residual(tr)
    assert chi_form_residual(tr, PRINTED_SIGMA) > 1e-2
    for key in ("literal_chi_form", "literal_first_integral", "literal_weighted_rate", "literal_cubed"):
        assert diag.literal[key] > 1e-3


def test_kappa1_short_run_integral_identity():
    tr = run(flow_scenario(1.0, "direct", a0=1.0, a_dot0=0.2, T=0.3))
    res, detail = integral_identity_residual(tr)
    assert res <= 1e-5
    assert detail["literal_weighted_rate"] > 1e-3


def test_stationary_flat_trajectory_has_zero_residuals():
    tr = run(flow_scenario(0.0, "direct", a0=1.0, a_dot0=0.0, T=1.0))
    assert np.all(tr["a"] == 1.0)
    diag = chi_residual(tr)
    assert diag.residual_chi == 0 and diag.residual_integral == 0


def test_quadrature_needs_resolution():
    tr = run(flow_scenario(0.0, "direct", T=0.5, n_points=20))
    with pytest.raises(QuadratureResolutionError):
        integral_identity_residual(tr)


def test_direct_run_leaves_region_with_typed_event():
    tr = run(flow_scenario(1.0, "direct", a0=1.0, a_dot0=0.2, T=2.0))
    assert tr.terminal_event.kind == "singularity-floor"
    assert np.all(np.isfinite(tr["a"])) and np.all(tr["a"] > 0)


def test_tolerance_halving_changes_terminal_a_little():
    base = IntegratorSettings()
    a1 = run(flow_scenario(-1.0, "direct", T=1.0, settings=base))["a"][-1]
    a2 = run(flow_scenario(-1.0, "direct", T=1.0, settings=base.scaled(0.5)))["a"][-1]
    assert abs(a1 - a2) < 10 * base.rel_tol * abs(a1)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 5.0), st.floats(-2.0, 2.0), st.sampled_from([-1.0, 0.0, 1.0]))
def test_back_substitution_identity(a, ad, k):
    add = flow_rhs_direct(ScaleState(0.0, a, ad), k)
    lhs = 6 * a * ad
    scale = max(1.0, abs(lhs), abs(6 * add / a), 12 * (ad / a) ** 2, 12 * abs(k) / a**2)
    assert abs(residual_stipulation(a, ad, add, k)) <= 1e-12 * scale


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 5.0), st.floats(-2.0, 2.0), st.sampled_from([-1.0, 0.0, 1.0]))
def test_calibrated_hubble_equals_direct_pointwise(a, ad, k):
    H = ad / a
    direct = flow_rhs_direct(ScaleState(0.0, a, ad), k) / a - H * H
    hub = flow_rhs_hubble(H, a, k, calibrate_sigma().sigma)
    assert hub == pytest.approx(direct, rel=1e-12, abs=1e-12)
