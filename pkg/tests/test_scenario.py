import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frwflow import scenario as scn
from frwflow.errors import ConfigError, ConstraintViolation
from frwflow.trajectory import COLUMNS, Trajectory, format_number, to_csv

BASE = {"spec_version": 1, "model": "flow", "kappa": 1.0, "span": [0.0, 0.5], "initial": {"a": 2.0, "a_dot": 0.1}}


def cfg(**over):
    d = json.loads(json.dumps(BASE))
    d.update(over)
    return d


def test_minimal_parse_defaults():
    sc = scn.from_dict(cfg())
    assert sc.model == "flow" and sc.formulation.kind == "direct" and sc.formulation.sigma is None
    assert sc.n_points == 201 and sc.eps_min == 1e-8 and sc.a_max == 1e8


@pytest.mark.parametrize(
    "override,field",
    [
        ({"spec_version": 2}, "spec_version"),
        ({"model": "newton"}, "model"),
        ({"kappa": "x"}, "kappa"),
        ({"span": [1.0, 0.0]}, "span"),
        ({"initial": {"a": -1.0, "a_dot": 0.0}}, "initial.a"),
        ({"initial": {"a": 1.0}}, "initial.a_dot"),
        ({"bogus": 1}, "scenario"),
        ({"fluids": [{"w": 0}]}, "fluids[0].rho0"),
        ({"integrator": {"abs_tol": -1}}, "integrator"),
        ({"output": {"n_points": 1}}, "output.n_points"),
        ({"guards": {"eps_min": 2.0, "a_max": 1.0}}, "guards"),
        ({"formulation": {"kind": "nope"}}, "formulation"),
    ],
)
def test_errors_name_the_field(override, field):
    with pytest.raises(ConfigError) as exc:
        scn.from_dict(cfg(**override))
    assert exc.value.field == field
    assert field in str(exc.value)


def test_bransdicke_requires_section_and_phi():
    with pytest.raises(ConfigError) as exc:
        scn.from_dict(cfg(model="bransdicke", fluids=[{"w": 0, "rho0": 1}], initial={"a": 1.0, "phi": 1.0}))
    assert exc.value.field == "brans_dicke"
    with pytest.raises(ConfigError) as exc:
        scn.from_dict(cfg(model="bransdicke", fluids=[{"w": 0, "rho0": 1}], brans_dicke={"w_bd": -1.5}, initial={"a": 1.0, "phi": 1.0}))
    assert exc.value.field == "brans_dicke.w_bd"


def test_invalid_json():
    with pytest.raises(ConfigError):
        scn.loads("{not json")


def test_inconsistent_bd_initial_data_reports_residual():
    sc = scn.from_dict(cfg(
        model="bransdicke", kappa=-1.0, fluids=[{"w": 0, "rho0": 1}], brans_dicke={"w_bd": 10.0},
        initial={"a": 1.0, "H": 0.0, "phi": 1.0},
    ))
    with pytest.raises(ConstraintViolation) as exc:
        scn.run(sc)
    assert exc.value.residual < 0


def test_with_param_paths():
    sc = scn.from_dict(cfg(fluids=[{"w": 0.0, "rho0": 1.0}], model="friedmann", initial={"a": 1.0}))
    assert sc.with_param("kappa", -1).kappa == -1.0
    assert sc.with_param("fluids.0.w", 1 / 3).fluids[0].w == 1 / 3
    assert sc.with_param("initial.a", 2.0).initial.a == 2.0
    with pytest.raises(ConfigError):
        sc.with_param("fluids.0.rho0", -1.0)


scenarios = st.builds(
    lambda model, k, t1, a, ad, n, kind, sig, lam, fl: scn.from_dict({
        "spec_version": 1, "model": model, "kappa": k, "span": [0.0, t1], "Lambda": lam,
        "initial": {"a": a, "a_dot": ad, "phi": 1.0} if model != "friedmann" else {"a": a},
        "formulation": {"kind": kind, **({"sigma": sig} if kind == "hubble" else {})}, "output": {"n_points": n},
        "fluids": fl if model != "bransdicke" else fl[:1] or [{"w": 0.0, "rho0": 1.0}],
        **({"brans_dicke": {"w_bd": 5.0, "V": [0.0, 0.1]}} if model == "bransdicke" else {}),
    }),
    st.sampled_from(["flow", "friedmann", "bransdicke"]),
    st.floats(-2, 2), st.floats(0, 10), st.floats(0.1, 5), st.floats(-1, 1), st.integers(2, 500),
    st.sampled_from(["direct", "hubble", "chi", "intrinsic"]), st.sampled_from(["calibrated", "printed", 1, -1]),
    st.floats(-1, 1),
    st.lists(st.builds(lambda w, r: {"w": w, "rho0": r}, st.floats(-1, 1), st.floats(0, 5)), max_size=3),
)


@settings(max_examples=60, deadline=None)
@given(scenarios)
def test_round_trip_is_value_identical(sc):
    again = scn.loads(scn.dumps(sc))
    assert again == sc
    assert scn.dumps(again) == scn.dumps(sc)


def test_trajectory_csv_format():
    t = np.array([0.0, 0.1])
    tr = Trajectory("x", t, {"a": np.array([1.0, 1.0 / 3.0])})
    text = to_csv(tr)
    lines = text.split("\n")
    assert lines[0] == ",".join(COLUMNS)
    assert lines[2].startswith("0.10000000000000001,0.33333333333333331,")
    assert lines[2].count(",") == len(COLUMNS) - 1 and lines[2].endswith(",")
    assert "\r" not in text and text.endswith("\n")
    assert format_number(1e-20) == "9.9999999999999995e-21"


def test_trajectory_is_read_only():
    tr = Trajectory("x", np.array([0.0, 1.0]), {"a": np.array([1.0, 2.0])})
    with pytest.raises(ValueError):
        tr["a"][0] = 5.0
    with pytest.raises(KeyError):
        Trajectory("x", np.array([0.0]), {"bogus": np.array([1.0])})


def test_identical_configs_give_identical_csv():
    sc = scn.from_dict(cfg())
    assert to_csv(scn.run(sc)) == to_csv(scn.run(scn.loads(scn.dumps(sc))))
