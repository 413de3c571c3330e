import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frwflow.errors import DegenerateMetricError, DomainError, SingularityError
from frwflow.geometry import (
    ScaleState, SpacePoint, SpatialCurvature, christoffels, frw_metric, numeric_curvature_oracle,
    ricci_components, ricci_scalar_4, spatial_metric,
)
from frwflow.verify import curvature_oracle_ratio


def test_spatial_curvature_sign():
    assert [SpatialCurvature(k).sign for k in (-0.3, 0.0, 2.5)] == [-1, 0, 1]
    with pytest.raises(DomainError):
        SpatialCurvature(math.nan)


def test_scale_state_hubble_and_positivity():
    assert ScaleState(0.0, 2.0, 0.5).H == 0.25
    with pytest.raises(SingularityError):
        ScaleState(0.0, 0.0, 1.0)


@pytest.mark.parametrize("r,theta,k", [(0.0, 1.0, 0), (0.5, 0.0, 0), (0.5, math.pi, 0), (1.0, 1.0, 1), (1.5, 1.0, 1)])
def test_coordinate_singularities_rejected(r, theta, k):
    with pytest.raises(SingularityError):
        christoffels(ScaleState(0, 1, 0), k, SpacePoint(r, theta))


def test_static_flat_christoffels():
    g = christoffels(ScaleState(0, 1, 0), 0, SpacePoint(1, math.pi / 2)).christoffel
    assert g[0, 1, 1] == 0 and abs(g[3, 2, 3]) < 1e-16


def test_gamma_233_at_quarter_pi():
    g = christoffels(ScaleState(0, 1.7, 0.3), 0.5, SpacePoint(0.4, math.pi / 4)).christoffel
    assert g[2, 3, 3] == pytest.approx(-0.5, abs=1e-15)


def test_christoffel_table_matches_oracle_fixed_point():
    s, p = ScaleState(0.0, 2.0, 0.5, 0.0), SpacePoint(0.3, 1.0, 0.2)
    closed = christoffels(s, 1, p).christoffel
    num = numeric_curvature_oracle(frw_metric(s, 1), [0.0, 0.3, 1.0, 0.2])
    assert np.max(np.abs(closed - num.christoffel)) < 1e-6
    assert set(christoffels(s, 1, p).nonzero_christoffels()) <= {
        (0, 1, 1), (1, 1, 1), (0, 2, 2), (0, 3, 3), (1, 0, 1), (1, 1, 0), (2, 0, 2), (2, 2, 0), (3, 0, 3), (3, 3, 0),
        (1, 2, 2), (1, 3, 3), (2, 1, 2), (2, 2, 1), (3, 1, 3), (3, 3, 1), (2, 3, 3), (3, 2, 3), (3, 3, 2),
    }


def test_ricci_components_examples():
    assert np.all(ricci_components(ScaleState(0, 1, 0, 0), 0, SpacePoint(1, 1)).ricci == 0)
    assert ricci_components(ScaleState(0, 1, 0, 1), 0, SpacePoint(1, math.pi / 2)).ricci[0, 0] == -3
    s = ScaleState(0.0, 2.0, 0.5, -0.1)
    closed = ricci_components(s, -1, SpacePoint(0.4, 1.2)).ricci
    num = numeric_curvature_oracle(frw_metric(s, -1), [0.0, 0.4, 1.2, 0.0]).ricci
    assert np.max(np.abs(closed - num)) < 1e-5
    with pytest.raises(DomainError):
        ricci_components(ScaleState(0, 1, 0), 0, SpacePoint(1, 1))


def test_ricci_scalar_examples():
    assert ricci_scalar_4(ScaleState(0, 1, 0, 0), 0).ricci_scalar_4 == 0
    assert ricci_scalar_4(ScaleState(0, 1, 1, 1), 0).ricci_scalar_4 == 12
    s = ricci_scalar_4(ScaleState(0, 1, 0, 0), 1)
    assert s.ricci_scalar_4 == 6 and s.spatial_scalar_intrinsic == 6


def test_oracle_minkowski_and_degenerate():
    num = numeric_curvature_oracle(lambda x: np.diag([-1.0, 1.0, 1.0, 1.0]), [0, 1, 1, 1])
    assert np.max(np.abs(num.christoffel)) < 1e-9
    with pytest.raises(DegenerateMetricError):
        numeric_curvature_oracle(lambda x: np.diag([0.0, 1.0, 1.0, 1.0]), [0, 1, 1, 1])
    with pytest.raises(ValueError):
        numeric_curvature_oracle(lambda x: np.eye(4), [0, 1, 1, 1], step=1e-2)


@pytest.mark.parametrize("k", [-1.0, 0.0, 1.0])
def test_slice_ricci_is_2_kappa_gamma(k):
    x = np.array([0.5, 1.1, 0.3])
    num = numeric_curvature_oracle(spatial_metric(k), x)
    assert np.max(np.abs(num.ricci - 2 * k * spatial_metric(k)(x))) < 1e-5


coords = st.tuples(
    st.sampled_from([-1.0, 0.0, 1.0]),
    st.floats(0.5, 5.0), st.floats(-2, 2), st.floats(-2, 2),
    st.floats(0.1, 0.9), st.floats(0.3, math.pi - 0.3), st.floats(0, 6.2),
)


@settings(max_examples=40, deadline=None)
@given(coords)
def test_closed_forms_agree_with_oracle(c):
    k, a, ad, add, r, th, ph = c
    assert curvature_oracle_ratio(ScaleState(0.0, a, ad, add), k, SpacePoint(r, th, ph)) <= 1.0


@settings(max_examples=100, deadline=None)
@given(coords)
def test_lower_index_symmetry_and_decomposition(c):
    k, a, ad, add, r, th, ph = c
    s = ScaleState(0.0, a, ad, add)
    g = christoffels(s, k, SpacePoint(r, th, ph)).christoffel
    assert np.array_equal(g, np.swapaxes(g, 1, 2))
    num = numeric_curvature_oracle(frw_metric(s, k), [0.0, r, th, ph], richardson=False).christoffel
    assert np.max(np.abs(num - np.swapaxes(num, 1, 2))) < 1e-9
    R = ricci_scalar_4(s, k)
    assert abs(R.ricci_scalar_4 - (R.spatial_scalar_split + 3 * add / a)) <= 1e-12 * max(1.0, abs(R.ricci_scalar_4))
