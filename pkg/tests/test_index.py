import math

import numpy as np
import pytest

from chern_euler import charts
from chern_euler.geometry import metric_matrix
from chern_euler.index import (
    DegreeError,
    RootFindingError,
    SingularityError,
    complex_power_field,
    field_from_spec,
    geodesic_flow,
    linear_field,
    local_degree,
    newton_zero,
    radial_sphere_field,
    sphere_distance,
    tilted_radial_field,
)


def identity(X):
    return X


def saddle(X):
    return X * np.array([1.0, -1.0])


def z_squared(X):
    x, y = X[..., 0], X[..., 1]
    return np.stack([x * x - y * y, 2 * x * y], axis=-1)


@pytest.mark.parametrize("field,expected", [(identity, 1), (saddle, -1), (z_squared, 2)])
def test_local_degree_planar_examples(field, expected):
    res = local_degree(field, np.zeros(2), 0.1)
    assert res.degree == expected
    assert res.distance < 1e-8


@pytest.mark.parametrize("diag,expected", [((1, 1, 1), 1), ((-1, -1, -1), -1), ((1, -1, 1), -1)])
def test_local_degree_in_three_dimensions(diag, expected):
    assert local_degree(lambda X: X * np.array(diag, dtype=float), np.zeros(3), 0.1).degree == expected


def test_local_degree_in_one_dimension():
    assert local_degree(lambda X: X, np.zeros(1), 0.1).degree == 1
    assert local_degree(lambda X: -X, np.zeros(1), 0.1).degree == -1
    assert local_degree(lambda X: X * X + 0.01, np.zeros(1), 0.1).degree == 0


def test_local_degree_errors():
    with pytest.raises(SingularityError):
        local_degree(lambda X: X - np.array([0.1, 0.0]), np.zeros(2), 0.1)


def test_complex_power_and_linear_field_degrees():
    ch = charts.euclidean(2)
    assert local_degree(complex_power_field(ch, 3), np.zeros(2), 0.1).degree == 3
    assert local_degree(complex_power_field(ch, -1), np.zeros(2), 0.1).degree == -1
    rot = linear_field(ch, [[0.0, -1.0], [1.0, 0.0]])
    assert local_degree(rot, np.zeros(2), 0.1).degree == 1


def test_tilted_radial_field_vanishes_at_centre():
    V = tilted_radial_field(charts.euclidean(2), [0.3, 0.0], 1.0, center=[0.1, 0.2])
    np.testing.assert_allclose(V(np.array([[0.1, 0.2]])), 0.0, atol=1e-15)
    assert local_degree(V, np.array([0.1, 0.2]), 0.05).degree == 1


def test_newton_zero():
    z = newton_zero(lambda x: np.array([x[0] ** 2 - 2.0, x[1] - x[0]]), [1.0, 0.0])
    np.testing.assert_allclose(z, [math.sqrt(2), math.sqrt(2)], atol=1e-10)
    with pytest.raises(RootFindingError):
        newton_zero(lambda x: np.array([x[0] ** 2 + 1.0]), [0.5])


def test_geodesic_flow_flat_line():
    ch = charts.euclidean(3)
    d = np.array([0.6, 0.0, 0.8])
    x, v = geodesic_flow(ch, np.array([0.1, 0.2, -0.3]), d, 1.5)
    np.testing.assert_allclose(x, np.array([0.1, 0.2, -0.3]) + 1.5 * d, atol=1e-14)
    np.testing.assert_allclose(v, d, atol=1e-14)


def test_geodesic_flow_meridian_towards_the_north_pole_on_s2():
    x, v = geodesic_flow(charts.sphere(2), np.array([math.pi / 2, 1.0]), np.array([-1.0, 0.0]), 1.2)
    np.testing.assert_allclose(x, [math.pi / 2 - 1.2, 1.0], atol=1e-12)
    np.testing.assert_allclose(v, [-1.0, 0.0], atol=1e-12)


def test_geodesic_flow_on_s3_is_a_unit_speed_great_circle():
    ch = charts.sphere(3)
    x0 = np.array([1.0, 1.2, 0.5])
    d = np.array([0.3, 0.5, 0.4])
    d /= math.sqrt(d @ metric_matrix(ch, x0) @ d)
    s = 0.8
    x, v = geodesic_flow(ch, x0, d, s)
    assert math.sqrt(v @ metric_matrix(ch, x) @ v) == pytest.approx(1.0, abs=1e-9)
    p0, p1 = (np.array(charts.sphere_embedding(list(y))) for y in (x0, x))
    assert math.acos(np.clip(p0 @ p1, -1, 1)) == pytest.approx(s, abs=1e-9)


def test_geodesic_flow_rejects_non_unit_direction():
    with pytest.raises(ValueError):
        geodesic_flow(charts.sphere(2), np.array([1.0, 1.0]), np.array([2.0, 0.0]), 0.1)


def test_radial_sphere_field_points_away_from_the_base_point():
    ch = charts.sphere(2)
    basis = [[0.0, 0.0, 1.0]]
    V = radial_sphere_field(ch, basis)
    dist = sphere_distance(ch, basis)
    x = np.array([[1.0, 0.5]])
    step = 1e-6 * V(x) / np.linalg.norm(V(x))
    assert dist(x + step)[0] > dist(x)[0]
    # on the round sphere the field is d * grad d, so its length is the distance
    G = metric_matrix(ch, x)
    assert math.sqrt(V(x)[0] @ G[0] @ V(x)[0]) == pytest.approx(dist(x)[0], abs=1e-12)


def test_field_from_spec_rejects_unknown_kind():
    with pytest.raises((KeyError, ValueError)):
        field_from_spec(charts.euclidean(2), {"kind": "nonsense"})
