import math

import numpy as np
import pytest

from chern_euler import charts
from chern_euler.geometry import (
    FrameField,
    GeometryError,
    FormMatrix,
    christoffel,
    complete_frame,
    connection_forms,
    curvature_forms,
    curvature_on_tangents,
    euler_density,
    euler_form,
    euler_value,
    metric_jet,
    metric_matrix,
    orthonormal_frame,
    riemann,
    validate_chart,
)

RNG = np.random.default_rng(7)


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def sphere_points(n, count, rng=RNG):
    return np.stack([rng.uniform(0.3, math.pi - 0.3, count) for _ in range(n - 1)]
                    + [rng.uniform(0, 2 * math.pi, count)], axis=-1)


def test_round_s2_christoffel_and_riemann():
    th, ph = 0.7, 1.3
    jet = metric_jet(charts.sphere(2), np.array([[th, ph]]))
    gam = christoffel(jet)[0]
    assert gam[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th), abs=1e-12)
    assert gam[1, 0, 1] == pytest.approx(math.cos(th) / math.sin(th), abs=1e-12)
    R = riemann(jet)[0]
    # g(R(d_theta, d_phi) d_phi, d_theta) = K |d_theta ^ d_phi|^2 with K = 1
    assert R[0, 1, 1, 0] == pytest.approx(math.sin(th) ** 2, abs=1e-10)
    assert R[0, 1, 0, 1] == pytest.approx(-math.sin(th) ** 2, abs=1e-10)


def test_round_s2_connection_and_curvature_forms():
    th = 0.7
    X = np.array([[th, 1.3]])
    ff = FrameField(charts.sphere(2), lambda p: list(p))
    w = connection_forms(ff, X).array[0]
    np.testing.assert_allclose(w[0, 1], [0.0, math.cos(th)], atol=1e-12)
    curv = curvature_forms(ff, X).array[0]
    assert curv[0, 1, 0, 1] == pytest.approx(-math.sin(th), abs=1e-12)
    assert euler_form(ff, X).top()[0] == pytest.approx(math.sin(th) / (2 * math.pi), abs=1e-12)


def test_flat_torus_is_flat():
    ch = charts.flat_torus(2)
    X = RNG.uniform(0, 2 * math.pi, (5, 2))
    assert np.max(np.abs(riemann(metric_jet(ch, X)))) == 0.0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_riemann_symmetries_on_spheres(n):
    R = riemann(metric_jet(charts.sphere(n), sphere_points(n, 4)))
    assert np.max(np.abs(R + np.swapaxes(R, -4, -3))) < 1e-9
    assert np.max(np.abs(R + np.swapaxes(R, -2, -1))) < 1e-9
    assert np.max(np.abs(R - np.transpose(R, (0, 3, 4, 1, 2)))) < 1e-9
    bianchi = R + np.einsum("...abcd->...bcad", R) + np.einsum("...abcd->...cabd", R)
    assert np.max(np.abs(bianchi)) < 1e-9


@pytest.mark.parametrize("scheme", ["dual", "fd"])
def test_schemes_agree(scheme):
    X = sphere_points(3, 3)
    ch = charts.sphere(3, {"epsilon": 0.1, "axis": [0, 0, 1, 0], "height": 0.5, "width": 0.5})
    ref = riemann(metric_jet(ch, X, scheme="dual"))
    R = riemann(metric_jet(ch, X, scheme=scheme))
    assert np.max(np.abs(R - ref)) < 1e-5


@pytest.mark.parametrize("n", [2, 4])
def test_euler_form_frame_independent(n):
    ch = charts.sphere(n, {"epsilon": 0.1, "axis": [1.0] + [0.0] * n, "height": 0.3, "width": 0.5})
    X = sphere_points(n, 6)
    jet = metric_jet(ch, X)
    R = riemann(jet)
    dx = np.broadcast_to(RNG.normal(size=(n, n)), X.shape[:-1] + (n, n))
    E = orthonormal_frame(jet.g)
    ref = euler_value(FormMatrix(n, 2, curvature_on_tangents(R, E, dx))).top()
    for _ in range(3):
        Q = random_rotation(RNG, n)
        E2 = np.einsum("ij,...jk->...ik", Q, E)
        val = euler_value(FormMatrix(n, 2, curvature_on_tangents(R, E2, dx))).top()
        assert np.max(np.abs(val - ref)) <= 1e-8 * max(1.0, np.max(np.abs(ref)))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_curvature_two_routes_agree(n):
    ch = charts.sphere(n, {"epsilon": 0.1, "axis": [0.0, 1.0] + [0.0] * (n - 1), "height": 0.2, "width": 0.5})
    ff = FrameField(ch, lambda p: list(p))
    X = sphere_points(n, 5)
    a = curvature_forms(ff, X, route="tensor").array
    b = curvature_forms(ff, X, route="structure").array
    assert np.max(np.abs(a - b)) <= 1e-4


def test_complete_frame_is_orthonormal_and_pinned():
    ch = charts.sphere(3)
    X = sphere_points(3, 10)
    G = metric_matrix(ch, X)
    v = RNG.normal(size=(10, 3))
    v /= np.sqrt(np.einsum("...i,...ij,...j->...", v, G, v))[..., None]
    E = complete_frame(G, v)
    gram = np.einsum("...ai,...ij,...bj->...ab", E, G, E)
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(3), gram.shape), atol=1e-12)
    np.testing.assert_allclose(E[..., -1, :], v, atol=1e-15)
    assert np.all(np.linalg.det(E) > 0)


def test_gauss_bonnet_density_on_s2_is_area_form():
    X = sphere_points(2, 7)
    dens = euler_density(charts.sphere(2), X, np.broadcast_to(np.eye(2), (7, 2, 2)))
    np.testing.assert_allclose(dens, np.sin(X[:, 0]) / (2 * math.pi), atol=1e-12)


def test_euler_density_vanishes_in_odd_dimension():
    assert np.all(euler_density(charts.sphere(3), sphere_points(3, 2), np.eye(3)) == 0)


def test_validate_chart_accepts_catalog_charts():
    for ch in (charts.sphere(2), charts.sphere(3), charts.flat_torus(2), charts.euclidean(2)):
        validate_chart(ch)


def test_metric_outside_domain_or_degenerate_rejected():
    with pytest.raises(GeometryError):
        metric_jet(charts.sphere(2), np.array([[0.0, 1.0]]))
