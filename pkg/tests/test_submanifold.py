import math

import numpy as np
import pytest

from chern_euler import charts
from chern_euler.geometry import metric_matrix
from chern_euler.submanifold import (
    coordinate_slice,
    embedding_tangents,
    gauss_equation_check,
    half_identity_check,
    induced_metric,
    integrate_induced_euler,
    mplus_cycle,
    normal_frame,
    snm_cycle,
)
from chern_euler.transgression import TransgressionConfig, integrate_phi

RNG = np.random.default_rng(3)
CFG = TransgressionConfig(gauss=16, periodic=32)


def s2_params(count):
    return np.stack([RNG.uniform(0.3, 2.8, count), RNG.uniform(0, 2 * math.pi, count)], axis=-1)


@pytest.mark.parametrize("height", [math.pi / 2, 1.0])
def test_induced_metric_of_latitude_spheres(height):
    sub = coordinate_slice(charts.sphere(3), {0: height}, euler_char=2)
    P = s2_params(6)
    G = induced_metric(sub, P)
    r2 = math.sin(height) ** 2
    np.testing.assert_allclose(G[:, 0, 0], r2, atol=1e-14)
    np.testing.assert_allclose(G[:, 1, 1], r2 * np.sin(P[:, 0]) ** 2, atol=1e-14)
    np.testing.assert_allclose(G[:, 0, 1], 0.0, atol=1e-14)


@pytest.mark.parametrize("fixed,n", [({0: 1.0}, 3), ({0: math.pi / 2}, 2), ({1: 1.2}, 3), ({0: 0.9, 1: 2.0}, 2)])
def test_normal_frame_is_adapted_and_orthonormal(fixed, n):
    sub = coordinate_slice(charts.sphere(n), fixed)
    P = np.stack([RNG.uniform(lo + 0.3, hi - 0.3, 5) for (lo, hi, _) in sub.box], axis=-1) if sub.m \
        else np.zeros((5, 0))
    E = normal_frame(sub, P)
    x, J = embedding_tangents(sub, P)
    G = metric_matrix(sub.chart, x)
    gram = np.einsum("...ai,...ij,...bj->...ab", E, G, E)
    np.testing.assert_allclose(gram, np.broadcast_to(np.eye(n), gram.shape), atol=1e-12)
    # normal rows are orthogonal to every embedding tangent
    assert np.max(np.abs(np.einsum("...ai,...ij,...bj->...ab", J, G, E[..., sub.m:, :])), initial=0.0) < 1e-12
    assert np.all(np.linalg.det(E) > 0)


def test_point_in_s2_snm_is_the_fiber():
    sub = coordinate_slice(charts.sphere(2), {0: 1.0, 1: 2.0}, euler_char=1)
    assert sub.m == 0 and sub.codim == 2
    assert integrate_phi(snm_cycle(sub), sub.chart, CFG).value == pytest.approx(1.0, abs=1e-10)


def test_equator_circle_in_s2():
    sub = coordinate_slice(charts.sphere(2), {0: math.pi / 2}, euler_char=0)
    assert integrate_phi(mplus_cycle(sub, 1), sub.chart, CFG).value == pytest.approx(0.0, abs=1e-10)


def test_latitude_circle_normal_points_into_the_north_cap():
    theta = math.pi / 3
    sub = coordinate_slice(charts.sphere(2), {0: theta})
    assert integrate_phi(mplus_cycle(sub, 1), sub.chart, CFG).value == pytest.approx(math.cos(theta), abs=1e-8)
    assert integrate_phi(mplus_cycle(sub, -1), sub.chart, CFG).value == pytest.approx(math.cos(theta), abs=1e-8)


def test_mplus_requires_codimension_one():
    with pytest.raises(ValueError):
        mplus_cycle(coordinate_slice(charts.sphere(3), {0: 1.0, 1: 1.0}))


def test_gauss_equation_and_half_identity_on_latitude_sphere():
    sub = coordinate_slice(charts.sphere(3), {0: 1.0}, euler_char=2)
    P = s2_params(8)
    assert np.max(gauss_equation_check(sub, P)) < 1e-5
    resid, phi, half = half_identity_check(sub, P)
    assert np.max(resid) < 1e-5
    with pytest.raises(ValueError):
        half_identity_check(coordinate_slice(charts.sphere(2), {0: 1.0}), np.array([[1.0]]))


def test_induced_gauss_bonnet_equator_s2():
    sub = coordinate_slice(charts.sphere(3), {0: math.pi / 2}, euler_char=2)
    assert integrate_induced_euler(sub, CFG).value == pytest.approx(2.0, abs=1e-3)
