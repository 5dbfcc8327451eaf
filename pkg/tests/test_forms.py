import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chern_euler.forms import (
    AlternatingValue,
    alternation_sum,
    double_factorial,
    permutation_sign,
    permutations_with_sign,
    wedge,
    wedge_all,
)

TOL = 1e-12
DIM = 4


def random_form(rng, degree, dim=DIM):
    from itertools import combinations

    return AlternatingValue(degree, dim, {k: float(rng.normal()) for k in combinations(range(dim), degree)})


def close(a: AlternatingValue, b: AlternatingValue, tol=TOL):
    keys = set(a.components) | set(b.components)
    return all(abs(a[k] - b[k]) <= tol * (1 + abs(a[k])) for k in keys)


seeds = st.integers(min_value=0, max_value=2**32 - 1)
degrees = st.integers(min_value=0, max_value=DIM)


def test_permutation_signs():
    assert permutation_sign((0, 1, 2)) == 1
    assert permutation_sign((1, 0, 2)) == -1
    assert permutation_sign((2, 0, 1)) == 1
    perms = permutations_with_sign(4)
    assert len(perms) == 24
    assert sum(p.sign for p in perms) == 0
    with pytest.raises(ValueError):
        permutations_with_sign(9)


def test_double_factorial():
    assert [double_factorial(k) for k in (-1, 0, 1, 2, 3, 4, 5, 6, 7)] == [1, 1, 1, 2, 3, 8, 15, 48, 105]


def test_invalid_keys_rejected():
    with pytest.raises(ValueError):
        AlternatingValue(2, 3, {(1, 0): 1.0})
    with pytest.raises(ValueError):
        AlternatingValue(1, 2, {(2,): 1.0})


def test_index_sign_on_permuted_keys():
    w = AlternatingValue(2, 3, {(0, 2): 3.0})
    assert w[(2, 0)] == -3.0
    assert w[(0, 0)] == 0.0


@settings(max_examples=60, deadline=None)
@given(seeds, degrees, degrees, degrees)
def test_wedge_associative(seed, p, q, r):
    rng = np.random.default_rng(seed)
    a, b, c = random_form(rng, p), random_form(rng, q), random_form(rng, r)
    assert close((a ^ b) ^ c, a ^ (b ^ c))


@settings(max_examples=60, deadline=None)
@given(seeds, degrees, degrees)
def test_wedge_graded_commutative(seed, p, q):
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, p), random_form(rng, q)
    assert close(a ^ b, (b ^ a).scale((-1) ** (p * q)))


@settings(max_examples=60, deadline=None)
@given(seeds, degrees, degrees)
def test_wedge_bilinear(seed, p, q):
    rng = np.random.default_rng(seed)
    a1, a2, b = random_form(rng, p), random_form(rng, p), random_form(rng, q)
    s = float(rng.normal())
    assert close((a1 + a2.scale(s)) ^ b, (a1 ^ b) + (a2 ^ b).scale(s))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_odd_form_squares_to_zero(seed):
    rng = np.random.default_rng(seed)
    a = random_form(rng, 1)
    assert all(abs(v) <= TOL for v in (a ^ a).components.values())


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=DIM))
def test_evaluate_matches_alternation(seed, k):
    rng = np.random.default_rng(seed)
    covs = [rng.normal(size=DIM) for _ in range(k)]
    form = wedge_all([AlternatingValue.covector(c) for c in covs], DIM)
    vecs = [rng.normal(size=DIM) for _ in range(k)]
    # the wedge of covectors evaluates to the determinant of pairings
    expected = np.linalg.det(np.array([[c @ v for v in vecs] for c in covs]))
    brute = alternation_sum(lambda vs: math.prod(c @ v for c, v in zip(covs, vs)), k, DIM, vecs)
    assert abs(form.evaluate(vecs) - expected) <= TOL * (1 + abs(expected))
    assert abs(brute - expected) <= TOL * (1 + abs(expected))


def test_two_form_from_matrix_and_top():
    M = np.array([[0.0, 2.0], [-2.0, 0.0]])
    w = AlternatingValue.two_form(M)
    assert w.top() == 2.0
    assert w.evaluate([np.array([1.0, 0.0]), np.array([0.0, 1.0])]) == pytest.approx(2.0, abs=TOL)


def test_wedge_beyond_dimension_is_zero():
    a = AlternatingValue.covector([1.0, 2.0])
    w = wedge(wedge(a, a), a)
    assert w.degree == 3 and not w.components


def test_batched_components():
    a = AlternatingValue.covector(np.array([[1.0, 0.0], [0.0, 1.0]]))
    b = AlternatingValue.covector(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose((a ^ b).top(), [1.0, -1.0], atol=TOL)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        AlternatingValue.covector([1.0, 2.0]) ^ AlternatingValue.covector([1.0, 2.0, 3.0])
