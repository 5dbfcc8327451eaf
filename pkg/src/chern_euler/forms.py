"""Pointwise exterior algebra on an ``n``-dimensional tangent space.

Components are stored sparsely on strictly increasing index tuples (0-based);
each component is a float or a numpy array sharing one batch shape, so a
form value can describe the same form at many quadrature nodes at once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

MAX_PERMUTATION_SIZE = 8


def permutation_sign(perm) -> int:
    """Parity of a permutation given as a sequence of distinct integers."""
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    order = sorted(perm)
    pos = {v: i for i, v in enumerate(order)}
    idx = [pos[v] for v in perm]
    for start in range(len(idx)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = idx[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class SignedPermutation:
    perm: tuple
    sign: int


def permutations_with_sign(n: int, start: int = 1) -> list[SignedPermutation]:
    """All ``n!`` permutations of ``start..start+n-1`` in lexicographic order."""
    if not 1 <= n <= MAX_PERMUTATION_SIZE:
        raise ValueError(f"permutation size {n} outside 1..{MAX_PERMUTATION_SIZE}")
    return [
        SignedPermutation(p, permutation_sign(p))
        for p in itertools.permutations(range(start, start + n))
    ]


def _sort_with_sign(idx):
    """Sort an index tuple; return (sorted tuple, sign) or (None, 0) on repeats."""
    if len(set(idx)) < len(idx):
        return None, 0
    return tuple(sorted(idx)), permutation_sign(idx)


@dataclass(frozen=True)
class AlternatingValue:
    """Value of a degree-``degree`` form on an ``dim``-dimensional space."""

    degree: int
    dim: int
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.degree < 0 or self.dim < 1:
            raise ValueError("degree must be >= 0 and dim >= 1")
        for key in self.components:
            if len(key) != self.degree or list(key) != sorted(set(key)):
                raise ValueError(f"component key {key} is not strictly increasing")
            if key and not (0 <= key[0] and key[-1] < self.dim):
                raise ValueError(f"component key {key} out of range for dim {self.dim}")

    @classmethod
    def zero(cls, degree: int, dim: int) -> "AlternatingValue":
        return cls(degree, dim, {})

    @classmethod
    def scalar(cls, c, dim: int) -> "AlternatingValue":
        return cls(0, dim, {(): c})

    @classmethod
    def covector(cls, comps) -> "AlternatingValue":
        """Degree-1 value from components along the last axis of ``comps``."""
        comps = np.asarray(comps, dtype=float)
        dim = comps.shape[-1]
        return cls(1, dim, {(a,): comps[..., a] for a in range(dim)})

    @classmethod
    def two_form(cls, matrix) -> "AlternatingValue":
        """Degree-2 value from an antisymmetric ``(..., dim, dim)`` array."""
        matrix = np.asarray(matrix, dtype=float)
        dim = matrix.shape[-1]
        return cls(
            2, dim, {(a, b): matrix[..., a, b] for a in range(dim) for b in range(a + 1, dim)}
        )

    def __getitem__(self, idx):
        """Component on an arbitrary index tuple, with the permutation sign."""
        key, sign = _sort_with_sign(tuple(idx))
        if sign == 0 or key not in self.components:
            return 0.0
        return sign * self.components[key]

    def _check(self, other):
        if not isinstance(other, AlternatingValue):
            raise TypeError("expected an AlternatingValue")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        self._check(other)
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        comps = dict(self.components)
        for k, v in other.components.items():
            comps[k] = comps[k] + v if k in comps else v
        return AlternatingValue(self.degree, self.dim, comps)

    def __neg__(self):
        return AlternatingValue(self.degree, self.dim, {k: -v for k, v in self.components.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "AlternatingValue":
        return AlternatingValue(self.degree, self.dim, {k: c * v for k, v in self.components.items()})

    __rmul__ = scale

    def __xor__(self, other):
        return wedge(self, other)

    def evaluate(self, vectors):
        """Evaluate on ``degree`` vectors (each of shape ``batch + (dim,)``).

        Uses the sum over stored increasing tuples of the component times the
        determinant of the selected vector components.
        """
        vectors = [np.asarray(v, dtype=float) for v in vectors]
        if len(vectors) != self.degree:
            raise ValueError(f"need {self.degree} vectors, got {len(vectors)}")
        if self.degree == 0:
            return self.components.get((), 0.0)
        mat = np.stack(vectors, axis=-2)  # (..., degree, dim)
        total = 0.0
        for key, c in self.components.items():
            total = total + c * np.linalg.det(mat[..., list(key)])
        return total

    def top(self):
        """The single component of a top-degree value."""
        if self.degree != self.dim:
            raise ValueError("top() needs degree == dim")
        return self.components.get(tuple(range(self.dim)), 0.0)


def wedge(a: AlternatingValue, b: AlternatingValue) -> AlternatingValue:
    """Exterior product; the zero value when the degree exceeds the dimension."""
    a._check(b)
    deg = a.degree + b.degree
    if deg > a.dim:
        return AlternatingValue.zero(deg, a.dim)
    comps: dict = {}
    for ka, va in a.components.items():
        for kb, vb in b.components.items():
            key, sign = _sort_with_sign(ka + kb)
            if sign == 0:
                continue
            term = va * vb if sign > 0 else -(va * vb)
            comps[key] = comps[key] + term if key in comps else term
    return AlternatingValue(deg, a.dim, comps)


def wedge_all(factors, dim: int) -> AlternatingValue:
    out = AlternatingValue.scalar(1.0, dim)
    for f in factors:
        out = wedge(out, f)
        if not out.components:
            break
    return out


def alternation_sum(tensor_fn, degree: int, dim: int, vectors):
    """Brute-force alternation ``sum_sigma sgn(sigma) T(v_sigma(1), ...)``.

    Independent of the sparse storage; used as a test oracle.
    """
    total = 0.0
    for sp in permutations_with_sign(degree, start=0):
        total = total + sp.sign * tensor_fn([vectors[i] for i in sp.perm])
    return total


def double_factorial(k: int) -> int:
    """``k!!`` with the conventions ``0!! = (-1)!! = 1``."""
    if k <= 0:
        return 1
    return math.prod(range(k, 0, -2))
