"""The secondary (transgression) form on unit sphere bundles and its integrals.

A point of the unit sphere bundle is a pair ``(x, v)`` with ``|v|_g = 1``.  On
a parameterized cell ``p -> (x(p), v(p))`` we attach a positively oriented
orthonormal frame with last vector ``e_n = v``.  Only two kinds of forms enter
the transgression form:

* ``w_{a n}(d_i) = g(nabla_i e_a, v) = -g(e_a, nabla_i v)``, which needs the
  covariant derivative of the pinned vector alone;
* ``W_{ab}(d_i, d_j) = Riem(d_i x, d_j x, e_a, e_b)``, horizontal, so only
  the base motion of the cell enters.

Everything else about the completing vectors ``e_1..e_{n-1}`` is irrelevant,
which is why they are chosen pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ad
from .charts import sphere_embedding
from .forms import AlternatingValue, double_factorial, permutations_with_sign, wedge_all
from .geometry import (
    Chart,
    FormMatrix,
    christoffel,
    complete_frame,
    covariant_derivative,
    curvature_on_tangents,
    euler_density,
    gram_schmidt_rows,
    metric_entries,
    metric_jet,
    metric_matrix,
    orthonormal_frame,
    riemann,
)
from .quadrature import DEFAULT_GAUSS, DEFAULT_PERIODIC, IntegralResult, integrate_box


def sphere_area(n: int) -> float:
    """Area of the unit ``(n-1)``-sphere in R^n."""
    if n < 2:
        raise ValueError("sphere_area needs n >= 2")
    m = n // 2
    if n % 2 == 0:
        return (2 * math.pi) ** m / double_factorial(n - 2)
    return 2 * (2 * math.pi) ** m / double_factorial(n - 2)


def phi_coefficient(n: int, k: int) -> float:
    """Weight of the ``k``-th term in the transgression form of an ``n``-manifold."""
    return (
        (-1) ** k
        / (double_factorial(n - 2) * sphere_area(n))
        / (2**k * math.factorial(k) * double_factorial(n - 2 * k - 1))
    )


def phi_k_value(omega: FormMatrix, curv: FormMatrix, k: int) -> AlternatingValue:
    """Literal permutation sum for the ``k``-th term.

    Only the last column ``omega[a, n-1]`` of the connection matrix and the
    leading ``(n-1) x (n-1)`` block of the curvature matrix are read.
    """
    n = omega.dim
    if not 0 <= k <= (n - 1) // 2:
        raise ValueError(f"k={k} outside 0..{(n - 1) // 2}")
    dim = omega.cell_dim
    if n == 1:
        return AlternatingValue.scalar(1.0, dim)
    om = [omega.entry(a, n - 1) for a in range(n - 1)]
    cu = {}
    total = AlternatingValue.zero(n - 1, dim)
    for sp in permutations_with_sign(n - 1, start=0):
        p = sp.perm
        factors = []
        for q in range(k):
            key = (p[2 * q], p[2 * q + 1])
            if key not in cu:
                cu[key] = curv.entry(*key)
            factors.append(cu[key])
        factors.extend(om[p[q]] for q in range(2 * k, n - 1))
        term = wedge_all(factors, dim)
        if term.components:
            total = total + term.scale(float(sp.sign))
    return total


def phi_value(omega: FormMatrix, curv: FormMatrix) -> AlternatingValue:
    """Weighted sum of the ``k``-terms: the transgression form."""
    n = omega.dim
    total = AlternatingValue.zero(n - 1, omega.cell_dim)
    for k in range((n - 1) // 2 + 1):
        total = total + phi_k_value(omega, curv, k).scale(phi_coefficient(n, k))
    return total


@dataclass(frozen=True)
class SphereBundlePoint:
    x: np.ndarray
    v: np.ndarray

    def check(self, chart: Chart, tol: float = 1e-9) -> None:
        G = metric_matrix(chart, self.x)
        nrm = np.sqrt(np.einsum("...i,...ij,...j->...", self.v, G, self.v))
        if np.max(np.abs(nrm - 1.0)) > tol:
            raise ValueError("sphere bundle point is not a unit vector")


@dataclass
class Cell:
    """One parameterized piece of a cycle.

    ``map`` takes a list of ``k`` parameter scalars and returns ``(x, v)`` as
    lists of ``n`` scalars.  With ``scheme="dual"`` it must be written with
    :mod:`ad` functions; ``"fd"`` uses central differences.
    """

    box: list
    map: Callable
    orientation: int = 1
    weight: int = 1
    scheme: str = "fd"
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.box)


@dataclass
class Cycle:
    degree: int
    cells: list = field(default_factory=list)
    label: str = ""

    def __neg__(self):
        return Cycle(self.degree, [_replace(c, weight=-c.weight) for c in self.cells], f"-{self.label}")

    def __add__(self, other):
        if other.degree != self.degree:
            raise ValueError("cannot add cycles of different degree")
        return Cycle(self.degree, self.cells + other.cells, f"{self.label}+{other.label}")

    def __sub__(self, other):
        return self + (-other)


def _replace(cell: Cell, **kw) -> Cell:
    d = dict(box=cell.box, map=cell.map, orientation=cell.orientation, weight=cell.weight,
             scheme=cell.scheme, label=cell.label)
    d.update(kw)
    return Cell(**d)


@dataclass
class TransgressionConfig:
    scheme: str = "auto"
    gauss: int = DEFAULT_GAUSS
    periodic: int = DEFAULT_PERIODIC
    panels: int = 1
    tol: float = 1e-6
    fd_step: float = 1e-6

    def orders(self, box):
        return [self.periodic if k == "periodic" else self.gauss for (_, _, k) in box]


def _stack(vals, batch):
    return np.stack([np.broadcast_to(ad.value(c), batch) for c in vals], axis=-1)


def _params(P):
    return [P[..., i] for i in range(P.shape[-1])]


def cell_tangents(cell: Cell, P, h: float = 1e-6):
    """``(x, v, dx, dv)`` with ``dx[..., a, :] = d x / d p_a`` at parameters ``P``."""
    P = np.asarray(P, dtype=float)
    batch = P.shape[:-1]
    k = P.shape[-1]
    if cell.scheme == "dual":
        x, v = cell.map(ad.seed(P, order=1))
        dx = np.stack([ad.grad(c, batch, k) for c in x], axis=-1)
        dv = np.stack([ad.grad(c, batch, k) for c in v], axis=-1)
        return _stack(x, batch), _stack(v, batch), dx, dv
    x, v = cell.map(_params(P))
    x, v = _stack(x, batch), _stack(v, batch)
    dx, dv = [], []
    for a in range(k):
        step = np.zeros_like(P)
        step[..., a] = h
        xp, vp = cell.map(_params(P + step))
        xm, vm = cell.map(_params(P - step))
        dx.append((_stack(xp, batch) - _stack(xm, batch)) / (2 * h))
        dv.append((_stack(vp, batch) - _stack(vm, batch)) / (2 * h))
    if k == 0:
        return x, v, np.zeros(batch + (0, x.shape[-1])), np.zeros(batch + (0, x.shape[-1]))
    return x, v, np.stack(dx, axis=-2), np.stack(dv, axis=-2)


def bundle_forms(chart: Chart, x, v, dx, dv, scheme: str = "auto", frame=None):
    """Connection and curvature matrices pulled back to a cell through ``(x, v)``.

    Returns ``(omega, curv, E)``; ``omega`` only carries the pinned column.
    """
    n = chart.dim
    k = dx.shape[-2]
    need_curv = n >= 3 and bool(np.any(dx != 0.0))
    jet = metric_jet(chart, x, scheme=scheme, order=2 if need_curv else 1)
    gam = christoffel(jet)
    E = complete_frame(jet.g, v, chart.orientation) if frame is None else frame
    nv = covariant_derivative(gam, dx, v, dv)  # (..., k, n)
    w = -np.einsum("...ai,...ij,...cj->...ac", E[..., : n - 1, :], jet.g, nv)  # (..., a, cell)
    batch = x.shape[:-1]
    omega = np.zeros(batch + (n, n, k))
    omega[..., : n - 1, n - 1, :] = w
    omega[..., n - 1, : n - 1, :] = -w
    if need_curv:
        curv = curvature_on_tangents(riemann(jet), E, dx)
    else:
        curv = np.zeros(batch + (n, n, k, k))
    return FormMatrix(n, 1, omega), FormMatrix(n, 2, curv), E


def phi_on_tangents(chart: Chart, x, v, dx, dv, scheme: str = "auto") -> AlternatingValue:
    """Transgression form at ``(x, v)`` as a form on the cell directions."""
    omega, curv, _ = bundle_forms(chart, x, v, dx, dv, scheme)
    return phi_value(omega, curv)


def cell_integrand(cell: Cell, chart: Chart, cfg: Optional[TransgressionConfig] = None) -> Callable:
    """Pulled-back density ``P -> Phi(d_1, ..., d_k)`` times orientation and weight."""
    cfg = cfg or TransgressionConfig()

    def f(P):
        x, v, dx, dv = cell_tangents(cell, P, cfg.fd_step)
        phi = phi_on_tangents(chart, x, v, dx, dv, cfg.scheme)
        return cell.orientation * cell.weight * np.broadcast_to(phi.top(), P.shape[:-1])

    return f


def pullback_phi_on_cycle(cycle: Cycle, chart: Chart, cfg: Optional[TransgressionConfig] = None):
    if cycle.degree != chart.dim - 1:
        raise ValueError(f"cycle degree {cycle.degree} != n - 1 = {chart.dim - 1}")
    return [cell_integrand(c, chart, cfg) for c in cycle.cells]


def integrate_phi(cycle: Cycle, chart: Chart, cfg: Optional[TransgressionConfig] = None) -> IntegralResult:
    """Integral of the transgression form over a cycle (sum over weighted cells)."""
    cfg = cfg or TransgressionConfig()
    total, err, used = 0.0, 0.0, 0
    for cell, f in zip(cycle.cells, pullback_phi_on_cycle(cycle, chart, cfg)):
        res = integrate_box(f, cell.box, cfg.orders(cell.box), panels=cfg.panels)
        total += res.value
        err += res.error_estimate
        used += res.nodes_used
    return IntegralResult(total, err, used, err <= cfg.tol)


# -- unit spheres and fibers ------------------------------------------------------


def unit_sphere_box(q: int):
    """Parameter box of the unit ``(q-1)``-sphere in R^q (q >= 2)."""
    if q < 2:
        raise ValueError("unit sphere parameterization needs q >= 2")
    return [(0.0, math.pi, "gauss")] * (q - 2) + [(0.0, 2 * math.pi, "periodic")]


def unit_sphere_point(angles):
    return sphere_embedding(list(angles))


def unit_sphere_orientation(q: int) -> int:
    """Sign making the angle parameterization agree with the boundary orientation of the ball."""
    a = np.array([[1.1] * (q - 2) + [0.7]])
    u = unit_sphere_point(ad.seed(a, order=1))
    mat = np.stack(
        [np.array([ad.value(c)[0] for c in u])] + [np.array([c.g[0, i] for c in u]) for i in range(q - 1)]
    )
    return int(np.sign(np.linalg.det(mat)))


def fiber_cycle(chart: Chart, x, scheme: str = "dual") -> Cycle:
    """The fiber sphere of the unit tangent bundle at ``x``, oriented as a ball boundary."""
    x = np.asarray(x, dtype=float)
    n = chart.dim
    F = orthonormal_frame(metric_matrix(chart, x), chart.orientation)

    def cmap(p):
        u = unit_sphere_point(p)
        v = [sum(u[i] * F[i, c] for i in range(n)) for c in range(n)]
        return [float(c) for c in x], v

    cell = Cell(unit_sphere_box(n), cmap, unit_sphere_orientation(n), 1, scheme, f"fiber@{x.tolist()}")
    return Cycle(n - 1, [cell], "fiber")


# -- the identity dPhi = -Omega ------------------------------------------------------


def _patch_integrand_parts(chart: Chart, x0, a0, A, B, q):
    """Phi components on an n-dimensional patch of the sphere bundle (dual tangents)."""
    n = chart.dim

    def pmap(p):
        x = [x0[i] + sum(A[i, j] * p[j] for j in range(n)) for i in range(n)]
        ang = [a0[i] + sum(B[i, j] * p[j] for j in range(n)) for i in range(n - 1)]
        rows = gram_schmidt_rows(metric_entries(chart, x), orientation=chart.orientation)
        u = unit_sphere_point(ang)
        v = [sum(u[i] * rows[i][c] for i in range(n)) for c in range(n)]
        return x, v

    cell = Cell([(0, 1, "gauss")] * n, pmap, scheme="dual")
    x, v, dx, dv = cell_tangents(cell, q)
    return x, dx, phi_on_tangents(chart, x, v, dx, dv)


def check_transgression_identity(chart: Chart, x0, a0, A=None, B=None, h: float = 1e-4, rng=None):
    """Relative residual of ``dPhi + pi^* Omega`` on a random n-patch through ``(x0, v(a0))``.

    ``x0`` has shape ``(N, n)`` and ``a0`` shape ``(N, n-1)`` (fiber angles).
    The patch is ``q -> (x0 + A q, a0 + B q)``; ``dPhi`` is differentiated
    by central differences of step ``h``.  Returns ``(residual, dphi, omega)``.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    a0 = np.atleast_2d(np.asarray(a0, dtype=float))
    n = chart.dim
    rng = rng or np.random.default_rng(0)
    A = rng.normal(size=(n, n)) / math.sqrt(n) if A is None else np.asarray(A, dtype=float)
    B = rng.normal(size=(n - 1, n)) / math.sqrt(n) if B is None else np.asarray(B, dtype=float)
    N = x0.shape[0]
    xs = [x0[:, i] for i in range(n)]
    as_ = [a0[:, i] for i in range(n - 1)]
    dphi = np.zeros(N)
    scale = np.zeros(N)
    for i in range(n):
        q = np.zeros((N, n))
        q[:, i] = h
        _, _, phi_p = _patch_integrand_parts(chart, xs, as_, A, B, q)
        _, _, phi_m = _patch_integrand_parts(chart, xs, as_, A, B, -q)
        key = tuple(j for j in range(n) if j != i)
        deriv = (np.asarray(phi_p.components.get(key, 0.0)) - np.asarray(phi_m.components.get(key, 0.0))) / (2 * h)
        dphi = dphi + (-1) ** i * deriv
        scale = scale + np.abs(deriv)
    x, dx, _ = _patch_integrand_parts(chart, xs, as_, A, B, np.zeros((N, n)))
    omega = euler_density(chart, x, dx)
    scale = np.maximum(scale + np.abs(omega), 1e-300)
    return np.abs(dphi + omega) / scale, dphi, omega
