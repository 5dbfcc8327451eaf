"""Metrics in coordinates, Levi-Civita data, orthonormal frames and curvature.

Conventions (0-based indices throughout the code):

* ``dg[..., i, j, k] = d_k g_ij`` and ``ddg[..., i, j, k, l] = d_k d_l g_ij``.
* ``gamma[..., k, i, j]`` is the Christoffel symbol with upper index ``k``.
* ``riem[..., a, b, c, d] = g(R(d_a, d_b) d_c, d_d)`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``.
* Frames are arrays ``E[..., i, :]`` whose rows are the frame vectors in
  coordinate components.  Connection forms follow ``nabla e_i = sum_j w_ij e_j``,
  so ``w_ij(xi) = g(nabla_xi e_i, e_j)`` and the curvature forms are
  ``W_ij(xi, eta) = Riem(xi, eta, e_i, e_j) = dw_ij - sum_k w_ik ^ w_kj``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import ad
from .forms import AlternatingValue, permutations_with_sign

FD_STEP = 1e-5
FD_STEP_SECOND = 1e-4


class GeometryError(ValueError):
    """Singular or non-positive metric, or an invalid geometric input."""


class StencilError(GeometryError):
    """A finite-difference stencil would leave the chart domain."""


class PivotError(GeometryError):
    """Gram-Schmidt met a candidate vector (numerically) in the span of earlier rows."""


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    periodic: bool = False

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class Chart:
    """A coordinate patch carrying a Riemannian metric.

    ``metric`` maps a list of ``n`` coordinate scalars (arrays or jets) to a
    nested ``n x n`` list of scalars; it must be written with :mod:`ad`
    functions when ``dual`` is true.  ``embedding`` optionally maps the same
    coordinates into a Euclidean space (used by sphere families).
    """

    name: str
    axes: tuple
    metric: Callable
    orientation: int = 1
    dual: bool = True
    embedding: Optional[Callable] = None
    euler_char: Optional[int] = None
    exclusion: float = 1e-6
    base: Optional["Chart"] = None
    params: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def box(self):
        """Integration box covering the whole chart."""
        return [(a.lo, a.hi, "periodic" if a.periodic else "gauss") for a in self.axes]


@dataclass
class MetricJet2:
    point: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    ddg: Optional[np.ndarray] = None


# -- metric evaluation ------------------------------------------------------------


def _coords(X):
    X = np.asarray(X, dtype=float)
    return [X[..., i] for i in range(X.shape[-1])]


def metric_matrix(chart: Chart, X) -> np.ndarray:
    """Metric values ``(..., n, n)`` at points ``X`` of shape ``(..., n)``."""
    X = np.asarray(X, dtype=float)
    batch = X.shape[:-1]
    entries = chart.metric(_coords(X))
    n = chart.dim
    G = np.empty(batch + (n, n))
    for i in range(n):
        for j in range(n):
            G[..., i, j] = np.broadcast_to(ad.value(entries[i][j]), batch)
    return G


def metric_entries(chart: Chart, x):
    """Nested metric entries at coordinates given as a list of scalars or jets."""
    return chart.metric(list(x))


def _check_spd(G):
    if not np.all(np.isfinite(G)):
        raise GeometryError("metric has non-finite entries")
    if np.max(np.abs(G - np.swapaxes(G, -1, -2)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(G))):
        raise GeometryError("metric is not symmetric")
    ev = np.linalg.eigvalsh(G)
    if np.any(ev[..., 0] <= 1e-15 * np.abs(ev[..., -1])):
        raise GeometryError("metric is not positive definite")


def _jet_dual(chart, X, order):
    X = np.asarray(X, dtype=float)
    batch = X.shape[:-1]
    n = chart.dim
    entries = chart.metric(ad.seed(X, order=order))
    g = np.empty(batch + (n, n))
    dg = np.empty(batch + (n, n, n))
    ddg = np.empty(batch + (n, n, n, n)) if order == 2 else None
    for i in range(n):
        for j in range(n):
            e = entries[i][j]
            g[..., i, j] = np.broadcast_to(ad.value(e), batch)
            dg[..., i, j, :] = ad.grad(e, batch, n)
            if order == 2:
                ddg[..., i, j, :, :] = ad.hess(e, batch, n)
    return MetricJet2(X, g, dg, ddg)


def _stencil_check(chart, X, h):
    for k, axis in enumerate(chart.axes):
        if axis.periodic:
            continue
        xk = X[..., k]
        if np.any(xk - 2 * h[..., k] < axis.lo) or np.any(xk + 2 * h[..., k] > axis.hi):
            raise StencilError(f"point too close to the boundary of axis {k}")


def _jet_fd(chart, X, order):
    X = np.asarray(X, dtype=float)
    n = chart.dim
    h1 = FD_STEP * (1.0 + np.abs(X))
    h2 = FD_STEP_SECOND * (1.0 + np.abs(X))
    _stencil_check(chart, X, h2 if order == 2 else h1)
    g = metric_matrix(chart, X)
    dg = np.empty(g.shape + (n,))
    for k in range(n):
        step = np.zeros_like(X)
        step[..., k] = h1[..., k]
        dg[..., k] = (metric_matrix(chart, X + step) - metric_matrix(chart, X - step)) / (
            2 * h1[..., k, None, None]
        )
    ddg = None
    if order == 2:
        ddg = np.empty(g.shape + (n, n))
        for k in range(n):
            ek = np.zeros_like(X)
            ek[..., k] = h2[..., k]
            hk = h2[..., k, None, None]
            ddg[..., k, k] = (
                metric_matrix(chart, X + ek) - 2 * g + metric_matrix(chart, X - ek)
            ) / (hk * hk)
            for l in range(k + 1, n):
                el = np.zeros_like(X)
                el[..., l] = h2[..., l]
                hl = h2[..., l, None, None]
                mixed = (
                    metric_matrix(chart, X + ek + el)
                    - metric_matrix(chart, X + ek - el)
                    - metric_matrix(chart, X - ek + el)
                    + metric_matrix(chart, X - ek - el)
                ) / (4 * hk * hl)
                ddg[..., k, l] = mixed
                ddg[..., l, k] = mixed
    return MetricJet2(X, g, dg, ddg)


def metric_jet(chart: Chart, X, scheme: str = "auto", order: int = 2) -> MetricJet2:
    """Metric with first (and second) coordinate derivatives at points ``X``.

    ``scheme`` is ``"dual"`` (forward-mode jets), ``"fd"`` (central
    differences) or ``"auto"`` (dual when the chart supports it).
    """
    if scheme == "auto":
        scheme = "dual" if chart.dual else "fd"
    if scheme == "dual":
        if not chart.dual:
            raise GeometryError(f"chart {chart.name} does not support dual evaluation")
        jet = _jet_dual(chart, X, order)
    elif scheme == "fd":
        jet = _jet_fd(chart, X, order)
    else:
        raise ValueError(f"unknown differentiation scheme {scheme!r}")
    _check_spd(jet.g)
    return jet


def christoffel(jet: MetricJet2) -> np.ndarray:
    """Levi-Civita symbols ``gamma[..., k, i, j]``."""
    ginv = np.linalg.inv(jet.g)
    dg = jet.dg
    # s[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    s = np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg) - np.einsum("...ijl->...lij", dg)
    return 0.5 * np.einsum("...kl,...lij->...kij", ginv, s)


def christoffel_derivative(jet: MetricJet2) -> np.ndarray:
    """``dgamma[..., k, i, j, m] = d_m gamma^k_ij``."""
    if jet.ddg is None:
        raise GeometryError("second metric derivatives required")
    ginv = np.linalg.inv(jet.g)
    dg, ddg = jet.dg, jet.ddg
    s = np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg) - np.einsum("...ijl->...lij", dg)
    ds = (
        np.einsum("...jlim->...lijm", ddg)
        + np.einsum("...iljm->...lijm", ddg)
        - np.einsum("...ijlm->...lijm", ddg)
    )
    dginv = -np.einsum("...ka,...abm,...bl->...klm", ginv, dg, ginv)
    return 0.5 * (
        np.einsum("...klm,...lij->...kijm", dginv, s) + np.einsum("...kl,...lijm->...kijm", ginv, ds)
    )


def riemann(jet: MetricJet2) -> np.ndarray:
    """Fully covariant curvature ``riem[..., a, b, c, d] = g(R(d_a, d_b) d_c, d_d)``."""
    gam = christoffel(jet)
    dgam = christoffel_derivative(jet)
    # up[e, c, a, b] = d_a G^e_bc - d_b G^e_ac + G^e_af G^f_bc - G^e_bf G^f_ac
    up = (
        np.einsum("...ebca->...ecab", dgam)
        - np.einsum("...eacb->...ecab", dgam)
        + np.einsum("...eaf,...fbc->...ecab", gam, gam)
        - np.einsum("...ebf,...fac->...ecab", gam, gam)
    )
    return np.einsum("...de,...ecab->...abcd", jet.g, up)


def covariant_derivative(gamma, dx, v, dv):
    """``nabla_a v = d_a v + gamma(d_a x, v)`` for tangents ``dx[..., a, :]``."""
    return dv + np.einsum("...kij,...ai,...j->...ak", gamma, dx, v)


# -- frames ----------------------------------------------------------------------------


def _inner(G, u, w):
    return np.einsum("...i,...ij,...j->...", u, G, w)


def complete_frame(G, v, orientation: int = 1) -> np.ndarray:
    """Positively oriented orthonormal frame whose last row is the unit vector ``v``.

    Completion vectors are picked per point by largest Gram-Schmidt residual
    among the coordinate basis vectors, so the result is well defined
    everywhere but need not vary smoothly between points.
    """
    G = np.asarray(G, dtype=float)
    v = np.asarray(v, dtype=float)
    n = G.shape[-1]
    batch = G.shape[:-2]
    rows = [v]
    cand = np.broadcast_to(np.eye(n), batch + (n, n)).copy()  # (..., candidate, comp)
    for _ in range(n - 1):
        for b in rows:
            coef = np.einsum("...ci,...ij,...j->...c", cand, G, b)
            cand = cand - coef[..., None] * b[..., None, :]
        norms = np.sqrt(np.maximum(np.einsum("...ci,...ij,...cj->...c", cand, G, cand), 0.0))
        best = np.argmax(norms, axis=-1)
        pick = np.take_along_axis(cand, best[..., None, None], axis=-2)[..., 0, :]
        pick = pick / np.take_along_axis(norms, best[..., None], axis=-1)
        rows.append(pick)
    E = np.stack(rows[1:] + rows[:1], axis=-2)
    sign = np.sign(np.linalg.det(E)) * orientation
    E[..., 0, :] *= sign[..., None]
    return E


def orthonormal_frame(G, orientation: int = 1) -> np.ndarray:
    """Gram-Schmidt of the coordinate basis in order, orientation fixed by row 0."""
    G = np.asarray(G, dtype=float)
    n = G.shape[-1]
    rows = []
    for i in range(n):
        u = np.zeros(G.shape[:-1])
        u[..., i] = 1.0
        for b in rows:
            u = u - _inner(G, u, b)[..., None] * b
        u = u / np.sqrt(_inner(G, u, u))[..., None]
        rows.append(u)
    E = np.stack(rows, axis=-2)
    sign = np.sign(np.linalg.det(E)) * orientation
    E[..., 0, :] *= sign[..., None]
    return E


def _ad_inner(G, u, w):
    n = len(u)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total = total + u[i] * G[i][j] * w[j]
    return total


def gram_schmidt_rows(G, pin=None, pivot: Optional[Sequence[int]] = None, orientation: int = 1, tol: float = 1e-8):
    """Fixed-pivot Gram-Schmidt on nested lists of scalars or jets.

    Returns rows ``e_0..e_{n-1}`` (lists of ``n`` scalars).  When ``pin`` is
    given it becomes the last row; the remaining rows come from the
    coordinate vectors in ``pivot`` order.  Row 0 is flipped, if needed, for
    positive orientation, never the pinned row.
    """
    n = len(G)
    pivot = list(range(n)) if pivot is None else list(pivot)
    basis = []
    if pin is not None:
        basis.append(list(pin))
    for c in pivot:
        if len(basis) == n:
            break
        u = [1.0 if k == c else 0.0 for k in range(n)]
        for b in basis:
            coef = _ad_inner(G, u, b)
            u = [u[k] - coef * b[k] for k in range(n)]
        nrm = ad.sqrt(_ad_inner(G, u, u))
        if np.min(ad.value(nrm)) < tol:
            raise PivotError(f"coordinate vector {c} is degenerate for the current pivot order")
        basis.append([u[k] / nrm for k in range(n)])
    if len(basis) < n:
        raise PivotError("pivot order does not span the tangent space")
    rows = basis[1:] + basis[:1] if pin is not None else basis
    vals = np.stack([np.stack(np.broadcast_arrays(*[ad.value(c) for c in r]), axis=-1) for r in rows], axis=-2)
    sign = np.sign(np.linalg.det(vals)) * orientation
    rows[0] = [c * sign for c in rows[0]]
    return rows


def rows_to_array(rows) -> np.ndarray:
    return np.stack([np.stack(np.broadcast_arrays(*[ad.value(c) for c in r]), axis=-1) for r in rows], axis=-2)


def gram_schmidt_frame(chart: Chart, X, pin=None, pivot=None) -> np.ndarray:
    """Orthonormal frame array at points ``X`` (rows g-orthonormal, det*orientation > 0)."""
    X = np.asarray(X, dtype=float)
    G = metric_matrix(chart, X)
    n = chart.dim
    if pin is not None:
        pin = np.asarray(pin, dtype=float)
        nrm = np.sqrt(_inner(G, pin, pin))
        if np.max(np.abs(nrm - 1.0)) > 1e-9:
            raise GeometryError("pinned vector is not g-unit")
        pin = [pin[..., k] for k in range(n)]
    Gl = [[G[..., i, j] for j in range(n)] for i in range(n)]
    return rows_to_array(gram_schmidt_rows(Gl, pin, pivot, chart.orientation))


# -- frame fields and connection/curvature forms ----------------------------------


@dataclass
class FormMatrix:
    """Matrix of form values; ``array[..., i, j, ...]`` holds the raw components.

    For degree 1 ``array`` has shape ``(..., n, n, k)`` (value on each cell
    direction), for degree 2 ``(..., n, n, k, k)``.
    """

    dim: int
    degree: int
    array: np.ndarray

    def entry(self, i: int, j: int) -> AlternatingValue:
        if self.degree == 1:
            return AlternatingValue.covector(self.array[..., i, j, :])
        return AlternatingValue.two_form(self.array[..., i, j, :, :])

    @property
    def cell_dim(self) -> int:
        return self.array.shape[-1]

    def antisymmetry_residual(self) -> float:
        a = self.array
        return float(np.max(np.abs(a + np.swapaxes(a, -1 - self.degree - 1, -1 - self.degree))))


@dataclass
class FrameField:
    """A differentiable frame assignment over a parameter cell.

    ``base`` maps a list of parameter scalars to chart coordinates; ``pin``
    (optional) maps ``(params, coords)`` to the prescribed last frame vector.
    Both must be written with :mod:`ad` functions for the dual scheme.
    The pivot order is fixed for the whole cell.
    """

    chart: Chart
    base: Callable
    pin: Optional[Callable] = None
    pivot: Optional[Sequence[int]] = None

    def _rows(self, p):
        x = self.base(p)
        G = metric_entries(self.chart, x)
        v = self.pin(p, x) if self.pin is not None else None
        return x, gram_schmidt_rows(G, v, self.pivot, self.chart.orientation)

    def frame(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        _, rows = self._rows(_coords(P))
        return rows_to_array(rows)

    def point(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        x = self.base(_coords(P))
        return np.stack(np.broadcast_arrays(*[ad.value(c) for c in x]), axis=-1)

    def derivatives(self, P, scheme: str = "auto", h: float = 1e-6):
        """Return ``(x, dx, E, dE)`` with ``dx[..., a, :]`` and ``dE[..., a, i, :]``."""
        P = np.asarray(P, dtype=float)
        k = P.shape[-1]
        batch = P.shape[:-1]
        if scheme == "auto":
            scheme = "dual" if self.chart.dual else "fd"
        if scheme == "dual":
            x, rows = self._rows(ad.seed(P, order=1))
            n = len(x)
            xv = np.stack([np.broadcast_to(ad.value(c), batch) for c in x], axis=-1)
            dx = np.stack([ad.grad(c, batch, k) for c in x], axis=-1)  # (..., k, n)
            E = rows_to_array(rows)
            dE = np.stack(
                [np.stack([ad.grad(c, batch, k) for c in r], axis=-1) for r in rows], axis=-2
            )  # (..., k, i, comp)
            return xv, dx, E, dE
        xv, E = self.point(P), self.frame(P)
        dx, dE = [], []
        for a in range(k):
            step = np.zeros_like(P)
            step[..., a] = h
            dx.append((self.point(P + step) - self.point(P - step)) / (2 * h))
            dE.append((self.frame(P + step) - self.frame(P - step)) / (2 * h))
        return xv, np.stack(dx, axis=-2), E, np.stack(dE, axis=-3)


def connection_from_derivatives(chart: Chart, x, dx, E, dE) -> np.ndarray:
    """``w[..., i, j, a] = g(d_a e_i + gamma(d_a x, e_i), e_j)``."""
    jet = metric_jet(chart, x, order=1)
    gam = christoffel(jet)
    cov = dE + np.einsum("...kpq,...ap,...iq->...aik", gam, dx, E)
    return np.einsum("...aik,...kl,...jl->...ija", cov, jet.g, E)


def connection_forms(ff: FrameField, P, scheme: str = "auto") -> FormMatrix:
    x, dx, E, dE = ff.derivatives(P, scheme)
    return FormMatrix(ff.chart.dim, 1, connection_from_derivatives(ff.chart, x, dx, E, dE))


def curvature_on_tangents(riem, E, dx) -> np.ndarray:
    """``W[..., i, j, a, b] = Riem(dx_a, dx_b, e_i, e_j)``."""
    return np.einsum("...pqrs,...ap,...bq,...ir,...js->...ijab", riem, dx, dx, E, E)


def curvature_forms(ff: FrameField, P, route: str = "tensor", scheme: str = "auto", h: float = 1e-4) -> FormMatrix:
    """Curvature forms of a frame field on the cell.

    ``route="tensor"`` evaluates the Riemann tensor on pushed-forward cell
    vectors; ``route="structure"`` differentiates the connection forms over
    the cell and applies ``dw - w ^ w``.  The two must agree.
    """
    P = np.asarray(P, dtype=float)
    n = ff.chart.dim
    if route == "tensor":
        x, dx, E, _ = ff.derivatives(P, scheme)
        riem = riemann(metric_jet(ff.chart, x, scheme=scheme if scheme != "auto" else "auto"))
        return FormMatrix(n, 2, curvature_on_tangents(riem, E, dx))
    if route != "structure":
        raise ValueError(f"unknown route {route!r}")
    w = connection_forms(ff, P, scheme).array  # (..., i, j, a)
    k = w.shape[-1]
    dw = np.zeros(w.shape[:-1] + (k, k))
    deriv = []
    for a in range(k):
        step = np.zeros_like(P)
        step[..., a] = h
        deriv.append(
            (connection_forms(ff, P + step, scheme).array - connection_forms(ff, P - step, scheme).array) / (2 * h)
        )
    for a in range(k):
        for b in range(k):
            # d w(d_a, d_b) = d_a w(d_b) - d_b w(d_a)
            dw[..., a, b] = deriv[a][..., b] - deriv[b][..., a]
    ww = np.einsum("...ika,...kjb->...ijab", w, w)
    return FormMatrix(n, 2, dw - (ww - np.swapaxes(ww, -1, -2)))


# -- Euler form ------------------------------------------------------------------------


def euler_prefactor(n: int) -> float:
    if n % 2:
        return 0.0
    m = n // 2
    return (-1) ** m / (2 ** (2 * m) * math.pi**m * math.factorial(m))


def euler_value(curv: FormMatrix) -> AlternatingValue:
    """Euler curvature form from curvature form values (zero when ``n`` is odd)."""
    n, k = curv.dim, curv.cell_dim
    if n % 2:
        return AlternatingValue.zero(n, k)
    entries = [[curv.entry(i, j) for j in range(n)] for i in range(n)]
    total = AlternatingValue.zero(n, k)
    for sp in permutations_with_sign(n, start=0):
        term = AlternatingValue.scalar(float(sp.sign), k)
        for q in range(0, n, 2):
            term = term ^ entries[sp.perm[q]][sp.perm[q + 1]]
        total = total + term
    return total.scale(euler_prefactor(n))


def euler_form(ff: FrameField, P, scheme: str = "auto") -> AlternatingValue:
    return euler_value(curvature_forms(ff, P, scheme=scheme))


def euler_density(chart: Chart, X, dx, scheme: str = "auto", chunk=None) -> np.ndarray:
    """Euler form of ``chart`` at ``X`` evaluated on the ``n`` vectors ``dx[..., a, :]``."""
    X = np.asarray(X, dtype=float)
    n = chart.dim
    if n % 2:
        return np.zeros(X.shape[:-1])
    jet = metric_jet(chart, X, scheme=scheme)
    E = orthonormal_frame(jet.g, chart.orientation)
    curv = FormMatrix(n, 2, curvature_on_tangents(riemann(jet), E, dx))
    return np.broadcast_to(euler_value(curv).top(), X.shape[:-1])


def validate_chart(chart: Chart, samples: int = 64, seed: int = 0, margin: float = 0.05) -> None:
    """Check the metric invariants at random interior points; raise on violation."""
    rng = np.random.default_rng(seed)
    pts = np.stack(
        [
            rng.uniform(a.lo, a.hi, samples) if a.periodic else rng.uniform(a.lo + margin, a.hi - margin, samples)
            for a in chart.axes
        ],
        axis=-1,
    )
    G = metric_matrix(chart, pts)
    if np.max(np.abs(G - np.swapaxes(G, -1, -2))) > 1e-12:
        raise GeometryError(f"chart {chart.name}: metric not symmetric")
    if np.min(np.linalg.eigvalsh(G)[..., 0]) <= 1e-10:
        raise GeometryError(f"chart {chart.name}: metric not positive definite")
    for k, a in enumerate(chart.axes):
        if a.periodic:
            shifted = pts.copy()
            shifted[:, k] += a.length
            if np.max(np.abs(metric_matrix(chart, shifted) - G)) > 1e-10:
                raise GeometryError(f"chart {chart.name}: metric not periodic along axis {k}")
