"""Embedded submanifolds, adapted frames and the sphere-bundle cycles they define."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ad
from .geometry import (
    Axis,
    Chart,
    GeometryError,
    PivotError,
    christoffel,
    covariant_derivative,
    curvature_on_tangents,
    euler_density,
    metric_jet,
    metric_matrix,
    riemann,
)
from .quadrature import IntegralResult, integrate_box
from .transgression import (
    Cell,
    Cycle,
    TransgressionConfig,
    cell_tangents,
    phi_on_tangents,
    unit_sphere_box,
    unit_sphere_orientation,
    unit_sphere_point,
)


@dataclass
class Submanifold:
    """``M`` of dimension ``m`` inside the chart, given by a parameter box and an embedding.

    ``embed`` maps a list of ``m`` parameter scalars (arrays or jets) to a
    list of ``n`` chart coordinates.  ``euler_char`` is declared, not computed.
    """

    chart: Chart
    box: list
    embed: Callable
    orientation: int = 1
    euler_char: int = 0
    label: str = "M"
    pivot: Optional[list] = None
    spec: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.box)

    @property
    def codim(self) -> int:
        return self.chart.dim - self.m


def coordinate_slice(chart: Chart, fixed: dict, orientation: int = 1, euler_char: int = 0,
                     label: str = "") -> Submanifold:
    """The submanifold where the chart coordinates in ``fixed`` take the given values."""
    fixed = {int(k): float(v) for k, v in fixed.items()}
    free = [i for i in range(chart.dim) if i not in fixed]
    box = [
        (chart.axes[i].lo, chart.axes[i].hi, "periodic" if chart.axes[i].periodic else "gauss") for i in free
    ]

    def embed(p):
        x = [0.0] * chart.dim
        for i, val in fixed.items():
            x[i] = val
        for j, i in enumerate(free):
            x[i] = p[j]
        return x

    return Submanifold(
        chart, box, embed, orientation, euler_char, label or f"slice{fixed}", pivot=sorted(fixed) + free,
        spec={"kind": "slice", "fixed": fixed, "orientation": orientation, "euler_char": euler_char},
    )


def _stack(vals, batch):
    return np.stack([np.broadcast_to(ad.value(c), batch) for c in vals], axis=-1)


def embedding_tangents(sub: Submanifold, P):
    """Points ``(..., n)`` and tangent rows ``J[..., a, :] = d embed / d p_a``."""
    P = np.asarray(P, dtype=float)
    batch = P.shape[:-1]
    m = sub.m
    x = sub.embed(ad.seed(P, order=1) if m else [])
    xv = _stack(x, batch)
    J = np.stack([ad.grad(c, batch, m) for c in x], axis=-1) if m else np.zeros(batch + (0, sub.chart.dim))
    if m:
        sv = np.linalg.svd(J, compute_uv=False)
        if np.min(sv[..., -1]) < 1e-8:
            raise GeometryError("embedding differential is rank deficient")
    return xv, J


def induced_metric(sub: Submanifold, P) -> np.ndarray:
    x, J = embedding_tangents(sub, P)
    G = metric_matrix(sub.chart, x)
    return np.einsum("...ai,...ij,...bj->...ab", J, G, J)


def induced_chart(sub: Submanifold) -> Chart:
    """``M`` with its induced metric, as a chart (finite-difference derivatives)."""
    axes = tuple(Axis(lo, hi, kind == "periodic") for (lo, hi, kind) in sub.box)

    def metric(p):
        P = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in p]), axis=-1)
        G = induced_metric(sub, P)
        return [[G[..., a, b] for b in range(sub.m)] for a in range(sub.m)]

    return Chart(f"{sub.label}<induced>", axes, metric, orientation=sub.orientation, dual=False,
                 euler_char=sub.euler_char)


def _inner(G, u, w):
    return np.einsum("...i,...ij,...j->...", u, G, w)


def _pivot(sub: Submanifold):
    if sub.pivot is not None:
        return list(sub.pivot)
    # choose once, at the centre of the parameter box
    center = np.array([[0.5 * (lo + hi) for (lo, hi, _) in sub.box]])
    x, J = embedding_tangents(sub, center)
    G = metric_matrix(sub.chart, x)[0]
    rows = []
    for a in range(sub.m):
        u = J[0, a]
        for b in rows:
            u = u - _inner(G, u, b) * b
        rows.append(u / np.sqrt(_inner(G, u, u)))
    resid = []
    for c in range(sub.chart.dim):
        u = np.eye(sub.chart.dim)[c]
        for b in rows:
            u = u - _inner(G, u, b) * b
        resid.append(_inner(G, u, u))
    return list(np.argsort(resid)[::-1])


def normal_frame(sub: Submanifold, P, pivot=None, tol: float = 1e-8) -> np.ndarray:
    """Adapted frame: rows ``0..m-1`` span ``TM`` (positively for ``M``), rows ``m..n-1`` span ``NM``.

    The whole frame is positively oriented in the chart; in codimension one
    the last row is the unit normal.
    """
    P = np.asarray(P, dtype=float)
    x, J = embedding_tangents(sub, P)
    G = metric_matrix(sub.chart, x)
    n, m = sub.chart.dim, sub.m
    rows = []
    for a in range(m):
        u = J[..., a, :]
        for b in rows:
            u = u - _inner(G, u, b)[..., None] * b
        rows.append(u / np.sqrt(_inner(G, u, u))[..., None])
    if m and sub.orientation < 0:
        rows[0] = -rows[0]
    for c in pivot if pivot is not None else _pivot(sub):
        if len(rows) == n:
            break
        u = np.zeros_like(x)
        u[..., c] = 1.0
        for b in rows:
            u = u - _inner(G, u, b)[..., None] * b
        nrm = np.sqrt(np.maximum(_inner(G, u, u), 0.0))
        if np.max(nrm) < tol:
            # a coordinate direction tangent to M everywhere: try the next candidate
            continue
        if np.min(nrm) < tol:
            raise PivotError(f"pivot {c} degenerates inside the cell")
        rows.append(u / nrm[..., None])
    if len(rows) < n:
        raise PivotError("pivot order does not complete the normal frame")
    E = np.stack(rows, axis=-2)
    sign = np.sign(np.linalg.det(E)) * sub.chart.orientation
    E[..., m, :] *= sign[..., None]
    return E


def _params(P):
    return [P[..., i] for i in range(P.shape[-1])]


def mplus_cycle(sub: Submanifold, sign: int = 1) -> Cycle:
    """``M+`` (sign +1) or ``M-`` (sign -1): the image of the (negated) unit normal."""
    if sub.codim != 1:
        raise ValueError("M+/M- need a codimension-one submanifold")
    pivot = _pivot(sub)

    def cmap(p):
        P = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in p]), axis=-1)
        E = normal_frame(sub, P, pivot)
        x, _ = embedding_tangents(sub, P)
        nv = sign * E[..., -1, :]
        return _params(x), _params(nv)

    label = "M+" if sign > 0 else "M-"
    return Cycle(sub.chart.dim - 1, [Cell(list(sub.box), cmap, sub.orientation, 1, "fd", label)], label)


def snm_cycle(sub: Submanifold) -> Cycle:
    """Unit normal sphere bundle, oriented as (M) x (normal sphere, ball-boundary orientation).

    In codimension one this is the weighted difference ``M+ - M-``.
    """
    if sub.codim == 1:
        out = mplus_cycle(sub, 1) - mplus_cycle(sub, -1)
        out.label = "SNM"
        return out
    m, q = sub.m, sub.codim
    pivot = _pivot(sub)

    def cmap(p):
        P = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in p]), axis=-1)
        base = P[..., :m]
        E = normal_frame(sub, base, pivot)
        x, _ = embedding_tangents(sub, base)
        u = unit_sphere_point(_params(P[..., m:]))
        v = sum(u[i][..., None] * E[..., m + i, :] for i in range(q))
        return _params(x), _params(v)

    box = list(sub.box) + unit_sphere_box(q)
    orient = sub.orientation * unit_sphere_orientation(q)
    return Cycle(sub.chart.dim - 1, [Cell(box, cmap, orient, 1, "fd", "SNM")], "SNM")


def integrate_induced_euler(sub: Submanifold, cfg: Optional[TransgressionConfig] = None) -> IntegralResult:
    """Gauss-Bonnet integral of ``M`` for its induced metric."""
    cfg = cfg or TransgressionConfig()
    ch = induced_chart(sub)
    m = sub.m

    def f(P):
        basis = np.broadcast_to(np.eye(m), P.shape[:-1] + (m, m))
        return ch.orientation * euler_density(ch, P, basis)

    return integrate_box(f, sub.box, cfg.orders(sub.box), panels=cfg.panels)


def _adapted_data(sub: Submanifold, P, h: float = 1e-6):
    """Frame, ambient Riemann tensor, tangents and nabla of the unit normal along ``M``."""
    cyc = mplus_cycle(sub, 1)
    x, v, dx, dv = cell_tangents(cyc.cells[0], P, h)
    jet = metric_jet(sub.chart, x)
    E = normal_frame(sub, P)
    nv = covariant_derivative(christoffel(jet), dx, v, dv)
    return x, dx, dv, v, E, jet, nv


def gauss_equation_check(sub: Submanifold, P) -> np.ndarray:
    """Relative residual between intrinsic curvature of ``M`` and ``W_ab - w_an ^ w_bn``."""
    if sub.codim != 1:
        raise ValueError("Gauss equation check needs codimension one")
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n, m = sub.chart.dim, sub.m
    x, dx, _, v, E, jet, nv = _adapted_data(sub, P)
    amb = curvature_on_tangents(riemann(jet), E, dx)[..., :m, :m, :, :]
    w = -np.einsum("...ai,...ij,...cj->...ac", E[..., :m, :], jet.g, nv)
    ww = np.einsum("...ac,...bd->...abcd", w, w)
    rhs = amb - (ww - np.swapaxes(ww, -1, -2))
    # intrinsic side, same tangent frame expressed in parameter coordinates
    ch = induced_chart(sub)
    ijet = metric_jet(ch, P)
    Gt = np.einsum("...ai,...ij,...bj->...ab", dx, jet.g, dx)
    rhs_coords = np.einsum("...ai,...ij,...bj->...ba", dx, jet.g, E[..., :m, :])
    Et = np.swapaxes(np.linalg.solve(Gt, rhs_coords), -1, -2)  # rows: frame vectors in M coords
    basis = np.broadcast_to(np.eye(m), P.shape[:-1] + (m, m))
    lhs = curvature_on_tangents(riemann(ijet), Et, basis)
    scale = np.maximum(np.max(np.abs(lhs), axis=(-4, -3, -2, -1)), 1e-300)
    return np.max(np.abs(lhs - rhs), axis=(-4, -3, -2, -1)) / scale


def half_identity_check(sub: Submanifold, P):
    """Pointwise relative residual of ``Phi|M+ = 1/2 Euler(M)`` (odd ambient dimension)."""
    if sub.codim != 1:
        raise ValueError("needs codimension one")
    if sub.chart.dim % 2 == 0:
        raise ValueError("the half identity is asserted only for odd ambient dimension")
    P = np.atleast_2d(np.asarray(P, dtype=float))
    m = sub.m
    cell = mplus_cycle(sub, 1).cells[0]
    x, v, dx, dv = cell_tangents(cell, P)
    phi = np.broadcast_to(phi_on_tangents(sub.chart, x, v, dx, dv).top(), P.shape[:-1])
    basis = np.broadcast_to(np.eye(m), P.shape[:-1] + (m, m))
    half = 0.5 * euler_density(induced_chart(sub), P, basis)
    scale = np.maximum(np.maximum(np.abs(phi), np.abs(half)), 1e-300)
    return np.abs(phi - half) / scale, phi, half
