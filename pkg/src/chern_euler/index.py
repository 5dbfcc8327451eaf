"""Index of a vector field along a singular submanifold.

Three routes are implemented and cross-checked:

* transgression: integral of the transgression form over the normalized
  field on the boundary of a geodesic tube, plus the Euler integral over the
  tube;
* extension: the sum of local degrees of a field with isolated zeros that
  agrees with ``V`` on the tube boundary;
* law of vector fields: Euler characteristic of the tube minus the local
  degrees of the tangential boundary projection in the inward region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import charts
from .geometry import (
    Chart,
    GeometryError,
    christoffel,
    euler_density,
    metric_jet,
    metric_matrix,
)
from .quadrature import IntegralResult, integrate_box
from .submanifold import Submanifold, embedding_tangents, normal_frame, _pivot
from .transgression import (
    Cell,
    Cycle,
    TransgressionConfig,
    cell_tangents,
    integrate_phi,
    unit_sphere_box,
    unit_sphere_orientation,
    unit_sphere_point,
)


class SingularityError(GeometryError):
    """The field vanishes where it must not (tube boundary, degree sphere)."""


class RootFindingError(RuntimeError):
    pass


class DegreeError(RuntimeError):
    """A degree integral is too far from an integer to be trusted."""


class GenericityError(RuntimeError):
    """A zero of the boundary projection sits on the inward/outward interface."""


def _params(P):
    return [P[..., i] for i in range(P.shape[-1])]


def _norm(G, v):
    return np.sqrt(np.einsum("...i,...ij,...j->...", v, G, v))


# -- vector fields -------------------------------------------------------------------------


@dataclass
class VectorField:
    """Coordinate components ``fn(x_list) -> list`` of a field on ``chart``."""

    chart: Chart
    fn: Callable
    label: str = "V"
    spec: dict = field(default_factory=dict)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        batch = X.shape[:-1]
        comps = self.fn(_params(X))
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), batch) for c in comps], axis=-1)


def linear_field(chart: Chart, matrix, offset=None, center=None, label: str = "linear") -> VectorField:
    """``V(x) = A (x - center) + offset`` in coordinates."""
    A = np.asarray(matrix, dtype=float)
    n = chart.dim
    b = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def fn(x):
        y = [x[j] - c[j] for j in range(n)]
        return [sum(A[i, j] * y[j] for j in range(n)) + b[i] for i in range(n)]

    spec = {"kind": "linear", "matrix": A.tolist(), "offset": b.tolist(), "center": c.tolist()}
    return VectorField(chart, fn, label, spec)


def complex_power_field(chart: Chart, power: int, center=None, label: str = "") -> VectorField:
    """The planar field ``(x + i y)^k`` around ``center``; its zero has degree ``k``."""
    if chart.dim != 2:
        raise ValueError("complex power fields live on 2-dimensional charts")
    c = np.zeros(2) if center is None else np.asarray(center, dtype=float)

    def fn(x):
        z = (x[0] - c[0]) + 1j * (x[1] - c[1])
        w = z**power
        return [w.real, w.imag]

    spec = {"kind": "complex_power", "power": power, "center": c.tolist()}
    return VectorField(chart, fn, label or f"z^{power}", spec)


def tilted_radial_field(chart: Chart, tilt, radius: float, center=None, label: str = "tilted") -> VectorField:
    """``(x - c) + tilt * |x - c|^2 / radius``: radial plus the constant ``tilt`` on the circle of ``radius``.

    The only zero within ``radius / |tilt|`` of the center is the center itself.
    """
    n = chart.dim
    b = np.asarray(tilt, dtype=float)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def fn(x):
        y = [x[j] - c[j] for j in range(n)]
        rr = sum(yj * yj for yj in y) / radius
        return [y[i] + b[i] * rr for i in range(n)]

    spec = {"kind": "tilted_radial", "tilt": b.tolist(), "radius": radius, "center": c.tolist()}
    return VectorField(chart, fn, label, spec)


def _sphere_distance_data(X, chart: Chart, basis):
    """Embedded point, closest point on the great sphere ``S ∩ span(basis)`` and the distance."""
    pts, jac = charts.embedding_jacobian(chart, X)
    Q = np.asarray(basis, dtype=float)
    if len(Q) == 1:
        q = np.broadcast_to(Q[0], pts.shape)
    else:
        proj = np.einsum("...i,ki,kj->...j", pts, Q, Q)
        q = proj / np.linalg.norm(proj, axis=-1, keepdims=True)
    cosd = np.clip(np.einsum("...i,...i->...", pts, q), -1.0, 1.0)
    # atan2 keeps the distance accurate near the great sphere, where arccos loses half the digits
    dist = np.arctan2(np.linalg.norm(pts - q * cosd[..., None], axis=-1), cosd)
    return pts, jac, q, cosd, dist


def sphere_distance(chart: Chart, basis) -> Callable:
    """Round-metric distance to the great sphere through the orthonormal ``basis``."""

    def dist(X):
        return _sphere_distance_data(np.asarray(X, dtype=float), chart, basis)[-1]

    return dist


def radial_sphere_field(chart: Chart, basis, scale: float = 1.0, sign: int = 1, label: str = "") -> VectorField:
    """``sign * (d / scale) * grad d`` for the round distance ``d`` to a great sphere.

    ``basis`` is an orthonormal set in the embedding space; one vector gives a
    point, two a great circle, and so on.  The field vanishes exactly on the
    great sphere and is the unit-speed tube field ``(s/scale) d/ds`` there.
    """
    if chart.embedding is None:
        raise ValueError("radial sphere fields need an embedded sphere chart")
    n = chart.dim

    def fn(x):
        X = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in x]), axis=-1)
        pts, jac, q, cosd, d = _sphere_distance_data(X, chart, basis)
        sind = np.sin(d)
        ratio = np.where(d < 1e-8, 1.0, d / np.where(d < 1e-8, 1.0, sind))
        emb = ratio[..., None] * cosd[..., None] * (pts - q * cosd[..., None]) - (d * sind)[..., None] * q
        emb = sign * emb / scale
        G = np.einsum("...ai,...aj->...ij", jac, jac)
        comps = np.linalg.solve(G, np.einsum("...ai,...a->...i", jac, emb)[..., None])[..., 0]
        return [comps[..., i] for i in range(n)]

    spec = {"kind": "radial_sphere", "basis": np.asarray(basis, dtype=float).tolist(), "scale": scale, "sign": sign}
    return VectorField(chart, fn, label or ("radial" if sign > 0 else "inward-radial"), spec)


def _cutoff(t):
    t = np.asarray(t, dtype=float)
    return np.where(t < 1.0, (1.0 - np.minimum(t, 1.0) ** 2) ** 3, 0.0)


def swirl_extension(base: VectorField, distance: Callable, cutoff: float, axis: int, label: str = "") -> VectorField:
    """``V + beta(d / cutoff) * sin(x_axis) * d/dx_axis``.

    Added to a radial field whose zero set is a circle parameterized by
    ``x_axis``, this leaves exactly two isolated zeros, at ``x_axis = 0``
    (degree +1) and ``x_axis = pi`` (degree -1), and does not change the field
    where ``d >= cutoff``.
    """

    def fn(x):
        X = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in x]), axis=-1)
        V = base(X)
        V[..., axis] += _cutoff(distance(X) / cutoff) * np.sin(X[..., axis])
        return [V[..., i] for i in range(V.shape[-1])]

    spec = {"kind": "swirl", "base": base.spec, "cutoff": cutoff, "axis": axis}
    return VectorField(base.chart, fn, label or f"{base.label}+swirl", spec)


def euclidean_distance(center) -> Callable:
    c = np.asarray(center, dtype=float)
    return lambda X: np.linalg.norm(np.asarray(X, dtype=float) - c, axis=-1)


def field_from_spec(chart: Chart, spec: dict, distance: Optional[Callable] = None) -> VectorField:
    kind = spec["kind"]
    if kind == "linear":
        return linear_field(chart, spec["matrix"], spec.get("offset"), spec.get("center"))
    if kind == "complex_power":
        return complex_power_field(chart, int(spec["power"]), spec.get("center"))
    if kind == "tilted_radial":
        return tilted_radial_field(chart, spec["tilt"], float(spec["radius"]), spec.get("center"))
    if kind == "radial_sphere":
        return radial_sphere_field(chart, spec["basis"], float(spec.get("scale", 1.0)), int(spec.get("sign", 1)))
    if kind == "swirl":
        base = field_from_spec(chart, spec["base"])
        if distance is None:
            distance = sphere_distance(chart, spec["base"]["basis"])
        return swirl_extension(base, distance, float(spec["cutoff"]), int(spec["axis"]))
    raise ValueError(f"unknown vector field kind {kind!r}")


# -- geodesics and tubes ----------------------------------------------------------------------


def _check_domain(chart: Chart, X):
    for k, axis in enumerate(chart.axes):
        if axis.periodic:
            continue
        if np.any(X[..., k] <= axis.lo) or np.any(X[..., k] >= axis.hi):
            raise GeometryError(f"geodesic left the chart domain along axis {k}")


def geodesic_flow(chart: Chart, x, direction, s, steps: int = 64, check_unit: bool = True):
    """Point and velocity after flowing ``s`` along the geodesic with unit initial velocity.

    Classical fourth-order Runge-Kutta with ``steps`` fixed steps; the
    right-hand side uses the Levi-Civita symbols of ``chart``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(direction, dtype=float)
    x, v = np.broadcast_arrays(x, v)
    x, v = x.copy(), v.copy()
    s = np.broadcast_to(np.asarray(s, dtype=float), x.shape[:-1])
    if check_unit:
        speed = _norm(metric_matrix(chart, x), v)
        if np.max(np.abs(speed - 1.0), initial=0.0) > 1e-9:
            raise ValueError("geodesic direction must have unit length")
    h = (s / steps)[..., None]

    def rhs(y, w):
        _check_domain(chart, y)
        gam = christoffel(metric_jet(chart, y, order=1))
        return w, -np.einsum("...kij,...i,...j->...k", gam, w, w)

    for _ in range(steps):
        k1x, k1v = rhs(x, v)
        k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = rhs(x + h * k3x, v + h * k3v)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    _check_domain(chart, x)
    return x, v


@dataclass
class TubeRegion:
    """Geodesic tube ``U`` of radius ``radius`` around ``sub`` (codimension >= 2).

    Points are parameterized by ``(p, a, s)``: a point of ``M``, angles of a
    unit normal, and the geodesic distance.  ``distance`` optionally returns
    the distance to ``M`` (used to confirm that zeros lie inside ``U``).
    """

    sub: Submanifold
    radius: float
    steps: int = 64
    distance: Optional[Callable] = None

    def __post_init__(self):
        if self.sub.codim < 2:
            raise ValueError("tube regions are built for codimension >= 2")
        if self.radius <= 0:
            raise ValueError("tube radius must be positive")
        self._pivot = _pivot(self.sub)

    @property
    def chart(self) -> Chart:
        return self.sub.chart

    @property
    def q(self) -> int:
        return self.sub.codim

    def boundary_box(self):
        return list(self.sub.box) + unit_sphere_box(self.q)

    def normal(self, P):
        """Unit normal at base parameters ``P[..., :m]`` with angles ``P[..., m:]``."""
        m = self.sub.m
        E = normal_frame(self.sub, P[..., :m], self._pivot)
        u = unit_sphere_point(_params(P[..., m:]))
        x, _ = embedding_tangents(self.sub, P[..., :m])
        return x, sum(u[i][..., None] * E[..., m + i, :] for i in range(self.q))

    def flow(self, P, s):
        """Point and outward unit velocity at distance ``s`` along the normal geodesic."""
        P = np.asarray(P, dtype=float)
        x, nu = self.normal(P)
        return geodesic_flow(self.chart, x, nu, s, self.steps)

    def solid_orientation(self) -> int:
        """Sign of the parameter order ``(p, a, s)`` relative to the orientation of the chart."""
        box = self.boundary_box()
        center = np.array([[0.5 * (lo + hi) + 0.1 for (lo, hi, _) in box] + [0.5 * self.radius]])
        cell = Cell(box + [(0.0, self.radius, "gauss")], self._solid_map, 1, 1, "fd")
        _, _, dx, _ = cell_tangents(cell, center)
        return int(np.sign(np.linalg.det(dx[0]))) * self.chart.orientation

    def _solid_map(self, p):
        P = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in p]), axis=-1)
        x, v = self.flow(P[..., :-1], P[..., -1])
        return _params(x), _params(v)

    def boundary_orientation(self) -> int:
        """Orientation of the ``(p, a)`` parameters on ``S_s(M)`` as the boundary of ``U`` (outward first)."""
        return self.solid_orientation() * (-1) ** (self.chart.dim - 1)

    def validate(self, samples: int = 64, seed: int = 0) -> None:
        """Injectivity of the normal exponential map and unit speed at random parameters."""
        rng = np.random.default_rng(seed)
        box = self.boundary_box()
        P = np.stack([rng.uniform(lo, hi, samples) for (lo, hi, _) in box], axis=-1)
        s = rng.uniform(0.05, 1.0, samples) * self.radius
        x, v = self.flow(P, s)
        speed = _norm(metric_matrix(self.chart, x), v)
        if np.max(np.abs(speed - 1.0)) > 1e-8:
            raise GeometryError("geodesic speed drifted beyond 1e-8")
        diff = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
        np.fill_diagonal(diff, np.inf)
        if np.min(diff) < 1e-8:
            raise GeometryError("normal exponential map is not injective on the tube")

    def contains(self, X) -> np.ndarray:
        if self.distance is None:
            return np.ones(np.asarray(X).shape[:-1], dtype=bool)
        return self.distance(X) < self.radius


def _unit_field_map(tube: TubeRegion, V: VectorField, s: float):
    def cmap(p):
        P = np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in p]), axis=-1)
        x, _ = tube.flow(P, s)
        W = V(x)
        nrm = _norm(metric_matrix(tube.chart, x), W)
        if np.min(nrm) < 1e-9:
            raise SingularityError(f"field vanishes on the tube boundary at distance {s}")
        return _params(x), _params(W / nrm[..., None])

    return cmap


def tube_boundary_cycle(tube: TubeRegion, V: VectorField, s: Optional[float] = None) -> Cycle:
    """``alpha_V(S_s(M))``: the normalized field over the tube boundary, oriented as a boundary of ``U``."""
    s = tube.radius if s is None else float(s)
    if not 0 < s <= tube.radius:
        raise ValueError("boundary radius must lie in (0, r]")
    cell = Cell(tube.boundary_box(), _unit_field_map(tube, V, s), tube.boundary_orientation(), 1, "fd",
                f"alpha_V(S_{s:g})")
    return Cycle(tube.chart.dim - 1, [cell], cell.label)


def blowup_cycle(tube: TubeRegion, V: VectorField, s: float) -> Cycle:
    """Finite-radius approximation of the blow-up of ``M`` along ``V``."""
    return tube_boundary_cycle(tube, V, s)


def _extrapolate_to_zero(s, values):
    """Value at ``s = 0`` of the polynomial through the samples (Richardson extrapolation)."""
    s = np.asarray(s, dtype=float)
    values = np.asarray(values, dtype=float)
    total = 0.0
    for i in range(len(s)):
        w = 1.0
        for j in range(len(s)):
            if j != i:
                w *= (0.0 - s[j]) / (s[i] - s[j])
        total += w * values[i]
    return total


@dataclass
class LimitResult:
    value: float
    radii: list
    samples: list
    converged: bool
    spread: float


def _limit(radii, samples, tol):
    quad = _extrapolate_to_zero(radii, samples)
    lin = _extrapolate_to_zero(radii[-2:], samples[-2:])
    spread = abs(quad - lin)
    return LimitResult(quad, list(radii), list(samples), spread <= tol, spread)


def blowup_integral(tube: TubeRegion, V: VectorField, cfg: Optional[TransgressionConfig] = None,
                    fractions: Sequence[float] = (1 / 4, 1 / 8, 1 / 16), tol: float = 1e-3) -> LimitResult:
    """Integral of the transgression form over the blow-up, by extrapolating shrinking boundaries."""
    cfg = cfg or TransgressionConfig()
    radii = [f * tube.radius for f in fractions]
    samples = [integrate_phi(blowup_cycle(tube, V, s), tube.chart, cfg).value for s in radii]
    return _limit(radii, samples, tol)


def tube_euler_integral(tube: TubeRegion, cfg: Optional[TransgressionConfig] = None,
                        radius: Optional[float] = None) -> IntegralResult:
    """Euler integral over the tube, in ``(p, a, s)`` coordinates."""
    cfg = cfg or TransgressionConfig()
    n = tube.chart.dim
    r = tube.radius if radius is None else radius
    if n % 2:
        return IntegralResult(0.0, 0.0, 0)
    box = tube.boundary_box() + [(0.0, r, "gauss")]
    cell = Cell(box, tube._solid_map, tube.solid_orientation(), 1, "fd")

    def f(P):
        x, _, dx, _ = cell_tangents(cell, P, cfg.fd_step)
        return cell.orientation * euler_density(tube.chart, x, dx)

    return integrate_box(f, box, cfg.orders(box), panels=cfg.panels)


@dataclass
class TransgressionIndex:
    value: float
    boundary: float
    interior: float
    error_estimate: float


def index_via_transgression(tube: TubeRegion, V: VectorField, cfg: Optional[TransgressionConfig] = None,
                            radius: Optional[float] = None) -> TransgressionIndex:
    """``int_{alpha_V(dU)} Phi + int_U Omega``."""
    cfg = cfg or TransgressionConfig()
    r = tube.radius if radius is None else radius
    bd = integrate_phi(tube_boundary_cycle(tube, V, r), tube.chart, cfg)
    inner = tube_euler_integral(tube, cfg, r)
    return TransgressionIndex(bd.value + inner.value, bd.value, inner.value, bd.error_estimate + inner.error_estimate)


def shrinking_limit(tube: TubeRegion, V: VectorField, cfg: Optional[TransgressionConfig] = None,
                    fractions: Sequence[float] = (1.0, 0.5, 0.25), tol: float = 1e-2) -> LimitResult:
    """``lim_{U -> M} int_{alpha_V(dU)} Phi`` from tubes of radius ``r, r/2, r/4``."""
    cfg = cfg or TransgressionConfig()
    radii = [f * tube.radius for f in fractions]
    samples = [integrate_phi(tube_boundary_cycle(tube, V, s), tube.chart, cfg).value for s in radii]
    return _limit(radii, samples, tol)


def stokes_residual(tube: TubeRegion, V: VectorField, cfg: Optional[TransgressionConfig] = None) -> float:
    """``| -int_U Omega - (int_{alpha_V(dU)} Phi - int_{Bl_V(M)} Phi) |``."""
    cfg = cfg or TransgressionConfig()
    tr = index_via_transgression(tube, V, cfg)
    bl = blowup_integral(tube, V, cfg)
    return abs(-tr.interior - (tr.boundary - bl.value))


def radial_blowup_matches_snm(tube: TubeRegion, V: VectorField, s: float = 1e-6, samples: int = 32,
                              seed: int = 0) -> float:
    """Largest pointwise gap between the blow-up map at tiny ``s`` and the normal sphere bundle map."""
    rng = np.random.default_rng(seed)
    P = np.stack([rng.uniform(lo, hi, samples) for (lo, hi, _) in tube.boundary_box()], axis=-1)
    x0, nu = tube.normal(P)
    x, v = _unit_field_map(tube, V, s)(_params(P))
    x, v = np.stack(x, axis=-1), np.stack(v, axis=-1)
    return float(max(np.max(np.abs(x - x0)), np.max(np.abs(v - nu))))


# -- degrees and zeros ------------------------------------------------------------------------


@dataclass
class DegreeResult:
    degree: int
    value: float
    distance: float


def local_degree(V: Callable, zero, radius: float, cfg: Optional[TransgressionConfig] = None) -> DegreeResult:
    """Brouwer degree of ``V/|V|`` on the coordinate sphere of ``radius`` around ``zero``.

    The degree is the integral of the flat-space transgression form (the
    normalized sphere volume) over the normalized field; in one dimension it
    is half the jump of the sign of ``V`` across the zero.
    """
    z = np.asarray(zero, dtype=float)
    n = z.shape[-1]
    if n == 1:
        vals = np.asarray(V(np.array([[z[0] - radius], [z[0] + radius]])), dtype=float)[:, 0]
        if np.min(np.abs(vals)) < 1e-12:
            raise SingularityError("field vanishes on the degree sphere")
        value = 0.5 * (np.sign(vals[1]) - np.sign(vals[0]))
        return DegreeResult(int(round(value)), float(value), 0.0)
    cfg = cfg or TransgressionConfig(gauss=16, periodic=32)

    def cmap(p):
        u = unit_sphere_point(p)
        X = np.stack([z[i] + radius * np.asarray(u[i], dtype=float) for i in range(n)], axis=-1)
        W = np.asarray(V(X), dtype=float)
        nrm = np.linalg.norm(W, axis=-1)
        if np.min(nrm) < 1e-14:
            raise SingularityError("field vanishes on the degree sphere")
        return _params(X), _params(W / nrm[..., None])

    cell = Cell(unit_sphere_box(n), cmap, unit_sphere_orientation(n), 1, "fd", "degree sphere")
    value = integrate_phi(Cycle(n - 1, [cell]), charts.flat_space(n), cfg).value
    degree = int(round(value))
    dist = abs(value - degree)
    if dist > 0.1:
        raise DegreeError(f"degree integral {value:.4f} is not close to an integer")
    return DegreeResult(degree, float(value), float(dist))


def _fd_jacobian(F, x, h=1e-7):
    n = x.shape[-1]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h * (1.0 + abs(x[j]))
        cols.append((F(x + e) - F(x - e)) / (2 * e[j]))
    return np.stack(cols, axis=-1)


def newton_zero(F: Callable, seed, tol: float = 1e-10, max_iter: int = 60):
    """Damped Newton iteration for ``F(x) = 0`` (``F`` maps ``(n,)`` to ``(n,)``)."""
    x = np.asarray(seed, dtype=float).copy()
    r = F(x)
    for _ in range(max_iter):
        if np.linalg.norm(r) < tol:
            return x
        J = _fd_jacobian(F, x)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise RootFindingError(f"singular Jacobian at {x.tolist()}") from exc
        t = 1.0
        while True:
            cand = x + t * step
            try:
                rc = F(cand)
            except GeometryError:
                rc = None
            if rc is not None and np.linalg.norm(rc) < (1 - 0.5 * t) * np.linalg.norm(r):
                x, r = cand, rc
                break
            t *= 0.5
            if t < 1e-8:
                raise RootFindingError(f"Newton iteration stalled near {x.tolist()}")
    if np.linalg.norm(r) < tol:
        return x
    raise RootFindingError(f"Newton iteration did not converge from {np.asarray(seed).tolist()}")


def _dedupe(points, tol=1e-6):
    out = []
    for p in points:
        if all(np.linalg.norm(p - q) > tol for q in out):
            out.append(p)
    return out


@dataclass
class ExtensionIndex:
    index: int
    zeros: list
    degrees: list
    boundary_residual: float


def index_via_extension(tube: TubeRegion, V: VectorField, extension: VectorField, seeds,
                        degree_radius: float = 1e-2, samples: int = 64, seed: int = 0,
                        cfg: Optional[TransgressionConfig] = None) -> ExtensionIndex:
    """Sum of local degrees of ``extension`` at its zeros inside ``U``."""
    rng = np.random.default_rng(seed)
    box = tube.boundary_box()
    P = np.stack([rng.uniform(lo, hi, samples) for (lo, hi, _) in box], axis=-1)
    xb, _ = tube.flow(P, tube.radius)
    Vb, Eb = V(xb), extension(xb)
    resid = float(np.max(np.abs(Vb - Eb) / np.maximum(1.0, np.abs(Vb))))
    if resid > 1e-8:
        raise ValueError(f"extension differs from the field on the tube boundary ({resid:.2e})")
    zeros = []
    for s0 in seeds:
        z = newton_zero(lambda x: extension(x[None, :])[0], s0)
        if not tube.contains(z[None, :])[0]:
            raise RootFindingError(f"zero {z.tolist()} lies outside the tube")
        zeros.append(z)
    zeros = _dedupe(zeros)
    degrees = [local_degree(extension, z, degree_radius, cfg).degree for z in zeros]
    return ExtensionIndex(int(sum(degrees)), [z.tolist() for z in zeros], degrees, resid)


@dataclass
class LawIndex:
    index: int
    euler_char: int
    inward_zeros: list
    degrees: list
    normal_components: list


def _boundary_projection(tube: TubeRegion, V: VectorField, h: float = 1e-6):
    """Tangential part of ``V`` on ``S_r(M)`` in boundary parameters, plus ``g(V, outward normal)``."""
    cell = Cell(tube.boundary_box(), lambda p: tube._solid_map(list(p) + [tube.radius]), 1, 1, "fd")

    def proj(P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        x, nout, T, _ = cell_tangents(cell, P, h)
        G = metric_matrix(tube.chart, x)
        W = V(x)
        GT = np.einsum("...ij,...aj->...ai", G, T)
        A = np.einsum("...ai,...bi->...ab", T, GT)
        rhs = np.einsum("...ai,...i->...a", GT, W)
        c = np.linalg.solve(A, rhs[..., None])[..., 0]
        normal = np.einsum("...i,...ij,...j->...", W, G, nout)
        return c, normal, _norm(G, W)

    return proj


def _grid_seeds(box, per_axis: int = 16):
    axes = []
    for lo, hi, kind in box:
        if kind == "periodic":
            axes.append(lo + (hi - lo) * np.arange(per_axis) / per_axis)
        else:
            axes.append(lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def _local_minima(values, box):
    """Mask of grid points whose value does not exceed any axis neighbour (periodic axes wrap)."""
    mask = np.ones(values.shape, dtype=bool)
    for ax, (_, _, kind) in enumerate(box):
        for shift in (1, -1):
            nb = np.roll(values, shift, axis=ax)
            if kind != "periodic":
                edge = [slice(None)] * values.ndim
                edge[ax] = 0 if shift == 1 else -1
                nb[tuple(edge)] = np.inf
            mask &= values <= nb
    return mask


def index_via_law(tube: TubeRegion, V: VectorField, seeds=None, degree_radius: float = 1e-2,
                  cfg: Optional[TransgressionConfig] = None, grid: int = 16) -> LawIndex:
    """``chi(U) - ind(boundary projection restricted to the inward region)``.

    ``chi(U)`` is the declared Euler characteristic of ``M`` (the tube
    retracts onto it).  Zeros of the boundary projection are polished from
    ``seeds`` (boundary parameters); ``None`` scans a parameter grid and
    starts from the inward-pointing local minima of the projection.
    """
    proj = _boundary_projection(tube, V)
    box = tube.boundary_box()
    if seeds is None:
        G = _grid_seeds(box, grid)
        c, normal, vn = proj(G.reshape(-1, len(box)))
        size = np.linalg.norm(c, axis=-1).reshape(G.shape[:-1])
        inward_mask = (normal < 0).reshape(G.shape[:-1])
        candidates = G[_local_minima(size, box) & inward_mask]
    else:
        candidates = np.asarray(seeds, dtype=float).reshape(-1, len(box))
    inward = []
    for s0 in candidates:
        c0, _, vn0 = proj(s0)
        tol = 1e-8 * max(1.0, float(vn0[0]))
        if np.linalg.norm(c0[0]) < tol:
            z = np.asarray(s0, dtype=float)
        else:
            try:
                z = newton_zero(lambda p: proj(p)[0][0], s0, tol=tol)
            except RootFindingError:
                if seeds is not None:
                    raise
                # a grid minimum that is not a zero: nothing to polish there
                continue
        _, nz, vz = proj(z)
        if abs(nz[0]) < 1e-6 * vz[0]:
            raise GenericityError(f"boundary-projection zero at {z.tolist()} sits on the inward/outward interface")
        if nz[0] < 0:
            inward.append(_wrap(z, box))
    keep = _dedupe(inward)
    normals = []
    for k in keep:
        _, nk, vk = proj(k)
        normals.append(float(nk[0] / vk[0]))
    degrees = [local_degree(lambda P: proj(P)[0], k, degree_radius, cfg).degree for k in keep]
    chi = int(tube.sub.euler_char)
    return LawIndex(chi - int(sum(degrees)), chi, [k.tolist() for k in keep], degrees, normals)


def _wrap(z, box):
    z = np.asarray(z, dtype=float).copy()
    for i, (lo, hi, kind) in enumerate(box):
        if kind == "periodic":
            z[i] = lo + (z[i] - lo) % (hi - lo)
    return z


# -- combined report ----------------------------------------------------------------------------


@dataclass
class IndexReport:
    ind_transgression: float
    ind_extension: Optional[int]
    ind_law: Optional[int]
    blowup_integral: float
    interior_euler: float
    boundary_integral: float
    agreement: dict

    @property
    def ok(self) -> bool:
        return all(self.agreement.values())


def compute_index(tube: TubeRegion, V: VectorField, extension: Optional[VectorField] = None, extension_seeds=(),
                  law_seeds=None, use_law: bool = True, cfg: Optional[TransgressionConfig] = None,
                  tol: float = 1e-2) -> IndexReport:
    cfg = cfg or TransgressionConfig()
    tr = index_via_transgression(tube, V, cfg)
    bl = blowup_integral(tube, V, cfg)
    ext = index_via_extension(tube, V, extension or V, extension_seeds, cfg=cfg).index
    law = index_via_law(tube, V, law_seeds, cfg=cfg).index if use_law else None
    agreement = {
        "integral": abs(tr.value - round(tr.value)) <= tol,
        "transgression~extension": abs(tr.value - ext) <= tol,
        "blowup~extension": abs(bl.value - ext) <= tol,
    }
    if law is not None:
        agreement["extension=law"] = ext == law
    return IndexReport(tr.value, ext, law, bl.value, tr.interior, tr.boundary, agreement)
