"""Chart families used by the scenarios: round spheres, flat tori, flat boxes.

Each family can carry a conformal perturbation ``g -> exp(eps * bump) g``.
"""

from __future__ import annotations

import math

import numpy as np

from . import ad
from .geometry import Axis, Chart


def _diag(entries):
    n = len(entries)
    return [[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)]


def sphere_embedding(x):
    """Polar coordinates ``(t_1..t_{n-1}, phi)`` to a point of the unit sphere in R^{n+1}."""
    n = len(x)
    out = []
    prod = 1.0
    for i in range(n - 1):
        out.append(prod * ad.cos(x[i]))
        prod = prod * ad.sin(x[i])
    out.append(prod * ad.cos(x[n - 1]))
    out.append(prod * ad.sin(x[n - 1]))
    return out


def _sphere_metric(x):
    n = len(x)
    entries = [1.0]
    prod = 1.0
    for i in range(n - 1):
        prod = prod * ad.square(ad.sin(x[i]))
        entries.append(prod)
    return _diag(entries)


def _flat_metric(x):
    return _diag([1.0] * len(x))


def ring_bump(axis, height: float, width: float):
    """Smooth function of the embedded point: ``exp(-((<p, axis> - height)/width)^2)``."""
    axis = [float(a) for a in axis]

    def bump(p):
        s = 0.0
        for a, c in zip(axis, p):
            if a:
                s = s + a * c
        return ad.exp(-ad.square((s - height) / width))

    return bump


def gaussian_bump(center, width: float):
    center = [float(c) for c in center]

    def bump(p):
        s = 0.0
        for c, q in zip(center, p):
            s = s + ad.square(q - c)
        return ad.exp(-s / (width * width))

    return bump


def _conformal(metric, bump_of_coords, eps: float):
    def perturbed(x):
        f = ad.exp(eps * bump_of_coords(x))
        return [[f * e if (not isinstance(e, float) or e != 0.0) else 0.0 for e in row] for row in metric(x)]

    return perturbed


def sphere(n: int, perturbation: dict | None = None) -> Chart:
    """Unit round ``S^n`` in polar coordinates, optionally conformally perturbed.

    ``perturbation = {"epsilon": 0.1, "axis": [...], "height": h, "width": w}``
    multiplies the metric by ``exp(epsilon * ring_bump)``.
    """
    if n < 1:
        raise ValueError("sphere dimension must be >= 1")
    axes = tuple([Axis(0.0, math.pi) for _ in range(n - 1)] + [Axis(0.0, 2 * math.pi, periodic=True)])
    base = Chart(
        name=f"S{n}",
        axes=axes,
        metric=_sphere_metric,
        embedding=sphere_embedding,
        euler_char=2 if n % 2 == 0 else 0,
        params={"kind": "sphere", "dim": n},
    )
    if not perturbation:
        return base
    eps = float(perturbation.get("epsilon", 0.1))
    axis = perturbation.get("axis", [1.0] + [0.0] * n)
    bump = ring_bump(axis, float(perturbation.get("height", 0.0)), float(perturbation.get("width", 0.5)))
    return Chart(
        name=f"S{n}~",
        axes=axes,
        metric=_conformal(_sphere_metric, lambda x: bump(sphere_embedding(x)), eps),
        embedding=sphere_embedding,
        euler_char=base.euler_char,
        base=base,
        params={"kind": "sphere", "dim": n, "perturbation": dict(perturbation)},
    )


def flat_torus(n: int) -> Chart:
    axes = tuple(Axis(0.0, 2 * math.pi, periodic=True) for _ in range(n))
    return Chart(name=f"T{n}", axes=axes, metric=_flat_metric, euler_char=0, params={"kind": "flat_torus", "dim": n})


def euclidean(n: int, half_width: float = 2.0, perturbation: dict | None = None) -> Chart:
    """Flat box ``(-w, w)^n``; a perturbation uses ``exp(eps * gaussian_bump)``."""
    axes = tuple(Axis(-half_width, half_width) for _ in range(n))
    base = Chart(
        name=f"R{n}",
        axes=axes,
        metric=_flat_metric,
        params={"kind": "euclidean", "dim": n, "half_width": half_width},
    )
    if not perturbation:
        return base
    eps = float(perturbation.get("epsilon", 0.1))
    bump = gaussian_bump(perturbation.get("center", [0.0] * n), float(perturbation.get("width", 0.5)))
    return Chart(
        name=f"R{n}~",
        axes=axes,
        metric=_conformal(_flat_metric, bump, eps),
        base=base,
        params={"kind": "euclidean", "dim": n, "half_width": half_width, "perturbation": dict(perturbation)},
    )


def from_spec(spec: dict) -> Chart:
    kind = spec["kind"]
    if kind == "sphere":
        return sphere(int(spec["dim"]), spec.get("perturbation"))
    if kind == "flat_torus":
        return flat_torus(int(spec["dim"]))
    if kind == "euclidean":
        return euclidean(int(spec["dim"]), float(spec.get("half_width", 2.0)), spec.get("perturbation"))
    raise ValueError(f"unknown chart kind {kind!r}")


def embedding_jacobian(chart: Chart, X):
    """Embedded points ``(..., N)`` and Jacobians ``(..., N, n)`` via first-order jets."""
    X = np.asarray(X, dtype=float)
    batch = X.shape[:-1]
    n = X.shape[-1]
    out = chart.embedding(ad.seed(X, order=1))
    pts = np.stack([np.broadcast_to(ad.value(c), batch) for c in out], axis=-1)
    jac = np.stack([ad.grad(c, batch, n) for c in out], axis=-2)
    return pts, jac


def flat_space(n: int) -> Chart:
    """Unbounded Euclidean coordinates (used for degree integrals of auxiliary maps)."""
    axes = tuple(Axis(-math.inf, math.inf) for _ in range(n))
    return Chart(name=f"E{n}", axes=axes, metric=_flat_metric, params={"kind": "flat_space", "dim": n})
