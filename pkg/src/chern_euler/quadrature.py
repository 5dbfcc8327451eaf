"""Deterministic tensor-product quadrature with order-doubling error estimates.

Axes are either ``"gauss"`` (Gauss-Legendre, open interval: no node ever sits
on an endpoint, which keeps polar-coordinate singularities out of reach) or
``"periodic"`` (equispaced trapezoid rule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

DEFAULT_GAUSS = 32
DEFAULT_PERIODIC = 64
CHUNK = 16384


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    nodes: tuple
    weights: tuple
    kinds: tuple

    @property
    def size(self) -> int:
        return math.prod(len(w) for w in self.weights)

    @property
    def ndim(self) -> int:
        return len(self.kinds)


@dataclass
class IntegralResult:
    value: float
    error_estimate: float
    nodes_used: int
    converged: bool = True

    def __post_init__(self):
        self.error_estimate = abs(self.error_estimate)


def axis_rule(lo: float, hi: float, kind: str, order: int, panels: int = 1):
    """Nodes and weights on one axis; ``panels`` splits Gauss axes into equal pieces."""
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    if kind == "periodic":
        h = (hi - lo) / order
        return lo + h * np.arange(order), np.full(order, h)
    if kind != "gauss":
        raise ValueError(f"unknown axis kind {kind!r}")
    x, w = leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def tensor_rule(box, orders: Optional[Sequence[int]] = None, gauss: int = DEFAULT_GAUSS,
                periodic: int = DEFAULT_PERIODIC, panels: int = 1) -> QuadratureRule:
    """Tensor-product rule on ``box = [(lo, hi, kind), ...]``."""
    nodes, weights, kinds = [], [], []
    for i, (lo, hi, kind) in enumerate(box):
        order = orders[i] if orders is not None else (periodic if kind == "periodic" else gauss)
        x, w = axis_rule(lo, hi, kind, int(order), panels if kind == "gauss" else 1)
        nodes.append(x)
        weights.append(w)
        kinds.append(kind)
    return QuadratureRule(tuple(nodes), tuple(weights), tuple(kinds))


def _grid(rule: QuadratureRule):
    if rule.ndim == 0:
        return np.zeros((1, 0)), np.ones(1)
    mesh = np.meshgrid(*rule.nodes, indexing="ij")
    wmesh = np.meshgrid(*rule.weights, indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=-1)
    W = np.prod(np.stack([w.ravel() for w in wmesh], axis=-1), axis=-1)
    return P, W


def apply_rule(f: Callable, rule: QuadratureRule, chunk: int = CHUNK) -> float:
    """Weighted sum of ``f`` over the rule nodes, chunked, in a fixed order."""
    P, W = _grid(rule)
    partial = []
    for start in range(0, len(W), chunk):
        vals = np.asarray(f(P[start:start + chunk]), dtype=float)
        vals = np.broadcast_to(vals, W[start:start + chunk].shape)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            node = P[start:start + chunk][np.argmax(bad)]
            raise QuadratureError(f"integrand is not finite at node {node.tolist()}")
        partial.append(float(np.dot(vals, W[start:start + chunk])))
    return math.fsum(partial)


def integrate_box(f: Callable, box, orders: Optional[Sequence[int]] = None, gauss: int = DEFAULT_GAUSS,
                  periodic: int = DEFAULT_PERIODIC, panels: int = 1, tol: Optional[float] = None,
                  chunk: int = CHUNK) -> IntegralResult:
    """Integrate ``f(P) -> values`` (``P`` of shape ``(N, d)``) over ``box``.

    The value is taken at the doubled order; the error estimate is the
    difference between the base and doubled orders.
    """
    if orders is None:
        orders = [periodic if k == "periodic" else gauss for (_, _, k) in box]
    coarse = tensor_rule(box, orders, panels=panels)
    fine = tensor_rule(box, [2 * o for o in orders], panels=panels)
    v1 = apply_rule(f, coarse, chunk)
    v2 = apply_rule(f, fine, chunk)
    err = abs(v2 - v1)
    converged = True if tol is None else err <= tol
    return IntegralResult(v2, err, coarse.size + fine.size, converged)


def integrate_form_over_chart(form_fn: Callable, chart, box=None, **kw) -> IntegralResult:
    """Integrate a top-degree form over (a box in) a chart.

    ``form_fn(X, basis)`` returns the form evaluated at points ``X`` on the
    vectors ``basis[..., a, :]``; the coordinate basis is passed and the
    chart orientation applied.
    """
    box = chart.box() if box is None else box
    n = chart.dim

    def density(P):
        basis = np.broadcast_to(np.eye(n), P.shape[:-1] + (n, n))
        return chart.orientation * np.asarray(form_fn(P, basis))

    return integrate_box(density, box, **kw)
