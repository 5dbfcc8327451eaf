"""Vectorized forward-mode differentiation with truncated second-order jets.

A :class:`Jet` carries a value together with its gradient (and optionally its
Hessian) with respect to ``K`` seed variables.  All arrays share a leading
batch shape so a whole set of quadrature nodes is differentiated in one pass.

Metric maps and cycle maps are written against the functions in this module
(``sin``, ``cos``, ``sqrt``...), which dispatch to numpy for plain arrays and
propagate derivatives for jets.
"""

from __future__ import annotations

import numpy as np


class Jet:
    """Truncated Taylor expansion ``v + g.dx + 1/2 dx.h.dx``.

    Attributes:
        v: values, shape ``B``.
        g: gradients, shape ``B + (K,)``.
        h: Hessians, shape ``B + (K, K)``, or ``None`` for first-order jets.
    """

    __array_priority__ = 1000

    def __init__(self, v, g, h=None):
        self.v = np.asarray(v, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.h = None if h is None else np.asarray(h, dtype=float)

    @property
    def order(self) -> int:
        return 1 if self.h is None else 2

    @property
    def nvars(self) -> int:
        return self.g.shape[-1]

    def __repr__(self):
        return f"Jet(v={self.v!r}, order={self.order})"

    # -- helpers -----------------------------------------------------------
    def _lift(self, c):
        c = np.asarray(c, dtype=float)
        shape = np.broadcast_shapes(c.shape, self.v.shape)
        g = np.zeros(shape + (self.nvars,))
        h = None if self.h is None else np.zeros(shape + (self.nvars, self.nvars))
        return Jet(np.broadcast_to(c, shape), g, h)

    def _chain(self, f0, f1, f2=None):
        """Apply a scalar function given its value and first two derivatives."""
        g = f1[..., None] * self.g
        h = None
        if self.h is not None:
            h = f1[..., None, None] * self.h + f2[..., None, None] * (
                self.g[..., :, None] * self.g[..., None, :]
            )
        return Jet(f0, g, h)

    # -- arithmetic ----------------------------------------------------------
    def __neg__(self):
        return Jet(-self.v, -self.g, None if self.h is None else -self.h)

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.broadcast_shapes(other.shape, self.v.shape) != self.v.shape:
                return self + self._lift(other)
            return Jet(self.v + other, self.g, self.h)
        h = None if (self.h is None or other.h is None) else self.h + other.h
        return Jet(self.v + other.v, self.g + other.g, h)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            h = None if self.h is None else c[..., None, None] * self.h
            return Jet(self.v * c, c[..., None] * self.g, h)
        v = self.v * other.v
        g = self.v[..., None] * other.g + other.v[..., None] * self.g
        h = None
        if self.h is not None and other.h is not None:
            cross = self.g[..., :, None] * other.g[..., None, :]
            h = (
                self.v[..., None, None] * other.h
                + other.v[..., None, None] * self.h
                + cross
                + np.swapaxes(cross, -1, -2)
            )
        return Jet(v, g, h)

    __rmul__ = __mul__

    def reciprocal(self):
        inv = 1.0 / self.v
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        p = float(p)
        if p == 2.0:
            return self * self
        v = self.v
        return self._chain(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))


def seed(values, order: int = 2):
    """Return one jet per column of ``values`` (shape ``B + (K,)``)."""
    values = np.asarray(values, dtype=float)
    k = values.shape[-1]
    batch = values.shape[:-1]
    eye = np.eye(k)
    out = []
    for i in range(k):
        g = np.broadcast_to(eye[i], batch + (k,)).copy()
        h = np.zeros(batch + (k, k)) if order == 2 else None
        out.append(Jet(values[..., i], g, h))
    return out


def value(x):
    return x.v if isinstance(x, Jet) else np.asarray(x, dtype=float)


def grad(x, batch, k):
    """Gradient of ``x`` broadcast to ``batch + (k,)``; zero for constants."""
    if isinstance(x, Jet):
        return np.broadcast_to(x.g, batch + (k,))
    return np.zeros(batch + (k,))


def hess(x, batch, k):
    if isinstance(x, Jet) and x.h is not None:
        return np.broadcast_to(x.h, batch + (k, k))
    return np.zeros(batch + (k, k))


# -- elementary functions -------------------------------------------------------


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.v), np.cos(x.v)
        return x._chain(s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.v), np.cos(x.v)
        return x._chain(c, -s, -c)
    return np.cos(x)


def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.v)
        return x._chain(e, e, e)
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        inv = 1.0 / x.v
        return x._chain(np.log(x.v), inv, -inv * inv)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Jet):
        r = np.sqrt(x.v)
        return x._chain(r, 0.5 / r, -0.25 / (r * x.v))
    return np.sqrt(x)


def arctan(x):
    if isinstance(x, Jet):
        d = 1.0 / (1.0 + x.v * x.v)
        return x._chain(np.arctan(x.v), d, -2.0 * x.v * d * d)
    return np.arctan(x)


def square(x):
    return x * x
