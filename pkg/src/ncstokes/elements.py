"""Reference-cell shape functions and tensor Gauss rules on [-1, 1]^2.

Every element is stored as a coefficient matrix over a small spanning set
of reference functions, so values and gradients reduce to one matrix
product each.  Local numbering follows :mod:`ncstokes.mesh`: corners
LL, LR, UR, UL and edges bottom, right, top, left.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

P1NC = "P1NC"
DSSY = "DSSY"
Q1 = "Q1"
P0 = "P0"

CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
EDGE_MIDPOINTS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])

MAX_GAUSS_POINTS = 16


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor rule on the reference square; ``points`` has shape ``(nq, 2)``."""

    points: np.ndarray
    weights: np.ndarray
    points_per_axis: int

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def gauss_rule(points_per_axis: int = 4) -> QuadratureRule:
    """Tensor Gauss-Legendre rule with ``points_per_axis**2`` points.

    Points are ordered with the x-coordinate running fastest.
    """
    if not 1 <= points_per_axis <= MAX_GAUSS_POINTS:
        raise ValueError(
            f"points_per_axis must lie in [1, {MAX_GAUSS_POINTS}], got {points_per_axis}"
        )
    t, w = gauss_legendre_1d(points_per_axis)
    xx, yy = np.meshgrid(t, t, indexing="xy")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    wts = np.outer(w, w).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, points_per_axis)


def gauss_legendre_1d(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """1-D Gauss-Legendre nodes and weights on [-1, 1], symmetrised."""
    t, w = np.polynomial.legendre.leggauss(npts)
    # enforce exact symmetry of the layout
    t = 0.5 * (t - t[::-1])
    w = 0.5 * (w + w[::-1])
    return t, w


def theta(k: int, t):
    """DSSY blending polynomial."""
    t = np.asarray(t, dtype=float)
    if k == 1:
        return t**2 - 5.0 / 3.0 * t**4
    if k == 2:
        return t**2 - 25.0 / 6.0 * t**4 + 3.5 * t**6
    raise ValueError(f"DSSY parameter k must be 1 or 2, got {k}")


def dtheta(k: int, t):
    t = np.asarray(t, dtype=float)
    if k == 1:
        return 2.0 * t - 20.0 / 3.0 * t**3
    if k == 2:
        return 2.0 * t - 50.0 / 3.0 * t**3 + 21.0 * t**5
    raise ValueError(f"DSSY parameter k must be 1 or 2, got {k}")


# A spanning function returns (value, d/dx, d/dy) at arrays of points.
SpanFn = Callable[[np.ndarray, np.ndarray], tuple]


def _one(x, y):
    return np.ones_like(x), np.zeros_like(x), np.zeros_like(x)


def _x(x, y):
    return x, np.ones_like(x), np.zeros_like(x)


def _y(x, y):
    return y, np.zeros_like(x), np.ones_like(x)


def _xy(x, y):
    return x * y, y, x


def _dssy_bubble(k):
    def fn(x, y):
        return theta(k, x) - theta(k, y), dtheta(k, x), -dtheta(k, y)

    return fn


class LocalElement:
    """Shape functions on the reference square.

    Parameters
    ----------
    kind : str
        One of ``"P1NC"``, ``"DSSY"``, ``"Q1"``, ``"P0"``.
    span : sequence of callables
        Spanning reference functions, each returning ``(value, dx, dy)``.
    coefficients : ndarray, shape (dof_count, len(span))
        Shape function ``i`` is ``sum_m coefficients[i, m] * span[m]``.
    """

    def __init__(self, kind: str, span: Sequence[SpanFn], coefficients, k: int | None = None):
        self.kind = kind
        self.k = k
        self._span = tuple(span)
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.coefficients.setflags(write=False)

    @property
    def dof_count(self) -> int:
        return self.coefficients.shape[0]

    def __repr__(self):
        extra = f", k={self.k}" if self.k is not None else ""
        return f"LocalElement({self.kind}{extra})"

    def _span_tables(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        vals = [f(x, y) for f in self._span]
        v = np.stack([np.broadcast_to(a[0], x.shape) for a in vals])
        dx = np.stack([np.broadcast_to(a[1], x.shape) for a in vals])
        dy = np.stack([np.broadcast_to(a[2], x.shape) for a in vals])
        return v, dx, dy

    def values(self, x, y) -> np.ndarray:
        """Shape function values, shape ``(dof_count,) + x.shape``."""
        v, _, _ = self._span_tables(x, y)
        return np.tensordot(self.coefficients, v, axes=1)

    def gradients(self, x, y) -> np.ndarray:
        """Reference gradients, shape ``(dof_count, 2) + x.shape``."""
        _, dx, dy = self._span_tables(x, y)
        c = self.coefficients
        return np.stack([np.tensordot(c, dx, axes=1), np.tensordot(c, dy, axes=1)], axis=1)


@lru_cache(maxsize=None)
def p1nc_local_basis() -> LocalElement:
    """Vertex-associated P1 functions ``(1 + sx*x + sy*y)/4``.

    The four functions span only P1; they satisfy
    ``phi_LL + phi_UR - phi_LR - phi_UL == 0``.  Each one equals 1/2 at the
    midpoints of the two edges touching its corner and 0 at the others.
    """
    c = np.column_stack([np.full(4, 0.25), 0.25 * CORNERS[:, 0], 0.25 * CORNERS[:, 1]])
    return LocalElement(P1NC, (_one, _x, _y), c)


@lru_cache(maxsize=None)
def dssy_local_basis(k: int = 1) -> LocalElement:
    """DSSY element in edge-midpoint nodal form (function ``i`` is 1 at midpoint ``i``)."""
    if k not in (1, 2):
        raise ValueError(f"DSSY parameter k must be 1 or 2, got {k}")
    span = (_one, _x, _y, _dssy_bubble(k))
    mx, my = EDGE_MIDPOINTS[:, 0], EDGE_MIDPOINTS[:, 1]
    vander = np.stack([f(mx, my)[0] for f in span], axis=1)  # (midpoint, span)
    c = np.linalg.inv(vander).T
    return LocalElement(DSSY, span, c, k=k)


@lru_cache(maxsize=None)
def q1_local_basis() -> LocalElement:
    """Bilinear nodal basis ``(1 + sx*x)(1 + sy*y)/4``."""
    sx, sy = CORNERS[:, 0], CORNERS[:, 1]
    c = 0.25 * np.column_stack([np.ones(4), sx, sy, sx * sy])
    return LocalElement(Q1, (_one, _x, _y, _xy), c)


@lru_cache(maxsize=None)
def p0_local_basis() -> LocalElement:
    return LocalElement(P0, (_one,), np.ones((1, 1)))


def local_basis(kind: str, k: int = 1) -> LocalElement:
    if kind == P1NC:
        return p1nc_local_basis()
    if kind == DSSY:
        return dssy_local_basis(k)
    if kind == Q1:
        return q1_local_basis()
    if kind == P0:
        return p0_local_basis()
    raise ValueError(f"unknown element kind {kind!r}")


def edge_mean(element: LocalElement, edge: int, npts: int = 4) -> np.ndarray:
    """Mean of every shape function over a reference edge (1-D Gauss)."""
    t, w = gauss_legendre_1d(npts)
    mx, my = EDGE_MIDPOINTS[edge]
    if mx == 0.0:
        x, y = t, np.full_like(t, my)
    else:
        x, y = np.full_like(t, mx), t
    return element.values(x, y) @ w / 2.0


def p1nc_fit_midpoints(midpoint_values) -> np.ndarray:
    """Coefficients ``(a, b, c)`` of ``a + b*x + c*y`` through four midpoint values.

    The four values must satisfy ``m_bottom + m_top == m_left + m_right``;
    the fit is exact in that case and least-squares otherwise.
    """
    m = np.asarray(midpoint_values, dtype=float)
    vander = np.column_stack([np.ones(4), EDGE_MIDPOINTS])
    coef, *_ = np.linalg.lstsq(vander, m, rcond=None)
    return coef
