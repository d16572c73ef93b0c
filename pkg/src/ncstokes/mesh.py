"""Uniform square meshes of the unit square and their 2x2 macro partition.

Indexing (all zero-based):

* element ``(i, l)`` with ``0 <= i, l < n`` has id ``i + l*n`` and occupies
  ``[i*h, (i+1)*h] x [l*h, (l+1)*h]``.  In the one-based notation
  ``Q_{jk}`` this is ``j = i + 1``, ``k = l + 1``.
* vertex ``(a, b)`` with ``0 <= a, b <= n`` has id ``a + b*(n+1)``.
* horizontal edge from vertex ``(a, b)`` to ``(a+1, b)`` has id ``a + b*n``;
  vertical edge from ``(a, b)`` to ``(a, b+1)`` has id
  ``n*(n+1) + a + b*(n+1)``.

Local element conventions, shared with :mod:`ncstokes.elements`:

* corners in the order ``(-1,-1), (1,-1), (1,1), (-1,1)`` of the reference
  square, i.e. lower-left, lower-right, upper-right, upper-left;
* edges in the order bottom, right, top, left.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

HORIZONTAL = 0
VERTICAL = 1


@dataclass(frozen=True)
class MacroElement:
    """A 2x2 block of elements.

    ``index`` is the one-based odd pair ``(J, K)`` of its lower-left child.
    ``children`` holds element ids ordered
    ``[(j,k), (j+1,k), (j,k+1), (j+1,k+1)]``.
    """

    index: tuple[int, int]
    children: tuple[int, int, int, int]


@dataclass(frozen=True, eq=False)
class UniformMesh:
    """Uniform ``n x n`` square mesh of (0,1)^2.

    Construct with :func:`build_uniform_mesh`.  All arrays are computed once
    and marked read-only.
    """

    n: int
    h: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise TypeError("n must be an integer")
        if self.n < 1:
            raise ValueError("mesh needs at least one element per side (n >= 1)")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", 1.0 / self.n)

    # counts ---------------------------------------------------------------
    @property
    def num_elements(self) -> int:
        return self.n * self.n

    @property
    def num_vertices(self) -> int:
        return (self.n + 1) ** 2

    @property
    def num_interior_vertices(self) -> int:
        return (self.n - 1) ** 2

    @property
    def num_edges(self) -> int:
        return 2 * self.n * (self.n + 1)

    # ids --------------------------------------------------------------------
    def element_id(self, i: int, l: int) -> int:
        return i + l * self.n

    def vertex_id(self, a: int, b: int) -> int:
        return a + b * (self.n + 1)

    def horizontal_edge_id(self, a: int, b: int) -> int:
        return a + b * self.n

    def vertical_edge_id(self, a: int, b: int) -> int:
        return self.n * (self.n + 1) + a + b * (self.n + 1)

    # geometry ---------------------------------------------------------------
    @cached_property
    def grid(self) -> np.ndarray:
        """Coordinates ``a*h`` for ``a = 0..n``, computed once."""
        g = np.arange(self.n + 1) * self.h
        g[-1] = 1.0
        return _frozen(g)

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertex coordinates, shape ``(num_vertices, 2)``."""
        a, b = np.meshgrid(np.arange(self.n + 1), np.arange(self.n + 1), indexing="xy")
        a, b = a.ravel(), b.ravel()
        return _frozen(np.column_stack([self.grid[a], self.grid[b]]))

    @cached_property
    def element_ij(self) -> np.ndarray:
        """Zero-based ``(i, l)`` of every element, shape ``(N_Q, 2)``."""
        e = np.arange(self.num_elements)
        return _frozen(np.column_stack([e % self.n, e // self.n]))

    @cached_property
    def element_origin(self) -> np.ndarray:
        """Lower-left corner of every element."""
        ij = self.element_ij
        return _frozen(np.column_stack([self.grid[ij[:, 0]], self.grid[ij[:, 1]]]))

    @cached_property
    def element_center(self) -> np.ndarray:
        ij = self.element_ij
        g = self.grid
        cx = 0.5 * (g[ij[:, 0]] + g[ij[:, 0] + 1])
        cy = 0.5 * (g[ij[:, 1]] + g[ij[:, 1] + 1])
        return _frozen(np.column_stack([cx, cy]))

    @cached_property
    def element_vertices(self) -> np.ndarray:
        """Corner vertex ids per element (LL, LR, UR, UL), shape ``(N_Q, 4)``."""
        i, l = self.element_ij.T
        m = self.n + 1
        ll = i + l * m
        return _frozen(np.column_stack([ll, ll + 1, ll + 1 + m, ll + m]))

    @cached_property
    def element_edges(self) -> np.ndarray:
        """Edge ids per element (bottom, right, top, left), shape ``(N_Q, 4)``."""
        i, l = self.element_ij.T
        n = self.n
        bottom = i + l * n
        top = i + (l + 1) * n
        left = n * (n + 1) + i + l * (n + 1)
        right = left + 1
        return _frozen(np.column_stack([bottom, right, top, left]))

    @cached_property
    def edge_orientation(self) -> np.ndarray:
        o = np.full(self.num_edges, VERTICAL, dtype=int)
        o[: self.n * (self.n + 1)] = HORIZONTAL
        return _frozen(o)

    @cached_property
    def edge_vertices(self) -> np.ndarray:
        """Endpoint vertex ids per edge, shape ``(num_edges, 2)``."""
        n, m = self.n, self.n + 1
        nh = n * (n + 1)
        e = np.arange(nh)
        a, b = e % n, e // n
        horiz = np.column_stack([a + b * m, a + 1 + b * m])
        e = np.arange(self.num_edges - nh)
        a, b = e % m, e // m
        vert = np.column_stack([a + b * m, a + (b + 1) * m])
        return _frozen(np.vstack([horiz, vert]))

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        v = self.vertices[self.edge_vertices]
        return _frozen(0.5 * (v[:, 0] + v[:, 1]))

    @cached_property
    def edge_elements(self) -> np.ndarray:
        """The (at most two) elements sharing each edge; ``-1`` marks none.

        Column 0 is the element below / left of the edge, column 1 the one
        above / right of it.
        """
        out = np.full((self.num_edges, 2), -1, dtype=int)
        ee = self.element_edges
        ids = np.arange(self.num_elements)
        # bottom and left edges see the element above/right of them
        out[ee[:, 0], 1] = ids
        out[ee[:, 3], 1] = ids
        out[ee[:, 2], 0] = ids
        out[ee[:, 1], 0] = ids
        return _frozen(out)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Boolean mask of edges on the boundary of the unit square."""
        return _frozen((self.edge_elements < 0).any(axis=1))

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        a = np.arange(self.num_vertices) % (self.n + 1)
        b = np.arange(self.num_vertices) // (self.n + 1)
        return _frozen((a == 0) | (a == self.n) | (b == 0) | (b == self.n))

    @cached_property
    def interior_vertex_ids(self) -> np.ndarray:
        return _frozen(np.flatnonzero(~self.boundary_vertices))

    @cached_property
    def interior_edge_ids(self) -> np.ndarray:
        return _frozen(np.flatnonzero(~self.boundary_edges))

    def locate(self, x, y) -> np.ndarray:
        """Element ids containing the points ``(x, y)`` (right/top edges inclusive)."""
        i = np.clip(np.floor(np.asarray(x) * self.n).astype(int), 0, self.n - 1)
        l = np.clip(np.floor(np.asarray(y) * self.n).astype(int), 0, self.n - 1)
        return i + l * self.n

    def to_reference(self, elements, x, y):
        """Map physical points inside ``elements`` to reference coordinates."""
        o = self.element_origin[elements]
        return 2.0 * (x - o[..., 0]) / self.h - 1.0, 2.0 * (y - o[..., 1]) / self.h - 1.0

    def to_physical(self, elements, xh, yh):
        """Map reference coordinates to physical points; broadcasts over elements."""
        o = self.element_origin[elements]
        return o[..., 0] + 0.5 * self.h * (xh + 1.0), o[..., 1] + 0.5 * self.h * (yh + 1.0)

    @cached_property
    def macro_elements(self) -> tuple[MacroElement, ...]:
        return tuple(macro_partition(self))


def build_uniform_mesh(n: int) -> UniformMesh:
    """Uniform ``n x n`` mesh of the unit square."""
    return UniformMesh(n)


def macro_partition(mesh: UniformMesh) -> list[MacroElement]:
    """Split the mesh into 2x2 macro elements ordered like the elements."""
    n = mesh.n
    if n % 2:
        raise ValueError(f"macro partition requires even n (got n={n})")
    out = []
    for l in range(0, n, 2):
        for i in range(0, n, 2):
            e = mesh.element_id(i, l)
            out.append(MacroElement((i + 1, l + 1), (e, e + 1, e + n, e + n + 1)))
    return out


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a
