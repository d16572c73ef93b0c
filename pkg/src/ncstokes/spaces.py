"""Global discrete spaces, pressure modes, the macro bubble and interpolants.

Vector spaces interleave components: global dof ``2*s + c`` is component
``c`` of scalar dof ``s``.  Scalar dofs are interior vertices (P1NC, Q1),
interior edges (DSSY) or elements (P0), numbered in increasing mesh id.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .elements import DSSY, P0, P1NC, Q1, LocalElement, QuadratureRule, gauss_rule, local_basis
from .mesh import UniformMesh

P1NC_VEC0 = "P1NC_vec0"
Q1_VEC0 = "Q1_vec0"
DSSY_VEC0 = "DSSY_vec0"
P0_SPACE = "P0"

SPACE_KINDS = (P1NC_VEC0, Q1_VEC0, DSSY_VEC0, P0_SPACE)
_ELEMENT_OF = {P1NC_VEC0: P1NC, Q1_VEC0: Q1, DSSY_VEC0: DSSY, P0_SPACE: P0}


@dataclass(frozen=True, eq=False)
class FeSpace:
    """A global finite element space on a uniform mesh.

    ``cell_dofs[e, i]`` is the scalar dof carried by local shape function
    ``i`` of element ``e``, or ``-1`` if that function is removed by the
    homogeneous boundary condition.
    """

    mesh: UniformMesh
    kind: str
    element: LocalElement
    components: int
    num_scalar_dofs: int
    cell_dofs: np.ndarray
    entity_ids: np.ndarray  # mesh entity behind each scalar dof

    @property
    def num_dofs(self) -> int:
        return self.components * self.num_scalar_dofs

    @property
    def is_velocity(self) -> bool:
        return self.components == 2

    def __repr__(self):
        return f"FeSpace({self.kind}, n={self.mesh.n}, dofs={self.num_dofs})"

    @cached_property
    def vector_cell_dofs(self) -> np.ndarray:
        """Per element global dofs for component c of local function i at ``[e, i, c]``."""
        s = self.cell_dofs
        if self.components == 1:
            return s[:, :, None]
        out = np.stack([2 * s, 2 * s + 1], axis=2)
        out[s < 0] = -1
        return out


def build_space(mesh: UniformMesh, kind: str, k: int = 1) -> FeSpace:
    """Build one of ``P1NC_vec0``, ``Q1_vec0``, ``DSSY_vec0`` or ``P0``.

    ``k`` selects the DSSY blending polynomial and is ignored otherwise.
    """
    if kind not in _ELEMENT_OF:
        raise ValueError(f"unknown space kind {kind!r}; expected one of {SPACE_KINDS}")
    element = local_basis(_ELEMENT_OF[kind], k)
    if kind in (P1NC_VEC0, Q1_VEC0):
        ids = mesh.interior_vertex_ids
        entity_cells = mesh.element_vertices
        nent = mesh.num_vertices
    elif kind == DSSY_VEC0:
        ids = mesh.interior_edge_ids
        entity_cells = mesh.element_edges
        nent = mesh.num_edges
    else:
        ids = np.arange(mesh.num_elements)
        cell_dofs = ids[:, None].copy()
        cell_dofs.setflags(write=False)
        return FeSpace(mesh, kind, element, 1, mesh.num_elements, cell_dofs, ids)
    numbering = np.full(nent, -1, dtype=int)
    numbering[ids] = np.arange(len(ids))
    cell_dofs = numbering[entity_cells]
    cell_dofs.setflags(write=False)
    return FeSpace(mesh, kind, element, 2, len(ids), cell_dofs, ids)


@dataclass(eq=False)
class DiscreteField:
    """Coefficient vector over an :class:`FeSpace`."""

    space: FeSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.num_dofs,):
            raise ValueError(
                f"expected {self.space.num_dofs} coefficients, got {self.coefficients.shape}"
            )

    def local_coefficients(self) -> np.ndarray:
        """Per element coefficients, shape ``(N_Q, nloc, components)``."""
        idx = self.space.vector_cell_dofs
        if not self.coefficients.size:
            return np.zeros(idx.shape)
        return np.where(idx >= 0, self.coefficients[np.maximum(idx, 0)], 0.0)

    def tabulate(self, xh, yh, elements=None):
        """Values and physical gradients at reference points on each element.

        Returns ``values`` of shape ``(ne, npts, components)`` and ``grads``
        of shape ``(ne, npts, components, 2)``.
        """
        xh = np.asarray(xh, dtype=float)
        yh = np.asarray(yh, dtype=float)
        loc = self.local_coefficients()
        if elements is not None:
            loc = loc[elements]
        el = self.space.element
        phi = el.values(xh, yh)  # (nloc, npts)
        dphi = el.gradients(xh, yh) * (2.0 / self.space.mesh.h)  # (nloc, 2, npts)
        values = np.einsum("eic,ip->epc", loc, phi)
        grads = np.einsum("eic,idp->epcd", loc, dphi)
        return values, grads

    def element_values(self, element: int, xh, yh) -> np.ndarray:
        """Values on one element at reference points, shape ``(npts, components)``."""
        v, _ = self.tabulate(np.atleast_1d(xh), np.atleast_1d(yh), elements=[element])
        return v[0]

    def __call__(self, x, y) -> np.ndarray:
        """Evaluate at physical points; shape ``(npts, components)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        mesh = self.space.mesh
        e = mesh.locate(x, y)
        xh, yh = mesh.to_reference(e, x, y)
        loc = self.local_coefficients()[e]  # (npts, nloc, c)
        phi = self.space.element.values(xh, yh)  # (nloc, npts)
        return np.einsum("pic,ip->pc", loc, phi)

    def to_csv(self, fh=None) -> str:
        """Write ``entity_id,<component columns>`` rows; returns the text.

        Scalar fields carry one ``value`` column; vector fields carry
        ``u_x,u_y``.  The entity is the element, vertex or edge id behind
        each dof (see :mod:`ncstokes.mesh` for the numbering).
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        sp = self.space
        if sp.components == 1:
            w.writerow(["entity_id", "value"])
            for ent, val in zip(sp.entity_ids, self.coefficients):
                w.writerow([int(ent), repr(float(val))])
        else:
            w.writerow(["entity_id", "u_x", "u_y"])
            c = self.coefficients.reshape(-1, 2)
            for ent, (ux, uy) in zip(sp.entity_ids, c):
                w.writerow([int(ent), repr(float(ux)), repr(float(uy))])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _pressure_space(mesh, pspace):
    if pspace is None:
        return build_space(mesh, P0_SPACE)
    if pspace.kind != P0_SPACE or pspace.mesh is not mesh:
        raise ValueError("expected a P0 space on the same mesh")
    return pspace


def checkerboard(mesh: UniformMesh, pspace: FeSpace | None = None) -> DiscreteField:
    """Global checkerboard with unit L2 norm; +1 on the lower-left element."""
    pspace = _pressure_space(mesh, pspace)
    i, l = mesh.element_ij.T
    return DiscreteField(pspace, np.where((i + l) % 2 == 0, 1.0, -1.0))


def macro_checkerboard(mesh: UniformMesh, J: int, K: int, pspace=None) -> DiscreteField:
    """Elementary checkerboard on macro element ``(J, K)`` (odd, one-based).

    Laid out as ``[[-1, 1], [1, -1]]`` over ``[[Q_{j,k+1}, Q_{j+1,k+1}],
    [Q_{j,k}, Q_{j+1,k}]]``, so the lower-left child carries +1.
    """
    pspace = _pressure_space(mesh, pspace)
    n = mesh.n
    if n % 2:
        raise ValueError(f"macro partition requires even n (got n={n})")
    if J % 2 == 0 or K % 2 == 0 or not (1 <= J < n and 1 <= K < n):
        raise ValueError(f"invalid macro index ({J}, {K}) for n={n}")
    e = mesh.element_id(J - 1, K - 1)
    c = np.zeros(mesh.num_elements)
    c[[e, e + 1, e + n, e + n + 1]] = [1.0, -1.0, -1.0, 1.0]
    return DiscreteField(pspace, c)


def macro_bubble(mesh: UniformMesh, space: FeSpace | None = None, k: int = 1) -> DiscreteField:
    """Global DSSY macro bubble, the sum of one bubble per macro element.

    Inside macro ``(J, K)`` the x-component has edge mean +1 on the vertical
    edge between the two lower children, -1 on the one between the upper
    children, and vanishing means on all other edges.
    """
    if mesh.n % 2:
        raise ValueError(f"macro bubble requires even n (got n={mesh.n})")
    if space is None:
        space = build_space(mesh, DSSY_VEC0, k)
    elif space.kind != DSSY_VEC0 or space.mesh is not mesh:
        raise ValueError("macro bubble lives in a DSSY_vec0 space on the same mesh")
    numbering = np.full(mesh.num_edges, -1, dtype=int)
    numbering[space.entity_ids] = np.arange(space.num_scalar_dofs)
    c = np.zeros(space.num_dofs)
    for macro in mesh.macro_elements:
        lower_left, _, upper_left, _ = macro.children
        lower_edge = mesh.element_edges[lower_left, 1]
        upper_edge = mesh.element_edges[upper_left, 1]
        c[2 * numbering[lower_edge]] = 1.0
        c[2 * numbering[upper_edge]] = -1.0
    return DiscreteField(space, c)


def interpolate_p1nc(w, mesh: UniformMesh, space: FeSpace | None = None) -> DiscreteField:
    """Midpoint-average interpolant into the zero-BC P1NC space.

    Each local midpoint value is the mean of ``w`` at the two edge end
    points; globally that makes the vertex coefficients equal ``w(v)``.
    ``w(x, y)`` returns an array of shape ``(2, npts)`` or ``(npts, 2)``.
    Values at boundary vertices are dropped (``w`` is assumed to vanish there).
    """
    if space is None:
        space = build_space(mesh, P1NC_VEC0)
    elif space.kind != P1NC_VEC0:
        raise ValueError("target must be a P1NC_vec0 space")
    pts = mesh.vertices[space.entity_ids]
    vals = _as_points_by_components(w(pts[:, 0], pts[:, 1]), len(pts))
    return DiscreteField(space, vals.ravel())


def _as_points_by_components(vals, npts):
    vals = np.asarray(vals, dtype=float)
    if vals.shape == (2, npts) and npts != 2:
        vals = vals.T
    return vals.reshape(npts, 2)


def pressure_modes(mesh: UniformMesh, with_checkerboard: bool) -> np.ndarray:
    """Coefficient vectors of the removed pressure modes, shape ``(m, N_Q)``."""
    rows = [np.ones(mesh.num_elements)]
    if with_checkerboard:
        if mesh.n < 2:
            raise ValueError("checkerboard-free pressure space needs n >= 2")
        rows.append(checkerboard(mesh).coefficients)
    return np.vstack(rows)


def project_pressure(
    q,
    mesh: UniformMesh,
    remove_checkerboard: bool = True,
    rule: QuadratureRule | None = None,
    pspace: FeSpace | None = None,
) -> DiscreteField:
    """L2 projection of a scalar function onto mean-zero (checkerboard-free) P0.

    ``q`` is either a callable ``q(x, y)`` or an array of element values.
    """
    pspace = _pressure_space(mesh, pspace)
    if callable(q):
        rule = rule or gauss_rule(4)
        x, y = mesh.to_physical(np.arange(mesh.num_elements)[:, None], rule.points[:, 0], rule.points[:, 1])
        means = (q(x, y) @ rule.weights) / 4.0
    else:
        means = np.asarray(q, dtype=float).copy()
    modes = pressure_modes(mesh, remove_checkerboard)
    basis, _ = np.linalg.qr(modes.T)
    means = means - basis @ (basis.T @ means)
    return DiscreteField(pspace, means)
