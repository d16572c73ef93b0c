"""Element-loop assembly of the Stokes forms on uniform square meshes.

All element integrals use the affine map ``x = x0 + h/2 (xh + 1)``, so
physical gradients are reference gradients times ``2/h`` and the Jacobian
determinant is ``h^2/4``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .elements import QuadratureRule, gauss_rule
from .mesh import UniformMesh
from .spaces import FeSpace, P0_SPACE, checkerboard


@dataclass
class AssembledSystem:
    """Matrices and vectors of one discrete Stokes problem.

    ``constraints`` holds the pressure constraint rows (mean value and,
    optionally, checkerboard), each scaled by ``h^2`` so that
    ``constraints @ p`` are L2 inner products.
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    Mp: sp.csr_matrix
    F: np.ndarray
    constraints: np.ndarray


def _tables(space: FeSpace, rule: QuadratureRule):
    h = space.mesh.h
    xh, yh = rule.points[:, 0], rule.points[:, 1]
    phi = space.element.values(xh, yh)
    dphi = space.element.gradients(xh, yh) * (2.0 / h)
    wj = rule.weights * (h * h / 4.0)
    return phi, dphi, wj


def _element_order(mesh, element_order):
    if element_order is None:
        return np.arange(mesh.num_elements)
    order = np.asarray(element_order, dtype=int)
    if np.sort(order).tolist() != list(range(mesh.num_elements)):
        raise ValueError("element_order must be a permutation of the element ids")
    return order


def _require_velocity(space: FeSpace):
    if not space.is_velocity:
        raise ValueError(f"{space.kind} is not a velocity space")


def _coo_to_csr(rows, cols, vals, shape):
    keep = (rows >= 0) & (cols >= 0)
    m = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def assemble_grad_grad(
    space: FeSpace,
    nu: float = 1.0,
    rule: QuadratureRule | None = None,
    trial_space: FeSpace | None = None,
    element_order=None,
) -> sp.csr_matrix:
    """Broken vector Laplacian ``nu * sum_Q (grad u, grad v)_Q``.

    With ``trial_space`` given, assembles the rectangular coupling with rows
    on ``space`` and columns on ``trial_space``.
    """
    _require_velocity(space)
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    rule = rule or gauss_rule(4)
    trial = trial_space or space
    _require_velocity(trial)
    if trial.mesh is not space.mesh:
        raise ValueError("spaces live on different meshes")
    _, dphi_r, wj = _tables(space, rule)
    _, dphi_c, _ = _tables(trial, rule)
    # uniform mesh: one local matrix for every element
    local = nu * np.einsum("idq,jdq,q->ij", dphi_r, dphi_c, wj)
    order = _element_order(space.mesh, element_order)
    rd = space.vector_cell_dofs[order]  # (ne, nr, 2)
    cd = trial.vector_cell_dofs[order]  # (ne, nc, 2)
    rows = np.broadcast_to(rd[:, :, None, :], (len(order), rd.shape[1], cd.shape[1], 2))
    cols = np.broadcast_to(cd[:, None, :, :], rows.shape)
    vals = np.broadcast_to(local[None, :, :, None], rows.shape)
    return _coo_to_csr(rows.ravel(), cols.ravel(), vals.ravel(), (space.num_dofs, trial.num_dofs))


def assemble_div_pressure(
    vspace: FeSpace,
    pspace: FeSpace,
    rule: QuadratureRule | None = None,
    element_order=None,
) -> sp.csr_matrix:
    """``B[q, v] = integral of div(phi_v) over element q`` (P0 pressure)."""
    _require_velocity(vspace)
    if pspace.kind != P0_SPACE:
        raise ValueError("pressure space must be P0")
    if vspace.mesh is not pspace.mesh:
        raise ValueError("velocity and pressure spaces live on different meshes")
    rule = rule or gauss_rule(4)
    _, dphi, wj = _tables(vspace, rule)
    local = dphi @ wj  # (nloc, 2): integral of d_c phi_i
    order = _element_order(vspace.mesh, element_order)
    vd = vspace.vector_cell_dofs[order]
    rows = np.broadcast_to(order[:, None, None], vd.shape)
    vals = np.broadcast_to(local[None], vd.shape)
    return _coo_to_csr(rows.ravel(), vd.ravel(), vals.ravel(), (pspace.num_dofs, vspace.num_dofs))


def assemble_pressure_mass(pspace: FeSpace) -> sp.csr_matrix:
    """Diagonal P0 mass matrix, ``h^2`` on the diagonal."""
    if pspace.kind != P0_SPACE:
        raise ValueError("pressure space must be P0")
    h = pspace.mesh.h
    return sp.identity(pspace.num_dofs, format="csr") * (h * h)


def quadrature_points(mesh: UniformMesh, rule: QuadratureRule):
    """Physical quadrature points, two arrays of shape ``(N_Q, nq)``."""
    e = np.arange(mesh.num_elements)[:, None]
    return mesh.to_physical(e, rule.points[:, 0], rule.points[:, 1])


def forcing_at_quadrature(f, mesh: UniformMesh, rule: QuadratureRule) -> np.ndarray:
    """Body force at the quadrature points, shape ``(N_Q, nq, 2)``.

    ``f`` is ``None`` (zero), a :class:`TabulatedForcing` matching ``mesh``
    and ``rule``, or a callable ``f(x, y) -> (f_x, f_y)``.
    """
    if f is None:
        return np.zeros((mesh.num_elements, len(rule), 2))
    if isinstance(f, TabulatedForcing) and f.matches(mesh, rule):
        return f.values
    x, y = quadrature_points(mesh, rule)
    fx, fy = f(x, y)
    return np.stack(np.broadcast_arrays(fx, fy), axis=-1).astype(float)


def assemble_load(f, vspace: FeSpace, rule: QuadratureRule | None = None, element_order=None) -> np.ndarray:
    """Load vector ``(f, phi_v)`` for every velocity dof."""
    _require_velocity(vspace)
    rule = rule or gauss_rule(4)
    phi, _, wj = _tables(vspace, rule)
    fq = forcing_at_quadrature(f, vspace.mesh, rule)
    order = _element_order(vspace.mesh, element_order)
    local = np.einsum("iq,q,eqc->eic", phi, wj, fq[order])
    vd = vspace.vector_cell_dofs[order]
    keep = vd >= 0
    F = np.zeros(vspace.num_dofs)
    np.add.at(F, vd[keep], local[keep])
    return F


def constraint_rows(pspace: FeSpace, with_checkerboard: bool) -> np.ndarray:
    mesh = pspace.mesh
    h2 = mesh.h * mesh.h
    rows = [np.full(pspace.num_dofs, h2)]
    if with_checkerboard:
        if mesh.n < 2:
            raise ValueError("checkerboard-free pressure space needs n >= 2")
        rows.append(h2 * checkerboard(mesh, pspace).coefficients)
    return np.vstack(rows)


def assemble_system(
    vspace: FeSpace,
    pspace: FeSpace,
    f=None,
    nu: float = 1.0,
    rule: QuadratureRule | None = None,
    with_checkerboard: bool = False,
) -> AssembledSystem:
    rule = rule or gauss_rule(4)
    return AssembledSystem(
        A=assemble_grad_grad(vspace, nu, rule),
        B=assemble_div_pressure(vspace, pspace, rule),
        Mp=assemble_pressure_mass(pspace),
        F=assemble_load(f, vspace, rule),
        constraints=constraint_rows(pspace, with_checkerboard),
    )


class TabulatedForcing:
    """Body force sampled at the Gauss points of a specific mesh.

    ``values[e, q]`` is ``(f_x, f_y)`` at quadrature point ``q`` (x index
    fastest) of element ``e``.  When used on a different mesh or rule, the
    table is evaluated by tensor Lagrange interpolation through the Gauss
    points of the containing element.

    CSV layout: header ``j,k,q,f_x,f_y`` with one-based element indices
    ``j`` (x direction) and ``k`` (y direction) and zero-based ``q``.
    """

    def __init__(self, n: int, points_per_axis: int, values):
        self.mesh = UniformMesh(n)
        self.rule = gauss_rule(points_per_axis)
        self.values = np.asarray(values, dtype=float)
        expected = (self.mesh.num_elements, len(self.rule), 2)
        if self.values.shape != expected:
            raise ValueError(f"tabulated forcing has shape {self.values.shape}, expected {expected}")

    @property
    def n(self) -> int:
        return self.mesh.n

    @property
    def points_per_axis(self) -> int:
        return self.rule.points_per_axis

    def matches(self, mesh: UniformMesh, rule: QuadratureRule) -> bool:
        return mesh.n == self.n and rule.points_per_axis == self.points_per_axis

    @classmethod
    def from_function(cls, f, n: int, points_per_axis: int = 4) -> "TabulatedForcing":
        mesh = UniformMesh(n)
        rule = gauss_rule(points_per_axis)
        return cls(n, points_per_axis, forcing_at_quadrature(f, mesh, rule))

    @classmethod
    def from_csv(cls, path, n: int, points_per_axis: int = 4) -> "TabulatedForcing":
        nq = points_per_axis**2
        values = np.full((n * n, nq, 2), np.nan)
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["j", "k", "q", "f_x", "f_y"]:
                raise ValueError(f"{path}: header must be 'j,k,q,f_x,f_y'")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 5:
                    raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
                j, k, q = int(row[0]), int(row[1]), int(row[2])
                if not (1 <= j <= n and 1 <= k <= n and 0 <= q < nq):
                    raise ValueError(
                        f"{path}:{lineno}: index (j={j}, k={k}, q={q}) outside n={n}, {nq} points"
                    )
                e = (j - 1) + (k - 1) * n
                if not np.isnan(values[e, q, 0]):
                    raise ValueError(f"{path}:{lineno}: duplicate entry for (j={j}, k={k}, q={q})")
                values[e, q] = float(row[3]), float(row[4])
        if np.isnan(values).any():
            missing = int(np.isnan(values[..., 0]).sum())
            raise ValueError(f"{path}: {missing} quadrature entries missing for n={n}")
        return cls(n, points_per_axis, values)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["j", "k", "q", "f_x", "f_y"])
            for e in range(self.mesh.num_elements):
                i, l = self.mesh.element_ij[e]
                for q in range(len(self.rule)):
                    fx, fy = self.values[e, q]
                    w.writerow([i + 1, l + 1, q, repr(float(fx)), repr(float(fy))])

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = x.shape
        x, y = x.ravel(), y.ravel()
        e = self.mesh.locate(x, y)
        xh, yh = self.mesh.to_reference(e, x, y)
        m = self.points_per_axis
        nodes = self.rule.points[:m, 0]
        lx = _lagrange_1d(nodes, xh)  # (m, npts)
        ly = _lagrange_1d(nodes, yh)
        weights = (ly[:, None, :] * lx[None, :, :]).reshape(m * m, -1)  # q = ix + iy*m
        vals = np.einsum("pqc,qp->pc", self.values[e], weights)
        return vals[:, 0].reshape(shape), vals[:, 1].reshape(shape)


def _lagrange_1d(nodes, t):
    out = np.ones((len(nodes), len(t)))
    for a, xa in enumerate(nodes):
        for b, xb in enumerate(nodes):
            if a != b:
                out[a] *= (t - xb) / (xa - xb)
    return out


def export_matrix_market(matrix, path, comment: str = ""):
    """Write ``matrix`` in MatrixMarket coordinate format.

    The file starts with ``%%MatrixMarket matrix coordinate real general``
    followed by optional ``%`` comment lines, the ``rows cols nnz`` line and
    one-based ``i j value`` triples.
    """
    scipy.io.mmwrite(str(Path(path)), sp.coo_matrix(matrix), comment=comment, field="real", symmetry="general")
