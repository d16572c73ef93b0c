"""Constrained saddle-point solves for the supported velocity/pressure pairs.

The discrete problem is

    a_h(u, v) - b_h(v, p) = (f, v)      for all velocity test functions v
    b_h(u, q)             = 0           for all admissible pressures q

with the pressure restricted by linear constraints ``C p = 0`` (mean value,
plus the checkerboard for the reduced pressure pairs).  The constraints are
enforced with Lagrange multipliers ``mu``; the symmetric system is

    [  A  -B^T   0  ] [u ]   [F]
    [ -B   0    C^T ] [p ] = [0]
    [  0   C     0  ] [mu]   [0]
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    assemble_div_pressure,
    assemble_grad_grad,
    assemble_load,
    assemble_pressure_mass,
    constraint_rows,
)
from .elements import QuadratureRule, gauss_rule
from .mesh import UniformMesh, build_uniform_mesh
from .spaces import (
    DSSY_VEC0,
    P0_SPACE,
    P1NC_VEC0,
    Q1_VEC0,
    DiscreteField,
    FeSpace,
    build_space,
    macro_bubble,
)

P1NC_P0TILDE = "P1NC_P0tilde"
P1NCB_P0 = "P1NCB_P0"
Q1_P0TILDE = "Q1_P0tilde"
DSSY_P0 = "DSSY_P0"
PAIRS = (P1NC_P0TILDE, P1NCB_P0, Q1_P0TILDE, DSSY_P0)

_VELOCITY = {P1NC_P0TILDE: P1NC_VEC0, P1NCB_P0: P1NC_VEC0, Q1_P0TILDE: Q1_VEC0, DSSY_P0: DSSY_VEC0}

RESIDUAL_TOL = 1e-10
SPD_TOL = 1e-11


class NumericalError(RuntimeError):
    """A solve or factorization failed its accuracy contract."""


class SingularSystemError(NumericalError):
    def __init__(self, message, null_vector=None):
        super().__init__(message)
        self.null_vector = null_vector


class NotPositiveDefiniteError(NumericalError):
    def __init__(self, pivot: int, value: float):
        super().__init__(f"non-positive pivot {value:.3e} at index {pivot}")
        self.pivot = pivot
        self.value = value


@dataclass(frozen=True)
class PairSpec:
    """A velocity/pressure pair on an ``n x n`` mesh."""

    pair: str
    n: int
    nu: float = 1.0
    points_per_axis: int = 4
    k: int = 1

    def __post_init__(self):
        if self.pair not in PAIRS:
            raise ValueError(f"unknown pair {self.pair!r}; expected one of {PAIRS}")
        if self.n < 2:
            raise ValueError(f"{self.pair} needs n >= 2 (got n={self.n})")
        if self.pair in (P1NC_P0TILDE, P1NCB_P0) and self.n % 2:
            raise ValueError(f"{self.pair} requires even n (got n={self.n})")
        if self.nu <= 0:
            raise ValueError("viscosity must be positive")

    @property
    def reduced_pressure(self) -> bool:
        """Whether the checkerboard is removed from the pressure space."""
        return self.pair in (P1NC_P0TILDE, Q1_P0TILDE)

    @property
    def has_bubble(self) -> bool:
        return self.pair == P1NCB_P0

    @property
    def rule(self) -> QuadratureRule:
        return gauss_rule(self.points_per_axis)


@dataclass
class Discretization:
    """Assembled operators of a pair; the bubble, if any, is the last velocity dof."""

    spec: PairSpec
    mesh: UniformMesh
    vspace: FeSpace
    pspace: FeSpace
    A: sp.csr_matrix
    B: sp.csr_matrix
    Mp: sp.csr_matrix
    constraints: np.ndarray
    bubble: DiscreteField | None = None

    @property
    def num_velocity(self) -> int:
        return self.A.shape[0]

    def load(self, f) -> np.ndarray:
        F = assemble_load(f, self.vspace, self.spec.rule)
        if self.bubble is not None:
            Fb = assemble_load(f, self.bubble.space, self.spec.rule) @ self.bubble.coefficients
            F = np.append(F, Fb)
        return F


def discretize(spec: PairSpec, mesh: UniformMesh | None = None) -> Discretization:
    mesh = mesh or build_uniform_mesh(spec.n)
    if mesh.n != spec.n:
        raise ValueError("mesh size does not match the pair spec")
    rule = spec.rule
    vspace = build_space(mesh, _VELOCITY[spec.pair], spec.k)
    pspace = build_space(mesh, P0_SPACE)
    A = assemble_grad_grad(vspace, spec.nu, rule)
    B = assemble_div_pressure(vspace, pspace, rule)
    bubble = None
    if spec.has_bubble:
        bubble = macro_bubble(mesh, build_space(mesh, DSSY_VEC0, spec.k))
        psi = bubble.coefficients
        dspace = bubble.space
        a_vb = assemble_grad_grad(vspace, spec.nu, rule, trial_space=dspace) @ psi
        a_bb = psi @ (assemble_grad_grad(dspace, spec.nu, rule) @ psi)
        b_b = assemble_div_pressure(dspace, pspace, rule) @ psi
        A = sp.bmat([[A, sp.csr_matrix(a_vb[:, None])], [sp.csr_matrix(a_vb[None, :]), [[a_bb]]]]).tocsr()
        B = sp.hstack([B, sp.csr_matrix(b_b[:, None])]).tocsr()
    return Discretization(
        spec=spec,
        mesh=mesh,
        vspace=vspace,
        pspace=pspace,
        A=A,
        B=B,
        Mp=assemble_pressure_mass(pspace),
        constraints=constraint_rows(pspace, spec.reduced_pressure),
        bubble=bubble,
    )


@dataclass
class SaddleSolution:
    """Solution of a constrained saddle-point system with diagnostics."""

    spec: PairSpec
    u: DiscreteField
    p: DiscreteField
    multipliers: dict
    bubble_coefficient: float | None
    residual: float
    rhs_norm: float
    stats: dict = field(default_factory=dict)
    discretization: Discretization | None = field(default=None, repr=False)

    def diagnostics(self) -> dict:
        """JSON-ready summary of residuals, multipliers and timings."""
        return {
            "schema": 1,
            "pair": self.spec.pair,
            "n": self.spec.n,
            "nu": self.spec.nu,
            "residual_inf": self.residual,
            "rhs_inf": self.rhs_norm,
            "multipliers": {k: float(v) for k, v in self.multipliers.items()},
            "bubble_coefficient": self.bubble_coefficient,
            "stats": self.stats,
        }

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics(), indent=2, sort_keys=True)


def saddle_matrix(disc: Discretization) -> sp.csc_matrix:
    C = sp.csr_matrix(disc.constraints)
    return sp.bmat(
        [[disc.A, -disc.B.T, None], [-disc.B, None, C.T], [None, C, None]],
        format="csc",
    )


def solve_stokes(spec: PairSpec, f=None, disc: Discretization | None = None) -> SaddleSolution:
    """Solve the discrete Stokes problem of ``spec`` with body force ``f``.

    ``f`` is ``None``, a callable ``f(x, y) -> (f_x, f_y)`` or a
    :class:`~ncstokes.assembly.TabulatedForcing`.
    """
    t0 = time.perf_counter()
    disc = disc or discretize(spec)
    t_asm = time.perf_counter()
    K = saddle_matrix(disc)
    nv, npr, nc = disc.num_velocity, disc.pspace.num_dofs, disc.constraints.shape[0]
    rhs = np.zeros(K.shape[0])
    rhs[:nv] = disc.load(f)
    try:
        lu = spla.splu(K, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise SingularSystemError(
            f"saddle system for {spec.pair} at n={spec.n} is singular: {exc}",
            _near_null_vector(K),
        ) from exc
    x = lu.solve(rhs)
    rhs_norm = float(np.abs(rhs).max())
    res = float(np.abs(K @ x - rhs).max())
    if res > RESIDUAL_TOL * rhs_norm:
        x += lu.solve(rhs - K @ x)
        res = float(np.abs(K @ x - rhs).max())
    if not np.isfinite(res) or res > RESIDUAL_TOL * rhs_norm:
        raise SingularSystemError(
            f"saddle system for {spec.pair} at n={spec.n} is numerically singular "
            f"(residual {res:.3e}, rhs {rhs_norm:.3e})",
            _near_null_vector(K),
        )
    t_solve = time.perf_counter()
    u = x[:nv]
    bubble_coef = None
    if disc.bubble is not None:
        bubble_coef = float(u[-1])
        u = u[:-1]
    mu = x[nv + npr :]
    names = ["mean"] + (["checkerboard"] if nc > 1 else [])
    return SaddleSolution(
        spec=spec,
        u=DiscreteField(disc.vspace, u),
        p=DiscreteField(disc.pspace, x[nv : nv + npr]),
        multipliers=dict(zip(names, mu)),
        bubble_coefficient=bubble_coef,
        residual=res,
        rhs_norm=rhs_norm,
        stats={
            "size": int(K.shape[0]),
            "nnz": int(K.nnz),
            "lu_nnz": int(lu.L.nnz + lu.U.nnz),
            "assembly_seconds": t_asm - t0,
            "solve_seconds": t_solve - t_asm,
        },
        discretization=disc,
    )


def _near_null_vector(K, max_size: int = 4000):
    if K.shape[0] > max_size:
        return None
    _, _, vt = np.linalg.svd(K.toarray())
    return vt[-1]


class SpdFactor:
    """Sparse LU of an SPD matrix with a symmetric ordering and no pivoting.

    Without row pivoting the ``U`` diagonal holds the ``LDL^T`` pivots, so a
    non-positive entry proves the matrix is not positive definite.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        self.shape = A.shape
        self._A = A
        self._lu = spla.splu(
            A,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
        d = self._lu.U.diagonal()
        bad = np.flatnonzero(~(d > 0))
        if bad.size:
            i = int(bad[0])
            raise NotPositiveDefiniteError(int(self._lu.perm_c[i]), float(d[i]))

    def solve(self, x):
        return self._lu.solve(np.asarray(x, dtype=float))

    @property
    def nnz(self) -> int:
        return self._lu.L.nnz + self._lu.U.nnz


def factor_spd(A) -> SpdFactor:
    """Factor an SPD matrix; raises :class:`NotPositiveDefiniteError` otherwise."""
    return SpdFactor(A)


def apply_inverse(handle: SpdFactor, x) -> np.ndarray:
    """Solve ``A y = x`` with a factor from :func:`factor_spd` (one step of refinement)."""
    x = np.asarray(x, dtype=float)
    y = handle.solve(x)
    y += handle.solve(x - handle._A @ y)
    return y
