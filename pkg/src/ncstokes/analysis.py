"""Inf-sup estimates, spurious pressure modes, error norms and convergence studies."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_div_pressure, assemble_grad_grad, assemble_load
from .elements import QuadratureRule, gauss_rule
from .mesh import UniformMesh, build_uniform_mesh
from .spaces import (
    DSSY_VEC0,
    P0_SPACE,
    P1NC_VEC0,
    Q1_VEC0,
    DiscreteField,
    build_space,
    checkerboard,
    interpolate_p1nc,
    macro_bubble,
    pressure_modes,
)
from .solver import (
    P1NC_P0TILDE,
    P1NCB_P0,
    NumericalError,
    PairSpec,
    SaddleSolution,
    apply_inverse,
    discretize,
    factor_spd,
    solve_stokes,
)

TWO_PI = 2.0 * math.pi
DENSE_INFSUP_MAX_N = 32


# --------------------------------------------------------------------------
# manufactured solution


def _s(t):
    return np.sin(TWO_PI * t) * (t * t - t)


def _ds(t):
    return TWO_PI * np.cos(TWO_PI * t) * (t * t - t) + np.sin(TWO_PI * t) * (2 * t - 1)


def _d2s(t):
    sn, cs = np.sin(TWO_PI * t), np.cos(TWO_PI * t)
    return -(TWO_PI**2) * sn * (t * t - t) + 2 * TWO_PI * cs * (2 * t - 1) + 2 * sn


def _d3s(t):
    sn, cs = np.sin(TWO_PI * t), np.cos(TWO_PI * t)
    return -(TWO_PI**3) * cs * (t * t - t) - 3 * TWO_PI**2 * sn * (2 * t - 1) + 6 * TWO_PI * cs


def _g1(y):
    return 1.0 / (3.0 - np.tan(y) ** 2)


def _dg1(y):
    t = np.tan(y)
    return 2.0 * t * (1.0 + t * t) / (3.0 - t * t) ** 2


def _g2(y):
    return 1.0 / (25.0 - 10.0 * np.tan(y) ** 2) + 0.3


def _dg2(y):
    t = np.tan(y)
    return 20.0 * t * (1.0 + t * t) / (25.0 - 10.0 * t * t) ** 2


_PRESSURE_PROFILES = {1: (_g1, _dg1), 2: (_g2, _dg2)}


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact Stokes solution on the unit square.

    ``u = (s(x) s'(y), -s(y) s'(x))`` with ``s(t) = sin(2 pi t)(t^2 - t)`` and
    ``p = sin(2 pi x) g(y)``, where ``g(y) = 1/(3 - tan^2 y)`` for case 1 and
    ``1/(25 - 10 tan^2 y) + 3/10`` for case 2.  The body force is
    ``-nu Lap u + grad p``.
    """

    f_case: int = 1
    nu: float = 1.0

    def __post_init__(self):
        if self.f_case not in _PRESSURE_PROFILES:
            raise ValueError(f"f_case must be 1 or 2, got {self.f_case}")

    @property
    def _g(self):
        return _PRESSURE_PROFILES[self.f_case]

    def velocity(self, x, y):
        return _s(x) * _ds(y), -_s(y) * _ds(x)

    def velocity_gradient(self, x, y):
        """``grad[..., c, d] = d u_c / d x_d``."""
        g = np.empty(np.broadcast(x, y).shape + (2, 2))
        g[..., 0, 0] = _ds(x) * _ds(y)
        g[..., 0, 1] = _s(x) * _d2s(y)
        g[..., 1, 0] = -_s(y) * _d2s(x)
        g[..., 1, 1] = -_ds(y) * _ds(x)
        return g

    def velocity_laplacian(self, x, y):
        lx = _d2s(x) * _ds(y) + _s(x) * _d3s(y)
        ly = -(_d2s(y) * _ds(x) + _s(y) * _d3s(x))
        return lx, ly

    def pressure(self, x, y):
        g, _ = self._g
        return np.sin(TWO_PI * x) * g(y)

    def pressure_gradient(self, x, y):
        g, dg = self._g
        return TWO_PI * np.cos(TWO_PI * x) * g(y), np.sin(TWO_PI * x) * dg(y)

    def forcing(self, x, y):
        lx, ly = self.velocity_laplacian(x, y)
        px, py = self.pressure_gradient(x, y)
        return -self.nu * lx + px, -self.nu * ly + py

    __call__ = forcing

    def derivative_check(self, rng=None, npts: int = 100, step: float = 1e-6) -> dict:
        """Largest discrepancy of each hand-coded derivative against central differences."""
        rng = np.random.default_rng(0) if rng is None else rng
        t = rng.uniform(0.01, 0.99, npts)
        g, dg = self._g

        def cd(fn):
            return (fn(t + step) - fn(t - step)) / (2 * step)

        return {
            "s'": float(np.abs(cd(_s) - _ds(t)).max()),
            "s''": float(np.abs(cd(_ds) - _d2s(t)).max()),
            "s'''": float(np.abs(cd(_d2s) - _d3s(t)).max()),
            "g'": float(np.abs(cd(g) - dg(t)).max()),
        }


# --------------------------------------------------------------------------
# inf-sup constant


@dataclass
class InfSupResult:
    beta: float
    lambda_min: float
    method: str
    residual: float
    constrained_dim: int
    pair: str
    n: int


def schur_operator(disc, factor=None):
    """Matrix-free ``q -> B A^{-1} B^T q`` (velocity seminorm ``v^T (A/nu) v``)."""
    factor = factor or factor_spd(disc.A / disc.spec.nu)
    B = disc.B

    def apply(q):
        return B @ factor.solve(B.T @ q)

    return apply, factor


def infsup_constant(spec: PairSpec, method: str = "auto", seed: int = 0, tol: float = 1e-10) -> InfSupResult:
    """Discrete inf-sup constant of a pair.

    ``beta^2`` is the smallest eigenvalue of ``B A^{-1} B^T q = lambda M_p q``
    over pressures orthogonal to the removed modes (constants, and the
    checkerboard for reduced-pressure pairs).  ``method`` is ``"dense"``,
    ``"iterative"`` or ``"auto"`` (dense up to ``n = 32``).
    """
    if method == "auto":
        method = "dense" if spec.n <= DENSE_INFSUP_MAX_N else "iterative"
    if method not in ("dense", "iterative"):
        raise ValueError(f"unknown method {method!r}")
    disc = discretize(spec)
    mesh = disc.mesh
    h2 = mesh.h**2
    modes = pressure_modes(mesh, spec.reduced_pressure)
    q_basis, _ = np.linalg.qr(modes.T)
    npr = disc.pspace.num_dofs
    dim = npr - q_basis.shape[1]
    if dim < 1:
        raise ValueError("constrained pressure space is empty")
    apply_s, factor = schur_operator(disc)

    if method == "dense":
        Bd = disc.B.toarray()
        X = apply_inverse(factor, Bd.T)
        S = Bd @ X
        S = 0.5 * (S + S.T)
        Z = sla.null_space(q_basis.T)
        T = Z.T @ S @ Z / h2
        w, v = np.linalg.eigh(T)
        lam = float(w[0])
        vec = v[:, 0]
        residual = float(np.linalg.norm(T @ vec - lam * vec))
    else:
        shift = 10.0

        def deflated(q):
            q = np.asarray(q).ravel()
            c = q_basis.T @ q
            r = q - q_basis @ c
            r = apply_s(r)
            r -= q_basis @ (q_basis.T @ r)
            return r / h2 + shift * (q_basis @ c)

        T = spla.LinearOperator((npr, npr), matvec=deflated, dtype=float)

        def inverse(b):
            x, info = spla.cg(T, np.asarray(b).ravel(), rtol=1e-13, atol=0.0, maxiter=20 * npr)
            if info:
                raise NumericalError(f"inner CG did not converge (info={info})")
            return x

        Tinv = spla.LinearOperator((npr, npr), matvec=inverse, dtype=float)
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(npr)
        try:
            w, v = spla.eigsh(T, k=1, sigma=0.0, which="LM", OPinv=Tinv, v0=v0, tol=tol)
        except spla.ArpackNoConvergence as exc:
            raise NumericalError(f"inf-sup eigen-iteration did not converge: {exc}") from exc
        lam = float(w[0])
        vec = v[:, 0]
        residual = float(np.linalg.norm(T @ vec - lam * vec) / np.linalg.norm(vec))
    if lam <= 0:
        raise NumericalError(f"smallest constrained eigenvalue is {lam:.3e}; pair is unstable")
    return InfSupResult(
        beta=math.sqrt(lam),
        lambda_min=lam,
        method=method,
        residual=residual,
        constrained_dim=dim,
        pair=spec.pair,
        n=spec.n,
    )


# --------------------------------------------------------------------------
# spurious pressure modes

VELOCITY_KINDS = {"P1NC": P1NC_VEC0, "P1NCB": P1NC_VEC0, "DSSY": DSSY_VEC0, "Q1": Q1_VEC0}


@dataclass
class SpuriousReport:
    velocity: str
    n: int
    dimension: int
    basis: np.ndarray  # (dimension, N_Q), unit L2 norm
    checkerboard_cosine: float | None
    singular_values: np.ndarray = field(repr=False)


def divergence_matrix(velocity: str, mesh: UniformMesh, rule: QuadratureRule | None = None):
    """``B`` for a velocity kind; ``"P1NCB"`` appends the macro bubble column."""
    if velocity not in VELOCITY_KINDS:
        raise ValueError(f"unknown velocity kind {velocity!r}; expected one of {tuple(VELOCITY_KINDS)}")
    rule = rule or gauss_rule(4)
    pspace = build_space(mesh, P0_SPACE)
    vspace = build_space(mesh, VELOCITY_KINDS[velocity])
    B = assemble_div_pressure(vspace, pspace, rule)
    if velocity == "P1NCB":
        psi = macro_bubble(mesh)
        col = assemble_div_pressure(psi.space, pspace, rule) @ psi.coefficients
        B = sp.hstack([B, sp.csr_matrix(col[:, None])]).tocsr()
    return B


def spurious_modes(velocity: str, n: int, rel_tol: float = 1e-9) -> SpuriousReport:
    """Mean-zero P0 pressures annihilated by the discrete divergence."""
    mesh = build_uniform_mesh(n)
    B = divergence_matrix(velocity, mesh).toarray()
    Z0 = sla.null_space(np.ones((1, mesh.num_elements)))
    M = B.T @ Z0
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > rel_tol * scale))
    null = vt[rank:]
    basis = null @ Z0.T
    basis = basis / (mesh.h * np.linalg.norm(basis, axis=1, keepdims=True)) if len(basis) else basis
    cosine = None
    if len(basis) == 1:
        sigma = checkerboard(mesh).coefficients
        cosine = float(abs(basis[0] @ sigma) / (np.linalg.norm(basis[0]) * np.linalg.norm(sigma)))
    return SpuriousReport(velocity, n, len(basis), basis, cosine, s)


# --------------------------------------------------------------------------
# error norms


@dataclass
class ErrorNorms:
    h1_velocity: float
    l2_velocity: float
    l2_pressure: float


def _velocity_tables(sol: SaddleSolution, elements, xh, yh):
    """Values ``(ne, npts, 2)`` and gradients ``(ne, npts, 2, 2)`` of ``u_h``."""
    v, g = sol.u.tabulate(xh, yh, elements)
    if sol.bubble_coefficient:
        bubble = sol.discretization.bubble
        bv, bg = bubble.tabulate(xh, yh, elements)
        v = v + sol.bubble_coefficient * bv
        g = g + sol.bubble_coefficient * bg
    return v, g


def error_norms(sol: SaddleSolution, exact, rule: QuadratureRule | None = None) -> ErrorNorms:
    """Broken H1 seminorm and L2 errors of a discrete solution.

    ``exact`` is a :class:`ManufacturedCase` (integrated on the solution's
    mesh) or a finer reference :class:`SaddleSolution` whose mesh size is a
    multiple of the solution's (integrated on the reference mesh).
    """
    rule = rule or gauss_rule(4)
    w = rule.weights
    if isinstance(exact, SaddleSolution):
        return _reference_errors(sol, exact, rule)
    mesh = sol.u.space.mesh
    elements = np.arange(mesh.num_elements)
    xh, yh = rule.points[:, 0], rule.points[:, 1]
    x, y = mesh.to_physical(elements[:, None], xh, yh)
    vh, gh = _velocity_tables(sol, elements, xh, yh)
    ux, uy = exact.velocity(x, y)
    du = exact.velocity_gradient(x, y)
    jac = mesh.h**2 / 4.0
    ev = np.stack([ux, uy], axis=-1) - vh
    eg = du - gh
    ep = exact.pressure(x, y) - sol.p.coefficients[:, None]
    return ErrorNorms(
        h1_velocity=math.sqrt(jac * np.einsum("epcd,p->", eg**2, w)),
        l2_velocity=math.sqrt(jac * np.einsum("epc,p->", ev**2, w)),
        l2_pressure=math.sqrt(jac * np.einsum("ep,p->", ep**2, w)),
    )


def _reference_errors(sol: SaddleSolution, ref: SaddleSolution, rule: QuadratureRule) -> ErrorNorms:
    coarse = sol.u.space.mesh
    fine = ref.u.space.mesh
    if fine.n % coarse.n:
        raise ValueError(f"reference mesh n={fine.n} is not a refinement of n={coarse.n}")
    w = rule.weights
    xh, yh = rule.points[:, 0], rule.points[:, 1]
    fel = np.arange(fine.num_elements)
    rv, rg = _velocity_tables(ref, fel, xh, yh)
    x, y = fine.to_physical(fel[:, None], xh, yh)
    cel = coarse.locate(fine.element_center[:, 0], fine.element_center[:, 1])
    r = fine.n // coarse.n
    sub = fine.element_ij % r
    sub_id = sub[:, 0] + r * sub[:, 1]
    cv = np.empty_like(rv)
    cg = np.empty_like(rg)
    # fine elements at the same position inside their parent share reference points
    for s_id in range(r * r):
        idx = np.flatnonzero(sub_id == s_id)
        cx, cy = coarse.to_reference(cel[idx[0]], x[idx[0]], y[idx[0]])
        cv[idx], cg[idx] = _velocity_tables(sol, cel[idx], cx, cy)
    ep = ref.p.coefficients[:, None] - sol.p.coefficients[cel][:, None]
    jac = fine.h**2 / 4.0
    return ErrorNorms(
        h1_velocity=math.sqrt(jac * np.einsum("epcd,p->", (rg - cg) ** 2, w)),
        l2_velocity=math.sqrt(jac * np.einsum("epc,p->", (rv - cv) ** 2, w)),
        l2_pressure=math.sqrt(jac * float(np.sum(ep**2)) * w.sum()),
    )


def interpolation_errors(case: ManufacturedCase, n: int, rule: QuadratureRule | None = None) -> tuple[float, float]:
    """``(|u - Pi_h u|_{1,h}, ||u - Pi_h u||_0)`` for the midpoint interpolant."""
    rule = rule or gauss_rule(4)
    mesh = build_uniform_mesh(n)
    pu = interpolate_p1nc(case.velocity, mesh)
    elements = np.arange(mesh.num_elements)
    xh, yh = rule.points[:, 0], rule.points[:, 1]
    x, y = mesh.to_physical(elements[:, None], xh, yh)
    v, g = pu.tabulate(xh, yh)
    ux, uy = case.velocity(x, y)
    jac = mesh.h**2 / 4.0
    e1 = math.sqrt(jac * np.einsum("epcd,p->", (case.velocity_gradient(x, y) - g) ** 2, rule.weights))
    e0 = math.sqrt(jac * np.einsum("epc,p->", (np.stack([ux, uy], -1) - v) ** 2, rule.weights))
    return e1, e0


# --------------------------------------------------------------------------
# convergence study


def observed_order(coarse_error: float, fine_error: float) -> float:
    """``log2(e_2h / e_h)``."""
    return math.log2(coarse_error / fine_error)


@dataclass
class LevelRecord:
    n: int
    h: float
    h1_velocity: float
    l2_velocity: float
    l2_pressure: float
    order_h1: float | None = None
    order_l2: float | None = None
    order_pressure: float | None = None
    residual: float = 0.0


COLUMNS = ("n", "h", "h1_velocity", "order_h1", "l2_velocity", "order_l2", "l2_pressure", "order_pressure")


@dataclass
class ConvergenceReport:
    pair: str
    f_case: int | None
    levels: list[LevelRecord]

    def rows(self) -> list[dict]:
        return [{c: getattr(r, c) for c in COLUMNS} for r in self.levels]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows():
            w.writerow(["" if row[c] is None else _fmt(row[c]) for c in COLUMNS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"schema": 1, "pair": self.pair, "f_case": self.f_case, "levels": [asdict(r) for r in self.levels]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def check_doublings(ns) -> list[int]:
    ns = [int(n) for n in ns]
    if not ns:
        raise ValueError("empty mesh list")
    for a, b in zip(ns, ns[1:]):
        if b != 2 * a:
            raise ValueError(f"mesh list must double at every step, got {a} then {b}")
    return ns


def with_orders(levels: list[LevelRecord]) -> list[LevelRecord]:
    for prev, cur in zip(levels, levels[1:]):
        cur.order_h1 = observed_order(prev.h1_velocity, cur.h1_velocity)
        cur.order_l2 = observed_order(prev.l2_velocity, cur.l2_velocity)
        cur.order_pressure = observed_order(prev.l2_pressure, cur.l2_pressure)
    return levels


def convergence_study(
    pair: str,
    ns,
    f_case: int = 1,
    nu: float = 1.0,
    points_per_axis: int = 4,
    forcing=None,
    reference: SaddleSolution | None = None,
) -> ConvergenceReport:
    """Solve on each mesh in ``ns`` and tabulate errors with observed orders.

    Errors are measured against the manufactured case ``f_case`` unless a
    discrete ``reference`` solution is given, in which case ``forcing``
    supplies the body force.
    """
    ns = check_doublings(ns)
    case = ManufacturedCase(f_case, nu) if reference is None else None
    f = forcing if forcing is not None else case
    if f is None:
        raise ValueError("a forcing is required when comparing against a reference solution")
    rule = gauss_rule(points_per_axis)
    levels = []
    for n in ns:
        sol = solve_stokes(PairSpec(pair, n, nu, points_per_axis), f)
        err = error_norms(sol, reference if reference is not None else case, rule)
        levels.append(LevelRecord(n, 1.0 / n, err.h1_velocity, err.l2_velocity, err.l2_pressure, residual=sol.residual))
    return ConvergenceReport(pair, f_case if reference is None else None, with_orders(levels))


# --------------------------------------------------------------------------
# equivalence of the two stabilised pairs


@dataclass
class EquivalenceReport:
    n: int
    max_velocity_difference: float
    predicted_alpha: float
    observed_alpha: float
    projection_residual: float
    bubble_coefficient: float
    bubble_checkerboard_pairing: float
    passed: bool

    def to_dict(self) -> dict:
        return {"schema": 1, **asdict(self)}


def bubble_checkerboard_pairing(mesh: UniformMesh) -> float:
    """``b_h(psi_b, sigma_h)``."""
    psi = macro_bubble(mesh)
    B = assemble_div_pressure(psi.space, build_space(mesh, P0_SPACE))
    return float(checkerboard(mesh).coefficients @ (B @ psi.coefficients))


def bubble_seminorm(mesh: UniformMesh) -> float:
    psi = macro_bubble(mesh)
    A = assemble_grad_grad(psi.space)
    return math.sqrt(psi.coefficients @ (A @ psi.coefficients))


def bubble_load(f, mesh: UniformMesh, rule: QuadratureRule | None = None) -> float:
    """``(f, psi_b)`` through the DSSY load vector."""
    psi = macro_bubble(mesh)
    return float(assemble_load(f, psi.space, rule) @ psi.coefficients)


def equivalence_report(f, n: int, nu: float = 1.0, points_per_axis: int = 4) -> EquivalenceReport:
    """Solve both stabilised pairs and compare against the predicted pressure shift."""
    sol = solve_stokes(PairSpec(P1NC_P0TILDE, n, nu, points_per_axis), f)
    solb = solve_stokes(PairSpec(P1NCB_P0, n, nu, points_per_axis), f)
    mesh = sol.u.space.mesh
    h = mesh.h
    sigma = checkerboard(mesh).coefficients
    alpha = -h * bubble_load(f, mesh, gauss_rule(points_per_axis))
    dp = solb.p.coefficients - sol.p.coefficients
    observed = h * h * float(dp @ sigma)
    du = float(np.abs(solb.u.coefficients - sol.u.coefficients).max())
    proj = float(np.abs(dp - observed * sigma).max())
    pairing = bubble_checkerboard_pairing(mesh)
    passed = bool(
        du <= 1e-9
        and abs(observed - alpha) <= 1e-9
        and proj <= 1e-9
        and abs(solb.bubble_coefficient) <= 1e-10
        and abs(pairing * h - 1.0) <= 1e-12
    )
    return EquivalenceReport(n, du, float(alpha), observed, proj, solb.bubble_coefficient, pairing, passed)
