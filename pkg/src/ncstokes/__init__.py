"""Cheapest stable nonconforming finite element pairs for the Stokes problem.

The P1 nonconforming quadrilateral velocity element is paired with P0
pressures in two stabilised ways on uniform square meshes: removing the
global checkerboard from the pressure space, or enriching the velocity
space with a single DSSY macro bubble.
"""
from .analysis import (
    ConvergenceReport,
    EquivalenceReport,
    ManufacturedCase,
    convergence_study,
    equivalence_report,
    error_norms,
    infsup_constant,
    spurious_modes,
)
from .assembly import (
    AssembledSystem,
    TabulatedForcing,
    assemble_div_pressure,
    assemble_grad_grad,
    assemble_load,
    assemble_pressure_mass,
    assemble_system,
    export_matrix_market,
)
from .elements import (
    LocalElement,
    QuadratureRule,
    dssy_local_basis,
    gauss_rule,
    p0_local_basis,
    p1nc_local_basis,
    q1_local_basis,
)
from .mesh import UniformMesh, build_uniform_mesh, macro_partition
from .solver import (
    DSSY_P0,
    P1NC_P0TILDE,
    P1NCB_P0,
    Q1_P0TILDE,
    PairSpec,
    SaddleSolution,
    apply_inverse,
    factor_spd,
    solve_stokes,
)
from .spaces import (
    DiscreteField,
    FeSpace,
    build_space,
    checkerboard,
    interpolate_p1nc,
    macro_bubble,
    macro_checkerboard,
    project_pressure,
)

__version__ = "0.1.0"
