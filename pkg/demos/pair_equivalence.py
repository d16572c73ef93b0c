r"""
Two stabilisations, one velocity
================================

Removing the checkerboard from the pressure space, or adding one DSSY macro
bubble to the velocity space, gives the same discrete velocity.  The
pressures differ by a multiple of the checkerboard, predicted from the load
on the bubble alone.
"""

import numpy as np

from ncstokes import PairSpec, build_uniform_mesh, checkerboard, solve_stokes
from ncstokes.analysis import bubble_load, equivalence_report


def force(x, y):
    return np.sin(7 * x) * np.exp(y) + 3 * y * y, x * y


# %%
n = 8
reduced = solve_stokes(PairSpec("P1NC_P0tilde", n), force)
enriched = solve_stokes(PairSpec("P1NCB_P0", n), force)
mesh = build_uniform_mesh(n)
print("max velocity difference:", np.abs(reduced.u.coefficients - enriched.u.coefficients).max())
print("bubble coefficient:     ", enriched.bubble_coefficient)

# %%
# p' - p is -h (f, psi_b) times the checkerboard.
alpha = -mesh.h * bubble_load(force, mesh)
dp = enriched.p.coefficients - reduced.p.coefficients
print("predicted alpha:", alpha)
print("max |dp - alpha sigma|:", np.abs(dp - alpha * checkerboard(mesh).coefficients).max())

# %%
for n in (4, 8, 16):
    rep = equivalence_report(force, n)
    print(n, "passed" if rep.passed else "FAILED", f"alpha={rep.observed_alpha:+.6e}")
