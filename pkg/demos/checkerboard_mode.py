r"""
The checkerboard pressure mode
==============================

With the P1 nonconforming quadrilateral element for velocity and piecewise
constants for pressure, one pressure field is invisible to the discrete
divergence: the global checkerboard.  This script finds it numerically and
shows that a single DSSY macro bubble removes it.
"""

import numpy as np

from ncstokes import build_uniform_mesh, checkerboard, spurious_modes

# %%
# Kernel of ``B^T`` inside mean-zero P0, for a few meshes and velocity spaces.
for n in (2, 4, 8):
    for velocity in ("P1NC", "P1NCB", "DSSY", "Q1"):
        rep = spurious_modes(velocity, n)
        cos = "" if rep.checkerboard_cosine is None else f"  cos(mode, sigma) = {rep.checkerboard_cosine:.15f}"
        print(f"n={n:2d}  {velocity:5s}  dim = {rep.dimension}{cos}")

# %%
# The mode found for P1NC is the alternating +-1 pattern.
mesh = build_uniform_mesh(4)
mode = spurious_modes("P1NC", 4).basis[0]
mode *= np.sign(mode[0])
print(np.round(mode.reshape(4, 4)[::-1], 12))
print(checkerboard(mesh).coefficients.reshape(4, 4)[::-1])
