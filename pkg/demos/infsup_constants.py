r"""
Discrete inf-sup constants
==========================

``beta^2`` is the smallest eigenvalue of ``B A^{-1} B^T q = lambda M_p q``
over the admissible pressures.  Bilinear velocities with checkerboard-free
pressures lose stability like ``h``; both nonconforming pairs keep ``beta``
near 0.44.
"""

import math

from ncstokes import PairSpec, infsup_constant

PAIRS = ("Q1_P0tilde", "P1NC_P0tilde", "P1NCB_P0", "DSSY_P0")
NS = (4, 8, 16, 32)

# %%
print("n    " + "".join(f"{p:>16s}" for p in PAIRS))
prev = {}
for n in NS:
    row = []
    for pair in PAIRS:
        beta = infsup_constant(PairSpec(pair, n)).beta
        order = "" if pair not in prev else f" ({math.log2(prev[pair] / beta):+.2f})"
        row.append(f"{beta:.5f}{order}".rjust(16))
        prev[pair] = beta
    print(f"{n:<5d}" + "".join(row))

# %%
# Past n = 32 the dense eigen-solve is replaced by shift-invert Lanczos.
res = infsup_constant(PairSpec("P1NCB_P0", 64), method="iterative")
print(f"n=64, bubble pair: beta = {res.beta:.5f} via {res.method} (residual {res.residual:.1e})")
