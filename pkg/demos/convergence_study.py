r"""
Convergence on uniform meshes
=============================

Velocity ``u = (s(x) s'(y), -s(y) s'(x))`` with ``s(t) = sin(2 pi t)(t^2 - t)``
and pressure ``p = sin(2 pi x) g(y)``.  The second pressure profile is steep
near ``y = 1``, so its pressure error converges slowly on coarse meshes.
"""

from ncstokes import convergence_study

# %%
for f_case in (1, 2):
    rep = convergence_study("P1NC_P0tilde", [4, 8, 16, 32, 64], f_case=f_case)
    print(f"profile {f_case}")
    print("     n   |u-uh|_1,h  order   ||u-uh||_0  order   ||p-ph||_0  order")
    for lv in rep.levels:
        o = lambda v: "     -" if v is None else f"{v:6.3f}"  # noqa: E731
        print(
            f"{lv.n:6d}  {lv.h1_velocity:10.4e} {o(lv.order_h1)}  {lv.l2_velocity:10.4e} {o(lv.order_l2)}"
            f"  {lv.l2_pressure:10.4e} {o(lv.order_pressure)}"
        )

# %%
# The same table as plot-ready CSV.
print(rep.to_csv())
