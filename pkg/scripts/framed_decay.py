"""Size of the framed (strong-residual) terms for an injected exact wall solution.

The framed terms vanish for the exact flow, so their L1 norm on the wall should
decay as the projection degree grows; the two gradient modes then coincide.
"""
from nsshape.mms import injected_wall_density, no_slip_wall_solution

sol = no_slip_wall_solution()
prev = None
for p in (2, 3, 4, 5):
    d = injected_wall_density(sol, p)
    val = d.points.integrate(abs(d.framed))
    ratio = "" if prev is None else f"  ratio {prev / val:.1f}"
    print(f"p={p}  int |framed| ds = {val:.3e}{ratio}")
    prev = val
