"""Forward solves of the integer-order and the multi-term fractional model.

The source is phi(x) v(t) with v(0) = 0.  Nonnegative data give nonnegative
solutions (weak maximum principle).  The fractional model responds more
slowly at late times because of its memory.
"""

import numpy as np

from nonlocal_ircp import (
    DomainSpec, FractionalSpec, KernelSpec, SourceSpec, assemble_L, build_nodes,
    solve_mttfnde, solve_nde, uniform_times, verify_weak_mp,
)

nodes = build_nodes(DomainSpec(h=1 / 32, horizon=4 / 32))
op = assemble_L(nodes, KernelSpec(0.25))
times = uniform_times(1.0, 64)
x = nodes.coords[nodes.interior, 0]
q = 1 + x
source = SourceSpec(np.exp(-((x - 0.5) / 0.15) ** 2), times, times)

u = solve_nde(op, q, source)
frac = FractionalSpec(0.7, (0.3,), (0.5,), dt=1 / 64, T=1.0)
uf = solve_mttfnde(op, q, frac, source)

mid = np.argmin(abs(x - 0.5))
for n in (16, 32, 64):
    print(f"t = {times[n]:.3f}:  u_nde(0.5) = {u.interior_values[n, mid]:.5f}   "
          f"u_mttfnde(0.5) = {uf.interior_values[n, mid]:.5f}")
print("weak maximum principle:", verify_weak_mp(u).passed, verify_weak_mp(uf).passed)
