"""Average nonlocal flux data and the adjoint identity behind the inversion.

Measuring the forward solution through the sensor equals weighting the source
with the adjoint solution.  The adjoint stepper is the exact transpose of the
forward one, so the two sides agree to roundoff.
"""

import numpy as np

from nonlocal_ircp import (
    DomainSpec, FractionalSpec, KernelSpec, SourceSpec, adjoint_weighted_source, assemble_L,
    build_nodes, default_sensor, measure, solve_adjoint, solve_mttfnde, solve_nde, uniform_times,
)

rng = np.random.default_rng(1)
nodes = build_nodes(DomainSpec(h=1 / 32, horizon=4 / 32, accessible="right"))
op = assemble_L(nodes, KernelSpec(0.25))
times = uniform_times(1.0, 64)
sensor = default_sensor(nodes, times)
q = rng.uniform(0, 2, nodes.n_interior)
phi = rng.standard_normal(nodes.n_interior)
v = np.sin(3 * times)
frac = FractionalSpec(0.7, (0.3,), (0.5,), dt=1 / 64, T=1.0)

for name, fr in (("NDE", None), ("MTTFNDE", frac)):
    src = SourceSpec(phi, v, times)
    u = solve_mttfnde(op, q, fr, src) if fr else solve_nde(op, q, src)
    m = measure(u, sensor, op)
    dual = adjoint_weighted_source(solve_adjoint(op, q, sensor, fr), phi, v)
    print(f"{name:8s} measured {m:+.12e}  adjoint form {dual:+.12e}  rel. gap {abs(m - dual) / abs(m):.1e}")
