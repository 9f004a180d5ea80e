"""Truncated sine bases: why the pointwise division needs a complete basis.

With J sine modes the recovered moment field V1 is an L2 projection.  V1 has
a boundary layer next to the sensor and does not vanish at the box edge, so
the projection converges slowly; the operator then amplifies the residual
and the division by the small V1 amplifies it again.  Only the complete
basis (J = number of interior nodes) reproduces q.
"""

import numpy as np

from nonlocal_ircp import (
    BasisSpec, DomainSpec, KernelSpec, assemble_L, build_nodes, default_sensor,
    reconstruct_q_nde, recover_moments, solve_adjoint, synthesize_dataset, uniform_times,
)

nodes = build_nodes(DomainSpec(h=1 / 128, horizon=1 / 8, accessible="right"))
op = assemble_L(nodes, KernelSpec(0.25))
times = uniform_times(1.0, 64)
sensor = default_sensor(nodes, times)
x = nodes.coords[nodes.interior, 0]
q = 1 + np.sin(np.pi * x) ** 2
v = times.copy()

w = solve_adjoint(op, q, sensor)
V1_direct = w.dt * (v[1:] @ w.interior_values[1:])
for J in (8, 16, 32, 64, nodes.n_interior):
    basis = BasisSpec(nodes, "sine", J=J)
    data = synthesize_dataset(op, q, basis.functions, v, sensor)
    V1, _, _ = recover_moments(data, basis)
    res = reconstruct_q_nde(data, basis, sensor, v, op, q_true=q)
    proj = np.linalg.norm(V1 - V1_direct) / np.linalg.norm(V1_direct)
    print(f"J = {J:3d}: V1 projection error {proj:.3f}   q relative L2 error {res.errors()['rel_l2_error']:.3g}")
