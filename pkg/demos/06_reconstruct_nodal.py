"""Reconstruct the reaction coefficient from flux data with a nodal basis.

One source per interior node and two temporal modes (v and its discrete
derivative, or the multi-term L1 derivative for the fractional model).  The
moment fields come from the Gram solve, the collar values from the sensor,
and q follows by pointwise division.
"""

import numpy as np

from nonlocal_ircp import (
    BasisSpec, DomainSpec, FractionalSpec, KernelSpec, assemble_L, build_nodes, default_sensor,
    reconstruct_q_fractional, reconstruct_q_nde, synthesize_dataset, uniform_times,
)

nodes = build_nodes(DomainSpec(h=1 / 32, horizon=4 / 32, accessible="right"))
op = assemble_L(nodes, KernelSpec(0.25))
times = uniform_times(1.0, 64)
sensor = default_sensor(nodes, times)
basis = BasisSpec(nodes, "nodal")
x = nodes.coords[nodes.interior, 0]
q_true = 1 + np.sin(np.pi * x) ** 2
v = times.copy()

data = synthesize_dataset(op, q_true, basis.functions, v, sensor, threads=4)
res = reconstruct_q_nde(data, basis, sensor, v, op, q_true=q_true)
print("integer order:", res.errors(), " min V1 =", f"{res.min_V1:.3e}")

frac = FractionalSpec(0.7, (0.3,), (0.5,), dt=1 / 64, T=1.0)
data_f = synthesize_dataset(op, q_true, basis.functions, v, sensor, frac)
res_f = reconstruct_q_fractional(data_f, basis, sensor, v, frac, op, q_true=q_true)
print("multi-term fractional:", res_f.errors())

noisy = synthesize_dataset(op, q_true, basis.functions, v, sensor, noise=1e-6, seed=3)
res_n = reconstruct_q_nde(noisy, basis, sensor, v, op, q_true=q_true)
print("with 1e-6 relative noise (no contract):", res_n.errors())
