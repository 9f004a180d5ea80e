"""Build the lattice, its interaction collar and the nonlocal operator.

A 1D box (0, 1) with h = 1/32 and horizon 4h gives 31 interior nodes and a
collar of four nodes on each side.  The operator matrix is symmetric, its
rows sum to zero, and applied to x^2 it gives a constant on interior nodes
that approaches the continuum value as h shrinks.
"""

import numpy as np

from nonlocal_ircp import DomainSpec, KernelSpec, assemble_L, build_nodes

nodes = build_nodes(DomainSpec(((0.0, 1.0),), h=1 / 32, horizon=4 / 32, accessible="right"))
print(f"{nodes.n_interior} interior nodes, {len(nodes.exterior)} collar nodes, "
      f"{len(nodes.accessible)} accessible")

op = assemble_L(nodes, KernelSpec(beta=0.25))
A = op.matrix
print("symmetric:", np.allclose(A, A.T), " max |row sum|:", np.abs(A.sum(axis=1)).max())

# -L x^2 against its continuum value -4 eps^(2-2b)/(2-2b)
eps, b = 1 / 8, 0.25
exact = -4 * eps ** (2 - 2 * b) / (2 - 2 * b)
for k in (32, 64, 128, 256):
    nd = build_nodes(DomainSpec(h=1 / k, horizon=eps))
    val = assemble_L(nd, KernelSpec(b)).apply(nd.coords[:, 0] ** 2)[nd.interior][0]
    print(f"h = 1/{k:<4d} -L x^2 = {val:.6f}   (continuum {exact:.6f})")

# strongly singular kernels need the self-cell correction to keep first order
for pc in (False, True):
    errs = []
    for k in (32, 64, 128):
        nd = build_nodes(DomainSpec(h=1 / k, horizon=eps))
        val = assemble_L(nd, KernelSpec(0.75), pair_correction=pc).apply(nd.coords[:, 0] ** 2)
        ex = -4 * eps ** 0.5 / 0.5
        errs.append(abs(val[nd.interior][0] - ex) / abs(ex))
    print(f"beta = 0.75, pair_correction={pc}: relative errors", np.round(errs, 4))
