import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_ircp import (
    AntisymmetricField,
    DomainSpec,
    KernelSpec,
    TensorField,
    apply_interaction_N,
    assemble_L,
    build_nodes,
    check_gauss,
    check_green,
)
from nonlocal_ircp.operators import adjoint_divergence, interaction, interaction_flux


def _loop_matrix(nodes, kernel):
    """Direct double-loop assembly of -L from its pair-sum definition."""
    n = len(nodes)
    d = nodes.dim
    eps = nodes.spec.horizon
    A = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            r = np.linalg.norm(nodes.coords[i] - nodes.coords[j])
            if i != j and r < eps - 1e-12:
                g = kernel.gamma_lo / r ** (d + 2 * kernel.beta)
                A[i, j] -= 2 * nodes.weights[j] * g
                A[i, i] += 2 * nodes.weights[j] * g
    return A


@pytest.mark.parametrize("extent,h,eps", [(((0, 1),), 1 / 16, 3 / 16),
                                          (((0, 1), (0, 0.5)), 0.125, 0.25)])
def test_matches_loop_assembly(extent, h, eps):
    nodes = build_nodes(DomainSpec(extent, h=h, horizon=eps))
    kernel = KernelSpec(beta=0.3, gamma_lo=0.7)
    op = assemble_L(nodes, kernel)
    np.testing.assert_allclose(op.matrix, _loop_matrix(nodes, kernel), rtol=1e-13, atol=1e-10)


@pytest.mark.parametrize("pc", [False, True])
@pytest.mark.parametrize("form", ["power", "bounded"])
def test_symmetric_m_matrix(pc, form):
    nodes = build_nodes(DomainSpec(((0, 1), (0, 1)), h=0.125, horizon=0.375))
    op = assemble_L(nodes, KernelSpec(0.75, 1.0, 3.0, form), pair_correction=pc)
    A = op.matrix
    np.testing.assert_allclose(A, A.T, rtol=1e-13, atol=0)
    np.testing.assert_allclose(A.sum(axis=1), 0, atol=1e-9 * np.abs(A).max())
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0)
    # interior block is positive definite (diagonally dominant with collar coupling)
    assert np.linalg.eigvalsh(op.interior_block).min() > 0


def test_quadratic_against_continuum():
    """-L x^2 -> -4 gamma eps^(2-2b)/(2-2b) at first order in h (beta = 1/4)."""
    beta, eps = 0.25, 0.125
    exact = -4 * eps ** (2 - 2 * beta) / (2 - 2 * beta)
    errs, vals = [], []
    for k in (32, 64, 128, 256):
        nodes = build_nodes(DomainSpec(h=1 / k, horizon=eps))
        op = assemble_L(nodes, KernelSpec(beta))
        x = nodes.coords[:, 0]
        val = op.apply(x**2)[nodes.interior]
        # the value is the same on every interior node (translation invariance)
        assert np.ptp(val) < 1e-9 * abs(exact)
        errs.append(abs(val[0] - exact))
        vals.append(val[0])
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    np.testing.assert_allclose(orders, 1.0, atol=0.1)
    # Richardson extrapolation of the last two levels removes the leading term
    extrapolated = 2 * vals[-1] - vals[-2]
    assert abs(extrapolated - exact) < 0.1 * errs[-1]


def test_constants_are_in_kernel():
    nodes = build_nodes(DomainSpec())
    op = assemble_L(nodes, KernelSpec())
    np.testing.assert_allclose(op.apply(np.full(len(nodes), 3.0)), 0, atol=1e-10)


def test_collar_flux_is_interaction_of_gradient(rng):
    nodes = build_nodes(DomainSpec(((0, 1), (0, 1)), h=0.125, horizon=0.25))
    kernel = KernelSpec(0.4, 1.0, 2.0, "bounded")
    op = assemble_L(nodes, kernel)
    a = AntisymmetricField().evaluate(nodes, kernel, TensorField())
    u = rng.standard_normal(len(nodes))
    via_pairs = interaction(nodes, adjoint_divergence(u, a), a)
    np.testing.assert_allclose(interaction_flux(op, u), via_pairs, rtol=1e-11, atol=1e-11)


def test_interaction_loop_oracle(rng):
    nodes = build_nodes(DomainSpec(h=1 / 16, horizon=3 / 16))
    kernel = KernelSpec(0.25)
    op = assemble_L(nodes, kernel)
    u = rng.standard_normal(len(nodes))
    ext = nodes.exterior
    expected = []
    for i in ext:
        s = 0.0
        for j in range(len(nodes)):
            r = abs(nodes.coords[i, 0] - nodes.coords[j, 0])
            if 0 < r < nodes.spec.horizon - 1e-12:
                s += 2 * nodes.weights[j] * (u[j] - u[i]) / r ** 1.5
        expected.append(s)
    np.testing.assert_allclose(interaction_flux(op, u), expected, rtol=1e-12, atol=1e-10)


def test_apply_interaction_n_index():
    nodes = build_nodes(DomainSpec(h=0.25, horizon=0.5))
    op = assemble_L(nodes, KernelSpec())
    field = np.ones((3, len(nodes)))
    np.testing.assert_allclose(apply_interaction_N(op, field, 2), 0, atol=1e-12)
    with pytest.raises(IndexError):
        apply_interaction_N(op, field, 3)


def test_asymmetric_kernel_rejected():
    kernel = KernelSpec(0.25, 1.0, 2.0, "bounded", modulation=lambda x, y: (x[:, 0] > y[:, 0]) * 1.0)
    with pytest.raises(ValueError, match="not symmetric"):
        assemble_L(build_nodes(DomainSpec()), kernel)


def test_inconsistent_alpha_rejected():
    alpha = AntisymmetricField(rule=lambda x, y: (y - x) * 3.0)
    with pytest.raises(ValueError, match="reproduce"):
        assemble_L(build_nodes(DomainSpec()), KernelSpec(), alpha=alpha)


def test_anisotropic_tensor_consistent():
    # Theta = diag(2, 1): the default alpha rescales to keep alpha.Theta alpha = gamma
    theta = TensorField(rule=lambda x, y: np.broadcast_to(np.diag([2.0, 1.0]), (len(x), 2, 2)))
    nodes = build_nodes(DomainSpec(((0, 1), (0, 1)), h=0.125, horizon=0.25))
    op_a = assemble_L(nodes, KernelSpec(), theta=theta)
    op_b = assemble_L(nodes, KernelSpec())
    np.testing.assert_allclose(op_a.matrix, op_b.matrix, rtol=1e-12)


def test_csv_export():
    nodes = build_nodes(DomainSpec(h=0.25, horizon=0.5))
    text = assemble_L(nodes, KernelSpec()).to_csv()
    lines = text.splitlines()
    assert lines[0] == "row,col,value"
    nnz = np.count_nonzero(assemble_L(nodes, KernelSpec()).matrix)
    assert len(lines) == nnz + 1


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), cells=st.integers(8, 24), r=st.integers(1, 5),
       beta=st.floats(0.05, 0.95), dim=st.sampled_from([1, 2]))
def test_gauss_and_green_identities(seed, cells, r, beta, dim):
    rng = np.random.default_rng(seed)
    if dim == 1:
        spec = DomainSpec(((0, 1),), h=1 / cells, horizon=min(r, cells - 1) / cells)
    else:
        c = max(4, cells // 4)
        spec = DomainSpec(((0, 1), (0, 1)), h=1 / c, horizon=min(r, c - 1) / c)
    nodes = build_nodes(spec)
    kernel = KernelSpec(beta, 1.0, 2.5, "bounded")
    n = len(nodes)
    g = check_gauss(nodes, kernel, None, None, rng.standard_normal((n, n, dim)))
    assert g.relative <= 1e-12
    gr = check_green(nodes, kernel, None, None, rng.standard_normal(n), rng.standard_normal(n))
    assert gr.relative <= 1e-12


def test_gauss_detects_symmetric_part(rng):
    """A non-antisymmetric alpha breaks the Gauss identity (the check has teeth)."""
    nodes = build_nodes(DomainSpec(h=1 / 16, horizon=4 / 16))
    alpha = AntisymmetricField(rule=lambda x, y: np.abs(y - x) + 0.1)
    n = len(nodes)
    res = check_gauss(nodes, KernelSpec(), None, alpha, rng.standard_normal((n, n, 1)))
    assert res.relative > 1e-6
