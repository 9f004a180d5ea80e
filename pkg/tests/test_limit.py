import numpy as np
import pytest
from scipy.special import gamma, hyp1f1

from nonlocal_ircp.limit import (
    fractional_laplacian_constant,
    gaussian_fractional_laplacian,
    limit_check,
)


def test_constant_known_values():
    # beta = 1/2 in 1D gives 1/pi; beta -> 1 in 1D tends to 0
    assert fractional_laplacian_constant(0.5, 1) == pytest.approx(1 / np.pi, rel=1e-14)
    assert fractional_laplacian_constant(0.999, 1) < 0.01


@pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
def test_gaussian_oracle_against_hypergeometric(beta):
    """(-Delta)^b exp(-s^2) = 4^b Gamma(1/2+b)/Gamma(1/2) 1F1(1/2+b; 1/2; -s^2), rescaled."""
    sigma, c = 0.1, 0.5
    x = np.linspace(0.2, 0.8, 13)
    s = (x - c) / sigma
    closed = sigma ** (-2 * beta) * 4**beta * gamma(0.5 + beta) / gamma(0.5) * hyp1f1(0.5 + beta, 0.5, -s**2)
    got = gaussian_fractional_laplacian(x, c, sigma, beta)
    np.testing.assert_allclose(got, closed, rtol=1e-7, atol=1e-9 * np.abs(closed).max())


def test_zero_function():
    rep = limit_check(cells=63, amplitude=0.0)
    assert rep.discrepancy == 0.0
    assert not np.any(rep.operator_values) and not np.any(rep.oracle_values)


def test_raw_truncation_shrinks_with_horizon():
    reps = [limit_check(cells=63, horizon_factor=f) for f in (1, 2, 4)]
    raw = [r.raw_discrepancy for r in reps]
    assert raw[0] > raw[1] > raw[2]
    # the far-field closure makes the result independent of the horizon
    closed = [r.discrepancy for r in reps]
    assert max(closed) - min(closed) < 1e-4
