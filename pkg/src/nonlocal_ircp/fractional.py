"""L1 discretization of Caputo derivatives on a uniform time grid.

For a series ``f_0, ..., f_N`` with step ``dt`` the L1 scheme reads

    D^a f(t_n) ~ dt^-a / Gamma(2 - a) * sum_{j=1..n} b_{n-j} (f_j - f_{j-1}),
    b_k = (k + 1)^(1-a) - k^(1-a).

A multi-term operator ``D^a + sum_k p_k D^{a_k}`` simply adds the scaled lag
weights.  Written against the unknowns ``f_1..f_N`` (with ``f_0`` fixed) the
scheme is a lower-triangular Toeplitz matrix; its first column is what the
solvers need, see :func:`time_operator_coefficients`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

__all__ = [
    "FractionalSpec",
    "L1Weights",
    "l1_lag_weights",
    "caputo_apply",
    "multiterm_apply",
    "multiterm_lag_weights",
    "time_operator_coefficients",
    "ExtremumReport",
    "check_extremum_lemma",
]


@dataclass(frozen=True)
class FractionalSpec:
    """Leading order ``alpha``, lower orders with positive weights, time grid.

    ``orders`` must be strictly increasing and below ``alpha``; an empty tuple
    gives the single-term operator.
    """

    alpha: float
    orders: tuple = ()
    weights: tuple = ()
    dt: float = 1.0 / 64
    T: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(float(a) for a in self.orders))
        object.__setattr__(self, "weights", tuple(float(p) for p in self.weights))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if len(self.orders) != len(self.weights):
            raise ValueError("orders and weights must have the same length")
        seq = (0.0, *self.orders, self.alpha)
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ValueError("fractional orders must satisfy 0 < a_1 < ... < a_m < alpha")
        if any(p <= 0 for p in self.weights):
            raise ValueError("multi-term weights must be positive")
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("dt and T must be positive")
        n = self.T / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError("T must be an integer multiple of dt")

    @property
    def m(self) -> int:
        return len(self.orders)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def single(self) -> "FractionalSpec":
        return FractionalSpec(self.alpha, dt=self.dt, T=self.T)


def l1_lag_weights(alpha: float, n: int, dt: float) -> np.ndarray:
    """Scaled L1 lag weights ``dt^-a/Gamma(2-a) * b_k`` for ``k = 0..n-1``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    k = np.arange(n, dtype=float)
    b = (k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)
    return b * dt ** (-alpha) / gamma_fn(2.0 - alpha)


@dataclass(frozen=True)
class L1Weights:
    """Lower-triangular convolution weights of the L1 scheme for one order."""

    alpha: float
    dt: float
    n: int
    lags: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lags = l1_lag_weights(self.alpha, self.n, self.dt)
        lags.setflags(write=False)
        object.__setattr__(self, "lags", lags)

    def matrix(self) -> np.ndarray:
        """``W[n-1, j-1] = b_{n,j}`` acting on the increments ``f_j - f_{j-1}``."""
        idx = np.subtract.outer(np.arange(self.n), np.arange(self.n))
        out = np.where(idx >= 0, self.lags[np.clip(idx, 0, None)], 0.0)
        return out


def multiterm_lag_weights(spec: FractionalSpec, n: int) -> np.ndarray:
    """Lag weights of ``D^alpha + sum p_k D^{alpha_k}``."""
    c = l1_lag_weights(spec.alpha, n, spec.dt)
    for a_k, p_k in zip(spec.orders, spec.weights):
        c = c + p_k * l1_lag_weights(a_k, n, spec.dt)
    return c


def time_operator_coefficients(spec: Optional[FractionalSpec], n: int, dt: float) -> np.ndarray:
    """First column of the lower-triangular Toeplitz time operator.

    ``(T u)_n = sum_{j<=n} t_{n-j} u_j`` for unknowns ``u_1..u_n`` with
    ``u_0 = 0``.  ``spec=None`` gives the implicit-Euler difference quotient
    ``t_0 = 1/dt, t_1 = -1/dt``.  For L1, ``t_0 > 0`` and ``t_k < 0`` for
    ``k >= 1``, the sign pattern behind the discrete maximum principle.
    """
    t = np.zeros(n)
    if spec is None:
        t[0] = 1.0 / dt
        if n > 1:
            t[1] = -1.0 / dt
        return t
    c = multiterm_lag_weights(spec, n)
    t[0] = c[0]
    t[1:] = c[1:] - c[:-1]
    return t


def _samples(samples) -> np.ndarray:
    f = np.asarray(samples, dtype=float)
    if f.shape[0] < 2:
        raise ValueError("need at least two samples")
    return f


def _apply_lags(lags: np.ndarray, f: np.ndarray) -> np.ndarray:
    inc = np.diff(f, axis=0)
    n = inc.shape[0]
    cols = inc.reshape(n, -1)
    out = np.zeros((n + 1, cols.shape[1]))
    for c in range(cols.shape[1]):
        out[1:, c] = np.convolve(lags, cols[:, c])[:n]
    return out.reshape(f.shape)


def caputo_apply(spec: FractionalSpec, samples) -> np.ndarray:
    """L1 Caputo derivative of order ``spec.alpha`` at every time level.

    ``samples[n] = f(n dt)``, first axis is time.  Entry 0 of the result is 0
    (no increments yet).
    """
    f = _samples(samples)
    lags = l1_lag_weights(spec.alpha, f.shape[0] - 1, spec.dt)
    return _apply_lags(lags, f)


def multiterm_apply(spec: FractionalSpec, samples) -> np.ndarray:
    """``D^alpha f + sum_k p_k D^{alpha_k} f`` by the L1 scheme."""
    f = _samples(samples)
    return _apply_lags(multiterm_lag_weights(spec, f.shape[0] - 1), f)


class ExtremumReport(NamedTuple):
    value: float
    index: int
    tol: float
    applicable: bool
    passed: bool


def check_extremum_lemma(samples, spec: FractionalSpec, slack: float = 1.0) -> ExtremumReport:
    """L1 Caputo value at the discrete minimizer of ``samples``.

    The minimizer is searched in ``t > 0``; if the minimum over the whole grid
    is attained only at ``t = 0`` the check is not applicable.  The tolerance
    is ``slack * dt * max|f|`` plus a roundoff floor.  (Summation by parts shows
    the L1 value at a discrete minimizer is already <= 0, since the lag weights
    decrease, so in practice only roundoff is ever consumed.)
    """
    f = _samples(samples)
    fmin = f.min()
    candidates = np.flatnonzero(f[1:] == fmin) + 1
    scale = float(np.abs(f).max())
    tol = slack * spec.dt * scale + 64 * np.finfo(float).eps * scale * f.shape[0] ** 0.5
    if candidates.size == 0:
        return ExtremumReport(float("nan"), int(np.argmin(f)), tol, False, True)
    n = int(candidates[0])
    val = float(caputo_apply(spec, f[: n + 1])[n])
    return ExtremumReport(val, n, tol, True, val <= tol)
