"""Forward and adjoint solvers for the volume-constrained diffusion models.

Both models share one time discretization: a lower-triangular Toeplitz
operator ``T`` acting on the levels ``u_1..u_N`` (``u_0 = 0``).  Implicit Euler
is ``T = (I - S)/dt``; the L1 scheme fills in the full history.  Each step
solves

    (t_0 I + A_II + diag(q)) u_n = f_n - A_IE g_n - sum_{k>=1} t_k u_{n-k}

with ``A`` the assembled ``-L`` matrix and ``g_n`` the prescribed collar values.
The adjoint is the exact transpose of this block system, so forward/adjoint
duality holds up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple, Optional

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import connected_components

from .fractional import FractionalSpec, multiterm_apply, time_operator_coefficients
from .operators import OperatorMatrix

if TYPE_CHECKING:
    from .measurement import SensorSpec

__all__ = [
    "SpaceTimeField",
    "SourceSpec",
    "as_coefficient",
    "uniform_times",
    "solve_nde",
    "solve_mttfnde",
    "solve_adjoint_nde",
    "solve_adjoint_mttfnde",
    "solve_adjoint",
    "system_matrix",
    "MaximumPrincipleReport",
    "verify_weak_mp",
    "verify_strong_mp",
]

WEAK_MP_RTOL = 1e-12


def uniform_times(T: float, n_steps: int) -> np.ndarray:
    return np.linspace(0.0, T, n_steps + 1)


def _dt(times: np.ndarray) -> float:
    steps = np.diff(times)
    dt = float(steps.mean())
    if steps.size == 0 or dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise ValueError("time grid must be uniform and increasing")
    if abs(times[0]) > 1e-12 * dt:
        raise ValueError("time grid must start at t = 0")
    return dt


def as_coefficient(q, n_interior: int) -> np.ndarray:
    """Validate a reaction coefficient sampled on interior nodes."""
    q = np.broadcast_to(np.asarray(q, dtype=float), (n_interior,)).copy()
    if not np.all(np.isfinite(q)):
        raise ValueError("reaction coefficient must be finite")
    if np.any(q < 0):
        raise ValueError("reaction coefficient must be nonnegative")
    return q


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Separated source ``phi(x) v(t)``.

    ``phi`` has shape ``(n_interior,)`` or ``(n_interior, J)`` for a batch of
    spatial profiles sharing the same temporal strength.
    """

    phi: np.ndarray
    v: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        times = np.asarray(self.times, dtype=float)
        if v.shape != times.shape:
            raise ValueError("v must be sampled on the time grid")
        _dt(times)
        if abs(v[0]) > 1e-14 * max(1.0, np.abs(v).max()):
            raise ValueError("source strength must satisfy v(0) = 0")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))

    @property
    def dt(self) -> float:
        return _dt(self.times)

    def samples(self) -> np.ndarray:
        """``phi v`` on every level, shape ``(n_t, n_interior[, J])``."""
        return np.multiply.outer(self.v, self.phi)

    def derivative(self, fractional: Optional[FractionalSpec] = None) -> np.ndarray:
        """The companion strength paired with this source in the inversion.

        Without ``fractional`` this is the backward difference quotient, the
        discrete time derivative dual to implicit Euler; with it, the L1
        multi-term derivative.  Either way it is the discrete time operator of
        the corresponding forward scheme applied to ``v``.
        """
        if fractional is None:
            out = np.zeros_like(self.v)
            out[1:] = np.diff(self.v) / self.dt
            return out
        return multiterm_apply(fractional, self.v)


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Nodal values on every time level.

    ``values`` has shape ``(n_t, n_nodes[, J])``.  ``source`` and ``exterior``
    record the data that drove the solve (interior forcing and collar values),
    used by the maximum-principle checks.
    """

    values: np.ndarray
    times: np.ndarray
    kind: str
    q: np.ndarray
    operator: OperatorMatrix
    source: np.ndarray
    exterior: np.ndarray
    fractional: Optional[FractionalSpec] = None

    @property
    def dt(self) -> float:
        return _dt(self.times)

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[:, self.operator.nodes.interior]

    def to_csv(self, path=None) -> str:
        """``node, time, value`` rows (batch fields add a ``column`` index)."""
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        vals = self.values
        if vals.ndim == 2:
            writer.writerow(["node", "time", "value"])
            for n, t in enumerate(self.times):
                for i in range(vals.shape[1]):
                    writer.writerow([i, repr(float(t)), repr(float(vals[n, i]))])
        else:
            writer.writerow(["column", "node", "time", "value"])
            for c in range(vals.shape[2]):
                for n, t in enumerate(self.times):
                    for i in range(vals.shape[1]):
                        writer.writerow([c, i, repr(float(t)), repr(float(vals[n, i, c]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_binary(self, path) -> None:
        """Little-endian dump: int64 ``n_t``, int64 ``n_nodes``, int64 ``n_cols``,
        then float64 values in row-major ``(n_t, n_nodes, n_cols)`` order."""
        vals = self.values.reshape(self.values.shape[0], self.values.shape[1], -1)
        with open(path, "wb") as fh:
            fh.write(np.asarray(vals.shape, dtype="<i8").tobytes())
            fh.write(np.ascontiguousarray(vals, dtype="<f8").tobytes())

    @staticmethod
    def read_binary(path) -> np.ndarray:
        raw = np.fromfile(path, dtype="<i8", count=3)
        data = np.fromfile(path, dtype="<f8", offset=24)
        return data.reshape(tuple(int(s) for s in raw))


def system_matrix(operator: OperatorMatrix, q: np.ndarray, t0: float) -> np.ndarray:
    """Per-step matrix ``t0 I + A_II + diag(q)``."""
    mat = operator.interior_block + np.diag(q)
    mat[np.diag_indices_from(mat)] += t0
    return mat


def _factor(mat: np.ndarray):
    lu = sla.lu_factor(mat, check_finite=True)
    if np.any(np.diag(lu[0]) == 0):
        raise RuntimeError("per-step system is singular")
    return lu


def _march(lu, tcoef: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the lower-triangular block system level by level.

    ``rhs[n]`` already contains forcing and collar coupling; level ``n`` uses
    the history ``sum_{k>=1} tcoef[k] out[n-k]``.
    """
    out = np.empty_like(rhs)
    banded = not np.any(tcoef[2:])
    flat = rhs.reshape(rhs.shape[0], rhs.shape[1], -1)
    res = out.reshape(flat.shape)
    for n in range(flat.shape[0]):
        b = flat[n].copy()
        if n > 0:
            if banded:
                b -= tcoef[1] * res[n - 1]
            else:
                b -= np.tensordot(tcoef[n:0:-1], res[:n], axes=(0, 0))
        res[n] = sla.lu_solve(lu, b, check_finite=False)
    return out


def _coupled_rhs(operator: OperatorMatrix, source: np.ndarray, exterior: np.ndarray) -> np.ndarray:
    return source - np.tensordot(operator.coupling_block, exterior, axes=(1, 1)).transpose(
        1, 0, *range(2, exterior.ndim)
    )


def _assemble_field(operator, interior, exterior, times, kind, q, source, fractional):
    nodes = operator.nodes
    shape = (interior.shape[0], len(nodes)) + interior.shape[2:]
    values = np.zeros(shape)
    values[:, nodes.interior] = interior
    values[:, nodes.exterior] = exterior
    return SpaceTimeField(
        values=values, times=times, kind=kind, q=q, operator=operator,
        source=source, exterior=exterior, fractional=fractional,
    )


def _forward(operator, q, source: SourceSpec, fractional, exterior=None):
    nodes = operator.nodes
    q = as_coefficient(q, nodes.n_interior)
    if source.phi.shape[0] != nodes.n_interior:
        raise ValueError("phi must be sampled on the interior nodes")
    times = source.times
    dt = source.dt
    n_t = len(times)
    if fractional is not None and abs(fractional.dt - dt) > 1e-12 * dt:
        raise ValueError("fractional spec and source use different time steps")
    tcoef = time_operator_coefficients(fractional, n_t - 1, dt)
    f = source.samples()
    if exterior is None:
        exterior = np.zeros((n_t, len(nodes.exterior)) + f.shape[2:])
    rhs = _coupled_rhs(operator, f, exterior)
    lu = _factor(system_matrix(operator, q, tcoef[0]))
    interior = np.zeros_like(rhs)
    interior[1:] = _march(lu, tcoef, rhs[1:])
    kind = "forward-nde" if fractional is None else "forward-mttfnde"
    return _assemble_field(operator, interior, exterior, times, kind, q, f, fractional)


def solve_nde(operator: OperatorMatrix, q, source: SourceSpec, exterior=None) -> SpaceTimeField:
    """Implicit-Euler solve of ``u_t - L u + q u = phi v`` with zero initial data.

    Collar values are zero unless ``exterior`` (shape ``(n_t, n_collar[, J])``)
    is given.
    """
    return _forward(operator, q, source, None, exterior)


def solve_mttfnde(
    operator: OperatorMatrix, q, fractional: FractionalSpec, source: SourceSpec, exterior=None
) -> SpaceTimeField:
    """L1-implicit solve of the multi-term time-fractional model."""
    return _forward(operator, q, source, fractional, exterior)


def _adjoint(operator, q, sensor: "SensorSpec", fractional, method):
    nodes = operator.nodes
    q = as_coefficient(q, nodes.n_interior)
    times = sensor.times
    dt = _dt(times)
    n_t = len(times)
    if fractional is not None and abs(fractional.dt - dt) > 1e-12 * dt:
        raise ValueError("fractional spec and sensor use different time steps")
    tcoef = time_operator_coefficients(fractional, n_t, dt)
    ext = sensor.adjoint_exterior()
    zero_src = np.zeros((n_t, nodes.n_interior))
    rhs = _coupled_rhs(operator, zero_src, ext)
    lu = _factor(system_matrix(operator, q, tcoef[0]))
    if method == "reverse":
        # march in reversed time: level k of the reversed problem is t_{N-k}
        interior = _march(lu, tcoef, rhs[::-1])[::-1]
    elif method == "backward":
        interior = np.empty_like(rhs)
        for n in range(n_t - 1, -1, -1):
            b = rhs[n].copy()
            later = n_t - 1 - n
            if later:
                b -= np.tensordot(tcoef[1 : later + 1], interior[n + 1 :], axes=(0, 0))
            interior[n] = sla.lu_solve(lu, b, check_finite=False)
    else:
        raise ValueError(f"unknown adjoint method {method!r}")
    kind = "adjoint-nde" if fractional is None else "adjoint-mttfnde"
    return _assemble_field(operator, interior, ext, times, kind, q, zero_src, fractional)


def solve_adjoint(
    operator: OperatorMatrix,
    q,
    sensor: "SensorSpec",
    fractional: Optional[FractionalSpec] = None,
    method: str = "reverse",
) -> SpaceTimeField:
    """Backward companion problem driven by the sensor weight on the collar.

    Solves ``-w_t - L w + q w = 0`` (or its L1 transpose for the fractional
    model) with ``w = h_0`` on the collar and ``w(T) = 0``, as the exact
    algebraic transpose of the forward stepper.  ``method="reverse"`` runs the
    forward stepper on the time-reversed collar data; ``"backward"`` steps
    from ``T`` down to 0 directly.  Both give the same trajectory.
    """
    return _adjoint(operator, q, sensor, fractional, method)


def solve_adjoint_nde(operator: OperatorMatrix, q, sensor: "SensorSpec", method: str = "reverse"):
    return _adjoint(operator, q, sensor, None, method)


def solve_adjoint_mttfnde(
    operator: OperatorMatrix, q, fractional: FractionalSpec, sensor: "SensorSpec",
    method: str = "reverse",
):
    return _adjoint(operator, q, sensor, fractional, method)


# --- maximum principles ----------------------------------------------------


class MaximumPrincipleReport(NamedTuple):
    passed: bool
    min_value: float
    max_abs: float
    location: tuple
    detail: str = ""


def verify_weak_mp(field: SpaceTimeField) -> MaximumPrincipleReport:
    """Nonnegativity of a trajectory produced from nonnegative data."""
    vals = field.values
    max_abs = float(np.abs(vals).max()) if vals.size else 0.0
    loc = np.unravel_index(np.argmin(vals), vals.shape)
    vmin = float(vals[loc])
    passed = vmin >= -WEAK_MP_RTOL * max_abs
    return MaximumPrincipleReport(passed, vmin, max_abs, tuple(int(i) for i in loc))


def influence_mask(field: SpaceTimeField) -> np.ndarray:
    """Interior (level, node) pairs reached by the data, shape ``(n_t, n_int[, J])``.

    A level is reached once data has switched on at the same or an earlier
    level (forward) or at the same or a later one (adjoint).  Within a level
    the implicit step spreads over the connected components of the interior
    interaction graph.
    """
    op = field.operator
    a_ii = op.interior_block
    graph = (a_ii != 0) & ~np.eye(len(a_ii), dtype=bool)
    n_comp, comp = connected_components(graph, directed=False)
    coupling = op.coupling_block != 0

    src = field.source != 0
    ext = field.exterior != 0
    ext_seed = np.einsum("ie,te...->ti...", coupling.astype(float), ext.astype(float)) > 0
    seeds = src | ext_seed
    if field.kind.startswith("adjoint"):
        reached = np.flip(np.logical_or.accumulate(np.flip(seeds, 0), axis=0), 0)
    else:
        reached = np.logical_or.accumulate(seeds, axis=0)
    comp_hit = np.zeros((reached.shape[0], n_comp) + reached.shape[2:], dtype=bool)
    for c in range(n_comp):
        comp_hit[:, c] = reached[:, comp == c].any(axis=1)
    return comp_hit[:, comp]


def verify_strong_mp(field: SpaceTimeField) -> MaximumPrincipleReport:
    """Strict positivity on the discrete domain of influence of the data.

    Passes when the field vanishes identically or is strictly positive at every
    interior (level, node) reached by the data.  Forward levels at ``t = 0``
    are pinned to zero by the initial condition and are excluded.
    """
    vals = field.interior_values
    if not np.any(vals):
        return MaximumPrincipleReport(True, 0.0, 0.0, (), "vanishes identically")
    mask = influence_mask(field)
    if field.kind.startswith("forward"):
        mask[0] = False
    max_abs = float(np.abs(vals).max())
    bad = mask & ~(vals > 0)
    masked_vals = np.where(mask, vals, np.inf)
    loc = np.unravel_index(np.argmin(masked_vals), vals.shape)
    vmin = float(masked_vals[loc]) if mask.any() else 0.0
    if bad.any():
        first = np.argwhere(bad)[0]
        node = int(field.operator.nodes.interior[first[1]])
        return MaximumPrincipleReport(
            False, vmin, max_abs, tuple(int(i) for i in first),
            f"non-positive value at level {int(first[0])}, node {node}",
        )
    return MaximumPrincipleReport(True, vmin, max_abs, tuple(int(i) for i in loc), "positive on influence set")
