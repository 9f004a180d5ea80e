"""Average nonlocal flux measurements over the accessible collar.

A datum is the space-time quadrature

    m = sum_{x in Omega_a} sum_n w_x c_n N(Theta . D* u)(x, t_n) h(x, t_n)

with trapezoid weights ``c_n`` in time.  Pairing this functional with the
transposed stepper gives the duality ``m = sum_x sum_{n>=1} w_x dt phi(x) v_n w(x, t_n)``
exactly, which is what the inversion relies on.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import NodeSet
from .fractional import FractionalSpec
from .operators import OperatorMatrix, interaction_flux
from .solvers import SourceSpec, SpaceTimeField, _dt, solve_adjoint, solve_mttfnde, solve_nde

__all__ = [
    "SensorSpec",
    "default_sensor",
    "trapezoid_weights",
    "MeasurementSet",
    "measure",
    "synthesize_dataset",
    "adjoint_weighted_source",
]

SYNTH_BLOCK = 8  # source columns per batched forward solve


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    dt = _dt(times)
    c = np.full(len(times), dt)
    c[0] = c[-1] = 0.5 * dt
    return c


@dataclass(frozen=True, eq=False)
class SensorSpec:
    """Instrument weight ``h >= 0`` on the accessible nodes.

    ``h`` has shape ``(n_t, n_accessible)`` in the order of ``nodes.accessible``
    and must vanish at the first and last time level.
    """

    nodes: NodeSet
    times: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        h = np.asarray(self.h, dtype=float)
        _dt(times)
        if len(self.nodes.accessible) == 0:
            raise ValueError("no accessible nodes to measure on")
        if h.shape != (len(times), len(self.nodes.accessible)):
            raise ValueError(
                f"h must have shape {(len(times), len(self.nodes.accessible))}, got {h.shape}"
            )
        if np.any(h < 0) or not np.all(np.isfinite(h)):
            raise ValueError("sensor weight must be finite and nonnegative")
        if not np.any(h):
            raise ValueError("sensor weight must not vanish identically")
        if np.any(h[0]) or np.any(h[-1]):
            raise ValueError("sensor weight must vanish at t = 0 and t = T")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "h", h)

    @property
    def dt(self) -> float:
        return _dt(self.times)

    def exterior_values(self) -> np.ndarray:
        """``h_0`` on the whole collar: ``h`` on the accessible nodes, 0 elsewhere."""
        ext = self.nodes.exterior
        out = np.zeros((len(self.times), len(ext)))
        pos = np.searchsorted(ext, self.nodes.accessible)
        out[:, pos] = self.h
        return out

    def adjoint_exterior(self) -> np.ndarray:
        """Collar data of the adjoint problem, ``(c_n / dt) h_0``.

        Equal to ``h_0`` because ``h`` vanishes at both end levels.
        """
        c = trapezoid_weights(self.times) / self.dt
        return c[:, None] * self.exterior_values()


def default_sensor(nodes: NodeSet, times: np.ndarray) -> SensorSpec:
    """Discrete hat centred in the accessible region times ``t (T - t)`` normalized to 1."""
    times = np.asarray(times, dtype=float)
    acc = nodes.coords[nodes.accessible]
    centre = 0.5 * (acc.min(axis=0) + acc.max(axis=0))
    half = 0.5 * (acc.max(axis=0) - acc.min(axis=0)) + nodes.h
    space = np.prod(1.0 - np.abs(acc - centre) / half, axis=1)
    T = times[-1]
    bump = times * (T - times) * 4.0 / T**2
    bump[0] = bump[-1] = 0.0
    return SensorSpec(nodes, times, np.outer(bump, space))


def measure(field: SpaceTimeField, sensor: SensorSpec, operator: Optional[OperatorMatrix] = None):
    """Average nonlocal flux of a trajectory (scalar, or one value per batch column)."""
    operator = operator or field.operator
    nodes = operator.nodes
    if field.values.shape[0] != len(sensor.times):
        raise ValueError("field and sensor use different time grids")
    c = trapezoid_weights(sensor.times)
    flux = np.stack([interaction_flux(operator, field.values[n]) for n in range(len(c))])
    h0 = sensor.exterior_values()
    w = nodes.weights[nodes.exterior]
    weighted = (c[:, None] * h0 * w[None, :])
    return np.tensordot(weighted, flux, axes=([0, 1], [0, 1]))


def adjoint_weighted_source(adjoint: SpaceTimeField, phi: np.ndarray, v: np.ndarray):
    """``sum_x sum_{n>=1} w_x dt phi(x) v_n w(x, t_n)``, the dual form of a datum."""
    nodes = adjoint.operator.nodes
    dt = adjoint.dt
    wv = adjoint.interior_values[1:] * (dt * np.asarray(v, dtype=float)[1:, None])
    moment = wv.sum(axis=0) * nodes.weights[nodes.interior]
    return np.tensordot(moment, np.asarray(phi, dtype=float), axes=(0, 0))


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Flux data ``values[j, i]`` for spatial profile ``j`` and temporal mode ``i``.

    Column 0 pairs with ``v``, column 1 with its companion derivative.
    """

    values: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    v2: np.ndarray
    times: np.ndarray
    model: str = "nde"
    noise: float = 0.0
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def J(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["j", "i", "value"])
        for j in range(self.values.shape[0]):
            for i in range(self.values.shape[1]):
                writer.writerow([j + 1, i + 1, repr(float(self.values[j, i]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def sidecar(self, q_true=None, **extra) -> str:
        info = {
            "J": int(self.J),
            "model": self.model,
            "noise": self.noise,
            "seed": self.seed,
            "n_times": int(len(self.times)),
            "T": float(self.times[-1]),
        }
        if q_true is not None:
            q = np.ascontiguousarray(q_true, dtype="<f8")
            info["q_true_sha256"] = hashlib.sha256(q.tobytes()).hexdigest()
        info.update(self.meta)
        info.update(extra)
        return json.dumps(info, indent=2, sort_keys=True)


def synthesize_dataset(
    operator: OperatorMatrix,
    q_true,
    phi: np.ndarray,
    v: np.ndarray,
    sensor: SensorSpec,
    fractional: Optional[FractionalSpec] = None,
    noise: float = 0.0,
    seed: int = 0,
    v2: Optional[np.ndarray] = None,
    threads: int = 1,
) -> MeasurementSet:
    """Forward-solve every source ``phi_j v_i`` and measure it.

    ``phi`` holds one profile per column, ``(n_interior, J)``.  The second
    temporal mode defaults to :meth:`SourceSpec.derivative`.  ``noise`` adds
    zero-mean Gaussian perturbations relative to each datum's magnitude.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 1:
        phi = phi[:, None]
    times = sensor.times
    base = SourceSpec(phi, v, times)
    if v2 is None:
        v2 = base.derivative(fractional)
    v2 = np.asarray(v2, dtype=float)
    modes = (base.v, v2)

    def run(cols: slice) -> np.ndarray:
        out = np.empty((phi[:, cols].shape[1], 2))
        for i, vi in enumerate(modes):
            src = SourceSpec(phi[:, cols], vi if i == 0 else _pin_zero(vi), times)
            fld = (
                solve_nde(operator, q_true, src)
                if fractional is None
                else solve_mttfnde(operator, q_true, fractional, src)
            )
            out[:, i] = measure(fld, sensor, operator)
        return out

    J = phi.shape[1]
    threads = max(1, int(threads))
    # fixed-width blocks: batched solves round differently for different
    # widths, so the split must not depend on the thread count
    chunks = [slice(a, min(a + SYNTH_BLOCK, J)) for a in range(0, J, SYNTH_BLOCK)]
    if threads == 1 or len(chunks) == 1:
        values = np.concatenate([run(c) for c in chunks])
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(chunks))) as pool:
            values = np.concatenate(list(pool.map(run, chunks)))

    if noise > 0:
        rng = np.random.default_rng(seed)
        values = values * (1.0 + noise * rng.standard_normal(values.shape))
    return MeasurementSet(
        values=values, phi=phi, v=base.v, v2=v2, times=times,
        model="nde" if fractional is None else "mttfnde", noise=float(noise),
        seed=int(seed) if noise > 0 else None,
    )


def _pin_zero(v: np.ndarray) -> np.ndarray:
    # the level-0 source value never enters the scheme (u_0 = 0 is imposed)
    out = np.array(v, dtype=float)
    out[0] = 0.0
    return out
