"""Reconstruction of the reaction coefficient from flux data.

The pipeline follows the constructive content of the uniqueness argument:

1. The duality identity turns each datum into a projection
   ``<phi_j, V_i>`` of a moment field ``V_i(x) = sum_n dt v_i(t_n) w(x, t_n)``.
   Solving the Gram system recovers ``V_1, V_2`` on the interior.
2. On the collar the adjoint equals the sensor weight, so ``V_1`` extends
   there from known data.
3. Summing the adjoint recursion against ``v`` in time gives, node by node,
   ``V_2 + D(Theta . D* V_1) + q V_1 = 0``; it is solved for ``q`` wherever
   ``V_1`` is not negligible.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import NodeSet
from .fractional import FractionalSpec, multiterm_apply
from .measurement import MeasurementSet, SensorSpec, synthesize_dataset
from .operators import OperatorMatrix
from .solvers import SourceSpec

__all__ = [
    "BasisSpec",
    "ReconstructionResult",
    "recover_moments",
    "extend_V1_exterior",
    "reconstruct_q",
    "reconstruct_q_nde",
    "reconstruct_q_fractional",
    "UniquenessReport",
    "uniqueness_probe",
    "IlluminationError",
]

MASK_DELTA = 1e-10
GRAM_COND_LIMIT = 1e12


class IlluminationError(RuntimeError):
    """Raised when the sensor's adjoint does not reach any interior node."""


def _sine_modes(nodes: NodeSet, J: int) -> np.ndarray:
    x = nodes.coords[nodes.interior]
    lo = np.array([e[0] for e in nodes.spec.extent])
    length = np.array([e[1] - e[0] for e in nodes.spec.extent])
    s = (x - lo) / length
    d = nodes.dim
    if d == 1:
        ks = [(k,) for k in range(1, J + 1)]
    else:
        side = int(np.ceil(np.sqrt(J))) + 2
        pairs = [(a, b) for a in range(1, side + 1) for b in range(1, side + 1)]
        pairs.sort(key=lambda p: (p[0] ** 2 + p[1] ** 2, p))
        ks = pairs[:J]
    cols = []
    for k in ks:
        col = np.ones(len(x))
        for axis, kk in enumerate(k):
            col = col * np.sqrt(2.0 / length[axis]) * np.sin(kk * np.pi * s[:, axis])
        cols.append(col)
    return np.stack(cols, axis=1)


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Family of spatial source profiles on the interior nodes.

    ``"nodal"`` uses one indicator per interior node (``J`` is then the
    interior count), ``"sine"`` the first ``J`` L2-orthonormal sine modes.
    """

    nodes: NodeSet
    kind: str = "nodal"
    J: Optional[int] = None
    functions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.nodes.n_interior
        if self.kind == "nodal":
            J = n if self.J is None else self.J
            if J != n:
                raise ValueError("a nodal basis has one function per interior node")
            funcs = np.eye(n)
        elif self.kind == "sine":
            if self.J is None or self.J < 1:
                raise ValueError("sine basis needs a positive J")
            J = self.J
            funcs = _sine_modes(self.nodes, J)
        else:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "functions", funcs)

    @property
    def gram(self) -> np.ndarray:
        w = self.nodes.weights[self.nodes.interior]
        return self.functions.T @ (w[:, None] * self.functions)


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    q: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    V1_exterior: np.ndarray
    masked: np.ndarray
    min_V1: float
    gram_condition: float
    identity_residual: float
    nodes: NodeSet
    q_true: Optional[np.ndarray] = None

    @property
    def unmasked(self) -> np.ndarray:
        return ~self.masked

    def errors(self, q_true=None) -> dict:
        q_true = self.q_true if q_true is None else np.asarray(q_true, dtype=float)
        if q_true is None:
            return {}
        ok = self.unmasked
        diff = self.q[ok] - q_true[ok]
        w = self.nodes.weights[self.nodes.interior][ok]
        ref = np.maximum(np.abs(q_true[ok]), 1.0)
        l2_ref = np.sqrt(np.sum(w * q_true[ok] ** 2))
        l2 = np.sqrt(np.sum(w * diff**2))
        return {
            "max_abs_error": float(np.max(np.abs(diff))) if diff.size else 0.0,
            "max_rel_error": float(np.max(np.abs(diff) / ref)) if diff.size else 0.0,
            "rel_l2_error": float(l2 / l2_ref) if l2_ref > 0 else float(l2),
        }

    def diagnostics(self) -> dict:
        return {
            "min_V1": self.min_V1,
            "gram_condition": self.gram_condition,
            "identity_residual": self.identity_residual,
            "masked_nodes": [int(i) for i in self.nodes.interior[self.masked]],
            **self.errors(),
        }

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        axes = [f"x{k}" for k in range(self.nodes.dim)]
        writer.writerow([*axes, "q_true", "q_hat", "masked"])
        coords = self.nodes.coords[self.nodes.interior]
        for k in range(len(self.q)):
            qt = "" if self.q_true is None else repr(float(self.q_true[k]))
            qh = "" if self.masked[k] else repr(float(self.q[k]))
            writer.writerow([*(repr(float(c)) for c in coords[k]), qt, qh, int(self.masked[k])])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def diagnostics_json(self) -> str:
        return json.dumps(self.diagnostics(), indent=2, sort_keys=True)


def recover_moments(
    data: MeasurementSet, basis: BasisSpec, ridge: bool = False, cond_limit: float = GRAM_COND_LIMIT
):
    """Solve ``G a^i = m^i`` and expand ``V_i = sum_k a_k^i phi_k``.

    Returns ``(V1, V2, cond(G))``.  With ``ridge`` a term
    ``1e-12 trace(G)/J`` is added to the diagonal.
    """
    if data.J != basis.J:
        raise ValueError(f"data has {data.J} sources, basis has {basis.J}")
    G = basis.gram
    if ridge:
        G = G + 1e-12 * np.trace(G) / basis.J * np.eye(basis.J)
    cond = float(np.linalg.cond(G))
    if not cond < cond_limit:
        raise np.linalg.LinAlgError(
            f"Gram matrix condition {cond:.3e} exceeds {cond_limit:.1e}; retry with ridge=True"
        )
    coef = np.linalg.solve(G, data.values)
    V = basis.functions @ coef
    return V[:, 0], V[:, 1], cond


def extend_V1_exterior(sensor: SensorSpec, v) -> np.ndarray:
    """``sum_{n>=1} dt v(t_n) h_0(x, t_n)`` on every collar node."""
    v = np.asarray(v, dtype=float)
    ext = sensor.adjoint_exterior()
    return sensor.dt * (v[1:] @ ext[1:])


def reconstruct_q(
    V1: np.ndarray,
    V1_exterior: np.ndarray,
    V2: np.ndarray,
    operator: OperatorMatrix,
    delta: float = MASK_DELTA,
    gram_condition: float = float("nan"),
    q_true=None,
) -> ReconstructionResult:
    """Pointwise division ``q = -(V2 + D(Theta . D* V1)) / V1``.

    Interior nodes with ``|V1| < delta * max|V1|`` are masked (their ``q`` is
    NaN).  Raises :class:`IlluminationError` if every node is masked.
    """
    nodes = operator.nodes
    full = np.zeros(len(nodes))
    full[nodes.interior] = V1
    full[nodes.exterior] = V1_exterior
    div = operator.apply(full)[nodes.interior]
    peak = np.max(np.abs(V1)) if V1.size else 0.0
    masked = ~(np.abs(V1) >= delta * peak) if peak > 0 else np.ones(len(V1), dtype=bool)
    if masked.all():
        raise IlluminationError("sensor does not illuminate domain")
    q = np.full(len(V1), np.nan)
    ok = ~masked
    q[ok] = -(V2[ok] + div[ok]) / V1[ok]
    resid = V2[ok] + div[ok] + q[ok] * V1[ok]
    scale = np.max(np.abs(V2[ok]) + np.abs(div[ok]))
    return ReconstructionResult(
        q=q, V1=V1, V2=V2, V1_exterior=V1_exterior, masked=masked,
        min_V1=float(np.min(V1)), gram_condition=gram_condition,
        identity_residual=float(np.max(np.abs(resid)) / scale) if scale > 0 else 0.0,
        nodes=nodes, q_true=None if q_true is None else np.asarray(q_true, dtype=float),
    )


def reconstruct_q_nde(
    data: MeasurementSet, basis: BasisSpec, sensor: SensorSpec, v, operator: OperatorMatrix,
    ridge: bool = False, q_true=None,
) -> ReconstructionResult:
    """Full pipeline for the integer-order model."""
    V1, V2, cond = recover_moments(data, basis, ridge=ridge)
    ext = extend_V1_exterior(sensor, v)
    return reconstruct_q(V1, ext, V2, operator, gram_condition=cond, q_true=q_true)


def reconstruct_q_fractional(
    data: MeasurementSet, basis: BasisSpec, sensor: SensorSpec, v,
    fractional: FractionalSpec, operator: OperatorMatrix, ridge: bool = False, q_true=None,
) -> ReconstructionResult:
    """Full pipeline for the multi-term fractional model.

    The second temporal mode is ``D^alpha v + sum p_k D^{alpha_k} v`` (L1), so
    the same division formula applies.
    """
    v = np.asarray(v, dtype=float)
    expected = multiterm_apply(fractional, v)
    if data.model == "mttfnde" and not np.allclose(data.v2[1:], expected[1:], rtol=1e-12, atol=0):
        raise ValueError("data were not generated with the multi-term derivative of v")
    return reconstruct_q_nde(data, basis, sensor, v, operator, ridge=ridge, q_true=q_true)


@dataclass(frozen=True)
class UniquenessReport:
    data_distance: float
    data_scale: float
    coefficient_distance: float
    distinguishable: bool

    @property
    def relative_data_distance(self) -> float:
        return self.data_distance / self.data_scale if self.data_scale > 0 else self.data_distance


def uniqueness_probe(
    q_a, q_b, operator: OperatorMatrix, basis: BasisSpec, sensor: SensorSpec, v,
    fractional: Optional[FractionalSpec] = None, rtol: float = 1e-6,
) -> UniquenessReport:
    """Synthesize data for two coefficients and compare them.

    ``distinguishable`` is true when the data differ by more than ``rtol``
    relative to the data scale.  Uniqueness says that distinct coefficients
    must give distinguishable data.
    """
    q_a = np.asarray(q_a, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    da = synthesize_dataset(operator, q_a, basis.functions, v, sensor, fractional)
    db = synthesize_dataset(operator, q_b, basis.functions, v, sensor, fractional)
    dist = float(np.linalg.norm(da.values - db.values))
    scale = float(max(np.linalg.norm(da.values), np.linalg.norm(db.values)))
    coef = float(np.max(np.abs(q_a - q_b)))
    return UniquenessReport(dist, scale, coef, dist > rtol * scale)
