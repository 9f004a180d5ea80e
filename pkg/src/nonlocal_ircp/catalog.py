"""Registered closed-form fields selectable by tag and parameters."""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["coefficient", "strength", "COEFFICIENTS", "STRENGTHS"]


def _zero(x, **_):
    return np.zeros(len(x))


def _constant(x, value=1.0, **_):
    return np.full(len(x), float(value))


def _linear(x, a=1.0, b=1.0, **_):
    return a + b * x[:, 0]


def _sin2(x, a=1.0, b=1.0, **_):
    return a + b * np.prod(np.sin(np.pi * x) ** 2, axis=1)


def _bump(x, a=0.0, b=1.0, centre=0.5, width=0.2, **_):
    r2 = np.sum((x - centre) ** 2, axis=1)
    return a + b * np.exp(-r2 / width**2)


COEFFICIENTS = {
    "zero": _zero,
    "constant": _constant,
    "linear": _linear,
    "sin2": _sin2,
    "bump": _bump,
}


def _read_csv_coefficient(path: str, x: np.ndarray):
    """Read ``x0[,x1],q`` rows; the ``q`` column may be blank for unknown truth."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no rows")
    d = x.shape[1]
    pts = np.array([[float(r[f"x{k}"]) for k in range(d)] for r in rows])
    if len(pts) != len(x) or not np.allclose(pts, x, atol=1e-9):
        raise ValueError(f"{path}: coordinates do not match the interior nodes")
    q = [r.get("q", "") for r in rows]
    if all(s.strip() == "" for s in q):
        return None
    return np.array([float(s) for s in q])


def coefficient(tag: str, x: np.ndarray, **params):
    """Reaction coefficient on interior coordinates ``x`` (``(n, d)``).

    ``tag="csv"`` reads ``params["path"]`` and may return ``None`` when the
    file carries no coefficient values.
    """
    if tag == "csv":
        return _read_csv_coefficient(params["path"], x)
    try:
        fn = COEFFICIENTS[tag]
    except KeyError:
        raise ValueError(f"unknown coefficient tag {tag!r}") from None
    return fn(x, **params)


STRENGTHS = {
    "linear": lambda t, T, **_: t / T,
    "quadratic": lambda t, T, **_: (t / T) ** 2,
    "sine": lambda t, T, omega=0.5, **_: np.sin(np.pi * omega * t / T),
    "ramp": lambda t, T, t1=0.5, **_: np.minimum(t / (t1 * T), 1.0),
}


def strength(tag: str, times: np.ndarray, **params) -> np.ndarray:
    """Temporal source strength; every catalog entry vanishes at ``t = 0``."""
    try:
        fn = STRENGTHS[tag]
    except KeyError:
        raise ValueError(f"unknown source strength tag {tag!r}") from None
    T = float(times[-1])
    return np.asarray(fn(np.asarray(times, dtype=float), T, **params), dtype=float)
