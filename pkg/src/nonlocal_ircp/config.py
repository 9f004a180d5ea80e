"""Scenario files: sections of ``key = value`` lines.

Example::

    [domain]
    extent = 0 1
    h = 0.03125
    horizon = 0.125
    accessible = right

    [kernel]
    beta = 0.25

    [model]
    kind = nde

Unknown keys inside ``[coefficient]``, ``[source]`` and ``[profile]`` are
passed as parameters to the catalog entry named by ``tag``.  Every validation
error names the file line of the offending key.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

import numpy as np

from . import catalog
from .domain import DomainSpec, build_nodes
from .fractional import FractionalSpec
from .inversion import BasisSpec
from .measurement import default_sensor
from .operators import KernelSpec, assemble_L
from .solvers import uniform_times

__all__ = ["ConfigError", "Scenario", "parse_scenario", "load_scenario"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line else ""
        what = f"{key}: " if key else ""
        super().__init__(f"{where}{what}{message}")


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return " ".join(_fmt(v) for v in value)
    return str(value)


# (section, key, attribute, parser)
_LAYOUT = [
    ("domain", "extent", "extent", _floats),
    ("domain", "h", "h", float),
    ("domain", "horizon", "horizon", float),
    ("domain", "accessible", "accessible", str),
    ("kernel", "form", "kernel_form", str),
    ("kernel", "beta", "beta", float),
    ("kernel", "gamma_lo", "gamma_lo", float),
    ("kernel", "gamma_hi", "gamma_hi", float),
    ("kernel", "modulation", "modulation", str),
    ("kernel", "pair_correction", "pair_correction", _bool),
    ("time", "T", "T", float),
    ("time", "steps", "steps", int),
    ("model", "kind", "model", str),
    ("fractional", "alpha", "alpha", float),
    ("fractional", "orders", "orders", _floats),
    ("fractional", "weights", "weights", _floats),
    ("coefficient", "tag", "q_tag", str),
    ("source", "tag", "v_tag", str),
    ("profile", "tag", "phi_tag", str),
    ("basis", "kind", "basis", str),
    ("basis", "J", "J", int),
    ("run", "noise", "noise", float),
    ("run", "seed", "seed", int),
    ("run", "threads", "threads", int),
    ("run", "data", "data", str),
]
_PARAM_SECTIONS = {"coefficient": "q_params", "source": "v_params", "profile": "phi_params"}


@dataclass
class Scenario:
    """Everything needed to run one pipeline, with its defaults."""

    extent: tuple = (0.0, 1.0)
    h: float = 0.03125
    horizon: float = 0.125
    accessible: str = "right"
    kernel_form: str = "power"
    beta: float = 0.25
    gamma_lo: float = 1.0
    gamma_hi: float = 1.0
    modulation: str = "symmetric"
    pair_correction: bool = False
    T: float = 1.0
    steps: int = 64
    model: str = "nde"
    alpha: float = 0.7
    orders: tuple = (0.3,)
    weights: tuple = (0.5,)
    q_tag: str = "sin2"
    q_params: dict = field(default_factory=dict)
    v_tag: str = "linear"
    v_params: dict = field(default_factory=dict)
    phi_tag: str = "bump"
    phi_params: dict = field(default_factory=dict)
    basis: str = "nodal"
    J: int = 0
    noise: float = 0.0
    seed: int = 0
    threads: int = 1
    data: str = ""
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    # --- text round trip -------------------------------------------------

    def serialize(self) -> str:
        out = []
        current = None
        for section, key, attr, _ in _LAYOUT:
            if section != current:
                if current in _PARAM_SECTIONS:
                    out.extend(self._param_lines(current))
                if out:
                    out.append("")
                out.append(f"[{section}]")
                current = section
            out.append(f"{key} = {_fmt(getattr(self, attr))}")
        if current in _PARAM_SECTIONS:
            out.extend(self._param_lines(current))
        return "\n".join(out) + "\n"

    def _param_lines(self, section: str) -> list:
        params = getattr(self, _PARAM_SECTIONS[section])
        return [f"{k} = {_fmt(v)}" for k, v in sorted(params.items())]

    def digest(self) -> str:
        """SHA-256 of the serialized scenario; the thread count does not affect results
        and is left out."""
        text = replace(self, threads=1).serialize()
        return hashlib.sha256(text.encode()).hexdigest()

    # --- validation -------------------------------------------------------

    def _fail(self, section: str, key: str, message: str):
        raise ConfigError(message, self.lines.get((section, key)), f"{section}.{key}")

    def validate(self) -> "Scenario":
        if len(self.extent) not in (2, 4):
            self._fail("domain", "extent", "expected 'lo hi' (1D) or 'lo hi lo hi' (2D)")
        checks = [
            ("domain", "h", self.h > 0, "must be positive"),
            ("domain", "horizon", self.horizon > 0, "must be positive"),
            ("kernel", "beta", 0 < self.beta < 1, "must lie in (0, 1)"),
            ("kernel", "gamma_lo", self.gamma_lo > 0, "must be positive"),
            ("kernel", "gamma_hi", self.gamma_hi >= self.gamma_lo, "must be >= gamma_lo"),
            ("kernel", "form", self.kernel_form in ("power", "bounded"), "must be power or bounded"),
            ("kernel", "modulation", self.modulation in ("symmetric", "asymmetric"),
             "must be symmetric or asymmetric"),
            ("time", "T", self.T > 0, "must be positive"),
            ("time", "steps", self.steps >= 2, "must be at least 2"),
            ("model", "kind", self.model in ("nde", "mttfnde"), "must be nde or mttfnde"),
            ("fractional", "alpha", 0 < self.alpha < 1, "must lie in (0, 1)"),
            ("basis", "kind", self.basis in ("nodal", "sine"), "must be nodal or sine"),
            ("basis", "J", self.J >= 0, "must be nonnegative"),
            ("run", "noise", self.noise >= 0, "must be nonnegative"),
            ("run", "threads", self.threads >= 1, "must be at least 1"),
        ]
        for section, key, ok, msg in checks:
            if not ok:
                self._fail(section, key, f"{msg} (got {getattr(self, _attr(section, key))!r})")
        if self.q_tag not in catalog.COEFFICIENTS and self.q_tag != "csv":
            self._fail("coefficient", "tag", f"unknown coefficient {self.q_tag!r}")
        if self.v_tag not in catalog.STRENGTHS:
            self._fail("source", "tag", f"unknown strength {self.v_tag!r}")
        if self.phi_tag not in catalog.COEFFICIENTS:
            self._fail("profile", "tag", f"unknown profile {self.phi_tag!r}")
        try:
            self.domain_spec()
        except ValueError as exc:
            key = "horizon" if "horizon" in str(exc) else "h"
            self._fail("domain", key, str(exc))
        if self.model == "mttfnde":
            try:
                self.fractional_spec()
            except ValueError as exc:
                self._fail("fractional", "orders", str(exc))
        return self

    # --- component construction -----------------------------------------

    def domain_spec(self) -> DomainSpec:
        ext = tuple(zip(self.extent[0::2], self.extent[1::2]))
        return DomainSpec(ext, h=self.h, horizon=self.horizon, accessible=self.accessible)

    def kernel_spec(self) -> KernelSpec:
        mod = None
        if self.modulation == "asymmetric":
            # deliberately non-symmetric, for fault injection
            def mod(x, y):
                return 0.5 * (1.0 + np.tanh(4.0 * (x - 0.5 * y).sum(axis=-1)))

        form = "bounded" if self.modulation == "asymmetric" else self.kernel_form
        return KernelSpec(self.beta, self.gamma_lo, self.gamma_hi, form, mod)

    def fractional_spec(self) -> Optional[FractionalSpec]:
        if self.model != "mttfnde":
            return None
        return FractionalSpec(self.alpha, self.orders, self.weights, dt=self.T / self.steps, T=self.T)

    def build(self, assemble: bool = True) -> dict:
        """Instantiate nodes, operator, time grid, sensor, source strength and coefficient."""
        nodes = build_nodes(self.domain_spec())
        kernel = self.kernel_spec()
        times = uniform_times(self.T, self.steps)
        x = nodes.coords[nodes.interior]
        parts = {
            "nodes": nodes,
            "kernel": kernel,
            "times": times,
            "sensor": default_sensor(nodes, times),
            "v": catalog.strength(self.v_tag, times, **self.v_params),
            "q": catalog.coefficient(self.q_tag, x, **self.q_params),
            "phi": catalog.coefficient(self.phi_tag, x, **self.phi_params),
            "fractional": self.fractional_spec(),
        }
        if assemble:
            parts["operator"] = assemble_L(nodes, kernel, pair_correction=self.pair_correction)
        J = self.J or None
        parts["basis"] = BasisSpec(nodes, self.basis, J)
        return parts


def _attr(section: str, key: str) -> str:
    for s, k, a, _ in _LAYOUT:
        if (s, k) == (section, key):
            return a
    raise KeyError((section, key))


def _param_value(text: str) -> Any:
    try:
        return float(text)
    except ValueError:
        return text


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raises :class:`ConfigError` with the line number."""
    known = {(s, k): (a, p) for s, k, a, p in _LAYOUT}
    sections = {s for s, _, _, _ in _LAYOUT}
    values: dict = {}
    params: dict = {name: {} for name in _PARAM_SECTIONS.values()}
    lines: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in sections:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        lines[(section, key)] = lineno
        if (section, key) in known:
            attr, parser = known[(section, key)]
            try:
                values[attr] = parser(value)
            except ValueError as exc:
                raise ConfigError(str(exc), lineno, f"{section}.{key}") from None
        elif section in _PARAM_SECTIONS:
            params[_PARAM_SECTIONS[section]][key] = _param_value(value)
        else:
            raise ConfigError("unknown key", lineno, f"{section}.{key}")
    scenario = Scenario(**values, **params)
    scenario.lines = lines
    return scenario.validate()


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def scenario_fields() -> list:
    return [f.name for f in fields(Scenario) if f.name != "lines"]
