"""Grid realization of the physical domain, its interaction collar and the
accessible measurement region.

Nodes live on a uniform Cartesian lattice of spacing ``h``.  The physical
domain is an open axis-aligned box; the interaction collar holds every lattice
point outside the box whose distance to the box is strictly below the horizon.
All distance tests are carried out in integer lattice units so the partition
is exact.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "NodeLabel",
    "DomainSpec",
    "NodeSet",
    "build_nodes",
]

_ALIGN_TOL = 1e-9

AccessibleSelector = Union[str, Callable[[np.ndarray], np.ndarray]]


class NodeLabel(enum.IntEnum):
    INTERIOR = 0
    INTERACTION = 1
    ACCESSIBLE = 2


def _as_lattice_count(length: float, h: float, what: str) -> int:
    ratio = length / h
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > _ALIGN_TOL * max(1.0, ratio):
        raise ValueError(f"{what} = {length!r} is not an integer multiple of h = {h!r}")
    return k


@dataclass(frozen=True)
class DomainSpec:
    """Box domain, lattice spacing, horizon and accessible-region selector.

    Parameters
    ----------
    extent : sequence of (lo, hi)
        One pair per dimension; ``len(extent)`` is the dimension (1 or 2).
    h : float
        Lattice spacing.
    horizon : float
        Interaction radius; must be an integer multiple of ``h``.
    accessible : str or callable
        ``"right"`` / ``"left"`` select the collar beyond the upper / lower face
        of the first axis, ``"all"`` the whole collar.  A callable receives the
        ``(n, d)`` collar coordinates and returns a boolean mask.
    """

    extent: tuple = ((0.0, 1.0),)
    h: float = 1.0 / 32
    horizon: float = 4.0 / 32
    accessible: AccessibleSelector = "right"
    require_accessible: bool = True
    strict_horizon: bool = True

    def __post_init__(self):
        ext = tuple((float(lo), float(hi)) for lo, hi in self.extent)
        object.__setattr__(self, "extent", ext)
        if len(ext) not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {len(ext)}")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        for lo, hi in ext:
            if not hi > lo:
                raise ValueError(f"empty extent ({lo}, {hi})")
            _as_lattice_count(hi - lo, self.h, "box side")
        _as_lattice_count(self.horizon, self.h, "horizon")
        if self.strict_horizon and not self.horizon < self.diameter:
            raise ValueError(
                f"horizon {self.horizon} must be smaller than the domain diameter {self.diameter}"
            )

    @property
    def dim(self) -> int:
        return len(self.extent)

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum((hi - lo) ** 2 for lo, hi in self.extent)))

    @property
    def cells(self) -> tuple:
        return tuple(_as_lattice_count(hi - lo, self.h, "box side") for lo, hi in self.extent)

    @property
    def horizon_cells(self) -> int:
        return _as_lattice_count(self.horizon, self.h, "horizon")


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Immutable node cloud over the domain and its interaction collar.

    Interior nodes are stored first, then the collar; within each group nodes
    are ordered lexicographically by lattice index.
    """

    spec: DomainSpec
    coords: np.ndarray
    lattice: np.ndarray
    labels: np.ndarray
    weights: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for arr in (self.coords, self.lattice, self.labels, self.weights):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def h(self) -> float:
        return self.spec.h

    @property
    def interior(self) -> np.ndarray:
        """Indices of nodes inside the domain."""
        return np.flatnonzero(self.labels == NodeLabel.INTERIOR)

    @property
    def exterior(self) -> np.ndarray:
        """Indices of all collar nodes (accessible or not)."""
        return np.flatnonzero(self.labels != NodeLabel.INTERIOR)

    @property
    def accessible(self) -> np.ndarray:
        return np.flatnonzero(self.labels == NodeLabel.ACCESSIBLE)

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.labels == NodeLabel.INTERIOR))

    def distances(self) -> np.ndarray:
        """Pairwise Euclidean distances, shape ``(n, n)``."""
        if "dist" not in self._cache:
            diff = self.coords[:, None, :] - self.coords[None, :, :]
            d = np.sqrt(np.sum(diff**2, axis=-1))
            d.setflags(write=False)
            self._cache["dist"] = d
        return self._cache["dist"]

    def in_horizon(self) -> np.ndarray:
        """Boolean pair mask ``0 < |x - y| < horizon`` computed in lattice units."""
        if "mask" not in self._cache:
            diff = self.lattice[:, None, :] - self.lattice[None, :, :]
            d2 = np.sum(diff**2, axis=-1)
            r = self.spec.horizon_cells
            mask = (d2 > 0) & (d2 < r * r)
            mask.setflags(write=False)
            self._cache["mask"] = mask
        return self._cache["mask"]

    def to_csv(self, path=None) -> str:
        """Write ``coords..., label, weight`` rows; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        axes = [f"x{k}" for k in range(self.dim)]
        writer.writerow(["node", *axes, "label", "weight"])
        for i in range(len(self)):
            writer.writerow(
                [i, *(repr(float(c)) for c in self.coords[i]), NodeLabel(self.labels[i]).name,
                 repr(float(self.weights[i]))]
            )
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _collar_distance2(lattice: np.ndarray, cells: Sequence[int]) -> np.ndarray:
    """Squared lattice distance from each index to the closed box [0, N]^d."""
    n = np.asarray(cells)
    below = np.maximum(0, -lattice)
    above = np.maximum(0, lattice - n)
    return np.sum((below + above) ** 2, axis=-1)


def _select_accessible(spec: DomainSpec, coords: np.ndarray) -> np.ndarray:
    sel = spec.accessible
    if callable(sel):
        return np.asarray(sel(coords), dtype=bool)
    lo, hi = spec.extent[0]
    tol = _ALIGN_TOL * spec.h
    if sel == "right":
        return coords[:, 0] >= hi - tol
    if sel == "left":
        return coords[:, 0] <= lo + tol
    if sel == "all":
        return np.ones(len(coords), dtype=bool)
    if sel == "none":
        return np.zeros(len(coords), dtype=bool)
    raise ValueError(f"unknown accessible selector {sel!r}")


def build_nodes(spec: DomainSpec) -> NodeSet:
    """Realize the domain and its collar on the lattice.

    Raises
    ------
    ValueError
        If the accessible selector matches no collar node while
        ``spec.require_accessible`` is set.
    """
    cells = spec.cells
    r = spec.horizon_cells
    ranges = [np.arange(-r + 1, n + r) for n in cells]
    grids = np.meshgrid(*ranges, indexing="ij")
    lattice = np.stack([g.ravel() for g in grids], axis=-1)

    inside = np.all((lattice > 0) & (lattice < np.asarray(cells)), axis=-1)
    collar = ~inside & (_collar_distance2(lattice, cells) < r * r)

    interior_idx = lattice[inside]
    collar_idx = lattice[collar]
    lattice = np.concatenate([interior_idx, collar_idx]).astype(np.int64)
    lo = np.array([e[0] for e in spec.extent])
    coords = lo + lattice * spec.h

    labels = np.full(len(lattice), NodeLabel.INTERIOR, dtype=np.int8)
    labels[len(interior_idx):] = NodeLabel.INTERACTION
    ext = np.arange(len(interior_idx), len(lattice))
    acc = _select_accessible(spec, coords[ext])
    if acc.shape != (len(ext),):
        raise ValueError("accessible selector returned a mask of the wrong shape")
    labels[ext[acc]] = NodeLabel.ACCESSIBLE
    if spec.require_accessible and len(ext) and not acc.any():
        raise ValueError("accessible selector matches no collar node")

    weights = np.full(len(lattice), spec.h**spec.dim)
    return NodeSet(spec=spec, coords=coords, lattice=lattice, labels=labels, weights=weights)
