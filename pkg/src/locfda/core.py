"""Shared domain types: grids, curve panels, observation masks, labels."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class LocFDAError(ValueError):
    """Invalid input or parameter for a localization routine."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).ravel()
        if pts.size < 2:
            raise LocFDAError(f"grid needs at least 2 points, got {pts.size}")
        if not np.all(np.isfinite(pts)):
            raise LocFDAError("grid contains non-finite points")
        bad = np.flatnonzero(np.diff(pts) <= 0)
        if bad.size:
            raise LocFDAError(f"grid is not strictly increasing at position {bad[0] + 1}")
        if pts[0] < 0 or pts[-1] > 1:
            raise LocFDAError("grid points must lie in [0, 1]")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self) -> int:
        return self.points.size

    @classmethod
    def equispaced(cls, m: int) -> "TimeGrid":
        return cls(np.linspace(0.0, 1.0, m))

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights; ``weights @ f`` integrates f over the grid span."""
        t = self.points
        w = np.zeros_like(t)
        h = np.diff(t)
        w[:-1] += h / 2
        w[1:] += h / 2
        return w

    def snap(self, times) -> np.ndarray:
        """Index of the nearest grid point for each real time (ties go left)."""
        s = np.atleast_1d(np.asarray(times, dtype=np.float64))
        t = self.points
        right = np.clip(np.searchsorted(t, s), 1, t.size - 1)
        left = right - 1
        take_left = (s - t[left]) <= (t[right] - s)
        return np.where(take_left, left, right).astype(np.int64)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """n curves evaluated on a shared grid (row i is curve i)."""

    grid: TimeGrid
    values: np.ndarray
    ids: Optional[Sequence[str]] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise LocFDAError("values must be an n x m matrix")
        if v.shape[1] != len(self.grid):
            raise LocFDAError(f"values have {v.shape[1]} columns, grid has {len(self.grid)} points")
        if v.shape[0] < 2:
            raise LocFDAError("a sample needs at least 2 curves")
        if not np.all(np.isfinite(v)):
            r, c = np.argwhere(~np.isfinite(v))[0]
            raise LocFDAError(f"non-finite value at curve {r}, grid point {c}")
        object.__setattr__(self, "values", _frozen(v))
        if self.ids is None:
            ids = tuple(f"c{i}" for i in range(v.shape[0]))
        else:
            ids = tuple(str(s) for s in self.ids)
            if len(ids) != v.shape[0]:
                raise LocFDAError("ids length does not match the number of curves")
            if len(set(ids)) != len(ids):
                raise LocFDAError("curve ids must be unique")
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def index_of(self, curve_id: str) -> int:
        try:
            return self.ids.index(str(curve_id))
        except ValueError:
            raise LocFDAError(f"unknown curve id {curve_id!r}") from None

    def with_values(self, values) -> "FunctionalSample":
        return FunctionalSample(self.grid, values, self.ids)


@dataclass(frozen=True, eq=False)
class ObservationMask:
    observed: np.ndarray

    def __post_init__(self):
        o = np.array(self.observed, dtype=bool)
        if o.ndim != 2:
            raise LocFDAError("mask must be a 2-d boolean matrix")
        empty = np.flatnonzero(~o.any(axis=1))
        if empty.size:
            raise LocFDAError(f"curve {empty[0]} has no observed point")
        object.__setattr__(self, "observed", _frozen(o))

    @property
    def shape(self):
        return self.observed.shape

    def check(self, sample: FunctionalSample) -> None:
        if self.observed.shape != sample.values.shape:
            raise LocFDAError(f"mask shape {self.observed.shape} does not match panel {sample.values.shape}")

    def fully_observed(self) -> np.ndarray:
        return np.flatnonzero(self.observed.all(axis=1))

    @classmethod
    def full(cls, n: int, m: int) -> "ObservationMask":
        return cls(np.ones((n, m), dtype=bool))


@dataclass(frozen=True, eq=False)
class GroupLabels:
    labels: np.ndarray
    groups: tuple = field(init=False)

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1 or lab.size == 0:
            raise LocFDAError("labels must be a non-empty 1-d sequence")
        if not np.issubdtype(lab.dtype, np.integer):
            as_int = lab.astype(np.int64)
            if not np.array_equal(as_int, lab):
                raise LocFDAError("group labels must be integers")
            lab = as_int
        object.__setattr__(self, "labels", _frozen(lab.astype(np.int64)))
        object.__setattr__(self, "groups", tuple(int(g) for g in np.unique(lab)))

    def __len__(self) -> int:
        return self.labels.size

    def members(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.labels == group)

    def sizes(self) -> dict:
        return {g: int(np.sum(self.labels == g)) for g in self.groups}


def affine_transform(sample: FunctionalSample, a: float, b: float) -> FunctionalSample:
    """Map every value v to a*v + b; the grid is untouched."""
    if a == 0:
        raise LocFDAError("affine map with a = 0 is degenerate")
    return sample.with_values(a * sample.values + b)


def trapezoid_integral(grid: TimeGrid, f) -> float:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (len(grid),):
        raise LocFDAError(f"expected {len(grid)} values, got shape {f.shape}")
    return float(np.trapezoid(f, grid.points))


def restricted_integral(grid: TimeGrid, f, where) -> float:
    """Integral of f over the grid cells of the points selected by ``where``.

    Each selected point contributes its full-grid trapezoid weight, so the
    integrals over a set and its complement add up to the full integral.
    """
    f = np.asarray(f, dtype=np.float64)
    where = np.asarray(where, dtype=bool)
    return float(np.dot(grid.weights[where], f[where]))
