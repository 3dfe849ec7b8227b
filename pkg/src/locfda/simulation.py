"""Synthetic curve panels, MCAR censoring and thinning, all seeded.

Randomness comes from Philox (a counter-based generator) streams addressed
by ``(seed, key...)``.  Each curve, censored row and replicate owns its own
stream, so results do not depend on generation order or worker count.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import FunctionalSample, LocFDAError, ObservationMask, TimeGrid

_U64 = 2**64

GRID_STREAM = 0
CURVE_STREAM = 1
CENSOR_STREAM = 2
THIN_STREAM = 3


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < _U64:
        raise LocFDAError("seed must be a 64-bit unsigned integer")
    return seed


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *key)``."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A child 64-bit seed, used to hand a replicate its own generator seed."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------

_DIST_RE = re.compile(r"^\s*(uniform|normal)\s*\(\s*([^,]+)\s*,\s*([^)]+)\)\s*$")


@dataclass(frozen=True)
class CoeffDist:
    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind == "uniform":
            if not self.a <= self.b:
                raise LocFDAError("uniform coefficient bounds need a <= b")
        elif self.kind == "normal":
            if not self.b > 0:
                raise LocFDAError("normal coefficient scale must be positive")
        else:
            raise LocFDAError(f"unknown coefficient law {self.kind!r}")

    @classmethod
    def parse(cls, text) -> "CoeffDist":
        if isinstance(text, CoeffDist):
            return text
        if isinstance(text, dict):
            return cls(text["kind"], float(text["a"]), float(text["b"]))
        match = _DIST_RE.match(str(text))
        if not match:
            raise LocFDAError(f"cannot parse coefficient law {text!r}")
        return cls(match.group(1), float(match.group(2)), float(match.group(3)))

    def __str__(self) -> str:
        return f"{self.kind}({self.a!r},{self.b!r})"

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "uniform":
            # a == b is a point mass
            return self.a + (self.b - self.a) * rng.random(size)
        return rng.normal(self.a, self.b, size)


@dataclass(frozen=True)
class Marginal:
    """Pointwise marginal law for i.i.d. panels: uniform on [lo, hi] or density 2x on [0, 1]."""

    kind: str = "uniform"
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "triangular"):
            raise LocFDAError(f"unknown marginal {self.kind!r}")
        if self.kind == "uniform" and not self.lo < self.hi:
            raise LocFDAError("uniform marginal needs lo < hi")

    @classmethod
    def parse(cls, text) -> "Marginal":
        if isinstance(text, Marginal):
            return text
        s = str(text).strip()
        if s == "uniform01":
            return cls("uniform", 0.0, 1.0)
        if s == "triangular":
            return cls("triangular", 0.0, 1.0)
        match = re.match(r"^uniform\s*\(\s*([^,]+)\s*,\s*([^)]+)\)$", s)
        if match:
            return cls("uniform", float(match.group(1)), float(match.group(2)))
        raise LocFDAError(f"unknown marginal {text!r}")

    def __str__(self) -> str:
        if self.kind == "triangular":
            return "triangular"
        if (self.lo, self.hi) == (0.0, 1.0):
            return "uniform01"
        return f"uniform({self.lo!r},{self.hi!r})"

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        u = rng.random(size)
        if self.kind == "triangular":
            return np.sqrt(u)
        return self.lo + (self.hi - self.lo) * u

    @property
    def support_measure(self) -> float:
        return self.hi - self.lo if self.kind == "uniform" else 1.0

    @property
    def inverse_density_integral(self) -> float:
        """Integral of 1/density over the support (infinite for the triangular law)."""
        if self.kind == "uniform":
            return (self.hi - self.lo) ** 2
        return float("inf")


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "fourier"
    n: int = 100
    m: int = 101
    grid_kind: str = "equispaced"
    num_terms: int = 1
    coeff_dist: CoeffDist = CoeffDist("uniform", -1.0, 1.0)
    marginal: Marginal = Marginal()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeff_dist", CoeffDist.parse(self.coeff_dist))
        object.__setattr__(self, "marginal", Marginal.parse(self.marginal))
        object.__setattr__(self, "seed", _check_seed(self.seed))
        if self.kind not in ("harmonic", "fourier", "pointwise_iid"):
            raise LocFDAError(f"unknown generator kind {self.kind!r}")
        if self.grid_kind not in ("equispaced", "iid_uniform_sorted"):
            raise LocFDAError(f"unknown grid kind {self.grid_kind!r}")
        if self.n < 2 or self.m < 2:
            raise LocFDAError("generator needs n >= 2 and m >= 2")
        if self.num_terms < 1:
            raise LocFDAError("num_terms must be at least 1")

    def replace(self, **changes) -> "GeneratorSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["coeff_dist"] = str(self.coeff_dist)
        d["marginal"] = str(self.marginal)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise LocFDAError(f"unknown generator keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class CensoringSpec:
    kind: str = "two_uniform_interval"
    block_fraction_mean: float = 1.0 / 3.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", _check_seed(self.seed))
        if self.kind not in ("two_uniform_interval", "consecutive_block"):
            raise LocFDAError(f"unknown censoring kind {self.kind!r}")
        if not 0.0 < self.block_fraction_mean < 1.0:
            raise LocFDAError("block_fraction_mean must lie in (0, 1)")

    def replace(self, **changes) -> "CensoringSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CensoringSpec":
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise LocFDAError(f"unknown censoring keys: {sorted(unknown)}")
        return cls(**d)


def specs_to_json(generator: GeneratorSpec, censoring: Optional[CensoringSpec] = None) -> str:
    block = {"generator": generator.to_dict()}
    if censoring is not None:
        block["censoring"] = censoring.to_dict()
    return json.dumps(block, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def make_grid(spec: GeneratorSpec) -> TimeGrid:
    if spec.grid_kind == "equispaced":
        return TimeGrid.equispaced(spec.m)
    pts = np.sort(stream(spec.seed, GRID_STREAM).random(spec.m))
    return TimeGrid(pts)


def draw_coefficients(spec: GeneratorSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Sine and cosine coefficients, shape (n, num_terms) each, one stream per curve."""
    terms = 1 if spec.kind == "harmonic" else spec.num_terms
    A = np.empty((spec.n, terms))
    B = np.empty((spec.n, terms))
    for i in range(spec.n):
        rng = stream(spec.seed, CURVE_STREAM, i)
        A[i] = spec.coeff_dist.draw(rng, terms)
        B[i] = spec.coeff_dist.draw(rng, terms)
    return A, B


def fourier_curves(A: np.ndarray, B: np.ndarray, t: np.ndarray, freq_scale: float = 1.0) -> np.ndarray:
    """sum_j A_j sin(2 pi j s t) + B_j cos(2 pi j s t) for each coefficient row, s = freq_scale."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    j = np.arange(1, A.shape[1] + 1) * freq_scale
    arg = 2.0 * np.pi * np.outer(j, t)
    return A @ np.sin(arg) + B @ np.cos(arg)


def generate(spec: GeneratorSpec) -> FunctionalSample:
    grid = make_grid(spec)
    if spec.kind == "pointwise_iid":
        values = np.empty((spec.n, spec.m))
        for i in range(spec.n):
            values[i] = spec.marginal.draw(stream(spec.seed, CURVE_STREAM, i), spec.m)
    else:
        A, B = draw_coefficients(spec)
        values = fourier_curves(A, B, grid.points)
    return FunctionalSample(grid, values)


# ---------------------------------------------------------------------------
# censoring
# ---------------------------------------------------------------------------


def interval_mask(grid: TimeGrid, u1: float, u2: float, which: int) -> np.ndarray:
    """Observed flags after removing closed interval ``which`` of [0,u1], [u1,u2], [u2,1]."""
    lo, hi = sorted((float(u1), float(u2)))
    edges = (0.0, lo, hi, 1.0)
    t = grid.points
    gone = (t >= edges[which]) & (t <= edges[which + 1])
    return ~gone


def block_mask(m: int, length: int, start: int) -> np.ndarray:
    obs = np.ones(m, dtype=bool)
    obs[start : start + length] = False
    return obs


def _block_row(rng: np.random.Generator, m: int, frac: float) -> np.ndarray:
    # fraction ~ Uniform(frac - h, frac + h): mean frac, never all of the curve
    h = min(frac, 1.0 - frac)
    phi = frac + h * (2.0 * rng.random() - 1.0)
    length = min(int(round(phi * m)), m - 1)
    start = int(rng.integers(0, m - length + 1))
    return block_mask(m, length, start)


def censor(mask_shape, spec: CensoringSpec, grid: TimeGrid, rows: Optional[Sequence[int]] = None) -> ObservationMask:
    """MCAR mask; only ``rows`` (default: all) are censored, others stay fully observed."""
    n, m = (int(x) for x in mask_shape)
    if n < 1 or m < 1:
        raise LocFDAError("mask shape must be positive")
    if m != len(grid):
        raise LocFDAError("mask width does not match the grid")
    observed = np.ones((n, m), dtype=bool)
    rows = range(n) if rows is None else [int(r) for r in rows]
    for i in rows:
        rng = stream(spec.seed, CENSOR_STREAM, i)
        for _ in range(1000):
            if spec.kind == "two_uniform_interval":
                u = rng.random(2)
                row = interval_mask(grid, u[0], u[1], int(rng.integers(3)))
            else:
                row = _block_row(rng, m, spec.block_fraction_mean)
            if row.any():
                break
        else:
            raise LocFDAError("censoring cannot leave an observed point on this grid")
        observed[i] = row
    return ObservationMask(observed)


def thin_at_time(n: int, p: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split 0..n-1 into (observed, missing); each index is missing with probability p."""
    if not 0.0 <= p < 1.0:
        raise LocFDAError("thinning probability must lie in [0, 1)")
    marks = stream(seed, THIN_STREAM).random(int(n)) < p
    return np.flatnonzero(~marks), np.flatnonzero(marks)
