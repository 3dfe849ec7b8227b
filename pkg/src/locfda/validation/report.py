from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, List, Optional, Union


@lru_cache(maxsize=None)
def calibration() -> dict:
    text = resources.files("locfda.validation").joinpath("calibration.json").read_text()
    return json.loads(text)


def tol(section: str, key: str):
    return calibration()[section][key]["value"]


@dataclass
class Criterion:
    """One compared quantity.  ``kind='abs'``: |statistic - target| <= tolerance;
    ``kind='max'``: statistic <= tolerance; ``kind='min'``: statistic >= tolerance; ``kind='lt'``: statistic < tolerance;
    ``kind='range'``: tolerance[0] <= statistic <= tolerance[1]."""

    name: str
    statistic: float
    target: Union[float, str, None]
    tolerance: Any
    kind: str = "abs"
    passed: bool = field(init=False)

    def __post_init__(self):
        s = float(self.statistic)
        if not math.isfinite(s):
            self.passed = False
        elif self.kind == "abs":
            self.passed = abs(s - float(self.target)) <= float(self.tolerance)
        elif self.kind == "max":
            self.passed = s <= float(self.tolerance)
        elif self.kind == "min":
            self.passed = s >= float(self.tolerance)
        elif self.kind == "lt":
            self.passed = s < float(self.tolerance)
        elif self.kind == "range":
            lo, hi = self.tolerance
            self.passed = lo <= s <= hi
        else:
            raise ValueError(f"unknown criterion kind {self.kind!r}")


@dataclass
class ValidationReport:
    check_name: str
    statistic: float
    target: Union[float, str, None]
    tolerance: Any
    replicates: int
    seed: int
    passed: bool
    runtime_seconds: float
    criteria: List[Criterion] = field(default_factory=list)
    details: dict = field(default_factory=dict)
    skipped: bool = False
    reason: Optional[str] = None

    @classmethod
    def from_criteria(cls, name, criteria, replicates, seed, runtime, details=None):
        head = criteria[0]
        return cls(
            check_name=name,
            statistic=float(head.statistic),
            target=head.target,
            tolerance=head.tolerance,
            replicates=int(replicates),
            seed=int(seed),
            passed=all(c.passed for c in criteria),
            runtime_seconds=float(runtime),
            criteria=list(criteria),
            details=details or {},
        )

    @classmethod
    def skip(cls, name, reason, replicates, seed, runtime=0.0, details=None):
        return cls(name, float("nan"), None, None, int(replicates), int(seed), True, runtime, [], details or {}, True, reason)

    def to_dict(self) -> dict:
        d = asdict(self)
        return _jsonable(d)

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        parts = [f"{c.name}={c.statistic:.4g}" for c in self.criteria]
        return f"[{status}] {self.check_name}: " + ", ".join(parts) + (f" ({self.reason})" if self.reason else "")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x
