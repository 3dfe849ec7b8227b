"""Wide-format CSV panels, masks and label files."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .core import FunctionalSample, GroupLabels, LocFDAError, ObservationMask, TimeGrid


class PanelFormatError(LocFDAError):
    """A panel, mask or label file that does not parse."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _read_rows(path) -> list:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    rows = [r for r in rows if any(c.strip() for c in r)]
    if len(rows) < 2:
        raise PanelFormatError(f"{path}: expected a header and at least one data row")
    return rows


def _header_ids(path, header) -> list:
    if not header or header[0].strip() != "t":
        raise PanelFormatError(f"{path}: first header cell must be 't'")
    ids = [h.strip() for h in header[1:]]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise PanelFormatError(f"{path}: duplicate curve id {dup!r}")
    if any(not i for i in ids):
        raise PanelFormatError(f"{path}: empty curve id in header")
    return ids


def load_panel(path) -> Tuple[FunctionalSample, Optional[ObservationMask]]:
    """Read a panel; empty cells become unobserved entries of the returned mask.

    Returns ``(sample, mask)`` where mask is None when every cell is filled.
    Unobserved entries hold 0.0 in the sample and must never be read.
    """
    rows = _read_rows(path)
    ids = _header_ids(path, rows[0])
    n = len(ids)
    t = []
    vals = np.zeros((len(rows) - 1, n))
    seen = np.ones((len(rows) - 1, n), dtype=bool)
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != n + 1:
            raise PanelFormatError(f"{path}: line {line} has {len(row)} cells, expected {n + 1}")
        try:
            t.append(float(row[0]))
        except ValueError:
            raise PanelFormatError(f"{path}: line {line}, column 't': non-numeric time {row[0]!r}") from None
        if r > 0 and not t[-1] > t[-2]:
            raise PanelFormatError(f"{path}: time grid not increasing at line {line} (data row {r})")
        for c, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                seen[r, c] = False
                continue
            try:
                v = float(cell)
            except ValueError:
                raise PanelFormatError(f"{path}: line {line}, column {ids[c]!r}: non-numeric value {cell!r}") from None
            if not np.isfinite(v):
                raise PanelFormatError(f"{path}: line {line}, column {ids[c]!r}: non-finite value")
            vals[r, c] = v
    try:
        sample = FunctionalSample(TimeGrid(np.array(t)), vals.T, ids)
        mask = None if seen.all() else ObservationMask(seen.T)
    except LocFDAError as exc:
        raise PanelFormatError(f"{path}: {exc}") from None
    return sample, mask


def write_panel(path, sample: FunctionalSample, mask: Optional[ObservationMask] = None) -> None:
    """Write a panel; with a mask, unobserved cells are left empty."""
    obs = None if mask is None else mask.observed
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *sample.ids])
        for r, tr in enumerate(sample.grid.points):
            cells = [fmt(v) if obs is None or obs[i, r] else "" for i, v in enumerate(sample.values[:, r])]
            w.writerow([fmt(tr), *cells])


def load_mask(path, sample: FunctionalSample) -> ObservationMask:
    rows = _read_rows(path)
    ids = _header_ids(path, rows[0])
    if ids != list(sample.ids):
        raise PanelFormatError(f"{path}: mask curve ids do not match the panel")
    if len(rows) - 1 != sample.m:
        raise PanelFormatError(f"{path}: mask has {len(rows) - 1} rows, panel grid has {sample.m}")
    obs = np.zeros((sample.m, sample.n), dtype=bool)
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != sample.n + 1:
            raise PanelFormatError(f"{path}: line {line} has {len(row)} cells, expected {sample.n + 1}")
        for c, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell not in ("0", "1"):
                raise PanelFormatError(f"{path}: line {line}, column {ids[c]!r}: mask entries must be 0 or 1")
            obs[r, c] = cell == "1"
    try:
        mask = ObservationMask(obs.T)
    except LocFDAError as exc:
        raise PanelFormatError(f"{path}: {exc}") from None
    return mask


def write_mask(path, sample: FunctionalSample, mask: ObservationMask) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *sample.ids])
        for r, tr in enumerate(sample.grid.points):
            w.writerow([fmt(tr), *(str(int(b)) for b in mask.observed[:, r])])


def load_labels(path, sample: FunctionalSample) -> GroupLabels:
    """Read ``id,label`` rows and align them with the panel's curve order."""
    rows = _read_rows(path)
    if [h.strip() for h in rows[0]] != ["id", "label"]:
        raise PanelFormatError(f"{path}: header must be 'id,label'")
    table = {}
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != 2:
            raise PanelFormatError(f"{path}: line {line} must have 2 cells")
        cid, lab = row[0].strip(), row[1].strip()
        if cid in table:
            raise PanelFormatError(f"{path}: duplicate id {cid!r}")
        try:
            table[cid] = int(lab)
        except ValueError:
            raise PanelFormatError(f"{path}: line {line}: label {lab!r} is not an integer") from None
    missing = [i for i in sample.ids if i not in table]
    if missing:
        raise PanelFormatError(f"{path}: no label for curve {missing[0]!r}")
    return GroupLabels(np.array([table[i] for i in sample.ids]))


def write_labels(path, ids: Sequence[str], labels: Iterable[int]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label"])
        for i, lab in zip(ids, labels):
            w.writerow([i, int(lab)])


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """CSV with floats at 17 significant digits."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(c) if isinstance(c, (float, np.floating)) else c for c in row])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
