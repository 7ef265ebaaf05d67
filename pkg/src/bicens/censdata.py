"""Data types and ingestion for bivariate censored observations.

An observation is a rectangle ``[l1, r1] x [l2, r2]`` known to contain the
hidden pair, together with a multiplicity count.  Unknown bounds are encoded
as ``-inf`` / ``inf``; plain floats already provide the required total order,
so no wrapper type is used.

Two dataset kinds exist.  ``case-2`` rectangles come from interval-censored
files and are closed on every finite side.  ``current-status`` rectangles
arise from quadrant conversion of ``(t, u, delta1, delta2)`` observations and
are open on finite *lower* sides: ``delta = 1`` yields ``(-inf, t]`` and
``delta = 0`` yields ``(t, inf)``.  Membership tests downstream honour this
through ``Dataset.kind``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources

CURRENT_STATUS = "current-status"
CASE2 = "case-2"

_INF = math.inf
_CSV_HEADER = ("L1", "R1", "L2", "R2", "freq")


class DatasetError(ValueError):
    """Base class for dataset ingestion failures."""


class RectangleParseError(DatasetError):
    """A CSV record could not be parsed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RectangleValidationError(DatasetError):
    """A record violates a rectangle invariant (ordering, count)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class CensoringRectangle:
    """Information set ``[l1, r1] x [l2, r2]`` with multiplicity ``freq``.

    Degenerate rectangles (``l == r`` on one or both axes) are legal; they
    occur in real interval-censored tables.
    """

    l1: float
    r1: float
    l2: float
    r2: float
    freq: int = 1

    def __post_init__(self):
        for name in ("l1", "r1", "l2", "r2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or math.isnan(v):
                raise RectangleValidationError(f"{name} must be a number or +-inf, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.l1 > self.r1:
            raise RectangleValidationError(f"l1 > r1 ({self.l1} > {self.r1})")
        if self.l2 > self.r2:
            raise RectangleValidationError(f"l2 > r2 ({self.l2} > {self.r2})")
        if not isinstance(self.freq, int) or isinstance(self.freq, bool) or self.freq < 1:
            raise RectangleValidationError(f"freq must be a positive integer, got {self.freq!r}")

    def bounds(self) -> tuple[float, float, float, float]:
        return (self.l1, self.r1, self.l2, self.r2)


@dataclass(frozen=True)
class CurrentStatusObs:
    """One current-status observation: inspection times and status flags.

    ``delta1`` indicates the first hidden coordinate was already <= ``t`` at
    inspection; ``delta2`` likewise for ``u``.
    """

    t: float
    u: float
    delta1: bool
    delta2: bool

    def __post_init__(self):
        for name in ("t", "u"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise RectangleValidationError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        object.__setattr__(self, "delta1", bool(self.delta1))
        object.__setattr__(self, "delta2", bool(self.delta2))

    def rectangle(self, freq: int = 1) -> CensoringRectangle:
        """Quadrant rectangle anchored at (t, u); lower sides open by convention."""
        l1, r1 = (-_INF, self.t) if self.delta1 else (self.t, _INF)
        l2, r2 = (-_INF, self.u) if self.delta2 else (self.u, _INF)
        return CensoringRectangle(l1, r1, l2, r2, freq)


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of censoring rectangles.

    ``n`` is the total multiplicity; it always equals the sum of the
    rectangle frequencies.
    """

    rectangles: tuple[CensoringRectangle, ...]
    kind: str = CASE2
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rectangles", tuple(self.rectangles))
        if self.kind not in (CURRENT_STATUS, CASE2):
            raise DatasetError(f"unknown dataset kind {self.kind!r}")
        object.__setattr__(self, "n", sum(r.freq for r in self.rectangles))

    def __len__(self) -> int:
        return len(self.rectangles)

    def freqs(self):
        import numpy as np

        return np.array([r.freq for r in self.rectangles], dtype=float)


def parse_rectangle_csv(source, kind: str = CASE2) -> Dataset:
    """Read a rectangle dataset from CSV text.

    ``source`` may be a string or a readable text stream.  Expected columns
    are ``L1,R1,L2,R2,freq``; bounds are decimal numbers or the tokens
    ``inf`` / ``-inf``.  A header row is recognised and skipped.

    Raises
    ------
    RectangleParseError
        Malformed number or wrong field count, with the offending line.
    RectangleValidationError
        ``L > R`` or ``freq <= 0``, with the offending line.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    rects = []
    for lineno, row in enumerate(csv.reader(source), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        fields = [c.strip() for c in row]
        if lineno == 1 and tuple(f.lower() for f in fields) == tuple(h.lower() for h in _CSV_HEADER):
            continue
        if len(fields) != 5:
            raise RectangleParseError(lineno, f"expected 5 fields, got {len(fields)}")
        bounds = []
        for name, tok in zip(_CSV_HEADER[:4], fields[:4]):
            try:
                v = float(tok)
            except ValueError:
                raise RectangleParseError(lineno, f"{name}: {tok!r} is not a number") from None
            if math.isnan(v):
                raise RectangleParseError(lineno, f"{name}: {tok!r} is not a number")
            bounds.append(v)
        try:
            freq = int(fields[4])
        except ValueError:
            raise RectangleParseError(lineno, f"freq: {fields[4]!r} is not an integer") from None
        try:
            rects.append(CensoringRectangle(*bounds, freq=freq))
        except RectangleValidationError as exc:
            raise RectangleValidationError(str(exc), line=lineno) from None
    return Dataset(tuple(rects), kind=kind)


def _format_bound(v: float) -> str:
    if v == _INF:
        return "inf"
    if v == -_INF:
        return "-inf"
    return repr(v) if v != int(v) else str(int(v))


def serialize_rectangle_csv(data: Dataset) -> str:
    """Inverse of :func:`parse_rectangle_csv` (kind is not stored)."""
    lines = [",".join(_CSV_HEADER)]
    for r in data.rectangles:
        lines.append(",".join([*(_format_bound(b) for b in r.bounds()), str(r.freq)]))
    return "\n".join(lines) + "\n"


def cs_to_rectangles(obs) -> Dataset:
    """Convert current-status observations to quadrant rectangles.

    Identical rectangles are merged with summed frequencies; total frequency
    is preserved.
    """
    merged: dict[tuple, int] = {}
    for o in obs:
        key = o.rectangle().bounds()
        merged[key] = merged.get(key, 0) + 1
    rects = tuple(CensoringRectangle(*k, freq=f) for k, f in merged.items())
    return Dataset(rects, kind=CURRENT_STATUS)


def bf_csv_path() -> str:
    """Filesystem path of the bundled Betensky-Finkelstein rectangle CSV."""
    return str(resources.files(__package__).joinpath("data/bf.csv"))


def bf_dataset() -> Dataset:
    """The bundled Betensky-Finkelstein dataset: 87 rectangles, n = 204.

    Bounds are kept exactly as published (some secondary sources lower the
    positive left bounds by 1; we do not).
    """
    with open(bf_csv_path(), "r", encoding="utf-8") as fh:
        return parse_rectangle_csv(fh, kind=CASE2)
