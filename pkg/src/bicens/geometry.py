"""Maximal-intersection reduction and candidate/observation incidence.

The likelihood for rectangle-censored data depends on a candidate
distribution only through the probabilities it assigns to the observation
rectangles, so any maximizer can be supported on the *maximal intersections*:
nonempty intersections of observation rectangles whose covering set cannot
be enlarged.  :func:`maximal_intersections` computes them with a
coordinate-compressed sweep over the edge arrangement;
:func:`incidence` builds the 0/1 membership matrix linking candidate mass
points to observation rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .censdata import CURRENT_STATUS, Dataset

_INF = math.inf


@dataclass(frozen=True)
class CanonicalRectangle:
    """A maximal intersection of observation rectangles.

    Bound values are stored without open/closed flags: for case-2 data every
    finite side is closed, for current-status data finite lower sides are
    open (inherited from the quadrant convention).  Downstream code only
    relies on the right-upper corner, which lies in the rectangle under
    either convention.
    """

    l1: float
    r1: float
    l2: float
    r2: float

    def bounds(self) -> tuple[float, float, float, float]:
        return (self.l1, self.r1, self.l2, self.r2)


@dataclass(frozen=True)
class IncidenceMatrix:
    """Binary membership of candidate points in observation rectangles.

    ``h[i, j]`` is True iff candidate ``j`` lies in rectangle ``i``.  Rows
    with no candidate force a log-likelihood of -inf; they are reported via
    ``zero_rows`` and it is the fitter's job to reject them.
    """

    h: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=bool))
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        if self.h.ndim != 2:
            raise ValueError("incidence matrix must be 2-d")
        if self.points.shape != (self.h.shape[1], 2):
            raise ValueError("points must be (n_candidates, 2)")

    @property
    def zero_rows(self) -> np.ndarray:
        return np.flatnonzero(~self.h.any(axis=1))


def _bound_arrays(data: Dataset):
    b = np.array([r.bounds() for r in data.rectangles], dtype=float)
    return b[:, 0], b[:, 1], b[:, 2], b[:, 3]


def membership(data: Dataset, points) -> np.ndarray:
    """Boolean matrix (n_rectangles, n_points) under the kind convention."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    l1, r1, l2, r2 = _bound_arrays(data)
    if data.kind == CURRENT_STATUS:
        in_x = (x > l1[:, None]) & (x <= r1[:, None])
        in_y = (y > l2[:, None]) & (y <= r2[:, None])
    else:
        in_x = (x >= l1[:, None]) & (x <= r1[:, None])
        in_y = (y >= l2[:, None]) & (y <= r2[:, None])
    return in_x & in_y


def incidence(data: Dataset, points) -> IncidenceMatrix:
    """Membership matrix of candidate ``points`` in the data's rectangles.

    All-zero rows are not fatal here; ``IncidenceMatrix.zero_rows`` exposes
    them and :func:`bicens.npmle.fit` refuses to run while any exist.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one candidate point")
    return IncidenceMatrix(membership(data, pts), pts)


# --- arrangement sweep -------------------------------------------------------
#
# Pieces of one axis: the sorted finite endpoint values as degenerate
# intervals plus the open gaps between them (and the two unbounded gaps).
# Every rectangle side either contains a piece entirely or misses it, so the
# covering set is constant on each cell of the induced grid.


def _axis_pieces(values):
    vals = sorted(values)
    pieces = [(-_INF, vals[0], True)] if vals else [(-_INF, _INF, True)]
    for i, v in enumerate(vals):
        pieces.append((v, v, False))
        nxt = vals[i + 1] if i + 1 < len(vals) else _INF
        pieces.append((v, nxt, True))
    return pieces


def _piece_masks(pieces, lo, hi, lower_open):
    """Bitmask per piece: bit i set iff piece is inside interval i."""
    masks = []
    for a, b, is_gap in pieces:
        m = 0
        for i in range(len(lo)):
            if is_gap:
                inside = lo[i] <= a and b <= hi[i]
            elif lower_open:
                inside = lo[i] < a <= hi[i]
            else:
                inside = lo[i] <= a <= hi[i]
            if inside:
                m |= 1 << i
        masks.append(m)
    return masks


def maximal_intersections(data: Dataset) -> list[CanonicalRectangle]:
    """All maximal intersection rectangles, sorted by (l1, l2).

    A covering set S (rectangles containing a given cell of the edge
    arrangement) is maximal iff no cell holds a strict superset of S.  By
    interval convexity this is a local property: S fails exactly when some
    cell with covering S has a 4-neighbour whose covering strictly contains
    S, so one pass over adjacent cell pairs finds every dominated set.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    lower_open = data.kind == CURRENT_STATUS
    l1, r1, l2, r2 = _bound_arrays(data)
    xs = _axis_pieces({v for v in np.concatenate([l1, r1]) if math.isfinite(v)})
    ys = _axis_pieces({v for v in np.concatenate([l2, r2]) if math.isfinite(v)})
    xmask = _piece_masks(xs, l1, r1, lower_open)
    ymask = _piece_masks(ys, l2, r2, lower_open)

    cov = [[mx & my for my in ymask] for mx in xmask]
    seen: set[int] = set()
    dominated: set[int] = set()
    for i in range(len(xs)):
        for j in range(len(ys)):
            a = cov[i][j]
            seen.add(a)
            for b in ((cov[i + 1][j] if i + 1 < len(xs) else 0),
                      (cov[i][j + 1] if j + 1 < len(ys) else 0)):
                if a == b:
                    continue
                common = a & b
                if common == a:
                    dominated.add(a)
                elif common == b:
                    dominated.add(b)

    out = []
    for s in seen:
        if s == 0 or s in dominated:
            continue
        members = [i for i in range(len(data)) if s >> i & 1]
        out.append(CanonicalRectangle(
            max(l1[i] for i in members),
            min(r1[i] for i in members),
            max(l2[i] for i in members),
            min(r2[i] for i in members),
        ))
    out.sort(key=lambda c: (c.l1, c.l2, c.r1, c.r2))
    return out


def finite_sentinel(data: Dataset) -> float:
    """A coordinate strictly beyond all finite data: max finite bound + 1.

    Mass placed at infinity is a placeholder for "beyond the last
    observation"; any value past the data is likelihood-equivalent.
    """
    finite = [v for r in data.rectangles for v in r.bounds() if math.isfinite(v)]
    if not finite:
        return 1.0
    return max(finite) + 1.0


def upper_corners(rects, sentinel: float) -> np.ndarray:
    """Right-upper corner of each rectangle, infinities replaced by ``sentinel``."""
    pts = np.empty((len(rects), 2), dtype=float)
    for k, c in enumerate(rects):
        pts[k, 0] = c.r1 if math.isfinite(c.r1) else sentinel
        pts[k, 1] = c.r2 if math.isfinite(c.r2) else sentinel
    return pts


def mass_candidates(data: Dataset, rects=None) -> np.ndarray:
    """Candidate mass points for the NPMLE: canonical right-upper corners."""
    if rects is None:
        rects = maximal_intersections(data)
    return upper_corners(rects, finite_sentinel(data))


def serialize_canonical_csv(rects) -> str:
    """Canonical rectangles in the rectangle CSV format (freq column omitted)."""
    from .censdata import _format_bound

    lines = ["L1,R1,L2,R2"]
    for c in rects:
        lines.append(",".join(_format_bound(b) for b in c.bounds()))
    return "\n".join(lines) + "\n"
