"""Purely discrete plug-in estimator for bivariate current-status data.

At a point (t, u) the estimate is the ratio, over the square
``A = [t-h, t+h] x [u-h, u+h]``, of observations with both events recorded
to all observations in the square.  Near the support boundary the status
flags of reflected observations are overridden before summation, which cuts
the boundary bias to O(h).  The grid variant fills a lattice with spacing
``n^(-1/3)`` and recovers signed point masses from the cumulative-sum
equations; the estimate is *not* projected to a proper df.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["EmptyCellError", "PluginGrid", "plugin_eval", "plugin_eval_boundary",
           "build_plugin_grid", "solve_masses", "cumulate_masses",
           "plugin_asymptotics", "scale_constant", "lattice_axis"]


class EmptyCellError(ValueError):
    """The local square around an evaluation point contains no observation."""

    def __init__(self, t, u, h):
        super().__init__(f"no observations in [{t - h}, {t + h}] x [{u - h}, {u + h}]")
        self.point = (t, u)
        self.halfwidth = h


def as_cs_arrays(obs):
    """Normalize a current-status sample to (t, u, delta1, delta2) arrays.

    Accepts a list of CurrentStatusObs or a 4-tuple of array-likes.
    """
    if isinstance(obs, tuple) and len(obs) == 4:
        t, u, d1, d2 = (np.asarray(a) for a in obs)
        return t.astype(float), u.astype(float), d1.astype(bool), d2.astype(bool)
    t = np.array([o.t for o in obs], dtype=float)
    u = np.array([o.u for o in obs], dtype=float)
    d1 = np.array([o.delta1 for o in obs], dtype=bool)
    d2 = np.array([o.delta2 for o in obs], dtype=bool)
    return t, u, d1, d2


def plugin_eval(obs, t, u, h) -> float:
    """Local ratio estimate of F0(t, u) without boundary handling.

    Raises
    ------
    EmptyCellError
        If no observation falls in the square; the caller decides whether
        to enlarge h or mark the cell missing.
    """
    T, U, d1, d2 = as_cs_arrays(obs)
    cell = (np.abs(T - t) <= h) & (np.abs(U - u) <= h)
    count = int(cell.sum())
    if count == 0:
        raise EmptyCellError(t, u, h)
    return float((d1[cell] & d2[cell]).sum()) / count


def plugin_eval_boundary(obs, t, u, h) -> float:
    """Local ratio estimate with the boundary status-flipping rule.

    Within h of the right/upper boundary (coordinate > 1 - h), observations
    with inspection time >= 2 - t - h are counted as having the event; within
    h of the left/lower boundary (coordinate < h) observations with
    inspection time <= h - t are counted as event-free.  Interior points are
    untouched, so the result equals :func:`plugin_eval` there.
    """
    T, U, d1, d2 = as_cs_arrays(obs)
    d1 = d1.copy()
    d2 = d2.copy()
    if t > 1.0 - h:
        d1[T >= 2.0 - t - h] = True
    if t < h:
        d1[T <= h - t] = False
    if u > 1.0 - h:
        d2[U >= 2.0 - u - h] = True
    if u < h:
        d2[U <= h - u] = False
    cell = (np.abs(T - t) <= h) & (np.abs(U - u) <= h)
    count = int(cell.sum())
    if count == 0:
        raise EmptyCellError(t, u, h)
    return float((d1[cell] & d2[cell]).sum()) / count


def lattice_axis(n: int) -> np.ndarray:
    """Multiples of n^(-1/3) in [0, 1], with 1 always included."""
    root = float(np.cbrt(float(n)))
    k = int(math.floor(root + 1e-9))
    pts = np.arange(k + 1) / root  # division keeps grid doubles exactly rounded
    pts = pts[pts <= 1.0 + 1e-12]
    if 1.0 - pts[-1] > 1e-12:
        pts = np.append(pts, 1.0)
    else:
        pts[-1] = min(pts[-1], 1.0)
    return pts


@dataclass
class PluginGrid:
    """Plug-in values on a rectangular lattice over the unit square.

    ``values[i, j]`` is the estimate at ``(xs[i], ys[j])``.  ``masses`` stays
    None until :func:`solve_masses` fills it; masses may be negative.
    ``expanded`` lists cells whose square had to be doubled to find data.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    spacing: float
    halfwidth: float
    n: int
    masses: np.ndarray | None = None
    expanded: tuple = field(default_factory=tuple)


def build_plugin_grid(obs, n: int, h: float | None = None, on_empty: str = "raise") -> PluginGrid:
    """Fill the plug-in lattice for a sample of nominal size ``n``.

    ``h`` defaults to ``n^(-1/6)``.  ``on_empty`` is either ``"raise"``
    (propagate :class:`EmptyCellError`) or ``"expand"`` (double h for the
    offending cell until it has data, recording the fallback).
    """
    if n < 64:
        raise ValueError(f"need n >= 64, got {n}")
    if on_empty not in ("raise", "expand"):
        raise ValueError(f"on_empty must be 'raise' or 'expand', got {on_empty!r}")
    if h is None:
        h = float(n) ** (-1.0 / 6.0)
    xs = lattice_axis(n)
    ys = lattice_axis(n)
    arrays = as_cs_arrays(obs)
    values = np.empty((xs.size, ys.size))
    expanded = []
    for i, t in enumerate(xs):
        for j, u in enumerate(ys):
            try:
                values[i, j] = plugin_eval_boundary(arrays, t, u, h)
            except EmptyCellError:
                if on_empty == "raise":
                    raise
                hh = h
                while True:
                    hh *= 2.0
                    try:
                        values[i, j] = plugin_eval_boundary(arrays, t, u, hh)
                        break
                    except EmptyCellError:
                        continue
                expanded.append((i, j, hh))
    return PluginGrid(xs, ys, values, spacing=1.0 / np.cbrt(float(n)),
                      halfwidth=h, n=n, expanded=tuple(expanded))


def solve_masses(grid) -> np.ndarray:
    """Point masses reproducing the grid values as cumulative sums.

    On a lattice the system is triangular, so the unique solution is the
    double difference p[i,j] = V[i,j] - V[i-1,j] - V[i,j-1] + V[i-1,j-1]
    (missing indices read as zero), swept from the lower left.
    """
    v = grid.values if isinstance(grid, PluginGrid) else np.asarray(grid, dtype=float)
    padded = np.zeros((v.shape[0] + 1, v.shape[1] + 1))
    padded[1:, 1:] = v
    return padded[1:, 1:] - padded[:-1, 1:] - padded[1:, :-1] + padded[:-1, :-1]


def cumulate_masses(masses) -> np.ndarray:
    """Inverse of :func:`solve_masses`: cumulative sums over both axes."""
    return np.cumsum(np.cumsum(np.asarray(masses, dtype=float), axis=0), axis=1)


def scale_constant(n: int, h: float) -> float:
    """The finite-sample value of c = h^2 n^(1/3) for an actual (n, h) pair."""
    return h * h * float(np.cbrt(float(n)))


def plugin_asymptotics(c, f0, d1f0, d2f0, d11f0, d22f0, g, d1g=0.0, d2g=0.0):
    """Limiting bias and sd of the n^(1/3)-scaled plug-in error at a point.

    Arguments are values at the evaluation point: ``f0 = F0(t, u)``, first
    and second partials of F0, observation density ``g`` and its partials.

        beta    = c * { (d11f0 + d22f0)/6 + (d1f0*d1g + d2f0*d2g)/(3g) }
        sigma^2 = f0 (1 - f0) / (4 c g)
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if not g > 0:
        raise ValueError(f"g must be positive, got {g}")
    if not 0.0 < f0 < 1.0:
        raise ValueError(f"need 0 < f0 < 1, got {f0}")
    beta = c * ((d11f0 + d22f0) / 6.0 + (d1f0 * d1g + d2f0 * d2g) / (3.0 * g))
    sigma = math.sqrt(f0 * (1.0 - f0) / (4.0 * c * g))
    return beta, sigma
