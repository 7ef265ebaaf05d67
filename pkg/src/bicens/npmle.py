"""NPMLE over a finite candidate set, with Fenchel optimality certification.

The estimator maximizes ``sum_i f_i log(H_i' p)`` over probability vectors
``p``, where ``H`` is the candidate/rectangle incidence matrix.  The solver
is a support-reduction outer loop around damped Newton steps on the current
support: adding the mass-sum penalty ``-n sum_j p_j`` removes the equality
constraint (the optimum renormalizes itself), so the inner problem is a
concave maximization over the nonnegative cone.

First-order optimality doubles as the convergence certificate: writing
``d_j = sum_i f_i H_ij / (H_i' p)``, the fit is optimal iff ``d_j <= n``
for every candidate with equality on the support.  ``d_j / n`` is exactly
the duality left-hand side reported by the ``fenchel_check_*`` functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .censdata import CURRENT_STATUS, Dataset
from .geometry import IncidenceMatrix, incidence, mass_candidates, membership

__all__ = [
    "DiscreteDistribution", "FitReport", "UnfittableDataError", "CertificateError",
    "loglik", "fit", "fit_dataset", "fenchel_check_cs", "fenchel_check_ic2",
    "random_sieve", "load_masses_csv", "dump_masses_csv",
]


class UnfittableDataError(ValueError):
    """Some observation rectangle contains no candidate point."""

    def __init__(self, rows):
        rows = [int(r) for r in rows]
        super().__init__(
            f"observation rectangle(s) {rows} contain no candidate point; "
            "the log-likelihood is -inf for every candidate distribution"
        )
        self.rows = rows


class CertificateError(ValueError):
    """A Fenchel evaluation hit a zero denominator at an occupied observation."""


@dataclass(frozen=True)
class DiscreteDistribution:
    """Discrete bivariate distribution: support points and probability masses."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        p = np.asarray(self.masses, dtype=float).ravel()
        if pts.shape != (p.size, 2):
            raise ValueError(f"points {pts.shape} do not match {p.size} masses")
        if p.min(initial=0.0) < -1e-12:
            raise ValueError(f"negative mass {p.min()}")
        if abs(p.sum() - 1.0) > 1e-8:
            raise ValueError(f"masses sum to {p.sum()}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", p)

    def cdf(self, t, u, ties: str = "include"):
        """Df value(s) at (t, u).

        ``ties="include"`` is the right-continuous df (atoms exactly at t or
        u count fully).  ``ties="split"`` gives boundary atoms half weight
        per colliding axis; for a step df whose atoms straddle the
        evaluation point this is the midpoint of the left and right limits.
        """
        if ties not in ("include", "split"):
            raise ValueError(f"ties must be 'include' or 'split', got {ties!r}")
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        shape = np.broadcast_shapes(t.shape, u.shape)
        tt, uu = np.broadcast_to(t, shape).ravel(), np.broadcast_to(u, shape).ravel()
        x = self.points[:, 0][:, None]
        y = self.points[:, 1][:, None]
        if ties == "include":
            w = ((x <= tt) & (y <= uu)).astype(float)
        else:
            wx = np.where(x < tt, 1.0, np.where(x == tt, 0.5, 0.0))
            wy = np.where(y < uu, 1.0, np.where(y == uu, 0.5, 0.0))
            w = wx * wy
        vals = self.masses @ w
        return vals.reshape(shape) if shape else float(vals[0])

    def marginal_cdf(self, axis: int, t):
        t = np.asarray(t, dtype=float)
        c = self.points[:, axis - 1]
        vals = self.masses @ (c[:, None] <= t.ravel())
        return vals.reshape(t.shape) if t.shape else float(vals[0])

    def support(self, tol: float = 0.0) -> np.ndarray:
        return np.flatnonzero(self.masses > tol)


@dataclass(frozen=True)
class FitReport:
    loglik: float
    iterations: int
    max_fenchel: float
    support_size: int
    converged: bool
    loglik_trace: tuple = ()

    def to_json(self) -> str:
        return json.dumps({
            "loglik": self.loglik,
            "iterations": self.iterations,
            "max_fenchel": self.max_fenchel,
            "support_size": self.support_size,
            "converged": self.converged,
        }, indent=2)


def _as_matrix(H) -> np.ndarray:
    h = H.h if isinstance(H, IncidenceMatrix) else np.asarray(H)
    if h.ndim != 2:
        raise ValueError("incidence matrix must be 2-d")
    return h.astype(float)


def loglik(H, f, p) -> float:
    """``sum_i f_i log(H_i' p)``; -inf if any occupied row has probability 0."""
    h = _as_matrix(H)
    f = np.asarray(f, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    if h.shape != (f.size, p.size):
        raise ValueError(f"shape mismatch: H {h.shape}, f {f.size}, p {p.size}")
    r = h @ p
    occupied = f > 0
    if np.any(r[occupied] <= 0.0):
        return -math.inf
    return float(f[occupied] @ np.log(r[occupied]))


def _greedy_cover(hb: np.ndarray) -> list[int]:
    """Small hitting set of candidates covering every observation row."""
    uncovered = np.ones(hb.shape[0], dtype=bool)
    chosen = []
    while uncovered.any():
        counts = hb[uncovered].sum(axis=0)
        j = int(np.argmax(counts))
        if counts[j] == 0:
            raise UnfittableDataError(np.flatnonzero(uncovered))
        chosen.append(j)
        uncovered &= ~hb[:, j]
    return chosen


def _phi(hs, f, q, n):
    r = hs @ q
    if np.any(r[f > 0] <= 0.0):
        return -math.inf
    pos = f > 0
    return float(f[pos] @ np.log(r[pos])) - n * float(q.sum())


def _solve_restricted(hf, f, idx, q, n, gtol, max_steps=200):
    """Damped Newton on the current support's cone; drops vanishing masses."""
    idx = list(idx)
    hs = hf[:, idx]
    for _ in range(max_steps):
        r = hs @ q
        g = hs.T @ (f / r) - n
        if np.max(np.abs(g)) <= gtol:
            break
        w = f / (r * r)
        m = hs.T @ (hs * w[:, None])
        try:
            delta = np.linalg.solve(m, g)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(m, g, rcond=None)[0]
        if not np.all(np.isfinite(delta)) or g @ delta <= 0.0:
            delta = g / n  # fallback: scaled gradient ascent
        neg = delta < 0.0
        step_max = np.inf
        if neg.any():
            step_max = float(np.min(q[neg] / -delta[neg]))
        step = min(1.0, step_max)
        base = _phi(hs, f, q, n)
        slope = float(g @ delta)
        while step > 1e-14 and _phi(hs, f, q + step * delta, n) < base + 1e-4 * step * slope:
            step *= 0.5
        if step <= 1e-14:
            break
        q = q + step * delta
        q[q < 0.0] = 0.0
        if step == step_max:  # a mass hit the boundary: support reduction
            keep = q > 0.0
            if not keep.all():
                idx = [i for i, k in zip(idx, keep) if k]
                hs = hf[:, idx]
                q = q[keep]
    return idx, q


def fit(H, f, points=None, *, fenchel_tol=1e-8, drop_tol=1e-10, max_iter=10_000):
    """Maximize the censored-data log-likelihood over the candidate simplex.

    Parameters
    ----------
    H : IncidenceMatrix or array-like
        Candidate/rectangle incidence.  If a bare matrix is passed,
        ``points`` must supply the candidate coordinates.
    f : array-like
        Observation frequencies, one per rectangle row.
    fenchel_tol, drop_tol, max_iter :
        Certificate tolerance, mass pruning threshold, outer iteration cap.

    Returns
    -------
    (DiscreteDistribution, FitReport)
        ``report.converged`` is True iff the duality certificate holds:
        ``d_j/n <= 1 + fenchel_tol`` everywhere with equality (+-tol) on the
        support.  Non-convergence within ``max_iter`` is reported, not raised.

    Raises
    ------
    UnfittableDataError
        If some observation rectangle contains no candidate.
    """
    if isinstance(H, IncidenceMatrix):
        hb = H.h
        if points is None:
            points = H.points
    else:
        hb = np.asarray(H, dtype=bool)
        if points is None:
            raise ValueError("points are required when H is a bare matrix")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    f = np.asarray(f, dtype=float).ravel()
    if hb.shape[0] != f.size or hb.shape[1] != points.shape[0]:
        raise ValueError(f"shape mismatch: H {hb.shape}, f {f.size}, points {points.shape}")
    zero = np.flatnonzero(~hb.any(axis=1))
    if zero.size:
        raise UnfittableDataError(zero)

    hf = hb.astype(float)
    n = float(f.sum())
    m = hb.shape[1]
    support = _greedy_cover(hb)
    p = np.zeros(m)
    p[support] = 1.0 / len(support)

    trace = []
    converged = False
    iterations = 0
    gtol = 0.1 * fenchel_tol * n
    for iterations in range(1, max_iter + 1):
        p = p / p.sum()
        r = hf @ p
        d = hf.T @ (f / r)
        trace.append(float(f @ np.log(r)))
        active = p > drop_tol
        if (d.max() <= n * (1.0 + fenchel_tol)
                and np.all(np.abs(d[active] - n) <= n * fenchel_tol)):
            converged = True
            break
        j = int(np.argmax(d))
        active[j] = True
        idx = list(np.flatnonzero(active))
        new_idx, q = _solve_restricted(hf, f, idx, p[idx].copy(), n, gtol)
        p = np.zeros(m)
        p[new_idx] = q

    p[p <= drop_tol] = 0.0
    p = p / p.sum()
    r = hf @ p
    d = hf.T @ (f / r)
    max_fenchel = float(d.max() / n)
    dist = DiscreteDistribution(points, p)
    report = FitReport(
        loglik=float(f @ np.log(r)),
        iterations=iterations,
        max_fenchel=max_fenchel,
        support_size=int(np.count_nonzero(p > drop_tol)),
        converged=converged,
        loglik_trace=tuple(trace),
    )
    return dist, report


def fit_dataset(data: Dataset, candidates=None, **opts):
    """Fit the NPMLE for a dataset; default candidates are the canonical corners."""
    if candidates is None:
        candidates = mass_candidates(data)
    H = incidence(data, candidates)
    return fit(H, data.freqs(), **opts)


def _rectangle_probs(data: Dataset, dist: DiscreteDistribution) -> np.ndarray:
    h = membership(data, dist.points)
    probs = h @ dist.masses
    f = data.freqs()
    bad = np.flatnonzero((probs <= 1e-300) & (f > 0))
    if bad.size:
        raise CertificateError(
            f"observation rectangle(s) {bad.tolist()} carry frequency but zero "
            "probability under the candidate distribution"
        )
    return probs


def fenchel_check_ic2(data: Dataset, dist: DiscreteDistribution, test_points) -> np.ndarray:
    """Duality left-hand side at each test point, rectangle form.

    ``lhs(x) = (1/n) sum_i f_i 1{x in R_i} / P(R_i)``.  For the maximizer it
    is <= 1 everywhere and = 1 at every support point.
    """
    pts = np.atleast_2d(np.asarray(test_points, dtype=float))
    probs = _rectangle_probs(data, dist)
    member = membership(data, pts)
    f = data.freqs()
    return ((f / probs) @ member) / data.n


def _cs_observations(data: Dataset):
    if data.kind != CURRENT_STATUS:
        raise ValueError("fenchel_check_cs needs a current-status dataset")
    t = np.empty(len(data))
    u = np.empty(len(data))
    d1 = np.empty(len(data), dtype=bool)
    d2 = np.empty(len(data), dtype=bool)
    for i, r in enumerate(data.rectangles):
        d1[i] = math.isinf(r.l1)
        d2[i] = math.isinf(r.l2)
        t[i] = r.r1 if d1[i] else r.l1
        u[i] = r.r2 if d2[i] else r.l2
    return t, u, d1, d2, data.freqs()


def fenchel_check_cs(data: Dataset, dist: DiscreteDistribution, test_points) -> np.ndarray:
    """Duality left-hand side for current-status data, four-region form.

    Splits the empirical sum by status combination with denominators
    ``F``, ``F1 - F``, ``F2 - F`` and ``1 - F1 - F2 + F`` evaluated at the
    observation times.  Numerically identical to the rectangle form on the
    quadrant representation of the same data.
    """
    t, u, d1, d2, f = _cs_observations(data)
    F = dist.cdf(t, u)
    F1 = dist.marginal_cdf(1, t)
    F2 = dist.marginal_cdf(2, u)
    denom = np.where(d1 & d2, F,
             np.where(d1 & ~d2, F1 - F,
              np.where(~d1 & d2, F2 - F, 1.0 - F1 - F2 + F)))
    bad = np.flatnonzero((denom <= 1e-300) & (f > 0))
    if bad.size:
        raise CertificateError(
            f"zero denominator at occupied observation(s) {bad.tolist()}"
        )
    pts = np.atleast_2d(np.asarray(test_points, dtype=float))
    a, b = pts[:, 0], pts[:, 1]
    ge_t = t[:, None] >= a
    ge_u = u[:, None] >= b
    region = np.where(d1 & d2, 1.0, 0.0)[:, None] * (ge_t & ge_u)
    region = region + np.where(d1 & ~d2, 1.0, 0.0)[:, None] * (ge_t & ~ge_u)
    region = region + np.where(~d1 & d2, 1.0, 0.0)[:, None] * (~ge_t & ge_u)
    region = region + np.where(~d1 & ~d2, 1.0, 0.0)[:, None] * (~ge_t & ~ge_u)
    return ((f / denom) @ region) / data.n


def _int_root(n: int, num: int, den: int) -> int:
    """floor(n**(num/den)) computed exactly via integer comparison."""
    k = int(round(n ** (num / den)))
    while (k + 1) ** den <= n ** num:
        k += 1
    while k ** den > n ** num:
        k -= 1
    return k


def random_sieve(n: int, seed=None) -> np.ndarray:
    """Random sieve of allowed mass points for the sieved NPMLE.

    ``floor(n^(2/3))`` points whose coordinates are multiples of
    ``n^(-1/3)`` in [0, 1]; the y-coordinates are a uniformly random
    permutation of the x-coordinates.  The four unit-square vertices are
    appended so every observation quadrant contains a candidate, keeping the
    log-likelihood finite.
    """
    if n < 8:
        raise ValueError(f"need n >= 8, got {n}")
    rng = np.random.default_rng(seed)
    m = _int_root(n, 2, 3)
    k = _int_root(n, 1, 3)
    # divide rather than multiply by the spacing: i / cbrt(n) is correctly
    # rounded, so sieve coordinates coincide bit-for-bit with evaluation
    # points like 0.6 when n is a perfect cube
    xs = (1.0 + (np.arange(m) % k)) / np.cbrt(float(n))
    ys = rng.permutation(xs)
    vertices = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    return np.vstack([np.column_stack([xs, ys]), vertices])


def dump_masses_csv(dist: DiscreteDistribution) -> str:
    lines = ["x,y,mass"]
    for (x, y), p in zip(dist.points, dist.masses):
        lines.append(f"{float(x)!r},{float(y)!r},{float(p)!r}")
    return "\n".join(lines) + "\n"


def load_masses_csv(source) -> DiscreteDistribution:
    import csv
    import io

    if isinstance(source, str):
        source = io.StringIO(source)
    pts, masses = [], []
    for row in csv.reader(source):
        if not row or row[0].strip().lower() == "x":
            continue
        x, y, p = (float(c) for c in row[:3])
        pts.append((x, y))
        masses.append(p)
    if not pts:
        raise ValueError("masses file contains no rows")
    return DiscreteDistribution(np.array(pts), np.array(masses))
