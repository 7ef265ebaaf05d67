"""Monte Carlo harness comparing the sieved NPMLE, SMLE and plug-in estimator.

Each replication draws hidden pairs from the chosen truth, generates
current-status data against uniform inspection times on the unit square,
fits the sieved NPMLE on a fresh random sieve, and evaluates the three
estimators at the configured points.  Replications use counter-derived RNG
streams, so results do not depend on execution order and replications can
run concurrently.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .censdata import CurrentStatusObs, cs_to_rectangles
from .geometry import incidence
from .kernels import KernelSpec
from .npmle import fit, random_sieve
from .plugin import EmptyCellError, plugin_eval_boundary
from .smle import SmleEstimate, default_bandwidth, smle_eval

__all__ = ["LinearSumTruth", "UniformTruth", "TRUTHS", "Scenario", "StudyRow",
           "StudyResult", "sample_truth", "make_cs_sample", "run_study"]

ESTIMATORS = ("mle", "smle", "plugin")
DEFAULT_EVAL_POINTS = ((0.2, 0.6), (0.4, 0.6), (0.6, 0.6), (0.8, 0.6))


class LinearSumTruth:
    """Hidden-pair distribution with density x + y on the unit square."""

    name = "linear-sum"

    def cdf(self, x, y):
        return 0.5 * x * y * (x + y)

    def d1(self, x, y):
        return x * y + 0.5 * y * y

    def d2(self, x, y):
        return x * y + 0.5 * x * x

    def d11(self, x, y):
        return y

    def d22(self, x, y):
        return x

    def sample(self, n, rng) -> np.ndarray:
        # density x + y = (1/2) * 2x * 1 + (1/2) * 1 * 2y: equal mixture of a
        # sqrt(U)-marginal on one axis and uniform on the other
        first = rng.random(n) < 0.5
        a = np.sqrt(rng.random(n))
        b = rng.random(n)
        x = np.where(first, a, b)
        y = np.where(first, rng.random(n), np.sqrt(rng.random(n)))
        return np.column_stack([x, y])


class UniformTruth:
    """Independent uniform hidden pair: df xy, all curvature terms zero."""

    name = "uniform"

    def cdf(self, x, y):
        return np.asarray(x, dtype=float) * y if np.ndim(x) or np.ndim(y) else x * y

    def d1(self, x, y):
        return y

    def d2(self, x, y):
        return x

    def d11(self, x, y):
        return 0.0

    def d22(self, x, y):
        return 0.0

    def sample(self, n, rng) -> np.ndarray:
        return rng.random((n, 2))


TRUTHS = {
    "linear-sum": LinearSumTruth(),
    "uniform": UniformTruth(),
    # aliases used by the CLI for scenario A (density x + y) and B (uniform)
    "f0a": LinearSumTruth(),
    "f0b": UniformTruth(),
}


def _resolve_truth(truth):
    if isinstance(truth, str):
        try:
            return TRUTHS[truth.lower()]
        except KeyError:
            raise ValueError(f"unknown truth {truth!r}; choose from {sorted(TRUTHS)}") from None
    return truth


def sample_truth(truth, n: int, seed=None) -> np.ndarray:
    """n i.i.d. hidden pairs from the named truth (exact samplers)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return _resolve_truth(truth).sample(n, np.random.default_rng(seed))


def make_cs_sample(truth, n: int, seed=None) -> list[CurrentStatusObs]:
    """Current-status observations: uniform inspection pairs, status by comparison."""
    rng = np.random.default_rng(seed)
    xy = _resolve_truth(truth).sample(n, rng)
    tu = rng.random((n, 2))
    return [
        CurrentStatusObs(t, u, x <= t, y <= u)
        for (x, y), (t, u) in zip(xy, tu)
    ]


@dataclass(frozen=True)
class Scenario:
    """Configuration of one Monte Carlo comparison run."""

    truth: str = "linear-sum"
    n: int = 1000
    reps: int = 200
    seed: int = 0
    eval_points: tuple = DEFAULT_EVAL_POINTS
    smle_h: float | None = None    # None: n^(-1/6)
    plugin_h: float | None = None  # None: n^(-1/6)
    threads: int | None = None     # None: BICENS_THREADS env var, else 1

    def bandwidths(self) -> tuple[float, float]:
        auto = default_bandwidth(self.n)
        return (self.smle_h if self.smle_h is not None else auto,
                self.plugin_h if self.plugin_h is not None else auto)


@dataclass(frozen=True)
class StudyRow:
    """Scaled sd and bias of one estimator at one evaluation point."""

    estimator: str
    t: float
    u: float
    scaled_sd: float
    sd_se: float
    scaled_bias: float
    bias_se: float


@dataclass(frozen=True)
class StudyResult:
    scenario: Scenario
    rows: tuple
    reps_used: int
    failures: tuple = field(default_factory=tuple)
    expanded_cells: int = 0

    def row(self, estimator: str, t: float, u: float) -> StudyRow:
        for r in self.rows:
            if r.estimator == estimator and r.t == t and r.u == u:
                return r
        raise KeyError((estimator, t, u))

    def to_csv(self) -> str:
        cols = []
        for est in ESTIMATORS:
            cols += [f"{est}_sd", f"{est}_sd_se", f"{est}_bias", f"{est}_bias_se"]
        lines = ["t,u,n,reps," + ",".join(cols)]
        for (t, u) in self.scenario.eval_points:
            vals = []
            for est in ESTIMATORS:
                r = self.row(est, t, u)
                vals += [r.scaled_sd, r.sd_se, r.scaled_bias, r.bias_se]
            lines.append(",".join(
                [repr(float(t)), repr(float(u)), str(self.scenario.n), str(self.reps_used)]
                + [f"{v:.6f}" for v in vals]))
        return "\n".join(lines) + "\n"


def _replicate(sc: Scenario, rep: int) -> dict:
    smle_h, plugin_h = sc.bandwidths()
    obs = make_cs_sample(sc.truth, sc.n, seed=(sc.seed, rep, 0))
    data = cs_to_rectangles(obs)
    sieve = random_sieve(sc.n, seed=(sc.seed, rep, 1))
    dist, report = fit(incidence(data, sieve), data.freqs())
    if not report.converged:
        raise RuntimeError(f"sieved NPMLE did not converge (rep {rep})")
    est = SmleEstimate(dist, KernelSpec(bandwidth=smle_h))
    arrays = (np.array([o.t for o in obs]), np.array([o.u for o in obs]),
              np.array([o.delta1 for o in obs]), np.array([o.delta2 for o in obs]))
    out = {"expanded": 0}
    for (t, u) in sc.eval_points:
        # tie-splitting evaluation: when n is a perfect cube the sieve grid
        # collides with the evaluation points and the colliding atom's
        # catchment straddles them, so full inclusion (or exclusion) of the
        # atom is biased by half its mass
        out[("mle", t, u)] = dist.cdf(t, u, ties="split")
        out[("smle", t, u)] = smle_eval(est, t, u)
        h = plugin_h
        while True:
            try:
                out[("plugin", t, u)] = plugin_eval_boundary(arrays, t, u, h)
                break
            except EmptyCellError:
                h *= 2.0  # empty local square: retry with doubled bandwidth
                out["expanded"] += 1
    return out


def _thread_count(sc: Scenario) -> int:
    if sc.threads is not None:
        return max(1, sc.threads)
    env = os.environ.get("BICENS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def run_study(sc: Scenario) -> StudyResult:
    """Run the scenario and aggregate n^(1/3)-scaled sd and bias per estimator.

    Per-replication failures are recorded with their message and excluded
    from the aggregates, never silently dropped.  Monte Carlo standard
    errors use sd/sqrt(R) for the bias and sd/sqrt(2(R-1)) for the sd.
    """
    if sc.reps < 2:
        raise ValueError(f"need reps >= 2, got {sc.reps}")
    truth = _resolve_truth(sc.truth)
    workers = _thread_count(sc)
    results: list = [None] * sc.reps
    failures = []
    if workers == 1:
        for rep in range(sc.reps):
            try:
                results[rep] = _replicate(sc, rep)
            except Exception as exc:  # recorded, not fatal
                failures.append((rep, repr(exc)))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_replicate, sc, rep): rep for rep in range(sc.reps)}
            for fut, rep in futs.items():
                try:
                    results[rep] = fut.result()
                except Exception as exc:
                    failures.append((rep, repr(exc)))
    kept = [r for r in results if r is not None]
    if len(kept) < 2:
        raise RuntimeError(f"only {len(kept)} replications succeeded; failures: {failures}")
    scale = float(np.cbrt(float(sc.n)))
    rows = []
    for est in ESTIMATORS:
        for (t, u) in sc.eval_points:
            vals = np.array([r[(est, t, u)] for r in kept])
            R = vals.size
            sd = float(np.std(vals, ddof=1))
            rows.append(StudyRow(
                estimator=est, t=t, u=u,
                scaled_sd=scale * sd,
                sd_se=scale * sd / np.sqrt(2.0 * (R - 1)),
                scaled_bias=scale * float(vals.mean() - truth.cdf(t, u)),
                bias_se=scale * sd / np.sqrt(R),
            ))
    return StudyResult(
        scenario=sc,
        rows=tuple(rows),
        reps_used=len(kept),
        failures=tuple(failures),
        expanded_cells=sum(r["expanded"] for r in kept),
    )
