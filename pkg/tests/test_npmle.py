import math

import numpy as np
import pytest

from bicens import (
    CensoringRectangle,
    Dataset,
    DiscreteDistribution,
    UnfittableDataError,
    cs_to_rectangles,
    fenchel_check_cs,
    fenchel_check_ic2,
    fit,
    fit_dataset,
    incidence,
    loglik,
    random_sieve,
)
from bicens.npmle import dump_masses_csv, load_masses_csv
from bicens.simstudy import make_cs_sample

INF = math.inf

# published masses, keyed by canonical-rectangle lower corner (l1, l2)
BF_MASSES = {
    (0, 0): 0.013676984, (0, 21): 0.307533525, (3, 21): 0.087051863,
    (6, 6): 0.014940282, (6, 18): 0.062521573, (9, 9): 0.010009349,
    (9, 27): 0.071073995, (12, 0): 0.004836043, (12, 24): 0.053334241,
    (15, 0): 0.042456241, (15, 21): 0.021573343, (21, 15): 0.044427509,
    (21, 18): 0.266565054,
}

# frozen regression value: log-likelihood of the bundled-data fit
BF_GOLDEN_LOGLIK = -293.7387938119472


from oracles import random_fit_instance, simplex_grid_opt

# --- loglik -------------------------------------------------------------------

def test_loglik_trivial_cases():
    assert loglik([[1]], [1], [1.0]) == 0.0
    h = [[1, 0], [0, 1]]
    assert loglik(h, [1, 1], [0.5, 0.5]) == pytest.approx(2 * math.log(0.5), abs=1e-15)
    assert loglik(h, [1, 1], [1.0, 0.0]) == -INF


def test_loglik_dimension_mismatch():
    with pytest.raises(ValueError):
        loglik([[1, 0]], [1, 2], [1.0, 0.0])


def test_bf_golden_loglik(bf, bf_fit):
    dist, report = bf_fit
    assert report.loglik == pytest.approx(BF_GOLDEN_LOGLIK, abs=1e-9)
    # published masses on the table corners reproduce the same value
    h = incidence(bf, dist.points[dist.masses > 1e-10])
    table = np.array(list(BF_MASSES.values()))
    assert loglik(h, bf.freqs(), table / table.sum()) == pytest.approx(
        BF_GOLDEN_LOGLIK, abs=1e-6)


# --- fit ----------------------------------------------------------------------

def _support_by_lower_corner(bf, dist):
    from bicens import maximal_intersections
    rects = maximal_intersections(bf)
    out = {}
    for c, p in zip(rects, dist.masses):
        if p > 1e-10:
            out[(int(c.l1) if math.isfinite(c.l1) else INF,
                 int(c.l2) if math.isfinite(c.l2) else INF)] = p
    return out

def test_bf_fit_reproduces_published_masses(bf, bf_fit):
    dist, report = bf_fit
    assert report.converged
    got = _support_by_lower_corner(bf, dist)
    assert set(got) == set(BF_MASSES)
    for key, want in BF_MASSES.items():
        assert got[key] == pytest.approx(want, abs=1e-6)
    assert dist.masses.sum() == pytest.approx(1.0, abs=1e-10)


def test_fit_single_rectangle_single_candidate():
    ds = Dataset((CensoringRectangle(0, 1, 0, 1),))
    dist, report = fit(incidence(ds, [(0.5, 0.5)]), ds.freqs())
    assert dist.masses.tolist() == [1.0]
    assert report.converged and report.support_size == 1


def test_fit_refuses_uncovered_rows():
    ds = Dataset((CensoringRectangle(0, 1, 0, 1), CensoringRectangle(3, 4, 3, 4)))
    with pytest.raises(UnfittableDataError, match=r"\[1\]"):
        fit(incidence(ds, [(0.5, 0.5)]), ds.freqs())


@pytest.mark.parametrize("seed", range(110))
def test_fit_matches_simplex_grid_oracle(seed):
    ds, H = random_fit_instance(seed)
    f = ds.freqs()
    dist, report = fit(H, f)
    assert report.converged
    opt_val, opt_p, near_ties = simplex_grid_opt(H.h.astype(float), f)
    assert loglik(H, f, dist.masses) >= opt_val - 1e-6
    if H.h.shape[1] <= 3 and near_ties == 1:  # unambiguous full-grid argmax
        assert np.max(np.abs(opt_p - dist.masses)) <= 5e-3


def test_fit_loglik_trace_monotone():
    ds, H = random_fit_instance(3)
    obs = make_cs_sample("linear-sum", 200, seed=5)
    data = cs_to_rectangles(obs)
    sieve = random_sieve(200, seed=6)
    dist, report = fit(incidence(data, sieve), data.freqs())
    trace = np.array(report.loglik_trace)
    assert np.all(np.diff(trace) >= -1e-9)
    assert report.converged


def test_fit_column_permutation_equivariance(bf):
    # unique candidate columns, so the maximizing masses are unique
    from bicens import mass_candidates

    cands = mass_candidates(bf)
    H = incidence(bf, cands)
    dist, _ = fit(H, bf.freqs())
    rng = np.random.default_rng(10)
    perm = rng.permutation(cands.shape[0])
    dist2, _ = fit(H.h[:, perm], bf.freqs(), points=cands[perm])
    np.testing.assert_allclose(dist2.masses, dist.masses[perm], atol=1e-7)


def test_fit_masses_form_probability_vector():
    for seed in range(20):
        ds, H = random_fit_instance(seed + 500)
        dist, _ = fit(H, ds.freqs())
        assert dist.masses.min() >= 0.0
        assert dist.masses.sum() == pytest.approx(1.0, abs=1e-10)


# --- Fenchel checks -----------------------------------------------------------

def test_fenchel_equality_at_single_mass_point():
    obs = make_cs_sample("uniform", 1, seed=1)
    o = obs[0]
    ds = cs_to_rectangles(obs)
    # candidate inside the single observation's quadrant, all mass on it
    t = (o.t if o.delta1 else o.t + 0.1, o.u if o.delta2 else o.u + 0.1)
    d = DiscreteDistribution(np.array([t]), np.array([1.0]))
    lhs = fenchel_check_ic2(ds, d, [t])
    assert lhs[0] == pytest.approx(1.0, abs=1e-12)


def test_fenchel_self_certification_on_simulated_fit():
    obs = make_cs_sample("linear-sum", 100, seed=21)
    data = cs_to_rectangles(obs)
    sieve = random_sieve(100, seed=22)
    dist, report = fit(incidence(data, sieve), data.freqs())
    assert report.converged
    lhs = fenchel_check_ic2(data, dist, sieve)
    assert lhs.max() <= 1.0 + 1e-8
    on_support = lhs[dist.masses > 1e-10]
    np.testing.assert_allclose(on_support, 1.0, atol=1e-8)


def test_fenchel_detects_perturbed_masses(bf, bf_fit):
    dist, _ = bf_fit
    masses = dist.masses.copy()
    sup = np.flatnonzero(masses > 1e-3)
    masses[sup[0]] += 0.05
    masses[sup[-1]] -= 0.05
    bad = DiscreteDistribution(dist.points, masses)
    lhs = fenchel_check_ic2(bf, bad, dist.points)
    assert lhs.max() > 1.0 + 1e-4


def test_fenchel_uniform_masses_fail(bf, bf_fit):
    dist, _ = bf_fit
    pts = dist.points[dist.masses > 1e-10]
    uniform = DiscreteDistribution(pts, np.full(len(pts), 1.0 / len(pts)))
    lhs = fenchel_check_ic2(bf, uniform, pts)
    assert lhs.max() > 1.0


def test_fenchel_outside_data_range_is_zero():
    ds = Dataset((CensoringRectangle(0, 1, 0, 1), CensoringRectangle(0, 2, 0, 2)))
    d = DiscreteDistribution(np.array([[0.5, 0.5]]), np.array([1.0]))
    lhs = fenchel_check_ic2(ds, d, [(5.0, 5.0)])
    assert lhs[0] == 0.0


def test_fenchel_cs_equals_rectangle_form():
    obs = make_cs_sample("linear-sum", 150, seed=30)
    data = cs_to_rectangles(obs)
    sieve = random_sieve(150, seed=31)
    dist, _ = fit(incidence(data, sieve), data.freqs())
    probes = np.random.default_rng(32).random((60, 2))
    np.testing.assert_allclose(
        fenchel_check_cs(data, dist, probes),
        fenchel_check_ic2(data, dist, probes),
        rtol=0, atol=1e-12,
    )


def test_fenchel_cs_requires_current_status(bf, bf_fit):
    dist, _ = bf_fit
    with pytest.raises(ValueError, match="current-status"):
        fenchel_check_cs(bf, dist, [(0.0, 0.0)])


# --- random sieve -------------------------------------------------------------

def test_sieve_counts_for_cubic_n():
    pts = random_sieve(1000, seed=0)
    assert pts.shape == (104, 2)  # 100 sieve points + 4 vertices


def test_sieve_coordinates_are_grid_multiples():
    pts = random_sieve(1000, seed=1)[:-4]
    ints = pts * 10.0
    np.testing.assert_allclose(ints, np.round(ints), atol=1e-9)
    assert pts.min() >= 0.1 and pts.max() <= 1.0


def test_sieve_y_is_permutation_of_x():
    pts = random_sieve(343, seed=2)[:-4]
    assert sorted(pts[:, 0]) == sorted(pts[:, 1])


def test_sieve_deterministic_under_seed():
    a = random_sieve(500, seed=42)
    b = random_sieve(500, seed=42)
    np.testing.assert_array_equal(a, b)
    c = random_sieve(500, seed=43)
    assert not np.array_equal(a, c)


def test_sieve_rejects_tiny_n():
    with pytest.raises(ValueError):
        random_sieve(7)


# --- mass CSV round trip -------------------------------------------------------

def test_masses_csv_round_trip(bf_fit):
    dist, _ = bf_fit
    again = load_masses_csv(dump_masses_csv(dist))
    np.testing.assert_array_equal(again.points, dist.points)
    np.testing.assert_array_equal(again.masses, dist.masses)


def test_masses_csv_rejects_empty():
    with pytest.raises(ValueError, match="no rows"):
        load_masses_csv("x,y,mass\n")
