import numpy as np
import pytest

from trapwalk._rng import RandomStream
from trapwalk.distributions import Custom, Deterministic, Exponential, PowerLawZeta
from trapwalk.exact_law import count_distribution
from trapwalk.montecarlo import (ensemble_msd, ensemble_samples, simulate_walker,
                                 trajectory_violations, trap_occupancy)
from trapwalk.msd_engine import msd_series

from conftest import zoo


def test_simple_walk_path():
    tr = simulate_walker(Deterministic(0), 500, 1)
    assert np.all(np.abs(np.diff(tr.positions)) == 1)
    assert tr.positions[0] == 0 and tr.horizon == 500


def test_period_four_path():
    tr = simulate_walker(Deterministic(3), 400, 3)
    t = np.arange(400)
    moved = np.diff(tr.positions) != 0
    assert np.array_equal(moved, t % 4 == 3)
    renewals = np.cumsum(tr.traps == 0)
    assert np.array_equal(renewals, (np.arange(401) + 1) // 4)


@pytest.mark.parametrize("d", zoo(), ids=lambda d: d.spec)
def test_path_invariants(d):
    for i in range(10 ** 4 // len(zoo()) + 1):
        tr = simulate_walker(d, 200, RandomStream(77, i))
        assert trajectory_violations(tr) == []


def test_violation_detector():
    tr = simulate_walker(Exponential(0.5), 50, 4)
    broken = type(tr)(tr.positions.copy(), tr.traps.copy())
    k = int(np.nonzero(tr.traps[:-1] > 0)[0][0])
    broken.positions[k + 1:] += 1
    assert k in trajectory_violations(broken)


def test_trajectory_stream_continues():
    rng = RandomStream(5)
    a = simulate_walker(PowerLawZeta(1.5), 30, rng)
    b = simulate_walker(PowerLawZeta(1.5), 30, rng)
    assert not np.array_equal(np.r_[a.traps, a.positions], np.r_[b.traps, b.positions])


# --- ensembles ----------------------------------------------------------------

def within(stats, ref, t):
    return np.abs(stats.msd_hat[t] - ref[t]) <= 4 * stats.msd_se[t]


def test_exponential_ensemble():
    st = ensemble_msd(Exponential(0.5), 2 ** 10, 10 ** 5, 42)
    t = np.arange(1, 2 ** 10 + 1)
    assert st.msd_hat[0] == 0.0 and np.all(st.msd_se >= 0)
    assert np.mean(within(st, 0.5 * np.arange(2 ** 10 + 1), t)) >= 0.99


def test_simple_walk_ensemble():
    st = ensemble_msd(Deterministic(0), 128, 10 ** 5, 1)
    t = np.arange(1, 129)
    assert np.all(within(st, np.arange(129.0), t))


def test_power_law_ensemble():
    d = PowerLawZeta(1.5)
    st = ensemble_msd(d, 2 ** 12, 10 ** 5, 42)
    ref = msd_series(d, 2 ** 12).sigma2
    t = 2 ** np.arange(6, 13)
    assert np.all(within(st, ref, t))


def test_worker_count_does_not_matter():
    d = PowerLawZeta(1.5)
    cks = [5, 100, 999]
    a = ensemble_msd(d, 1000, 5000, 7, workers=1, checkpoints=cks)
    b = ensemble_msd(d, 1000, 5000, 7, workers=3, checkpoints=cks)
    assert np.array_equal(a.msd_hat, b.msd_hat) and np.array_equal(a.msd_se, b.msd_se)
    for t in cks:
        assert np.array_equal(a.samples[t][0], b.samples[t][0])
        assert np.array_equal(a.samples[t][1], b.samples[t][1])


def test_walker_streams_are_prefix_stable():
    # walker i sees the same stream whatever the ensemble size
    d = Exponential(0.7)
    a = ensemble_samples(d, [300], 100, 9)[300]
    b = ensemble_samples(d, [300], 5000, 9)[300]
    assert np.array_equal(a[0], b[0][:100]) and np.array_equal(a[1], b[1][:100])


def test_seed_changes_result():
    d = Exponential(0.5)
    a = ensemble_msd(d, 100, 1000, 1)
    b = ensemble_msd(d, 100, 1000, 2)
    assert not np.array_equal(a.msd_hat, b.msd_hat)


def test_ensemble_argument_checks():
    with pytest.raises(ValueError):
        ensemble_msd(Exponential(0.5), 10, 1, 0)
    with pytest.raises(ValueError):
        ensemble_samples(Exponential(0.5), [5, 3], 10, 0)
    with pytest.raises(ValueError):
        ensemble_msd(Exponential(0.5), 10, 10, 0, checkpoints=[11])


# --- samples of (X_t, N_t) ------------------------------------------------------

def test_simple_walk_counts():
    x, n = ensemble_samples(Deterministic(0), [10], 1000, 3)[10]
    assert np.all(n == 11)
    assert np.all((x % 2) == 0)


@pytest.mark.parametrize("d", zoo(), ids=lambda d: d.spec)
def test_position_count_ranges(d):
    # X_t is a walk of N_{t-1} steps, so |X_t| <= N_{t-1} <= N_t <= t + 1,
    # with X_t and N_{t-1} of equal parity
    cks = [9, 10, 99, 100]
    s = ensemble_samples(d, cks, 2000, 5)
    for a, b in ((9, 10), (99, 100)):
        x, n_prev, n = s[b][0], s[a][1], s[b][1]
        assert np.all(np.abs(x) <= n_prev)
        assert np.all(n_prev <= n) and np.all(n <= b + 1)
        assert np.all((x - n_prev) % 2 == 0)


def test_position_can_reach_count():
    # with no renewal at t, |X_t| = N_t is possible: det:1 at t = 2
    x, n = ensemble_samples(Deterministic(1), [2], 100, 0)[2]
    assert np.all(n == 1) and np.all(np.abs(x) == 1)


def test_count_histogram_against_exact_law():
    d = Exponential(0.5)
    m = 10 ** 5
    n = ensemble_samples(d, [64], m, 31)[64][1]
    law = count_distribution(d, 64).probs
    freq = np.bincount(n, minlength=law.size)[: law.size] / m
    se = np.sqrt(law * (1 - law) / m)
    keep = law > 1e-6
    assert np.all(np.abs(freq - law)[keep] <= 4 * se[keep] + 1e-12)


# --- occupancy of the countdown -------------------------------------------------

def test_occupancy_shape_and_total():
    occ = trap_occupancy(Exponential(0.5), 10 ** 5, 3, states=10, batches=20)
    assert occ.shape == (20, 10)
    assert occ.sum() <= 10 ** 5


@pytest.mark.parametrize("d", [Exponential(0.5), PowerLawZeta(3.0), Custom(((0, 0.2), (2, 0.5), (5, 0.3)))],
                         ids=lambda d: d.spec)
def test_occupancy_matches_stationary_law(d):
    steps, batches = 4 * 10 ** 6, 100
    occ = trap_occupancy(d, steps, 12, states=20, batches=batches) / (steps // batches)
    mean = occ.mean(axis=0)
    se = occ.std(axis=0, ddof=1) / np.sqrt(batches)
    pi = d.stationary(np.arange(20))
    ok = se > 0
    assert np.all(np.abs(mean - pi)[ok] <= 4 * se[ok])
    assert np.allclose(mean[~ok], pi[~ok], atol=1e-12)
