import math

import numpy as np
import pytest

from trapwalk.distributions import Custom, Deterministic, Exponential, PowerLawZeta
from trapwalk.errors import HorizonTooLarge, InfiniteMean, ZeroEscape
from trapwalk.exact_law import brute_force_distribution
from trapwalk.msd_engine import (escape_constant, linear_bounds, msd_series, r_sequence,
                                 renewal_mass)

from conftest import direct_sigma2, zoo


# --- msd_series ---------------------------------------------------------------

def test_exponential_half_t():
    s = msd_series(Exponential(0.5), 10)
    assert np.max(np.abs(s.sigma2 - 0.5 * np.arange(11))) <= 1e-12
    assert s.diffusion == pytest.approx(0.5)
    assert s.horizon == 10 and s.dist_spec == "exp:0.5"


@pytest.mark.parametrize("d", zoo(), ids=lambda d: d.spec)
def test_first_step_and_initial(d):
    s = msd_series(d, 5).sigma2
    assert s[0] == 0.0
    assert s[1] == pytest.approx(d.pmf(0), abs=1e-15)


def test_simple_walk():
    assert np.array_equal(msd_series(Deterministic(0), 100).sigma2, np.arange(101.0))


def test_power_law_against_full_state_chain():
    s = msd_series(PowerLawZeta(1.5), 2 ** 10).sigma2
    for t in (16, 64, 256):
        law = brute_force_distribution(PowerLawZeta(1.5), t)
        assert abs(law.moment(2) - s[t]) <= 1e-9


@pytest.mark.parametrize("d", zoo(), ids=lambda d: d.spec)
def test_against_plain_recurrence(d):
    n = 300
    ref = direct_sigma2(d, n)
    got = msd_series(d, n).sigma2
    assert np.max(np.abs(got - ref) / np.maximum(1.0, ref)) <= 1e-13


def test_series_is_read_only_and_bit_stable():
    a = msd_series(PowerLawZeta(1.7), 3000)
    b = msd_series(PowerLawZeta(1.7), 3000)
    assert np.array_equal(a.sigma2, b.sigma2)
    with pytest.raises(ValueError):
        a.sigma2[3] = 0.0


def test_horizon_ceiling(monkeypatch):
    with pytest.raises(HorizonTooLarge):
        msd_series(Exponential(0.5), 2 ** 17 + 1)
    monkeypatch.setenv("TRAPWALK_MAX_HORIZON", "100")
    with pytest.raises(HorizonTooLarge):
        msd_series(Exponential(0.5), 101)
    assert msd_series(Exponential(0.5), 100).horizon == 100


def test_rejects_empty_horizon():
    with pytest.raises(ValueError):
        msd_series(Exponential(0.5), 0)


# --- structural invariants ----------------------------------------------------

@pytest.fixture(scope="module")
def long_series():
    n = 2 ** 14
    return {d.spec: (d, msd_series(d, n).sigma2) for d in zoo()}


def test_monotone_unbounded_and_ballistic(long_series):
    for spec, (d, s) in long_series.items():
        n = s.size - 1
        assert np.all(np.diff(s) >= 0.0), spec
        assert s[n] > s[n // 2], spec
        assert np.all(s <= np.arange(n + 1) + 1e-9), spec


def test_tail_bound(long_series):
    for spec, (d, s) in long_series.items():
        n = s.size - 1
        tails = d.tail(np.arange(2, n + 2))     # P(T > t) for t = 1..n
        ok = tails > 0
        assert np.all(s[1:][ok] * tails[ok] <= 1.0 + 1e-12), spec


def test_increment_recurrence(long_series):
    # Delta_{t+1} = p(t) + sum_{tau<=t} p(tau) Delta_{t-tau}, recomputed in
    # plain numpy from the finished series
    for spec, (d, s) in long_series.items():
        n = 2000
        p = d.pmf_array(n)
        delta = np.diff(s[: n + 1])             # delta[t] = Delta_{t+1}
        prev = np.concatenate([[0.0], delta])   # prev[j] = Delta_j
        for t in range(0, n, 97):
            rhs = p[t] + np.dot(p[: t + 1], prev[t::-1])
            assert abs(delta[t] - rhs) <= 1e-10, (spec, t)


def test_finite_variance_sandwich():
    d = PowerLawZeta(3.5)
    n = 2 ** 15
    s = msd_series(d, n).sigma2
    dc = d.diffusion_coefficient()
    limit = dc * (d.moment(2) + d.mean) / 2
    assert limit == pytest.approx(0.47368623315847835, abs=1e-12)
    assert np.max(np.abs(s - dc * np.arange(n + 1))) <= limit + 1e-6


def test_sub_diffusion():
    s = msd_series(PowerLawZeta(1.5), 2 ** 16).sigma2
    assert s[2 ** 16] / 2 ** 16 < s[2 ** 10] / 2 ** 10
    assert s[2 ** 16] / 2 ** 16 < 0.1


# --- renewal mass -------------------------------------------------------------

@pytest.mark.parametrize("d", zoo(), ids=lambda d: d.spec)
def test_renewal_mass_start(d):
    q = renewal_mass(d, 10)
    assert q[0] == 1.0
    assert q[1] == pytest.approx(d.pmf(0), abs=1e-15)


def test_renewal_mass_period_two():
    q = renewal_mass(Deterministic(1), 50)
    assert np.array_equal(q, (np.arange(51) % 2 == 0).astype(float))


@pytest.mark.parametrize("d", [Exponential(0.3), Exponential(0.9), PowerLawZeta(2.5),
                               PowerLawZeta(3.5), Custom(((0, 0.2), (2, 0.5), (5, 0.3)))],
                         ids=lambda d: d.spec)
def test_renewal_mass_bounds(d):
    q = renewal_mass(d, 4096)
    kappa = escape_constant(d.p0)
    assert np.all(q <= 1.0 + 1e-12)
    assert np.all(q >= math.exp(-kappa * d.mean) - 1e-12)


# --- envelope -----------------------------------------------------------------

def test_escape_constant():
    assert escape_constant(1.0) == 1.0
    assert escape_constant(0.5) == pytest.approx(2 * math.log(2))
    with pytest.raises(ZeroEscape):
        escape_constant(0.0)


def test_bounds_simple_walk():
    env = linear_bounds(Deterministic(0), 50)
    assert np.all(env.r_t == 0.0)
    assert np.all(env.lower == 0.0) and np.all(env.upper == 0.0)
    assert env.kappa == 1.0


def test_bounds_errors():
    with pytest.raises(InfiniteMean):
        linear_bounds(PowerLawZeta(2.0), 10)
    with pytest.raises(ZeroEscape):
        linear_bounds(Deterministic(2), 10)


@pytest.mark.parametrize("d", [Exponential(0.5), PowerLawZeta(2.5), PowerLawZeta(3.5),
                               PowerLawZeta(6.0), Custom(((0, 0.2), (2, 0.5), (5, 0.3)))],
                         ids=lambda d: d.spec)
def test_r_sequence_against_definition(d):
    # R_t = D sum_{tau<=t} sum_{k>tau} P(T >= k) = D sum_{tau<=t} (E T - sum_{k=1}^tau P(T >= k))
    n = 3000
    excess = d.mean - np.concatenate([[0.0], np.cumsum(d.tail(np.arange(1, n + 1)))])
    ref = d.diffusion_coefficient() * np.cumsum(excess)
    got = r_sequence(d, n)
    assert np.max(np.abs(got - ref) / np.maximum(1.0, ref)) <= 1e-11


@pytest.mark.parametrize("d", [Exponential(0.3), Exponential(0.9), PowerLawZeta(2.2),
                               PowerLawZeta(2.5), PowerLawZeta(3.5), PowerLawZeta(8.0),
                               Deterministic(0), Custom(((0, 0.2), (2, 0.5), (5, 0.3)))],
                         ids=lambda d: d.spec)
def test_sandwich_holds(d):
    n = 2 ** 12
    env = linear_bounds(d, n)
    s = msd_series(d, n).sigma2
    dev = s - env.diffusion * np.arange(n + 1)
    assert np.all(np.diff(env.r_t) >= -1e-12)
    assert np.all(env.lower <= env.upper)
    assert np.all(env.lower <= dev + 1e-10)
    assert np.all(dev <= env.upper + 1e-10)


def test_sandwich_at_large_t():
    d = PowerLawZeta(3.5)
    t = 2 ** 14
    env = linear_bounds(d, t)
    dev = msd_series(d, t).sigma2[t] - env.diffusion * t
    assert env.lower[t] <= dev <= env.upper[t]


def test_sub_linear_deviation_growth():
    # for q = 2.5 the envelope and the deviation both grow like t^{1/2}
    d = PowerLawZeta(2.5)
    n = 2 ** 14
    env = linear_bounds(d, n)
    r = env.r_t
    assert r[n] / r[n // 4] == pytest.approx(2.0, abs=0.1)
    dev = msd_series(d, n).sigma2 - env.diffusion * np.arange(n + 1)
    assert dev[n] > dev[n // 4] > dev[n // 16] > 0
