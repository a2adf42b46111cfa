import itertools
import math

import numpy as np
import pytest

from trapwalk.distributions import Custom, Deterministic, Exponential, PowerLawZeta
from trapwalk.errors import HorizonTooLarge
from trapwalk.exact_law import (binomial_rows, brute_force_distribution, count_distribution,
                                count_table, position_distribution, position_table)
from trapwalk.montecarlo import ensemble_samples
from trapwalk.msd_engine import msd_series

from conftest import zoo

GRID = [Exponential(0.3), Exponential(0.7), PowerLawZeta(1.5), PowerLawZeta(2.5),
        PowerLawZeta(3.5), Deterministic(2)]


def enumerate_walk(p, t):
    """P(X_t = z) and P(N_t = n) by summing over every path of a finite law.

    ``p`` maps trapping times to probabilities.  Traps longer than t are
    all equivalent, so the enumeration is finite.
    """
    pos, cnt = {}, {}
    taus = list(p)

    def walk(time, x, trap, n, w):
        # state at ``time`` with countdown ``trap``; n renewals so far
        if trap == 0:
            n += 1
        if time == t:
            pos[x] = pos.get(x, 0.0) + w
            cnt[n] = cnt.get(n, 0.0) + w
            return
        if trap > 0:
            walk(time + 1, x, trap - 1, n, w)
            return
        for step in (-1, 1):
            for tau in taus:
                walk(time + 1, x + step, tau, n, w * 0.5 * p[tau])

    for tau in taus:
        walk(0, 0, tau, 0, p[tau])
    return pos, cnt


SMALL = Custom(((0, 0.3), (1, 0.45), (3, 0.25)))


@pytest.mark.parametrize("t", range(1, 8))
def test_against_path_enumeration(t):
    p = dict(SMALL.items)
    pos, cnt = enumerate_walk(p, t)
    law = position_distribution(SMALL, t)
    for z in range(-t, t + 1):
        assert law.prob(z) == pytest.approx(pos.get(z, 0.0), abs=1e-14)
    counts = count_distribution(SMALL, t)
    for n in range(t + 2):
        assert counts.probs[n] == pytest.approx(cnt.get(n, 0.0), abs=1e-14)


# --- count law ----------------------------------------------------------------

def test_count_examples():
    assert count_distribution(Deterministic(0), 5).probs[6] == 1.0
    assert count_distribution(Deterministic(1), 5).probs[3] == 1.0
    # period-4 cycle: renewals at 3, 7, 11, ...
    assert count_distribution(Deterministic(3), 11).probs[3] == 1.0
    assert count_distribution(Deterministic(3), 10).probs[2] == 1.0


def test_count_support_and_mass():
    for d in zoo():
        c = count_distribution(d, 40)
        assert c.probs.size == 42
        assert np.all(c.probs >= -1e-16)
        assert math.fsum(c.probs) == pytest.approx(1.0, abs=1e-10)


def test_count_table_rows_match():
    d = PowerLawZeta(1.8)
    table = count_table(d, 30)
    for t in (0, 7, 30):
        row = count_distribution(d, t).probs
        assert np.allclose(table[t, : row.size], row, rtol=0, atol=1e-15)
        assert np.all(table[t, row.size:] == 0)


def test_count_law_against_simulation():
    d = Exponential(0.5)
    m = 10 ** 6
    n = ensemble_samples(d, [64], m, 2024)[64][1]
    law = count_distribution(d, 64).probs
    freq = np.bincount(n, minlength=law.size)[: law.size] / m
    se = np.sqrt(law * (1 - law) / m)
    keep = law > 1e-7
    assert np.all(np.abs(freq - law)[keep] <= 4 * se[keep] + 1e-12)
    assert np.all(freq[~keep] <= 5e-6)


# --- position law -------------------------------------------------------------

@pytest.mark.parametrize("d", zoo(), ids=lambda d: d.spec)
def test_one_step(d):
    law = position_distribution(d, 1)
    p0 = d.pmf(0)
    assert law.prob(1) == pytest.approx(p0 / 2, abs=1e-16)
    assert law.prob(-1) == pytest.approx(p0 / 2, abs=1e-16)
    assert law.prob(0) == pytest.approx(1 - p0, abs=1e-15)
    bf = brute_force_distribution(d, 1)
    assert np.allclose(bf.probs, law.probs, atol=1e-16)


def test_simple_walk_binomial():
    law = position_distribution(Deterministic(0), 4)
    assert law.probs.tolist() == [1 / 16, 0, 4 / 16, 0, 6 / 16, 0, 4 / 16, 0, 1 / 16]
    assert law.prob(0) == 3 / 8


def test_period_three_walk():
    law = brute_force_distribution(Deterministic(2), 6)
    assert law.as_dict() == {-6: 0, -5: 0, -4: 0, -3: 0, -2: 0.25, -1: 0, 0: 0.5,
                             1: 0, 2: 0.25, 3: 0, 4: 0, 5: 0, 6: 0}


def test_power_law_matches_full_state_chain():
    d = PowerLawZeta(2.5)
    a = position_distribution(d, 64)
    b = brute_force_distribution(d, 64)
    assert np.max(np.abs(a.probs - b.probs)) <= 1e-10


def test_exponential_second_moment_full_state():
    d = Exponential(0.5)
    assert brute_force_distribution(d, 32).moment(2) == pytest.approx(
        msd_series(d, 32).sigma2[32], abs=1e-10)


@pytest.mark.parametrize("d", GRID, ids=lambda d: d.spec)
def test_mass_symmetry_mean(d):
    for t in (1, 2, 17, 200):
        law = position_distribution(d, t)
        assert math.fsum(law.probs) == pytest.approx(1.0, abs=1e-10)
        assert np.max(np.abs(law.probs - law.probs[::-1])) <= 1e-15
        assert abs(law.moment(1)) <= 1e-12
        assert np.all(law.probs >= 0)


def test_position_table_rows():
    d = PowerLawZeta(1.5)
    tab = position_table(d, 50)
    for t in (1, 10, 50):
        row = tab[t - 1, 50 - t: 50 + t + 1]
        assert np.allclose(row, position_distribution(d, t).probs, rtol=0, atol=1e-15)


def test_binomial_rows():
    rows = binomial_rows(6, 6)
    assert rows[6, 6] == pytest.approx(20 / 64)
    assert np.allclose(rows.sum(axis=1), 1.0)


def test_ceilings(monkeypatch):
    with pytest.raises(HorizonTooLarge):
        position_distribution(Exponential(0.5), 4097)
    with pytest.raises(HorizonTooLarge):
        count_distribution(Exponential(0.5), 4097)
    with pytest.raises(HorizonTooLarge):
        brute_force_distribution(Exponential(0.5), 513)
    monkeypatch.setenv("TRAPWALK_MAX_HORIZON", "10")
    with pytest.raises(HorizonTooLarge):
        position_distribution(Exponential(0.5), 11)
    with pytest.raises(ValueError):
        position_distribution(Exponential(0.5), 0)
