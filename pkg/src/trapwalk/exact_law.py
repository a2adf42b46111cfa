"""Exact laws of the renewal count N_t and of the position X_t.

Renewals are the times s with T_s = 0.  With S_n = sum_{k=1}^n (T_k + 1)
(T_1 = T_0 of the chain, the later T_k the fresh draws) the n-th renewal
happens at time S_n - 1, so

    N_t = #{0 <= s <= t : T_s = 0} = max{n : S_n <= t + 1},
    P(N_t = n) = sum_{s <= t+1} P(S_n = s) P(T >= t + 1 - s).

A move happens right after each renewal, so X_t is a simple random walk
observed after N_{t-1} steps:

    P(X_t = z) = sum_n P(N_{t-1} = n) b_n(z),

with b_n the symmetric binomial row.  ``brute_force_distribution`` is an
independent check that propagates the (position, countdown) chain
directly.
"""

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import HorizonTooLarge
from .msd_engine import max_horizon

DEFAULT_EXACT_CEILING = 4096
DEFAULT_ORACLE_CEILING = 512


@dataclass(frozen=True)
class CountDistribution:
    """P(N_t = n) for n = 0..t+1 (N_t = t+1 needs a renewal at every step)."""

    t: int
    probs: np.ndarray

    @property
    def n(self):
        return np.arange(self.probs.size)

    def mean(self):
        return float(np.dot(self.n, self.probs))


@dataclass(frozen=True)
class PositionDistribution:
    """P(X_t = z) stored at index z + t for z = -t..t."""

    t: int
    probs: np.ndarray

    @property
    def z(self):
        return np.arange(-self.t, self.t + 1)

    def prob(self, z):
        z = int(z)
        if abs(z) > self.t:
            return 0.0
        return float(self.probs[z + self.t])

    def as_dict(self):
        return {int(z): float(p) for z, p in zip(self.z, self.probs)}

    def moment(self, k):
        return float(np.dot(self.z.astype(float) ** k, self.probs))


def _check(t, what):
    ceiling = max_horizon(DEFAULT_EXACT_CEILING)
    if t > ceiling:
        raise HorizonTooLarge(f"{what} t={t} exceeds the ceiling {ceiling}")


@nb.njit(cache=True, nogil=True)
def _partial_sum_laws(step, smax, nmax):
    # q[n, s] = P(S_n = s) for s <= smax, where S_n is a sum of n copies of
    # T + 1 and step[j] = P(T + 1 = j).  S_n >= n, so row n starts at n.
    q = np.zeros((nmax + 1, smax + 1))
    q[0, 0] = 1.0
    for n in range(nmax):
        for s in range(n + 1, smax + 1):
            acc = 0.0
            for r in range(n, s):
                acc += q[n, r] * step[s - r]
            q[n + 1, s] = acc
    return q


def _step_law(d, smax):
    step = np.zeros(smax + 1)
    step[1:] = d.pmf_array(smax)
    return step


def count_table(d, t_max):
    """Rows P(N_t = .) for t = 0..t_max as a (t_max+1, t_max+2) array."""
    smax = t_max + 1
    q = _partial_sum_laws(_step_law(d, smax), smax, smax)
    tails = d.tail_array(smax + 1)
    # C[t, n] = sum_{s <= t+1} q[n, s] tail(t + 1 - s)
    idx = np.arange(t_max + 1)[:, None] + 1 - np.arange(smax + 1)[None, :]
    toeplitz = np.where(idx >= 0, tails[np.clip(idx, 0, smax)], 0.0)
    return toeplitz @ q.T


def count_distribution(d, t):
    """Exact law of N_t, the number of renewals in [0, t].

    Raises
    ------
    HorizonTooLarge
        Beyond the exact-law ceiling (4096 unless TRAPWALK_MAX_HORIZON
        is set).
    """
    t = int(t)
    if t < 0:
        raise ValueError("t must be non-negative")
    _check(t, "count law")
    smax = t + 1
    q = _partial_sum_laws(_step_law(d, smax), smax, smax)
    tails = d.tail(t + 1 - np.arange(smax + 1))
    probs = q @ tails
    return CountDistribution(t, probs)


def binomial_rows(nmax, zmax):
    """b[n, z + zmax] = P(simple walk at z after n steps), n = 0..nmax."""
    rows = np.zeros((nmax + 1, 2 * zmax + 1))
    cur = np.zeros(2 * zmax + 3)
    cur[zmax + 1] = 1.0
    rows[0] = cur[1:-1]
    for n in range(1, nmax + 1):
        nxt = np.zeros_like(cur)
        nxt[1:-1] = 0.5 * (cur[:-2] + cur[2:])
        cur = nxt
        rows[n] = cur[1:-1]
    return rows


def _mix(counts, t):
    # counts[n] = P(N_{t-1} = n), n = 0..t
    out = np.zeros(2 * t + 1)
    cur = np.zeros(2 * t + 3)
    cur[t + 1] = 1.0
    for n in range(counts.size):
        if n:
            nxt = np.zeros_like(cur)
            nxt[1:-1] = 0.5 * (cur[:-2] + cur[2:])
            cur = nxt
        if counts[n] != 0.0:
            out += counts[n] * cur[1:-1]
    return out


def position_distribution(d, t):
    """Exact law of X_t by subordinating a simple walk to N_{t-1}."""
    t = int(t)
    if t < 1:
        raise ValueError("t must be at least 1")
    _check(t, "position law")
    counts = count_distribution(d, t - 1).probs
    return PositionDistribution(t, _mix(counts, t))


def position_table(d, t_max):
    """All position laws for t = 1..t_max as rows of a (t_max, 2 t_max + 1)
    array indexed by z + t_max."""
    _check(t_max, "position law")
    counts = count_table(d, t_max - 1)          # rows t - 1 = 0..t_max-1
    rows = binomial_rows(t_max, t_max)          # n = 0..t_max
    return counts @ rows


@nb.njit(cache=True, nogil=True)
def _brute_force(pmf, tails, t):
    # state[z + t, j]: at time s with R = t - s steps left, j < R is the
    # exact countdown and j = R collects every countdown >= R (such a
    # walker cannot move again before time t).
    width = 2 * t + 1
    state = np.zeros((width, t + 1))
    for j in range(t):
        state[t, j] = pmf[j]
    state[t, t] = tails[t]
    for s in range(t):
        R = t - s
        Rn = R - 1
        fresh = np.zeros(Rn + 1)
        for j in range(Rn):
            fresh[j] = pmf[j]
        fresh[Rn] = tails[Rn]
        new = np.zeros((width, t + 1))
        for z in range(width):
            for j in range(Rn + 1):
                new[z, j] += state[z, j + 1]
            m = state[z, 0]
            if m != 0.0:
                half = 0.5 * m
                for j in range(Rn + 1):
                    w = half * fresh[j]
                    if z > 0:
                        new[z - 1, j] += w
                    if z < width - 1:
                        new[z + 1, j] += w
        state = new
    out = np.zeros(width)
    for z in range(width):
        acc = 0.0
        for j in range(t + 1):
            acc += state[z, j]
        out[z] = acc
    return out


def brute_force_distribution(d, t, ceiling=DEFAULT_ORACLE_CEILING):
    """Position law from the full (position, countdown) chain; t <= 512."""
    t = int(t)
    if t < 1:
        raise ValueError("t must be at least 1")
    if t > ceiling:
        raise HorizonTooLarge(f"brute-force oracle limited to t <= {ceiling}")
    return PositionDistribution(t, _brute_force(d.pmf_array(t + 1), d.tail_array(t + 1), t))
