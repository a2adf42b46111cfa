"""Monte Carlo simulation of the trapped walk.

Walker ``i`` of an ensemble with seed ``s`` draws from the stream
``RandomStream(s, i)``: first T_0, then at every renewal the move sign
followed by the next trapping time.  Walkers are processed in fixed blocks
and the block results are folded in block order, so outputs do not depend
on the number of worker threads.

Ensemble kernels jump from renewal to renewal instead of stepping through
time; the running second moment is recorded through difference arrays.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from ._rng import RandomStream, _load, _store, draw_trap, make_state, next_sign

BLOCK = 2048


@dataclass(frozen=True)
class Trajectory:
    positions: np.ndarray
    traps: np.ndarray

    @property
    def horizon(self):
        return self.positions.size - 1


@dataclass(frozen=True)
class EnsembleStats:
    horizon: int
    walkers: int
    seed: int
    msd_hat: np.ndarray
    msd_se: np.ndarray
    samples: dict = field(default_factory=dict)


@nb.njit(cache=True)
def _trajectory(arr, kind, tails, glo, ghi, param, fixed, n):
    s = _load(arr)
    xs = np.zeros(n + 1, dtype=np.int64)
    ts = np.zeros(n + 1, dtype=np.int64)
    x = 0
    s, trap = draw_trap(s, kind, tails, glo, ghi, param, fixed)
    ts[0] = trap
    for t in range(n):
        if trap == 0:
            s, step = next_sign(s)
            x += step
            s, trap = draw_trap(s, kind, tails, glo, ghi, param, fixed)
        else:
            trap -= 1
        xs[t + 1] = x
        ts[t + 1] = trap
    _store(arr, s)
    return xs, ts


def simulate_walker(d, n, rng):
    """One path X_0..X_n with its countdown T_0..T_n.

    ``rng`` is a ``RandomStream`` or an integer seed (stream 0).
    """
    if not isinstance(rng, RandomStream):
        rng = RandomStream(rng)
    xs, ts = _trajectory(rng.state, *d.sampler(), int(n))
    return Trajectory(xs, ts)


def trajectory_violations(traj):
    """Indices t where the path breaks a chain rule (empty when valid)."""
    x, tr = traj.positions, traj.traps
    dx = np.diff(x)
    bad = (np.abs(dx) > 1)
    bad |= (dx != 0) & (tr[:-1] != 0)
    bad |= (tr[:-1] == 0) & (dx == 0)
    bad |= (tr[:-1] > 0) & (tr[1:] != tr[:-1] - 1)
    out = list(np.nonzero(bad)[0])
    if x[0] != 0:
        out.insert(0, -1)
    return out


@nb.njit(cache=True, nogil=True)
def _run_block(w0, w1, seed, n, checkpoints, want_msd,
               kind, tails, glo, ghi, param, fixed):
    nck = checkpoints.size
    m = w1 - w0
    d2 = np.zeros(n + 2, dtype=np.int64)
    d4 = np.zeros(n + 2)
    xs = np.zeros((nck, m), dtype=np.int64)
    ns = np.zeros((nck, m), dtype=np.int64)
    for i in range(m):
        s = make_state(seed, w0 + i)
        # r is the next renewal time not yet processed, cnt the renewals
        # before r, x the position at times <= r
        s, r = draw_trap(s, kind, tails, glo, ghi, param, fixed)
        cnt = 0
        x = 0
        k = 0
        while True:
            while k < nck and checkpoints[k] <= r:
                c = checkpoints[k]
                xs[k, i] = x
                ns[k, i] = cnt + (1 if r == c else 0)
                k += 1
            if r >= n:
                break
            cnt += 1
            s, step = next_sign(s)
            xn = x + step
            if want_msd:
                d2[r + 1] += xn * xn - x * x
                a = float(xn * xn)
                b = float(x * x)
                d4[r + 1] += a * a - b * b
            x = xn
            s, tau = draw_trap(s, kind, tails, glo, ghi, param, fixed)
            r = r + 1 + tau
    return d2, d4, xs, ns


def _blocks(m):
    return [(w0, min(m, w0 + BLOCK)) for w0 in range(0, m, BLOCK)]


def _run(d, n, m, seed, checkpoints, want_msd, workers):
    sampler = d.sampler()
    cks = np.ascontiguousarray(checkpoints, dtype=np.int64)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    if workers is None:
        workers = os.cpu_count() or 1

    def job(span):
        return _run_block(span[0], span[1], np.uint64(seed), n, cks, want_msd, *sampler)

    blocks = _blocks(m)
    d2 = np.zeros(n + 2, dtype=np.int64)
    d4 = np.zeros(n + 2)
    xs, ns = [], []
    if workers <= 1 or len(blocks) == 1:
        results = map(job, blocks)
        pool = None
    else:
        pool = ThreadPoolExecutor(max_workers=int(workers))
        results = pool.map(job, blocks)
    try:
        for b2, b4, bx, bn in results:
            d2 += b2
            d4 += b4
            xs.append(bx)
            ns.append(bn)
    finally:
        if pool is not None:
            pool.shutdown()
    return d2, d4, np.concatenate(xs, axis=1), np.concatenate(ns, axis=1)


def ensemble_msd(d, n, m, seed, workers=None, checkpoints=None):
    """Empirical MSD of ``m`` independent walkers up to time ``n``.

    Parameters
    ----------
    d : TrappingDistribution
    n : int
        Horizon.
    m : int
        Number of walkers, at least 2.
    seed : int
        64-bit seed; walker i uses stream i.
    workers : int, optional
        Thread count; does not affect the result.
    checkpoints : sequence of int, optional
        Times at which (X_t, N_t) of every walker is retained.

    Returns
    -------
    EnsembleStats
        ``msd_hat[t]`` is the mean of X_t^2 and ``msd_se[t]`` the sample
        standard deviation of X_t^2 divided by sqrt(m).
    """
    n, m = int(n), int(m)
    if m < 2:
        raise ValueError("need at least two walkers")
    cks = _checkpoints(checkpoints or [], n)
    d2, d4, xs, ns = _run(d, n, m, seed, cks, True, workers)
    s2 = np.cumsum(d2)[: n + 1].astype(float)
    s4 = np.cumsum(d4)[: n + 1]
    mean = s2 / m
    var = np.maximum(s4 - s2 * mean, 0.0) / (m - 1)
    se = np.sqrt(var / m)
    samples = {int(t): (xs[k], ns[k]) for k, t in enumerate(cks)}
    return EnsembleStats(n, m, int(seed), mean, se, samples)


def _checkpoints(checkpoints, n=None):
    cks = np.asarray(list(checkpoints), dtype=np.int64)
    if cks.size and (np.any(np.diff(cks) <= 0) or cks[0] < 0):
        raise ValueError("checkpoints must be strictly increasing and non-negative")
    if n is not None and cks.size and cks[-1] > n:
        raise ValueError("checkpoint beyond the horizon")
    return cks


def ensemble_samples(d, checkpoints, m, seed, workers=None):
    """Samples of (X_t, N_t) for every walker at each checkpoint.

    Returns
    -------
    dict
        ``{t: (x, n)}`` with int64 arrays of length ``m``;
        N_t = #{0 <= s <= t : T_s = 0}.
    """
    cks = _checkpoints(checkpoints)
    if not cks.size:
        return {}
    _, _, xs, ns = _run(d, int(cks[-1]), int(m), seed, cks, False, workers)
    return {int(t): (xs[k], ns[k]) for k, t in enumerate(cks)}


@nb.njit(cache=True)
def _occupancy(seed, kind, tails, glo, ghi, param, fixed, steps, states, batches):
    s = make_state(seed, 0)
    counts = np.zeros((batches, states), dtype=np.int64)
    per = steps // batches
    s, trap = draw_trap(s, kind, tails, glo, ghi, param, fixed)
    for b in range(batches):
        for _ in range(per):
            if trap < states:
                counts[b, trap] += 1
            if trap == 0:
                s, step = next_sign(s)
                s, trap = draw_trap(s, kind, tails, glo, ghi, param, fixed)
            else:
                trap -= 1
    return counts


def trap_occupancy(d, steps, seed, states=20, batches=100):
    """Visits of T_t to 0..states-1 along one long path, split into batches.

    Returns an int array of shape (batches, states); each batch covers
    ``steps // batches`` consecutive times starting at t = 0.
    """
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return _occupancy(seed, *d.sampler(), int(steps), int(states), int(batches))
