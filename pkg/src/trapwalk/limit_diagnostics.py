"""Empirical checks of the limit theorems on simulated ensembles.

All distances are Kolmogorov sup-distances over the whole line, a stricter
proxy for the bounded-interval statements of the theorems.  Positions are
integers, so every empirical CDF is a step function and the sup is taken at
the jumps, on both sides.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .distributions import PowerLawZeta
from .errors import DomainError, InfiniteMean
from .montecarlo import ensemble_samples


def normal_distance(values):
    """sup_x |F_hat(x) - Phi(x)| for the empirical CDF of ``values``."""
    v = np.asarray(values, dtype=float)
    m = v.size
    if m == 0:
        raise ValueError("no samples")
    atoms, counts = np.unique(v, return_counts=True)
    upper = np.cumsum(counts) / m
    lower = upper - counts / m
    phi = ndtr(atoms)
    return float(max(np.max(np.abs(upper - phi)), np.max(np.abs(lower - phi))))


def two_sample_distance(a, b):
    """sup_x |F_a(x) - F_b(x)| between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.union1d(a, b)
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def symmetry_defect(x):
    """max_k |P(X <= k) - P(X >= -k)| for an integer sample.

    For a continuous law this is max |F(x) + F(-x) - 1|; on the lattice the
    left limit F(-k-) replaces F(-k) so that a symmetric law scores 0.
    """
    x = np.asarray(x, dtype=np.int64)
    top = int(np.max(np.abs(x))) if x.size else 0
    hist = np.bincount(x + top, minlength=2 * top + 1).astype(float) / x.size
    cdf = np.cumsum(hist)                     # P(X <= k) at index k + top
    right = np.cumsum(hist[::-1])[::-1]       # P(X >= k) at index k + top
    upper = right[::-1]                       # P(X >= -k) at index k + top
    return float(np.max(np.abs(cdf - upper)))


def _loglog_slope(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 2 or np.any(y <= 0.0):
        return math.nan
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])


@dataclass(frozen=True)
class CltReport:
    checkpoints: list
    sup_distance: list
    rate_fit: float
    theoretical_rate: float
    mu: float
    c_t: float
    alpha: float
    walkers: int
    seed: int


def clt_check(d, checkpoints, m, seed, alpha=None, workers=None):
    """Distance of X_t / sqrt(t / mu) to the standard normal, mu = E(T) + 1.

    Parameters
    ----------
    d : TrappingDistribution
        Finite mean required.
    checkpoints : sequence of int
        Increasing times.
    m : int
        Walkers.
    seed : int
    alpha : float, optional
        Moment order in (1, 2]; fills in C_T = E|T - E(T)|^alpha and the
        rate exponent (1 - alpha) / (1 + alpha).
    workers : int, optional

    Returns
    -------
    CltReport
        ``rate_fit`` is the log-log slope of the distance against t.

    Raises
    ------
    InfiniteMean
    """
    mean = d.mean
    if math.isinf(mean):
        raise InfiniteMean(f"{d.spec}: E(T) is infinite")
    mu = mean + 1.0
    cks = [int(t) for t in checkpoints]
    if any(t < 1 for t in cks):
        raise ValueError("checkpoints must be positive")
    samples = ensemble_samples(d, cks, m, seed, workers)
    dist = [normal_distance(samples[t][0] / math.sqrt(t / mu)) for t in cks]
    rate = _loglog_slope(cks, dist)
    theo = c_t = None
    if alpha is not None:
        alpha = float(alpha)
        theo = (1.0 - alpha) / (1.0 + alpha)
        c_t = d.centered_abs_moment(alpha)
    return CltReport(cks, dist, rate, theo, mu, c_t, alpha, int(m), int(seed))


@dataclass(frozen=True)
class ConcentrationReport:
    """Rows for the checkpoints where h(t) < 1; the others are in ``skipped``."""

    alpha: float
    checkpoints: list
    h_values: list
    lower: list
    upper: list
    violation_freq: list
    ratio: list
    skipped: list
    walkers: int
    seed: int


def _check_alpha(d, alpha, top):
    alpha = float(alpha)
    if not 0.0 < alpha < top:
        raise DomainError(f"alpha must lie in (0, {top:g}), got {alpha}")
    if isinstance(d, PowerLawZeta) and abs(alpha - (d.q - 1.0)) > 1e-12:
        raise DomainError(f"for {d.spec} the tail index is alpha = q - 1 = {d.q - 1.0!r}")
    return alpha


def concentration_h(d, t, alpha):
    """h(t) = P(T >= t) (t + 1)^alpha."""
    return float(d.tail(int(t))) * (t + 1.0) ** alpha


def concentration_check(d, alpha, checkpoints, m, seed, workers=None):
    """Frequency of N_t outside t^alpha [h(t), h(t)^-2] against h(t).

    Raises
    ------
    DomainError
        If alpha is not in (0, 1), or disagrees with q - 1 for a power law.
    """
    alpha = _check_alpha(d, alpha, 1.0)
    cks = [int(t) for t in checkpoints]
    samples = ensemble_samples(d, cks, m, seed, workers)
    rows = ([], [], [], [], [], [])
    skipped = []
    for t in cks:
        h = concentration_h(d, t, alpha)
        if not h < 1.0:
            skipped.append(t)
            continue
        lo = t ** alpha * h
        hi = t ** alpha / (h * h) if h > 0.0 else math.inf
        n = samples[t][1]
        freq = float(np.mean((n < lo) | (n > hi)))
        ratio = freq / h if h > 0.0 else (math.inf if freq > 0.0 else 0.0)
        for col, val in zip(rows, (t, h, lo, hi, freq, ratio)):
            col.append(val)
    cks_kept, hs, los, his, freqs, ratios = rows
    return ConcentrationReport(alpha, cks_kept, hs, los, his, freqs, ratios, skipped,
                               int(m), int(seed))


@dataclass(frozen=True)
class HeavyTailReport:
    """Scaled positions Y_t = X_t / t^(alpha/2).

    ``pairwise_distance[i]`` compares the laws at checkpoints i and i+1.
    ``second_moment`` and ``second_moment_half`` are the sample means of
    Y_t^2 over all walkers and over the first half; growth with the sample
    size hints at a divergent moment.
    """

    alpha: float
    checkpoints: list
    pairwise_distance: list
    symmetry_defect: list
    normal_distance: list
    second_moment: list
    second_moment_half: list
    walkers: int
    seed: int


def heavy_tail_scaling_check(d, alpha, checkpoints, m, seed, workers=None):
    """Self-consistency of the laws of X_t / t^(alpha/2) across checkpoints.

    alpha = 1 is accepted as the diffusive boundary case, where Y_t is the
    plain CLT scaling with mu = 1.

    Raises
    ------
    DomainError
        If alpha is not in (0, 1], or disagrees with q - 1 for a power law.
    """
    alpha = float(alpha)
    if alpha != 1.0:
        alpha = _check_alpha(d, alpha, 1.0)
    cks = [int(t) for t in checkpoints]
    samples = ensemble_samples(d, cks, m, seed, workers)
    scaled = [samples[t][0] / t ** (alpha / 2.0) for t in cks]
    pair = [two_sample_distance(a, b) for a, b in zip(scaled[:-1], scaled[1:])]
    sym = [symmetry_defect(samples[t][0]) for t in cks]
    nd = [normal_distance(y) for y in scaled]
    half = max(1, int(m) // 2)
    mom = [float(np.mean(y * y)) for y in scaled]
    mom_half = [float(np.mean(y[:half] * y[:half])) for y in scaled]
    return HeavyTailReport(alpha, cks, pair, sym, nd, mom, mom_half, int(m), int(seed))
