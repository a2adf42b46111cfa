"""Exact mean squared displacement and renewal mass sequences.

Both sequences solve a renewal equation

    x[t+1] = f[t] + sum_{tau=0}^{t} p(tau) x[t - tau]

with non-negative terms, so there is no cancellation.  The convolution is
summed with compensation, so each step contributes about one rounding of
x[t+1] and the accumulated relative error of x[N] is O(N * ulp) in the
worst case and O(sqrt(N) * ulp) for unbiased rounding.
For the MSD, f[t] = P(T <= t) and x[0] = 0.  For the renewal mass,
f = 0 and x[0] = 1.
"""

import math
import os
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import HorizonTooLarge, InfiniteMean, ZeroEscape

DEFAULT_MAX_HORIZON = 1 << 17


def max_horizon(default=DEFAULT_MAX_HORIZON):
    """Horizon ceiling, overridable with TRAPWALK_MAX_HORIZON."""
    env = os.environ.get("TRAPWALK_MAX_HORIZON")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return default


def check_horizon(n, ceiling, what="horizon"):
    if n > ceiling:
        raise HorizonTooLarge(f"{what} {n} exceeds the configured ceiling {ceiling}")


@nb.njit(cache=True, nogil=True)
def _renewal_kernel(p, forcing, x0, n):
    # rev[n - t] holds x[t], so the convolution reads both arrays forward.
    # Four compensated partial sums (TwoSum error terms collected in c*)
    # with a fixed combination order: the result is bit-stable and the
    # per-step summation error stays at one rounding of the total.
    rev = np.zeros(n + 1)
    out = np.zeros(n + 1)
    out[0] = x0
    rev[n] = x0
    for t in range(n):
        base = n - t
        s0 = s1 = s2 = s3 = 0.0
        c0 = c1 = c2 = c3 = 0.0
        m = t + 1
        m4 = m - (m % 4)
        for j in range(0, m4, 4):
            x = p[j] * rev[base + j]
            y = s0 + x
            z = y - s0
            c0 += (s0 - (y - z)) + (x - z)
            s0 = y
            x = p[j + 1] * rev[base + j + 1]
            y = s1 + x
            z = y - s1
            c1 += (s1 - (y - z)) + (x - z)
            s1 = y
            x = p[j + 2] * rev[base + j + 2]
            y = s2 + x
            z = y - s2
            c2 += (s2 - (y - z)) + (x - z)
            s2 = y
            x = p[j + 3] * rev[base + j + 3]
            y = s3 + x
            z = y - s3
            c3 += (s3 - (y - z)) + (x - z)
            s3 = y
        for j in range(m4, m):
            x = p[j] * rev[base + j]
            y = s0 + x
            z = y - s0
            c0 += (s0 - (y - z)) + (x - z)
            s0 = y
        tot = forcing[t]
        cc = (c0 + c1) + (c2 + c3)
        for v in (s0, s1, s2, s3):
            y = tot + v
            z = y - tot
            cc += (tot - (y - z)) + (v - z)
            tot = y
        v = tot + cc
        out[t + 1] = v
        rev[base - 1] = v
    return out


def renewal_solve(p, forcing, x0):
    """Solve the renewal equation for ``len(forcing)`` steps."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    forcing = np.ascontiguousarray(forcing, dtype=np.float64)
    n = forcing.size
    if p.size < n:
        raise ValueError("pmf table shorter than the horizon")
    return _renewal_kernel(p, forcing, float(x0), n)


@dataclass(frozen=True)
class MsdSeries:
    """sigma2[t] = E(X_t^2) for t = 0..horizon."""

    dist_spec: str
    horizon: int
    sigma2: np.ndarray
    diffusion: float = None

    def __post_init__(self):
        self.sigma2.setflags(write=False)

    @property
    def t(self):
        return np.arange(self.horizon + 1)


@dataclass(frozen=True)
class BoundEnvelope:
    """Finite-time envelope of sigma2[t] - D t for finite-mean traps.

    ``lower[t] = exp(-kappa E(T)) R_t - E(T)`` and ``upper[t] = R_t``.
    """

    r_t: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    kappa: float
    mean: float
    diffusion: float


def msd_series(d, n, ceiling=None):
    """Exact MSD of the trapped walk for t = 0..n.

    Parameters
    ----------
    d : TrappingDistribution
    n : int
        Horizon, at least 1.
    ceiling : int, optional
        Overrides the configured horizon ceiling.

    Returns
    -------
    MsdSeries
    """
    n = int(n)
    if n < 1:
        raise ValueError("horizon must be at least 1")
    check_horizon(n, max_horizon() if ceiling is None else ceiling)
    sigma2 = renewal_solve(d.pmf_array(n), d.cdf_array(n), 0.0)
    try:
        diff = d.diffusion_coefficient()
    except InfiniteMean:
        diff = None
    return MsdSeries(d.spec, n, sigma2, diff)


def renewal_mass(d, n, ceiling=None):
    """Q_0..Q_n with Q_0 = 1 and Q_{t+1} = sum_{tau<=t} Q_{t-tau} p(tau)."""
    n = int(n)
    if n < 1:
        raise ValueError("horizon must be at least 1")
    check_horizon(n, max_horizon() if ceiling is None else ceiling)
    return renewal_solve(d.pmf_array(n), np.zeros(n), 1.0)


def escape_constant(p0):
    """kappa = -log(p0) / (1 - p0), equal to 1 in the limit p0 -> 1."""
    if p0 <= 0.0:
        raise ZeroEscape("p(0) = 0: the escape constant is undefined")
    if p0 >= 1.0:
        return 1.0
    return -math.log(p0) / (1.0 - p0)


def r_sequence(d, n):
    """R_t for t = 0..n.

    R_t = D sum_{tau<=t} sum_{tau'>tau} (tau' - tau) p(tau'), regrouped as
    D [sum_{tau<=t+1} p(tau) tau(tau+1)/2
       + (t+1) (sum_{tau>t+1} tau p(tau) - (t/2) P(T > t+1))].
    The infinite sums are closed forms (Hurwitz zeta, geometric), so
    nothing is truncated.
    """
    diff = d.diffusion_coefficient()
    t = np.arange(n + 1, dtype=np.int64)
    tau = np.arange(n + 2, dtype=float)
    head = np.cumsum(d.pmf_array(n + 2) * tau * (tau + 1.0) / 2.0)[1:]
    m1 = d.first_moment_tail(t + 2)
    tl = d.tail(t + 2)
    tf = t.astype(float)
    return diff * (head + (tf + 1.0) * (m1 - 0.5 * tf * tl))


def linear_bounds(d, n):
    """Envelope ``lower[t] <= sigma2[t] - D t <= upper[t]`` for t = 0..n.

    lower = exp(-kappa E(T)) R_t - E(T) and upper = R_t, with
    kappa = -log p(0) / (1 - p(0)).  The renewal argument bounds
    sigma2[t+1] - D (t+1) by R_t from both sides; R being non-decreasing,
    the upper bound carries over to index t unchanged.

    Raises
    ------
    InfiniteMean
        If E(T) is infinite.
    ZeroEscape
        If p(0) = 0.
    """
    n = int(n)
    mean = d.mean
    if math.isinf(mean):
        raise InfiniteMean(f"{d.spec}: E(T) is infinite")
    kappa = escape_constant(d.p0)
    diff = 1.0 / (mean + 1.0)
    r = r_sequence(d, n)
    lower = math.exp(-kappa * mean) * r - mean
    return BoundEnvelope(r, lower, r.copy(), kappa, mean, diff)
