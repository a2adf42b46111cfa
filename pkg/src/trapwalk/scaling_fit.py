"""Power-law exponents of MSD curves, sigmoidal meta-fits and the
slow-variation profile h(t) = sigma2[t] / t^beta.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import PowerLawZeta, TruncatedPowerLaw
from .errors import FitDiverged, WindowError
from .msd_engine import msd_series

SAMPLINGS = ("all", "log")
CONVENTIONS = ("model", "figure")
LOG_POINTS = 512


@dataclass(frozen=True)
class ExponentFit:
    """OLS fit log sigma2 = log_intercept + beta log t over [t_min, t_max]."""

    beta: float
    log_intercept: float
    t_min: int
    t_max: int
    rms_residual: float
    points: int = 0
    sampling: str = "all"
    offset: int = 0


def _ols(x, y):
    # centred sums keep the slope exact to rounding on exact power laws
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    slope = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    icpt = float(ym - slope * xm)
    res = y - (icpt + slope * x)
    return slope, icpt, float(np.sqrt(np.mean(res * res)))


def fit_times(t_min, t_max, sampling="all", points=LOG_POINTS):
    """Abscissae of a fit window: every integer, or log-uniform integers."""
    if sampling == "all":
        return np.arange(t_min, t_max + 1)
    if sampling == "log":
        t = np.rint(np.geomspace(t_min, t_max, points)).astype(np.int64)
        return np.unique(t)
    raise ValueError(f"unknown sampling {sampling!r}; expected one of {SAMPLINGS}")


def powerlaw_fit(series, t_min, t_max, sampling="all", offset=0):
    """Least-squares exponent of sigma2 over the window [t_min, t_max].

    Parameters
    ----------
    series : MsdSeries or array_like
        MSD values indexed by t.
    t_min, t_max : int
        Inclusive window, ``1 <= t_min < t_max <= horizon``.
    sampling : {"all", "log"}
        Every integer t (default) or about 512 log-uniform integers.
    offset : int
        Regress log sigma2[t - offset] on log t.  0 is the plain fit; 1
        regresses the value one step back, which is how the
        tabulated figure exponents line up.

    Returns
    -------
    ExponentFit

    Raises
    ------
    WindowError
        If the window is empty, out of range or sigma2 is not positive on it.
    """
    s2 = np.asarray(getattr(series, "sigma2", series), dtype=float)
    t_min, t_max, offset = int(t_min), int(t_max), int(offset)
    horizon = s2.size - 1
    if not 1 <= t_min < t_max:
        raise WindowError(f"need 1 <= t_min < t_max, got [{t_min}, {t_max}]")
    if t_max > horizon or t_min - offset < 0 or offset < 0:
        raise WindowError(f"window [{t_min}, {t_max}] (offset {offset}) outside 0..{horizon}")
    t = fit_times(t_min, t_max, sampling)
    y = s2[t - offset]
    if not np.all(y > 0.0):
        raise WindowError("sigma2 must be positive on the fit window")
    beta, icpt, rms = _ols(np.log(t.astype(float)), np.log(y))
    return ExponentFit(beta, icpt, t_min, t_max, rms, int(t.size), sampling, offset)


@dataclass(frozen=True)
class SweepRow:
    q: float
    n: int
    fit: ExponentFit

    @property
    def beta(self):
        return self.fit.beta


def sweep_distribution(q, horizon, convention="model"):
    """The trapping law behind one column of a beta sweep.

    ``"model"`` is the zeta-normalised power law.  ``"figure"`` is the law
    (tau+1)^-q renormalised on tau = 0..horizon, the truncation under which
    the tabulated figure exponents are reproduced.
    """
    if convention == "model":
        return PowerLawZeta(q)
    if convention == "figure":
        return TruncatedPowerLaw(q, horizon + 1)
    raise ValueError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")


def beta_sweep(q_grid, n_list, t_min=10, convention="model", sampling="all", workers=1):
    """beta_N(q) for every q and every window [t_min, N].

    One MSD series is computed per q at max(n_list) and fitted on each
    window.  Rows are ordered by (q, N).

    Parameters
    ----------
    q_grid : sequence of float
        Exponents, all > 1.
    n_list : sequence of int
        Window ends N.
    t_min : int
    convention : {"model", "figure"}
        See ``sweep_distribution``.  The figure convention also fits with
        ``offset=1``.
    sampling : {"all", "log"}
    workers : int
        Threads across q values; the result does not depend on it.

    Returns
    -------
    list of SweepRow
    """
    qs = sorted(float(q) for q in q_grid)
    ns = sorted(int(n) for n in n_list)
    if not qs or not ns:
        return []
    if qs[0] <= 1.0:
        raise ValueError("every q must exceed 1")
    horizon = ns[-1]
    offset = 1 if convention == "figure" else 0

    def one(q):
        d = sweep_distribution(q, horizon, convention)
        series = msd_series(d, horizon)
        return [SweepRow(q, n, powerlaw_fit(series, t_min, n, sampling, offset)) for n in ns]

    if workers and workers > 1 and len(qs) > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            blocks = list(pool.map(one, qs))
    else:
        blocks = [one(q) for q in qs]
    return [row for block in blocks for row in block]


# --- sigmoidal meta-fit ------------------------------------------------------

TWO_PARAM = "TwoParam"
THREE_PARAM = "ThreeParam"

_R_GRID = np.geomspace(1e-2, 1e2, 32)
_ETA_GRID = np.geomspace(1e-1, 1e1, 32)
_C_GRID = np.geomspace(1e-3, 0.95, 16)
_PATTERN_ITERATIONS = 200
_MIN_STEP = 1e-12


@dataclass(frozen=True)
class SigmoidFit:
    model: str
    r: float
    eta: float
    c: float
    rms_residual: float

    def __call__(self, q):
        return sigmoid(q, self.r, self.eta, 0.0 if self.c is None else self.c)


def sigmoid(q, r, eta, c=0.0):
    """c + 2(1-c) / (1 + exp(r |q-3|^eta))."""
    z = r * np.abs(np.asarray(q, dtype=float) - 3.0) ** eta
    with np.errstate(over="ignore"):
        return c + 2.0 * (1.0 - c) / (1.0 + np.exp(z))


def _sse(params, q, b, three):
    # r and eta are searched in log space, c directly
    r = math.exp(params[0])
    eta = math.exp(params[1])
    c = params[2] if three else 0.0
    res = sigmoid(q, r, eta, c) - b
    val = float(np.dot(res, res))
    return val if math.isfinite(val) else math.inf


def _explore(f, x, fx, step):
    x = x.copy()
    for i in range(x.size):
        for sgn in (1.0, -1.0):
            y = x.copy()
            y[i] += sgn * step[i]
            fy = f(y)
            if fy < fx:
                x, fx = y, fy
                break
    return x, fx


def _pattern_search(f, x0, step, iterations):
    # Hooke-Jeeves: exploratory moves around the base point, then a pattern
    # move along the last improvement; halve the steps when nothing helps
    base = np.array(x0, dtype=float)
    fbase = f(base)
    step = np.array(step, dtype=float)
    for _ in range(iterations):
        x, fx = _explore(f, base, fbase, step)
        if fx < fbase:
            while True:
                trial = x + (x - base)
                base, fbase = x, fx
                x, fx = _explore(f, trial, f(trial), step)
                if not fx < fbase:
                    break
        else:
            step *= 0.5
            if np.all(step < _MIN_STEP):
                break
    return base, fbase


def sigmoid_fit(points, model=TWO_PARAM):
    """Fit beta(q) = c + 2(1-c) / (1 + exp(r |q-3|^eta)) by least squares.

    A log-spaced grid over (r, eta[, c]) (32 x 32 x 16) picks the start,
    then a deterministic pattern search refines it.  TwoParam fixes c = 0.

    Parameters
    ----------
    points : iterable of (q, beta)
    model : {"TwoParam", "ThreeParam"}

    Returns
    -------
    SigmoidFit

    Raises
    ------
    FitDiverged
        If no grid point gives a finite residual or the refinement does
        not end at a finite optimum inside the parameter range.
    """
    if model not in (TWO_PARAM, THREE_PARAM):
        raise ValueError(f"unknown model {model!r}")
    three = model == THREE_PARAM
    pts = sorted((float(q), float(b)) for q, b in points)
    need = 5 if three else 4
    if len(pts) < need:
        raise ValueError(f"{model} needs at least {need} points, got {len(pts)}")
    q = np.array([p[0] for p in pts])
    b = np.array([p[1] for p in pts])

    lr, le = np.log(_R_GRID), np.log(_ETA_GRID)
    cs = _C_GRID if three else np.zeros(1)
    zq = np.abs(q - 3.0)
    best, start = math.inf, None
    for c in cs:
        # vectorised over the (r, eta) grid
        z = _R_GRID[:, None, None] * zq[None, None, :] ** _ETA_GRID[None, :, None]
        with np.errstate(over="ignore"):
            pred = c + 2.0 * (1.0 - c) / (1.0 + np.exp(z))
        sse = np.sum((pred - b) ** 2, axis=2)
        i, j = np.unravel_index(np.argmin(sse), sse.shape)
        if sse[i, j] < best:
            best, start = float(sse[i, j]), (lr[i], le[j], c)
    if start is None or not math.isfinite(best):
        raise FitDiverged("no finite residual on the parameter grid")

    if three:
        x0 = np.array(start)
        step = np.array([lr[1] - lr[0], le[1] - le[0], 0.05])
    else:
        x0 = np.array(start[:2])
        step = np.array([lr[1] - lr[0], le[1] - le[0]])
    x, fx = _pattern_search(lambda v: _sse(v, q, b, three), x0, step, _PATTERN_ITERATIONS)
    if not math.isfinite(fx) or fx > best or np.any(np.abs(x[:2]) > 50.0):
        raise FitDiverged(f"refinement left the admissible range (sse {fx!r})")
    rms = math.sqrt(fx / q.size)
    return SigmoidFit(model, math.exp(x[0]), math.exp(x[1]), float(x[2]) if three else None, rms)


# --- slow variation ----------------------------------------------------------

@dataclass(frozen=True)
class SlowVariationProfile:
    """h[t-1] = sigma2[t] / t^beta for t = 1..N, with dyadic log-log slopes.

    ``slopes[k]`` is log2(h(2^{k+1}) / h(2^k)); ``score`` is the largest
    magnitude among them.
    """

    beta: float
    h: np.ndarray
    slopes: dict
    score: float

    def slope(self, k):
        return self.slopes[int(k)]


def slow_variation_profile(series, beta):
    """h(t) = sigma2[t] / t^beta and its local slopes on dyadic windows."""
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    s2 = np.asarray(getattr(series, "sigma2", series), dtype=float)
    n = s2.size - 1
    t = np.arange(1, n + 1, dtype=float)
    h = s2[1:] / t ** beta
    slopes = {}
    k = 0
    while 2 ** (k + 1) <= n:
        a, b = h[2 ** k - 1], h[2 ** (k + 1) - 1]
        if a > 0.0 and b > 0.0:
            slopes[k] = math.log2(b / a)
        k += 1
    score = max((abs(v) for v in slopes.values()), default=0.0)
    return SlowVariationProfile(beta, h, slopes, score)
