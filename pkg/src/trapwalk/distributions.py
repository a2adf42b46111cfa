"""Trapping-time laws p(tau) on the non-negative integers.

Four variants are provided:

* ``Exponential(lam)``: geometric law p(tau) = (1 - lam) lam^tau.
* ``PowerLawZeta(q)``: p(tau) = (tau + 1)^-q / zeta(q).
* ``Deterministic(tau0)``: point mass at tau0.
* ``Custom``: finite table, usually loaded from a ``tau,prob`` CSV file.

``TruncatedPowerLaw(q, support)`` is a finite-support power law
(tau + 1)^-q normalised over tau < support.  It is used to reproduce
exponent tables computed with a truncated normaliser.

Moments that diverge are returned as ``math.inf``; finite values are
computed with a certified tail bound, so ``inf`` never arises from
floating overflow.
"""

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import binom

from . import _rng
from .errors import DomainError, InfiniteMean, ParseError, ValidationError
from .zeta import hurwitz_zeta, zeta

__all__ = [
    "TrappingDistribution", "Exponential", "PowerLawZeta", "Deterministic",
    "Custom", "TruncatedPowerLaw", "parse_spec", "load_custom_csv",
    "MAX_TABLE_SUPPORT",
]

MAX_TABLE_SUPPORT = 1 << 26
POWER_TABLE_CUTOFF = 1 << 20
GEOMETRIC_TABLE_MAX = 1 << 22


def _as_tau(tau):
    arr = np.asarray(tau)
    if arr.dtype.kind not in "iu":
        if not np.all(arr == np.floor(arr)):
            raise DomainError("trapping times are integers")
        arr = arr.astype(np.int64)
    if np.any(arr < 0):
        raise DomainError("trapping times are non-negative")
    return arr.astype(np.int64)


def _scalar_or_array(tau, fn):
    arr = _as_tau(tau)
    out = fn(np.atleast_1d(arr).ravel())
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


class TrappingDistribution:
    """Common interface of all trapping-time laws.

    Subclasses implement ``_pmf`` and ``_tail`` on int64 arrays and the
    moment routine ``_moment(alpha, center)`` returning
    E|T - center|^alpha (``math.inf`` when divergent).
    """

    spec = ""

    # --- point values ---------------------------------------------------
    def pmf(self, tau):
        """P(T = tau); scalar or array input."""
        return _scalar_or_array(tau, self._pmf)

    def tail(self, tau):
        """P(T >= tau); scalar or array input."""
        return _scalar_or_array(tau, self._tail)

    def pmf_array(self, n):
        """pmf(0), ..., pmf(n - 1)."""
        return self._pmf(np.arange(n, dtype=np.int64))

    def tail_array(self, n):
        """tail(0), ..., tail(n - 1)."""
        return self._tail(np.arange(n, dtype=np.int64))

    def cdf_array(self, n):
        """P(T <= t) for t = 0..n-1, computed as 1 - tail(t + 1)."""
        return 1.0 - self._tail(np.arange(1, n + 1, dtype=np.int64))

    @property
    def p0(self):
        return float(self._pmf(np.zeros(1, dtype=np.int64))[0])

    # --- moments --------------------------------------------------------
    def moment(self, alpha):
        """E(T^alpha) for alpha > 0, ``math.inf`` when divergent."""
        alpha = float(alpha)
        if not alpha > 0:
            raise DomainError("moment order must be positive")
        return self._moment(alpha, 0.0)

    @property
    def mean(self):
        return self.moment(1.0)

    def centered_abs_moment(self, alpha):
        """E|T - E(T)|^alpha; raises InfiniteMean when E(T) is infinite."""
        alpha = float(alpha)
        if not alpha > 0:
            raise DomainError("moment order must be positive")
        m = self.mean
        if math.isinf(m):
            raise InfiniteMean(f"{self.spec}: E(T) is infinite")
        return self._moment(alpha, m)

    def diffusion_coefficient(self):
        """D = 1 / (E(T) + 1)."""
        m = self.mean
        if math.isinf(m):
            raise InfiniteMean(f"{self.spec}: E(T) is infinite")
        return 1.0 / (m + 1.0)

    def stationary(self, tau):
        """Stationary law of the countdown chain, pi(tau) = D * P(T >= tau)."""
        return self.diffusion_coefficient() * self.tail(tau)

    def first_moment_tail(self, k):
        """sum_{tau >= k} tau p(tau) for an array of cut points ``k``."""
        k = np.atleast_1d(_as_tau(k))
        return self._first_moment_tail(k)

    # --- sampling -------------------------------------------------------
    def sampler(self):
        """Arguments ``(kind, tails, guide_lo, guide_hi, param, fixed)``
        of the compiled sampler."""
        return self._sampler

    def sample(self, rng, size=None):
        """Exact draws from p using a ``RandomStream`` (or an integer seed)."""
        if not isinstance(rng, _rng.RandomStream):
            rng = _rng.RandomStream(rng)
        n = 1 if size is None else int(size)
        out = _rng.draw_many(rng.state, *self._sampler, n)
        return int(out[0]) if size is None else out

    @cached_property
    def _sampler(self):
        kind, tails, param, fixed = self._sampler_table()
        tails = np.ascontiguousarray(tails, dtype=np.float64)
        if kind == _rng.KIND_FIXED:
            glo = ghi = np.zeros(1, dtype=np.int64)
        else:
            glo, ghi = _rng.build_guide(tails, _rng.GUIDE_SIZE)
        return kind, tails, glo, ghi, float(param), np.int64(fixed)

    def __str__(self):
        return self.spec


def _geometric_moment(lam, alpha, center):
    # direct summation; the ratio of successive terms beyond the centre
    # decreases to lam, which gives a geometric bound on the remainder
    total = 0.0
    start = 0
    chunk = 4096
    while True:
        tau = np.arange(start, start + chunk, dtype=float)
        terms = np.abs(tau - center) ** alpha * (1.0 - lam) * lam ** tau
        total += terms.sum()
        last = tau[-1]
        nxt = last + 1.0
        if nxt > center + 1.0:
            ratio = ((nxt + 1.0 - center) / (nxt - center)) ** alpha * lam
            if ratio < 1.0:
                bound = abs(nxt - center) ** alpha * (1.0 - lam) * lam ** nxt / (1.0 - ratio)
                if bound <= 1e-13 * max(total, 1e-300) or bound < 1e-300:
                    return total
        start += chunk


@dataclass(frozen=True)
class Exponential(TrappingDistribution):
    """Geometric trapping time, p(tau) = (1 - lam) lam^tau, 0 < lam < 1."""

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not 0.0 < lam < 1.0:
            raise ValidationError(f"exponential parameter must lie in (0, 1), got {lam}")
        object.__setattr__(self, "lam", lam)

    @property
    def spec(self):
        return f"exp:{self.lam!r}"

    def _pmf(self, tau):
        return (1.0 - self.lam) * np.power(self.lam, tau.astype(float))

    def _tail(self, tau):
        return np.power(self.lam, tau.astype(float))

    def _moment(self, alpha, center):
        if alpha == 1.0 and center == 0.0:
            return self.lam / (1.0 - self.lam)
        return _geometric_moment(self.lam, alpha, center)

    def _first_moment_tail(self, k):
        kf = k.astype(float)
        return np.power(self.lam, kf) * (kf + self.lam / (1.0 - self.lam))

    def _sampler_table(self):
        # Table inversion is about twice as fast as floor(log U / log lam).
        # The table stops where lam^L < 2^-64, below the smallest uniform
        # (2^-53), so the cut is never reached.  Laws too close to lam = 1
        # for a table fall back to the closed form.
        log_lam = math.log(self.lam)
        size = math.ceil(-64.0 * math.log(2.0) / log_lam) + 1
        if size > GEOMETRIC_TABLE_MAX:
            return _rng.KIND_GEOMETRIC, np.array([1.0, 0.0]), log_lam, 0
        tails = np.power(self.lam, np.arange(size + 1, dtype=float))
        tails[-1] = 0.0
        return _rng.KIND_FINITE, tails, 0.0, 0


@dataclass(frozen=True)
class PowerLawZeta(TrappingDistribution):
    """Power-law trapping time, p(tau) = (tau + 1)^-q / zeta(q), q > 1."""

    q: float
    norm: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = float(self.q)
        if not q > 1.0 or not math.isfinite(q):
            raise ValidationError(f"power-law exponent must exceed 1, got {q}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "norm", zeta(q))

    @property
    def spec(self):
        return f"zeta:{self.q!r}"

    def _pmf(self, tau):
        return (tau + 1.0) ** -self.q / self.norm

    def _tail(self, tau):
        out = np.ones(tau.shape)
        pos = tau > 0
        if np.any(pos):
            out[pos] = hurwitz_zeta(self.q, tau[pos] + 1.0) / self.norm
        return out

    def _moment(self, alpha, center):
        q = self.q
        if alpha >= q - 1.0:
            return math.inf
        if alpha == 1.0 and center == 0.0:
            return zeta(q - 1.0) / self.norm - 1.0
        # head: tau < K summed directly; tail: with u = tau + 1 and
        # c = center + 1, (u - c)^alpha u^-q = sum_j C(alpha, j) (-c)^j u^(alpha-q-j)
        # and every power sums to a Hurwitz zeta; c / (K + 1) < 1/4.
        c = center + 1.0
        K = 32 + 4 * int(math.ceil(c))
        tau = np.arange(K, dtype=float)
        head = float(np.sum(np.abs(tau - center) ** alpha * (tau + 1.0) ** -q))
        tail = 0.0
        for j in range(400):
            coef = binom(alpha, j) * (-c) ** j
            if coef == 0.0:
                break
            term = coef * hurwitz_zeta(q - alpha + j, K + 1.0)
            tail += term
            if j > alpha and abs(term) <= 1e-18 * (head + abs(tail)):
                break
        return (head + tail) / self.norm

    def _first_moment_tail(self, k):
        if self.q <= 2.0:
            return np.full(k.shape, math.inf)
        a = k + 1.0
        return (hurwitz_zeta(self.q - 1.0, a) - hurwitz_zeta(self.q, a)) / self.norm

    def _sampler_table(self):
        return _rng.KIND_POWER, self.tail_array(POWER_TABLE_CUTOFF + 1), self.q, 0


@dataclass(frozen=True)
class Deterministic(TrappingDistribution):
    """Point mass at ``tau0``."""

    tau0: int

    def __post_init__(self):
        t0 = self.tau0
        if isinstance(t0, float):
            if not t0.is_integer():
                raise ValidationError(f"deterministic trap must be an integer, got {t0}")
            t0 = int(t0)
        t0 = int(t0)
        if t0 < 0:
            raise ValidationError(f"deterministic trap must be non-negative, got {t0}")
        object.__setattr__(self, "tau0", t0)

    @property
    def spec(self):
        return f"det:{self.tau0}"

    def _pmf(self, tau):
        return (tau == self.tau0).astype(float)

    def _tail(self, tau):
        return (tau <= self.tau0).astype(float)

    def _moment(self, alpha, center):
        return abs(self.tau0 - center) ** alpha

    def _first_moment_tail(self, k):
        return np.where(k <= self.tau0, float(self.tau0), 0.0)

    def _sampler_table(self):
        return _rng.KIND_FIXED, np.ones(1), 0.0, self.tau0


class _FiniteTable(TrappingDistribution):
    """Shared machinery for laws with a dense finite pmf table."""

    def _dense(self):
        raise NotImplementedError

    @cached_property
    def _tables(self):
        p = self._dense()
        # tails[k] = sum_{j >= k} p[j], summed from the small end
        tails = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])
        tails[0] = 1.0
        taus = np.arange(p.size, dtype=float)
        m1 = np.concatenate([np.cumsum((taus * p)[::-1])[::-1], [0.0]])
        return p, tails, m1

    def _pmf(self, tau):
        p = self._tables[0]
        out = np.zeros(tau.shape)
        inside = tau < p.size
        out[inside] = p[tau[inside]]
        return out

    def _tail(self, tau):
        tails = self._tables[1]
        return tails[np.minimum(tau, tails.size - 1)]

    def _first_moment_tail(self, k):
        m1 = self._tables[2]
        return m1[np.minimum(k, m1.size - 1)]

    def _moment(self, alpha, center):
        p = self._tables[0]
        taus = np.arange(p.size, dtype=float)
        nz = p > 0
        return float(np.sum(np.abs(taus[nz] - center) ** alpha * p[nz]))

    def _sampler_table(self):
        return _rng.KIND_FINITE, self._tables[1], 0.0, 0


@dataclass(frozen=True)
class Custom(_FiniteTable):
    """Finite trapping law given as ``(tau, prob)`` pairs summing to 1.

    Parameters
    ----------
    items : sequence of (int, float)
        Support points with their probabilities, in any order.
    label : str, optional
        Spec string used in reports, e.g. ``custom:path.csv``.
    """

    items: tuple
    label: str = field(default="custom", compare=False)

    def __post_init__(self):
        pairs = {}
        for tau, prob in self.items:
            tau_i = int(tau)
            if tau_i != tau or tau_i < 0:
                raise ValidationError(f"invalid trapping time {tau!r}")
            prob = float(prob)
            if not (prob >= 0.0 and math.isfinite(prob)):
                raise ValidationError(f"invalid probability {prob!r} at tau={tau_i}")
            if tau_i in pairs:
                raise ValidationError(f"duplicate trapping time {tau_i}")
            pairs[tau_i] = prob
        if not pairs:
            raise ValidationError("custom law needs at least one support point")
        total = math.fsum(pairs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"custom probabilities sum to {total!r}, not 1")
        if max(pairs) >= MAX_TABLE_SUPPORT:
            raise ValidationError(f"custom support exceeds {MAX_TABLE_SUPPORT}")
        object.__setattr__(self, "items", tuple(sorted(pairs.items())))

    @property
    def spec(self):
        return self.label

    def _dense(self):
        top = self.items[-1][0]
        p = np.zeros(top + 1)
        for tau, prob in self.items:
            p[tau] = prob
        return p / math.fsum(p)


@dataclass(frozen=True)
class TruncatedPowerLaw(_FiniteTable):
    """p(tau) proportional to (tau + 1)^-q on tau = 0..support-1."""

    q: float
    support: int

    def __post_init__(self):
        q = float(self.q)
        if not math.isfinite(q) or q <= 0.0:
            raise ValidationError(f"truncated power-law exponent must be positive, got {q}")
        n = int(self.support)
        if n < 1 or n > MAX_TABLE_SUPPORT:
            raise ValidationError(f"support size must lie in [1, {MAX_TABLE_SUPPORT}]")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "support", n)

    @property
    def spec(self):
        return f"zetatrunc:{self.q!r}:{self.support}"

    def _dense(self):
        w = np.arange(1, self.support + 1, dtype=float) ** -self.q
        return w / math.fsum(w)


def load_custom_csv(path):
    """Read a ``tau,prob`` table with an optional final ``tail,<prob>`` row.

    The ``tail`` row assigns its mass to the single atom following the last
    listed trapping time.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read custom law file {path!r}: {exc}") from exc
    with fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["tau", "prob"]:
        raise ValidationError(f"{path}: expected header 'tau,prob'")
    items = []
    last = -1
    tail_mass = None
    for lineno, row in enumerate(rows[1:], start=2):
        if tail_mass is not None:
            raise ValidationError(f"{path}:{lineno}: rows after the tail row")
        if len(row) != 2:
            raise ValidationError(f"{path}:{lineno}: expected two columns")
        key, val = row[0].strip(), row[1].strip()
        try:
            prob = float(val)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad probability {val!r}") from None
        if key == "tail":
            tail_mass = prob
            continue
        try:
            tau = int(key)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad trapping time {key!r}") from None
        if tau <= last:
            raise ValidationError(f"{path}:{lineno}: trapping times must increase")
        last = tau
        items.append((tau, prob))
    if tail_mass is not None:
        items.append((last + 1, tail_mass))
    return Custom(tuple(items), label=f"custom:{path}")


def _number(text, start, kind):
    try:
        return kind(text)
    except ValueError:
        raise ParseError(f"expected a number, got {text!r}", position=start) from None


def parse_spec(text):
    """Build a distribution from ``exp:<lam>``, ``zeta:<q>``, ``det:<tau0>``,
    ``custom:<path>`` or ``zetatrunc:<q>:<support>``."""
    if not isinstance(text, str):
        raise ParseError("distribution spec must be a string", position=0)
    s = text.strip()
    head, sep, rest = s.partition(":")
    if not sep:
        raise ParseError(f"missing ':' in distribution spec {text!r}", position=len(s))
    pos = len(head) + 1
    if head == "custom":
        if not rest:
            raise ParseError("missing path", position=pos)
        return load_custom_csv(rest)
    if head == "exp":
        return Exponential(_number(rest, pos, float))
    if head == "zeta":
        return PowerLawZeta(_number(rest, pos, float))
    if head == "det":
        return Deterministic(_number(rest, pos, int))
    if head == "zetatrunc":
        qtext, sep2, ntext = rest.partition(":")
        if not sep2:
            raise ParseError("expected zetatrunc:<q>:<support>", position=pos + len(rest))
        return TruncatedPowerLaw(_number(qtext, pos, float),
                                 _number(ntext, pos + len(qtext) + 1, int))
    raise ParseError(f"unknown distribution kind {head!r}", position=0)
