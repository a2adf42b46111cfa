"""Counter-based random streams and the trapping-time sampler kernels.

Every stream is Philox4x32-10 keyed by the 64-bit seed, with a 128-bit
counter whose low half is the block index and whose high half is the
stream id (the walker index in ensemble runs).  A stream therefore never
depends on how many other streams were consumed before it, which is what
makes ensemble results independent of the number of workers.

Inside numba kernels the stream state is a tuple of seven uint64 values

    (seed, stream id, next block, buffered-word flag, buffered word,
     sign-bit pool, sign bits left)

threaded through every call as ``state, value = f(state, ...)``.  Keeping
it in registers rather than in an array avoids reference counting in the
inner loops.  Hot helpers are inlined and keep loops out of conditional
branches; numba/LLVM generate much slower code otherwise.
"""

import numba as nb
import numpy as np

_M32 = np.uint64(0xFFFFFFFF)
_MUL0 = np.uint64(0xD2511F53)
_MUL1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_ZERO = np.uint64(0)
_ONE = np.uint64(1)
_SIXTYFOUR = np.uint64(64)
_INV53 = 1.0 / 9007199254740992.0
_LOG_CAP = 62.0 * np.log(2.0)

KIND_FINITE = 0
KIND_POWER = 1
KIND_GEOMETRIC = 2
KIND_FIXED = 3

GUIDE_SIZE = 1 << 14


@nb.njit(inline="always", cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on four 32-bit lanes held in uint64 values."""
    for _ in range(10):
        p0 = _MUL0 * c0
        p1 = _MUL1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _M32
        hi1 = p1 >> _S32
        lo1 = p1 & _M32
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0), lo1, (hi0 ^ c3 ^ k1), lo0
        k0 = (k0 + _W0) & _M32
        k1 = (k1 + _W1) & _M32
    return c0, c1, c2, c3


@nb.njit(inline="always", cache=True)
def make_state(seed, stream):
    return (np.uint64(seed), np.uint64(stream), _ZERO, _ZERO, _ZERO, _ZERO, _ZERO)


@nb.njit(inline="always", cache=True)
def next_u64(s):
    seed, sid, blk, has, buf, pool, bits = s
    if has == _ZERO:
        r0, r1, r2, r3 = philox4x32(blk & _M32, blk >> _S32, sid & _M32, sid >> _S32,
                                    seed & _M32, seed >> _S32)
        out = (r0 << _S32) | r1
        buf = (r2 << _S32) | r3
        blk = blk + _ONE
        has = _ONE
    else:
        out = buf
        has = _ZERO
    return (seed, sid, blk, has, buf, pool, bits), out


@nb.njit(inline="always", cache=True)
def next_uniform(s):
    """Uniform on (0, 1] with 53 random bits; never returns 0."""
    s, x = next_u64(s)
    return s, float((x >> _S11) + _ONE) * _INV53


@nb.njit(inline="always", cache=True)
def next_sign(s):
    """+1 or -1, one bit of a pooled 64-bit word."""
    if s[6] == _ZERO:
        s, x = next_u64(s)
        s = (s[0], s[1], s[2], s[3], s[4], x, _SIXTYFOUR)
    pool = s[5]
    b = np.int64(pool & _ONE)
    s = (s[0], s[1], s[2], s[3], s[4], pool >> _ONE, s[6] - _ONE)
    return s, 2 * b - 1


@nb.njit(inline="always", cache=True)
def _load(arr):
    return (arr[0], arr[1], arr[2], arr[3], arr[4], arr[5], arr[6])


@nb.njit(inline="always", cache=True)
def _store(arr, s):
    for i in range(7):
        arr[i] = s[i]


class RandomStream:
    """A reproducible random stream identified by ``(seed, stream)``.

    Parameters
    ----------
    seed : int
        64-bit key.
    stream : int, optional
        64-bit stream id; distinct ids give independent sequences.
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        self.state = np.zeros(7, dtype=np.uint64)
        self.state[0] = self.seed
        self.state[1] = self.stream

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream={self.stream})"

    def integers64(self, size):
        """Raw 64-bit words."""
        return _fill_u64(self.state, int(size))

    def uniform(self, size):
        """Uniforms on (0, 1]."""
        return _fill_uniform(self.state, int(size))


@nb.njit(cache=True)
def _fill_u64(arr, n):
    s = _load(arr)
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        s, x = next_u64(s)
        out[i] = x
    _store(arr, s)
    return out


@nb.njit(cache=True)
def _fill_uniform(arr, n):
    s = _load(arr)
    out = np.empty(n)
    for i in range(n):
        s, u = next_uniform(s)
        out[i] = u
    _store(arr, s)
    return out


# --- trapping-time sampler -------------------------------------------------
#
# ``tails[k] = P(T >= k)`` for k = 0..L.  Given U in (0, 1], the draw is the
# smallest k < L with tails[k+1] < U (inverse CDF written on the tail side,
# which keeps full relative precision where the tail is small).  U <= tails[L]
# is the event T >= L, which only the power law can reach (finite tables end
# at tails[L] = 0).  The geometric law bypasses the table and is inverted in
# closed form.


@nb.njit(inline="always", cache=True)
def _invert(tails, u, lo, hi):
    while lo < hi:
        mid = (lo + hi) >> 1
        if tails[mid + 1] < u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@nb.njit(cache=True)
def build_guide(tails, size):
    """Search brackets for buckets ``[j/size, (j+1)/size]`` of U."""
    L = tails.size - 1
    lo = np.empty(size, dtype=np.int64)
    hi = np.empty(size, dtype=np.int64)
    for j in range(size):
        hi[j] = L - 1 if j == 0 else _invert(tails, j / size, 0, L - 1)
        lo[j] = _invert(tails, (j + 1) / size, 0, L - 1)
    return lo, hi


@nb.njit(cache=True)
def _power_tail(s, q, L):
    # T >= L, P(T = k - 1) proportional to k^-q for k >= L + 1.  Propose
    # Y with density ~ y^-q on [L + 1/2, inf), round to k, accept with the
    # exact ratio of k^-q to the proposal mass of [k - 1/2, k + 1/2).
    # Draws above 2^62 are clamped there; any horizon is far shorter.
    a = q - 1.0
    while True:
        s, u = next_uniform(s)
        s, v = next_uniform(s)
        logy = np.log(L + 0.5) - np.log(u) / a
        if logy >= _LOG_CAP:
            return s, np.int64(1) << np.int64(62)
        k = np.floor(np.exp(logy) + 0.5)
        x = 0.5 / k
        denom = k * (np.expm1(-a * np.log1p(-x)) - np.expm1(-a * np.log1p(x)))
        if v * denom <= a:
            return s, np.int64(k) - 1


@nb.njit(inline="always", cache=True)
def draw_trap(s, kind, tails, glo, ghi, param, fixed):
    """One trapping time; returns ``(state, tau)``.

    A fixed law consumes no randomness.
    """
    u = 1.0
    if kind != KIND_FIXED:
        s, u = next_uniform(s)
    g = glo.size
    j = int(u * g)
    if j >= g:
        j = g - 1
    r = _invert(tails, u, glo[j], ghi[j])
    L = tails.size - 1
    if kind == KIND_POWER and u <= tails[L]:
        s, r = _power_tail(s, param, L)
    if kind == KIND_GEOMETRIC:
        # P(floor(log U / log lam) >= k) = P(U <= lam^k) = lam^k
        r = np.int64(np.log(u) / param)
    if kind == KIND_FIXED:
        r = fixed
    return s, r


@nb.njit(cache=True)
def draw_many(arr, kind, tails, glo, ghi, param, fixed, n):
    s = _load(arr)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        s, r = draw_trap(s, kind, tails, glo, ghi, param, fixed)
        out[i] = r
    _store(arr, s)
    return out
