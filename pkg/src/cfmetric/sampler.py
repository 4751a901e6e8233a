"""Exact sampling of Gauss-distributed partial-quotient sequences.

Two engines, both exactly mu-distributed and deterministic in
(seed, stream index):

* GaussDigitStream - one point x = 2^U - 1 with U built from lazy random
  bits; keeps an exact rational enclosure of x and emits a digit only once
  every point of the enclosure shares it.  The faithful-but-heavy engine.

* BulkDigitStream - level-synchronous sampling of many streams at once.
  Given the digits so far, the tail y = T^k x has conditional density
  proportional to 1/((1 + beta y)(1 + gamma y)) where beta = (p+q)'/(p+q)
  and gamma = q'/q both update as z -> 1/(a+z).  Each digit is drawn by
  inverting the conditional CDF against a 53-bit uniform; every decision is
  verified against rigorous float interval bounds, and the rare ambiguous
  case is settled exactly (window continuants + mpmath + more uniform bits).

Randomness comes from a splitmix64 counter generator keyed by
(seed, stream, level, round), so results are independent of worker count.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from .cfcore import DomainError

U64 = np.uint64
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_M64 = (1 << 64) - 1

# domain separators for the different consumers of the bit source
_DOM_VBITS = 0x9D8F0A6B42E1C753
_DOM_UBITS = 0x51E2B8A7C3F09D15

TWO_NEG53 = 2.0**-53
_SLOP = 1e-13  # relative widening that dominates float rounding in F
PER_DIGIT_BIT_BUDGET = 4096


def _mix_scalar(x: int) -> int:
    z = (x + _GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * _MIX1) & _M64
    z = ((z ^ (z >> 27)) * _MIX2) & _M64
    return z ^ (z >> 31)


def _mix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + U64(_GOLDEN)
        z = (z ^ (z >> U64(30))) * U64(_MIX1)
        z = (z ^ (z >> U64(27))) * U64(_MIX2)
        return z ^ (z >> U64(31))


def _word_scalar(seed: int, domain: int, stream: int, ctr: int, rnd: int = 0) -> int:
    h = _mix_scalar((seed ^ domain) & _M64)
    h = _mix_scalar(h ^ (stream & _M64))
    h = _mix_scalar(h ^ (ctr & _M64))
    if rnd:
        h = _mix_scalar(h ^ (rnd & _M64))
    return h


def _words(seed: int, domain: int, streams: np.ndarray, ctr: int, rnd: int = 0) -> np.ndarray:
    h = U64(_mix_scalar((seed ^ domain) & _M64))
    h = _mix(h ^ streams.astype(U64))
    h = _mix(h ^ U64(ctr & _M64))
    if rnd:
        h = _mix(h ^ U64(rnd & _M64))
    return h


# ---------------------------------------------------------------------------
# conditional CDF of the tail given the (beta, gamma) state
# ---------------------------------------------------------------------------


def _phi(p, q):
    """Divided difference (ln(1+p) - ln(1+q)) / (p - q), stable near p = q.

    Decreasing in both arguments, which is what makes interval evaluation a
    one-liner."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = p - q
    safe = np.where(d == 0.0, 1.0, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log1p(safe / (1.0 + q)) / safe
    return np.where(d == 0.0, 1.0 / (1.0 + p), out)


def _cdf_bounds(u, blo, bhi, glo, ghi):
    """Rigorous enclosure of F(u) = u Phi(beta u, gamma u) / Phi(beta, gamma)."""
    z_lo = _phi(bhi, ghi) * (1.0 - _SLOP)
    z_hi = _phi(blo, glo) * (1.0 + _SLOP)
    n_lo = u * _phi(bhi * u, ghi * u) * (1.0 - _SLOP)
    n_hi = u * _phi(blo * u, glo * u) * (1.0 + _SLOP)
    return n_lo / z_hi, n_hi / z_lo


def _cdf_mid(u, b, g, z):
    return u * _phi(b * u, g * u) / z


# ---------------------------------------------------------------------------
# exact scalar fallback
# ---------------------------------------------------------------------------


def _window_state_bounds(rev_digits, full_history):
    """Enclosure of beta = [0; a_k..a_1+1] and gamma = [0; a_k..a_1] from the
    most-recent-first digit window.

    With the full history both are exact; a truncated window pins both inside
    the closed cylinder of the reversed word, width <= 1/q_w^2.
    """
    if not rev_digits:
        one = Fraction(1)
        zero = Fraction(0)
        return one, one, zero, zero
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for a in rev_digits:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
    if full_history:
        gamma = Fraction(p, q)
        # same digits but innermost a_1 bumped to a_1 + 1
        bp_prev, bq_prev, bp, bq = 1, 0, 0, 1
        for a in rev_digits[:-1]:
            bp_prev, bq_prev, bp, bq = bp, bq, a * bp + bp_prev, a * bq + bq_prev
        a_last = rev_digits[-1] + 1
        beta = Fraction(a_last * bp + bp_prev, a_last * bq + bq_prev)
        return beta, beta, gamma, gamma
    lo = Fraction(p, q)
    hi = Fraction(p + p_prev, q + q_prev)
    if lo > hi:
        lo, hi = hi, lo
    return lo, hi, lo, hi


def _exact_digit(
    seed: int,
    stream: int,
    level: int,
    rev_digits: list,
    full_history: bool,
    bit_budget: int = PER_DIGIT_BIT_BUDGET,
) -> int:
    """Draw one digit exactly: rigorous mpmath CDF enclosures against a lazily
    refined dyadic uniform.  Used when the float fast path cannot separate."""
    from mpmath import mp, mpf

    v_num = _word_scalar(seed, _DOM_VBITS, stream, level) >> 11
    v_bits = 53
    rnd = 0
    window = min(len(rev_digits), 48)
    dps = 40

    def state():
        full = full_history and window >= len(rev_digits)
        return _window_state_bounds(rev_digits[:window], full)

    blo, bhi, glo, ghi = state()

    def f_bounds(u: Fraction):
        with mp.workdps(dps):
            eps = mpf(10) ** (8 - dps)
            uu = mpf(u.numerator) / mpf(u.denominator)

            def phi(p, q):
                if p == q:
                    return 1 / (1 + p)
                return mp.log1p((p - q) / (1 + q)) / (p - q)

            def mpr(fr):
                return mpf(fr.numerator) / mpf(fr.denominator)

            z_lo = phi(mpr(bhi), mpr(ghi)) * (1 - eps)
            z_hi = phi(mpr(blo), mpr(glo)) * (1 + eps)
            n_lo = uu * phi(mpr(bhi) * uu, mpr(ghi) * uu) * (1 - eps)
            n_hi = uu * phi(mpr(blo) * uu, mpr(glo) * uu) * (1 + eps)
            return n_lo / z_hi, n_hi / z_lo

    def compare(u: Fraction) -> Optional[bool]:
        """True if V < F(u); False if V > F(u); None if undecided."""
        nonlocal v_num, v_bits, rnd, window, dps, blo, bhi, glo, ghi
        while True:
            f_lo, f_hi = f_bounds(u)
            with mp.workdps(dps):
                v_lo = mpf(v_num) / mpf(2) ** v_bits
                v_hi = mpf(v_num + 1) / mpf(2) ** v_bits
                if v_lo >= f_hi:
                    return False
                if v_hi <= f_lo:
                    return True
            if v_bits + 64 <= bit_budget:
                rnd += 1
                extra = _word_scalar(seed, _DOM_VBITS, stream, level, rnd)
                v_num = (v_num << 64) | extra
                v_bits += 64
                continue
            if window < len(rev_digits) or dps < 400:
                window = min(len(rev_digits), window * 2 or 1)
                dps = min(400, dps * 2)
                blo, bhi, glo, ghi = state()
                continue
            raise RuntimeError(
                f"digit undecidable within {bit_budget}-bit budget "
                f"(stream {stream}, level {level})"
            )

    # doubling to bracket the digit, then bisection
    hi = 2
    while compare(Fraction(1, hi)):
        hi *= 2
        if hi > 1 << 200:
            raise RuntimeError("runaway digit search")
    lo = hi // 2  # V <= F(1/lo) held (or lo == 1, where F(1) = 1 > V)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if compare(Fraction(1, mid)):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# bulk engine
# ---------------------------------------------------------------------------

_HIST_WINDOW = 160


class BulkDigitStream:
    """Level-synchronous exact sampler for a block of streams.

    start="gauss" draws x from the Gauss measure, start="lebesgue" from the
    uniform measure (both give the exact digit process of the measure).
    """

    def __init__(self, seed: int, n_streams: int, stream_offset: int = 0,
                 start: str = "gauss"):
        if n_streams < 1:
            raise DomainError("need at least one stream")
        self.seed = int(seed)
        self.streams = np.arange(stream_offset, stream_offset + n_streams, dtype=np.int64)
        self.level = 0
        if start == "gauss":
            b0, g0 = 1.0, 0.0
        elif start == "lebesgue":
            b0, g0 = 0.0, 0.0
        else:
            raise DomainError("start must be 'gauss' or 'lebesgue'")
        n = n_streams
        self.blo = np.full(n, b0)
        self.bhi = np.full(n, b0)
        self.glo = np.full(n, g0)
        self.ghi = np.full(n, g0)
        self.hist = np.zeros((n, _HIST_WINDOW), dtype=np.int64)
        self.fallbacks = 0

    def _newton_guess(self, v):
        b = 0.5 * (self.blo + self.bhi)
        g = 0.5 * (self.glo + self.ghi)
        z = _phi(b, g)
        u = np.exp2(v) - 1.0
        np.clip(u, 1e-18, 1.0 - 1e-16, out=u)
        for _ in range(8):
            fu = _cdf_mid(u, b, g, z)
            dens = 1.0 / ((1.0 + b * u) * (1.0 + g * u) * z)
            u -= (fu - v - TWO_NEG53 * 0.5) / dens
            np.clip(u, 1e-18, 1.0 - 1e-16, out=u)
        return u

    def step(self) -> np.ndarray:
        """Sample the next digit of every stream."""
        n = len(self.streams)
        v = (_words(self.seed, _DOM_VBITS, self.streams.view(np.uint64),
                    self.level) >> U64(11)).astype(np.float64) * TWO_NEG53
        u = self._newton_guess(v)
        with np.errstate(divide="ignore", over="ignore"):
            d = np.floor(1.0 / u).astype(np.int64)
        np.clip(d, 1, 1 << 50, out=d)

        digits = np.zeros(n, dtype=np.int64)
        undecided = np.ones(n, dtype=bool)
        for _ in range(80):
            idx = np.nonzero(undecided)[0]
            if idx.size == 0:
                break
            dd = d[idx].astype(np.float64)
            blo, bhi = self.blo[idx], self.bhi[idx]
            glo, ghi = self.glo[idx], self.ghi[idx]
            vv = v[idx]
            f_lo_in, f_hi_in = _cdf_bounds(1.0 / (dd + 1.0), blo, bhi, glo, ghi)
            f_lo_out, f_hi_out = _cdf_bounds(1.0 / dd, blo, bhi, glo, ghi)
            ok = (vv >= f_hi_in) & (vv + TWO_NEG53 <= f_lo_out)
            move_dn = vv >= f_hi_out                # V > F(1/d): digit < d
            move_up = vv + TWO_NEG53 <= f_lo_in     # V <= F(1/(d+1)): digit > d
            stuck = ~(ok | move_dn | move_up)
            take = idx[ok]
            digits[take] = d[take]
            undecided[take] = False
            d[idx[move_dn]] -= 1
            d[idx[move_up]] += 1
            if np.any(stuck):
                for j in idx[stuck]:
                    digits[j] = self._fallback(int(j))
                    undecided[j] = False
        else:
            for j in np.nonzero(undecided)[0]:
                digits[j] = self._fallback(int(j))
                undecided[j] = False
        if np.any(undecided):
            for j in np.nonzero(undecided)[0]:
                digits[j] = self._fallback(int(j))

        self._advance(digits)
        return digits

    def _fallback(self, j: int) -> int:
        self.fallbacks += 1
        w = min(self.level, _HIST_WINDOW)
        # most recent first
        rev = [int(self.hist[j, (self.level - 1 - k) % _HIST_WINDOW]) for k in range(w)]
        return _exact_digit(
            self.seed, int(self.streams[j]), self.level, rev,
            full_history=self.level <= _HIST_WINDOW,
        )

    def _advance(self, digits: np.ndarray) -> None:
        d = digits.astype(np.float64)
        # z -> 1/(d+z) is decreasing, so ends swap; outward rounding keeps the
        # enclosure rigorous
        new_blo = np.nextafter(1.0 / np.nextafter(d + self.bhi, np.inf), 0.0)
        new_bhi = np.nextafter(1.0 / np.nextafter(d + self.blo, -np.inf), np.inf)
        new_glo = np.nextafter(1.0 / np.nextafter(d + self.ghi, np.inf), 0.0)
        new_ghi = np.nextafter(1.0 / np.nextafter(d + self.glo, -np.inf), np.inf)
        self.blo, self.bhi = new_blo, new_bhi
        self.glo, self.ghi = new_glo, new_ghi
        self.hist[:, self.level % _HIST_WINDOW] = digits
        self.level += 1


def sample_digit_matrix(
    seed: int,
    n_streams: int,
    depth: int,
    stream_offset: int = 0,
    start: str = "gauss",
) -> np.ndarray:
    """Digits a_1..a_depth for a block of streams, shape (n_streams, depth)."""
    if n_streams * depth > 80_000_000:
        raise DomainError("digit budget exceeded; sample fewer streams or digits")
    eng = BulkDigitStream(seed, n_streams, stream_offset, start)
    out = np.empty((n_streams, depth), dtype=np.int64)
    for k in range(depth):
        out[:, k] = eng.step()
    return out


def sample_iid_gauss_kuzmin(seed: int, n_streams: int, depth: int,
                            stream_offset: int = 0) -> np.ndarray:
    """i.i.d. digits with the Gauss-Kuzmin marginal (speed-over-exactness
    mode; the digit process loses its cross-position dependence)."""
    streams = np.arange(stream_offset, stream_offset + n_streams, dtype=np.int64)
    out = np.empty((n_streams, depth), dtype=np.int64)
    for k in range(depth):
        v = (_words(seed ^ 0x1D, _DOM_VBITS, streams.view(np.uint64), k)
             >> U64(11)).astype(np.float64) * TWO_NEG53
        x = np.exp2(v) - 1.0
        np.clip(x, 1e-300, 1.0, out=x)
        out[:, k] = np.floor(1.0 / x).astype(np.int64)
    return out


# ---------------------------------------------------------------------------
# single-point interval-refinement stream
# ---------------------------------------------------------------------------


def _isqrt_interval(lo: int, hi: int, prec: int) -> tuple[int, int]:
    """Directed-rounding sqrt of [lo, hi] * 2^-prec at the same scale."""
    s_lo = math.isqrt(lo << prec)
    s_hi = math.isqrt(hi << prec)
    if s_hi * s_hi < (hi << prec):
        s_hi += 1
    return s_lo, s_hi


class _RootChain:
    """Enclosures of 2^(2^-k) at a common precision, grown on demand."""

    def __init__(self):
        self.prec = 0
        self.chain: list[tuple[int, int]] = []

    def get(self, k: int, prec: int) -> tuple[int, int, int]:
        if prec > self.prec:
            self.prec = prec
            self.chain = [(2 << prec, 2 << prec)]
        while k >= len(self.chain):
            self.chain.append(_isqrt_interval(*self.chain[-1], self.prec))
        lo, hi = self.chain[k]
        return lo, hi, self.prec


_roots = _RootChain()


class GaussDigitStream:
    """Exact digits of one Gauss-distributed point, by interval refinement.

    The point is x = 2^U - 1 with U uniform on [0,1) built bit by bit (the
    inverse CDF of the Gauss measure).  A dyadic rational enclosure of x is
    maintained; the next digit is emitted once all points of the enclosure
    agree on it.  A 4096-bit budget per digit guards against (measure-zero)
    boundary points.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.consumed_bits = 0
        self._u_num = 0
        # enclosure of 2^{u_lo}, integers at scale 2^-P; P doubles on demand
        # and the whole product is rebuilt so widths track 2^-(t+64)
        self._P = 128
        self._pow_lo = 1 << 128
        self._pow_hi = 1 << 128
        # tail y = (A x + B) / (C x + D)
        self._mob = (1, 0, 0, 1)
        self._emitted = 0

    # -- bit plumbing -------------------------------------------------------

    def _bit(self, i: int) -> int:
        w = _word_scalar(self.seed, _DOM_UBITS, self.stream, i >> 6)
        return (w >> (63 - (i & 63))) & 1

    def _mul_root(self, k: int) -> None:
        r_lo, r_hi, r_prec = _roots.get(k, self._P)
        self._pow_lo = (self._pow_lo * r_lo) >> r_prec
        self._pow_hi = -((-self._pow_hi * r_hi) >> r_prec)  # ceil

    def _rebuild(self) -> None:
        t = self.consumed_bits
        self._pow_lo = 1 << self._P
        self._pow_hi = 1 << self._P
        for j in range(t):
            if (self._u_num >> (t - 1 - j)) & 1:
                self._mul_root(j + 1)

    def _consume_bit(self) -> None:
        b = self._bit(self.consumed_bits)
        self.consumed_bits += 1
        t = self.consumed_bits
        self._u_num = (self._u_num << 1) | b
        if t + 64 > self._P:
            self._P *= 2
            self._rebuild()
        elif b:
            self._mul_root(t)

    def enclosure(self) -> tuple[Fraction, Fraction]:
        """Current exact rational enclosure of the sampled point x."""
        scale = 1 << self._P
        lo = Fraction(self._pow_lo - scale, scale)
        t = self.consumed_bits
        if t:
            r_lo, r_hi, r_prec = _roots.get(t, self._P)
            hi = Fraction(self._pow_hi * r_hi - (scale << r_prec), scale << r_prec)
        else:
            hi = Fraction(1)
        return lo, hi

    # -- digit extraction ---------------------------------------------------

    def _x_bounds_raw(self) -> Optional[tuple[int, int, int]]:
        """(lo_num, hi_num, shift): x in [lo_num, hi_num] / 2^shift, gcd-free."""
        t = self.consumed_bits
        if t == 0:
            return None
        r_lo, r_hi, r_prec = _roots.get(t, self._P)
        shift = self._P + r_prec
        one = 1 << shift
        lo_num = (self._pow_lo << r_prec) - one
        hi_num = self._pow_hi * r_hi - one
        return lo_num, hi_num, shift

    def _try_digit(self) -> Optional[int]:
        raw = self._x_bounds_raw()
        if raw is None:
            return None
        lo_num, hi_num, shift = raw
        if lo_num <= 0 or hi_num >= (1 << shift):
            return None
        a, b, c, d = self._mob
        digit = None
        for num in (lo_num, hi_num):
            yn = a * num + (b << shift)
            yd = c * num + (d << shift)
            if yd < 0:
                yn, yd = -yn, -yd
            if yn <= 0 or yd <= 0 or yn >= yd:
                return None
            k = yd // yn
            if digit is None:
                digit = k
            elif digit != k:
                return None
        return digit if digit >= 1 else None

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        start_bits = self.consumed_bits
        while True:
            digit = self._try_digit()
            if digit is not None:
                break
            if self.consumed_bits - start_bits >= PER_DIGIT_BIT_BUDGET:
                raise RuntimeError(
                    f"{PER_DIGIT_BIT_BUDGET}-bit budget exhausted for one digit "
                    f"(seed={self.seed}, stream={self.stream}, "
                    f"digit #{self._emitted + 1})"
                )
            self._consume_bit()
        a, b, c, d = self._mob
        self._mob = (c - digit * a, d - digit * b, a, b)
        self._emitted += 1
        return digit

    def take(self, n: int) -> list[int]:
        return [next(self) for _ in range(n)]
