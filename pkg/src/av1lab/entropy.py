"""Adaptive multi-symbol arithmetic (range) coder with 15-bit CDFs.

Wire format
-----------
* CDFs are increasing lists ``cdf[0..M-1]`` with ``cdf[M-1] == 32768``;
  ``cdf[k]`` is the cumulative probability of symbols ``0..k``.
* For an interval of length ``R`` (16-bit, kept in [2**15, 2**16)) the
  boundaries are ``B(0) = R`` and, for ``1 <= k <= M``::

      B(k) = (((R >> 8) * ((32768 - cdf[k-1]) >> 6)) >> 1) + 4 * (M - k)

  Symbol ``s`` owns ``[B(s+1), B(s))`` measured downward from the top of
  the interval, so ``low += R - B(s)`` and ``R = B(s) - B(s+1)``.
* After each symbol R is doubled until it is >= 2**15; every doubling moves
  one bit of ``low`` out.  Bytes are emitted MSB first.  Carries are
  resolved once at the end (the byte buffer keeps 9-bit values until then).
* The decoder keeps ``value = R - 1 - (code - low)`` and searches the
  boundaries top-down, stopping at the first ``B(k) <= value``.
"""
from __future__ import annotations

from typing import Sequence

PROB_BITS = 15
PROB_TOP = 1 << PROB_BITS
MIN_WIDTH = 4
COUNT_SAT = 64
MAX_SYMBOLS = 16


def rate_shift(count: int, m: int) -> int:
    return 3 + (count > 15) + (count > 32) + min(m.bit_length() - 1, 2)


def uniform_cdf(m: int) -> list[int]:
    return [((k + 1) * PROB_TOP) // m for k in range(m)]


def cdf_from_probs(p: Sequence[float]) -> list[int]:
    tot = float(sum(p))
    acc, out = 0.0, []
    for x in p:
        acc += x
        out.append(int(round(acc / tot * PROB_TOP)))
    out[-1] = PROB_TOP
    return repair(out)


def repair(cdf: list[int]) -> list[int]:
    """Enforce a minimum symbol width of MIN_WIDTH while keeping cdf[-1] = 32768."""
    m = len(cdf)
    prev = 0
    for k in range(m - 1):
        if cdf[k] < prev + MIN_WIDTH:
            cdf[k] = prev + MIN_WIDTH
        prev = cdf[k]
    nxt = PROB_TOP
    for k in range(m - 2, -1, -1):
        if cdf[k] > nxt - MIN_WIDTH:
            cdf[k] = nxt - MIN_WIDTH
        nxt = cdf[k]
    cdf[m - 1] = PROB_TOP
    return cdf


class CdfModel:
    """Adaptive CDF for an M-ary alphabet (2 <= M <= 16)."""

    __slots__ = ("cdf", "count", "adapt")

    def __init__(self, m_or_cdf, adapt: bool = True):
        if isinstance(m_or_cdf, int):
            cdf = uniform_cdf(m_or_cdf)
        else:
            cdf = list(m_or_cdf)
        if not 2 <= len(cdf) <= MAX_SYMBOLS or cdf[-1] != PROB_TOP:
            raise ValueError("bad CDF")
        self.cdf = cdf
        self.count = 0
        self.adapt = adapt

    @property
    def m(self) -> int:
        return len(self.cdf)

    def copy(self) -> "CdfModel":
        c = CdfModel(self.cdf, self.adapt)
        c.count = self.count
        return c

    def probs(self) -> list[float]:
        prev, out = 0, []
        for c in self.cdf:
            out.append((c - prev) / PROB_TOP)
            prev = c
        return out

    def update(self, sym: int) -> None:
        if not self.adapt:
            return
        cdf = self.cdf
        m = len(cdf)
        s = rate_shift(self.count, m)
        for j in range(m - 1):
            c = cdf[j]
            if j < sym:
                cdf[j] = c - (c >> s)
            else:
                cdf[j] = c + ((PROB_TOP - c) >> s)
        repair(cdf)
        if self.count < COUNT_SAT:
            self.count += 1


def cdf_update(model: CdfModel, k: int) -> CdfModel:
    """Functional form: observe 1-based symbol k and return the updated model."""
    out = model.copy()
    out.adapt = True
    out.update(k - 1)
    return out


class OperandMonitor:
    """Records the widest multiplication operands seen by coders."""

    def __init__(self):
        self.max_a = 0
        self.max_b = 0

    def see(self, a: int, b: int) -> None:
        if a > self.max_a:
            self.max_a = a
        if b > self.max_b:
            self.max_b = b


def _bound(r8: int, c: int, m: int, k: int) -> int:
    return ((r8 * ((PROB_TOP - c) >> 6)) >> 1) + MIN_WIDTH * (m - k)


class RangeEncoder:
    def __init__(self, monitor: OperandMonitor | None = None):
        self.low = 0
        self.rng = 1 << 15
        self.cnt = 0  # bits of low above the 16-bit window, not yet emitted
        self.buf: list[int] = []
        self.monitor = monitor
        self.nsym = 0

    def _interval(self, lo_off: int, new_rng: int) -> None:
        low = self.low + lo_off
        rng = new_rng
        d = 16 - rng.bit_length()
        if d:
            rng <<= d
            low <<= d
            cnt = self.cnt + d
            while cnt >= 8:
                sh = 8 + cnt
                self.buf.append(low >> sh)
                low &= (1 << sh) - 1
                cnt -= 8
            self.cnt = cnt
        self.low = low
        self.rng = rng

    def encode(self, sym: int, model: CdfModel) -> None:
        cdf = model.cdf
        m = len(cdf)
        if not 0 <= sym < m:
            raise ValueError(f"symbol {sym} outside alphabet of {m}")
        r = self.rng
        r8 = r >> 8
        if self.monitor is not None:
            self.monitor.see(r8, (PROB_TOP - cdf[sym]) >> 6)
        u = r if sym == 0 else _bound(r8, cdf[sym - 1], m, sym)
        v = _bound(r8, cdf[sym], m, sym + 1)
        self._interval(r - u, u - v)
        model.update(sym)
        self.nsym += 1

    def encode_bit(self, bit: int) -> None:
        """Equiprobable binary decision (raw bit) in the same stream."""
        r = self.rng
        half = r >> 1
        if bit:
            self._interval(r - half, half)
        else:
            self._interval(0, r - half)

    def encode_bits(self, value: int, n: int) -> None:
        for i in range(n - 1, -1, -1):
            self.encode_bit((value >> i) & 1)

    def finish(self) -> bytes:
        low, cnt = self.low, self.cnt
        nbits = 16 + cnt
        nbytes = (nbits + 7) // 8
        low <<= 8 * nbytes - nbits
        buf = list(self.buf)
        for i in range(nbytes - 1, -1, -1):
            buf.append(low >> (8 * i) if i == nbytes - 1 else (low >> (8 * i)) & 0xFF)
        out = bytearray(len(buf))
        carry = 0
        for i in range(len(buf) - 1, -1, -1):
            v = buf[i] + carry
            out[i] = v & 0xFF
            carry = v >> 8
        if carry:
            raise AssertionError("carry out of the code string")
        return bytes(out)


class RangeDecoder:
    def __init__(self, data: bytes, monitor: OperandMonitor | None = None):
        self.data = data
        self.pos = 0
        self.res = 0
        self.nres = 0
        self.rng = 1 << 15
        self.monitor = monitor
        self.value = self.rng - 1 - self._take(16)

    def _take(self, d: int) -> int:
        while self.nres < d:
            if self.pos >= len(self.data):
                raise EOFError("range decoder read past end of stream")
            self.res = (self.res << 8) | self.data[self.pos]
            self.pos += 1
            self.nres += 8
        self.nres -= d
        bits = self.res >> self.nres
        self.res &= (1 << self.nres) - 1
        return bits

    def _renorm(self, rng: int, value: int) -> None:
        d = 16 - rng.bit_length()
        if d:
            mask = (1 << d) - 1
            value = (value << d) | (mask ^ self._take(d))
            rng <<= d
        self.rng = rng
        self.value = value

    def decode(self, model: CdfModel) -> int:
        cdf = model.cdf
        m = len(cdf)
        r = self.rng
        r8 = r >> 8
        value = self.value
        low = r
        k = 0
        up = r
        while value < low:
            up = low
            low = _bound(r8, cdf[k], m, k + 1)
            k += 1
        sym = k - 1
        if self.monitor is not None:
            self.monitor.see(r8, (PROB_TOP - cdf[sym]) >> 6)
        self._renorm(up - low, value - low)
        model.update(sym)
        return sym

    def decode_bit(self) -> int:
        r = self.rng
        half = r >> 1
        if self.value < half:
            self._renorm(half, self.value)
            return 1
        self._renorm(r - half, self.value - half)
        return 0

    def decode_bits(self, n: int) -> int:
        v = 0
        for _ in range(n):
            v = (v << 1) | self.decode_bit()
        return v
