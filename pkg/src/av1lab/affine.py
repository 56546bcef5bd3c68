"""Affine motion: local least-squares estimation, shear decomposition, two-stage warp."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .inter import FILTERS, H_ROUND_BITS, V_ROUND_BITS

WARP_BITS = 12  # fractional bits of h11, h12, h21, h22 and of the shear factors
ONE = 1 << WARP_BITS
MV_BITS = 3  # h13, h23 are motion vectors in 1/8 pel
MV_LIMIT = 1 << 15
POS_BITS = 6  # warp positions are rounded to 1/64 pel
UNIT = 8
MAX_NEIGHBORS = 8
MAX_MV_DIFF = 8 << MV_BITS  # neighbours differing by more than 8 pixels are dropped
RECIP_BITS = 16

# 8-tap warp kernels for offsets -1 .. +2 pel in 1/64 steps (193 phases),
# taps at integer positions -3 .. 4 around the nominal sample.  Same
# windowed-sinc family as the SHARP interpolation filter; the 1/16 phases in
# [0, 1) reuse the SHARP rows verbatim.
WARP_FC = 1.0
WARP_HALF_WIDTH = 5.95
WARP_PHASE_MIN = -(1 << POS_BITS)
WARP_PHASES = 3 * (1 << POS_BITS) + 1


def _q128(h: np.ndarray) -> np.ndarray:
    h = h / h.sum() * 128
    r = np.round(h).astype(np.int64)
    r[np.argmax(h)] += 128 - r.sum()
    return r


@lru_cache(maxsize=None)
def warp_filters() -> np.ndarray:
    t = np.arange(-3, 5)
    out = np.zeros((WARP_PHASES, 8), dtype=np.int64)
    for i in range(WARP_PHASES):
        off = i + WARP_PHASE_MIN
        if off % 64 == 0:
            out[i, 3 + off // 64] = 128
        elif 0 < off < 64 and off % 4 == 0:
            out[i] = FILTERS["SHARP"][off // 4]
        else:
            x = t - off / 64
            w = np.where(np.abs(x) < WARP_HALF_WIDTH,
                         0.54 + 0.46 * np.cos(np.pi * x / WARP_HALF_WIDTH), 0.0)
            out[i] = _q128(WARP_FC * np.sinc(WARP_FC * x) * w)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class AffineModel:
    """x' = h11 x + h12 y + h13, y' = h21 x + h22 y + h23 about the block centre.

    h11..h22 carry WARP_BITS fractional bits; h13, h23 are in 1/8 pel.
    """

    h11: int = ONE
    h12: int = 0
    h21: int = 0
    h22: int = ONE
    h13: int = 0
    h23: int = 0

    def __post_init__(self):
        for v in (self.h11, self.h12, self.h21, self.h22):
            if not -2 * ONE < v < 2 * ONE:
                raise ValueError("affine matrix entry outside the fixed-point range")
        if abs(self.h13) >= MV_LIMIT or abs(self.h23) >= MV_LIMIT:
            raise ValueError("translation outside the motion-vector range")

    @classmethod
    def from_float(cls, h11, h12, h21, h22, h13: int = 0, h23: int = 0) -> "AffineModel":
        q = lambda v: int(round(v * ONE))
        return cls(q(h11), q(h12), q(h21), q(h22), int(h13), int(h23))

    def matrix(self) -> np.ndarray:
        return np.array([[self.h11, self.h12], [self.h21, self.h22]], dtype=np.float64) / ONE


# ---------------------------------------------------------------- estimation

def estimate_local_affine(current: tuple[tuple[float, float], tuple[int, int]],
                          neighbors: Sequence[tuple[tuple[float, float], tuple[int, int]]]
                          ) -> AffineModel | None:
    """Least-squares fit from neighbour block centres and motion vectors.

    Centres are (x, y) in pixels, motion vectors (row, col) in 1/8 pel.  Returns
    None when fewer than two neighbours survive or the system is singular.
    """
    (x0, y0), mv0 = current
    rows = []
    for (xk, yk), mvk in list(neighbors)[:MAX_NEIGHBORS]:
        dr, dc = mvk[0] - mv0[0], mvk[1] - mv0[1]
        if abs(dr) > MAX_MV_DIFF or abs(dc) > MAX_MV_DIFF:
            continue
        a, b = Fraction(xk) - Fraction(x0), Fraction(yk) - Fraction(y0)
        rows.append((a, b, a + Fraction(dc, 1 << MV_BITS), b + Fraction(dr, 1 << MV_BITS)))
    if len(rows) < 2:
        return None
    # normal equations (P^T P) h = P^T q, solved exactly
    saa = sum(r[0] * r[0] for r in rows)
    sab = sum(r[0] * r[1] for r in rows)
    sbb = sum(r[1] * r[1] for r in rows)
    det = saa * sbb - sab * sab
    if det == 0:
        return None

    def solve(col: int) -> tuple[Fraction, Fraction]:
        sa = sum(r[0] * r[col] for r in rows)
        sb = sum(r[1] * r[col] for r in rows)
        return (sbb * sa - sab * sb) / det, (saa * sb - sab * sa) / det

    h11, h12 = solve(2)
    h21, h22 = solve(3)
    q = lambda v: int(round(v * ONE))
    try:
        return AffineModel(q(h11), q(h12), q(h21), q(h22), mv0[1], mv0[0])
    except ValueError:
        return None


# ---------------------------------------------------------------- shear

@dataclass(frozen=True)
class ShearParams:
    alpha: int
    beta: int
    gamma: int
    delta: int

    @property
    def valid(self) -> bool:
        return (4 * abs(self.alpha) + 7 * abs(self.beta) < ONE
                and 4 * abs(self.gamma) + 4 * abs(self.delta) < ONE)


def _round_shift(v: int, s: int) -> int:
    """Divide by 2**s, rounding half away from zero."""
    if s <= 0:
        return v << -s
    h = 1 << (s - 1)
    return (v + h) >> s if v >= 0 else -((-v + h) >> s)


def reciprocal(d: int) -> tuple[int, int]:
    """(r, s) with 1/d ~= r / 2**s and r a 16-bit mantissa in (2**15, 2**16]."""
    if d <= 0:
        raise ValueError("reciprocal of a non-positive value")
    e = d.bit_length() - RECIP_BITS
    dn = _round_shift(d, e) if e > 0 else d << -e
    r = ((1 << 31) + dn // 2) // dn
    return r, 31 + e


def shear_decompose(m: AffineModel) -> ShearParams | None:
    """Split the 2x2 part into a vertical and a horizontal shear; None if invalid."""
    if m.h11 <= 0:
        return None
    r, s = reciprocal(m.h11)
    alpha = m.h11 - ONE
    beta = m.h12
    gamma = _round_shift(m.h21 * r, s - WARP_BITS)
    delta = m.h22 - _round_shift(m.h21 * m.h12 * r, s) - ONE
    p = ShearParams(alpha, beta, gamma, delta)
    return p if p.valid else None


def shear_decompose_exact(m: AffineModel) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Rational (alpha, beta, gamma, delta) in units of one."""
    h11, h12 = Fraction(m.h11, ONE), Fraction(m.h12, ONE)
    h21, h22 = Fraction(m.h21, ONE), Fraction(m.h22, ONE)
    return h11 - 1, h12, h21 / h11, h22 - h21 * h12 / h11 - 1


def shear_recompose(p: ShearParams) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """[[1, 0], [g, 1+d]] @ [[1+a, b], [0, 1]], exactly, in WARP_BITS units."""
    a, b = Fraction(p.alpha, ONE), Fraction(p.beta, ONE)
    g, d = Fraction(p.gamma, ONE), Fraction(p.delta, ONE)
    return tuple(v * ONE for v in (1 + a, b, g * (1 + a), g * b + 1 + d))


# ---------------------------------------------------------------- warp

@dataclass
class WarpStats:
    multiplies: int = 0
    units: int = 0
    windows: list = field(default_factory=list)  # (row0, col0, rows, cols) of source reads


def _unit_origin(m: AffineModel, center: tuple[Fraction, Fraction], x1: int, y1: int):
    """Source position of the unit's anchor pixel, rounded to 1/64 pel."""
    cx, cy = center
    dx, dy = x1 - cx, y1 - cy
    sx = cx + Fraction(m.h13, 1 << MV_BITS) + (m.h11 * dx + m.h12 * dy) / ONE
    sy = cy + Fraction(m.h23, 1 << MV_BITS) + (m.h21 * dx + m.h22 * dy) / ONE
    q = 1 << POS_BITS
    return math.floor(sx * q + Fraction(1, 2)), math.floor(sy * q + Fraction(1, 2))


def _phase(off_q12: int) -> int:
    off = (off_q12 + (1 << (WARP_BITS - POS_BITS - 1))) >> (WARP_BITS - POS_BITS)
    if not WARP_PHASE_MIN <= off < WARP_PHASE_MIN + WARP_PHASES:
        raise AssertionError("warp offset escapes the 15x15 source window")
    return off - WARP_PHASE_MIN


def _block_center(x0: int, y0: int, w: int, h: int, center) -> tuple[Fraction, Fraction]:
    if center is None:
        return Fraction(2 * x0 + w, 2), Fraction(2 * y0 + h, 2)
    return Fraction(center[0]), Fraction(center[1])


def warp_block(ref: np.ndarray, model: AffineModel, x0: int, y0: int, w: int, h: int,
               block_center=None, bit_depth: int = 8, stats: WarpStats | None = None) -> np.ndarray:
    """Two-stage affine prediction of the w x h block at (x0, y0), per 8x8 unit.

    Each unit's anchor pixel (offset (4, 4)) is projected through the model;
    the other pixels use the shear offsets: horizontal filtering of 15 source
    rows at (1+alpha) l + beta k, then vertical filtering of the 15x8
    intermediate at gamma l + (1+delta) j.
    """
    if w < UNIT or h < UNIT or w % UNIT or h % UNIT:
        raise ValueError("affine prediction needs a block of 8x8 units")
    sp = shear_decompose(model)
    if sp is None:
        raise ValueError("invalid affine model")
    filt = warp_filters()
    ref = np.asarray(ref, dtype=np.int64)
    hh, ww = ref.shape
    center = _block_center(x0, y0, w, h, block_center)
    out = np.zeros((h, w), dtype=np.int64)
    for uy in range(0, h, UNIT):
        for ux in range(0, w, UNIT):
            px, py = _unit_origin(model, center, x0 + ux + 4, y0 + uy + 4)
            ix, iy = px >> POS_BITS, py >> POS_BITS
            fx = (px & 63) << (WARP_BITS - POS_BITS)
            fy = (py & 63) << (WARP_BITS - POS_BITS)
            rows = np.clip(np.arange(iy - 7, iy + 8), 0, hh - 1)
            cols = np.clip(np.arange(ix - 7, ix + 8), 0, ww - 1)
            win = ref[np.ix_(rows, cols)]
            if stats is not None:
                stats.windows.append((iy - 7, ix - 7, 15, 15))
            # horizontal pass: 15 rows x 8 columns, one 8-tap filter each
            mid = np.zeros((15, 8), dtype=np.int64)
            for k in range(-7, 8):
                sx = fx + sp.beta * k + sp.alpha * -4
                for l in range(8):
                    taps = filt[_phase(sx)]
                    mid[k + 7, l] = (int(taps @ win[k + 7, l:l + 8]) + 8) >> H_ROUND_BITS
                    sx += sp.alpha
            # vertical pass: 8 x 8 outputs from 8 intermediate rows each
            for j in range(8):
                sy = fy + sp.delta * (j - 4) + sp.gamma * -4
                for l in range(8):
                    taps = filt[_phase(sy)]
                    v = (int(taps @ mid[j:j + 8, l]) + (1 << (V_ROUND_BITS - 1))) >> V_ROUND_BITS
                    out[uy + j, ux + l] = min(max(v, 0), (1 << bit_depth) - 1)
                    sy += sp.gamma
            if stats is not None:
                stats.multiplies += 15 * 8 * 8 + 8 * 8 * 8
                stats.units += 1
    return out


def warp_block_oracle(ref: np.ndarray, model: AffineModel, x0: int, y0: int, w: int, h: int,
                      block_center=None, bit_depth: int = 8) -> np.ndarray:
    """Per-pixel evaluation: every output pixel recomputes its own eight horizontal
    interpolations from the shear offsets, with rational position arithmetic."""
    sp = shear_decompose(model)
    if sp is None:
        raise ValueError("invalid affine model")
    a, b = Fraction(sp.alpha, ONE), Fraction(sp.beta, ONE)
    g, d = Fraction(sp.gamma, ONE), Fraction(sp.delta, ONE)
    filt = warp_filters()
    hh, ww = ref.shape
    center = _block_center(x0, y0, w, h, block_center)

    def phase(off: Fraction) -> list[int]:
        q = math.floor(off * 64 + Fraction(1, 2))
        return [int(t) for t in filt[q - WARP_PHASE_MIN]]

    def px(r, c):
        return int(ref[min(max(r, 0), hh - 1), min(max(c, 0), ww - 1)])

    out = np.zeros((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            ux, uy = x - x % UNIT, y - y % UNIT
            sx, sy = _unit_origin(model, center, x0 + ux + 4, y0 + uy + 4)
            ix, iy = sx >> POS_BITS, sy >> POS_BITS
            fx, fy = Fraction(sx & 63, 64), Fraction(sy & 63, 64)
            l, j = x - ux - 4, y - uy - 4
            vt = phase(fy + g * l + d * j)
            acc = 0
            for i in range(8):
                k = j + i - 3
                ht = phase(fx + a * l + b * k)
                s = sum(ht[t] * px(iy + k, ix + l + t - 3) for t in range(8))
                acc += vt[i] * ((s + 8) >> H_ROUND_BITS)
            out[y, x] = min(max((acc + 512) >> V_ROUND_BITS, 0), (1 << bit_depth) - 1)
    return out


def random_valid_model(rng: np.random.Generator, max_mv: int = 64) -> AffineModel:
    """Draw a model whose shear factors satisfy both validity bounds."""
    while True:
        a, b, g, d = rng.uniform(-0.2, 0.2, 4) * np.array([1, 0.6, 1, 1])
        h11 = 1 + a
        h12 = b
        h21 = g * h11
        h22 = g * b + 1 + d
        m = AffineModel.from_float(h11, h12, h21, h22, *rng.integers(-max_mv, max_mv + 1, 2))
        if shear_decompose(m) is not None:
            return m
