"""Horizontal frame super-resolution: reduced-width coding and normative 8-tap upscaling."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .inter import FILTERS, TAP_ORIGIN

SCALE_BITS = 14
SCALE_ONE = 1 << SCALE_BITS
PHASE_BITS = 4
_PHASE_SHIFT = SCALE_BITS - PHASE_BITS
DENOMINATORS = tuple(range(9, 17))  # numerator fixed at 8
NUMERATOR = 8


def downscaled_width(W: int, denom: int) -> int:
    if denom == NUMERATOR:
        return W
    if denom not in DENOMINATORS:
        raise ValueError(f"denominator {denom} not in {DENOMINATORS}")
    return (NUMERATOR * W + denom // 2) // denom


def legal_pair(D: int, W: int) -> bool:
    return D == W or (2 * D >= W and 16 * D <= 15 * W and 0 < D < W)


def _round_half_up(q: Fraction) -> int:
    return math.floor(q + Fraction(1, 2))


def superres_step(D: int, W: int) -> int:
    """Per-output-pixel advance in 1/16384 input pixels."""
    return _round_half_up(Fraction(D * SCALE_ONE, W))


def superres_initial(D: int, W: int) -> int:
    """Offset of Q_0 from P_0 in 1/16384 units, corrected so the step's rounding error
    accumulates symmetrically about the middle output pixel."""
    e = superres_step(D, W) - Fraction(D * SCALE_ONE, W)
    return _round_half_up(Fraction((D - W) * SCALE_ONE, 2 * W) - e * W / 2)


def superres_raw_offsets(D: int, W: int) -> np.ndarray:
    """Offset of every Q_m from P_0 in 1/16384 input pixels."""
    if not legal_pair(D, W):
        raise ValueError(f"scale {D}/{W} outside the allowed range")
    return superres_initial(D, W) + np.arange(W, dtype=np.int64) * superres_step(D, W)


def superres_ideal_offsets(D: int, W: int) -> list[Fraction]:
    """Exact offsets (D - W) / 2W + m D / W, in input pixels."""
    return [Fraction(D - W, 2 * W) + Fraction(m * D, W) for m in range(W)]


def superres_offsets(D: int, W: int) -> tuple[np.ndarray, np.ndarray]:
    """(integer position, 1/16 phase) of every output pixel, phases rounded to nearest."""
    raw = superres_raw_offsets(D, W)
    pos = raw >> SCALE_BITS
    phase = ((raw & (SCALE_ONE - 1)) + (1 << (_PHASE_SHIFT - 1))) >> _PHASE_SHIFT
    carry = phase >> PHASE_BITS
    return pos + carry, phase & ((1 << PHASE_BITS) - 1)


def superres_upscale(row, offsets, bit_depth: int = 8) -> np.ndarray:
    """Interpolate one row at the given (positions, phases); borders replicate."""
    x = np.asarray(row, dtype=np.int64)
    pos, phase = offsets
    taps = FILTERS["SHARP"][phase]  # (W, 8)
    idx = np.clip(pos[:, None] - TAP_ORIGIN + np.arange(8)[None, :], 0, len(x) - 1)
    s = (taps * x[idx]).sum(axis=1)
    return np.clip((s + 64) >> 7, 0, (1 << bit_depth) - 1)


def superres_upscale_plane(plane, W: int, bit_depth: int = 8) -> np.ndarray:
    """Upscale every row of a plane to width W; the vertical direction is untouched."""
    p = np.asarray(plane, dtype=np.int64)
    offs = superres_offsets(p.shape[1], W)
    return np.stack([superres_upscale(r, offs, bit_depth) for r in p])


def superres_downscale_plane(plane, D: int, bit_depth: int = 8) -> np.ndarray:
    """Encoder-side area-average reduction of each row to D samples."""
    p = np.asarray(plane, dtype=np.float64)
    W = p.shape[1]
    if D == W:
        return p.astype(np.int64)
    edges = np.arange(D + 1) * (W / D)
    cum = np.concatenate([np.zeros((p.shape[0], 1)), p.cumsum(axis=1)], axis=1)
    grid = np.arange(W + 1)
    c = np.stack([np.interp(edges, grid, r) for r in cum])
    out = (c[:, 1:] - c[:, :-1]) * (D / W)
    return np.clip(np.floor(out + 0.5), 0, (1 << bit_depth) - 1).astype(np.int64)
