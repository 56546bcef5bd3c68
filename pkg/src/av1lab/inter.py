"""Translational inter prediction: sub-pel interpolation, compound masks, OBMC, inter-intra."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

FILTER_KINDS = ("SMOOTH", "REGULAR", "SHARP")
PHASES = 16
TAP_ORIGIN = 3  # taps cover integer positions x-3 .. x+4
H_ROUND_BITS = 4  # horizontal pass keeps 7-4 = 3 extra bits
V_ROUND_BITS = 10

# 16-phase tables, 7-bit gain.  Hamming-windowed sinc designs fitted to the
# published half-pel rows (phase 8), which are kept verbatim.  Phase 16-p is
# the mirror of phase p and phase 0 is the unit impulse.
_TABLES = {
    "SMOOTH": (
        (   0,    0,    0,  128,    0,    0,    0,    0),
        (   0,    1,   31,   59,   36,    3,   -2,    0),
        (   0,    0,   28,   59,   39,    4,   -2,    0),
        (   0,   -1,   26,   59,   41,    5,   -2,    0),
        (   0,   -1,   23,   57,   44,    7,   -2,    0),
        (   0,   -2,   21,   57,   46,    8,   -2,    0),
        (   0,   -2,   18,   56,   48,   10,   -2,    0),
        (   0,   -2,   16,   54,   50,   12,   -2,    0),
        (   0,   -2,   14,   52,   52,   14,   -2,    0),
        (   0,   -2,   12,   50,   54,   16,   -2,    0),
        (   0,   -2,   10,   48,   56,   18,   -2,    0),
        (   0,   -2,    8,   46,   57,   21,   -2,    0),
        (   0,   -2,    7,   44,   57,   23,   -1,    0),
        (   0,   -2,    5,   41,   59,   26,   -1,    0),
        (   0,   -2,    4,   39,   59,   28,    0,    0),
        (   0,   -2,    3,   36,   59,   31,    1,    0),
    ),
    "REGULAR": (
        (   0,    0,    0,  128,    0,    0,    0,    0),
        (   0,    1,   -5,  126,    7,   -1,    0,    0),
        (   0,    2,  -10,  125,   14,   -3,    0,    0),
        (   0,    2,  -13,  120,   23,   -5,    1,    0),
        (   0,    2,  -15,  113,   33,   -6,    1,    0),
        (   0,    2,  -16,  106,   43,   -8,    1,    0),
        (   0,    2,  -16,   97,   54,  -10,    1,    0),
        (   0,    2,  -15,   86,   65,  -12,    2,    0),
        (   0,    2,  -14,   76,   76,  -14,    2,    0),
        (   0,    2,  -12,   65,   86,  -15,    2,    0),
        (   0,    1,  -10,   54,   97,  -16,    2,    0),
        (   0,    1,   -8,   43,  106,  -16,    2,    0),
        (   0,    1,   -6,   33,  113,  -15,    2,    0),
        (   0,    1,   -5,   23,  120,  -13,    2,    0),
        (   0,    0,   -3,   14,  125,  -10,    2,    0),
        (   0,    0,   -1,    7,  126,   -5,    1,    0),
    ),
    "SHARP": (
        (   0,    0,    0,  128,    0,    0,    0,    0),
        (  -1,    3,   -7,  128,    8,   -3,    1,   -1),
        (  -3,    5,  -13,  127,   17,   -7,    3,   -1),
        (  -4,    8,  -18,  122,   27,  -10,    5,   -2),
        (  -4,    9,  -21,  117,   38,  -14,    6,   -3),
        (  -5,   10,  -24,  110,   49,  -17,    8,   -3),
        (  -5,   11,  -25,  102,   60,  -20,    9,   -4),
        (  -5,   11,  -25,   93,   71,  -22,   10,   -5),
        (  -4,   12,  -24,   80,   80,  -24,   12,   -4),
        (  -5,   10,  -22,   71,   93,  -25,   11,   -5),
        (  -4,    9,  -20,   60,  102,  -25,   11,   -5),
        (  -3,    8,  -17,   49,  110,  -24,   10,   -5),
        (  -3,    6,  -14,   38,  117,  -21,    9,   -4),
        (  -2,    5,  -10,   27,  122,  -18,    8,   -4),
        (  -1,    3,   -7,   17,  127,  -13,    5,   -3),
        (  -1,    1,   -3,    8,  128,   -7,    3,   -1),
    ),
    "SMOOTH4": (
        (   0,    0,    0,  128,    0,    0,    0,    0),
        (   0,    0,   31,   61,   36,    0,    0,    0),
        (   0,    0,   28,   60,   39,    1,    0,    0),
        (   0,    0,   25,   60,   41,    2,    0,    0),
        (   0,    0,   22,   58,   44,    4,    0,    0),
        (   0,    0,   19,   57,   46,    6,    0,    0),
        (   0,    0,   17,   55,   48,    8,    0,    0),
        (   0,    0,   14,   54,   50,   10,    0,    0),
        (   0,    0,   12,   52,   52,   12,    0,    0),
        (   0,    0,   10,   50,   54,   14,    0,    0),
        (   0,    0,    8,   48,   55,   17,    0,    0),
        (   0,    0,    6,   46,   57,   19,    0,    0),
        (   0,    0,    4,   44,   58,   22,    0,    0),
        (   0,    0,    2,   41,   60,   25,    0,    0),
        (   0,    0,    1,   39,   60,   28,    0,    0),
        (   0,    0,    0,   36,   61,   31,    0,    0),
    ),
    "REGULAR4": (
        (   0,    0,    0,  128,    0,    0,    0,    0),
        (   0,    0,    1,  117,   13,   -3,    0,    0),
        (   0,    0,   -3,  115,   20,   -4,    0,    0),
        (   0,    0,   -7,  113,   28,   -6,    0,    0),
        (   0,    0,  -10,  108,   37,   -7,    0,    0),
        (   0,    0,  -11,  101,   47,   -9,    0,    0),
        (   0,    0,  -12,   94,   56,  -10,    0,    0),
        (   0,    0,  -12,   85,   66,  -11,    0,    0),
        (   0,    0,  -12,   76,   76,  -12,    0,    0),
        (   0,    0,  -11,   66,   85,  -12,    0,    0),
        (   0,    0,  -10,   56,   94,  -12,    0,    0),
        (   0,    0,   -9,   47,  101,  -11,    0,    0),
        (   0,    0,   -7,   37,  108,  -10,    0,    0),
        (   0,    0,   -6,   28,  113,   -7,    0,    0),
        (   0,    0,   -4,   20,  115,   -3,    0,    0),
        (   0,    0,   -3,   13,  117,    1,    0,    0),
    ),
}
FILTERS = {k: np.array(v, dtype=np.int64) for k, v in _TABLES.items()}


def filter_taps(kind: str, phase: int, dim: int = 8) -> np.ndarray:
    """Eight taps for `phase`; blocks with dim <= 4 use the 4-tap variants."""
    if kind not in FILTER_KINDS:
        raise ValueError(f"unknown filter {kind}")
    if dim <= 4:
        kind = "SMOOTH4" if kind == "SMOOTH" else "REGULAR4"
    return FILTERS[kind][phase]


def _split(pos: int, frac_bits: int) -> tuple[int, int]:
    """Sub-pel position -> (integer sample, 16-phase index)."""
    return pos >> frac_bits, (pos & ((1 << frac_bits) - 1)) << (4 - frac_bits)


def _fetch(ref: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    rr = np.clip(rows, 0, ref.shape[0] - 1)
    cc = np.clip(cols, 0, ref.shape[1] - 1)
    return ref[np.ix_(rr, cc)].astype(np.int64)


def interp_subpel(ref: np.ndarray, x: int, y: int, mv: tuple[int, int], filt_h: str, filt_v: str,
                  w: int, h: int, bit_depth: int = 8, frac_bits: int = 3) -> np.ndarray:
    """Separable prediction of the w x h block at (x, y) displaced by mv = (row, col).

    mv is in 1/2**frac_bits pel (3 for luma, 4 for subsampled chroma).  The
    horizontal pass rounds by 4 bits, leaving 3 fractional bits in the
    intermediate array; the vertical pass rounds by 10 bits and clips.
    Reference samples outside the plane are edge-replicated.
    """
    iy, py = _split((y << frac_bits) + mv[0], frac_bits)
    ix, px = _split((x << frac_bits) + mv[1], frac_bits)
    fh = filter_taps(filt_h, px, w)
    fv = filter_taps(filt_v, py, h)
    src = _fetch(ref, np.arange(iy - TAP_ORIGIN, iy + h + 8 - TAP_ORIGIN - 1),
                 np.arange(ix - TAP_ORIGIN, ix + w + 8 - TAP_ORIGIN - 1))
    if px == 0:
        mid = src[:, TAP_ORIGIN:TAP_ORIGIN + w] << (7 - H_ROUND_BITS)
    else:
        acc = np.zeros((src.shape[0], w), dtype=np.int64)
        for t in range(8):
            if fh[t]:
                acc += fh[t] * src[:, t:t + w]
        mid = (acc + (1 << (H_ROUND_BITS - 1))) >> H_ROUND_BITS
    if py == 0:
        out = (mid[TAP_ORIGIN:TAP_ORIGIN + h] + 4) >> (7 - H_ROUND_BITS)
    else:
        acc = np.zeros((h, w), dtype=np.int64)
        for t in range(8):
            if fv[t]:
                acc += fv[t] * mid[t:t + h]
        out = (acc + (1 << (V_ROUND_BITS - 1))) >> V_ROUND_BITS
    return np.clip(out, 0, (1 << bit_depth) - 1)


def interp_subpel_oracle(ref: np.ndarray, x: int, y: int, mv: tuple[int, int], filt_h: str,
                         filt_v: str, w: int, h: int, bit_depth: int = 8,
                         frac_bits: int = 3) -> np.ndarray:
    """Per-pixel nested sums with the same rounding; no intermediate reuse."""
    iy, py = _split((y << frac_bits) + mv[0], frac_bits)
    ix, px = _split((x << frac_bits) + mv[1], frac_bits)
    fh = [int(t) for t in filter_taps(filt_h, px, w)]
    fv = [int(t) for t in filter_taps(filt_v, py, h)]
    hh, ww = ref.shape
    out = np.zeros((h, w), dtype=np.int64)
    for r in range(h):
        for c in range(w):
            total = 0
            for i in range(8):
                sr = min(max(iy + r + i - TAP_ORIGIN, 0), hh - 1)
                s = 0
                for j in range(8):
                    sc = min(max(ix + c + j - TAP_ORIGIN, 0), ww - 1)
                    s += fh[j] * int(ref[sr, sc])
                total += fv[i] * ((s + 8) >> 4)
            out[r, c] = min(max((total + 512) >> 10, 0), (1 << bit_depth) - 1)
    return out


# ---------------------------------------------------------------- compound

def mask_distance_weight(d1: int, d2: int) -> int:
    """Weight of the first reference given temporal distances d1, d2 >= 1."""
    if d1 < 1 or d2 < 1:
        raise ValueError("frame distances must be >= 1")
    if d1 > d2:
        return 64 - mask_distance_weight(d2, d1)
    if 2 * d2 < 3 * d1:
        return 36
    if 2 * d2 < 5 * d1:
        return 44
    if 2 * d2 < 7 * d1:
        return 48
    return 52


def mask_difference_weight(r1: np.ndarray, r2: np.ndarray, sign: int) -> np.ndarray:
    r1 = np.asarray(r1, dtype=np.int64)
    r2 = np.asarray(r2, dtype=np.int64)
    if r1.shape != r2.shape:
        raise ValueError("reference blocks differ in size")
    m = np.minimum(38 + np.abs(r1 - r2) // 16, 64)
    return 64 - m if sign else m


def blend_compound(r1: np.ndarray, r2: np.ndarray, mask) -> np.ndarray:
    r1 = np.asarray(r1, dtype=np.int64)
    r2 = np.asarray(r2, dtype=np.int64)
    m = np.broadcast_to(np.asarray(mask, dtype=np.int64), r1.shape)
    if r1.shape != r2.shape:
        raise ValueError("reference blocks differ in size")
    if m.min() < 0 or m.max() > 64:
        raise ValueError("mask outside [0, 64]")
    return (m * r1 + (64 - m) * r2 + 32) >> 6


# Normal directions of the 16 wedge boundaries, as integer vectors; index
# i + 8 is the complement of index i.
WEDGE_NORMALS = ((1, 0), (2, 1), (1, 1), (1, 2), (0, 1), (-1, 2), (-1, 1), (-2, 1))


def wedge_eligible(w: int, h: int) -> bool:
    return min(w, h) >= 8 and max(w, h) <= 32


@lru_cache(maxsize=None)
def _wedge_ramps(w: int, h: int) -> tuple[np.ndarray, ...]:
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    out = []
    for nx, ny in WEDGE_NORMALS:
        d = ((xx - w / 2) * nx + (yy - h / 2) * ny) / math.hypot(nx, ny)
        out.append(np.round(-32 * d).astype(np.int64))
    return tuple(out)


def wedge_masks(w: int, h: int) -> list[np.ndarray]:
    """16 masks: 8 boundary orientations through the block centre, two polarities.

    The ramp is 32 on the boundary and saturates one pixel away on each side.
    """
    if not wedge_eligible(w, h):
        raise ValueError(f"wedge not available for {w}x{h}")
    ramps = _wedge_ramps(w, h)
    pos = [np.clip(32 + t, 0, 64) for t in ramps]
    neg = [np.clip(32 - t, 0, 64) for t in ramps]
    return pos + neg


# ---------------------------------------------------------------- OBMC

@lru_cache(maxsize=None)
def obmc_weights(n: int) -> tuple[int, ...]:
    """Raised-cosine weight of the block's own prediction for the first n/2 rows (columns)."""
    return tuple(int(math.floor(64 * (0.5 * math.sin(math.pi / n * (i + 0.5)) + 0.5) + 0.5))
                 for i in range(n // 2))


@dataclass(frozen=True)
class ObmcNeighbor:
    offset: int  # start column (above) or row (left) relative to the block
    extent: int
    mv: tuple[int, int]
    ref: np.ndarray


def obmc_blend(pred: np.ndarray, x0: int, y0: int, above: Sequence[ObmcNeighbor] = (),
               left: Sequence[ObmcNeighbor] = (), filt: tuple[str, str] = ("REGULAR", "REGULAR"),
               bit_depth: int = 8) -> np.ndarray:
    """Blend neighbours' motion into the top half, then the left half, of pred."""
    out = np.array(pred, dtype=np.int64)
    h, w = out.shape
    if above:
        m = np.array(obmc_weights(h), dtype=np.int64)[:, None]
        for nb in above[:4]:
            a, b = max(nb.offset, 0), min(nb.offset + nb.extent, w)
            if a >= b:
                continue
            rn = interp_subpel(nb.ref, x0 + a, y0, nb.mv, filt[0], filt[1], b - a, h // 2, bit_depth)
            cur = out[:h // 2, a:b]
            out[:h // 2, a:b] = (m * cur + (64 - m) * rn + 32) >> 6
    if left:
        m = np.array(obmc_weights(w), dtype=np.int64)[None, :]
        for nb in left[:4]:
            a, b = max(nb.offset, 0), min(nb.offset + nb.extent, h)
            if a >= b:
                continue
            rn = interp_subpel(nb.ref, x0, y0 + a, nb.mv, filt[0], filt[1], w // 2, b - a, bit_depth)
            cur = out[a:b, :w // 2]
            out[a:b, :w // 2] = (m * cur + (64 - m) * rn + 32) >> 6
    return out


# ---------------------------------------------------------------- inter-intra

INTERINTRA_MODES = ("DC", "V", "H", "SMOOTH")


@lru_cache(maxsize=None)
def _decay() -> np.ndarray:
    return np.round(60 * 2.0 ** (-np.arange(128) / 32)).astype(np.int64)


def interintra_mask(mode, w: int, h: int) -> np.ndarray:
    """Weight of the intra prediction per pixel (0..64).  An int selects a wedge mask."""
    if isinstance(mode, (int, np.integer)):
        return wedge_masks(w, h)[int(mode)]
    if mode not in INTERINTRA_MODES:
        raise ValueError(f"inter-intra mode {mode} not allowed")
    d = _decay()
    rows = d[np.arange(h) * 128 // max(h, 1)][:, None]
    cols = d[np.arange(w) * 128 // max(w, 1)][None, :]
    if mode == "DC":
        return np.full((h, w), 32, dtype=np.int64)
    if mode == "V":
        return np.broadcast_to(rows, (h, w)).copy()
    if mode == "H":
        return np.broadcast_to(cols, (h, w)).copy()
    return np.minimum(rows, cols)  # distance to the nearer edge controls the decay


def interintra_blend(inter: np.ndarray, intra: np.ndarray, mode) -> np.ndarray:
    inter = np.asarray(inter, dtype=np.int64)
    return blend_compound(intra, inter, interintra_mask(mode, inter.shape[1], inter.shape[0]))
