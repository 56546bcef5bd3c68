"""Constrained directional enhancement filter on 8x8 units."""
from __future__ import annotations

import numpy as np

BLOCK = 8
# Primary tap offsets (row, col) at distance 1 and 2 along each direction.
# d=0 is the 45-degree diagonal, 2 horizontal, 4 the 135-degree diagonal,
# 6 vertical; odd directions sit halfway between (about 22.5 degrees apart).
DIRECTIONS = (
    ((-1, 1), (-2, 2)),
    ((0, 1), (-1, 2)),
    ((0, 1), (0, 2)),
    ((0, 1), (1, 2)),
    ((1, 1), (2, 2)),
    ((1, 0), (2, 1)),
    ((1, 0), (2, 0)),
    ((1, 0), (2, -1)),
)
SEC_WEIGHTS = (2, 1)  # in 1/16
_LCM = 840  # lcm(1..8): makes line-mean costs exact integers


def line_index(d: int, i: int, j: int) -> int:
    """Index of the line through pixel (row i, col j) for direction d."""
    return (i + j, i + (j >> 1), i, 3 + i - (j >> 1), 7 + i - j, 3 - (i >> 1) + j, j,
            (i >> 1) + j)[d]


def _line_ids() -> np.ndarray:
    ids = np.zeros((8, BLOCK, BLOCK), dtype=np.int64)
    for d in range(8):
        for i in range(BLOCK):
            for j in range(BLOCK):
                ids[d, i, j] = line_index(d, i, j)
    return ids


_IDS = _line_ids()


_COUNTS = [np.bincount(_IDS[d].ravel(), minlength=15) for d in range(8)]


def direction_costs(block) -> list[int]:
    """840 * sum_k S_k^2 / |P_k| per direction (larger means smaller E_d^2)."""
    x = np.asarray(block, dtype=np.int64).ravel()
    out = []
    for d in range(8):
        sums = np.bincount(_IDS[d].ravel(), weights=x, minlength=15).astype(np.int64)
        n = _COUNTS[d]
        out.append(int(sum(int(sums[k]) ** 2 * (_LCM // int(n[k])) for k in range(15) if n[k])))
    return out


def cdef_direction(block) -> tuple[int, float]:
    """Direction with the least within-line variance, and E_d^2 of that direction.

    E_d^2 = sum x^2 - sum_k S_k^2 / |P_k|; ties go to the lowest index.
    """
    x = np.asarray(block, dtype=np.int64)
    if x.shape != (BLOCK, BLOCK):
        raise ValueError("direction search needs a full 8x8 block")
    costs = direction_costs(x)
    best = max(range(8), key=lambda d: (costs[d], -d))
    e = (int((x * x).sum()) * _LCM - costs[best]) / _LCM
    return best, float(e)


def cdef_constrain(diff: int, strength: int, damping: int) -> int:
    """Keep small differences, fade larger ones, drop outliers beyond the strength."""
    if strength == 0 or diff == 0:
        return 0
    shift = max(0, damping - (int(strength).bit_length() - 1))
    mag = min(abs(diff), max(0, strength - (abs(diff) >> shift)))
    return mag if diff > 0 else -mag


def _constrain_arr(diff: np.ndarray, strength: int, damping: int) -> np.ndarray:
    if strength == 0:
        return np.zeros_like(diff)
    shift = max(0, damping - (int(strength).bit_length() - 1))
    mag = np.minimum(np.abs(diff), np.maximum(0, strength - (np.abs(diff) >> shift)))
    return np.sign(diff) * mag


def primary_weights(strength: int) -> tuple[int, int]:
    return (4, 2) if strength % 2 == 0 else (3, 3)


def cdef_filter(src: np.ndarray, y0: int, x0: int, h: int, w: int, d: int, sp: int, ss: int,
                damping: int, valid: np.ndarray | None = None) -> np.ndarray:
    """Filter src[y0:y0+h, x0:x0+w]; taps outside the plane (or outside `valid`) are ignored.

    The output is clamped to the range of the pixel and the taps it used.
    """
    src = np.asarray(src, dtype=np.int64)
    H, W = src.shape
    ys, xs = np.mgrid[y0:y0 + h, x0:x0 + w]
    x = src[ys, xs]
    total = np.zeros_like(x)
    lo, hi = x.copy(), x.copy()
    pw = primary_weights(sp)
    taps = []
    for k in range(2):
        taps.append((DIRECTIONS[d][k], pw[k], sp))
        for dd in ((d + 2) & 7, (d - 2) & 7):
            taps.append((DIRECTIONS[dd][k], SEC_WEIGHTS[k], ss))
    for (dy, dx), wgt, s in taps:
        for sgn in (1, -1):
            ty, tx = ys + sgn * dy, xs + sgn * dx
            ok = (ty >= 0) & (ty < H) & (tx >= 0) & (tx < W)
            if valid is not None:
                ok &= valid[np.clip(ty, 0, H - 1), np.clip(tx, 0, W - 1)]
            t = src[np.clip(ty, 0, H - 1), np.clip(tx, 0, W - 1)]
            t = np.where(ok, t, x)
            if s:
                total += wgt * _constrain_arr(t - x, s, damping)
                lo = np.minimum(lo, t)
                hi = np.maximum(hi, t)
    y = x + ((8 + total - (total < 0)) >> 4)
    return np.clip(y, lo, hi)


def cdef_apply(block, d: int, sp: int, ss: int, damping: int) -> np.ndarray:
    """Filter a stand-alone block (taps falling outside it are ignored)."""
    b = np.asarray(block, dtype=np.int64)
    return cdef_filter(b, 0, 0, b.shape[0], b.shape[1], d, sp, ss, damping)


def max_perturbation(sp: int, ss: int) -> int:
    """Upper bound on |output - input| implied by the tap weights and strengths."""
    pw = primary_weights(sp)
    acc = 2 * sum(pw) * sp + 4 * sum(SEC_WEIGHTS) * ss
    return (acc + 8) >> 4


def cdef_plane(plane: np.ndarray, sp: int, ss: int, damping: int, skip: np.ndarray | None = None,
               unit: int = BLOCK) -> tuple[np.ndarray, np.ndarray]:
    """Direction search and filtering of every 8x8 unit; returns (filtered, directions).

    Units flagged in `skip` (per 8x8) are copied unfiltered.
    """
    src = np.asarray(plane, dtype=np.int64)
    H, W = src.shape
    out = src.copy()
    dirs = np.zeros(((H + unit - 1) // unit, (W + unit - 1) // unit), dtype=np.int64)
    if sp == 0 and ss == 0:
        return out, dirs
    active = np.ones_like(dirs, dtype=bool)
    for by in range(dirs.shape[0]):
        for bx in range(dirs.shape[1]):
            y, x = by * unit, bx * unit
            if skip is not None and skip[by, bx]:
                active[by, bx] = False
                continue
            blk = src[y:y + unit, x:x + unit]
            dirs[by, bx] = cdef_direction(blk)[0] if blk.shape == (BLOCK, BLOCK) else 0
    pix_dir = np.repeat(np.repeat(dirs, unit, 0), unit, 1)[:H, :W]
    pix_on = np.repeat(np.repeat(active, unit, 0), unit, 1)[:H, :W]
    for d in np.unique(dirs[active]):
        m = pix_on & (pix_dir == d)
        out[m] = cdef_filter(src, 0, 0, H, W, int(d), sp, ss, damping)[m]
    return out, dirs
