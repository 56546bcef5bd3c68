"""Loop restoration: separable Wiener filter and self-guided projection filter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LRU_SIZES = (64, 128, 256)
WIENER_BITS = 7  # taps sum to 1 << WIENER_BITS
WIENER_H_SHIFT = 3
WIENER_V_SHIFT = 2 * WIENER_BITS - WIENER_H_SHIFT
# Allowed range of the three transmitted taps, outermost first.
WIENER_TAP_RANGES = ((-5, 10), (-23, 8), (-17, 46))
WIENER_IDENTITY = (0, 0, 0)
SGR_RADII = (1, 2, 3)
SGR_PROJ_BITS = 7  # alpha, beta carried in 1/128 units
SGR_PROJ_RANGE = (-96, 95)
# Encoder presets (r1, e1, r2, e2).
SGR_PRESETS = (
    (2, 140, 1, 3236),
    (2, 25, 1, 1400),
    (2, 1000, 1, 8000),
    (1, 60, 2, 400),
)


# ---------------------------------------------------------------- Wiener

def wiener_full_taps(taps3) -> tuple[int, ...]:
    """Expand (c0, c1, c2) to the symmetric 7-tap filter with the centre fixing the sum."""
    c0, c1, c2 = (int(v) for v in taps3)
    for v, (lo, hi) in zip((c0, c1, c2), WIENER_TAP_RANGES):
        if not lo <= v <= hi:
            raise ValueError(f"wiener tap {v} outside [{lo}, {hi}]")
    c3 = (1 << WIENER_BITS) - 2 * (c0 + c1 + c2)
    return (c0, c1, c2, c3, c2, c1, c0)


def _pad(x: np.ndarray, r: int) -> np.ndarray:
    return np.pad(x, r, mode="edge")


def wiener_apply(lru, v_taps3, h_taps3, bit_depth: int = 8) -> np.ndarray:
    """Separable 7x7 filter (rows first), borders replicated."""
    x = np.asarray(lru, dtype=np.int64)
    hk = wiener_full_taps(h_taps3)
    vk = wiener_full_taps(v_taps3)
    H, W = x.shape
    p = _pad(x, 3)
    mid = np.zeros((H + 6, W), dtype=np.int64)
    for k, c in enumerate(hk):
        mid += c * p[:, k:k + W]
    mid = (mid + (1 << (WIENER_H_SHIFT - 1))) >> WIENER_H_SHIFT
    out = np.zeros((H, W), dtype=np.int64)
    for k, c in enumerate(vk):
        out += c * mid[k:k + H, :]
    out = (out + (1 << (WIENER_V_SHIFT - 1))) >> WIENER_V_SHIFT
    return np.clip(out, 0, (1 << bit_depth) - 1)


def wiener_apply_dense(lru, v_taps3, h_taps3, bit_depth: int = 8) -> np.ndarray:
    """Reference: one dense 7x7 kernel in floating point, rounded once."""
    x = np.asarray(lru, dtype=np.float64)
    k2 = np.outer(wiener_full_taps(v_taps3), wiener_full_taps(h_taps3)) / float(1 << (2 * WIENER_BITS))
    H, W = x.shape
    p = np.pad(x, 3, mode="edge")
    out = np.zeros((H, W))
    for i in range(7):
        for j in range(7):
            out += k2[i, j] * p[i:i + H, j:j + W]
    return np.clip(np.floor(out + 0.5), 0, (1 << bit_depth) - 1).astype(np.int64)


def _sym_design(src_rows: np.ndarray, rec_rows: np.ndarray) -> np.ndarray:
    """Least-squares symmetric 7-tap filter (along axis 1) mapping rec to src, as floats."""
    H, W = rec_rows.shape
    p = np.pad(rec_rows.astype(np.float64), ((0, 0), (3, 3)), mode="edge")
    cen = p[:, 3:3 + W]
    # unknowns c0, c1, c2 with c3 = 1 - 2(c0+c1+c2)
    cols = [p[:, k:k + W] + p[:, 6 - k:6 - k + W] - 2 * cen for k in range(3)]
    A = np.stack([c.ravel() for c in cols], axis=1)
    b = (src_rows - cen).ravel()
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def _quant_taps(sol: np.ndarray) -> tuple[int, int, int]:
    q = np.rint(sol * (1 << WIENER_BITS)).astype(int)
    return tuple(int(np.clip(v, lo, hi)) for v, (lo, hi) in zip(q, WIENER_TAP_RANGES))


def wiener_estimate(src, rec, bit_depth: int = 8) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
    """Encoder: fit horizontal taps, then vertical taps on the horizontally filtered unit."""
    s = np.asarray(src, dtype=np.float64)
    r = np.asarray(rec, dtype=np.int64)
    h = _quant_taps(_sym_design(s, r))
    mid = wiener_apply(r, WIENER_IDENTITY, h, bit_depth)
    v = _quant_taps(_sym_design(s.T, mid.T))
    return v, h


# ---------------------------------------------------------------- self-guided

def _box_sums(x: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Window sum and sum of squares over (2r+1)^2 neighbourhoods, replicate-padded."""
    H, W = x.shape
    p = _pad(x, r)
    ii = np.zeros((H + 2 * r + 1, W + 2 * r + 1), dtype=np.int64)
    ii[1:, 1:] = p.cumsum(0).cumsum(1)
    sq = np.zeros_like(ii)
    sq[1:, 1:] = (p * p).cumsum(0).cumsum(1)
    k = 2 * r + 1

    def box(t):
        return t[k:k + H, k:k + W] - t[:H, k:k + W] - t[k:k + H, :W] + t[:H, :W]

    return box(ii), box(sq)


def sgr_denoise(x, r: int, e: int) -> np.ndarray:
    """Per-pixel blend of the pixel and its window mean, weighted by local variance vs e.

    With n = (2r+1)^2, S and SS the window sum and sum of squares, the blend is
    evaluated exactly as ((n SS - S^2) x + e n S) / ((n SS - S^2) + e n^2),
    rounded half up.
    """
    x = np.asarray(x, dtype=np.int64)
    if r not in SGR_RADII:
        raise ValueError(f"radius {r} not in {SGR_RADII}")
    if e < 0:
        raise ValueError("e must be non-negative")
    n = (2 * r + 1) ** 2
    s, ss = _box_sums(x, r)
    var_n2 = n * ss - s * s
    num = var_n2 * x + e * n * s
    den = var_n2 + e * n * n
    safe = np.where(den == 0, 1, den)
    out = (2 * num + safe) // (2 * safe)
    return np.where(den == 0, x, out)


def sgr_solve(x, x1, x2, xs) -> tuple[float, float]:
    """Least-squares (alpha, beta) for xs ~ x + alpha (x1 - x) + beta (x2 - x); (0, 0) if singular."""
    x = np.asarray(x, dtype=np.float64).ravel()
    a = np.stack([np.asarray(x1, dtype=np.float64).ravel() - x,
                  np.asarray(x2, dtype=np.float64).ravel() - x], axis=1)
    b = np.asarray(xs, dtype=np.float64).ravel() - x
    ata = a.T @ a
    atb = a.T @ b
    det = ata[0, 0] * ata[1, 1] - ata[0, 1] * ata[1, 0]
    scale = max(float(np.abs(ata).max()), 1.0)
    if abs(det) <= 1e-12 * scale * scale:
        return 0.0, 0.0
    alpha = (ata[1, 1] * atb[0] - ata[0, 1] * atb[1]) / det
    beta = (ata[0, 0] * atb[1] - ata[1, 0] * atb[0]) / det
    return float(alpha), float(beta)


def sgr_restore(x, x1, x2, alpha: float, beta: float) -> np.ndarray:
    """x + alpha (x1 - x) + beta (x2 - x) in floating point."""
    x = np.asarray(x, dtype=np.float64)
    return x + alpha * (np.asarray(x1) - x) + beta * (np.asarray(x2) - x)


def sgr_restore_int(x, x1, x2, qa: int, qb: int, bit_depth: int = 8) -> np.ndarray:
    """Integer form with alpha, beta in 1/128 units; rounded and clipped."""
    x = np.asarray(x, dtype=np.int64)
    acc = qa * (np.asarray(x1, dtype=np.int64) - x) + qb * (np.asarray(x2, dtype=np.int64) - x)
    half = 1 << (SGR_PROJ_BITS - 1)
    corr = np.where(acc >= 0, (acc + half) >> SGR_PROJ_BITS, -((-acc + half) >> SGR_PROJ_BITS))
    return np.clip(x + corr, 0, (1 << bit_depth) - 1)


def sgr_quantize(alpha: float, beta: float) -> tuple[int, int]:
    lo, hi = SGR_PROJ_RANGE
    q = 1 << SGR_PROJ_BITS
    return int(np.clip(round(alpha * q), lo, hi)), int(np.clip(round(beta * q), lo, hi))


# ---------------------------------------------------------------- per-unit selection

@dataclass(frozen=True)
class RestorationUnit:
    mode: str = "bypass"  # "bypass", "wiener" or "sgr"
    wiener_v: tuple[int, int, int] = WIENER_IDENTITY
    wiener_h: tuple[int, int, int] = WIENER_IDENTITY
    sgr_set: int = 0
    sgr_proj: tuple[int, int] = (0, 0)


def restore_unit(rec, unit: RestorationUnit, bit_depth: int = 8) -> np.ndarray:
    rec = np.asarray(rec, dtype=np.int64)
    if unit.mode == "bypass":
        return rec.copy()
    if unit.mode == "wiener":
        return wiener_apply(rec, unit.wiener_v, unit.wiener_h, bit_depth)
    if unit.mode == "sgr":
        r1, e1, r2, e2 = SGR_PRESETS[unit.sgr_set]
        return sgr_restore_int(rec, sgr_denoise(rec, r1, e1), sgr_denoise(rec, r2, e2),
                               *unit.sgr_proj, bit_depth=bit_depth)
    raise ValueError(f"unknown restoration mode {unit.mode!r}")


def _sse(a, b) -> int:
    d = np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)
    return int((d * d).sum())


def choose_unit(src, rec, bit_depth: int = 8) -> RestorationUnit:
    """Encoder: pick the mode with the lowest error; bypass unless a filter strictly helps."""
    rec = np.asarray(rec, dtype=np.int64)
    best, best_err = RestorationUnit(), _sse(src, rec)
    if min(rec.shape) < 2:
        return best
    v, h = wiener_estimate(src, rec, bit_depth)
    cand = RestorationUnit("wiener", wiener_v=v, wiener_h=h)
    err = _sse(src, restore_unit(rec, cand, bit_depth))
    if err < best_err:
        best, best_err = cand, err
    for i, (r1, e1, r2, e2) in enumerate(SGR_PRESETS):
        x1, x2 = sgr_denoise(rec, r1, e1), sgr_denoise(rec, r2, e2)
        qa, qb = sgr_quantize(*sgr_solve(rec, x1, x2, src))
        err = _sse(src, sgr_restore_int(rec, x1, x2, qa, qb, bit_depth))
        if err < best_err:
            best, best_err = RestorationUnit("sgr", sgr_set=i, sgr_proj=(qa, qb)), err
    return best


def lru_grid(height: int, width: int, size: int) -> list[tuple[int, int, int, int]]:
    """(y, x, h, w) of the units tiling a plane; edge units are clipped."""
    if size not in LRU_SIZES:
        raise ValueError(f"unit size {size} not in {LRU_SIZES}")
    return [(y, x, min(size, height - y), min(size, width - x))
            for y in range(0, height, size) for x in range(0, width, size)]


def restore_plane(rec, units: list[RestorationUnit], size: int, bit_depth: int = 8) -> np.ndarray:
    rec = np.asarray(rec, dtype=np.int64)
    out = rec.copy()
    for (y, x, h, w), u in zip(lru_grid(*rec.shape, size), units):
        out[y:y + h, x:x + w] = restore_unit(rec[y:y + h, x:x + w], u, bit_depth)
    return out


def choose_plane(src, rec, size: int, bit_depth: int = 8) -> list[RestorationUnit]:
    src = np.asarray(src)
    rec = np.asarray(rec)
    return [choose_unit(src[y:y + h, x:x + w], rec[y:y + h, x:x + w], bit_depth)
            for y, x, h, w in lru_grid(*rec.shape, size)]
