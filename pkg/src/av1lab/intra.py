"""Intra predictors: directional, smooth, Paeth, recursive filter, CfL, palette, intra block copy."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

ANGLE_STEP = 3
BASE_ANGLES = {
    "V": 90, "H": 180, "D45": 45, "D135": 135,
    "D113": 113, "D157": 157, "D203": 203, "D67": 67,
}
POS_BITS = 6  # fractional bits of projected positions

SMOOTH_WEIGHTS = {
    4: [255, 149, 85, 64],
    8: [255, 197, 146, 105, 73, 50, 37, 32],
    16: [255, 225, 196, 170, 145, 123, 102, 84, 68, 54, 43, 33, 26, 20, 17, 16],
    32: [255, 240, 225, 210, 196, 182, 169, 157, 145, 133, 122, 111, 101, 92, 83, 74,
         66, 59, 52, 45, 39, 34, 29, 25, 21, 17, 14, 12, 10, 9, 8, 8],
    64: [255, 248, 240, 233, 225, 218, 210, 203, 196, 189, 182, 176, 169, 163, 156,
         150, 144, 138, 133, 127, 121, 116, 111, 106, 101, 96, 91, 86, 82, 77, 73, 69,
         65, 61, 57, 54, 50, 47, 44, 41, 38, 35, 32, 29, 27, 25, 22, 20, 18, 16, 15,
         13, 12, 10, 9, 8, 7, 6, 6, 5, 5, 4, 4, 4],
}
SMOOTH_BITS = 8

# (alpha, beta, gamma) weight the above, left and above-left neighbours.
RECURSIVE_SETS = (
    (Fraction(3, 4), Fraction(3, 4), Fraction(-1, 2)),   # planar-like
    (Fraction(1), Fraction(0), Fraction(0)),             # vertical continuation
    (Fraction(0), Fraction(1), Fraction(0)),             # horizontal continuation
    (Fraction(1, 2), Fraction(1, 2), Fraction(0)),       # smooth average
    (Fraction(7, 8), Fraction(3, 8), Fraction(-1, 4)),   # vertical-leaning gradient
)
RECURSIVE_BITS = 20


@dataclass(frozen=True)
class IntraEdges:
    """Reference samples; `above` and `left` extend to w + h samples."""

    above: np.ndarray
    left: np.ndarray
    top_left: int
    bit_depth: int = 8

    @classmethod
    def make(cls, above, left, top_left, bit_depth=8, length=None):
        a = np.asarray(above, dtype=np.int64)
        l = np.asarray(left, dtype=np.int64)
        n = length or max(2 * len(a), 2 * len(l))
        a = np.concatenate([a, np.full(max(0, n - len(a)), a[-1])])
        l = np.concatenate([l, np.full(max(0, n - len(l)), l[-1])])
        return cls(a, l, int(top_left), bit_depth)

    def shifted(self, c: int) -> "IntraEdges":
        return IntraEdges(self.above + c, self.left + c, self.top_left + c, self.bit_depth)


@dataclass(frozen=True)
class DirectionalMode:
    base_mode: str
    angle_delta: int = 0

    def __post_init__(self):
        if self.base_mode not in BASE_ANGLES:
            raise ValueError(f"unknown directional mode {self.base_mode}")
        if not -3 <= self.angle_delta <= 3:
            raise ValueError("angle delta outside [-3, 3]")

    @property
    def angle(self) -> int:
        return BASE_ANGLES[self.base_mode] + ANGLE_STEP * self.angle_delta


def gather_edges(recon: np.ndarray, avail: np.ndarray, x: int, y: int, w: int, h: int,
                 bit_depth: int = 8) -> IntraEdges:
    """Collect edges of the block at (x, y); `avail` marks samples usable as reference."""
    hh, ww = recon.shape
    n = w + h
    mid = 1 << (bit_depth - 1)

    def run(coords):
        vals = []
        for yy, xx in coords:
            if 0 <= yy < hh and 0 <= xx < ww and avail[yy, xx]:
                vals.append(int(recon[yy, xx]))
            else:
                break
        return vals

    above = run([(y - 1, x + i) for i in range(n)])
    left = run([(y + j, x - 1) for j in range(n)])
    tl_ok = y > 0 and x > 0 and avail[y - 1, x - 1]
    if not above and not left:
        above = left = [mid]
        tl = mid
    elif not above:
        above = [left[0]]
        tl = left[0]
    elif not left:
        left = [above[0]]
        tl = above[0]
    else:
        tl = int(recon[y - 1, x - 1]) if tl_ok else (above[0] + left[0] + 1) >> 1
    return IntraEdges.make(above, left, tl, bit_depth, n)


def _clip(x, bit_depth):
    return np.clip(x, 0, (1 << bit_depth) - 1)


def predict_dc(edges: IntraEdges, w: int, h: int) -> np.ndarray:
    s = int(edges.above[:w].sum() + edges.left[:h].sum())
    return np.full((h, w), (s + ((w + h) >> 1)) // (w + h), dtype=np.int64)


def _positions(angle: float, w: int, h: int):
    """Exact projected reference positions: ('above', x) or ('left', y) per pixel."""
    r = np.arange(h, dtype=np.float64)[:, None] * np.ones((1, w))
    c = np.ones((h, 1)) * np.arange(w, dtype=np.float64)[None, :]
    th = np.deg2rad(angle)
    use_above = np.zeros((h, w), dtype=bool)
    pos = np.zeros((h, w))
    if angle == 90:
        use_above[:] = True
        pos = c.copy()
    elif angle == 180:
        pos = r.copy()
    elif angle < 90:
        use_above[:] = True
        pos = c + (r + 1) / np.tan(th)
    elif angle > 180:
        pos = r + (c + 1) * np.tan(th)
    else:
        xa = c + (r + 1) / np.tan(th)
        ya = r + (c + 1) * np.tan(th)
        use_above = xa >= -1
        pos = np.where(use_above, xa, ya)
    return use_above, pos


def _edge_lookup(edges: IntraEdges, use_above, idx):
    """Sample at integer index idx (>= -1, -1 meaning the corner) along the chosen edge."""
    a = np.concatenate([[edges.top_left], edges.above])
    l = np.concatenate([[edges.top_left], edges.left])
    ia = np.clip(idx + 1, 0, len(a) - 1)
    il = np.clip(idx + 1, 0, len(l) - 1)
    return np.where(use_above, a[ia], l[il])


def predict_directional(edges: IntraEdges, mode: DirectionalMode, w: int, h: int) -> np.ndarray:
    if mode.angle_delta and min(w, h) < 8:
        raise ValueError("angle delta must be 0 for blocks smaller than 8x8")
    use_above, pos = _positions(mode.angle, w, h)
    p = np.floor(pos * (1 << POS_BITS) + 0.5).astype(np.int64)
    base = p >> POS_BITS
    frac = p & ((1 << POS_BITS) - 1)
    a = _edge_lookup(edges, use_above, base)
    b = _edge_lookup(edges, use_above, base + 1)
    out = (a * ((1 << POS_BITS) - frac) + b * frac + (1 << (POS_BITS - 1))) >> POS_BITS
    return _clip(out, edges.bit_depth)


def predict_directional_float(edges: IntraEdges, angle: float, w: int, h: int) -> np.ndarray:
    """Unquantised projection with real-valued bilinear interpolation (reference)."""
    use_above, pos = _positions(angle, w, h)
    base = np.floor(pos).astype(np.int64)
    f = pos - base
    a = _edge_lookup(edges, use_above, base)
    b = _edge_lookup(edges, use_above, base + 1)
    return a * (1 - f) + b * f


def _smooth_weights(n: int) -> np.ndarray:
    return np.asarray(SMOOTH_WEIGHTS[n], dtype=np.int64)


def predict_smooth(edges: IntraEdges, variant: str, w: int, h: int) -> np.ndarray:
    top = edges.above[:w][None, :]
    left = edges.left[:h][:, None]
    tr = edges.above[w - 1]
    bl = edges.left[h - 1]
    rnd = 1 << (SMOOTH_BITS - 1)
    wx = _smooth_weights(w)[None, :]
    wy = _smooth_weights(h)[:, None]
    one = 1 << SMOOTH_BITS
    ph = (wx * left + (one - wx) * tr + rnd) >> SMOOTH_BITS
    pv = (wy * top + (one - wy) * bl + rnd) >> SMOOTH_BITS
    if variant == "SMOOTH_H":
        return ph
    if variant == "SMOOTH_V":
        return pv
    if variant == "SMOOTH":
        return (ph + pv + 1) >> 1
    raise ValueError(variant)


def predict_paeth(edges: IntraEdges, w: int, h: int) -> np.ndarray:
    t = edges.above[:w][None, :]
    l = edges.left[:h][:, None]
    tl = edges.top_left
    base = t + l - tl
    dt, dl, dtl = np.abs(base - t), np.abs(base - l), np.abs(base - tl)
    # ties resolved in the order T, L, TL
    return np.where((dt <= dl) & (dt <= dtl), t, np.where(dl <= dtl, l, tl)) * np.ones((h, w), dtype=np.int64)


# ---------------------------------------------------------------- recursive filter


@lru_cache(maxsize=None)
def recursive_patch_taps(set_index: int) -> np.ndarray:
    """8x7 integer taps (scaled by 2**RECURSIVE_BITS) mapping p0..p6 to x0..x7."""
    if not 0 <= set_index < len(RECURSIVE_SETS):
        raise ValueError(f"recursive filter set {set_index} out of range")
    al, be, ga = RECURSIVE_SETS[set_index]
    taps = np.zeros((8, 7), dtype=np.int64)
    for k in range(7):
        p = [Fraction(int(i == k)) for i in range(7)]
        # grid with a border row/column; (0, 0) is p0
        g = [[p[0], p[1], p[2], p[3], p[4]],
             [p[5], None, None, None, None],
             [p[6], None, None, None, None]]
        for r in (1, 2):
            for c in range(1, 5):
                g[r][c] = al * g[r - 1][c] + be * g[r][c - 1] + ga * g[r - 1][c - 1]
        xs = [g[1][c] for c in range(1, 5)] + [g[2][c] for c in range(1, 5)]
        for j, v in enumerate(xs):
            sv = v * (1 << RECURSIVE_BITS)
            if sv.denominator != 1:
                raise AssertionError("tap not representable at the chosen precision")
            taps[j, k] = int(sv)
    return taps


def predict_recursive_filter(edges: IntraEdges, set_index: int, w: int, h: int) -> np.ndarray:
    if w < 4 or h < 2 or w % 4 or h % 2:
        raise ValueError("recursive filter needs a block made of 4x2 patches")
    taps = recursive_patch_taps(set_index)
    g = np.zeros((h + 1, w + 1), dtype=np.int64)
    g[0, 0] = edges.top_left
    g[0, 1:] = edges.above[:w]
    g[1:, 0] = edges.left[:h]
    rnd = 1 << (RECURSIVE_BITS - 1)
    hi = (1 << edges.bit_depth) - 1
    for pr in range(0, h, 2):
        for pc in range(0, w, 4):
            r0, c0 = pr, pc  # top-left corner of the patch's reference frame in g
            p = np.array([g[r0, c0], g[r0, c0 + 1], g[r0, c0 + 2], g[r0, c0 + 3], g[r0, c0 + 4],
                          g[r0 + 1, c0], g[r0 + 2, c0]], dtype=np.int64)
            x = np.clip((taps @ p + rnd) >> RECURSIVE_BITS, 0, hi)
            g[r0 + 1, c0 + 1:c0 + 5] = x[:4]
            g[r0 + 2, c0 + 1:c0 + 5] = x[4:]
    return g[1:, 1:]


def predict_recursive_oracle(edges: IntraEdges, set_index: int, w: int, h: int) -> np.ndarray:
    """Per-pixel recursion with exact rational arithmetic inside each 4x2 patch."""
    al, be, ga = RECURSIVE_SETS[set_index]
    hi = (1 << edges.bit_depth) - 1
    g = [[None] * (w + 1) for _ in range(h + 1)]
    g[0][0] = Fraction(int(edges.top_left))
    for c in range(w):
        g[0][c + 1] = Fraction(int(edges.above[c]))
    for r in range(h):
        g[r + 1][0] = Fraction(int(edges.left[r]))
    out = np.zeros((h, w), dtype=np.int64)
    for pr in range(0, h, 2):
        for pc in range(0, w, 4):
            exact = {}

            def get(r, c):
                if (r, c) in exact:
                    return exact[(r, c)]
                return g[r][c]

            for r in (pr + 1, pr + 2):
                for c in range(pc + 1, pc + 5):
                    exact[(r, c)] = al * get(r - 1, c) + be * get(r, c - 1) + ga * get(r - 1, c - 1)
            for (r, c), v in exact.items():
                q = min(max(int((v + Fraction(1, 2)).__floor__()), 0), hi)
                g[r][c] = Fraction(q)
                out[r - 1, c - 1] = q
    return out


# ---------------------------------------------------------------- chroma from luma


def cfl_subsample(luma: np.ndarray, ssx: int, ssy: int) -> np.ndarray:
    """Luma averaged to chroma resolution, in Q3 (x8) precision."""
    l = np.asarray(luma, dtype=np.int64)
    h, w = l.shape
    s = l.reshape(h >> ssy, 1 << ssy, w >> ssx, 1 << ssx).sum(axis=(1, 3))
    return s << (3 - ssx - ssy)


def predict_cfl(luma_q3: np.ndarray, dc_pred, alpha_q3: int, bit_depth: int = 8) -> np.ndarray:
    """dc + alpha * (luma - mean(luma)); alpha in 1/8 units, luma in Q3."""
    lq = np.asarray(luma_q3, dtype=np.int64)
    n = lq.size
    avg = (int(lq.sum()) + (n >> 1)) // n
    ac = lq - avg
    t = alpha_q3 * ac
    scaled = np.sign(t) * ((np.abs(t) + 32) >> 6)
    return _clip(np.asarray(dc_pred, dtype=np.int64) + scaled, bit_depth)


# ---------------------------------------------------------------- palette


@dataclass(frozen=True)
class Palette:
    colors: tuple[int, ...]
    indices: np.ndarray

    def __post_init__(self):
        if not 2 <= len(self.colors) <= 8:
            raise ValueError("palette needs 2..8 colors")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= len(self.colors)):
            raise ValueError("palette index out of range")


def palette_reconstruct(p: Palette) -> np.ndarray:
    return np.asarray(p.colors, dtype=np.int64)[p.indices]


def palette_fit(block: np.ndarray, k: int, iters: int = 12, bit_depth: int = 8) -> Palette:
    """Deterministic Lloyd iterations from quantile seeds; final indices are nearest-color."""
    if not 2 <= k <= 8:
        raise ValueError("k must be within [2, 8]")
    b = np.asarray(block, dtype=np.int64)
    v = b.ravel().astype(np.float64)
    cent = np.quantile(v, (np.arange(k) + 0.5) / k)
    for _ in range(iters):
        lab = np.argmin(np.abs(v[:, None] - cent[None, :]), axis=1)
        for j in range(k):
            sel = v[lab == j]
            if sel.size:
                cent[j] = sel.mean()
    colors = sorted(set(int(round(c)) for c in cent))
    if len(colors) < 2:
        c0 = colors[0]
        colors.append(c0 + 1 if c0 < (1 << bit_depth) - 1 else c0 - 1)
        colors.sort()
    cols = np.asarray(colors, dtype=np.int64)
    idx = np.argmin(np.abs(b[..., None] - cols), axis=-1)
    return Palette(tuple(colors), idx)


# ---------------------------------------------------------------- intra block copy


def intrabc_copy(recon: np.ndarray, coded: np.ndarray, x: int, y: int, mv: tuple[int, int],
                 w: int, h: int) -> np.ndarray:
    """Full-pel copy from the already coded part of the same frame (mv = (row, col))."""
    dy, dx = mv
    sy, sx = y + dy, x + dx
    H, W = recon.shape
    if sy < 0 or sx < 0 or sy + h > H or sx + w > W:
        raise ValueError("intra block copy source outside the frame")
    if not coded[sy:sy + h, sx:sx + w].all():
        raise ValueError("intra block copy source overlaps samples not yet coded")
    return np.array(recon[sy:sy + h, sx:sx + w], dtype=np.int64)


def intrabc_chroma(recon_c: np.ndarray, xc: int, yc: int, mv_luma: tuple[int, int],
                   w: int, h: int, ssx: int = 1, ssy: int = 1) -> np.ndarray:
    """Chroma copy; odd luma displacements in subsampled axes become half-pel bilinear."""
    dy, dx = mv_luma
    fy, fx = (dy & ssy), (dx & ssx)
    iy, ix = dy >> ssy, dx >> ssx
    sy, sx = yc + iy, xc + ix
    src = np.asarray(recon_c, dtype=np.int64)
    a = src[sy:sy + h + 1, sx:sx + w + 1]
    if a.shape != (h + 1, w + 1):
        a = np.pad(a, ((0, h + 1 - a.shape[0]), (0, w + 1 - a.shape[1])), mode="edge")
    if fx and fy:
        return (a[:-1, :-1] + a[:-1, 1:] + a[1:, :-1] + a[1:, 1:] + 2) >> 2
    if fx:
        return (a[:-1, :-1] + a[:-1, 1:] + 1) >> 1
    if fy:
        return (a[:-1, :-1] + a[1:, :-1] + 1) >> 1
    return a[:-1, :-1].copy()


INTRA_MODES = ("DC", "V", "H", "D45", "D135", "D113", "D157", "D203", "D67",
               "SMOOTH", "SMOOTH_V", "SMOOTH_H", "PAETH") + tuple(f"REC{i}" for i in range(5))


def predict_mode(mode: str, edges: IntraEdges, w: int, h: int, angle_delta: int = 0) -> np.ndarray:
    """Uniform dispatcher used by the codec."""
    if mode == "DC":
        return predict_dc(edges, w, h)
    if mode in BASE_ANGLES:
        return predict_directional(edges, DirectionalMode(mode, angle_delta), w, h)
    if mode.startswith("SMOOTH"):
        return predict_smooth(edges, mode, w, h)
    if mode == "PAETH":
        return predict_paeth(edges, w, h)
    if mode.startswith("REC"):
        return predict_recursive_filter(edges, int(mode[3:]), w, h)
    raise ValueError(mode)
