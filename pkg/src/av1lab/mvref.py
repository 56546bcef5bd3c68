"""Motion-vector referencing: spatial scan, motion-field projection, compact storage, ranked list."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MV_STORE_LIMIT = 1 << 12  # stored components must satisfy |v| < 2**12
MAX_STORED_REFS = 4
DISCARDED = 0xFFFFFFFF
MAX_SPATIAL = 8
MAX_LIST = 4
_FIELD_BITS = 13

Mv = tuple[int, int]


# ---------------------------------------------------------------- compact storage

def pack_mv(mv: Mv, ref_idx: int) -> int:
    """32-bit record: ref index in bits 0-1, row in 2-14, col in 15-27 (two's complement)."""
    row, col = int(mv[0]), int(mv[1])
    if abs(row) >= MV_STORE_LIMIT or abs(col) >= MV_STORE_LIMIT or not 0 <= ref_idx < MAX_STORED_REFS:
        return DISCARDED
    mask = (1 << _FIELD_BITS) - 1
    return ref_idx | ((row & mask) << 2) | ((col & mask) << (2 + _FIELD_BITS))


def unpack_mv(rec: int) -> tuple[Mv, int] | None:
    rec = int(rec)
    if rec == DISCARDED:
        return None
    mask = (1 << _FIELD_BITS) - 1

    def signed(v: int) -> int:
        return v - (1 << _FIELD_BITS) if v >> (_FIELD_BITS - 1) else v

    return (signed((rec >> 2) & mask), signed((rec >> (2 + _FIELD_BITS)) & mask)), rec & 3


def pack_grid(mvs: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Pack an (R, C, 2) motion array and (R, C) ref indices (-1 = none) into records."""
    out = np.full(refs.shape, DISCARDED, dtype=np.uint32)
    for (r, c), ref in np.ndenumerate(refs):
        if ref >= 0:
            out[r, c] = pack_mv(tuple(mvs[r, c]), int(ref))
    return out


# ---------------------------------------------------------------- motion field

NONE, EXTRAPOLATED, INTERPOLATED = 0, 1, 2


@dataclass
class MotionField:
    """Projected motion per 8x8 block of the current frame."""

    rows: int
    cols: int
    mv: np.ndarray = None
    kind: np.ndarray = None
    writes: list = field(default_factory=list)

    def __post_init__(self):
        if self.mv is None:
            self.mv = np.zeros((self.rows, self.cols, 2), dtype=np.int64)
        if self.kind is None:
            self.kind = np.zeros((self.rows, self.cols), dtype=np.int8)

    def write(self, r: int, c: int, mv: Mv, kind: int) -> bool:
        """Store unless an entry of equal or higher priority is already present."""
        if self.kind[r, c] >= kind:
            return False
        self.mv[r, c] = mv
        self.kind[r, c] = kind
        self.writes.append((r, c, kind))
        return True


def window(ref_blk_row: int, ref_blk_col: int) -> tuple[range, range]:
    """Rows and columns (8x8 units) a projection from this source block may land on."""
    base_row = (ref_blk_row >> 3) << 3
    base_col = (ref_blk_col >> 3) << 3
    return range(base_row, base_row + 8), range(base_col - 8, base_col + 16)


def _scale(v: int, num: int, den: int) -> int:
    """v * num / den rounded half away from zero."""
    p = abs(v) * num
    q = (2 * p + den) // (2 * den)
    return q if v >= 0 else -q


def project_motion_field(stored: np.ndarray, d1: int, d2: int, d3: int, same_side: bool = False,
                         interpolate: bool = True, out: MotionField | None = None) -> MotionField:
    """Project a source frame's stored motion onto the current frame.

    stored holds packed records per 8x8 block; each motion vector spans d1
    frames.  d3 is the current-to-source distance and d2 the distance to the
    target reference.  interpolate selects whether the trajectory crosses the
    current frame; same_side tells whether the target reference lies on the
    same side of the current frame as the frame the stored vectors point to.
    """
    if min(d1, d2, d3) < 1:
        raise ValueError("frame distances must be >= 1")
    rows, cols = stored.shape
    if out is None:
        out = MotionField(rows, cols)
    kind = INTERPOLATED if interpolate else EXTRAPOLATED
    step = 1 if interpolate else -1
    sign = 1 if same_side else -1
    for (r, c), rec in np.ndenumerate(stored):
        u = unpack_mv(rec)
        if u is None:
            continue
        (mr, mc), _ = u
        # block centre in 1/8 pel, moved along the trajectory
        pr = (r * 8 + 4) * 8 + step * _scale(mr, d3, d1)
        pc = (c * 8 + 4) * 8 + step * _scale(mc, d3, d1)
        br, bc = pr // 64, pc // 64
        wr, wc = window(r, c)
        if br not in wr or bc not in wc or not (0 <= br < out.rows and 0 <= bc < out.cols):
            continue
        mf = (sign * _scale(mr, d2, d1), sign * _scale(mc, d2, d1))
        if out.write(br, bc, mf, kind):
            assert br in wr and bc in wc
    return out


# ---------------------------------------------------------------- spatial scan

@dataclass
class MotionGrid:
    """Motion at 4x4 granularity: ref0 = -1 marks intra or unavailable units."""

    ref0: np.ndarray
    mv0: np.ndarray
    ref1: np.ndarray | None = None
    mv1: np.ndarray | None = None

    @classmethod
    def empty(cls, rows4: int, cols4: int) -> "MotionGrid":
        return cls(np.full((rows4, cols4), -1, dtype=np.int64),
                   np.zeros((rows4, cols4, 2), dtype=np.int64),
                   np.full((rows4, cols4), -1, dtype=np.int64),
                   np.zeros((rows4, cols4, 2), dtype=np.int64))

    def fill(self, x: int, y: int, w: int, h: int, ref, mv) -> None:
        """Record a coded block given in pixels; ref/mv may be pairs for compound."""
        ys, xs = slice(y // 4, (y + h) // 4), slice(x // 4, (x + w) // 4)
        if isinstance(ref, tuple):
            self.ref0[ys, xs], self.ref1[ys, xs] = ref
            self.mv0[ys, xs], self.mv1[ys, xs] = mv
        else:
            self.ref0[ys, xs] = ref
            self.ref1[ys, xs] = -1
            self.mv0[ys, xs] = mv

    def at(self, r4: int, c4: int):
        if not (0 <= r4 < self.ref0.shape[0] and 0 <= c4 < self.ref0.shape[1]):
            return None
        if self.ref0[r4, c4] < 0:
            return None
        if self.ref1 is not None and self.ref1[r4, c4] >= 0:
            return ((int(self.ref0[r4, c4]), int(self.ref1[r4, c4])),
                    (tuple(int(v) for v in self.mv0[r4, c4]), tuple(int(v) for v in self.mv1[r4, c4])))
        return int(self.ref0[r4, c4]), tuple(int(v) for v in self.mv0[r4, c4])


@dataclass
class MvCandidate:
    mv: object  # (row, col) or a pair of them for compound references
    weight: int = 1
    from_nearest: bool = False
    order: int = 0


def spatial_scan_units(x: int, y: int, w: int, h: int) -> list[tuple[str, int, int]]:
    """(group, row4, col4) in visiting order.  Outer rows and columns use the
    bottom-right 4x4 unit of each 8x8 block."""
    r0, c0 = y >> 2, x >> 2
    out = [("near", r0 - 1, c) for c in range(c0, (x + w + 3) >> 2)]
    out += [("near", r, c0 - 1) for r in range(r0, (y + h + 3) >> 2)]
    out.append(("near", r0 - 1, (x + w) >> 2))  # top-right
    out.append(("outer", r0 - 1, c0 - 1))  # top-left
    b_r, b_c = y >> 3, x >> 3
    cols8 = range(b_c, (x + w + 7) >> 3)
    rows8 = range(b_r, (y + h + 7) >> 3)
    for k in (2, 3):
        out += [("outer", 2 * (b_r - k) + 1, 2 * c + 1) for c in cols8]
        out += [("outer", 2 * r + 1, 2 * (b_c - k) + 1) for r in rows8]
    return out


def scan_spatial_refs(grid: MotionGrid, x: int, y: int, w: int, h: int, ref) -> list[MvCandidate]:
    """Distinct motion vectors of neighbours that use `ref` (an index, or a pair)."""
    found: dict = {}
    for group, r4, c4 in spatial_scan_units(x, y, w, h):
        info = grid.at(r4, c4)
        if info is None or info[0] != ref:
            continue
        mv = info[1]
        cand = found.get(mv)
        if cand is None:
            if len(found) >= MAX_SPATIAL:
                continue
            cand = found[mv] = MvCandidate(mv, 0, False, len(found))
        cand.weight += 1
        cand.from_nearest |= group == "near"
    return list(found.values())


def temporal_candidates(mf: MotionField, x: int, y: int, w: int, h: int) -> list[MvCandidate]:
    """Projected motion of the 8x8 blocks covered by the block, with counts."""
    found: dict = {}
    for r in range(y >> 3, min((y + h + 7) >> 3, mf.rows)):
        for c in range(x >> 3, min((x + w + 7) >> 3, mf.cols)):
            if mf.kind[r, c] == NONE:
                continue
            mv = (int(mf.mv[r, c, 0]), int(mf.mv[r, c, 1]))
            if mv in found:
                found[mv].weight += 1
            else:
                found[mv] = MvCandidate(mv, 1, False, len(found))
    return list(found.values())


def build_ref_list(spatial: Sequence[MvCandidate], temporal: Sequence[MvCandidate] = (),
                   neighbor_nonzero_diff: bool = False) -> tuple[list[MvCandidate], int]:
    """Rank candidates: nearest-neighbour ones first, each group by descending count.

    Returns at most four candidates and the context class (0..3) of the
    zero-difference flag: 2 * neighbour-had-nonzero-difference + enough-candidates.
    """
    merged: dict = {}
    seq = 0
    for c in list(spatial) + list(temporal):
        if c.mv in merged:
            merged[c.mv].weight += c.weight
            merged[c.mv].from_nearest |= c.from_nearest
        else:
            merged[c.mv] = MvCandidate(c.mv, c.weight, c.from_nearest, seq)
            seq += 1
    cands = list(merged.values())
    near = sorted((c for c in cands if c.from_nearest), key=lambda c: (-c.weight, c.order))
    rest = sorted((c for c in cands if not c.from_nearest), key=lambda c: (-c.weight, c.order))
    ranked = (near + rest)[:MAX_LIST]
    ctx = 2 * int(bool(neighbor_nonzero_diff)) + int(len(ranked) >= 2)
    return ranked, ctx
