"""Level-map coding of quantised transform coefficients.

Per transform block, in stream order:

1. all-zero flag;
2. end-of-block: class ``(eob-1).bit_length()`` as a symbol, then
   ``class-1`` raw offset bits;
3. magnitudes in reverse scan order: BR in {0,1,2,>2} (the last nonzero
   coefficient uses {1,2,>2}), then up to four LR in {0,1,2,>2}, then
   ``HR = |V| - 14`` (>= 1) as order-0 Exp-Golomb of ``HR - 1``;
4. DC sign, context coded from the above/left DC signs;
5. AC signs as raw bits, packed in forward scan order.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .entropy import CdfModel, RangeDecoder, RangeEncoder

BR_BUCKETS = 6
LR_BUCKETS = 4
NUM_LR = 4
LR_LIMIT = 3 + 3 * NUM_LR - 1  # 14: largest value fully described by BR+LR
MAX_LEVEL = (1 << 15) - 1


def scan_kind(v: str, h: str) -> str:
    if v != "IDTX" and h == "IDTX":
        return "col"
    if v == "IDTX" and h != "IDTX":
        return "row"
    return "zigzag"


@lru_cache(maxsize=None)
def _scan(kind: str, hgt: int, wid: int) -> tuple[int, ...]:
    if kind == "row":
        return tuple(range(hgt * wid))
    if kind == "col":
        return tuple(r * wid + c for c in range(wid) for r in range(hgt))
    out = []
    for d in range(hgt + wid - 1):
        rs = range(max(0, d - wid + 1), min(d, hgt - 1) + 1)
        # odd diagonals run down-left, even ones up-right
        rows = rs if d % 2 else reversed(rs)
        out.extend(r * wid + (d - r) for r in rows)
    return tuple(out)


def scan_order(v: str, h: str, hgt: int, wid: int) -> np.ndarray:
    """Raster indices in coding order for an hgt x wid block."""
    return np.array(_scan(scan_kind(v, h), hgt, wid))


def _br_offsets(kind: str):
    if kind == "col":
        return ((1, 0), (2, 0), (3, 0))
    if kind == "row":
        return ((0, 1), (0, 2), (0, 3))
    return ((0, 1), (1, 0), (1, 1), (0, 2), (2, 0))


def _lr_offsets(kind: str):
    if kind == "zigzag":
        return ((0, 1), (1, 0), (1, 1))
    return _br_offsets(kind)


def br_bucket(total: int) -> int:
    return min((total + 1) >> 1, BR_BUCKETS - 1)


def lr_bucket(total: int) -> int:
    return min((total + 1) >> 1, LR_BUCKETS - 1)


def _nsum(mag, r, c, offs) -> int:
    hgt, wid = len(mag), len(mag[0])
    s = 0
    for dr, dc in offs:
        rr, cc = r + dr, c + dc
        if rr < hgt and cc < wid:
            s += mag[rr][cc]
    return s


def br_context(levels, pos: tuple[int, int], v: str, h: str) -> int:
    mag = np.abs(np.asarray(levels)).tolist()
    return br_bucket(_nsum(mag, *pos, _br_offsets(scan_kind(v, h))))


def lr_context(levels, pos: tuple[int, int], v: str, h: str) -> int:
    mag = np.abs(np.asarray(levels)).tolist()
    return lr_bucket(_nsum(mag, *pos, _lr_offsets(scan_kind(v, h))))


def decompose_level(a: int) -> tuple[int, list[int], int | None]:
    """|V| -> (BR, [LR...], HR or None)."""
    if a < 0 or a > MAX_LEVEL:
        raise ValueError("level magnitude out of range")
    if a <= 2:
        return a, [], None
    lrs = []
    rem = a - 3
    for _ in range(NUM_LR):
        if rem < 3:
            lrs.append(rem)
            return 3, lrs, None
        lrs.append(3)
        rem -= 3
    return 3, lrs, a - LR_LIMIT


def compose_level(br: int, lrs: list[int], hr: int | None) -> int:
    if br < 3:
        return br
    a = 3 + sum(lrs)
    if hr is not None:
        a = LR_LIMIT + hr
    return a


def _pos_class(r: int, c: int) -> int:
    d = r + c
    return 0 if d == 0 else (1 if d <= 2 else 2)


class CoeffModels:
    """All adaptive models used by coefficient coding, per plane type (0 luma, 1 chroma)."""

    def __init__(self):
        self.skip = [[CdfModel(2) for _ in range(3)] for _ in range(2)]
        self.eob = [{} for _ in range(2)]
        self.br = [[[CdfModel(4) for _ in range(BR_BUCKETS)] for _ in range(3)] for _ in range(2)]
        self.br_last = [[CdfModel(3) for _ in range(3)] for _ in range(2)]
        self.lr = [[[CdfModel(4) for _ in range(LR_BUCKETS)] for _ in range(2)] for _ in range(2)]
        self.dc_sign = [[CdfModel(2) for _ in range(3)] for _ in range(2)]

    def eob_model(self, pt: int, n: int) -> CdfModel:
        key = n.bit_length()  # classes 0..log2(n)
        d = self.eob[pt]
        if key not in d:
            d[key] = CdfModel(key)
        return d[key]


def dc_sign_context(above: int, left: int) -> int:
    s = int(np.sign(above)) + int(np.sign(left))
    return 0 if s == 0 else (1 if s < 0 else 2)


def _eg_encode(enc: RangeEncoder, x: int) -> None:
    n = (x + 1).bit_length()
    enc.encode_bits(0, n - 1)
    enc.encode_bits(x + 1, n)


def _eg_decode(dec: RangeDecoder) -> int:
    z = 0
    while dec.decode_bit() == 0:
        z += 1
        if z > 32:
            raise ValueError("malformed Exp-Golomb code")
    return ((1 << z) | dec.decode_bits(z)) - 1


def coeff_encode(enc: RangeEncoder, levels, v: str, h: str, models: CoeffModels,
                 pt: int = 0, dc_ctx: int = 0, skip_ctx: int = 0) -> int:
    """Code one transform block; returns the end-of-block position (0 if all zero)."""
    lv = np.asarray(levels, dtype=np.int64)
    hgt, wid = lv.shape
    if np.abs(lv).max(initial=0) > MAX_LEVEL:
        raise ValueError("coefficient level outside [-2^15, 2^15)")
    kind = scan_kind(v, h)
    scan = _scan(kind, hgt, wid)
    flat = lv.ravel().tolist()
    nz = [i for i, p in enumerate(scan) if flat[p] != 0]
    if not nz:
        enc.encode(1, models.skip[pt][skip_ctx])
        return 0
    enc.encode(0, models.skip[pt][skip_ctx])
    eob = nz[-1] + 1
    n = hgt * wid
    cls = (eob - 1).bit_length()
    enc.encode(cls, models.eob_model(pt, n))
    if cls > 1:
        enc.encode_bits(eob - 1 - (1 << (cls - 1)), cls - 1)

    mag = [[0] * wid for _ in range(hgt)]
    bro, lro = _br_offsets(kind), _lr_offsets(kind)
    br_models, lr_models = models.br[pt], models.lr[pt]
    for i in range(eob - 1, -1, -1):
        p = scan[i]
        r, c = divmod(p, wid)
        a = abs(flat[p])
        br, lrs, hr = decompose_level(a)
        pc = _pos_class(r, c)
        if i == eob - 1:
            enc.encode(min(a, 3) - 1, models.br_last[pt][pc])
        else:
            enc.encode(br, br_models[pc][br_bucket(_nsum(mag, r, c, bro))])
        if br == 3:
            lm = lr_models[0 if pc == 0 else 1][lr_bucket(_nsum(mag, r, c, lro))]
            for x in lrs:
                enc.encode(x, lm)
            if hr is not None:
                _eg_encode(enc, hr - 1)
        mag[r][c] = a

    if flat[0] != 0:
        enc.encode(int(flat[0] < 0), models.dc_sign[pt][dc_ctx])
    for i in range(eob):
        p = scan[i]
        if p != 0 and flat[p] != 0:
            enc.encode_bit(int(flat[p] < 0))
    return eob


def coeff_decode(dec: RangeDecoder, hgt: int, wid: int, v: str, h: str, models: CoeffModels,
                 pt: int = 0, dc_ctx: int = 0, skip_ctx: int = 0) -> np.ndarray:
    out = np.zeros((hgt, wid), dtype=np.int64)
    if dec.decode(models.skip[pt][skip_ctx]) == 1:
        return out
    kind = scan_kind(v, h)
    scan = _scan(kind, hgt, wid)
    n = hgt * wid
    cls = dec.decode(models.eob_model(pt, n))
    if cls == 0:
        eob = 1
    elif cls == 1:
        eob = 2
    else:
        eob = 1 + (1 << (cls - 1)) + dec.decode_bits(cls - 1)
    if eob > n:
        raise ValueError("malformed end-of-block")

    mag = [[0] * wid for _ in range(hgt)]
    bro, lro = _br_offsets(kind), _lr_offsets(kind)
    br_models, lr_models = models.br[pt], models.lr[pt]
    for i in range(eob - 1, -1, -1):
        p = scan[i]
        r, c = divmod(p, wid)
        pc = _pos_class(r, c)
        if i == eob - 1:
            br = dec.decode(models.br_last[pt][pc]) + 1
        else:
            br = dec.decode(br_models[pc][br_bucket(_nsum(mag, r, c, bro))])
        a = br
        if br == 3:
            lm = lr_models[0 if pc == 0 else 1][lr_bucket(_nsum(mag, r, c, lro))]
            lrs = []
            for _ in range(NUM_LR):
                x = dec.decode(lm)
                lrs.append(x)
                if x < 3:
                    break
            hr = None
            if len(lrs) == NUM_LR and lrs[-1] == 3:
                hr = _eg_decode(dec) + 1
            a = compose_level(br, lrs, hr)
            if a > MAX_LEVEL:
                raise ValueError("malformed level")
        mag[r][c] = a

    flat = out.ravel()
    for rr in range(hgt):
        for cc in range(wid):
            flat[rr * wid + cc] = mag[rr][cc]
    if flat[0] != 0 and dec.decode(models.dc_sign[pt][dc_ctx]):
        flat[0] = -flat[0]
    for i in range(eob):
        p = scan[i]
        if p != 0 and flat[p] != 0 and dec.decode_bit():
            flat[p] = -flat[p]
    return out
