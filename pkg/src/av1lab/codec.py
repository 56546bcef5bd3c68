"""Intra-only encode/decode round trip wiring the prediction, transform, entropy and filter modules."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import cdef, deblock, restoration, superres
from .entropy import CdfModel, RangeDecoder, RangeEncoder
from .frame_model import SUBSAMPLING, Frame
from .grain import GrainParams, apply_grain, generate_template
from .intra import INTRA_MODES, gather_edges, predict_mode
from .levelmap import MAX_LEVEL, CoeffModels, coeff_decode, coeff_encode, dc_sign_context
from .obu import ObuRecord, ObuType, obu_pack, obu_parse
from .quant import QuantParams, dequantize_block, effective_qp, quantize_block, step_size
from .transform import tx_forward, tx_inverse, wht4x4_forward, wht4x4_inverse

SB_SIZES = (64, 128)
BLOCK_SIZES = (8, 16, 32, 64)
MAX_TILES = 512
MAX_TILE_WIDTH = 4096
PIPELINE = ("deblock", "cdef", "superres", "restoration")
CDEF_PRESETS = ((0, 0), (1, 0), (2, 1), (4, 1), (6, 2), (10, 2))
CDEF_DAMPING = 6
_FORMATS = ("400", "420", "422", "444")
_PLANE_NAMES = ("Y", "U", "V")
_LOSSLESS_TX = 4


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class EncodeConfig:
    qp: int = 100
    sb_size: int = 64
    tiles: tuple[int, int] = (1, 1)  # uniform (rows, cols)
    tile_widths: tuple[int, ...] | None = None  # explicit, in superblocks
    tile_heights: tuple[int, ...] | None = None
    deblock: bool = True
    cdef: bool = True
    restoration: bool = True
    superres_denom: int = superres.NUMERATOR  # 8 disables scaling
    grain: GrainParams | None = None
    block_size: int = 16
    modes: tuple[str, ...] = INTRA_MODES
    lr_unit: int = 64
    verify: bool = True

    def __post_init__(self):
        if not 0 <= self.qp <= 255:
            raise ValueError("qp must be in [0, 255]")
        if self.sb_size not in SB_SIZES:
            raise ValueError(f"superblock size must be one of {SB_SIZES}")
        if self.block_size not in BLOCK_SIZES or self.block_size > self.sb_size:
            raise ValueError(f"block size must be one of {BLOCK_SIZES} and fit the superblock")
        if self.superres_denom != superres.NUMERATOR and self.superres_denom not in superres.DENOMINATORS:
            raise ValueError("superres denominator must be 8 (off) or 9..16")
        if self.qp == 0 and self.superres_denom != superres.NUMERATOR:
            raise ValueError("lossless coding cannot be combined with super-resolution")
        if self.lr_unit not in restoration.LRU_SIZES:
            raise ValueError(f"restoration unit must be one of {restoration.LRU_SIZES}")
        bad = [m for m in self.modes if m not in INTRA_MODES]
        if bad or not self.modes:
            raise ValueError(f"unknown intra modes {bad}")
        if min(self.tiles) < 1:
            raise ValueError("tile counts must be positive")

    @property
    def lossless(self) -> bool:
        return self.qp == 0


def tile_starts(n_sb: int, count: int | None = None, sizes=None) -> list[int]:
    """Superblock index where each tile starts, plus the end sentinel."""
    if sizes is not None:
        if sum(sizes) != n_sb or min(sizes) < 1:
            raise ValueError(f"tile sizes {sizes} do not cover {n_sb} superblocks")
        return list(np.concatenate([[0], np.cumsum(sizes)]).astype(int))
    count = min(count or 1, n_sb)
    return [i * n_sb // count for i in range(count)] + [n_sb]


def tile_layout(width: int, height: int, cfg: EncodeConfig) -> tuple[list[int], list[int]]:
    sb = cfg.sb_size
    cols = tile_starts(-(-width // sb), cfg.tiles[1], cfg.tile_widths)
    rows = tile_starts(-(-height // sb), cfg.tiles[0], cfg.tile_heights)
    if (len(cols) - 1) * (len(rows) - 1) > MAX_TILES:
        raise ValueError(f"more than {MAX_TILES} tiles")
    if max(b - a for a, b in zip(cols, cols[1:])) * sb > MAX_TILE_WIDTH:
        raise ValueError(f"tile wider than {MAX_TILE_WIDTH} samples")
    return cols, rows


# ---------------------------------------------------------------- headers

@dataclass
class FrameHeader:
    width: int
    height: int
    bit_depth: int
    format: str
    sb_size: int
    qp: int
    block_size: int
    coded_width: int
    tile_cols: list[int]
    tile_rows: list[int]
    deblock: list[tuple[int, int]] = field(default_factory=list)  # per plane type; (0, 0) = off
    cdef: list[tuple[int, int]] = field(default_factory=list)  # per plane type (Sp, Ss)
    cdef_damping: int = CDEF_DAMPING
    lr_unit: int = 64
    lr: list[list[restoration.RestorationUnit]] = field(default_factory=list)  # per plane

    @property
    def lossless(self) -> bool:
        return self.qp == 0


def _pack_seq(h: FrameHeader) -> bytes:
    return struct.pack(">HHBBB", h.width, h.height, h.bit_depth, _FORMATS.index(h.format), h.sb_size)


def _pack_lru(u: restoration.RestorationUnit) -> bytes:
    if u.mode == "bypass":
        return b"\x00"
    if u.mode == "wiener":
        return b"\x01" + struct.pack(">6b", *u.wiener_v, *u.wiener_h)
    return b"\x02" + struct.pack(">B2b", u.sgr_set, *u.sgr_proj)


def _pack_frame_header(h: FrameHeader) -> bytes:
    out = bytearray(struct.pack(">BBHB", h.qp, h.block_size, h.coded_width, h.cdef_damping))
    for starts in (h.tile_cols, h.tile_rows):
        out += struct.pack(">H", len(starts)) + struct.pack(f">{len(starts)}H", *starts)
    for t0, t1 in h.deblock:
        out += struct.pack(">BB", t0, t1)
    for sp, ss in h.cdef:
        out += struct.pack(">BB", sp, ss)
    out += struct.pack(">HB", h.lr_unit, len(h.lr))
    for plane in h.lr:
        out += struct.pack(">H", len(plane))
        for u in plane:
            out += _pack_lru(u)
    return bytes(out)


def _unpack_headers(seq: bytes, fh: bytes) -> FrameHeader:
    width, height, bd, fmt, sb = struct.unpack(">HHBBB", seq)
    qp, bs, cw, damping = struct.unpack_from(">BBHB", fh, 0)
    pos = 5
    starts = []
    for _ in range(2):
        (n,) = struct.unpack_from(">H", fh, pos)
        starts.append(list(struct.unpack_from(f">{n}H", fh, pos + 2)))
        pos += 2 + 2 * n
    n_types = 1 if _FORMATS[fmt] == "400" else 2
    dbk, cdf = [], []
    for target in (dbk, cdf):
        for _ in range(n_types):
            target.append(struct.unpack_from(">BB", fh, pos))
            pos += 2
    lr_unit, n_planes = struct.unpack_from(">HB", fh, pos)
    pos += 3
    lr = []
    for _ in range(n_planes):
        (n,) = struct.unpack_from(">H", fh, pos)
        pos += 2
        units = []
        for _ in range(n):
            mode = fh[pos]
            if mode == 0:
                units.append(restoration.RestorationUnit())
                pos += 1
            elif mode == 1:
                t = struct.unpack_from(">6b", fh, pos + 1)
                units.append(restoration.RestorationUnit("wiener", wiener_v=t[:3], wiener_h=t[3:]))
                pos += 7
            elif mode == 2:
                s, a, b = struct.unpack_from(">B2b", fh, pos + 1)
                units.append(restoration.RestorationUnit("sgr", sgr_set=s, sgr_proj=(a, b)))
                pos += 4
            else:
                raise ValueError(f"bad restoration mode {mode}")
        lr.append(units)
    if pos != len(fh):
        raise ValueError("frame header length mismatch")
    return FrameHeader(width, height, bd, _FORMATS[fmt], sb, qp, bs, cw, starts[0], starts[1],
                       [tuple(d) for d in dbk], [tuple(c) for c in cdf], damping, lr_unit, lr)


# ---------------------------------------------------------------- block coding

def _subsampling(fmt: str) -> list[tuple[int, int]]:
    ss = SUBSAMPLING[fmt]
    return [(0, 0)] if ss is None else [(0, 0), ss, ss]


def _qps(qp: int) -> list[tuple[int, int]]:
    e = effective_qp(QuantParams(qp))
    return [(e[f"{n}_DC"], e[f"{n}_AC"]) for n in _PLANE_NAMES]


def mode_lambda(qp: int, bit_depth: int = 8) -> float:
    """Weight of one bit against squared error in mode decisions."""
    if qp == 0:
        return 0.0
    s = step_size(qp, "AC", bit_depth) / 8.0
    return 0.1 * s * s


_N_REC = sum(m.startswith("REC") for m in INTRA_MODES)
_N_MAIN = len(INTRA_MODES) - _N_REC  # recursive-filter modes share one escape symbol


class _TileModels:
    def __init__(self):
        self.mode = [CdfModel(_N_MAIN + 1) for _ in range(2)]
        self.rec = [CdfModel(_N_REC) for _ in range(2)]
        self.coeff = CoeffModels()

    def mode_bits(self, pt: int) -> np.ndarray:
        main = -np.log2(np.maximum(self.mode[pt].probs(), 1e-9))
        rec = -np.log2(np.maximum(self.rec[pt].probs(), 1e-9))
        return np.concatenate([main[:_N_MAIN], main[_N_MAIN] + rec])

    def encode_mode(self, enc: RangeEncoder, pt: int, m: int) -> None:
        enc.encode(min(m, _N_MAIN), self.mode[pt])
        if m >= _N_MAIN:
            enc.encode(m - _N_MAIN, self.rec[pt])

    def decode_mode(self, dec: RangeDecoder, pt: int) -> int:
        m = dec.decode(self.mode[pt])
        return m if m < _N_MAIN else _N_MAIN + dec.decode(self.rec[pt])


@dataclass
class _PlaneState:
    rec: np.ndarray
    avail: np.ndarray
    block: int
    tx: int
    nz: np.ndarray
    dc: np.ndarray
    src: np.ndarray | None = None


def _code_block(ps: _PlaneState, x: int, y: int, pt: int, qp: tuple[int, int], lossless: bool,
                bd: int, models: _TileModels, allowed: list[int], lam: float,
                enc: RangeEncoder | None, dec: RangeDecoder | None, stats: dict) -> None:
    b = ps.block
    edges = gather_edges(ps.rec, ps.avail, x, y, b, b, bd)
    if enc is not None:
        tgt = ps.src[y:y + b, x:x + b]
        bits = models.mode_bits(pt)
        best, best_cost, best_pred = 0, None, None
        for m in allowed:
            pred = predict_mode(INTRA_MODES[m], edges, b, b)
            d = tgt - pred
            cost = float((d * d).sum()) + lam * bits[m]
            if best_cost is None or cost < best_cost:
                best, best_cost, best_pred = m, cost, pred
        models.encode_mode(enc, pt, best)
        mode, pred = best, best_pred
    else:
        mode = models.decode_mode(dec, pt)
        pred = predict_mode(INTRA_MODES[mode], edges, b, b)
    stats["modes"][INTRA_MODES[mode]] = stats["modes"].get(INTRA_MODES[mode], 0) + 1
    t = ps.tx
    out = np.empty((b, b), dtype=np.int64)
    for ty in range(0, b, t):
        for tx_ in range(0, b, t):
            gy, gx = (y + ty) // t, (x + tx_) // t
            # neighbours count only inside the current tile
            up = ty > 0 or (gy > 0 and ps.avail[y - 1, x + tx_])
            lf = tx_ > 0 or (gx > 0 and ps.avail[y + ty, x - 1])
            skip_ctx = int(up and ps.nz[gy - 1, gx]) + int(lf and ps.nz[gy, gx - 1])
            dc_ctx = dc_sign_context(ps.dc[gy - 1, gx] if up else 0, ps.dc[gy, gx - 1] if lf else 0)
            p = pred[ty:ty + t, tx_:tx_ + t]
            if enc is not None:
                res = ps.src[y + ty:y + ty + t, x + tx_:x + tx_ + t] - p
                if lossless:
                    levels = wht4x4_forward(res)
                else:
                    levels = quantize_block(tx_forward(res, "DCT", "DCT"), *qp, bit_depth=bd)
                    levels = np.clip(levels, -MAX_LEVEL, MAX_LEVEL)
                coeff_encode(enc, levels, "DCT", "DCT", models.coeff, pt, dc_ctx, skip_ctx)
            else:
                levels = coeff_decode(dec, t, t, "DCT", "DCT", models.coeff, pt, dc_ctx, skip_ctx)
            if lossless:
                r = p + wht4x4_inverse(levels)
            else:
                r = p + tx_inverse(dequantize_block(levels, *qp, bit_depth=bd), "DCT", "DCT")
            out[ty:ty + t, tx_:tx_ + t] = np.clip(r, 0, (1 << bd) - 1)
            ps.nz[gy, gx] = bool(np.any(levels))
            ps.dc[gy, gx] = int(levels[0, 0])
    ps.rec[y:y + b, x:x + b] = out
    ps.avail[y:y + b, x:x + b] = True


def _new_states(h: FrameHeader, pad_h: int, pad_w: int, srcs=None) -> list[_PlaneState]:
    states = []
    for i, (sx, sy) in enumerate(_subsampling(h.format)):
        ph, pw = pad_h >> sy, pad_w >> sx
        blk = h.block_size >> max(sx, sy)
        tx = _LOSSLESS_TX if h.lossless else blk
        src = None
        if srcs is not None:
            s = np.asarray(srcs[i], dtype=np.int64)
            src = np.pad(s, ((0, ph - s.shape[0]), (0, pw - s.shape[1])), mode="edge")
        states.append(_PlaneState(np.zeros((ph, pw), dtype=np.int64), np.zeros((ph, pw), dtype=bool),
                                  blk, tx, np.zeros((ph // tx, pw // tx), dtype=bool),
                                  np.zeros((ph // tx, pw // tx), dtype=np.int64), src))
    return states


def _code_tile(h: FrameHeader, states: list[_PlaneState], rect, allowed, enc=None, dec=None,
               stats=None) -> None:
    """Code one tile: fresh models, and prediction never reaches outside the tile."""
    (c0, c1), (r0, r1) = rect
    models = _TileModels()
    qps = _qps(h.qp)
    lam = mode_lambda(h.qp, h.bit_depth)
    for ps in states:
        ps.avail[:] = False
    sb = h.sb_size
    subs = _subsampling(h.format)
    for sr in range(r0, r1):
        for sc in range(c0, c1):
            for i, (ps, (sx, sy)) in enumerate(zip(states, subs)):
                ph, pw = ps.rec.shape
                y0, x0 = (sr * sb) >> sy, (sc * sb) >> sx
                y1, x1 = min(((sr + 1) * sb) >> sy, ph), min(((sc + 1) * sb) >> sx, pw)
                for y in range(y0, y1, ps.block):
                    for x in range(x0, x1, ps.block):
                        _code_block(ps, x, y, min(i, 1), qps[i], h.lossless, h.bit_depth, models,
                                    allowed, lam, enc, dec, stats)
    for ps in states:
        ps.avail[:] = False


# ---------------------------------------------------------------- in-loop filters

def deblock_thresholds(qp: int, bit_depth: int = 8) -> tuple[int, int]:
    s = step_size(qp, "AC", bit_depth) >> 3
    return min(255, s // 2 + 1), min(255, 2 * s + 2)


def _tx_maps(shape, tx: int, unit: int = 4):
    rows, cols = -(-shape[0] // unit), -(-shape[1] // unit)
    tw = np.full((rows, cols), tx, dtype=np.int64)
    v = np.zeros((rows, cols), dtype=bool)
    v[:, ::max(tx // unit, 1)] = True
    hmap = np.zeros((rows, cols), dtype=bool)
    hmap[::max(tx // unit, 1), :] = True
    return tw, v, hmap


def _deblock(plane, t: tuple[int, int], tx: int, chroma: bool) -> np.ndarray:
    if t == (0, 0):
        return np.asarray(plane, dtype=np.int64)
    tw, v, hm = _tx_maps(plane.shape, tx)
    return deblock.deblock_plane(plane, tw, tw, v, hm, t[0], t[1], chroma=chroma)


def _sse(a, b) -> float:
    d = np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)
    return float((d * d).sum())


def _clip_planes(planes, bd):
    return [np.clip(p, 0, (1 << bd) - 1) for p in planes]


def apply_filters(h: FrameHeader, planes: list[np.ndarray], trace: list[str] | None = None,
                  choose_src=None, final_src=None) -> list[np.ndarray]:
    """Run the in-loop filter chain on cropped reconstructed planes.

    When choose_src / final_src (source planes at coded and at full width) are
    given, the encoder picks the filter parameters and records them in h first.
    """
    trace = [] if trace is None else trace
    bd = h.bit_depth
    subs = _subsampling(h.format)
    types = [min(i, 1) for i in range(len(planes))]
    n_types = max(types) + 1
    out = [np.asarray(p, dtype=np.int64) for p in planes]
    if h.lossless:
        return out
    txs = [h.block_size >> max(sx, sy) for sx, sy in subs]
    # deblock
    if choose_src is not None and not h.deblock:
        cand = deblock_thresholds(h.qp, bd)
        for t in range(n_types):
            idx = [i for i in range(len(out)) if types[i] == t]
            on = sum(_sse(choose_src[i], _deblock(out[i], cand, txs[i], t == 1)) for i in idx)
            off = sum(_sse(choose_src[i], out[i]) for i in idx)
            h.deblock.append(cand if on < off else (0, 0))
    if any(t != (0, 0) for t in h.deblock):
        out = [_deblock(p, h.deblock[types[i]], txs[i], types[i] == 1) for i, p in enumerate(out)]
        trace.append("deblock")
    # cdef
    if choose_src is not None and not h.cdef:
        for t in range(n_types):
            idx = [i for i in range(len(out)) if types[i] == t]
            best, best_err = (0, 0), None
            for sp, ss in CDEF_PRESETS:
                err = sum(_sse(choose_src[i], cdef.cdef_plane(out[i], sp, ss, h.cdef_damping)[0]) for i in idx)
                if best_err is None or err < best_err:
                    best, best_err = (sp, ss), err
            h.cdef.append(best)
    if any(c != (0, 0) for c in h.cdef):
        out = [cdef.cdef_plane(p, *h.cdef[types[i]], h.cdef_damping)[0] for i, p in enumerate(out)]
        trace.append("cdef")
    # super-resolution
    if h.coded_width != h.width:
        out = [superres.superres_upscale_plane(p, (h.width + sx) >> sx, bd) for p, (sx, _) in zip(out, subs)]
        trace.append("superres")
    # loop restoration
    if choose_src is not None and h.lr is None:
        h.lr = [restoration.choose_plane(final_src[i], out[i], h.lr_unit, bd) for i in range(len(out))]
    if h.lr and any(u.mode != "bypass" for plane in h.lr for u in plane):
        out = [restoration.restore_plane(p, h.lr[i], h.lr_unit, bd) for i, p in enumerate(out)]
        trace.append("restoration")
    assert trace == [s for s in PIPELINE if s in trace], f"filter stages out of order: {trace}"
    return _clip_planes(out, bd)


# ---------------------------------------------------------------- frame level

@dataclass
class EncodeResult:
    data: bytes
    recon: Frame
    header: FrameHeader
    stats: dict


@dataclass
class DecodeResult:
    display: Frame
    recon: Frame
    header: FrameHeader
    trace: list[str]


def _coded_planes(frame: Frame, coded_width: int) -> list[np.ndarray]:
    planes = [p.samples.astype(np.int64) for p in frame.planes]
    if coded_width == frame.width:
        return planes
    out = []
    for p, (sx, _) in zip(planes, _subsampling(frame.format)):
        out.append(superres.superres_downscale_plane(p, (coded_width + sx) >> sx, frame.bit_depth))
    return out


def _padded(h: FrameHeader) -> tuple[int, int]:
    b = h.block_size
    return -(-h.height // b) * b, -(-h.coded_width // b) * b


def _crop(states, h: FrameHeader) -> list[np.ndarray]:
    out = []
    for ps, (sx, sy) in zip(states, _subsampling(h.format)):
        out.append(ps.rec[:(h.height + sy) >> sy, :(h.coded_width + sx) >> sx].copy())
    return out


def encode_frame(frame: Frame, config: EncodeConfig) -> EncodeResult:
    if frame.width > 0xFFFF or frame.height > 0xFFFF:
        raise ValueError("frame too large for the container")
    coded_w = superres.downscaled_width(frame.width, config.superres_denom)
    cols, rows = tile_layout(coded_w, frame.height, config)
    h = FrameHeader(frame.width, frame.height, frame.bit_depth, frame.format, config.sb_size, config.qp,
                    config.block_size, coded_w, cols, rows, lr_unit=config.lr_unit)
    src = _coded_planes(frame, coded_w)
    states = _new_states(h, *_padded(h), srcs=src)
    allowed = [INTRA_MODES.index(m) for m in config.modes]
    stats = {"modes": {}, "tiles": []}
    tiles = []
    for r in range(len(rows) - 1):
        for c in range(len(cols) - 1):
            enc = RangeEncoder()
            _code_tile(h, states, ((cols[c], cols[c + 1]), (rows[r], rows[r + 1])), allowed, enc=enc, stats=stats)
            tiles.append(enc.finish())
    stats["tiles"] = [len(t) for t in tiles]
    pre = _crop(states, h)
    n_types = 1 if frame.format == "400" else 2
    if h.lossless:
        h.deblock, h.cdef, h.lr = [(0, 0)] * n_types, [(0, 0)] * n_types, []
    else:
        if not config.deblock:
            h.deblock = [(0, 0)] * n_types
        if not config.cdef:
            h.cdef = [(0, 0)] * n_types
        h.lr = None if config.restoration else []
    trace: list[str] = []
    full_src = [p.samples.astype(np.int64) for p in frame.planes]
    post = apply_filters(h, pre, trace, choose_src=src, final_src=full_src)
    recon = Frame.from_arrays(*post, bit_depth=frame.bit_depth, format=frame.format)
    data = obu_pack(_records(h, tiles, config.grain))
    stats.update(trace=trace, bytes=len(data), tile_bytes=sum(stats["tiles"]))
    if config.verify:
        dec = decode_frame(data)
        for a, b in zip(dec.recon.planes, recon.planes):
            if not np.array_equal(a.samples, b.samples):
                raise AssertionError("decoder reconstruction differs from the encoder's")
    return EncodeResult(data, recon, h, stats)


def _records(h: FrameHeader, tiles: list[bytes], grain: GrainParams | None) -> list[ObuRecord]:
    tg = bytearray(struct.pack(">H", len(tiles)))
    for t in tiles:
        tg += struct.pack(">I", len(t)) + t
    recs = [ObuRecord(ObuType.SEQUENCE_HEADER, _pack_seq(h)),
            ObuRecord(ObuType.TEMPORAL_DELIMITER, b""),
            ObuRecord(ObuType.FRAME_HEADER, _pack_frame_header(h)),
            ObuRecord(ObuType.TILE_GROUP, bytes(tg))]
    if grain is not None:
        recs.append(ObuRecord(ObuType.METADATA, json.dumps(grain.to_dict()).encode()))
    return recs


def encode_intra(frame: Frame, config: EncodeConfig | None = None) -> bytes:
    return encode_frame(frame, config or EncodeConfig()).data


def _split_tiles(payload: bytes) -> list[bytes]:
    (n,) = struct.unpack_from(">H", payload, 0)
    pos, out = 2, []
    for _ in range(n):
        (size,) = struct.unpack_from(">I", payload, pos)
        pos += 4
        if pos + size > len(payload):
            raise ValueError("tile size exceeds tile group")
        out.append(payload[pos:pos + size])
        pos += size
    return out


def _parse(data: bytes):
    recs = obu_parse(data)
    by_type = {}
    for r in recs:
        by_type.setdefault(r.type, r)
    try:
        h = _unpack_headers(by_type[ObuType.SEQUENCE_HEADER].payload, by_type[ObuType.FRAME_HEADER].payload)
        tiles = _split_tiles(by_type[ObuType.TILE_GROUP].payload)
    except KeyError as exc:
        raise ValueError(f"missing OBU {exc}") from None
    return h, tiles, by_type


def _decode_tiles(h: FrameHeader, tiles: list[bytes], tile_order=None) -> list[np.ndarray]:
    cols, rows = h.tile_cols, h.tile_rows
    rects = [((cols[c], cols[c + 1]), (rows[r], rows[r + 1]))
             for r in range(len(rows) - 1) for c in range(len(cols) - 1)]
    if len(rects) != len(tiles):
        raise ValueError("tile count does not match the layout")
    order = list(range(len(tiles))) if tile_order is None else list(tile_order)
    if sorted(order) != list(range(len(tiles))):
        raise ValueError("tile order must be a permutation of the tiles")
    states = _new_states(h, *_padded(h))
    for i in order:
        _code_tile(h, states, rects[i], None, dec=RangeDecoder(tiles[i]), stats={"modes": {}})
    return _crop(states, h)


def decode_frame(data: bytes, tile_order=None) -> DecodeResult:
    h, tiles, by_type = _parse(data)
    trace: list[str] = []
    post = apply_filters(h, _decode_tiles(h, tiles, tile_order), trace)
    recon = Frame.from_arrays(*post, bit_depth=h.bit_depth, format=h.format)
    display = recon
    if ObuType.METADATA in by_type:
        gp = GrainParams.from_dict(json.loads(by_type[ObuType.METADATA].payload))
        display = apply_grain(recon, generate_template(gp, h.format), gp)
    return DecodeResult(display, recon, h, trace)


def decode_intra(data: bytes) -> Frame:
    return decode_frame(data).display


def decode_prefilter(data: bytes, tile_order=None) -> list[np.ndarray]:
    """Reconstruction before the in-loop filters, decoding tiles in the given order."""
    h, tiles, _ = _parse(data)
    return _decode_tiles(h, tiles, tile_order)


# ---------------------------------------------------------------- sequences

def encode_sequence(frames: list[Frame], config: EncodeConfig | None = None) -> tuple[bytes, list[EncodeResult]]:
    """One sequence header, then a temporal unit per frame."""
    config = config or EncodeConfig()
    results = [encode_frame(f, config) for f in frames]
    recs: list[ObuRecord] = []
    for i, r in enumerate(results):
        unit = obu_parse(r.data)
        recs += unit if i == 0 else unit[1:]
    return obu_pack(recs), results


def decode_sequence(data: bytes) -> list[DecodeResult]:
    recs = obu_parse(data)
    seq = recs[0]
    units, cur = [], None
    for r in recs[1:]:
        if r.type == ObuType.SEQUENCE_HEADER:
            seq = r
            continue
        if r.type == ObuType.TEMPORAL_DELIMITER:
            cur = [seq, r]
            units.append(cur)
        elif cur is None:
            raise ValueError("frame data before the first temporal delimiter")
        else:
            cur.append(r)
    return [decode_frame(obu_pack(u)) for u in units]
