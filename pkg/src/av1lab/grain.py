"""Film-grain synthesis: auto-regressive template, random patch placement, intensity scaling."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from .frame_model import Frame, SUBSAMPLING

TEMPLATE = 64
PATCH = 32
BORDER = 3  # largest lag
GAUSS_BITS = 11
GRAIN_MAX = 32.0  # template samples are clamped to +-GRAIN_MAX
CHROMA_SEED_XOR = (0xB524, 0x49D8)


# ---------------------------------------------------------------- randomness

class GrainRng:
    """16-bit Fibonacci LFSR (taps 16, 15, 13, 4)."""

    def __init__(self, seed: int):
        self.state = int(seed) & 0xFFFF or 1

    def step(self) -> int:
        r = self.state
        bit = (r ^ (r >> 1) ^ (r >> 3) ^ (r >> 12)) & 1
        self.state = (r >> 1) | (bit << 15)
        return bit

    def bits(self, n: int) -> int:
        """n fresh output bits, one register clock each, so successive draws do not overlap."""
        v = 0
        for _ in range(n):
            v = (v << 1) | self.step()
        return v

    def gauss(self) -> float:
        return float(gaussian_table()[self.bits(GAUSS_BITS)])


@lru_cache(maxsize=None)
def gaussian_table() -> np.ndarray:
    """Normal quantiles at the 2048 bin centres, rescaled to exactly unit variance."""
    n = 1 << GAUSS_BITS
    nd = NormalDist()
    t = np.array([nd.inv_cdf((i + 0.5) / n) for i in range(n)])
    t /= np.sqrt((t * t).mean())
    t.setflags(write=False)
    return t


# ---------------------------------------------------------------- parameters

def ar_offsets(lag: int) -> list[tuple[int, int]]:
    """(dy, dx) of the causal neighbours used at a given lag, in raster order."""
    offs = [(dy, dx) for dy in range(-lag, 0) for dx in range(-lag, lag + 1)]
    return offs + [(0, dx) for dx in range(-lag, 0)]


def num_ar_coeffs(lag: int) -> int:
    return 2 * lag * (lag + 1)


@dataclass(frozen=True)
class GrainParams:
    lag: int = 0
    ar_luma: tuple[float, ...] = ()
    # per chroma plane: the spatial coefficients followed by the luma cross term
    ar_cb: tuple[float, ...] = (0.0,)
    ar_cr: tuple[float, ...] = (0.0,)
    scaling_luma: tuple[tuple[int, float], ...] = ((0, 0.0), (255, 0.0))
    scaling_cb: tuple[tuple[int, float], ...] = ((0, 0.0), (255, 0.0))
    scaling_cr: tuple[tuple[int, float], ...] = ((0, 0.0), (255, 0.0))
    # chroma scaling input t = b * P_c + d * mean_luma + h, per plane
    cb_mult: tuple[float, float, float] = (1.0, 0.0, 0.0)
    cr_mult: tuple[float, float, float] = (1.0, 0.0, 0.0)
    seed: int = 1

    def __post_init__(self):
        if self.lag not in (0, 1, 2, 3):
            raise ValueError("lag must be 0..3")
        n = num_ar_coeffs(self.lag)
        if len(self.ar_luma) != n:
            raise ValueError(f"lag {self.lag} needs {n} luma coefficients, got {len(self.ar_luma)}")
        for c in (self.ar_cb, self.ar_cr):
            if len(c) != n + 1:
                raise ValueError(f"lag {self.lag} needs {n + 1} chroma coefficients, got {len(c)}")
        for pts in (self.scaling_luma, self.scaling_cb, self.scaling_cr):
            xs = [p[0] for p in pts]
            if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("scaling points need >= 2 strictly increasing intensities")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "GrainParams":
        conv = {}
        for k, v in d.items():
            if k.startswith("scaling_"):
                conv[k] = tuple((int(a), float(b)) for a, b in v)
            elif isinstance(v, (list, tuple)):
                conv[k] = tuple(float(a) for a in v)
            else:
                conv[k] = v
        return cls(**conv)


@dataclass(frozen=True)
class GrainTemplate:
    luma: np.ndarray
    cb: np.ndarray | None = None
    cr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------- template synthesis

def _ar_fill(buf: np.ndarray, coeffs, lag: int, rng: GrainRng, luma_term=None) -> None:
    """Raster-order AR recursion over the interior of a noise-filled buffer, in place."""
    offs = ar_offsets(lag)
    H, W = buf.shape
    a = list(coeffs)
    cross = a[len(offs)] if luma_term is not None else 0.0
    for y in range(BORDER, H):
        for x in range(BORDER, W - BORDER):
            s = rng.gauss()
            for (dy, dx), c in zip(offs, a):
                if c:
                    s += c * buf[y + dy, x + dx]
            if cross:
                s += cross * luma_term[y - BORDER, x - BORDER]
            buf[y, x] = min(max(s, -GRAIN_MAX), GRAIN_MAX)


def _noise_buffer(h: int, w: int, rng: GrainRng) -> np.ndarray:
    buf = np.empty((h + BORDER, w + 2 * BORDER))
    for i in range(buf.size):
        buf.flat[i] = rng.gauss()
    return buf


def generate_template(params: GrainParams, format: str = "420") -> GrainTemplate:
    """Luma template of 64x64 samples plus chroma templates at the subsampled size."""
    rng = GrainRng(params.seed)
    buf = _noise_buffer(TEMPLATE, TEMPLATE, rng)
    _ar_fill(buf, params.ar_luma, params.lag, rng)
    luma = buf[BORDER:, BORDER:-BORDER].copy()
    out = {"luma": luma}
    ss = SUBSAMPLING[format]
    if ss is not None:
        sx, sy = ss
        ch, cw = TEMPLATE >> sy, TEMPLATE >> sx
        # mean of the collocated luma template samples
        lm = luma.reshape(ch, 1 << sy, cw, 1 << sx).mean(axis=(1, 3))
        for name, coeffs, xor in (("cb", params.ar_cb, CHROMA_SEED_XOR[0]),
                                  ("cr", params.ar_cr, CHROMA_SEED_XOR[1])):
            crng = GrainRng(params.seed ^ xor)
            cbuf = _noise_buffer(ch, cw, crng)
            _ar_fill(cbuf, coeffs, params.lag, crng, luma_term=lm)
            out[name] = cbuf[BORDER:, BORDER:-BORDER].copy()
    for v in out.values():
        v.setflags(write=False)
    return GrainTemplate(**out, meta={"seed": params.seed, "format": format})


# ---------------------------------------------------------------- application

def scaling_eval(points, v):
    """Piecewise-linear scaling function, held constant outside the outermost points."""
    if len(points) < 2:
        raise ValueError("scaling function needs at least two points")
    xs = np.array([p[0] for p in points], dtype=np.float64)
    ys = np.array([p[1] for p in points], dtype=np.float64)
    return np.interp(v, xs, ys)


def patch_origins(rows: int, cols: int, seed: int, size: int = TEMPLATE, patch: int = PATCH):
    """Template origin (oy, ox) of every patch-grid cell, drawn from the grain RNG."""
    rng = GrainRng(seed ^ 0x7A3F)
    span = size - patch + 1
    bits = max(1, (span - 1).bit_length())
    out = np.zeros((rows, cols, 2), dtype=np.int64)
    for r in range(rows):
        for c in range(cols):
            out[r, c] = (rng.bits(bits) % span, rng.bits(bits) % span)
    return out


def grain_field(template: np.ndarray, height: int, width: int, seed: int, patch: int) -> np.ndarray:
    """Tile a plane-sized grain field from randomly placed template patches."""
    rows, cols = -(-height // patch), -(-width // patch)
    org = patch_origins(rows, cols, seed, template.shape[0], patch)
    g = np.zeros((rows * patch, cols * patch))
    for r in range(rows):
        for c in range(cols):
            oy, ox = org[r, c]
            g[r * patch:(r + 1) * patch, c * patch:(c + 1) * patch] = template[oy:oy + patch, ox:ox + patch]
    return g[:height, :width]


def apply_grain_plane(plane, grain: np.ndarray, scale_input, points, bit_depth: int = 8) -> np.ndarray:
    p = np.asarray(plane, dtype=np.int64)
    f = scaling_eval(points, scale_input)
    return np.clip(p + np.floor(f * grain + 0.5).astype(np.int64), 0, (1 << bit_depth) - 1)


def apply_grain(frame: Frame, template: GrainTemplate, params: GrainParams) -> Frame:
    """Add scaled grain to a decoded frame for display; the input frame is not modified."""
    bd = frame.bit_depth
    y = frame.y.samples.astype(np.int64)
    gy = grain_field(template.luma, *y.shape, params.seed, PATCH)
    out = [apply_grain_plane(y, gy, y, params.scaling_luma, bd)]
    if frame.u is not None and template.cb is not None:
        sx, sy = frame.u.subsampling_x, frame.u.subsampling_y
        ch, cw = frame.u.samples.shape
        ypad = np.pad(y, ((0, ch * (1 << sy) - y.shape[0]), (0, cw * (1 << sx) - y.shape[1])), mode="edge")
        luma_avg = ypad.reshape(ch, 1 << sy, cw, 1 << sx).mean(axis=(1, 3))
        cpatch = PATCH >> sx if sx == sy else PATCH >> max(sx, sy)
        for k, (pl, tmpl, pts, (b, d, h)) in enumerate((
                (frame.u, template.cb, params.scaling_cb, params.cb_mult),
                (frame.v, template.cr, params.scaling_cr, params.cr_mult))):
            pc = pl.samples.astype(np.int64)
            g = grain_field(tmpl, ch, cw, params.seed ^ CHROMA_SEED_XOR[k], cpatch)
            t = b * pc + d * luma_avg + h
            out.append(apply_grain_plane(pc, g, t, pts, bd))
    else:
        out += [p.samples for p in frame.planes[1:]]
    return Frame.from_arrays(*out, bit_depth=bd, format=frame.format)
