"""Integer 1-D/2-D transform kernels (DCT, ADST, FLIPADST, IDTX) and the lossless WHT.

Fixed-point contract
--------------------
* Residual inputs satisfy |x| < 2**12.
* Forward output is ``round(8 * G_v @ X @ G_h.T)`` where ``G`` are the
  orthonormal bases returned by :func:`kernel_basis`; i.e. coefficients
  carry three fractional bits relative to an orthonormal transform.
* Internally samples carry ``GUARD_BITS`` fractional bits, every
  constant multiply uses ``COS_BITS``-bit constants followed by a single
  round-half-up shift, and each 1-D pass is renormalised by ``1/sqrt(N)``.
* The DCT is the usual even/odd butterfly recursion; its odd half
  (a DCT-IV) is evaluated through a half-length complex FFT, which keeps
  the multiplication count at O(N log N).
"""
from __future__ import annotations

import contextlib
import itertools
import math
from functools import lru_cache

import numpy as np

KINDS = ("DCT", "ADST", "FLIPADST", "IDTX")
TX_DIMS = (4, 8, 16, 32, 64)
COS_BITS = 26
GUARD_BITS = 10
COEF_FRAC_BITS = 3
MAX_RESIDUAL = 1 << 12

_ONE = 1 << COS_BITS
_INV_SQRT2 = round(_ONE / math.sqrt(2))
_SQRT2 = round(_ONE * math.sqrt(2))


class MulCounter:
    """Counts scalar multiplications per transformed vector (batch size ignored)."""

    def __init__(self):
        self.count = 0


_counter: MulCounter | None = None


@contextlib.contextmanager
def count_multiplies():
    global _counter
    prev, _counter = _counter, MulCounter()
    try:
        yield _counter
    finally:
        _counter = prev


def _tick(n: int) -> None:
    if _counter is not None:
        _counter.count += n


def _rshift(x, s: int):
    if s <= 0:
        return x << (-s)
    return (x + (1 << (s - 1))) >> s


# ---------------------------------------------------------------- legality


def tx_sizes() -> list[tuple[int, int]]:
    """All legal (height, width) transform shapes."""
    out = []
    for h in TX_DIMS:
        for w in TX_DIMS:
            r = max(h, w) // min(h, w)
            if r in (1, 2, 4):
                out.append((h, w))
    return out


def legal_kernels(h: int, w: int) -> tuple[str, ...]:
    if max(h, w) >= 32:
        return ("DCT", "IDTX")
    return KINDS


def legal_pairs(h: int, w: int) -> list[tuple[str, str]]:
    ks = legal_kernels(h, w)
    return [(a, b) for a in ks for b in ks]


def check_pair(h: int, w: int, v: str, hk: str) -> None:
    if (h, w) not in tx_sizes():
        raise ValueError(f"illegal transform size {w}x{h}")
    ks = legal_kernels(h, w)
    if v not in ks or hk not in ks:
        raise ValueError(f"kernel pair ({v},{hk}) not allowed for {w}x{h}")


# ---------------------------------------------------------------- float basis


def kernel_basis(kind: str, n: int) -> np.ndarray:
    """Orthonormal basis, one basis function per row (float64 reference)."""
    if n not in TX_DIMS:
        raise ValueError(f"illegal kernel length {n}")
    if kind in ("ADST", "FLIPADST") and n >= 32:
        raise ValueError(f"{kind} not available at length {n}")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    if kind == "DCT":
        g = np.sqrt(2.0 / n) * np.cos((2 * i + 1) * k * np.pi / (2 * n))
        g[0] /= np.sqrt(2.0)
        return g
    if kind == "IDTX":
        return np.eye(n)
    if n == 4:
        g = 2.0 / np.sqrt(2 * n + 1) * np.sin(np.pi * (2 * k + 1) * (i + 1) / (2 * n + 1))
    else:
        g = np.sqrt(2.0 / n) * np.sin(np.pi * (2 * i + 1) * (2 * k + 1) / (4 * n))
    if kind == "FLIPADST":
        g = g[:, ::-1]
    elif kind != "ADST":
        raise ValueError(f"unknown kernel {kind}")
    return g


# ---------------------------------------------------------------- integer kernels


@lru_cache(maxsize=None)
def _fft_twiddles(h: int):
    j = np.arange(h // 2)
    ang = 2 * np.pi * j / h
    return (np.round(np.cos(ang) * _ONE).astype(np.int64)[:, None],
            np.round(np.sin(ang) * _ONE).astype(np.int64)[:, None])


@lru_cache(maxsize=None)
def _dct4_twiddles(m: int):
    h = m // 2
    th = np.pi / (4 * m)
    j = np.arange(h)
    pre = 4 * th * j
    post = th * (4 * j + 1)
    s = math.sqrt(2.0)
    return (np.round(np.cos(pre) * _ONE).astype(np.int64)[:, None],
            np.round(np.sin(pre) * _ONE).astype(np.int64)[:, None],
            np.round(s * np.cos(post) * _ONE).astype(np.int64)[:, None],
            np.round(s * np.sin(post) * _ONE).astype(np.int64)[:, None])


@lru_cache(maxsize=None)
def _adst4_matrix():
    g = kernel_basis("ADST", 4) * 2.0  # unnormalised gain sqrt(4)
    return np.round(g * _ONE).astype(np.int64)


def _cmul(re, im, cr, ci):
    _tick(4 * re.shape[0])
    return (_rshift(re * cr - im * ci, COS_BITS), _rshift(re * ci + im * cr, COS_BITS))


def _ifft(re, im):
    """Unnormalised DFT with positive exponent: X_j = sum_m z_m exp(2 pi i m j / h)."""
    h = re.shape[0]
    if h == 1:
        return re, im
    er, ei = _ifft(re[0::2], im[0::2])
    orr, oi = _ifft(re[1::2], im[1::2])
    half = h // 2
    tr, ti = orr.copy(), oi.copy()
    cr, ci = _fft_twiddles(h)
    idx = [j for j in range(1, half) if 4 * j != h]
    if idx:
        tr[idx], ti[idx] = _cmul(orr[idx], oi[idx], cr[idx], ci[idx])
    if h >= 4:
        q = h // 4  # multiply by i
        tr[q], ti[q] = -oi[q], orr[q]
    return np.concatenate([er + tr, er - tr]), np.concatenate([ei + ti, ei - ti])


def _dct4(v):
    """sqrt(M) times the orthonormal DCT-IV along axis 0 (symmetric, F @ F = M I)."""
    m = v.shape[0]
    if m == 1:
        return v.copy()
    h = m // 2
    pc, ps, qc, qs = _dct4_twiddles(m)
    re = v[0::2].copy()
    im = -v[::-1][0::2]
    if h > 1:
        re[1:], im[1:] = _cmul(re[1:], im[1:], pc[1:], ps[1:])
    re, im = _ifft(re, im)
    re, im = _cmul(re, im, qc, qs)
    out = np.empty_like(v)
    out[0::2] = re
    out[::-1][0::2] = im
    return out


def _dct2(x):
    """sqrt(N) times the orthonormal DCT-II along axis 0."""
    n = x.shape[0]
    if n == 1:
        return x.copy()
    h = n // 2
    top, bot = x[:h], x[::-1][:h]
    out = np.empty_like(x)
    out[0::2] = _dct2(top + bot)
    out[1::2] = _dct4(top - bot)
    return out


def _dct2_t(y):
    n = y.shape[0]
    if n == 1:
        return y.copy()
    h = n // 2
    p = _dct2_t(y[0::2])
    q = _dct4(y[1::2])
    out = np.empty_like(y)
    out[:h] = p + q
    out[::-1][:h] = p - q
    return out


def _sign_alt(n):
    return np.where(np.arange(n) % 2 == 0, 1, -1).astype(np.int64)[:, None]


def _adst(x):
    n = x.shape[0]
    if n == 4:
        _tick(16)
        return _rshift(_adst4_matrix() @ x, COS_BITS)
    return _sign_alt(n) * _dct4(x[::-1])


def _adst_t(y):
    n = y.shape[0]
    if n == 4:
        _tick(16)
        return _rshift(_adst4_matrix().T @ y, COS_BITS)
    return _dct4(_sign_alt(n) * y)[::-1]


def _idtx(x):
    n = x.shape[0]
    lg = n.bit_length() - 1
    if lg % 2 == 0:
        return x << (lg // 2)
    _tick(n)
    return _rshift(x * _SQRT2, COS_BITS - (lg - 1) // 2)


def forward_1d(kind: str, x: np.ndarray) -> np.ndarray:
    """Unnormalised forward kernel (gain sqrt(N)) along axis 0."""
    if kind == "DCT":
        return _dct2(x)
    if kind == "ADST":
        return _adst(x)
    if kind == "FLIPADST":
        return _adst(x[::-1])
    if kind == "IDTX":
        return _idtx(x)
    raise ValueError(kind)


def transpose_1d(kind: str, y: np.ndarray) -> np.ndarray:
    """Transpose of :func:`forward_1d` along axis 0."""
    if kind == "DCT":
        return _dct2_t(y)
    if kind == "ADST":
        return _adst_t(y)
    if kind == "FLIPADST":
        return _adst_t(y)[::-1]
    if kind == "IDTX":
        return _idtx(y)
    raise ValueError(kind)


def _normalize(x, n: int):
    """Divide by sqrt(n) with rounding."""
    lg = n.bit_length() - 1
    if lg % 2 == 0:
        return _rshift(x, lg // 2)
    _tick(x.shape[0])
    return _rshift(x * _INV_SQRT2, COS_BITS + (lg - 1) // 2)


def _along(fn, x: np.ndarray, axis: int) -> np.ndarray:
    x = np.moveaxis(x, axis, 0)
    shp = x.shape
    y = fn(np.ascontiguousarray(x).reshape(shp[0], -1))
    return np.moveaxis(y.reshape(shp), 0, axis)


def _pass(kind, x, axis, inverse=False):
    n = x.shape[axis]
    f = transpose_1d if inverse else forward_1d
    return _along(lambda a: _normalize(f(kind, a), n), x, axis)


def tx_forward(block, v: str, h: str) -> np.ndarray:
    """2-D forward transform of an (H, W) block or a (B, H, W) batch; columns first."""
    x = np.asarray(block, dtype=np.int64)
    hh, ww = x.shape[-2:]
    check_pair(hh, ww, v, h)
    x = x << GUARD_BITS
    x = _pass(v, x, x.ndim - 2)
    x = _pass(h, x, x.ndim - 1)
    return _rshift(x, GUARD_BITS - COEF_FRAC_BITS)


def tx_inverse(coeffs, v: str, h: str) -> np.ndarray:
    """Inverse of :func:`tx_forward`; rows first, then columns."""
    x = np.asarray(coeffs, dtype=np.int64)
    hh, ww = x.shape[-2:]
    check_pair(hh, ww, v, h)
    x = x << (GUARD_BITS - COEF_FRAC_BITS)
    x = _pass(h, x, x.ndim - 1, inverse=True)
    x = _pass(v, x, x.ndim - 2, inverse=True)
    return _rshift(x, GUARD_BITS)


def float_forward(block, v: str, h: str) -> np.ndarray:
    """Unrounded reference: 8 * G_v @ X @ G_h.T."""
    x = np.asarray(block, dtype=np.float64)
    gv = kernel_basis(v, x.shape[-2])
    gh = kernel_basis(h, x.shape[-1])
    return (1 << COEF_FRAC_BITS) * (gv @ x @ gh.T)


# ---------------------------------------------------------------- lossless WHT


def _wht_fwd_1d(a, b, c, d):
    a = a + b
    d = d - c
    e = (a - d) >> 1
    b = e - b
    c = e - c
    a = a - c
    d = d + b
    return a, c, d, b


def _wht_inv_1d(a, c, d, b):
    d = d - b
    a = a + c
    e = (a - d) >> 1
    c = e - c
    b = e - b
    d = d + c
    a = a - b
    return a, b, c, d


def wht4x4_forward(block) -> np.ndarray:
    """Reversible integer Walsh-Hadamard lifting used for lossless blocks."""
    x = np.array(block, dtype=np.int64)
    x = np.stack(_wht_fwd_1d(x[..., 0, :], x[..., 1, :], x[..., 2, :], x[..., 3, :]), axis=-2)
    x = np.stack(_wht_fwd_1d(x[..., 0], x[..., 1], x[..., 2], x[..., 3]), axis=-1)
    return x


def wht4x4_inverse(coeffs) -> np.ndarray:
    x = np.array(coeffs, dtype=np.int64)
    x = np.stack(_wht_inv_1d(x[..., 0], x[..., 1], x[..., 2], x[..., 3]), axis=-1)
    x = np.stack(_wht_inv_1d(x[..., 0, :], x[..., 1, :], x[..., 2, :], x[..., 3, :]), axis=-2)
    return x


# ---------------------------------------------------------------- partitioning


def tx_partition_options(width: int, height: int, mode: str, plane: str = "luma"):
    """Allowed transform layouts for a coding block.

    inter: list of trees; each tree is a nested tuple ``(w, h, children)`` where
    children is ``None`` for a leaf or four/two subtrees, at most two levels deep.
    intra: list of uniform (w, h) sizes. chroma: single largest size.
    """
    w0, h0 = min(width, 64), min(height, 64)
    if plane != "luma":
        return [(w0, h0)]
    if mode == "intra":
        out = []
        w, h = w0, h0
        for _ in range(3):
            out.append((w, h))
            w, h = _split_dims(w, h)
            if w < 4 or h < 4:
                break
        return out
    if mode != "inter":
        raise ValueError(mode)

    def trees(w, h, depth):
        opts = [(w, h, None)]
        if depth == 2:
            return opts
        cw, ch = _split_dims(w, h)
        if cw < 4 or ch < 4:
            return opts
        n = (w // cw) * (h // ch)
        sub = trees(cw, ch, depth + 1)
        # each child independently chooses; enumerate uniform children plus the
        # mixed-depth options only at the first level to keep the set finite
        if depth == 0:
            for combo in itertools.product(sub, repeat=n):
                opts.append((w, h, combo))
        else:
            opts.append((w, h, tuple([(cw, ch, None)] * n)))
        return opts

    return trees(w0, h0, 0)


def _split_dims(w: int, h: int) -> tuple[int, int]:
    if w == h:
        return w // 2, h // 2
    if w > h:
        return w // 2, h
    return w, h // 2


def tree_leaves(tree) -> list[tuple[int, int]]:
    w, h, ch = tree
    if ch is None:
        return [(w, h)]
    out = []
    for c in ch:
        out.extend(tree_leaves(c))
    return out
