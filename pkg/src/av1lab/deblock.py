"""Deblocking across transform-block edges."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LUMA_LENGTHS = (4, 8, 14)
CHROMA_LENGTHS = (4, 6)


def deblock_filter_length(tx1: int, tx2: int, plane: str = "luma") -> int:
    """Longest filter allowed across an edge between transform dims tx1 and tx2."""
    m = min(tx1, tx2)
    if m <= 0:
        return 0
    if plane == "luma":
        return 14 if m >= 16 else (8 if m >= 8 else 4)
    return 6 if m >= 8 else 4


def _flat_taps(length: int) -> int:
    """Samples per side whose flatness licenses the filter."""
    return {4: 0, 6: 2, 8: 3, 14: 6}[length]


@dataclass(frozen=True)
class EdgeDecision:
    kind: str  # "skip", "short" or "long"
    length: int


def _shorter(length: int) -> int:
    return {14: 8, 8: 4, 6: 4}.get(length, 4)


def deblock_edge_decision(p, q, t0: int, t1: int, length: int) -> EdgeDecision:
    """p[k], q[k] are the k-th samples away from the edge on each side."""
    p = [int(v) for v in p]
    q = [int(v) for v in q]
    if length == 0:
        return EdgeDecision("skip", 0)
    if abs(p[1] - p[0]) > t0 or abs(q[1] - q[0]) > t0:
        return EdgeDecision("skip", 0)
    if 2 * abs(p[0] - q[0]) + abs(p[1] - q[1]) // 2 > t1:
        return EdgeDecision("skip", 0)
    if length >= 8 and (abs(p[3] - p[2]) > t0 or abs(q[3] - q[2]) > t0):
        return EdgeDecision("skip", 0)
    want = length
    while want > 4:
        n = _flat_taps(want)
        if all(abs(p[k] - p[0]) <= 1 and abs(q[k] - q[0]) <= 1 for k in range(1, n + 1)):
            break
        want = _shorter(want)
    return EdgeDecision("long" if want == length and length > 4 else "short", want)


@lru_cache(maxsize=None)
def deblock_kernels(length: int) -> tuple[tuple[int, ...], ...]:
    """Triangular kernels, one per modified sample p_j (j = 0 nearest the edge).

    p_j is smoothed over a symmetric window that just reaches the outermost
    sample read by a filter of this length, so the filter has unit DC gain
    and leaves linear ramps unchanged up to rounding.
    """
    n = length // 2
    out = []
    for j in range(max(n - 1, 1)):
        r = n - 1 - j if length > 4 else 1
        out.append(tuple(r + 1 - abs(k) for k in range(-r, r + 1)))
    return tuple(out)


def deblock_apply(line, length: int) -> np.ndarray:
    """Filter a line [p_{n-1} .. p_0 | q_0 .. q_{n-1}] with the edge in the middle."""
    x = np.asarray(line, dtype=np.int64)
    n = len(x) // 2
    out = x.copy()
    if length == 0:
        return out
    for j, ker in enumerate(deblock_kernels(length)):
        r = len(ker) // 2
        tot = sum(ker)
        for pos in (n - 1 - j, n + j):
            lo, hi = pos - r, pos + r + 1
            if lo < 0 or hi > len(x):
                raise ValueError("line too short for the filter length")
            out[pos] = (int(np.dot(ker, x[lo:hi])) + tot // 2) // tot
    return out


def _filter_edge(img: np.ndarray, src: np.ndarray, x: int, row_lengths, t0: int, t1: int) -> None:
    """Filter the vertical edge at column x for each (row, max length) pair, in place."""
    w = img.shape[1]
    avail = min(x, w - x)
    for r, length in row_lengths:
        while length > 4 and length // 2 > avail:
            length = _shorter(length)
        if length == 0 or avail < 2:
            continue
        k = min(avail, 7)
        p = src[r, x - 1:x - k - 1 if x - k - 1 >= 0 else None:-1]
        q = src[r, x:x + k]
        if k < 4:
            p = np.concatenate([p, np.repeat(p[-1:], 4 - k)])
            q = np.concatenate([q, np.repeat(q[-1:], 4 - k)])
        dec = deblock_edge_decision(p, q, t0, t1, length)
        if dec.kind == "skip":
            continue
        m = dec.length // 2
        img[r, x - m:x + m] = deblock_apply(src[r, x - m:x + m], dec.length)


def _deblock_vertical(img: np.ndarray, tx_w: np.ndarray, edges: np.ndarray, t0: int, t1: int,
                      kind: str, unit: int) -> np.ndarray:
    src = img.copy()
    for c in range(1, edges.shape[1]):
        rows = np.nonzero(edges[:, c])[0]
        if len(rows) == 0:
            continue
        todo = []
        for ru in rows:
            length = deblock_filter_length(int(tx_w[ru, c - 1]), int(tx_w[ru, c]), kind)
            todo += [(r, length) for r in range(ru * unit, min((ru + 1) * unit, img.shape[0]))]
        _filter_edge(img, src, c * unit, todo, t0, t1)
    return img


def deblock_plane(plane: np.ndarray, tx_w: np.ndarray, tx_h: np.ndarray, v_edges: np.ndarray,
                  h_edges: np.ndarray, t0: int, t1: int, chroma: bool = False,
                  unit: int = 4) -> np.ndarray:
    """Deblock vertical edges, then horizontal edges.

    All maps are per unit x unit cell: tx_w / tx_h hold the width / height of
    the transform covering the cell, v_edges / h_edges flag a transform edge on
    the cell's left / top side.
    """
    kind = "chroma" if chroma else "luma"
    img = np.array(plane, dtype=np.int64)
    img = _deblock_vertical(img, tx_w, v_edges, t0, t1, kind, unit)
    img_t = np.ascontiguousarray(img.T)
    img_t = _deblock_vertical(img_t, tx_h.T, h_edges.T, t0, t1, kind, unit)
    return np.ascontiguousarray(img_t.T)
