"""Planes, frames, block sizes and the recursive partition tree."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

SUBSAMPLING = {
    "400": None,
    "420": (1, 1),
    "422": (1, 0),
    "444": (0, 0),
}

LEGAL_DIMS = (4, 8, 16, 32, 64, 128)
LEGAL_RATIOS = {(1, 1), (1, 2), (2, 1), (1, 4), (4, 1)}


@dataclass(frozen=True)
class Plane:
    samples: np.ndarray
    bit_depth: int = 8
    subsampling_x: int = 0
    subsampling_y: int = 0

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 1:
            raise ValueError(f"plane must be a non-empty 2-D array, got shape {s.shape}")
        if self.bit_depth not in (8, 10, 12):
            raise ValueError(f"unsupported bit depth {self.bit_depth}")
        s = s.astype(np.int32, copy=True)
        if s.min() < 0 or s.max() >= (1 << self.bit_depth):
            raise ValueError("sample outside bit-depth range")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1


@dataclass(frozen=True)
class Frame:
    y: Plane
    u: Plane | None = None
    v: Plane | None = None
    format: str = "420"

    def __post_init__(self):
        if self.format not in SUBSAMPLING:
            raise ValueError(f"unknown chroma format {self.format}")
        ss = SUBSAMPLING[self.format]
        if ss is None:
            if self.u is not None or self.v is not None:
                raise ValueError("monochrome frame cannot carry chroma planes")
            return
        if self.u is None or self.v is None:
            raise ValueError("chroma planes required")
        sx, sy = ss
        want = ((self.y.height + sy) >> sy, (self.y.width + sx) >> sx)
        for p in (self.u, self.v):
            if p.samples.shape != want:
                raise ValueError(f"chroma plane shape {p.samples.shape} != {want}")
            if p.bit_depth != self.y.bit_depth:
                raise ValueError("bit depth mismatch between planes")

    @property
    def planes(self) -> list[Plane]:
        return [p for p in (self.y, self.u, self.v) if p is not None]

    @property
    def bit_depth(self) -> int:
        return self.y.bit_depth

    @property
    def width(self) -> int:
        return self.y.width

    @property
    def height(self) -> int:
        return self.y.height

    @classmethod
    def from_arrays(cls, y, u=None, v=None, bit_depth=8, format="420") -> "Frame":
        ss = SUBSAMPLING[format] or (0, 0)
        mk = lambda a, sub: Plane(np.asarray(a), bit_depth, *(sub or (0, 0)))
        return cls(
            mk(y, None),
            None if u is None else mk(u, ss),
            None if v is None else mk(v, ss),
            format,
        )

    def arrays(self) -> list[np.ndarray]:
        return [p.samples for p in self.planes]


@dataclass(frozen=True)
class BlockSize:
    width: int
    height: int

    def __post_init__(self):
        if not is_legal_block_size(self.width, self.height):
            raise ValueError(f"illegal block size {self.width}x{self.height}")

    @property
    def is_square(self) -> bool:
        return self.width == self.height


def is_legal_block_size(w: int, h: int) -> bool:
    if w not in LEGAL_DIMS or h not in LEGAL_DIMS:
        return False
    g = min(w, h)
    return (w // g, h // g) in LEGAL_RATIOS


class PartitionType(enum.Enum):
    NONE = "none"
    HORZ = "horz"
    VERT = "vert"
    SPLIT = "split"
    HORZ_A = "horz_a"  # two squares on top, one half-height strip below
    HORZ_B = "horz_b"  # one strip on top, two squares below
    VERT_A = "vert_a"  # two squares on the left, one strip on the right
    VERT_B = "vert_b"
    HORZ_4 = "horz_4"
    VERT_4 = "vert_4"


def _allowed(kind: PartitionType, n: int) -> bool:
    if kind is PartitionType.NONE:
        return True
    if kind in (PartitionType.HORZ, PartitionType.VERT, PartitionType.SPLIT):
        return n >= 8
    if kind in (PartitionType.HORZ_4, PartitionType.VERT_4):
        return 16 <= n <= 64
    return n >= 16  # T-shaped


def partition_rects(kind: PartitionType, n: int) -> list[tuple[int, int, int, int]]:
    """Child rectangles (x, y, w, h) of a square n x n node, in coding order."""
    h = n // 2
    q = n // 4
    P = PartitionType
    if kind is P.NONE:
        return [(0, 0, n, n)]
    if kind is P.HORZ:
        return [(0, 0, n, h), (0, h, n, h)]
    if kind is P.VERT:
        return [(0, 0, h, n), (h, 0, h, n)]
    if kind is P.SPLIT:
        return [(0, 0, h, h), (h, 0, h, h), (0, h, h, h), (h, h, h, h)]
    if kind is P.HORZ_A:
        return [(0, 0, h, h), (h, 0, h, h), (0, h, n, h)]
    if kind is P.HORZ_B:
        return [(0, 0, n, h), (0, h, h, h), (h, h, h, h)]
    if kind is P.VERT_A:
        return [(0, 0, h, h), (0, h, h, h), (h, 0, h, n)]
    if kind is P.VERT_B:
        return [(0, 0, h, n), (h, 0, h, h), (h, h, h, h)]
    if kind is P.HORZ_4:
        return [(0, i * q, n, q) for i in range(4)]
    if kind is P.VERT_4:
        return [(i * q, 0, q, n) for i in range(4)]
    raise ValueError(kind)


@dataclass(frozen=True)
class PartitionTree:
    kind: PartitionType = PartitionType.NONE
    children: tuple["PartitionTree", ...] = field(default_factory=tuple)

    def leaves(self, n: int, x0: int = 0, y0: int = 0) -> Iterator[tuple[int, int, int, int]]:
        """Yield leaf blocks (x, y, w, h) in coding order for a node of size n."""
        rects = partition_rects(self.kind, n)
        if self.kind is PartitionType.SPLIT:
            for (x, y, w, _), child in zip(rects, self.children):
                yield from child.leaves(w, x0 + x, y0 + y)
        else:
            for x, y, w, h in rects:
                yield (x0 + x, y0 + y, w, h)

    @staticmethod
    def uniform(n: int, leaf: int) -> "PartitionTree":
        """Quad-split an n x n node down to square leaves of size `leaf`."""
        if n == leaf:
            return PartitionTree()
        sub = PartitionTree.uniform(n // 2, leaf)
        return PartitionTree(PartitionType.SPLIT, (sub,) * 4)


def _validate(node, n: int) -> bool:
    if not isinstance(node, PartitionTree) or not isinstance(node.kind, PartitionType):
        return False
    if n < 4 or not _allowed(node.kind, n):
        return False
    if node.kind is PartitionType.SPLIT:
        if len(node.children) != 4:
            return False
        return all(_validate(c, n // 2) for c in node.children)
    if node.children:
        # only square split nodes may recurse
        return False
    return all(is_legal_block_size(w, h) for _, _, w, h in partition_rects(node.kind, n))


def validate_partition_tree(tree: PartitionTree, sb_size: int) -> bool:
    if sb_size not in (64, 128):
        return False
    return _validate(tree, sb_size)


def coverage_map(tree: PartitionTree, n: int) -> np.ndarray:
    """Count of leaves covering each pixel; an exact tiling gives all ones."""
    cov = np.zeros((n, n), dtype=np.int32)
    for x, y, w, h in tree.leaves(n):
        cov[y:y + h, x:x + w] += 1
    return cov


@dataclass(frozen=True)
class LumaInfo:
    is_inter: bool
    mode: object = None
    mv: tuple[int, int] | None = None


@dataclass(frozen=True)
class ChromaPlan:
    kind: str  # "inter_2x2" or "intra_4x4"
    units: tuple  # per 2x2 unit (row, col, mv) for inter; the single source mode for intra
    tx_size: tuple[int, int] | None = None


def chroma_coding_units_4x4(luma: Sequence[LumaInfo]) -> ChromaPlan:
    """Chroma plan for an 8x8 luma area covered by four 4x4 blocks (raster order), 4:2:0."""
    if len(luma) != 4:
        raise ValueError("need exactly four 4x4 luma blocks covering an 8x8 area")
    if all(b.is_inter for b in luma):
        units = tuple((i >> 1, i & 1, b.mv) for i, b in enumerate(luma))
        return ChromaPlan("inter_2x2", units)
    return ChromaPlan("intra_4x4", (luma[3].mode,), (4, 4))


def iter_blocks(height: int, width: int, size: int) -> Iterator[tuple[int, int]]:
    for y in range(0, height, size):
        for x in range(0, width, size):
            yield y, x


def visible_rect(x: int, y: int, w: int, h: int, fw: int, fh: int) -> tuple[int, int]:
    """Visible (w, h) of a block clipped to the frame."""
    return max(0, min(w, fw - x)), max(0, min(h, fh - y))
