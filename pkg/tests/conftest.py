from __future__ import annotations

import numpy as np
import pytest

from av1lab import Frame


def natural_luma(size: int = 128) -> np.ndarray:
    from skimage import data

    return data.camera()[::4, ::4][:size, :size].astype(np.int32)


def astronaut_420(size: int = 96) -> Frame:
    from skimage import data
    from skimage.transform import resize

    rgb = resize(data.astronaut(), (size, size), anti_aliasing=True) * 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = (b - y) * 0.564 + 128
    v = (r - y) * 0.713 + 128

    def sub(p):
        return p.reshape(size // 2, 2, size // 2, 2).mean(axis=(1, 3))

    q = lambda p: np.clip(np.round(p), 0, 255).astype(np.int32)
    return Frame.from_arrays(q(y), q(sub(u)), q(sub(v)), bit_depth=8, format="420")


def camera_420(size: int = 128) -> Frame:
    y = natural_luma(size)
    c = np.full((size // 2, size // 2), 128, dtype=np.int32)
    return Frame.from_arrays(y, c, c.copy(), bit_depth=8, format="420")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
