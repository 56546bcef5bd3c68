"""Algorithm laboratory for the AV1 coding tools: prediction, transforms, entropy coding,
in-loop filters, super-resolution and film grain, plus an intra-only round-trip codec."""
from __future__ import annotations

from .codec import EncodeConfig, decode_intra, encode_intra
from .frame_model import Frame, Plane
from .metrics import psnr

__all__ = ["EncodeConfig", "Frame", "Plane", "decode_intra", "encode_intra", "psnr"]
__version__ = "0.1.0"
