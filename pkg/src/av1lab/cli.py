"""Command-line harness: encode, decode and module demonstrations."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as vio
from .codec import EncodeConfig, decode_sequence, encode_sequence
from .grain import GrainParams
from .metrics import json_db, psnr


def _load(args) -> list:
    path = Path(args.input)
    if path.suffix == ".y4m":
        return vio.load_y4m(path)
    if not (args.width and args.height):
        raise SystemExit("raw input needs --width and --height")
    return vio.load_raw(path, args.width, args.height, args.format, args.bit_depth)


def _ints(s: str | None):
    return None if s is None else tuple(int(v) for v in s.split(","))


def _report(path, obj) -> None:
    text = json.dumps(obj, indent=2)
    if path:
        Path(path).write_text(text)
    print(text)


def cmd_encode(args) -> int:
    frames = _load(args)
    rows, cols = (int(v) for v in args.tiles.lower().split("x"))
    grain = GrainParams.from_dict(json.loads(Path(args.grain_params).read_text())) if args.grain_params else None
    cfg = EncodeConfig(qp=args.qp, sb_size=args.sb_size, tiles=(rows, cols),
                       tile_widths=_ints(args.tile_widths), tile_heights=_ints(args.tile_heights),
                       deblock=not args.no_deblock, cdef=not args.no_cdef,
                       restoration=not args.no_restoration, superres_denom=args.superres_denom,
                       grain=grain, block_size=args.block_size)
    data, results = encode_sequence(frames, cfg)
    Path(args.output).write_bytes(data)
    _report(args.report, {
        "bytes": len(data),
        "frames": [{"bytes": len(r.data), "filters": r.stats["trace"],
                    "psnr": {k: json_db(v) for k, v in psnr(f, r.recon).items()}}
                   for f, r in zip(frames, results)],
    })
    return 0


def cmd_decode(args) -> int:
    data = Path(args.input).read_bytes()
    out = [d.display for d in decode_sequence(data)]
    if args.output:
        vio.write_y4m(args.output, out)
    rep = {"frames": len(out), "width": out[0].width, "height": out[0].height}
    if args.metrics:
        ref = vio.load_y4m(args.metrics)
        rep["psnr"] = [{k: json_db(v) for k, v in psnr(a, b).items()} for a, b in zip(ref, out)]
    _report(None, rep)
    return 0


def cmd_analyze(args) -> int:
    from .affine import random_valid_model, warp_block, warp_block_oracle
    from .cdef import cdef_plane
    from .entropy import CdfModel, RangeEncoder, cdf_from_probs

    rng = np.random.default_rng(args.seed)
    ref = rng.integers(0, 256, (96, 96))
    worst = 0
    for _ in range(args.warp_models):
        m = random_valid_model(rng)
        a = warp_block(ref, m, 40, 40, 16, 16)
        b = warp_block_oracle(ref, m, 40, 40, 16, 16)
        worst = max(worst, int(np.abs(a - b).max()))
    yy, xx = np.mgrid[0:64, 0:64]
    img = np.where(((xx + yy) // 4) % 2 == 0, 40, 200) + np.where(xx >= 32, (yy // 3 % 2) * 120, 0)
    _, dirs = cdef_plane(np.clip(img, 0, 255), 4, 1, 6)
    p = 0.99
    enc = RangeEncoder()
    model = CdfModel(cdf_from_probs([p, 1 - p]), adapt=False)
    syms = (rng.random(args.symbols) >= p).astype(int)
    for s in syms:
        enc.encode(int(s), model)
    bits = 8 * len(enc.finish())
    k = int(syms.sum())
    shannon = -(k * np.log2(1 - p) + (len(syms) - k) * np.log2(p))
    _report(args.report, {
        "warp_max_abs_diff": worst,
        "cdef_directions": dirs.tolist(),
        "entropy": {"symbols": int(len(syms)), "bits": bits, "shannon_bits": round(float(shannon), 1),
                    "overhead": round(bits / shannon - 1, 4)},
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="av1lab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    e = sub.add_parser("encode")
    e.add_argument("--input", required=True)
    e.add_argument("--output", required=True)
    e.add_argument("--width", type=int)
    e.add_argument("--height", type=int)
    e.add_argument("--format", default="420", choices=("400", "420", "422", "444"))
    e.add_argument("--bit-depth", type=int, default=8)
    e.add_argument("--qp", type=int, default=100)
    e.add_argument("--sb-size", type=int, default=64, choices=(64, 128))
    e.add_argument("--block-size", type=int, default=16)
    e.add_argument("--tiles", default="1x1", help="uniform layout as ROWSxCOLS")
    e.add_argument("--tile-widths", help="comma-separated widths in superblocks")
    e.add_argument("--tile-heights", help="comma-separated heights in superblocks")
    e.add_argument("--no-deblock", action="store_true")
    e.add_argument("--no-cdef", action="store_true")
    e.add_argument("--no-restoration", action="store_true")
    e.add_argument("--superres-denom", type=int, default=8)
    e.add_argument("--grain-params")
    e.add_argument("--report")
    e.set_defaults(fn=cmd_encode)

    d = sub.add_parser("decode")
    d.add_argument("--input", required=True)
    d.add_argument("--output")
    d.add_argument("--metrics", help="reference y4m for PSNR")
    d.set_defaults(fn=cmd_decode)

    a = sub.add_parser("analyze")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--warp-models", type=int, default=20)
    a.add_argument("--symbols", type=int, default=20000)
    a.add_argument("--report")
    a.set_defaults(fn=cmd_analyze)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
