from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from av1lab.cdef import (
    DIRECTIONS, cdef_apply, cdef_constrain, cdef_direction, cdef_filter, cdef_plane,
    direction_costs, line_index, max_perturbation,
)
from av1lab.deblock import (
    deblock_apply, deblock_edge_decision, deblock_filter_length, deblock_kernels, deblock_plane,
)
from av1lab.restoration import (
    SGR_PRESETS, RestorationUnit, choose_plane, choose_unit, lru_grid, restore_plane,
    restore_unit, sgr_denoise, sgr_quantize, sgr_restore, sgr_restore_int, sgr_solve,
    wiener_apply, wiener_apply_dense, wiener_estimate, wiener_full_taps,
)
from av1lab.superres import (
    DENOMINATORS, SCALE_ONE, downscaled_width, legal_pair, superres_downscale_plane,
    superres_ideal_offsets, superres_offsets, superres_raw_offsets, superres_upscale,
    superres_upscale_plane,
)


# ---------------------------------------------------------------- deblocking

def test_filter_lengths():
    assert deblock_filter_length(16, 16) == 14
    assert deblock_filter_length(4, 32) == 4
    assert deblock_filter_length(8, 64) == 8
    assert deblock_filter_length(8, 8, "chroma") == 6
    assert deblock_filter_length(4, 16, "chroma") == 4


def test_flat_edge_takes_long_filter():
    p = [100] * 7
    q = [103] * 7
    d = deblock_edge_decision(p, q, 4, 20, 14)
    assert d.kind == "long" and d.length == 14


def test_high_variance_skips():
    p = [100, 105, 105, 105, 105, 105, 105]  # |p1 - p0| = t0 + 1
    assert deblock_edge_decision(p, [100] * 7, 4, 100, 8).kind == "skip"
    assert deblock_edge_decision([100] * 7, [150] * 7, 4, 20, 8).kind == "skip"
    p = [100, 100, 100, 110, 110, 110, 110]  # p3 vs p2 for lengths >= 8
    assert deblock_edge_decision(p, [100] * 7, 4, 100, 8).kind == "skip"
    assert deblock_edge_decision(p, [100] * 7, 4, 100, 4).kind == "short"


def test_flatness_failure_demotes():
    p = [100] * 7
    q = [102, 102, 102, 104, 104, 104, 104]  # |q3 - q0| = 2
    d = deblock_edge_decision(p, q, 4, 20, 14)
    assert d.kind == "short" and d.length < 14


def test_kernels_unit_gain():
    for n in (4, 6, 8, 14):
        for k in deblock_kernels(n):
            assert len(k) % 2 == 1 and k == k[::-1]


@pytest.mark.parametrize("length", [4, 6, 8, 14])
def test_deblock_constant_and_ramp(length):
    n = 8
    assert (deblock_apply([77] * (2 * n), length) == 77).all()
    ramp = np.arange(2 * n) * 5 + 20
    assert np.abs(deblock_apply(ramp, length) - ramp).max() <= 1


def test_deblock_step_moves_inward():
    line = [0] * 8 + [64] * 8
    out = deblock_apply(line, 4)
    assert 0 < out[7] < 64 and 0 < out[8] < 64 and out[8] - out[7] < 64
    assert (out[:6] == 0).all() and (out[10:] == 64).all()


def test_deblock_plane_constant():
    img = np.full((32, 32), 99)
    tx = np.full((8, 8), 8)
    edges = np.zeros((8, 8), bool)
    edges[:, ::2] = True
    out = deblock_plane(img, tx, tx, edges, edges.T.copy(), 10, 40)
    assert (out == 99).all()


# ---------------------------------------------------------------- CDEF

def stripes(d: int, seed: int = 0) -> np.ndarray:
    vals = np.random.default_rng(seed).permutation(256)[:15]
    return np.array([[vals[line_index(d, i, j)] for j in range(8)] for i in range(8)])


@pytest.mark.parametrize("d", range(8))
def test_direction_of_stripe_patterns(d):
    assert cdef_direction(stripes(d, d))[0] == d
    assert cdef_direction(stripes(d, d))[1] == 0.0


def test_horizontal_stripes():
    b = np.repeat(np.arange(8)[:, None] * 20, 8, axis=1)
    assert cdef_direction(b)[0] == 2


def test_constant_block_ties_to_zero():
    c = direction_costs(np.full((8, 8), 50))
    assert len(set(c)) == 1
    assert cdef_direction(np.full((8, 8), 50)) == (0, 0.0)


def test_direction_needs_full_block():
    with pytest.raises(ValueError):
        cdef_direction(np.zeros((4, 8)))


def test_constrain_examples():
    assert cdef_constrain(0, 4, 7) == 0
    assert cdef_constrain(2, 4, 7) == 2
    assert cdef_constrain(200, 4, 7) == 0
    assert cdef_constrain(-2, 4, 7) == -2
    assert cdef_constrain(5, 0, 7) == 0


def test_cdef_identity_cases(rng):
    b = rng.integers(0, 256, (8, 8))
    assert (cdef_apply(b, 3, 0, 0, 6) == b).all()
    c = np.full((8, 8), 200)
    assert (cdef_apply(c, 5, 15, 4, 6) == 200).all()


def test_cdef_impulse_hand_evaluated():
    b = np.full((9, 9), 100)
    b[4, 4] = 140
    d = 2  # horizontal primary taps
    out = cdef_apply(b, d, 63, 0, 7)
    # odd strength -> primary weights (3, 3); shift 7 - 5 = 2; constrain(-40) keeps -40
    total = 4 * 3 * cdef_constrain(-40, 63, 7)
    assert out[4, 4] == 140 + ((8 + total - 1) >> 4) == 110
    # horizontal neighbours each see the impulse once through a primary tap
    assert out[4, 3] == out[4, 5] == out[4, 2] == out[4, 6] == 100 + ((8 + 3 * 40) >> 4)
    assert out[3, 4] == 100 and out[5, 4] == 100


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 7), st.integers(0, 15), st.integers(0, 4), st.integers(3, 6),
       st.integers(0, 2**32 - 1))
def test_cdef_bounded_perturbation(d, sp, ss, damping, seed):
    b = np.random.default_rng(seed).integers(0, 256, (16, 16))
    out = cdef_filter(b, 4, 4, 8, 8, d, sp, ss, damping)
    assert np.abs(out - b[4:12, 4:12]).max() <= max_perturbation(sp, ss)


def test_cdef_plane_constant_and_directions(rng):
    p = np.full((24, 40), 61)
    out, dirs = cdef_plane(p, 8, 2, 6)
    assert (out == 61).all() and dirs.shape == (3, 5)
    q = np.concatenate([stripes(d, d) for d in range(8)], axis=1)
    _, dirs = cdef_plane(q, 4, 1, 6)
    assert dirs[0].tolist() == list(range(8))


def test_cdef_skip_units(rng):
    p = rng.integers(0, 256, (16, 16))
    skip = np.ones((2, 2), bool)
    out, _ = cdef_plane(p, 8, 2, 6, skip)
    assert (out == p).all()


def test_direction_table_shape():
    assert len(DIRECTIONS) == 8
    for (a, b) in DIRECTIONS:
        assert max(abs(a[0]), abs(a[1])) == 1 and max(abs(b[0]), abs(b[1])) == 2


# ---------------------------------------------------------------- Wiener

def test_wiener_identity_and_constant(rng):
    x = rng.integers(0, 256, (20, 24))
    assert (wiener_apply(x, (0, 0, 0), (0, 0, 0)) == x).all()
    c = np.full((16, 16), 140)
    assert (wiener_apply(c, (3, -7, 15), (-2, 5, 30)) == 140).all()


def test_wiener_taps():
    t = wiener_full_taps((3, -7, 15))
    assert t == (3, -7, 15, 106, 15, -7, 3) and sum(t) == 128
    with pytest.raises(ValueError):
        wiener_full_taps((11, 0, 0))


@settings(max_examples=40, deadline=None)
@given(st.tuples(st.integers(-5, 10), st.integers(-23, 8), st.integers(-17, 46)),
       st.tuples(st.integers(-5, 10), st.integers(-23, 8), st.integers(-17, 46)),
       st.integers(0, 2**32 - 1))
def test_wiener_matches_dense_oracle(v, h, seed):
    x = np.random.default_rng(seed).integers(0, 256, (16, 16))
    assert np.abs(wiener_apply(x, v, h) - wiener_apply_dense(x, v, h)).max() <= 1


def test_wiener_estimate_reduces_blur_error(rng):
    src = rng.integers(0, 256, (64, 64)).astype(np.int64)
    from numpy.lib.stride_tricks import sliding_window_view

    pad = np.pad(src, 1, mode="edge")
    rec = np.rint(sliding_window_view(pad, (3, 3)).mean(axis=(2, 3))).astype(np.int64)
    v, h = wiener_estimate(src, rec)
    out = wiener_apply(rec, v, h)
    assert ((out - src) ** 2).sum() < ((rec - src) ** 2).sum()


# ---------------------------------------------------------------- self-guided

def test_sgr_denoise_limits(rng):
    x = rng.integers(0, 256, (16, 16))
    assert (sgr_denoise(x, 1, 0) == x).all()
    c = np.full((12, 12), 33)
    assert (sgr_denoise(c, 2, 500) == 33).all()
    with pytest.raises(ValueError):
        sgr_denoise(x, 4, 10)


def test_sgr_equal_blend_when_variance_equals_e():
    # 3x3 window over [0, 0, 0; 0, 9, 0; 0, 0, 0] at the centre: mean 1, variance 8
    x = np.zeros((3, 3), dtype=np.int64)
    x[1, 1] = 9
    var = (81 / 9) - 1
    assert var == 8
    out = sgr_denoise(x, 1, 8)
    # with replicate padding the centre window is exactly the 3x3 block
    assert out[1, 1] == 5  # (9 + 1) / 2


def test_sgr_solve_special_cases(rng):
    x = rng.integers(0, 256, (16, 16))
    x1 = sgr_denoise(x, 1, 100)
    x2 = sgr_denoise(x, 2, 400)
    a, b = sgr_solve(x, x1, x2, x)
    assert abs(a) < 1e-9 and abs(b) < 1e-9
    a, b = sgr_solve(x, x1, x2, x1)
    assert a == pytest.approx(1.0) and abs(b) < 1e-9
    assert np.allclose(sgr_restore(x, x1, x2, a, b), x1)
    assert sgr_solve(x, x, x, x1) == (0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(range(len(SGR_PRESETS))))
def test_sgr_projection_never_increases_error(seed, preset):
    rng = np.random.default_rng(seed)
    src = rng.integers(0, 256, (24, 24))
    rec = np.clip(src + rng.integers(-12, 13, src.shape), 0, 255)
    r1, e1, r2, e2 = SGR_PRESETS[preset]
    x1, x2 = sgr_denoise(rec, r1, e1), sgr_denoise(rec, r2, e2)
    a, b = sgr_solve(rec, x1, x2, src)
    xr = sgr_restore(rec, x1, x2, a, b)
    assert ((src - xr) ** 2).sum() <= ((src - rec) ** 2).sum() + 1e-6
    # dense least-squares oracle
    A = np.stack([(x1 - rec).ravel(), (x2 - rec).ravel()], 1).astype(float)
    sol, *_ = np.linalg.lstsq(A, (src - rec).ravel().astype(float), rcond=None)
    assert np.allclose((a, b), sol, atol=1e-6)


def test_sgr_integer_restore_and_quantize(rng):
    x = rng.integers(0, 256, (8, 8))
    assert (sgr_restore_int(x, x + 5, x, 0, 0) == x).all()
    y = rng.integers(4, 250, (8, 8))
    # 95 * 4 / 128 = 2.97 rounds to 3 on both sides of zero
    assert (sgr_restore_int(y, y + 4, y, 95, 0) == y + 3).all()
    assert (sgr_restore_int(y, y - 4, y, 95, 0) == y - 3).all()
    assert (sgr_restore_int(y, y, y + 2, 0, 64) == y + 1).all()
    assert sgr_quantize(10.0, -10.0) == (95, -96)


def test_restoration_units(rng):
    src = rng.integers(0, 256, (100, 70))
    noisy = np.clip(src + rng.integers(-10, 11, src.shape), 0, 255)
    grid = lru_grid(100, 70, 64)
    assert len(grid) == 4 and sum(h * w for *_, h, w in grid) == 7000
    units = choose_plane(src, noisy, 64)
    out = restore_plane(noisy, units, 64)
    assert ((out - src) ** 2).sum() <= ((noisy - src) ** 2).sum()
    assert choose_unit(src, src) == RestorationUnit()
    with pytest.raises(ValueError):
        lru_grid(10, 10, 32)


@pytest.mark.parametrize("unit", [RestorationUnit(), RestorationUnit("wiener", (2, -5, 9), (-1, 4, 20)),
                                  RestorationUnit("sgr", sgr_set=2, sgr_proj=(40, -20))])
def test_restore_unit_constant(unit):
    c = np.full((32, 32), 73)
    assert (restore_unit(c, unit) == 73).all()


# ---------------------------------------------------------------- super-resolution

def test_identity_scale():
    pos, ph = superres_offsets(32, 32)
    assert (pos == np.arange(32)).all() and (ph == 0).all()
    row = np.arange(32) * 7
    assert (superres_upscale(row, (pos, ph)) == row).all()


def test_half_scale_ideal_offsets():
    ideal = superres_ideal_offsets(8, 16)
    assert ideal == [Fraction(-1, 4) + Fraction(m, 2) for m in range(16)]


def test_legal_pairs_and_widths():
    assert legal_pair(8, 16) and legal_pair(15, 16) and not legal_pair(7, 16) and not legal_pair(16, 17)
    assert downscaled_width(96, 12) == 64 and downscaled_width(96, 8) == 96
    with pytest.raises(ValueError):
        superres_raw_offsets(7, 16)
    with pytest.raises(ValueError):
        downscaled_width(96, 17)


@pytest.mark.parametrize("den", DENOMINATORS)
@pytest.mark.parametrize("W", [16, 64, 100, 1000])
def test_rounding_error_symmetric(den, W):
    D = downscaled_width(W, den)
    raw = superres_raw_offsets(D, W)
    ideal = superres_ideal_offsets(D, W)
    err = [Fraction(int(r)) - i * SCALE_ONE for r, i in zip(raw, ideal)]
    assert abs(abs(err[0]) - abs(err[-1])) <= 1
    assert abs(err[W // 2]) <= 1


def test_constant_row_and_ramp():
    D, W = 32, 64
    offs = superres_offsets(D, W)
    assert (superres_upscale(np.full(D, 90), offs) == 90).all()
    ramp = 10 + 4 * np.arange(D)
    out = superres_upscale(ramp, offs)
    ideal = np.array([10 + 4 * float(o) for o in superres_ideal_offsets(D, W)])
    inner = slice(8, W - 8)  # away from replicated borders
    assert np.abs(out[inner] - ideal[inner]).max() <= 0.5 + 1e-9


def test_plane_upscale_horizontal_only(rng):
    p = rng.integers(0, 256, (6, 24))
    up = superres_upscale_plane(p, 32)
    assert up.shape == (6, 32)
    for r in range(6):
        assert (up[r] == superres_upscale(p[r], superres_offsets(24, 32))).all()
    c = np.full((4, 32), 17)
    assert (superres_downscale_plane(c, 24) == 17).all()
