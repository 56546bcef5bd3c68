from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from av1lab.intra import (
    BASE_ANGLES, INTRA_MODES, RECURSIVE_SETS, SMOOTH_WEIGHTS, DirectionalMode, IntraEdges,
    Palette, cfl_subsample, gather_edges, intrabc_chroma, intrabc_copy, palette_fit,
    palette_reconstruct, predict_cfl, predict_directional, predict_directional_float, predict_mode,
    predict_paeth, predict_recursive_filter, predict_recursive_oracle, predict_smooth,
    recursive_patch_taps,
)


def edges(above, left, tl, bd=8):
    return IntraEdges.make(above, left, tl, bd)


def rand_edges(rng, n=16, bd=8):
    hi = 1 << bd
    return IntraEdges.make(rng.integers(0, hi, n), rng.integers(0, hi, n), int(rng.integers(0, hi)), bd, n)


# ---------------------------------------------------------------- directional

def test_vertical_copies_above_row():
    e = edges([10, 20, 30, 40], [0, 0, 0, 0], 0)
    out = predict_directional(e, DirectionalMode("V"), 4, 4)
    assert (out == np.array([10, 20, 30, 40])).all()


def test_horizontal_copies_left_column():
    e = edges([0] * 4, [5, 6, 7, 8], 0)
    out = predict_directional(e, DirectionalMode("H"), 4, 4)
    assert (out == np.array([[5], [6], [7], [8]])).all()


@pytest.mark.parametrize("mode", sorted(BASE_ANGLES))
@pytest.mark.parametrize("delta", [-3, 0, 2])
def test_constant_edges_give_constant_block(mode, delta):
    e = edges([128] * 16, [128] * 16, 128)
    assert (predict_directional(e, DirectionalMode(mode, delta), 8, 8) == 128).all()


def test_d45_plus_one_matches_float_projection():
    # deltas need >= 8x8 blocks; the 48 degree case is checked at 8x8
    ramp = np.arange(32) * 7
    e = edges(ramp, ramp[::-1], 3)
    m = DirectionalMode("D45", 1)
    assert m.angle == 48
    got = predict_directional(e, m, 8, 8)
    ref = predict_directional_float(e, 48, 8, 8)
    assert np.abs(got - ref).max() <= 1


def test_angle_delta_rejected_for_small_blocks():
    e = edges([1] * 8, [1] * 8, 1)
    with pytest.raises(ValueError):
        predict_directional(e, DirectionalMode("D45", 1), 4, 8)
    with pytest.raises(ValueError):
        DirectionalMode("D45", 4)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(sorted(BASE_ANGLES)), st.integers(-3, 3), st.integers(-32, 32),
       st.integers(0, 2**32 - 1))
def test_directional_ramps_within_one_lsb_of_float(mode, delta, slope, seed):
    rng = np.random.default_rng(seed)
    a = np.clip(128 + slope * np.arange(32) // 4 + rng.integers(-2, 3, 32), 0, 255)
    l = np.clip(128 - slope * np.arange(32) // 4 + rng.integers(-2, 3, 32), 0, 255)
    e = IntraEdges.make(a, l, 128, 8, 32)
    m = DirectionalMode(mode, delta)
    got = predict_directional(e, m, 16, 16)
    ref = predict_directional_float(e, m.angle, 16, 16)
    assert np.abs(got - ref).max() <= 1.0


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(sorted(BASE_ANGLES)), st.integers(-3, 3), st.integers(0, 2**32 - 1))
def test_directional_error_bounded_by_position_quantisation(mode, delta, seed):
    # positions are rounded to 1/64 sample, so the error is at most half an LSB
    # plus 1/128 of the largest step between neighbouring edge samples
    e = rand_edges(np.random.default_rng(seed), 32)
    m = DirectionalMode(mode, delta)
    got = predict_directional(e, m, 16, 16)
    ref = predict_directional_float(e, m.angle, 16, 16)
    full = np.concatenate([e.left[::-1], [e.top_left], e.above])
    step = np.abs(np.diff(full)).max()
    assert np.abs(got - ref).max() <= 0.5 + step / 128 + 1e-9


# ---------------------------------------------------------------- smooth / paeth

@pytest.mark.parametrize("variant", ["SMOOTH", "SMOOTH_V", "SMOOTH_H"])
def test_smooth_constant(variant):
    e = edges([77] * 8, [77] * 8, 77)
    assert (predict_smooth(e, variant, 8, 8) == 77).all()


def test_smooth_h_monotone_from_left_to_top_right():
    e = edges([64] * 8, [0] * 8, 0)
    out = predict_smooth(e, "SMOOTH_H", 8, 8)
    row = out[0]
    assert row[0] < 32 < row[-1]
    assert (np.diff(row) >= 0).all()


def test_smooth_is_average_of_variants(rng):
    e = rand_edges(rng, 16)
    ph = predict_smooth(e, "SMOOTH_H", 8, 8)
    pv = predict_smooth(e, "SMOOTH_V", 8, 8)
    assert (predict_smooth(e, "SMOOTH", 8, 8) == (ph + pv + 1) >> 1).all()


def test_smooth_weight_tables_frozen():
    assert SMOOTH_WEIGHTS[4] == [255, 149, 85, 64]
    for n, w in SMOOTH_WEIGHTS.items():
        assert len(w) == n and w[0] == 255 and all(a >= b for a, b in zip(w, w[1:]))


def test_paeth_examples():
    out = predict_paeth(edges([10], [20], 15), 1, 1)
    assert out[0, 0] == 15
    assert predict_paeth(edges([100], [50], 50), 1, 1)[0, 0] == 100
    assert predict_paeth(edges([9], [9], 9), 1, 1)[0, 0] == 9


# ---------------------------------------------------------------- recursive filter

def test_recursive_sets_frozen():
    assert len(RECURSIVE_SETS) == 5
    for s in range(5):
        t = recursive_patch_taps(s)
        # rows sum to one at the fixed-point scale for normalised sets
        if sum(RECURSIVE_SETS[s]) == 1:
            assert (t.sum(axis=1) == 1 << 20).all()


def test_recursive_horizontal_set_copies_left():
    # set 2 is (0, 1, 0): each pixel takes its left neighbour
    e = edges([0] * 8, [11, 22, 33, 44, 55, 66, 77, 88], 0)
    out = predict_recursive_filter(e, 2, 8, 8)
    assert (out == np.array([11, 22, 33, 44, 55, 66, 77, 88])[:, None]).all()


def test_recursive_vertical_set_copies_above():
    e = edges([1, 2, 3, 4, 5, 6, 7, 8], [0] * 8, 0)
    out = predict_recursive_filter(e, 1, 8, 8)
    assert (out == np.arange(1, 9)).all()


@pytest.mark.parametrize("s", range(5))
def test_recursive_constant_edges(s):
    e = edges([90] * 8, [90] * 8, 90)
    if sum(RECURSIVE_SETS[s]) == 1:
        assert (predict_recursive_filter(e, s, 8, 8) == 90).all()


def test_recursive_set0_matches_oracle(rng):
    e = rand_edges(rng, 16)
    assert (predict_recursive_filter(e, 0, 8, 8) == predict_recursive_oracle(e, 0, 8, 8)).all()


def test_recursive_invalid_set():
    with pytest.raises(ValueError):
        predict_recursive_filter(edges([0] * 4, [0] * 4, 0), 5, 4, 4)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_recursive_patches_equal_oracle(s, seed):
    e = rand_edges(np.random.default_rng(seed), 16)
    assert (predict_recursive_filter(e, s, 8, 8) == predict_recursive_oracle(e, s, 8, 8)).all()


# ---------------------------------------------------------------- shift covariance

@settings(max_examples=40, deadline=None)
@given(st.sampled_from([m for m in INTRA_MODES if m not in ("REC0", "REC1", "REC2", "REC3", "REC4")]
                       + ["REC1", "REC2", "REC3"]),
       st.integers(-40, 40), st.integers(0, 2**32 - 1))
def test_shift_covariance(mode, c, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(60, 190, 16)
    l = rng.integers(60, 190, 16)
    e = IntraEdges.make(a, l, int(rng.integers(60, 190)), 8, 16)
    base = predict_mode(mode, e, 8, 8)
    assert (predict_mode(mode, e.shifted(c), 8, 8) == base + c).all()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["SMOOTH", "SMOOTH_V", "SMOOTH_H"]), st.integers(0, 2**32 - 1))
def test_smooth_within_reference_range(variant, seed):
    e = rand_edges(np.random.default_rng(seed), 16)
    out = predict_smooth(e, variant, 8, 8)
    refs = np.concatenate([e.above[:8], e.left[:8]])
    assert out.min() >= refs.min() and out.max() <= refs.max()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_paeth_member_of_candidates(seed):
    e = rand_edges(np.random.default_rng(seed), 16)
    out = predict_paeth(e, 8, 8)
    t = e.above[:8][None, :]
    l = e.left[:8][:, None]
    assert ((out == t) | (out == l) | (out == e.top_left)).all()


# ---------------------------------------------------------------- CfL

def test_cfl_unit_scale_example():
    luma = np.array([[100, 120], [140, 180]])
    out = predict_cfl(luma * 8, 128, 8)
    assert out.tolist() == [[93, 113], [133, 173]]


def test_cfl_zero_scale_and_constant_luma(rng):
    luma = rng.integers(0, 256, (4, 4)) * 8
    assert (predict_cfl(luma, 100, 0) == 100).all()
    assert (predict_cfl(np.full((4, 4), 800), 57, 13) == 57).all()


def test_cfl_subsample_average():
    l = np.array([[1, 3], [5, 7]])
    assert cfl_subsample(l, 1, 1).tolist() == [[32]]  # mean 4 in Q3


# ---------------------------------------------------------------- palette

def test_palette_exact_two_colors():
    b = np.array([[10, 200], [200, 10]])
    p = palette_fit(b, 2)
    assert (palette_reconstruct(p) == b).all()


def test_palette_constant_block():
    b = np.full((8, 8), 42)
    p = palette_fit(b, 4)
    assert (np.asarray(p.colors)[p.indices] == 42).all()


def test_palette_gradient_nearest_color():
    b = np.arange(64).reshape(8, 8) * 4
    p = palette_fit(b, 8)
    cols = np.asarray(p.colors)
    gap = np.diff(cols).max()
    err = np.abs(palette_reconstruct(p) - b)
    assert err.max() <= gap / 2
    # each index is the nearest color
    best = np.abs(b[..., None] - cols).min(axis=-1)
    assert (err == best).all()


def test_palette_limits():
    with pytest.raises(ValueError):
        palette_fit(np.zeros((4, 4)), 9)
    with pytest.raises(ValueError):
        Palette((1,), np.zeros((2, 2), dtype=int))
    with pytest.raises(ValueError):
        Palette((1, 2), np.full((2, 2), 2))


# ---------------------------------------------------------------- intra block copy

def test_intrabc_copy_exact(rng):
    recon = rng.integers(0, 256, (16, 32))
    coded = np.zeros_like(recon, dtype=bool)
    coded[:, :16] = True
    out = intrabc_copy(recon, coded, 16, 8, (0, -8), 8, 8)
    assert (out == recon[8:16, 8:16]).all()


def test_intrabc_uncoded_source_rejected(rng):
    recon = rng.integers(0, 256, (16, 32))
    coded = np.zeros_like(recon, dtype=bool)
    coded[:, :12] = True
    with pytest.raises(ValueError):
        intrabc_copy(recon, coded, 16, 8, (0, -8), 8, 8)


def test_intrabc_chroma_half_pel_bilinear():
    c = np.array([[10, 20, 30, 40, 50]] * 3)
    out = intrabc_chroma(c, 0, 0, (0, 1), 2, 1)
    assert out.tolist() == [[15, 25]]
    out = intrabc_chroma(c, 0, 0, (0, 2), 2, 1)
    assert out.tolist() == [[20, 30]]


def test_gather_edges_unavailable_fills_mid():
    recon = np.zeros((8, 8), dtype=np.int64)
    e = gather_edges(recon, np.zeros((8, 8), bool), 0, 0, 4, 4, 10)
    assert (e.above == 512).all() and (e.left == 512).all() and e.top_left == 512
