from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from bandgrowth.construct import (
    BlockElement,
    WordEvaluator,
    address_word,
    block_structure,
    combine,
    cross_element,
    default_generators,
    embed_R,
    idempotent_family,
    interleave_embedding,
    interleave_window,
    key_property_report,
    matrix_unit_recipe,
    r_curve_constant,
    stretch_check,
    stretch_embed,
    transpose_word,
    verify_cross,
    verify_unit,
)
from bandgrowth.core import WindowMatrix, band_profile, mul, random_growth_lazy, shift_lazy, verify_growth
from bandgrowth.errors import NotAStretch, OutOfRange, PaddingRequired, ShapeMismatch, SlotCollision, UsageError
from bandgrowth.field import FieldConfig

import oracles as O

GF7 = FieldConfig.gfp(7)


@pytest.fixture(scope="module")
def gens():
    return default_generators(block_structure(Fraction(1, 2), padded=True), GF7)


@pytest.mark.parametrize("r", [Fraction(1, 4), Fraction(2, 5), Fraction(3, 4)])
def test_sizes_match_integer_search(r):
    bs = block_structure(r)
    sizes = O.block_sizes(r, 300)
    assert bs.sizes(300).tolist() == sizes
    starts = O.block_starts(sizes)
    assert [bs.start(k) for k in (1, 17, 300)] == [starts[0], starts[16], starts[299]]


def test_block_of_and_distances():
    bs = block_structure(Fraction(1, 2))
    assert bs.block_of(np.array([1, 2, 3, 4, 6, 7])).tolist() == [1, 2, 2, 3, 3, 4]
    assert bs.dist_to_end(np.array([4, 5, 6])).tolist() == [2, 1, 0]
    assert bs.blocks_in(10) == 4


def test_padded_sizes_powers_of_two():
    bs = block_structure(Fraction(1, 2), padded=True)
    sizes = bs.sizes(64).tolist()
    assert sizes[:8] == [1, 2, 4, 4, 8, 8, 8, 8]
    assert all(x & (x - 1) == 0 for x in sizes)
    assert all(bs.size(k) >= k for k in range(1, 65))


def test_r_out_of_range():
    for r in (0, 1, Fraction(3, 2)):
        with pytest.raises(UsageError):
            block_structure(r)


def test_block_shape_checked():
    bs = block_structure(Fraction(1, 2))
    x = BlockElement(bs, GF7, lambda k: np.zeros((1, 1), dtype=np.int64))
    with pytest.raises(ShapeMismatch):
        x.block(2)


@pytest.mark.parametrize("r", [Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)])
def test_embed_r_growth_and_homomorphism(r):
    bs = block_structure(r)
    x = BlockElement.random(bs, GF7, seed=1)
    y = BlockElement.random(bs, GF7, seed=2)
    n = 600
    ex, ey, exy = (embed_R(bs, e).window(n) for e in (x, y, x @ y))
    c = r_curve_constant(bs)
    assert verify_growth(ex, c, float(r))
    prod = mul(ex, ey)
    assert prod.equal_on(exy, prod.valid_to)
    one = embed_R(bs, BlockElement.identity(bs, GF7)).window(n)
    assert one.equal_on(WindowMatrix.identity(GF7, n))


def test_stretch_placements_and_checks():
    bs = block_structure(Fraction(1, 2))
    st_ = stretch_embed(bs, 0.25, 1)
    rep = stretch_check(st_, GF7, 2000, 4, seed=3)
    assert rep["pass"]
    assert rep["min_placement_ratio"] >= 1 - 1e-12
    for k, p in st_.placements_upto(2000):
        assert p >= k**4


def test_stretch_rejects_large_exponent():
    bs = block_structure(Fraction(1, 2))
    with pytest.raises(NotAStretch):
        stretch_embed(bs, 0.5, 1)
    with pytest.raises(OutOfRange):
        stretch_embed(bs, 0.25, 0)


def test_address_words():
    assert address_word(0) == ()
    assert address_word(1) == ("ubar",)
    assert transpose_word(("s", "u", "q")) == ("q", "ubar", "sbar")


def test_generators_need_padding():
    with pytest.raises(PaddingRequired):
        default_generators(block_structure(Fraction(1, 2)), GF7)


def test_generator_metadata(gens):
    meta = gens.metadata()
    assert [m["name"] for m in meta] == ["s", "sbar", "u", "ubar", "B", "Bbar", "q", "h"]
    n = 400
    for m in meta:
        w = gens.matrices[m["name"]].window(n)
        assert verify_growth(w, m["power_constant"], m["power_exponent"])


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_unit_recipes_exact(gens, k):
    ev = WordEvaluator(gens.matrices, gens.window_for_block(k), GF7)
    nk = gens.structure.size(k)
    for i in range(1, nk + 1):
        for j in range(1, nk + 1):
            assert verify_unit(ev, matrix_unit_recipe(gens, k, i, j))


def test_recipe_rejects_bad_index(gens):
    with pytest.raises(UsageError):
        matrix_unit_recipe(gens, 2, 3, 1)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_cross_elements(gens, k):
    ev = WordEvaluator(gens.matrices, gens.window_for_block(k + 1), GF7)
    ce = cross_element(gens, k, ev)
    assert ce.verified
    assert ce.target == (gens.structure.start(k + 1), gens.structure.start(k))


def test_key_property_small(gens):
    rep = key_property_report(gens, 6)
    assert rep["all_exact"] and rep["pass"]
    assert rep["units"] == sum(gens.structure.size(k) ** 2 for k in range(1, 7))


def test_idempotent_positions():
    bs = block_structure(Fraction(1, 2))
    assert idempotent_family(bs, 3).positions == [4, 5, 6]


def test_interleave_homomorphism_and_collision():
    x = random_growth_lazy(GF7, 1, 0.5, seed=4)
    y = random_growth_lazy(GF7, 1, 0.5, seed=5)
    a = interleave_embedding(x, 2, (1, 2))
    b = interleave_embedding(y, 2, (2, 1))
    both = combine([a, b]).window(200)
    want = WindowMatrix.from_coo(
        GF7, 200, *[np.concatenate(t) for t in zip(a.window(200).coo(), b.window(200).coo())]
    )
    assert both.equal_on(want)
    # (x e12)(y e21) = (xy) e11
    xy = mul(x.window(100), y.window(100))
    prod = mul(a.window(200), b.window(200))
    img = interleave_window(xy, 2, (1, 1))
    m = min(prod.valid_to, img.valid_to)
    assert m > 0 and prod.equal_on(img, m)
    with pytest.raises(SlotCollision):
        combine([a, interleave_embedding(y, 2, (1, 2))])
    with pytest.raises(UsageError):
        interleave_embedding(x, 2, (3, 1))


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_interleave_window_positions(n, a, b):
    assume(a <= n and b <= n)
    w = shift_lazy(GF7).window(5)
    img = interleave_window(w, n, (a, b))
    assert set(img.entries()) == {(n * (i - 1) + a, n * (j - 1) + b) for i, j in w.entries()}
