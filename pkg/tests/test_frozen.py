"""Library outputs against values produced by the independent oracles."""

from fractions import Fraction

import numpy as np
import pytest

from bandgrowth.construct import block_structure, stretch_embed
from bandgrowth.core import WindowMatrix, band_profile, mul, shift_lazy, single_entry_lazy, transpose
from bandgrowth.field import FieldConfig
from bandgrowth.growth import compose_product, power, power_growth_check

Q = FieldConfig.rationals()


def test_compose_value(frozen):
    g = compose_product(power(1, 0.5), power(1, 0.5))
    assert g(100) == pytest.approx(frozen["compose_half_100"], rel=1e-12)


def test_shift_profile(frozen):
    w = shift_lazy(Q).window(10)
    assert band_profile(w).g.tolist() == frozen["profile_shift_10"]


def test_single_entry_profile(frozen):
    w = single_entry_lazy(Q, 1, 5).window(6)
    assert band_profile(w).g.tolist() == frozen["profile_single_1_5"]


def test_shift_times_transpose_corner(frozen):
    s = shift_lazy(Q).window(6)
    p = mul(s, transpose(s))
    assert p.valid_to >= 5
    assert sorted([list(k) for k, v in p.restrict(5).items()]) == frozen["s_st_corner_5"]


@pytest.mark.parametrize("name", ["1/3", "1/2", "2/3"])
def test_block_sizes(frozen, name):
    bs = block_structure(Fraction(name))
    assert bs.sizes(40).tolist() == frozen[f"sizes_{name}_head"]
    assert int(bs.sizes(10_000).sum()) == frozen[f"sizes_{name}_sum"]
    assert bs.start(10_000) == frozen[f"start_{name}_10000"]


def test_half_blocks_in_window(frozen):
    bs = block_structure(Fraction(1, 2))
    assert [[bs.start(k), bs.end(k)] for k in range(1, bs.blocks_in(10) + 1)] == frozen["r_half_blocks_10"]


def test_step1_values(frozen):
    rep = power_growth_check(1.0, 0.5, 2, [100.0])
    assert rep.b[:, 0].tolist() == pytest.approx(frozen["step1_half_c1_n100"], rel=1e-12)


def test_stretch_placements(frozen):
    st = stretch_embed(block_structure(Fraction(1, 2)), 0.25, 1)
    assert [st.placement(k) for k in range(1, 13)] == frozen["stretch_half_quarter"]


def test_shift_word_rank(frozen):
    from bandgrowth.analyze import freeness_check

    s = shift_lazy(Q).window(16)
    res = freeness_check(s, transpose(s), 2)
    assert res.rank == frozen["rank_shift_words_L2"]
    assert not res.free
