import json
from fractions import Fraction

import numpy as np
import pytest

from bandgrowth.analyze import (
    IdentityEmbedding,
    StretchEmbedding,
    WordEmbedding,
    all_words,
    constants_series,
    estimate_growth,
    first_nonzero_row,
    freeness_check,
    scatter_report,
    word_count,
)
from bandgrowth.construct import block_structure, default_generators, stretch_embed
from bandgrowth.core import WindowMatrix, random_banded, random_growth_lazy, shift_lazy, transpose
from bandgrowth.errors import NotAnIdempotentImage, SampleLimitExceeded, UsageError, WindowExhausted
from bandgrowth.field import FieldConfig

GF7 = FieldConfig.gfp(7)
Q = FieldConfig.rationals()


def test_word_enumeration():
    ws = all_words(["x", "y"], 2)
    assert ws == [(), ("x",), ("y",), ("x", "x"), ("x", "y"), ("y", "x"), ("y", "y")]
    assert word_count(2, 5) == 63 == len(all_words("ab", 5))


def test_estimate_power_growth():
    gens = {"a": random_growth_lazy(GF7, 1, 0.5, seed=1), "b": random_growth_lazy(GF7, 1, 0.5, seed=2)}
    est = estimate_growth(gens, 2, 4000)
    assert abs(est.fit.s - 0.5) < 0.08
    assert est.to_json()["label"] == "representation growth exponent"
    assert est.envelope_csv().startswith("position,envelope\n")


def test_estimate_sampling_limit():
    gens = {"a": random_growth_lazy(GF7, 1, 0.5, seed=1), "b": random_growth_lazy(GF7, 1, 0.5, seed=2)}
    with pytest.raises(SampleLimitExceeded):
        estimate_growth(gens, 4, 500, sample_limit=10, allow_sampling=False)
    est = estimate_growth(gens, 4, 500, sample_limit=10, seed=3)
    assert est.sampled


def test_estimate_rejects_zero_length():
    with pytest.raises(UsageError):
        estimate_growth({"a": shift_lazy(GF7)}, 0, 100)


def test_scatter_identity_and_stretch():
    bs = block_structure(Fraction(1, 2))
    assert scatter_report(IdentityEmbedding(bs, GF7), 3).positions == [4, 5, 6]
    assert scatter_report(IdentityEmbedding(bs, GF7), 1).positions == [1]
    st = stretch_embed(bs, 0.25, 1)
    rep = scatter_report(StretchEmbedding(st, GF7), 3)
    assert rep.positions == [81, 82, 83] and rep.distinct and rep.min_gap == 1


def test_first_nonzero_row_empty():
    assert first_nonzero_row(WindowMatrix.zeros(GF7, 4)) is None


def test_scatter_rejects_zero_image():
    bs = block_structure(Fraction(1, 2))

    class Zero(IdentityEmbedding):
        def idempotents(self, k):
            return [WindowMatrix.zeros(GF7, 8)]

    with pytest.raises(NotAnIdempotentImage):
        scatter_report(Zero(bs, GF7), 2)


def test_constants_words_match_identity():
    gens = default_generators(block_structure(Fraction(1, 2), padded=True), GF7)
    a = constants_series(WordEmbedding(gens), 0.5, 4)
    b = constants_series(IdentityEmbedding(gens.structure, GF7), 0.5, 4)
    assert a.c == pytest.approx(b.c)
    assert a.cross_available
    assert all(x <= y + 1e-12 for x, y in zip(a.c, a.c_all_pairs))


def test_constants_stretch_has_no_cross():
    bs = block_structure(Fraction(1, 2))
    cs = constants_series(StretchEmbedding(stretch_embed(bs, 0.25, 1), GF7), 0.25, 3)
    assert not cs.cross_available
    assert all(c <= 1 + 1e-9 for c in cs.c)


def test_shift_pair_not_free():
    s = shift_lazy(GF7).window(16)
    res = freeness_check(s, transpose(s), 2)
    assert not res.free
    assert res.witness == {"1": "6", "x*y": "1"}


def test_equal_pair_not_free():
    s = shift_lazy(Q).window(8)
    res = freeness_check(s, s, 1)
    assert not res.free
    vals = {k: Fraction(v) for k, v in res.witness.items()}
    assert set(vals) == {"x", "y"} and vals["x"] == -vals["y"]


def test_random_q_pair_free_and_reproducible():
    def run():
        rng = np.random.default_rng(0xB41D)
        x = random_banded(Q, 64, 2, rng)
        y = random_banded(Q, 64, 2, rng)
        return freeness_check(x, y, 3)

    a, b = run(), run()
    assert a.free and a.rank == 15
    assert a.dumps() == b.dumps()
    json.loads(a.dumps())


def test_freeness_window_too_small():
    s = shift_lazy(GF7).window(7)
    with pytest.raises(WindowExhausted):
        freeness_check(s, s, 2)
