"""Acceptance criteria 1-10.

Each criterion is a plain function returning ``(ok, detail)``. Under pytest
every one is a test with its runtime budget, and a PASS/FAIL line per
criterion is printed in the terminal summary. Run standalone with

    python3 tests/test_acceptance.py
"""

import json
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from bandgrowth.analyze import freeness_check
from bandgrowth.construct import (
    BlockElement,
    block_structure,
    combine,
    cross_report,
    default_generators,
    embed_R,
    interleave_embedding,
    interleave_window,
    key_property_report,
    r_curve_constant,
    stretch_check,
    stretch_embed,
)
from bandgrowth.analyze import estimate_growth
from bandgrowth.core import (
    WindowMatrix,
    add,
    band_profile,
    mul,
    random_banded,
    random_growth_lazy,
    shift_lazy,
    transpose,
    verify_growth,
)
from bandgrowth.curves import PowerCurve, TableCurve
from bandgrowth.field import FieldConfig
from bandgrowth.growth import compose_product, fit_exponent, power, power_growth_check
from bandgrowth.tridiag import block_tridiagonalize, linear_growth_certificate

try:
    import oracles as O
except ImportError:  # standalone run from the repo root
    sys.path.insert(0, str(__import__("pathlib").Path(__file__).parent))
    import oracles as O

GF7 = FieldConfig.gfp(7)
Q = FieldConfig.rationals()
SEED = 0xB41D

RESULTS = []


def composition_soundness():
    rng = np.random.default_rng(SEED)
    n = 256
    k = np.arange(1, n + 1)
    bad = 0
    for _ in range(500):
        x = random_banded(GF7, n, int(rng.integers(1, 6)), rng)
        y = random_banded(GF7, n, int(rng.integers(1, 6)), rng)
        bound = compose_product(TableCurve.from_profile(band_profile(x).g), TableCurve.from_profile(band_profile(y).g))
        bad += int(np.count_nonzero(band_profile(mul(x, y)).g > bound(k) + 1e-9))
    # constant levels: W_0(c) W_0(c') inside W_0(c + c')
    w0_ok = True
    for c1, c2 in [(1, 1), (2, 3), (4, 1)]:
        x = random_banded(GF7, n, c1, rng, density=1.0)
        y = random_banded(GF7, n, c2, rng, density=1.0)
        w0_ok &= verify_growth(mul(x, y), c1 + c2, 0)
        g = compose_product(power(c1, 0), power(c2, 0))
        w0_ok &= isinstance(g, PowerCurve) and g.c == c1 + c2 and g.s == 0
    return bad == 0 and w0_ok, f"violations={bad} W0_additive={w0_ok}"


def step1_bound():
    grid = [1e2, 1e3, 1e4, 1e5, 1e6]
    dense = sorted(grid + [2 * v for v in grid])
    details, ok = [], True
    for s in (0.25, 0.5, 0.75):
        a = power_growth_check(1.0, s, 64, grid)
        b = power_growth_check(1.0, s, 64, dense)
        for j, n in enumerate(grid):
            if not np.allclose(a.b[:, j], O.step1_values(1.0, s, 64, n), rtol=1e-12):
                ok = False
        stable = abs(b.d - a.d) <= 0.05 * a.d
        ok &= a.passed and b.passed and stable
        details.append(f"s={s}:d={a.d:.4g}/{b.d:.4g}")
    return ok, " ".join(details)


def block_structure_and_growth():
    ok, details = True, []
    for r in (Fraction(1, 3), Fraction(1, 2), Fraction(2, 3)):
        bs = block_structure(r)
        sizes = O.block_sizes(r, 10_000)
        starts = O.block_starts(sizes)
        same = bs.sizes(10_000).tolist() == sizes and bs.starts(10_000).tolist() == starts
        c = r_curve_constant(bs)
        grow = all(
            verify_growth(embed_R(bs, BlockElement.random(bs, GF7, seed=SEED + t)).window(10_000), c, float(r))
            for t in range(3)
        )
        ok &= same and grow
        details.append(f"r={r}:blocks={same},growth={grow}")
    return ok, " ".join(details)


def stretch_embedding():
    st = stretch_embed(block_structure(Fraction(1, 2)), 0.25, 1)
    rep = stretch_check(st, GF7, 10_000, 100, seed=SEED)
    quartic = all(p >= k**4 for k, p in st.placements_upto(10_000))
    return rep["pass"] and quartic, (
        f"p_k>=k^4={quartic} unital={rep['unital']} hom={rep['homomorphism']} inj={rep['injective']}"
    )


def key_property():
    gs = default_generators(block_structure(Fraction(1, 2), padded=True), GF7)
    rep = key_property_report(gs, 32)
    detail = f"units={rep['units']} all_exact={rep['all_exact']} C={rep['C']:.3f} R2={rep['r2']:.3f}"
    if not rep["r2_ok"]:
        table = " ".join(f"{row['k']}:{row['max_length']}/{row['bound']:.0f}" for row in rep["per_k"])
        detail += f" (R2 below 0.9; per-k max_length/fit: {table})"
    return rep["pass"], detail


def cross_elements():
    gs = default_generators(block_structure(Fraction(1, 2), padded=True), GF7)
    rep = cross_report(gs, 31)
    good = sum(r["verified"] for r in rep["per_k"])
    return rep["pass"], f"verified={good}/31 window={rep['window']}"


def tridiagonalization():
    rng = np.random.default_rng(SEED)
    sim = geo = strict = cert = 0
    worst = 0.0
    for _ in range(50):
        xs = [random_banded(GF7, 300, int(rng.integers(1, 4)), rng) for _ in range(2)]
        rep, xts = block_tridiagonalize(xs)
        ok_sim = True
        for x, xt in zip(xs, xts):
            lhs, rhs = mul(rep.P, xt), mul(x, rep.P)
            m = min(lhs.valid_to, rhs.valid_to)
            ok_sim &= m > 0 and lhs.equal_on(rhs, m)
        sim += ok_sim and rep.similarity_ok
        geo += rep.within_geometric_bound()
        if rep.strict:
            strict += 1
            c, good = linear_growth_certificate(rep, xts)
            cert += good
            worst = max(worst, c)
    ok = sim == 50 and geo == 50 and strict >= 45 and cert == strict
    return ok, f"similarity={sim}/50 geometric={geo}/50 strict={strict}/50 c_max={worst:.3g}"


def estimator_calibration():
    bs = block_structure(Fraction(1, 3))
    gens = {name: embed_R(bs, BlockElement.random(bs, GF7, seed=SEED + i)) for i, name in enumerate("ab")}
    est = estimate_growth(gens, 3, 100_000)
    return abs(est.fit.s - 1 / 3) <= 0.05, f"s={est.fit.s:.4f} words={est.words}"


def freeness():
    s = shift_lazy(Q).window(16)
    a = freeness_check(s, transpose(s), 2)
    # the witness must vanish on the compared region
    words = {"1": WindowMatrix.identity(Q, 16), "x": s, "y": transpose(s)}
    acc = WindowMatrix.zeros(Q, 16)
    for label, coeff in a.witness.items():
        m = words["1"]
        for letter in label.split("*") if label != "1" else []:
            m = mul(m, words[letter])
        acc = add(acc, WindowMatrix.from_dict(Q, 16, {k: Fraction(coeff) * v for k, v in m.entries().items()},
                                              valid_to=m.valid_to))
    zero = acc.is_zero_on(a.compared_on)
    x = random_banded(GF7, 16, 2, np.random.default_rng(SEED))
    b = freeness_check(x, x, 1)

    def seeded():
        rng = np.random.default_rng(SEED)
        return freeness_check(random_banded(Q, 128, 2, rng), random_banded(Q, 128, 2, rng), 5).dumps()

    first, second = seeded(), seeded()
    res = json.loads(first)
    ok = (not a.free) and zero and (not b.free) and first == second
    return ok, f"shift_pair_free={a.free} witness_zero={zero} equal_pair_free={b.free} seeded_rank={res['rank']} free={res['free']} reproducible={first == second}"


def interleave():
    base_n = 300
    samples = [random_growth_lazy(GF7, 1, 0.5, seed=SEED + i) for i in range(20)]
    rng = np.random.default_rng(SEED)

    def image(X, N):
        # X maps slots to base windows
        acc = WindowMatrix.zeros(GF7, N)
        for slot, w in X.items():
            acc = add(acc, interleave_window(w, 2, slot))
        return acc

    slots = [(1, 1), (1, 2), (2, 1), (2, 2)]
    one = WindowMatrix.identity(GF7, base_n)
    unital = image({(1, 1): one, (2, 2): one}, 2 * base_n).equal_on(WindowMatrix.identity(GF7, 2 * base_n))
    hom = 0
    for _ in range(50):
        X = {sl: samples[int(rng.integers(20))].window(base_n) for sl in slots}
        Y = {sl: samples[int(rng.integers(20))].window(base_n) for sl in slots}
        XY = {}
        for a in (1, 2):
            for b in (1, 2):
                XY[(a, b)] = add(mul(X[(a, 1)], Y[(1, b)]), mul(X[(a, 2)], Y[(2, b)]))
        lhs = mul(image(X, 2 * base_n), image(Y, 2 * base_n))
        rhs = image(XY, 2 * base_n)
        m = min(lhs.valid_to, rhs.valid_to)
        hom += m > 0 and lhs.equal_on(rhs, m)
    diffs = []
    for x in samples:
        base = fit_exponent(band_profile(x.window(2000))).s
        img = combine([interleave_embedding(x, 2, (1, 1)), interleave_embedding(x, 2, (1, 2))]).window(4000)
        diffs.append(abs(fit_exponent(band_profile(img)).s - base))
    ok = unital and hom == 50 and max(diffs) <= 0.05
    return ok, f"unital={unital} hom={hom}/50 max_exponent_diff={max(diffs):.4f}"


CRITERIA = [
    (1, "composition soundness", composition_soundness, 30),
    (2, "power-growth recurrence", step1_bound, 5),
    (3, "block structure and R growth", block_structure_and_growth, 30),
    (4, "stretch embedding", stretch_embedding, 60),
    (5, "matrix-unit recipes", key_property, 120),
    (6, "cross elements", cross_elements, 30),
    (7, "block tridiagonalization", tridiagonalization, 120),
    (8, "estimator calibration", estimator_calibration, 60),
    (9, "freeness checker", freeness, 60),
    (10, "interleave", interleave, 30),
]


def run_criterion(num, title, fn, budget):
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    passed = bool(ok) and dt < budget
    line = f"{'PASS' if passed else 'FAIL'} criterion {num:2d} {title}: {detail} [{dt:.1f}s / {budget}s]"
    RESULTS.append(line)
    return passed, line


@pytest.mark.parametrize("num,title,fn,budget", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, title, fn, budget):
    passed, line = run_criterion(num, title, fn, budget)
    print(line)
    assert passed, line


if __name__ == "__main__":
    fails = 0
    for crit in CRITERIA:
        passed, line = run_criterion(*crit)
        print(line, flush=True)
        fails += not passed
    sys.exit(1 if fails else 0)
