"""Experiments on generated subalgebras.

* representation growth exponent of a finite generating set (an upper-bound
  witness for one representation, never a dimension claim);
* minimal-constant series ``c_k`` for the images of the block idempotents;
* first-nonzero-row scatter of those images;
* exact word-independence check for a pair of matrices.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import linalg
from .construct import (
    BlockElement,
    BlockStructure,
    GeneratorSet,
    Stretch,
    WordEvaluator,
    cross_element,
    matrix_unit_recipe,
)
from .core import LazyMatrix, WindowMatrix, add, band_profile, scale
from .errors import BandGrowthError, NotAnIdempotentImage, SampleLimitExceeded, UsageError, WindowExhausted
from .field import FieldConfig
from .growth import ExponentFit, fit_exponent, minimal_constant

SAMPLE_LIMIT = 10_000
CERT_PRIME = 2_147_483_629  # largest prime below 2**31

# ====================================================================== words


def all_words(names: Sequence[str], L: int) -> List[Tuple[str, ...]]:
    """Words of length ``0..L`` in shortlex order."""
    out: List[Tuple[str, ...]] = [()]
    for length in range(1, L + 1):
        out.extend(itertools.product(names, repeat=length))
    return out


def word_count(m: int, L: int) -> int:
    return sum(m**l for l in range(L + 1))


def _as_windows(gens, n: int) -> Dict[str, Union[LazyMatrix, WindowMatrix]]:
    if isinstance(gens, GeneratorSet):
        return dict(gens.matrices)
    if isinstance(gens, dict):
        return dict(gens)
    return {f"x{i + 1}": g for i, g in enumerate(gens)}


class _Evaluator(WordEvaluator):
    """Word evaluator accepting lazy matrices or ready windows."""

    def __init__(self, gens: Dict[str, Union[LazyMatrix, WindowMatrix]], n: int):
        field = next(iter(gens.values())).field
        mats = {}
        for name, g in gens.items():
            if isinstance(g, WindowMatrix):
                if g.n != n:
                    raise UsageError(f"generator {name} has window {g.n}, expected {n}")
                mats[name] = g
            else:
                mats[name] = g.window(n)
        self.n = n
        self.field = field
        self.gens = mats
        self._cache = {}
        self._identity = WindowMatrix.identity(field, n)
        self.products = 0


# ====================================================================== estimator


@dataclass
class GrowthEstimate:
    """Representation growth exponent of one generating set (upper-bound witness)."""

    L: int
    window: int
    envelope: np.ndarray = dc_field(repr=False)
    exact_to: int
    fit: ExponentFit
    words: int
    sampled: bool

    label = "representation growth exponent"

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "caveat": "upper-bound witness for this representation only",
            "L": self.L,
            "window": self.window,
            "exact_to": self.exact_to,
            "words": self.words,
            "sampled": self.sampled,
            "fit": self.fit.to_json(),
        }

    def envelope_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["position", "envelope"])
        for k, g in enumerate(self.envelope[: self.exact_to], start=1):
            w.writerow([k, int(g)])
        return buf.getvalue()


def estimate_growth(
    gens,
    L: int,
    window: int,
    sample_limit: int = SAMPLE_LIMIT,
    allow_sampling: bool = True,
    seed: int = 0,
    skip: int = 16,
    hull: bool = True,
) -> GrowthEstimate:
    """Envelope of the profiles of every word of length ``<= L``, then a log-log fit.

    Raises:
        SampleLimitExceeded: more than ``sample_limit`` words and sampling
            is disabled.
    """
    if L < 1:
        raise UsageError("word length must be >= 1")
    named = _as_windows(gens, window)
    names = list(named)
    total = word_count(len(names), L)
    sampled = False
    if total > sample_limit:
        if not allow_sampling:
            raise SampleLimitExceeded(f"{total} words exceed the limit of {sample_limit}")
        sampled = True
        rng = np.random.default_rng(seed)
        lengths = rng.integers(1, L + 1, size=sample_limit)
        words = sorted({tuple(names[i] for i in rng.integers(0, len(names), size=l)) for l in lengths})
        # the longest words dominate the envelope; always keep the generators
        words = sorted(set(words) | {(a,) for a in names}, key=lambda w: (len(w), w))
    else:
        words = all_words(names, L)[1:]
    ev = _Evaluator(named, window)
    env = np.zeros(window, dtype=np.int64)
    exact = window
    for w in words:
        prof = band_profile(ev.word(w))
        exact = min(exact, prof.exact_to)
        env = np.maximum(env, prof.g)
    fit = fit_exponent(env[:exact], skip=skip, hull=hull)
    return GrowthEstimate(L, window, env, exact, fit, len(words), sampled)


# ====================================================================== embeddings


class Embedding:
    """Named images of the block idempotents ``F_k`` (and cross elements)."""

    name = "embedding"

    def __init__(self, structure: BlockStructure, field: FieldConfig):
        self.structure = structure
        self.field = field

    def window_for(self, k: int) -> int:
        return self.structure.end(k + 1) + 2

    def idempotents(self, k: int) -> List[WindowMatrix]:
        raise NotImplementedError

    def in_block_crosses(self, k: int, all_pairs: bool = False) -> List[WindowMatrix]:
        """Images of ``e_ij`` inside block k (consecutive pairs unless ``all_pairs``)."""
        raise NotImplementedError

    def next_cross(self, k: int) -> Optional[List[WindowMatrix]]:
        """Images of the cross element linking block k to block k+1, if any."""
        return None


def _unit_window(field, n, i, j) -> WindowMatrix:
    return WindowMatrix.from_coo(field, n, [i], [j], field.array([1]))


def _pairs(nk: int, all_pairs: bool):
    if all_pairs:
        return [(i, j) for i in range(1, nk + 1) for j in range(1, nk + 1) if i != j]
    return [p for i in range(1, nk) for p in ((i, i + 1), (i + 1, i))]


class IdentityEmbedding(Embedding):
    """Inclusion: images are the matrix units themselves."""

    name = "identity"

    def idempotents(self, k):
        n, b = self.window_for(k), self.structure.start(k)
        return [_unit_window(self.field, n, b + i, b + i) for i in range(self.structure.size(k))]

    def in_block_crosses(self, k, all_pairs=False):
        n, b = self.window_for(k), self.structure.start(k)
        return [_unit_window(self.field, n, b + i - 1, b + j - 1) for i, j in _pairs(self.structure.size(k), all_pairs)]

    def next_cross(self, k):
        n = self.window_for(k)
        a, c = self.structure.start(k), self.structure.start(k + 1)
        return [_unit_window(self.field, n, c, a), _unit_window(self.field, n, a, c)]


class WordEmbedding(Embedding):
    """Images evaluated from generator words (the construction's recipes)."""

    name = "words"

    def __init__(self, gens: GeneratorSet):
        super().__init__(gens.structure, gens.field)
        self.gens = gens
        self._ev: Optional[WordEvaluator] = None

    def window_for(self, k):
        return self.gens.window_for_block(k)

    def _evaluator(self, k) -> WordEvaluator:
        n = self.window_for(k)
        if self._ev is None or self._ev.n < n:
            self._ev = WordEvaluator(self.gens.matrices, n, self.field)
        return self._ev

    def _unit(self, k, i, j):
        ev = self._evaluator(k)
        out = ev.combination(matrix_unit_recipe(self.gens, k, i, j).combination)
        return out

    def idempotents(self, k):
        return [self._unit(k, i, i) for i in range(1, self.structure.size(k) + 1)]

    def in_block_crosses(self, k, all_pairs=False):
        return [self._unit(k, i, j) for i, j in _pairs(self.structure.size(k), all_pairs)]

    def next_cross(self, k):
        ev = self._evaluator(k + 1)
        ce = cross_element(self.gens, k)
        return [ev.combination(ce.gamma), ev.combination(ce.gamma_bar)]


class StretchEmbedding(Embedding):
    """Images under a stretch; only block-diagonal elements have images."""

    name = "stretch"

    def __init__(self, stretch: Stretch, field: FieldConfig):
        super().__init__(stretch.bs, field)
        self.stretch = stretch

    def window_for(self, k):
        return self.stretch.placement(k) + self.structure.size(k) + 1

    def _unit(self, k, i, j):
        x = BlockElement.unit(self.structure, self.field, k, i, j)
        return self.stretch.embed(x).window(self.window_for(k))

    def idempotents(self, k):
        return [self._unit(k, i, i) for i in range(1, self.structure.size(k) + 1)]

    def in_block_crosses(self, k, all_pairs=False):
        return [self._unit(k, i, j) for i, j in _pairs(self.structure.size(k), all_pairs)]


# ====================================================================== constants


@dataclass
class ConstantsSeries:
    s: float
    c: List[float]
    c_all_pairs: List[float]
    cross_available: bool
    ratios: List[float]
    ratio_trend: float

    def running_max(self) -> List[float]:
        return np.maximum.accumulate(np.asarray(self.c, dtype=float)).tolist() if self.c else []

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "c_consecutive": self.c,
            "c_all_pairs": self.c_all_pairs,
            "c_running_max": self.running_max(),
            "cross_to_next_block": self.cross_available,
            "ratio_to_log_power": self.ratios,
            "ratio_trend": self.ratio_trend,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "c_consecutive", "c_all_pairs", "ratio"])
        for k, (a, b, r) in enumerate(zip(self.c, self.c_all_pairs, self.ratios), start=1):
            w.writerow([k, repr(a), repr(b), repr(r)])
        return buf.getvalue()


def _exact_constant(w: WindowMatrix, s: float) -> float:
    if w.valid_to < 1:
        raise WindowExhausted("image has an empty valid region")
    return minimal_constant(w, s)


def constants_series(theta: Embedding, s: float, K: int) -> ConstantsSeries:
    """Per-block minimal constants of the idempotent images and their links.

    ``c[k-1]`` covers the images of F_k, the consecutive in-block units and
    the link to block k+1; ``c_all_pairs`` adds every in-block unit. The
    ratio against ``log2(k+1)**(2/(1-s))`` is informational.
    """
    if K < 1:
        raise UsageError("K must be >= 1")
    cons, alls, ratios = [], [], []
    cross_any = False
    for k in range(1, K + 1):
        mats = theta.idempotents(k) + theta.in_block_crosses(k)
        nxt = theta.next_cross(k)
        if nxt is not None:
            cross_any = True
            mats += nxt
        ck = max(_exact_constant(m, s) for m in mats)
        extra = theta.in_block_crosses(k, all_pairs=True) if theta.structure.size(k) > 2 else []
        ca = max([ck] + [_exact_constant(m, s) for m in extra])
        cons.append(ck)
        alls.append(ca)
        ratios.append(ck / math.log2(k + 1) ** (2.0 / (1.0 - s)))
    half = ratios[len(ratios) // 2 :]
    trend = float(np.polyfit(np.arange(len(half)), half, 1)[0]) if len(half) >= 2 else 0.0
    return ConstantsSeries(s, cons, alls, cross_any, ratios, trend)


# ====================================================================== scatter


@dataclass
class ScatterReport:
    k: int
    positions: List[int]
    min_gap: Optional[int]
    max_position: int

    @property
    def distinct(self) -> bool:
        return len(set(self.positions)) == len(self.positions)

    def to_json(self) -> dict:
        return {"k": self.k, "positions": self.positions, "min_gap": self.min_gap, "max_position": self.max_position}


def first_nonzero_row(w: WindowMatrix) -> Optional[int]:
    counts = np.diff(w.indptr[: w.valid_to + 1])
    nz = np.flatnonzero(counts)
    return int(nz[0]) + 1 if nz.size else None


def scatter_report(theta: Embedding, k: int) -> ScatterReport:
    """First nonzero row of each image of F_k.

    Raises:
        NotAnIdempotentImage: some image vanishes on its valid region.
    """
    pos = []
    for i, img in enumerate(theta.idempotents(k), start=1):
        p = first_nonzero_row(img)
        if p is None:
            raise NotAnIdempotentImage(f"image of idempotent {i} of block {k} is zero")
        pos.append(p)
    srt = sorted(pos)
    gap = min(b - a for a, b in zip(srt, srt[1:])) if len(srt) > 1 else None
    return ScatterReport(k, pos, gap, max(pos))


# ====================================================================== freeness


@dataclass
class FreenessResult:
    free: bool
    L: int
    words: List[str]
    rank: int
    compared_on: int
    field: str
    witness: Optional[Dict[str, str]] = None

    def to_json(self) -> dict:
        return {
            "free": self.free,
            "L": self.L,
            "words": len(self.words),
            "rank": self.rank,
            "compared_on": self.compared_on,
            "field": self.field,
            "witness": self.witness,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def _word_label(w: Tuple[str, ...]) -> str:
    return "*".join(w) if w else "1"


def _integer_rows(field: FieldConfig, M: np.ndarray) -> np.ndarray:
    """Clear denominators row by row (rank-preserving)."""
    out = np.empty(M.shape, dtype=object)
    for r in range(M.shape[0]):
        den = 1
        for v in M[r]:
            den = math.lcm(den, Fraction(v).denominator)
        out[r] = [int(Fraction(v) * den) for v in M[r]]
    return out


def freeness_check(x: WindowMatrix, y: WindowMatrix, L: int) -> FreenessResult:
    """Exact independence of all ``2**(L+1) - 1`` words in ``x, y`` (empty word included).

    Word images are compared on the common valid region. Over Q the rank is
    first taken modulo a large prime; full rank there certifies full rank
    over Q, otherwise exact rational elimination produces the witness
    relation, which is the first canonical left-nullspace vector.

    Raises:
        WindowExhausted: the window is smaller than ``2**(L+1)``.
    """
    if L < 0:
        raise UsageError("L must be >= 0")
    f = x.field
    f.check_same(y.field)
    if x.n != y.n:
        raise UsageError("windows differ")
    if x.n < 2 ** (L + 1):
        raise WindowExhausted(f"window {x.n} below 2**(L+1) = {2 ** (L + 1)}")
    ev = _Evaluator({"x": x, "y": y}, x.n)
    words = all_words(["x", "y"], L)
    mats = [ev.word(w) for w in words]
    m = min(w.valid_to for w in mats)
    if m < 1:
        raise WindowExhausted("word products leave no valid region")
    # flatten over the union of supports inside the m x m corner
    supp = sorted(set().union(*(w.restrict(m).keys() for w in mats)))
    col = {key: c for c, key in enumerate(supp)}
    M = f.zeros((len(words), max(len(supp), 1)))
    for r, w in enumerate(mats):
        for key, v in w.restrict(m).items():
            M[r, col[key]] = v
    W = len(words)
    if f.kind == "q":
        Mi = _integer_rows(f, M)
        mod = (Mi % CERT_PRIME).astype(np.int64)
        rk = linalg.rank(FieldConfig.gfp(CERT_PRIME), mod)
        if rk == W:
            return FreenessResult(True, L, [_word_label(w) for w in words], rk, m, str(f))
    rk = linalg.rank(f, M)
    if rk == W:
        return FreenessResult(True, L, [_word_label(w) for w in words], rk, m, str(f))
    rel = linalg.nullspace(f, M.T)[0]
    witness = {_word_label(w): f.format(c) for w, c in zip(words, rel) if c != 0}
    # the relation must vanish on the compared region
    combo = None
    for w, c in zip(mats, rel):
        if c != 0:
            t = scale(c, w)
            combo = t if combo is None else add(combo, t)
    if combo is not None and not combo.is_zero_on(m):
        raise BandGrowthError("witness relation does not vanish")
    return FreenessResult(False, L, [_word_label(w) for w in words], rk, m, str(f), witness)
