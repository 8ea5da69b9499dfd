"""Windowed exact matrices standing in for omega x omega row/column-finite ones.

A :class:`LazyMatrix` is an infinite matrix described by an entry rule and a
declared growth curve. :func:`make_window` materializes its leading ``n x n``
corner as a :class:`WindowMatrix`, stored as CSR with 0-based internal
indices. Public indices are 1-based.

``valid_to`` marks the leading corner that is exact for the infinite matrix.
Products shrink it: row ``k`` of ``x @ y`` is exact only when the whole of
row ``k`` of ``x`` lands inside the exact part of ``y``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from . import _kernels
from .curves import SLACK, GrowthCurve, ComposedCurve, MaxCurve, PowerCurve
from .errors import ConfigMismatch, DeclaredCurveViolation, UsageError
from .field import FieldConfig

__all__ = [
    "LazyMatrix",
    "WindowMatrix",
    "BandProfile",
    "make_window",
    "band_profile",
    "add",
    "sub",
    "scale",
    "mul",
    "transpose",
    "verify_growth",
    "identity_lazy",
    "shift_lazy",
    "single_entry_lazy",
    "diagonal_lazy",
    "random_banded",
    "random_growth_lazy",
    "load_matrix",
    "dump_matrix",
]


# ====================================================================== window


class WindowMatrix:
    """Exact sparse ``n x n`` corner of an infinite matrix.

    Attributes:
        field: scalar field of the entries.
        n: window size.
        valid_to: leading corner exact for the represented infinite matrix.
        indptr, indices, data: CSR arrays (0-based columns, sorted per row,
            no explicit zeros).
        curve: growth curve known to bound the infinite matrix, or ``None``
            when the window *is* the whole (finite) object.
    """

    __slots__ = ("field", "n", "valid_to", "indptr", "indices", "data", "curve", "name", "_profile")

    def __init__(self, field, n, indptr, indices, data, valid_to=None, curve=None, name=""):
        if n < 1:
            raise UsageError("window size must be >= 1")
        self.field = field
        self.n = int(n)
        self.valid_to = self.n if valid_to is None else int(valid_to)
        if not 0 <= self.valid_to <= self.n:
            raise UsageError("valid_to must lie in [0, n]")
        self.indptr = indptr
        self.indices = indices
        self.data = data
        self.curve = curve
        self.name = name
        self._profile = None

    # construction ------------------------------------------------------
    @classmethod
    def from_coo(cls, field: FieldConfig, n, rows, cols, vals, **kw) -> "WindowMatrix":
        """Build from 1-based coordinates; duplicates are summed, zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1) - 1
        cols = np.asarray(cols, dtype=np.int64).reshape(-1) - 1
        if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
            raise UsageError(f"entry index outside the {n} x {n} window")
        if isinstance(vals, np.ndarray) and vals.dtype == field.dtype:
            vals = field.normalize(vals.reshape(-1))
        else:
            vals = field.array(list(vals))
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            key = rows * n + cols
            heads = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
            if heads.size != key.size:
                if field.fast:
                    vals = field.normalize(np.add.reduceat(vals, heads))
                else:
                    vals = field.normalize(np.add.reduceat(vals, heads).astype(object))
                rows, cols = rows[heads], cols[heads]
            keep = vals != 0
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        if not field.fast:
            vals = np.asarray(vals, dtype=object)
        return cls(field, n, indptr, cols.astype(np.int64), vals, **kw)

    @classmethod
    def from_dict(cls, field, n, entries: dict, **kw) -> "WindowMatrix":
        if not entries:
            return cls.zeros(field, n, **kw)
        keys = list(entries)
        return cls.from_coo(field, n, [k[0] for k in keys], [k[1] for k in keys], [entries[k] for k in keys], **kw)

    @classmethod
    def from_dense(cls, field, dense, **kw) -> "WindowMatrix":
        dense = np.asarray(dense)
        n = dense.shape[0]
        r, c = np.nonzero(dense != 0)
        return cls.from_coo(field, n, r + 1, c + 1, field.normalize(dense[r, c]) if field.fast else list(dense[r, c]), **kw)

    @classmethod
    def zeros(cls, field, n, **kw) -> "WindowMatrix":
        return cls(field, n, np.zeros(n + 1, dtype=np.int64), np.zeros(0, dtype=np.int64), field.zeros(0), **kw)

    @classmethod
    def identity(cls, field, n, **kw) -> "WindowMatrix":
        idx = np.arange(1, n + 1)
        kw.setdefault("curve", PowerCurve(0, 0))
        return cls.from_coo(field, n, idx, idx, field.array([1] * n), **kw)

    # views ---------------------------------------------------------------
    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def coo(self):
        """1-based ``(rows, cols, vals)``."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr)) + 1
        return rows, self.indices + 1, self.data

    def entries(self) -> dict:
        rows, cols, vals = self.coo()
        conv = int if self.field.fast else (lambda v: v)
        return {(int(i), int(j)): conv(v) for i, j, v in zip(rows, cols, vals)}

    def get(self, i: int, j: int):
        lo, hi = self.indptr[i - 1], self.indptr[i]
        k = lo + np.searchsorted(self.indices[lo:hi], j - 1)
        if k < hi and self.indices[k] == j - 1:
            return self.data[k]
        return self.field.zero

    def to_dense(self) -> np.ndarray:
        out = self.field.zeros((self.n, self.n))
        rows, cols, vals = self.coo()
        out[rows - 1, cols - 1] = vals
        return out

    def restrict(self, m: int) -> dict:
        """Entries with both indices ``<= m``."""
        rows, cols, vals = self.coo()
        keep = (rows <= m) & (cols <= m)
        conv = int if self.field.fast else (lambda v: v)
        return {(int(i), int(j)): conv(v) for i, j, v in zip(rows[keep], cols[keep], vals[keep])}

    def equal_on(self, other: "WindowMatrix", m: Optional[int] = None) -> bool:
        """Exact equality on the leading ``m x m`` corner (default: common valid region)."""
        if m is None:
            m = min(self.valid_to, other.valid_to)
        return self.restrict(m) == other.restrict(m)

    def is_zero_on(self, m: Optional[int] = None) -> bool:
        return not self.restrict(self.valid_to if m is None else m)

    def row_reach(self) -> np.ndarray:
        return _kernels.row_reach(self.indptr, self.indices)

    def infinite_row_reach(self) -> np.ndarray:
        """Bound on the rightward reach of each row of the infinite matrix."""
        reach = self.row_reach()
        if self.curve is not None:
            reach = np.maximum(reach, self.curve.reach(self.n))
        return reach

    def with_meta(self, **kw) -> "WindowMatrix":
        out = WindowMatrix(
            self.field,
            self.n,
            self.indptr,
            self.indices,
            self.data,
            valid_to=kw.get("valid_to", self.valid_to),
            curve=kw.get("curve", self.curve),
            name=kw.get("name", self.name),
        )
        return out

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"<WindowMatrix{tag} n={self.n} nnz={self.nnz} valid_to={self.valid_to} over {self.field}>"

    def __matmul__(self, other):
        return mul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return scale(-1, self)

    @property
    def T(self):
        return transpose(self)


# ====================================================================== profile


@dataclass(frozen=True)
class BandProfile:
    """Per-position bandwidth of a window.

    ``g[k-1]`` is the largest ``i - k`` over nonzero ``(k, i)`` or ``(i, k)``
    with ``i > k``; 0 if there is none. Positions ``k <= exact_to`` agree
    with the infinite matrix.
    """

    g: np.ndarray
    exact_to: int
    valid_to: int

    def __len__(self):
        return int(self.g.size)

    def at(self, k: int) -> int:
        return int(self.g[k - 1])

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["position", "bandwidth"])
        for k, v in enumerate(self.g.tolist(), start=1):
            w.writerow([k, v])
        return buf.getvalue() if fh is None else ""


def band_profile(w: WindowMatrix) -> BandProfile:
    if w._profile is None:
        rows, cols, _ = w.coo()
        g = _kernels.band_profile(rows - 1, cols - 1, w.n)
        if w.curve is None:
            exact_to = w.valid_to
        else:
            reach = np.maximum(g, w.curve.reach(w.n))
            exact_to = _prefix_within(reach, w.valid_to)
        w._profile = BandProfile(g, exact_to, w.valid_to)
    return w._profile


def _prefix_within(reach: np.ndarray, limit: int) -> int:
    """Largest m <= limit with k + reach[k-1] <= limit for every k <= m."""
    if limit <= 0:
        return 0
    k = np.arange(1, limit + 1)
    bad = np.flatnonzero(k + reach[:limit] > limit)
    return int(bad[0]) if bad.size else limit


def verify_growth(w: WindowMatrix, c: float, s: float) -> bool:
    """True iff ``c * k**s`` bounds the profile at every ``k <= valid_to``."""
    m = w.valid_to
    if m == 0:
        return True
    g = band_profile(w).g[:m].astype(np.float64)
    bound = c * np.arange(1, m + 1, dtype=np.float64) ** s
    return bool(np.all(g <= bound + SLACK * np.maximum(1.0, bound)))


# ====================================================================== ring ops


def _check_pair(a: WindowMatrix, b: WindowMatrix):
    a.field.check_same(b.field)
    if a.n != b.n:
        raise ConfigMismatch(f"window mismatch: {a.n} vs {b.n}")


def _curve_max(a, b):
    if a is None or b is None:
        return None
    return MaxCurve([a, b])


def add(a: WindowMatrix, b: WindowMatrix) -> WindowMatrix:
    _check_pair(a, b)
    ra, ca, va = a.coo()
    rb, cb, vb = b.coo()
    vals = np.concatenate([va, vb]) if a.field.fast else np.concatenate([va, vb]).astype(object)
    return WindowMatrix.from_coo(
        a.field,
        a.n,
        np.concatenate([ra, rb]),
        np.concatenate([ca, cb]),
        vals,
        valid_to=min(a.valid_to, b.valid_to),
        curve=_curve_max(a.curve, b.curve),
    )


def scale(c, w: WindowMatrix) -> WindowMatrix:
    f = w.field
    c = f.element(c.value if hasattr(c, "value") else c)
    if c == 0:
        return WindowMatrix.zeros(f, w.n, valid_to=w.valid_to, curve=w.curve)
    data = f.mul(w.data, c)
    return WindowMatrix(f, w.n, w.indptr, w.indices, data, valid_to=w.valid_to, curve=w.curve)


def sub(a: WindowMatrix, b: WindowMatrix) -> WindowMatrix:
    return add(a, scale(-1, b))


def transpose(w: WindowMatrix) -> WindowMatrix:
    rows, cols, vals = w.coo()
    out = WindowMatrix.from_coo(w.field, w.n, cols, rows, vals, valid_to=w.valid_to, curve=w.curve)
    if w.name:
        out.name = w.name + "^T"
    return out


def mul(a: WindowMatrix, b: WindowMatrix) -> WindowMatrix:
    """Exact product; rows ``<= valid_to`` of the result match the infinite product."""
    _check_pair(a, b)
    f = a.field
    limit = min(a.valid_to, b.valid_to)
    valid = _prefix_within(a.infinite_row_reach(), limit)
    if f.fast:
        ptr, idx, val = _kernels.spgemm_mod(a.indptr, a.indices, a.data, b.indptr, b.indices, b.data, a.n, f.p)
    else:
        ptr, idx, val = _spgemm_object(f, a, b)
    curve = None
    if a.curve is not None and b.curve is not None:
        curve = ComposedCurve(a.curve, b.curve)
    return WindowMatrix(f, a.n, ptr, idx, val, valid_to=valid, curve=curve)


def _spgemm_object(f: FieldConfig, a: WindowMatrix, b: WindowMatrix):
    # python-int / Fraction path for Q and for large primes
    n = a.n
    ptr = [0]
    idx: list = []
    val: list = []
    bp, bi, bd = b.indptr, b.indices.tolist(), b.data
    ai, ad = a.indices.tolist(), a.data
    mod = f.p if f.kind == "gfp" else None
    for i in range(n):
        acc: dict = {}
        for t in range(a.indptr[i], a.indptr[i + 1]):
            l = ai[t]
            av = ad[t]
            for u in range(bp[l], bp[l + 1]):
                j = bi[u]
                acc[j] = acc.get(j, 0) + av * bd[u]
        for j in sorted(acc):
            v = acc[j] % mod if mod else acc[j]
            if v != 0:
                idx.append(j)
                val.append(v)
        ptr.append(len(idx))
    vals = np.empty(len(val), dtype=object)
    vals[:] = val
    return np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64), vals


def mul_chain(mats: Iterable[WindowMatrix]) -> WindowMatrix:
    """Product of a sequence, evaluated right to left."""
    mats = list(mats)
    if not mats:
        raise UsageError("empty product")
    out = mats[-1]
    for m in reversed(mats[:-1]):
        out = mul(m, out)
    return out


# ====================================================================== lazy


class LazyMatrix:
    """An omega x omega matrix given by an entry rule and a declared growth curve.

    ``rule(i, j)`` returns a field element for 1-based ``i, j``. ``bulk(n)``
    may return 1-based COO arrays for the ``n x n`` corner directly, which
    :func:`make_window` prefers for large windows. Rules must be pure.
    """

    def __init__(
        self,
        field: FieldConfig,
        curve: GrowthCurve,
        rule: Optional[Callable[[int, int], object]] = None,
        bulk: Optional[Callable[[int], tuple]] = None,
        name: str = "",
    ):
        if rule is None and bulk is None:
            raise UsageError("a lazy matrix needs a rule or a bulk generator")
        self.field = field
        self.curve = curve
        self._rule = rule
        self._bulk = bulk
        self.name = name
        self._cache: dict = {}

    def entry(self, i: int, j: int):
        if self._rule is not None:
            return self.field.element(self._rule(i, j))
        m = make_window(self, max(i, j))
        return m.get(i, j)

    def window(self, n: int) -> WindowMatrix:
        """Cached :func:`make_window`."""
        if n not in self._cache:
            self._cache[n] = make_window(self, n)
        return self._cache[n]

    def __repr__(self):
        return f"LazyMatrix({self.name or '?'}, curve={self.curve!r}, field={self.field})"


def _band_coords(reach: np.ndarray, n: int):
    """All 1-based (i, j) inside the declared band of an n x n window."""
    ks = np.arange(1, n + 1)
    width = np.minimum(reach, n - ks)
    tot = int(width.sum())
    base = np.repeat(ks, width)
    off = np.arange(tot) - np.repeat(np.cumsum(width) - width, width) + 1
    rows = np.concatenate([ks, base, base + off])
    cols = np.concatenate([ks, base + off, base])
    return rows, cols


def make_window(m: LazyMatrix, n: int, spot_checks: int = 256, seed: int = 0) -> WindowMatrix:
    """Materialize the ``n x n`` corner of ``m`` with ``valid_to = n``.

    Raises:
        DeclaredCurveViolation: a nonzero sits outside the declared band.
    """
    if n < 1:
        raise UsageError("window size must be >= 1")
    f = m.field
    reach = m.curve.reach(n)
    if m._bulk is not None:
        rows, cols, vals = m._bulk(n)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        w = WindowMatrix.from_coo(f, n, rows, cols, vals, curve=m.curve, name=m.name)
        r, c, _ = w.coo()
        lo = np.minimum(r, c)
        bad = np.abs(r - c) > reach[lo - 1]
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise DeclaredCurveViolation(
                f"{m.name or 'matrix'}: nonzero at ({r[k]}, {c[k]}) outside declared curve {m.curve!r}"
            )
        return w
    rows, cols = _band_coords(reach, n)
    vals = [m._rule(int(i), int(j)) for i, j in zip(rows, cols)]
    w = WindowMatrix.from_coo(f, n, rows, cols, vals, curve=m.curve, name=m.name)
    # sampled probe outside the band
    rng = np.random.default_rng(seed)
    if n > 1:
        for _ in range(spot_checks):
            i, j = (int(x) for x in rng.integers(1, n + 1, size=2))
            if abs(i - j) > reach[min(i, j) - 1] and f.element(m._rule(i, j)) != 0:
                raise DeclaredCurveViolation(
                    f"{m.name or 'matrix'}: nonzero at ({i}, {j}) outside declared curve {m.curve!r}"
                )
    return w


# ====================================================================== builtins


def identity_lazy(field: FieldConfig) -> LazyMatrix:
    def bulk(n):
        k = np.arange(1, n + 1)
        return k, k, field.array([1] * n)

    return LazyMatrix(field, PowerCurve(0, 0), rule=lambda i, j: int(i == j), bulk=bulk, name="identity")


def shift_lazy(field: FieldConfig, transposed: bool = False) -> LazyMatrix:
    """One-step shift ``S(i, i+1) = 1`` (or its transpose)."""

    def bulk(n):
        k = np.arange(1, n)
        r, c = (k + 1, k) if transposed else (k, k + 1)
        return r, c, field.array([1] * (n - 1))

    if transposed:
        rule = lambda i, j: int(i == j + 1)  # noqa: E731
    else:
        rule = lambda i, j: int(j == i + 1)  # noqa: E731
    return LazyMatrix(field, PowerCurve(1, 0), rule=rule, bulk=bulk, name="shift^T" if transposed else "shift")


def single_entry_lazy(field: FieldConfig, i0: int, j0: int, value=1) -> LazyMatrix:
    d = abs(i0 - j0)
    lo = min(i0, j0)
    curve = _FinitePoint(lo, d)
    v = field.element(value)

    def bulk(n):
        if i0 <= n and j0 <= n:
            return [i0], [j0], field.array([v])
        return [], [], field.array([])

    return LazyMatrix(field, curve, rule=lambda i, j: v if (i, j) == (i0, j0) else 0, bulk=bulk, name=f"e({i0},{j0})")


class _FinitePoint(GrowthCurve):
    kind = "point"
    nondecreasing = False

    def __init__(self, at, width):
        self.at, self.width = at, width

    def _eval(self, n):
        return np.where(np.floor(n + SLACK) == self.at, float(self.width), 0.0)

    def to_json(self):
        return {"kind": "point", "at": self.at, "width": self.width}


def diagonal_lazy(field: FieldConfig, fn: Callable[[np.ndarray], object], name="diag") -> LazyMatrix:
    """Diagonal matrix with entries ``fn(k)`` (vectorized over 1-based k)."""

    def bulk(n):
        k = np.arange(1, n + 1)
        vals = fn(k)
        return k, k, (field.normalize(np.asarray(vals, dtype=np.int64)) if field.fast else field.array(list(vals)))

    return LazyMatrix(field, PowerCurve(0, 0), rule=lambda i, j: fn(np.array([i]))[0] if i == j else 0, bulk=bulk, name=name)


def random_banded(field: FieldConfig, n: int, bandwidth: int, rng: np.random.Generator, density: float = 0.6) -> WindowMatrix:
    """Random matrix with constant bandwidth, treated as a finite band matrix.

    The curve is ``power(bandwidth, 0)`` so the window is exact and products
    track their valid region.
    """
    rows, cols = _band_coords(np.full(n, bandwidth, dtype=np.int64), n)
    keep = rng.random(rows.size) < density
    rows, cols = rows[keep], cols[keep]
    vals = field.random(rng, rows.size)
    return WindowMatrix.from_coo(field, n, rows, cols, vals, curve=PowerCurve(bandwidth, 0))


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def random_growth_lazy(field: FieldConfig, c: float, s: float, seed: int, density: float = 0.6, name: str = "") -> LazyMatrix:
    """Random infinite matrix filling the band ``|i - j| <= c * min(i, j)**s``.

    Entries are a hash of ``(seed, i, j)``, so every window agrees with
    every other one.
    """
    curve = PowerCurve(c, s)
    key = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)

    def values(rows, cols):
        with np.errstate(over="ignore"):
            h = _mix64(_mix64(key ^ rows.astype(np.uint64)) ^ cols.astype(np.uint64))
        keep = (h >> np.uint64(11)).astype(np.float64) / float(2**53) < density
        if field.kind == "gfp":
            raw = (h % np.uint64(min(field.p, 2**62))).astype(np.int64)
        else:
            raw = (h % np.uint64(7)).astype(np.int64) - 3
        return keep & (raw != 0), raw

    def bulk(n):
        rows, cols = _band_coords(curve.reach(n), n)
        keep, raw = values(rows, cols)
        vals = raw[keep] if field.fast else field.array(raw[keep].tolist())
        return rows[keep], cols[keep], vals

    def rule(i, j):
        if abs(i - j) > curve.reach(min(i, j))[-1]:
            return 0
        keep, raw = values(np.array([i]), np.array([j]))
        return int(raw[0]) if keep[0] else 0

    return LazyMatrix(field, curve, rule=rule, bulk=bulk, name=name or f"random[{seed}]")


# ====================================================================== files


def dump_matrix(w: WindowMatrix, path=None) -> str:
    rows, cols, vals = w.coo()
    obj = {
        "field": w.field.to_json(),
        "window": w.n,
        "entries": [[int(i), int(j), w.field.format(v)] for i, j, v in zip(rows, cols, vals)],
    }
    if w.valid_to != w.n:
        obj["valid_to"] = w.valid_to
    text = json.dumps(obj, separators=(",", ":"))
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load_matrix(source) -> WindowMatrix:
    """Read the JSON matrix format from a path or an already-parsed dict."""
    if isinstance(source, dict):
        obj = source
    else:
        try:
            obj = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read matrix file {source}: {exc}") from exc
    try:
        field = FieldConfig.from_json(obj["field"])
        n = int(obj["window"])
        ent = obj["entries"]
        rows = [int(e[0]) for e in ent]
        cols = [int(e[1]) for e in ent]
        vals = [str(e[2]) for e in ent]
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise UsageError(f"malformed matrix object: {exc}") from exc
    return WindowMatrix.from_coo(field, n, rows, cols, vals, valid_to=obj.get("valid_to"))
