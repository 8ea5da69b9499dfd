"""Growth curves: per-position bandwidth bounds ``g: N -> R+``.

A curve ``g`` bounds a matrix ``x`` when ``x(n, i) = 0 = x(i, n)`` for every
``i > n + g(n)``. Curves are evaluated on 1-based integer positions, scalar
or array.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import UsageError

SLACK = 1e-9
REACH_CAP = float(2**62)
# composed tables never look further out than this multiple of their size
LOOKAHEAD = 8


class GrowthCurve:
    """Base class; subclasses implement ``_eval`` on float64 position arrays."""

    kind = "abstract"
    nondecreasing = True

    def __call__(self, n):
        arr = np.asarray(n, dtype=np.float64)
        out = self._eval(np.maximum(arr, 1.0))
        if np.ndim(n) == 0:
            return float(out)
        return out

    def _eval(self, n: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def monotone(self) -> "GrowthCurve":
        """Nondecreasing extension (running max). Identity for monotone kinds."""
        return self if self.nondecreasing else _RunningMax(self)

    def reach(self, n_positions: int) -> np.ndarray:
        """Integer displacement bound at positions ``1..n_positions``."""
        vals = self(np.arange(1, n_positions + 1))
        return np.floor(np.minimum(vals, REACH_CAP) + SLACK).astype(np.int64)

    def to_json(self) -> dict:
        return {"kind": self.kind}

    # algebra -----------------------------------------------------------
    def __or__(self, other: "GrowthCurve") -> "GrowthCurve":
        return MaxCurve([self, other])


class PowerCurve(GrowthCurve):
    kind = "power"

    def __init__(self, c: float, s: float):
        if not c >= 0:
            raise UsageError(f"power curve needs c >= 0, got {c}")
        if not 0.0 <= s <= 1.0:
            raise UsageError(f"power curve exponent must lie in [0, 1], got {s}")
        self.c = float(c)
        self.s = float(s)

    def _eval(self, n):
        return self.c * n**self.s

    def to_json(self):
        return {"kind": "power", "c": self.c, "s": self.s}

    def __repr__(self):
        return f"power({self.c:g}, {self.s:g})"


class TableCurve(GrowthCurve):
    """Tabulated nondecreasing curve; clamps to the last entry past the end."""

    kind = "table"

    def __init__(self, values: Sequence[float]):
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise UsageError("table curve needs a nonempty vector")
        if np.any(np.diff(vals) < 0):
            raise UsageError("table curve must be nondecreasing")
        self.values = vals

    @classmethod
    def from_profile(cls, g) -> "TableCurve":
        """Running-max hull of a (possibly non-monotone) profile vector."""
        g = np.asarray(g, dtype=np.float64)
        if g.size == 0:
            g = np.zeros(1)
        return cls(np.maximum.accumulate(g))

    def _eval(self, n):
        idx = np.clip(np.floor(n + SLACK).astype(np.int64) - 1, 0, self.values.size - 1)
        return self.values[idx]

    def to_json(self):
        return {"kind": "table", "values": self.values.tolist()}

    def __repr__(self):
        return f"table(len={self.values.size})"


class FuncCurve(GrowthCurve):
    """Curve given by a vectorized function of integer positions."""

    kind = "func"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], nondecreasing: bool, label: str = "func"):
        self.fn = fn
        self.nondecreasing = nondecreasing
        self.label = label

    def _eval(self, n):
        pos = np.floor(n + SLACK).astype(np.int64)
        return np.asarray(self.fn(pos), dtype=np.float64)

    def to_json(self):
        return {"kind": "func", "label": self.label}

    def __repr__(self):
        return f"func({self.label})"


class _RunningMax(GrowthCurve):
    kind = "running_max"

    def __init__(self, base: GrowthCurve):
        self.base = base
        self._cache = np.zeros(0)

    def _grow(self, top: int):
        if top > self._cache.size:
            size = max(top, 2 * self._cache.size, 1024)
            self._cache = np.maximum.accumulate(self.base(np.arange(1, size + 1)))

    def _eval(self, n):
        pos = np.floor(n + SLACK).astype(np.int64)
        if pos.size == 0:
            return np.zeros(pos.shape)
        self._grow(int(pos.max()))
        return self._cache[pos - 1]

    def to_json(self):
        return {"kind": "running_max", "of": self.base.to_json()}


class ComposedCurve(GrowthCurve):
    """Bound for a product ``xy`` from bounds ``g`` of ``x`` and ``h`` of ``y``.

    Rows of ``xy`` reach at most ``g(n) + h(n + g(n))``; columns at most
    ``h(n) + g(n + h(n))``. Both operands are taken nondecreasing first.
    Values are tabulated on integer positions so long chains stay linear.
    """

    kind = "compose"

    def __init__(self, g: GrowthCurve, h: GrowthCurve):
        self.g = g.monotone()
        self.h = h.monotone()
        self._cache = np.zeros(0)

    def _grow(self, top: int):
        if top <= self._cache.size:
            return
        # additive headroom: doubling here would compound through nested chains
        size = max(top + 64, 256)
        n = np.arange(1, size + 1, dtype=np.float64)
        gn = self.g._eval(n)
        hn = self.h._eval(n)
        far = LOOKAHEAD * size
        rows = gn + self.h._eval(np.minimum(np.floor(n + gn + SLACK), far))
        cols = hn + self.g._eval(np.minimum(np.floor(n + hn + SLACK), far))
        out = np.maximum(rows, cols)
        # past the lookahead the bound is unknown, so it is infinite
        out[(n + gn > far) | (n + hn > far)] = np.inf
        self._cache = out

    def _eval(self, n):
        pos = np.floor(n + SLACK).astype(np.int64)
        if pos.size == 0:
            return np.zeros(pos.shape)
        self._grow(int(pos.max()))
        return self._cache[pos - 1]

    def to_json(self):
        return {"kind": "compose", "left": self.g.to_json(), "right": self.h.to_json()}

    def __repr__(self):
        return f"compose({self.g!r}, {self.h!r})"


class MaxCurve(GrowthCurve):
    kind = "max"

    def __init__(self, parts):
        self.parts = list(parts)
        self.nondecreasing = all(p.nondecreasing for p in self.parts)

    def _eval(self, n):
        out = self.parts[0]._eval(n)
        for p in self.parts[1:]:
            out = np.maximum(out, p._eval(n))
        return out

    def to_json(self):
        return {"kind": "max", "of": [p.to_json() for p in self.parts]}


def power(c: float, s: float) -> PowerCurve:
    return PowerCurve(c, s)


def table(values) -> TableCurve:
    return TableCurve(values)


def zero_curve() -> PowerCurve:
    return PowerCurve(0.0, 0.0)


def curve_from_json(obj: dict) -> GrowthCurve:
    kind = obj.get("kind")
    if kind == "power":
        return PowerCurve(obj["c"], obj["s"])
    if kind == "table":
        return TableCurve(obj["values"])
    raise UsageError(f"cannot rebuild curve of kind {kind!r} from JSON")


def ceil_int(x: float) -> int:
    return int(math.ceil(x - SLACK))
