"""Growth-curve calculus: the W_s(c) levels, product bounds, power growth and fits.

Curve values are analytic bounds held in double precision; comparisons against
integer profiles allow a 1e-9 slack. Matrix entries never touch floats.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .core import BandProfile, WindowMatrix, band_profile, verify_growth
from .curves import SLACK, ComposedCurve, GrowthCurve, PowerCurve, TableCurve, power, table
from .errors import ExponentOutOfRange, UsageError, ZeroProfile

__all__ = [
    "GrowthCurve",
    "FiltrationLevel",
    "PowerGrowthReport",
    "ExponentFit",
    "power",
    "table",
    "curve_eval",
    "compose_product",
    "membership",
    "minimal_constant",
    "power_growth_check",
    "fit_exponent",
]


def curve_eval(g: GrowthCurve, n) -> float:
    if np.any(np.asarray(n) < 1):
        raise UsageError("curves are evaluated at positions n >= 1")
    return g(n)


def compose_product(g: GrowthCurve, h: GrowthCurve) -> GrowthCurve:
    """Curve bounding ``xy`` when ``g`` bounds ``x`` and ``h`` bounds ``y``.

    Both curves are replaced by their running max first. The row side gives
    ``g(n) + h(n + g(n))`` and the column side ``h(n) + g(n + h(n))``; the
    result is the larger of the two. For ``g = h`` they coincide.
    """
    if isinstance(g, PowerCurve) and isinstance(h, PowerCurve) and g.s == 0 and h.s == 0:
        return PowerCurve(g.c + h.c, 0.0)
    return ComposedCurve(g, h)


@dataclass(frozen=True)
class FiltrationLevel:
    """The level W_s(c): matrices for which ``c * n**s`` is a growth curve."""

    s: float
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise UsageError("filtration constant must be positive")
        if not 0 <= self.s <= 1:
            raise UsageError("filtration exponent must lie in [0, 1]")

    @property
    def curve(self) -> PowerCurve:
        return PowerCurve(self.c, self.s)


def membership(w: WindowMatrix, level: FiltrationLevel) -> bool:
    return verify_growth(w, level.c, level.s)


def minimal_constant(w: WindowMatrix, s: float) -> float:
    """Smallest ``c`` with ``profile(k) <= c * k**s`` for all ``k <= valid_to``."""
    m = w.valid_to
    if m < 1:
        raise UsageError("window has no valid positions")
    g = band_profile(w).g[:m].astype(np.float64)
    if not g.any():
        return 0.0
    k = np.arange(1, m + 1, dtype=np.float64)
    return float(np.max(g / k**s))


# --------------------------------------------------------------------- step 1


@dataclass
class PowerGrowthReport:
    """Outcome of iterating the power bound ``b_m`` over an (m, n) grid.

    ``b[m-1, j]`` bounds the bandwidth of an m-fold product of elements of
    W_s(c) at position ``n_values[j]``; ``d`` is the least constant with
    ``b_m(n) <= d * m**(1/(1-s)) * n**s`` on the grid.
    """

    s: float
    c: float
    m_max: int
    n_values: list
    b: np.ndarray = dc_field(repr=False)
    ratios: np.ndarray = dc_field(repr=False)
    d: float = 0.0
    worst_ratio: float = 0.0
    worst_at: tuple = (0, 0)
    exponent: float = 0.0
    passed: bool = True

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "c": self.c,
            "m_range": [1, self.m_max],
            "n_values": [int(n) for n in self.n_values],
            "m_exponent": self.exponent,
            "d": self.d,
            "worst_ratio": self.worst_ratio,
            "worst_at": {"m": int(self.worst_at[0]), "n": int(self.worst_at[1])},
            "pass": bool(self.passed),
        }

    def grid_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n", "b", "ratio"])
        for mi in range(self.m_max):
            for j, n in enumerate(self.n_values):
                w.writerow([mi + 1, int(n), repr(float(self.b[mi, j])), repr(float(self.ratios[mi, j]))])
        return buf.getvalue()


def power_growth_check(
    c: float,
    s: float,
    m_max: int,
    n_values: Sequence[float],
    report_only: bool = False,
) -> PowerGrowthReport:
    """Iterate ``b_1 = c n^s``, ``b_{m+1} = b_m + c (n + b_m)^s`` and fit ``d``.

    ``s = 1`` has no polynomial bound; it raises unless ``report_only`` is
    set, in which case ratios use exponent 1 and ``passed`` is False.
    """
    if not 0 <= s <= 1:
        raise ExponentOutOfRange(f"exponent {s} outside [0, 1]")
    if s == 1 and not report_only:
        raise ExponentOutOfRange("s = 1: powers of W_1(c) grow exponentially")
    if c <= 0 or m_max < 1:
        raise UsageError("need c > 0 and m_max >= 1")
    n = np.asarray(n_values, dtype=np.float64)
    b = np.empty((m_max, n.size))
    b[0] = c * n**s
    for m in range(1, m_max):
        b[m] = b[m - 1] + c * (n + b[m - 1]) ** s
    expo = 1.0 / (1.0 - s) if s < 1 else 1.0
    ms = np.arange(1, m_max + 1, dtype=np.float64)[:, None]
    ratios = b / (ms**expo * n[None, :] ** s)
    flat = int(np.argmax(ratios))
    mi, j = divmod(flat, n.size)
    d = float(ratios[mi, j])
    return PowerGrowthReport(
        s=s,
        c=c,
        m_max=m_max,
        n_values=list(n_values),
        b=b,
        ratios=ratios,
        d=d,
        worst_ratio=d,
        worst_at=(mi + 1, n_values[j]),
        exponent=expo,
        passed=bool(s < 1 and math.isfinite(d) and np.all(ratios <= d * (1 + SLACK))),
    )


# --------------------------------------------------------------------- fits


@dataclass(frozen=True)
class ExponentFit:
    c: float
    s: float
    residual: float
    points: int

    def to_json(self) -> dict:
        return {"c": self.c, "s": self.s, "residual": self.residual, "points": self.points}

    def __iter__(self):
        return iter((self.c, self.s, self.residual))


def fit_exponent(profile, skip: int = 16, hull: bool = True, min_points: int = 8) -> ExponentFit:
    """Least-squares fit of ``log g(k) = log c + s log k``.

    Args:
        profile: a :class:`BandProfile` (only positions up to ``exact_to``
            are used) or a plain vector indexed from position 1.
        skip: burn-in; positions ``k < skip`` are ignored.
        hull: fit the running max of the profile rather than the raw values.
            Block structures give saw-tooth profiles whose hull is the curve
            that actually bounds them.
    """
    if isinstance(profile, BandProfile):
        g = profile.g[: profile.exact_to]
    else:
        g = np.asarray(profile)
    g = g.astype(np.float64)
    if not np.any(g > 0):
        raise ZeroProfile("profile is identically zero (bandwidth 0)")
    if hull:
        g = np.maximum.accumulate(g)
    k = np.arange(1, g.size + 1, dtype=np.float64)
    sel = (k >= skip) & (g >= 1)
    if int(sel.sum()) < min_points:
        raise UsageError(f"need at least {min_points} positions with g >= 1 after burn-in")
    x = np.log(k[sel])
    y = np.log(g[sel])
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return ExponentFit(
        c=float(math.exp(coef[0])),
        s=float(coef[1]),
        residual=float(math.sqrt(np.mean(resid**2))),
        points=int(sel.sum()),
    )


def profile_curve(w: WindowMatrix) -> TableCurve:
    """Nondecreasing table curve from a window's measured profile."""
    return TableCurve.from_profile(band_profile(w).g)
