"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package: plain Python ints, dicts and Fractions.
"""

from __future__ import annotations

import math
from fractions import Fraction


def dense_profile(entries: dict, n: int) -> list:
    """Bandwidth at each position 1..n straight from the definition."""
    g = [0] * n
    for (i, j), v in entries.items():
        if v == 0 or i == j:
            continue
        lo, hi = min(i, j), max(i, j)
        if lo <= n:
            g[lo - 1] = max(g[lo - 1], hi - lo)
    return g


def dict_matmul(a: dict, b: dict, p=None) -> dict:
    by_row = {}
    for (l, j), v in b.items():
        by_row.setdefault(l, []).append((j, v))
    out = {}
    for (i, l), u in a.items():
        for j, v in by_row.get(l, ()):
            out[(i, j)] = out.get((i, j), 0) + u * v
    if p is not None:
        out = {k: v % p for k, v in out.items()}
    return {k: v for k, v in out.items() if v != 0}


def restrict(d: dict, m: int) -> dict:
    return {k: v for k, v in d.items() if k[0] <= m and k[1] <= m}


def block_sizes(r: Fraction, K: int) -> list:
    """n_k = floor(k**(r/(1-r))): largest m with m**q <= k**p, by integer bisection."""
    t = r / (1 - r)
    p, q = t.numerator, t.denominator
    sizes = []
    for k in range(1, K + 1):
        kp = k**p
        lo, hi = 0, 1
        while hi**q <= kp:
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if mid**q <= kp:
                lo = mid
            else:
                hi = mid
        sizes.append(lo)
    return sizes


def block_starts(sizes: list) -> list:
    out = [1]
    for n in sizes[:-1]:
        out.append(out[-1] + n)
    return out


def step1_values(c: float, s: float, m_max: int, n: float) -> list:
    vals = [c * n**s]
    while len(vals) < m_max:
        vals.append(vals[-1] + c * (n + vals[-1]) ** s)
    return vals


def rank_mod(rows: list, p: int) -> int:
    rows = [[x % p for x in r] for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][c], -1, p)
        rows[rank] = [x * inv % p for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def rank_q(rows: list) -> int:
    rows = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def stretch_placements(sizes: list, s: Fraction, c: int) -> list:
    """p_k = max(previous end + 1, least p with n_k <= c p^s), s = 1/d exactly."""
    assert s.numerator == 1
    d = s.denominator
    out = []
    end = 0
    for nk in sizes:
        lo = 1
        while c**d * lo < nk**d:  # n_k <= c p^(1/d)  <=>  n_k^d <= c^d p
            lo += 1
        p = max(end + 1, lo)
        out.append(p)
        end = p + nk - 1
    return out


def log2_sq(k: int) -> float:
    return math.log2(k + 1) ** 2
