"""Simultaneous block tridiagonalization of k window matrices.

The flag starts at ``V_1 = span(e_1)`` and grows by
``V_{m+1} = V_m + sum x_i V_m + sum x_i^T V_m``. Each new block is made
orthogonal to the previous ones under the standard bilinear form, so that
``<v, x w> = <x^T v, w>`` kills every entry more than one block above the
diagonal. New blocks are stored as reduced echelon rows, which keeps the
basis deterministic and ``P`` exactly invertible.

Also here: structure constants of small algebras and their left-regular
representation, the usual source of inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import linalg
from .core import LazyMatrix, WindowMatrix, band_profile, dump_matrix
from .curves import PowerCurve, TableCurve
from .errors import ConfigMismatch, NotColumnFinite, UsageError, WindowExhausted
from .field import FieldConfig
from .growth import minimal_constant

# ====================================================================== algebras


@dataclass
class StructureConstants:
    """Multiplication table ``a_i a_j = sum_l c[(i, j)][l] a_l`` (1-based).

    Either ``d`` is finite and ``table`` maps pairs to sparse dicts, or
    ``d is None`` and ``rule(i, j)`` returns the dict for any pair.
    """

    field: FieldConfig
    d: Optional[int]
    identity: int
    table: Dict[Tuple[int, int], Dict[int, object]] = dc_field(default_factory=dict)
    rule: Optional[Callable[[int, int], Dict[int, object]]] = None

    def product(self, i: int, j: int) -> Dict[int, object]:
        if self.rule is not None:
            raw = self.rule(i, j)
        else:
            raw = self.table.get((i, j), {})
        out = {}
        for l, c in raw.items():
            v = self.field.element(c)
            if v != 0:
                out[int(l)] = v
        return out

    def multiply(self, u: Dict[int, object], v: Dict[int, object]) -> Dict[int, object]:
        f = self.field
        out: Dict[int, object] = {}
        for i, a in u.items():
            for j, b in v.items():
                for l, c in self.product(i, j).items():
                    out[l] = f.add(out.get(l, f.zero), f.mul(f.mul(a, b), c))
        return {l: c for l, c in out.items() if c != 0}

    def check(self, samples: int = 64, seed: int = 0, span: int = 8) -> bool:
        """Associativity and two-sided unit on sampled basis triples."""
        rng = np.random.default_rng(seed)
        top = self.d if self.d is not None else span
        e = self.identity
        for _ in range(samples):
            i, j, l = (int(x) for x in rng.integers(1, top + 1, size=3))
            one_i = {i: self.field.one}
            if self.multiply({e: self.field.one}, one_i) != one_i or self.multiply(one_i, {e: self.field.one}) != one_i:
                return False
            left = self.multiply(self.multiply(one_i, {j: self.field.one}), {l: self.field.one})
            right = self.multiply(one_i, self.multiply({j: self.field.one}, {l: self.field.one}))
            if left != right:
                return False
        return True


def _row_growth(sc: StructureConstants, g: int, n: int) -> np.ndarray:
    counts = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        for l in sc.product(g, j):
            if l <= n:
                counts[l - 1] += 1
    return counts


def regular_representation(
    sc: StructureConstants,
    generators: Optional[Sequence[int]] = None,
    probe: int = 64,
) -> List[LazyMatrix]:
    """Left multiplication by each generator, as lazy matrices.

    Column ``j`` of the matrix for ``g`` holds the coordinates of ``g a_j``.
    A finite ``d x d`` action is repeated down the diagonal so the image stays
    unital in the infinite matrix ring. For countable bases the rows are
    probed at windows ``probe`` and ``2 * probe``; a row that keeps gaining
    entries raises :class:`NotColumnFinite`, and the declared curve is the
    measured hull of the larger probe.
    """
    f = sc.field
    gens = list(generators) if generators is not None else ([sc.identity] if sc.d is None else list(range(1, sc.d + 1)))
    out = []
    for g in gens:
        if sc.d is not None:
            d = sc.d
            L = f.zeros((d, d))
            for j in range(1, d + 1):
                for l, c in sc.product(g, j).items():
                    L[l - 1, j - 1] = c
            out.append(_amplified(f, L, name=f"L[{g}]"))
        else:
            out.append(_countable_action(sc, g, probe))
    return out


def _amplified(f: FieldConfig, L: np.ndarray, name: str) -> LazyMatrix:
    d = L.shape[0]
    r0, c0 = np.nonzero(L != 0)
    v0 = L[r0, c0]

    def bulk(n):
        reps = (n + d - 1) // d
        off = (np.arange(reps) * d)[:, None]
        rows = (off + r0[None, :] + 1).ravel()
        cols = (off + c0[None, :] + 1).ravel()
        vals = np.tile(v0, reps)
        keep = (rows <= n) & (cols <= n)
        return rows[keep], cols[keep], vals[keep]

    def rule(i, j):
        if (i - 1) // d != (j - 1) // d:
            return 0
        return L[(i - 1) % d, (j - 1) % d]

    return LazyMatrix(f, PowerCurve(max(d - 1, 0), 0), rule=rule, bulk=bulk, name=name)


def _countable_action(sc: StructureConstants, g: int, probe: int) -> LazyMatrix:
    f = sc.field
    small = _row_growth(sc, g, probe)
    big = _row_growth(sc, g, 2 * probe)
    grew = np.flatnonzero(big[: probe // 2] > small[: probe // 2])
    if grew.size:
        raise NotColumnFinite(f"row {int(grew[0]) + 1} of left multiplication by a_{g} keeps gaining entries")

    def bulk(n):
        rows, cols, vals = [], [], []
        for j in range(1, n + 1):
            for l, c in sc.product(g, j).items():
                if l <= n:
                    rows.append(l)
                    cols.append(j)
                    vals.append(c)
        return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64), f.array(vals)

    def rule(i, j):
        return sc.product(g, j).get(i, 0)

    from .core import make_window

    probe_m = LazyMatrix(f, PowerCurve(2 * probe, 0), bulk=bulk)
    g_meas = band_profile(make_window(probe_m, 2 * probe)).g
    curve = TableCurve.from_profile(g_meas[:probe])
    return LazyMatrix(f, curve, rule=rule, bulk=bulk, name=f"L[{g}]")


# ====================================================================== flag


@dataclass
class FlagReport:
    block_dims: List[int]
    cumulative: List[int]
    P: WindowMatrix
    P_inv: WindowMatrix
    strict: bool
    valid_to: int
    k: int
    restarts: List[Tuple[int, int]] = dc_field(default_factory=list)
    degenerate: bool = False
    violations: List[dict] = dc_field(default_factory=list)
    similarity_ok: bool = True
    c: Optional[float] = None

    def within_geometric_bound(self) -> bool:
        """``dims(m) <= (2k+1) * cum(m-1)`` at every stage."""
        q = 2 * self.k + 1
        for m in range(1, len(self.block_dims)):
            if self.block_dims[m] > q * self.cumulative[m - 1]:
                return False
        return True

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "block_dims": self.block_dims,
            "cumulative": self.cumulative,
            "strict": self.strict,
            "valid_to": self.valid_to,
            "geometric_bound_ok": self.within_geometric_bound(),
            "similarity_ok": self.similarity_ok,
            "restarts": [{"stage": s, "basis_vector": j} for s, j in self.restarts],
            "degenerate_form": self.degenerate,
            "hessenberg_violations": self.violations,
            "c": self.c,
        }

    def dump(self, out_dir) -> None:
        import pathlib

        out = pathlib.Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "flag.json").write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))
        dump_matrix(self.P, out / "P.json")
        dump_matrix(self.P_inv, out / "P_inv.json")


def _reach_bound(xs: Sequence[WindowMatrix], n: int) -> np.ndarray:
    """Nondecreasing displacement bound covering every x_i in both directions."""
    out = np.zeros(n, dtype=np.int64)
    for x in xs:
        g = band_profile(x).g
        if x.curve is not None:
            g = np.maximum(g, x.curve.reach(n))
        out = np.maximum(out, g)
    return np.maximum.accumulate(out)


def _support(rows: np.ndarray) -> np.ndarray:
    """1-based index of the last nonzero of each row (0 for a zero row)."""
    nz = rows != 0
    last = nz.shape[1] - np.argmax(nz[:, ::-1], axis=1)
    return np.where(nz.any(axis=1), last, 0)


class _Flag:
    def __init__(self, field: FieldConfig, n: int):
        self.f = field
        self.n = n
        self.blocks: List[np.ndarray] = []
        self.gram_inv: List[Optional[np.ndarray]] = []
        self.echelon = field.zeros((0, n))
        self.pivots = np.zeros(0, dtype=np.int64)
        self.degenerate = False

    @property
    def dim(self):
        return int(self.pivots.size)

    def _reduce(self, C: np.ndarray) -> np.ndarray:
        if not self.pivots.size:
            return C
        f = self.f
        coef = C[:, self.pivots]
        return f.sub(C, linalg.matmul(f, coef, self.echelon))

    def _project_out(self, C: np.ndarray, which: Sequence[int]) -> np.ndarray:
        f = self.f
        for l in which:
            W, Gi = self.blocks[l], self.gram_inv[l]
            coef = linalg.matmul(f, linalg.matmul(f, C, W.T), Gi)
            C = f.sub(C, linalg.matmul(f, coef, W))
        return C

    def add_block(self, C: np.ndarray, near: Sequence[int]) -> int:
        """Turn candidate rows into a new block; returns its dimension."""
        f = self.f
        if C.shape[0] == 0:
            return 0
        if self.degenerate:
            C = self._reduce(C)
        else:
            C = self._project_out(C, [l for l in near if 0 <= l < len(self.blocks)])
        R, piv = linalg.rref(f, C)
        W = R[: piv.size]
        if W.shape[0] == 0:
            return 0
        if not self.degenerate:
            # cheap guard: orthogonal remainders must be independent of the flag
            chk = self._reduce(W)
            if linalg.rank(f, chk) < W.shape[0]:
                self.degenerate = True
                W = chk
                R, piv = linalg.rref(f, W)
                W = R[: piv.size]
                if W.shape[0] == 0:
                    return 0
        gi = None
        if not self.degenerate:
            try:
                gi = linalg.inverse(f, linalg.matmul(f, W, W.T))
            except ZeroDivisionError:
                self.degenerate = True
        self.blocks.append(W)
        self.gram_inv.append(gi)
        E, p = linalg.rref(f, np.concatenate([self.echelon, W]) if self.echelon.size else W)
        self.echelon = E[: p.size]
        self.pivots = p
        return W.shape[0]

    def first_missing(self, limit: int) -> Optional[int]:
        """Smallest j <= limit with e_j outside the flag (1-based)."""
        row_of = {int(p): r for r, p in enumerate(self.pivots)}
        for j in range(1, limit + 1):
            r = row_of.get(j - 1)
            # e_j lies in the span only if its pivot row is e_j itself
            if r is None or np.count_nonzero(self.echelon[r]) != 1:
                return j
        return None

    def restart_vector(self, j: int) -> np.ndarray:
        f = self.f
        e = f.zeros((1, self.n))
        e[0, j - 1] = f.one
        if self.degenerate:
            return self._reduce(e)
        return self._project_out(e, range(len(self.blocks)))


def block_tridiagonalize(
    xs: Sequence[WindowMatrix],
    n: Optional[int] = None,
    max_stages: Optional[int] = None,
) -> Tuple[FlagReport, List[WindowMatrix]]:
    """Flag, change of basis and transformed windows for ``xs``.

    Stages whose images would leave the exact part of the window are not
    formed; the remaining coordinates are completed by standard basis
    vectors so that ``P`` is square and invertible. When the flag stalls
    before covering the exact region, the smallest missing ``e_j`` (made
    orthogonal to the flag) opens the next stage.

    Raises:
        WindowExhausted: not even the second stage fits in the window.
    """
    if not xs:
        raise UsageError("need at least one matrix")
    f = xs[0].field
    N = xs[0].n
    for x in xs:
        f.check_same(x.field)
        if x.n != N:
            raise ConfigMismatch("all matrices must share one window")
    if n is not None and n != N:
        raise ConfigMismatch(f"window {n} does not match the matrices ({N})")
    k = len(xs)
    exact = min(x.valid_to for x in xs)
    reach = _reach_bound(xs, N)
    dense = [x.to_dense() for x in xs]
    ops = []
    for X in dense:
        ops.append(X)
        ops.append(X.T.copy())

    flag = _Flag(f, N)
    first = f.zeros((1, N))
    first[0, 0] = f.one
    flag.add_block(first, [])
    restarts: List[Tuple[int, int]] = []
    processed = 0  # blocks whose images have been taken
    while max_stages is None or len(flag.blocks) < max_stages:
        W = flag.blocks[processed]
        sup = int(_support(W).max())
        if sup + reach[sup - 1] > exact:
            break
        cands = np.concatenate([linalg.matmul(f, W, X.T) for X in ops])  # rows: (X w)^T
        # order: for each w, x_1 w, x_1^T w, x_2 w, ...
        cands = cands.reshape(len(ops), W.shape[0], N).transpose(1, 0, 2).reshape(-1, N)
        got = flag.add_block(cands, [processed - 1, processed])
        processed += 1
        if got == 0:
            j = flag.first_missing(exact)
            if j is None:
                break
            restarts.append((len(flag.blocks) + 1, j))
            flag.add_block(flag.restart_vector(j), [])
        if flag.dim >= exact:
            break
    if processed == 0:
        raise WindowExhausted("window too small to form the second stage of the flag")

    dims = [b.shape[0] for b in flag.blocks]
    cum = np.cumsum(dims).tolist()
    valid = int(cum[processed - 1])

    # complete to a basis of the whole window with standard vectors
    basis = np.concatenate(flag.blocks)
    piv = set(flag.pivots.tolist())
    extra = [j for j in range(N) if j not in piv]
    comp = f.zeros((len(extra), N))
    for r, j in enumerate(extra):
        comp[r, j] = f.one
    Pd = np.concatenate([basis, comp]).T.copy()
    Pinv = linalg.inverse(f, Pd)
    P = WindowMatrix.from_dense(f, Pd, valid_to=valid)
    P_inv = WindowMatrix.from_dense(f, Pinv, valid_to=valid)

    xts = []
    sim_ok = True
    for X in dense:
        XP = linalg.matmul(f, X, Pd)
        Xt = linalg.matmul(f, Pinv, XP)
        sim_ok &= bool(np.all(linalg.matmul(f, Pd, Xt)[:, :valid] == XP[:, :valid]))
        xts.append(WindowMatrix.from_dense(f, Xt, valid_to=valid))

    report = FlagReport(
        block_dims=dims,
        cumulative=cum,
        P=P,
        P_inv=P_inv,
        strict=True,
        valid_to=valid,
        k=k,
        restarts=restarts,
        degenerate=flag.degenerate,
        similarity_ok=sim_ok,
    )
    viol = []
    for i, xt in enumerate(xts):
        bad = _violations(xt, report.block_dims, valid)
        for rb, cb in bad:
            viol.append({"matrix": i + 1, "row_block": rb, "col_block": cb})
    report.violations = viol
    report.strict = not viol
    return report, xts


def _block_index(dims: Sequence[int], n: int) -> np.ndarray:
    edges = np.cumsum(dims)
    return np.searchsorted(edges, np.arange(1, n + 1), side="left") + 1


def _violations(xt: WindowMatrix, dims: Sequence[int], limit: int) -> List[Tuple[int, int]]:
    m = min(limit, int(np.sum(dims)))
    rows, cols, _ = xt.coo()
    keep = (rows <= m) & (cols <= m)
    rows, cols = rows[keep], cols[keep]
    blk = _block_index(dims, max(m, 1))
    rb, cb = blk[rows - 1], blk[cols - 1]
    bad = np.abs(rb - cb) > 1
    return sorted({(int(a), int(b)) for a, b in zip(rb[bad], cb[bad])})


def verify_block_tridiagonal(xt: WindowMatrix, dims: Sequence[int]) -> bool:
    """True iff every nonzero in the region covered by ``dims`` sits in a
    diagonal or adjacent off-diagonal block."""
    return not _violations(xt, dims, min(xt.valid_to, xt.n))


def linear_growth_certificate(report: FlagReport, xts: Sequence[WindowMatrix]) -> Tuple[float, bool]:
    """Least ``c`` with ``profile(n) <= c * n`` on the valid region of every
    transformed matrix; passes when ``c <= (2k+1)**2``."""
    c = 0.0
    for xt in xts:
        if xt.valid_to >= 1:
            c = max(c, minimal_constant(xt, 1.0))
    report.c = c
    return c, bool(c <= (2 * report.k + 1) ** 2)
