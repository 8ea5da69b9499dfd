"""Hot integer kernels: band profiles, sparse products and elimination mod p.

Every kernel exists twice: a loop version compiled by numba and a
vectorized numpy version. ``backend=None`` picks numba when available;
tests and the benchmark pass ``backend`` explicitly to compare the two.

All indices here are 0-based. Modular kernels assume ``p < 2**31`` so a
product of two residues fits in int64.
"""

from __future__ import annotations

import numpy as np

from ._accel import HAVE_NUMBA, njit

MAX_KERNEL_PRIME = 2**31


def _use_numba(backend):
    if backend is None:
        return HAVE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but disabled")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------- profiles


@njit
def _band_profile_nb(rows, cols, n):
    g = np.zeros(n, dtype=np.int64)
    for t in range(rows.shape[0]):
        i = rows[t]
        j = cols[t]
        if j > i:
            if j - i > g[i]:
                g[i] = j - i
        elif i > j:
            if i - j > g[j]:
                g[j] = i - j
    return g


def _band_profile_np(rows, cols, n):
    g = np.zeros(n, dtype=np.int64)
    d = cols - rows
    up = d > 0
    np.maximum.at(g, rows[up], d[up])
    lo = d < 0
    np.maximum.at(g, cols[lo], -d[lo])
    return g


def band_profile(rows, cols, n, backend=None):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    if _use_numba(backend):
        return _band_profile_nb(rows, cols, n)
    return _band_profile_np(rows, cols, n)


def row_reach(indptr, indices):
    """Largest rightward displacement in each CSR row (0 for empty rows).

    Column indices must be sorted within rows.
    """
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.int64)
    nonempty = indptr[1:] > indptr[:-1]
    last = indices[indptr[1:][nonempty] - 1]
    rows = np.nonzero(nonempty)[0]
    out[rows] = np.maximum(last - rows, 0)
    return out


# ---------------------------------------------------------------- products


@njit
def _spgemm_nb(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, ncols, p):
    nrows = a_ptr.shape[0] - 1
    mark = np.full(ncols, -1, dtype=np.int64)
    # symbolic pass bounds the output size
    cap = 0
    for i in range(nrows):
        cnt = 0
        for ta in range(a_ptr[i], a_ptr[i + 1]):
            l = a_idx[ta]
            for tb in range(b_ptr[l], b_ptr[l + 1]):
                j = b_idx[tb]
                if mark[j] != i:
                    mark[j] = i
                    cnt += 1
        cap += cnt
    out_ptr = np.zeros(nrows + 1, dtype=np.int64)
    out_idx = np.empty(cap, dtype=np.int64)
    out_val = np.empty(cap, dtype=np.int64)
    acc = np.zeros(ncols, dtype=np.int64)
    mark[:] = -1
    cols = np.empty(ncols, dtype=np.int64)
    pos = 0
    for i in range(nrows):
        cnt = 0
        for ta in range(a_ptr[i], a_ptr[i + 1]):
            l = a_idx[ta]
            av = a_val[ta]
            for tb in range(b_ptr[l], b_ptr[l + 1]):
                j = b_idx[tb]
                if mark[j] != i:
                    mark[j] = i
                    acc[j] = 0
                    cols[cnt] = j
                    cnt += 1
                acc[j] = (acc[j] + av * b_val[tb]) % p
        row_cols = np.sort(cols[:cnt])
        for c in row_cols:
            v = acc[c]
            if v != 0:
                out_idx[pos] = c
                out_val[pos] = v
                pos += 1
        out_ptr[i + 1] = pos
    return out_ptr, out_idx[:pos].copy(), out_val[:pos].copy()


def _spgemm_np(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, ncols, p, chunk=1 << 22):
    nrows = a_ptr.shape[0] - 1
    a_rows = np.repeat(np.arange(nrows, dtype=np.int64), np.diff(a_ptr))
    b_len = np.diff(b_ptr)
    fan = b_len[a_idx]
    keys_all = []
    vals_all = []
    # split the nonzeros of a so the expanded triples stay bounded in memory
    csum = np.cumsum(fan)
    start = 0
    total = a_idx.shape[0]
    while start < total:
        base = csum[start - 1] if start else 0
        stop = int(np.searchsorted(csum, base + chunk, side="right"))
        stop = max(stop, start + 1)
        f = fan[start:stop]
        m = int(f.sum())
        if m:
            src = np.repeat(np.arange(start, stop), f)
            offs = np.arange(m) - np.repeat(np.cumsum(f) - f, f)
            tb = b_ptr[a_idx[src]] + offs
            prod = (a_val[src] * b_val[tb]) % p
            key = a_rows[src] * ncols + b_idx[tb]
            order = np.argsort(key, kind="stable")
            key = key[order]
            prod = prod[order]
            heads = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
            keys_all.append(key[heads])
            # residues < 2**31 and at most ncols terms per key: no overflow
            vals_all.append(np.add.reduceat(prod, heads) % p)
        start = stop
    if keys_all:
        key = np.concatenate(keys_all)
        val = np.concatenate(vals_all)
        if len(keys_all) > 1:
            order = np.argsort(key, kind="stable")
            key = key[order]
            val = val[order]
            heads = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
            key = key[heads]
            val = np.add.reduceat(val, heads) % p
    else:
        key = np.zeros(0, dtype=np.int64)
        val = np.zeros(0, dtype=np.int64)
    keep = val != 0
    key = key[keep]
    val = val[keep]
    rows = key // ncols
    ptr = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(ptr, rows + 1, 1)
    return np.cumsum(ptr), key % ncols, val.astype(np.int64)


def spgemm_mod(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, ncols, p, backend=None):
    """CSR x CSR product with entries reduced mod ``p``; zeros are dropped."""
    if p >= MAX_KERNEL_PRIME:
        raise ValueError("kernel products need p < 2**31")
    args = [np.ascontiguousarray(x, dtype=np.int64) for x in (a_ptr, a_idx, a_val, b_ptr, b_idx, b_val)]
    if _use_numba(backend):
        return _spgemm_nb(*args, np.int64(ncols), np.int64(p))
    return _spgemm_np(*args, int(ncols), int(p))


# ---------------------------------------------------------------- elimination


@njit
def _inv_mod_nb(a, p):
    # extended Euclid; a is a nonzero residue
    t0, t1 = 0, 1
    r0, r1 = p, a
    while r1 != 0:
        q = r0 // r1
        t0, t1 = t1, t0 - q * t1
        r0, r1 = r1, r0 - q * r1
    return t0 % p


@njit
def _rref_nb(A, p):
    m, n = A.shape
    piv = np.empty(min(m, n), dtype=np.int64)
    r = 0
    for c in range(n):
        if r == m:
            break
        found = -1
        for i in range(r, m):
            if A[i, c] != 0:
                found = i
                break
        if found < 0:
            continue
        if found != r:
            for j in range(n):
                tmp = A[r, j]
                A[r, j] = A[found, j]
                A[found, j] = tmp
        inv = _inv_mod_nb(A[r, c], p)
        for j in range(c, n):
            A[r, j] = (A[r, j] * inv) % p
        for i in range(m):
            if i != r:
                f = A[i, c]
                if f != 0:
                    for j in range(c, n):
                        A[i, j] = (A[i, j] - f * A[r, j]) % p
        piv[r] = c
        r += 1
    return A, piv[:r].copy()


def _rref_np(A, p):
    m, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        found = r + int(nz[0])
        if found != r:
            A[[r, found]] = A[[found, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        f = A[:, c].copy()
        f[r] = 0
        rows = np.flatnonzero(f)
        if rows.size:
            A[rows] = (A[rows] - np.outer(f[rows], A[r]) % p) % p
        pivots.append(c)
        r += 1
    return A, np.asarray(pivots, dtype=np.int64)


def rref_mod(A, p, backend=None):
    """Reduced row echelon form of an int64 matrix over GF(p).

    Returns ``(R, pivot_columns)``; ``A`` is not modified.
    """
    if p >= MAX_KERNEL_PRIME:
        raise ValueError("kernel elimination needs p < 2**31")
    A = np.array(A, dtype=np.int64, copy=True) % p
    if A.size == 0:
        return A, np.zeros(0, dtype=np.int64)
    if _use_numba(backend):
        return _rref_nb(A, np.int64(p))
    return _rref_np(A, int(p))
