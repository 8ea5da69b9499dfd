"""Exact dense linear algebra over GF(p) and Q.

Small-prime fields go through the int64 elimination kernel; Q and large
primes use Python integers / Fractions row by row.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import _kernels
from .field import FieldConfig


def _rref_object(field: FieldConfig, A: np.ndarray):
    A = np.array(A, dtype=object, copy=True)
    m, n = A.shape
    mod = field.p if field.kind == "gfp" else None
    if mod:
        A = A % mod
    else:
        A = np.vectorize(Fraction, otypes=[object])(A) if A.size else A
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        col = A[r:, c]
        nz = [i for i, v in enumerate(col) if v != 0]
        if not nz:
            continue
        k = r + nz[0]
        if k != r:
            A[[r, k]] = A[[k, r]]
        inv = field.inv(A[r, c])
        A[r] = A[r] * inv
        if mod:
            A[r] = A[r] % mod
        for i in range(m):
            if i != r and A[i, c] != 0:
                A[i] = A[i] - A[i, c] * A[r]
                if mod:
                    A[i] = A[i] % mod
        pivots.append(c)
        r += 1
    return A, np.asarray(pivots, dtype=np.int64)


def rref(field: FieldConfig, A):
    """Reduced row echelon form and pivot columns."""
    A = np.asarray(A)
    if field.fast:
        return _kernels.rref_mod(A.astype(np.int64), field.p)
    return _rref_object(field, A)


def rank(field: FieldConfig, A) -> int:
    return int(rref(field, A)[1].size)


def nullspace(field: FieldConfig, A) -> np.ndarray:
    """Basis of ``{v : A v = 0}`` as rows, in RREF-derived canonical order."""
    A = np.asarray(A)
    m, n = A.shape
    R, piv = rref(field, A)
    free = [c for c in range(n) if c not in set(piv.tolist())]
    out = field.zeros((len(free), n))
    for t, fcol in enumerate(free):
        out[t, fcol] = field.one
        for r, pc in enumerate(piv.tolist()):
            out[t, pc] = field.neg(R[r, fcol])
    return out


def inverse(field: FieldConfig, A) -> np.ndarray:
    A = np.asarray(A)
    n = A.shape[0]
    aug = field.zeros((n, 2 * n))
    aug[:, :n] = A
    for i in range(n):
        aug[i, n + i] = field.one
    R, piv = rref(field, aug)
    if piv.size < n or piv[n - 1] != n - 1:
        raise ZeroDivisionError("matrix is singular")
    return R[:, n:]


def matmul(field: FieldConfig, A, B) -> np.ndarray:
    """Exact dense product. Splits the int64 product when it could overflow."""
    A = np.asarray(A)
    B = np.asarray(B)
    if field.fast:
        inner = A.shape[1] if A.ndim == 2 else A.shape[0]
        if inner * (field.p - 1) ** 2 < 2**62:
            return (A @ B) % field.p
        return (A.astype(object) @ B.astype(object) % field.p).astype(np.int64)
    out = A.astype(object) @ B.astype(object)
    return field.normalize(out)
