"""Exact plaintext arithmetic on (L, n) coefficient arrays over R_t.

These mirror the homomorphic operators and serve both the transparent
backend and the tests as an oracle.
"""

import numpy as np

from ..algebra import matvec_mod, negacyclic_schoolbook


def is_constant(arr):
    return not arr[:, 1:].any() if arr.shape[1] > 1 else True


def add(a, b, t):
    return (a + b) % t


def scalar_mul(c, a, t):
    return (a * c) % t


def sparse_mul(mat, a, t):
    rows, _ = mat.shape
    out = np.zeros((rows, a.shape[1]), dtype=object)
    if mat.nnz:
        prod = mat.vals[:, None] * a[mat.cols]
        starts = np.flatnonzero(np.r_[True, mat.rows[1:] != mat.rows[:-1]])
        out[mat.rows[starts]] = np.add.reduceat(prod, starts, axis=0)
    return out % t


def ring_mul(mat, a, t):
    rows, cols = mat.shape
    n = a.shape[1]
    const = [j for j in range(cols) if not any(a[j, 1:])]
    other = [j for j in range(cols) if any(a[j, 1:])]
    out = np.zeros((rows, n), dtype=object)
    if const:
        block = mat.coeffs[:, const, :].transpose(0, 2, 1).reshape(rows * n, len(const))
        out += matvec_mod(block, [a[j, 0] for j in const], t).reshape(rows, n)
    for j in other:
        for r in range(rows):
            out[r] += np.array(negacyclic_schoolbook([int(c) for c in mat.coeffs[r, j]], list(a[j]), t),
                               dtype=object)
    return out % t


def hadamard(a, b, t):
    if a.shape[0] == 1 and b.shape[0] != 1:
        a = np.repeat(a, b.shape[0], axis=0)
    elif b.shape[0] == 1 and a.shape[0] != 1:
        b = np.repeat(b, a.shape[0], axis=0)
    n = a.shape[1]
    if n == 0:
        return np.zeros_like(a)
    a_const = ~(a[:, 1:] != 0).any(axis=1)
    b_const = ~(b[:, 1:] != 0).any(axis=1) & ~a_const
    out = np.zeros_like(a)
    out[a_const] = b[a_const] * a[a_const, :1] % t
    out[b_const] = a[b_const] * b[b_const, :1] % t
    for i in np.flatnonzero(~(a_const | b_const)):
        out[i] = negacyclic_schoolbook(list(a[i]), list(b[i]), t)
    return out
