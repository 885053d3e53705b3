"""numba kernels for residue-number-system polynomial arithmetic.

Arrays are int64 with shape (L, P, n): L ring elements, P RNS primes and n
coefficients. Every prime lies in (2**29, 2**30) so residue products stay
below 2**60 and reduce with Barrett constants mu = floor(2**60 / q) without
any division.
"""

import numpy as np
from numba import njit


def barrett_constants(q):
    return np.array([(1 << 60) // int(qi) for qi in q], dtype=np.int64)


@njit(inline="always")
def _mulmod(a, b, q, mu):
    x = a * b
    r = x - (((x >> 29) * mu) >> 31) * q
    if r >= q:
        r -= q
    if r >= q:
        r -= q
    return r


@njit(cache=True)
def ntt_forward(a, psi_rev, q, mu):
    L, P, n = a.shape
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            t = n
            m = 1
            while m < n:
                t //= 2
                for i in range(m):
                    j1 = 2 * i * t
                    s = psi_rev[pi, m + i]
                    for j in range(j1, j1 + t):
                        u = a[l, pi, j]
                        v = _mulmod(a[l, pi, j + t], s, qq, mm)
                        x = u + v
                        if x >= qq:
                            x -= qq
                        y = u - v
                        if y < 0:
                            y += qq
                        a[l, pi, j] = x
                        a[l, pi, j + t] = y
                m *= 2


@njit(cache=True)
def ntt_inverse(a, psi_inv_rev, n_inv, q, mu):
    L, P, n = a.shape
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            t = 1
            m = n
            while m > 1:
                j1 = 0
                h = m // 2
                for i in range(h):
                    s = psi_inv_rev[pi, h + i]
                    for j in range(j1, j1 + t):
                        u = a[l, pi, j]
                        v = a[l, pi, j + t]
                        x = u + v
                        if x >= qq:
                            x -= qq
                        y = u - v
                        if y < 0:
                            y += qq
                        a[l, pi, j] = x
                        a[l, pi, j + t] = _mulmod(y, s, qq, mm)
                    j1 += 2 * t
                t *= 2
                m = h
            ni = n_inv[pi]
            for j in range(n):
                a[l, pi, j] = _mulmod(a[l, pi, j], ni, qq, mm)


@njit(cache=True)
def add_mod(a, b, q):
    L, P, n = a.shape
    out = np.empty_like(a)
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            for j in range(n):
                x = a[l, pi, j] + b[l, pi, j]
                if x >= qq:
                    x -= qq
                out[l, pi, j] = x
    return out


@njit(cache=True)
def scale_mod(a, c, q, mu):
    """a times a per-prime constant c (shape (P,))."""
    L, P, n = a.shape
    out = np.empty_like(a)
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            cc = c[pi]
            for j in range(n):
                out[l, pi, j] = _mulmod(a[l, pi, j], cc, qq, mm)
    return out


@njit(cache=True)
def hadamard_mod(a, b, q, mu):
    """Entry-wise product; a length-1 leading axis on either side is broadcast."""
    La, P, n = a.shape
    Lb = b.shape[0]
    L = max(La, Lb)
    out = np.empty((L, P, n), dtype=np.int64)
    for l in range(L):
        la = 0 if La == 1 else l
        lb = 0 if Lb == 1 else l
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            for j in range(n):
                out[l, pi, j] = _mulmod(a[la, pi, j], b[lb, pi, j], qq, mm)
    return out


@njit(cache=True)
def small_to_rns(x, q):
    """Signed integers (L, n) with |x| < q to residues (L, P, n)."""
    L, n = x.shape
    P = q.shape[0]
    out = np.empty((L, P, n), dtype=np.int64)
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            for j in range(n):
                v = x[l, j]
                if v < 0:
                    v += qq
                out[l, pi, j] = v
    return out


@njit(cache=True)
def plain_residues(hi, lo, neg, t_mod, two32, q, mu):
    """Centered residues of v = hi * 2**32 + lo in [0, t); entries flagged neg are v - t."""
    L, n = hi.shape
    P = q.shape[0]
    out = np.empty((L, P, n), dtype=np.int64)
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            for j in range(n):
                h = _mulmod(hi[l, j], 1, qq, mm)
                r = _mulmod(h, two32[pi], qq, mm) + _mulmod(lo[l, j], 1, qq, mm)
                if r >= qq:
                    r -= qq
                if neg[l, j]:
                    r -= t_mod[pi]
                    if r < 0:
                        r += qq
                out[l, pi, j] = r
    return out


@njit(cache=True)
def compose_limbs(limbs, pows, offset, q, mu):
    """Residues of sum_k limbs[k] * 2**(30k) - offset; limbs (K, L, n) in [0, 2**30)."""
    K, L, n = limbs.shape
    P = q.shape[0]
    out = np.empty((L, P, n), dtype=np.int64)
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            start = qq - offset[pi]
            if start >= qq:
                start -= qq
            for j in range(n):
                out[l, pi, j] = start
            for k in range(K):
                w = pows[k, pi]
                for j in range(n):
                    v = limbs[k, l, j]
                    if v >= qq:
                        v -= qq
                    y = out[l, pi, j] + _mulmod(v, w, qq, mm)
                    if y >= qq:
                        y -= qq
                    out[l, pi, j] = y
    return out


@njit(cache=True)
def axpy_mod(out, x, c, q, mu):
    """out += c * x in place; c is per-prime (P,)."""
    L, P, n = out.shape
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            cc = c[pi]
            for j in range(n):
                y = _mulmod(x[l, pi, j], cc, qq, mm) + out[l, pi, j]
                if y >= qq:
                    y -= qq
                out[l, pi, j] = y


@njit(cache=True)
def axpy_new(a, x, c, q, mu):
    """a + c * x as a new array; c is per-prime (P,)."""
    L, P, n = a.shape
    out = np.empty_like(a)
    for l in range(L):
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            cc = c[pi]
            for j in range(n):
                y = _mulmod(x[l, pi, j], cc, qq, mm) + a[l, pi, j]
                if y >= qq:
                    y -= qq
                out[l, pi, j] = y
    return out


@njit(cache=True)
def fma_mod(out, a, b, c, q, mu):
    """out += c * (a o b) in place; c is per-prime (P,), length-1 a or b broadcast."""
    L, P, n = out.shape
    La = a.shape[0]
    Lb = b.shape[0]
    sign = 0
    if c[0] == 1:
        sign = 1
    elif c[0] == q[0] - 1:
        sign = -1
    if sign != 0:
        for pi in range(P):
            if c[pi] != (1 if sign == 1 else q[pi] - 1):
                sign = 0
    if sign != 0:
        for l in range(L):
            la = 0 if La == 1 else l
            lb = 0 if Lb == 1 else l
            for pi in range(P):
                qq = q[pi]
                mm = mu[pi]
                for j in range(n):
                    p = _mulmod(a[la, pi, j], b[lb, pi, j], qq, mm)
                    if sign == 1:
                        y = out[l, pi, j] + p
                        if y >= qq:
                            y -= qq
                    else:
                        y = out[l, pi, j] - p
                        if y < 0:
                            y += qq
                    out[l, pi, j] = y
        return
    for l in range(L):
        la = 0 if La == 1 else l
        lb = 0 if Lb == 1 else l
        for pi in range(P):
            qq = q[pi]
            mm = mu[pi]
            cc = c[pi]
            for j in range(n):
                y = _mulmod(_mulmod(a[la, pi, j], b[lb, pi, j], qq, mm), cc, qq, mm) + out[l, pi, j]
                if y >= qq:
                    y -= qq
                out[l, pi, j] = y


@njit(cache=True)
def sparse_matmul(rows, cols, vals, x, out_rows, q, mu):
    """out[r] = sum over nonzeros (r, c, v) of v * x[c]; vals is (nnz, P)."""
    _, P, n = x.shape
    out = np.zeros((out_rows, P, n), dtype=np.int64)
    for k in range(rows.shape[0]):
        r = rows[k]
        c = cols[k]
        for pi in range(P):
            val = vals[k, pi]
            qq = q[pi]
            mm = mu[pi]
            for j in range(n):
                y = out[r, pi, j] + _mulmod(val, x[c, pi, j], qq, mm)
                if y >= qq:
                    y -= qq
                out[r, pi, j] = y
    return out


@njit(cache=True)
def ring_matmul(mat, x, q, mu):
    """Pointwise (NTT-domain) product of a dense (R, C, P, n) matrix with x of shape (C, P, n)."""
    R, C, P, n = mat.shape
    out = np.zeros((R, P, n), dtype=np.int64)
    for r in range(R):
        for c in range(C):
            for pi in range(P):
                qq = q[pi]
                mm = mu[pi]
                for j in range(n):
                    y = out[r, pi, j] + _mulmod(mat[r, c, pi, j], x[c, pi, j], qq, mm)
                    if y >= qq:
                        y -= qq
                    out[r, pi, j] = y
    return out


@njit(cache=True)
def mixed_radix(x, q, mu, inv_table):
    """Garner digits d with value = d0 + d1*q0 + d2*q0*q1 + ...; inv_table[j, k] = q_j^-1 mod q_k."""
    L, P, n = x.shape
    d = np.empty_like(x)
    for l in range(L):
        for k in range(P):
            qk = q[k]
            mk = mu[k]
            for j in range(n):
                d[l, k, j] = x[l, k, j]
            for i in range(k):
                w = inv_table[i, k]
                for j in range(n):
                    tmp = d[l, k, j] - d[l, i, j]
                    if tmp < 0:
                        tmp += qk
                    if tmp < 0:
                        tmp += qk
                    d[l, k, j] = _mulmod(tmp, w, qk, mk)
    return d
