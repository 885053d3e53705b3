"""RLWE-TOY backend: BGV-style multi-key encryption over R_q in RNS/NTT form.

A ciphertext for a vector of L plaintexts is a map from key monomials to
(L, P, n) residue arrays in the NTT domain:

    ()      constant part
    (a,)    multiplies party a's secret s_a
    (a, b)  multiplies s_a * s_b (only after one ciphertext product)

Decryption of the whole map gives m + t*e (mod q). Multi-key growth comes
from taking the union of monomials. Products of two different parties' keys
must be linearized by one of the two parties before partial decryption.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..algebra import matvec_mod
from ..encoding import encode_int, frame, xof
from ..errors import InvalidParams, LinearizationRequired, NoiseBudgetExceeded
from .base import Backend, MkheKeyPair, MultiKeyCiphertext, np_rng, to_plain_array
from .kernels import (
    add_mod,
    barrett_constants,
    axpy_mod,
    axpy_new,
    compose_limbs,
    fma_mod,
    hadamard_mod,
    mixed_radix,
    ntt_forward,
    ntt_inverse,
    plain_residues,
    ring_matmul,
    scale_mod,
    small_to_rns,
    sparse_matmul,
)

NAME = "rlwe"
ERROR_ETA = 4  # centered binomial parameter for fresh errors
SMUDGE_STAT_BITS = 16
LIMB_BITS = 30


def _root(order, mod):
    exp = (mod - 1) // order
    for g in range(2, 10_000):
        r = pow(g, exp, mod)
        if pow(r, order // 2, mod) == mod - 1:
            return r
    raise InvalidParams("no root of unity")


def _bitrev(k, bits):
    return int(format(k, f"0{bits}b")[::-1], 2) if bits else 0


def _log2_sum(*bits):
    finite = [b for b in bits if b > -math.inf]
    if not finite:
        return -math.inf
    top = max(finite)
    return top + math.log2(sum(2.0 ** (b - top) for b in finite))


class RnsContext:
    def __init__(self, algebra):
        self.n = algebra.n
        self.t = algebra.t
        self.primes = [int(p) for p in algebra.q_primes]
        if not all(1 << 29 < qi < 1 << 30 for qi in self.primes):
            raise InvalidParams("RNS primes must lie between 2**29 and 2**30")
        self.P = len(self.primes)
        self.Q = algebra.q
        self.q = np.array(self.primes, dtype=np.int64)
        self.q3 = self.q[None, :, None]
        self.mu = barrett_constants(self.primes)
        self.two32 = np.array([(1 << 32) % qi for qi in self.primes], dtype=np.int64)
        self.log2_half_q = math.log2(self.Q) - 1
        bits = self.n.bit_length() - 1
        psi_rev = np.zeros((self.P, self.n), dtype=np.int64)
        psi_inv_rev = np.zeros((self.P, self.n), dtype=np.int64)
        for i, qi in enumerate(self.primes):
            psi = _root(2 * self.n, qi)
            psi_inv = pow(psi, -1, qi)
            for k in range(self.n):
                psi_rev[i, k] = pow(psi, _bitrev(k, bits), qi)
                psi_inv_rev[i, k] = pow(psi_inv, _bitrev(k, bits), qi)
        self.psi_rev, self.psi_inv_rev = psi_rev, psi_inv_rev
        self.n_inv = np.array([pow(self.n, -1, qi) for qi in self.primes], dtype=np.int64)
        self.t_mod = self.residues(self.t)
        self.inv_table = np.zeros((self.P, self.P), dtype=np.int64)
        for j, qj in enumerate(self.primes):
            for k, qk in enumerate(self.primes):
                if j != k:
                    self.inv_table[j, k] = pow(qj, -1, qk)
        radix = 1
        self.radix_mod_t = []
        for qi in self.primes:
            self.radix_mod_t.append(radix % self.t)
            radix *= qi
        half = (self.Q - 1) // 2
        self.half_digits = []
        for qi in self.primes:
            self.half_digits.append(half % qi)
            half //= qi
        self.Q_mod_t = self.Q % self.t
        self.limb_pows = np.array([[pow(2, LIMB_BITS * k, qi) for qi in self.primes] for k in range(64)],
                                  dtype=np.int64)

    def residues(self, c):
        c = int(c)
        return np.array([c % qi for qi in self.primes], dtype=np.int64)

    def small_to_rns(self, x):
        """Signed int64 array (..., n) with entries below every prime -> (..., P, n) residues."""
        x = np.ascontiguousarray(x, dtype=np.int64)
        out = small_to_rns(x.reshape(-1, self.n), self.q)
        return out.reshape(x.shape[:-1] + (self.P, self.n))

    def plain_to_rns(self, values):
        """Coefficients mod t (object or uint64, shape (L, n)) -> centered lift in RNS."""
        u = np.asarray(values, dtype=np.uint64)
        flat = u.reshape(-1, self.n)
        hi = (flat >> np.uint64(32)).astype(np.int64)
        lo = (flat & np.uint64(0xFFFFFFFF)).astype(np.int64)
        neg = flat > np.uint64(self.t // 2)
        res = plain_residues(hi, lo, neg, self.t_mod, self.two32, self.q, self.mu)
        return res.reshape(u.shape[:-1] + (self.P, self.n))

    def ntt(self, x):
        y = np.ascontiguousarray(x, dtype=np.int64).copy()
        flat = y.reshape(-1, self.P, self.n)
        ntt_forward(flat, self.psi_rev, self.q, self.mu)
        return y

    def intt(self, x):
        y = np.ascontiguousarray(x, dtype=np.int64).copy()
        flat = y.reshape(-1, self.P, self.n)
        ntt_inverse(flat, self.psi_inv_rev, self.n_inv, self.q, self.mu)
        return y

    def add(self, a, b):
        return add_mod(a, b, self.q)

    def mul(self, a, b):
        return hadamard_mod(a, b, self.q, self.mu)

    def scale(self, a, c):
        return scale_mod(a, c, self.q, self.mu)

    def uniform_signed(self, rng, shape, bits):
        """RNS residues of uniform integers in [-2**(B-1), 2**(B-1)) with B >= bits + 1."""
        K = max(1, math.ceil((bits + 1) / LIMB_BITS))
        size = K * math.prod(shape)
        limbs = (np.frombuffer(rng.bytes(4 * size), dtype="<u4") >> (32 - LIMB_BITS)).astype(np.int64)
        offset = self.residues(1 << (LIMB_BITS * K - 1))
        acc = compose_limbs(limbs.reshape(K, -1, self.n), self.limb_pows[:K], offset, self.q, self.mu)
        return acc.reshape(tuple(shape[:-1]) + (self.P, self.n)), LIMB_BITS * K - 1

    def to_mod_t(self, coeff_rns):
        """Centered CRT reconstruction reduced mod t; input (L, P, n) in coefficient domain."""
        L = coeff_rns.shape[0]
        d = mixed_radix(np.ascontiguousarray(coeff_rns), self.q, self.mu, self.inv_table)
        digits = d.transpose(0, 2, 1).reshape(L * self.n, self.P)
        v = matvec_mod(digits.astype(np.uint64), self.radix_mod_t, self.t)
        gt = np.zeros(L * self.n, dtype=bool)
        decided = np.zeros(L * self.n, dtype=bool)
        for k in range(self.P - 1, -1, -1):
            col = digits[:, k]
            h = self.half_digits[k]
            gt |= ~decided & (col > h)
            decided |= col != h
        v = np.where(gt, (v - self.Q_mod_t) % self.t, v)
        return v.reshape(L, self.n)


@dataclass(frozen=True, eq=False)
class RlwePayload:
    comps: dict  # monomial tuple -> (L, P, n) int64, NTT domain
    noise_bits: float

    def to_bytes(self, backend, key_set, level, plain_len):
        parts = [backend.encode(), *(k.encode() for k in key_set), encode_int(level, 1),
                 encode_int(plain_len, 4), repr(round(self.noise_bits, 6)).encode()]
        for mono in sorted(self.comps):
            parts.append("*".join(mono).encode())
            parts.append(np.ascontiguousarray(self.comps[mono], dtype="<i8").tobytes())
        return frame(*parts)

    @property
    def monomials(self):
        return sorted(self.comps)


@dataclass(frozen=True, eq=False)
class RlweSecret:
    party_id: str
    s: np.ndarray  # ternary, (n,)
    seed: bytes


@dataclass(frozen=True, eq=False)
class RlwePublic:
    party_id: str
    a: np.ndarray  # (P, n) NTT domain
    b: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, RlwePublic) and self.party_id == other.party_id
                and np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b))

    def __hash__(self):
        return hash((self.party_id, self.b.tobytes()))


# popcount(low nibble) - popcount(high nibble): one byte per centered-binomial sample with eta = 4
_CBD4 = np.array([bin(i & 15).count("1") - bin(i >> 4).count("1") for i in range(256)], dtype=np.int64)


def _cbd(rng, shape, eta=ERROR_ETA):
    if eta == 4:
        return _CBD4[rng.integers(0, 256, size=shape, dtype=np.uint8)]
    return (rng.integers(0, 2, size=shape + (eta,)).sum(-1) - rng.integers(0, 2, size=shape + (eta,)).sum(-1)).astype(np.int64)


def _ternary(rng, shape):
    return rng.integers(-1, 2, size=shape, dtype=np.int64)


class RlweBackend(Backend):
    name = NAME

    def __init__(self, algebra):
        super().__init__(algebra)
        self.ctx = RnsContext(algebra)
        self._matrix_cache = {}
        self._secret_cache = {}
        n, t = self.n, self.t
        self.fresh_noise_bits = math.log2(t / 2 + t * (ERROR_ETA + 2 * n * ERROR_ETA))
        self.linearize_noise_bits = math.log2(t * n * ERROR_ETA)

    # ---------------------------------------------------------------- keys
    def _expand_key(self, seed):
        rng = np.random.default_rng(int.from_bytes(xof("zkams/mkhe/rlwe/key", seed, length=32), "little"))
        a = np.stack([rng.integers(0, qi, size=self.n, dtype=np.int64) for qi in self.ctx.primes])
        e = _cbd(rng, (self.n,))
        return a, e

    def keygen(self, party_id, rng=None):
        g = np_rng(rng)
        s = _ternary(g, (self.n,))
        seed = g.bytes(32)
        sk = RlweSecret(party_id, s, seed)
        return MkheKeyPair(self.public_key_from_secret(sk), sk, party_id)

    def _secret_ntt(self, sk):
        key = id(sk)
        hit = self._secret_cache.get(key)
        if hit is None or hit[0] is not sk:
            s_ntt = self.ctx.ntt(self.ctx.small_to_rns(sk.s[None]))[0]
            hit = (sk, s_ntt, self.ctx.mul(s_ntt[None], s_ntt[None])[0])
            self._secret_cache[key] = hit
        return hit[1], hit[2]

    def public_key_from_secret(self, sk):
        a, e = self._expand_key(sk.seed)
        s_ntt, _ = self._secret_ntt(sk)
        q = self.ctx.q[:, None]
        te = self.ctx.ntt(self.ctx.small_to_rns(e[None]) * self.ctx.t_mod[:, None] % q)[0]
        b = (-(a * s_ntt % q) + te) % q
        return RlwePublic(sk.party_id, a, b)

    # ---------------------------------------------------------------- encryption
    def encrypt(self, pk, m, rng=None):
        g = np_rng(rng)
        ctx = self.ctx
        values = to_plain_array(m, self.t, self.n)
        L = len(values)
        u = ctx.ntt(ctx.small_to_rns(_ternary(g, (L, self.n))))
        e0 = ctx.scale(ctx.small_to_rns(_cbd(g, (L, self.n))), ctx.t_mod)
        e1 = ctx.scale(ctx.small_to_rns(_cbd(g, (L, self.n))), ctx.t_mod)
        body0 = ctx.ntt(ctx.add(e0, ctx.plain_to_rns(values)))
        body1 = ctx.ntt(e1)
        c0 = ctx.add(ctx.mul(u, pk.b[None]), body0)
        c1 = ctx.add(ctx.mul(u, pk.a[None]), body1)
        payload = RlwePayload({(): c0, (pk.party_id,): c1}, self.fresh_noise_bits)
        return MultiKeyCiphertext(payload, (pk.party_id,), 0, L, self.name)

    # ---------------------------------------------------------------- evaluation
    def _checked(self, comps, noise_bits):
        if noise_bits >= self.ctx.log2_half_q:
            raise NoiseBudgetExceeded(f"noise bound 2^{noise_bits:.1f} exceeds q/2 = 2^{self.ctx.log2_half_q:.1f}")
        return RlwePayload(comps, noise_bits)

    def _add(self, a, b):
        comps = dict(a.comps)
        for mono, arr in b.comps.items():
            comps[mono] = self.ctx.add(comps[mono], arr) if mono in comps else arr
        return self._checked(comps, _log2_sum(a.noise_bits, b.noise_bits))

    def _scalar_mul(self, c, a):
        centered = c - self.t if c > self.t // 2 else c
        if centered == 0:
            return self._checked({m: np.zeros_like(v) for m, v in a.comps.items()}, -math.inf)
        res = self.ctx.residues(centered)
        comps = {m: self.ctx.scale(v, res) for m, v in a.comps.items()}
        return self._checked(comps, a.noise_bits + math.log2(abs(centered)))

    def _sparse_operator(self, mat):
        key = ("sparse", id(mat))
        hit = self._matrix_cache.get(key)
        if hit is None or hit[0] is not mat:
            half = self.t // 2
            vals = [int(v) - self.t if int(v) > half else int(v) for v in mat.vals]
            rns = np.array([[v % qi for qi in self.ctx.primes] for v in vals], dtype=np.int64).reshape(-1, self.ctx.P)
            row_l1 = np.zeros(mat.shape[0], dtype=object)
            for r, v in zip(mat.rows.tolist(), vals):
                row_l1[r] += abs(v)
            growth = math.log2(max(max(row_l1.tolist(), default=0), 1))
            hit = (mat, mat.rows.astype(np.int64), mat.cols.astype(np.int64), rns, growth)
            self._matrix_cache[key] = hit
        return hit[1:]

    def _sparse_mul(self, mat, a):
        rows, cols, rns, growth = self._sparse_operator(mat)
        comps = {m: sparse_matmul(rows, cols, rns, v, mat.shape[0], self.ctx.q, self.ctx.mu) for m, v in a.comps.items()}
        return self._checked(comps, a.noise_bits + growth)

    def _ring_operator(self, mat):
        key = ("ring", mat.key)
        hit = self._matrix_cache.get(key)
        if hit is None:
            R, C, n = mat.coeffs.shape
            rns = self.ctx.plain_to_rns(mat.coeffs.reshape(R * C, n))
            ntt = self.ctx.ntt(rns).reshape(R, C, self.ctx.P, n)
            half = self.t // 2
            coeffs = mat.coeffs.astype(object)
            centered = np.where(coeffs > half, self.t - coeffs, coeffs)
            row_l1 = max(int(centered[r].max(axis=1).sum()) for r in range(R))
            growth = math.log2(max(row_l1 * n, 1))
            hit = (ntt, growth)
            self._matrix_cache[key] = hit
        return hit

    def _ring_mul(self, mat, a):
        ntt, growth = self._ring_operator(mat)
        comps = {m: ring_matmul(ntt, v, self.ctx.q, self.ctx.mu) for m, v in a.comps.items()}
        return self._checked(comps, a.noise_bits + growth)

    def _ct_mul(self, a, b):
        comps = {}
        for ma, va in a.comps.items():
            for mb, vb in b.comps.items():
                mono = tuple(sorted(ma + mb))
                prod = self.ctx.mul(va, vb)
                comps[mono] = self.ctx.add(comps[mono], prod) if mono in comps else prod
        return self._checked(comps, a.noise_bits + b.noise_bits + math.log2(self.n))

    def _lincomb(self, terms, L):
        ctx = self.ctx
        comps = {}
        owned = set()
        noise = []
        for c, a in terms:
            centered = c - self.t if c > self.t // 2 else c
            if centered == 0:
                continue
            res = ctx.residues(centered)
            for mono, arr in a.comps.items():
                if mono not in comps:
                    # borrowed input arrays are never written; owned ones are updated in place
                    if centered == 1:
                        comps[mono] = arr
                    else:
                        comps[mono] = ctx.scale(arr, res)
                        owned.add(mono)
                elif mono in owned:
                    axpy_mod(comps[mono], arr, res, ctx.q, ctx.mu)
                else:
                    comps[mono] = axpy_new(comps[mono], arr, res, ctx.q, ctx.mu)
                    owned.add(mono)
            noise.append(a.noise_bits + math.log2(abs(centered)))
        return self._checked(comps, _log2_sum(*noise) if noise else -math.inf)

    def _bilinear(self, terms, L):
        ctx = self.ctx
        comps = {}
        noise = []
        for c, a, b in terms:
            centered = c - self.t if c > self.t // 2 else c
            if centered == 0:
                continue
            res = ctx.residues(centered)
            for ma, va in a.comps.items():
                for mb, vb in b.comps.items():
                    mono = tuple(sorted(ma + mb))
                    if mono not in comps:
                        comps[mono] = np.zeros((L, ctx.P, self.n), dtype=np.int64)
                    fma_mod(comps[mono], va, vb, res, ctx.q, ctx.mu)
            noise.append(a.noise_bits + b.noise_bits + math.log2(self.n) + math.log2(abs(centered)))
        return self._checked(comps, _log2_sum(*noise) if noise else -math.inf)

    def _concat(self, payloads):
        monos = sorted(set().union(*(p.comps for p in payloads)))
        comps = {}
        for mono in monos:
            parts = []
            for p in payloads:
                arr = p.comps.get(mono)
                if arr is None:
                    shape = next(iter(p.comps.values())).shape
                    arr = np.zeros(shape, dtype=np.int64)
                parts.append(arr)
            comps[mono] = np.concatenate(parts)
        return self._checked(comps, _log2_sum(*(p.noise_bits for p in payloads)))

    def _slice(self, payload, start, stop):
        return RlwePayload({m: v[start:stop].copy() for m, v in payload.comps.items()}, payload.noise_bits)

    # ---------------------------------------------------------------- linearization
    @staticmethod
    def _cross(payload):
        return [m for m in payload.comps if len(m) == 2 and m[0] != m[1]]

    def needs_linearization(self, ct):
        return bool(self._cross(ct.payload))

    def linearize(self, keypair, ct, rng=None):
        """Fold every cross monomial (a, b) that involves this party into a linear one.

        For (a, b) with this party a, the published term c_ab * s_a + t*e is
        added to the (b,) component; decryption gains only t*e*s_b.
        """
        self._check(ct)
        g = np_rng(rng)
        pid = keypair.party_id
        targets = [m for m in self._cross(ct.payload) if pid in m]
        if not targets:
            return ct
        s_ntt, _ = self._secret_ntt(keypair.sk)
        ctx = self.ctx
        comps = dict(ct.payload.comps)
        L = ct.plain_len
        for mono in targets:
            other = mono[1] if mono[0] == pid else mono[0]
            e = ctx.ntt(ctx.scale(ctx.small_to_rns(_cbd(g, (L, self.n))), ctx.t_mod))
            y = ctx.add(ctx.mul(comps.pop(mono), s_ntt[None]), e)
            key = (other,)
            comps[key] = ctx.add(comps[key], y) if key in comps else y
        extra = self.linearize_noise_bits + math.log2(len(targets))
        payload = self._checked(comps, _log2_sum(ct.payload.noise_bits, extra))
        return MultiKeyCiphertext(payload, ct.key_set, ct.level, ct.plain_len, self.name)

    # ---------------------------------------------------------------- decryption
    def smudge_bits(self, ct):
        """Smudging width (log2 of the bound on e in t*e) for shares of ``ct``."""
        wanted = ct.payload.noise_bits - math.log2(self.t) + SMUDGE_STAT_BITS
        cap = self.ctx.log2_half_q - 1 - math.log2(self.t) - math.log2(4 * len(ct.key_set))
        return max(0, math.ceil(min(wanted, cap)))

    def _partial(self, keypair, ct, rng):
        if self.needs_linearization(ct):
            raise LinearizationRequired("cross-party key products must be linearized before decryption")
        pid = keypair.party_id
        s_ntt, s2_ntt = self._secret_ntt(keypair.sk)
        ctx = self.ctx
        L = ct.plain_len
        acc = np.zeros((L, ctx.P, self.n), dtype=np.int64)
        if (pid,) in ct.payload.comps:
            acc = ctx.mul(ct.payload.comps[(pid,)], s_ntt[None])
        if (pid, pid) in ct.payload.comps:
            acc = ctx.add(acc, ctx.mul(ct.payload.comps[(pid, pid)], s2_ntt[None]))
        share = ctx.intt(acc)
        smudge, _ = ctx.uniform_signed(np_rng(rng), (L, self.n), self.smudge_bits(ct))
        return ctx.add(share, ctx.scale(smudge, ctx.t_mod))

    def decryption_noise_bits(self, ct):
        """Bound on the combined value after all parties add their smudging terms."""
        b = self.smudge_bits(ct)
        smudge = math.log2(self.t) + LIMB_BITS * math.ceil((b + 1) / LIMB_BITS) - 1
        return _log2_sum(ct.payload.noise_bits, smudge + math.log2(len(ct.key_set)))

    def _combine(self, ct, shares):
        if self.decryption_noise_bits(ct) >= self.ctx.log2_half_q:
            raise NoiseBudgetExceeded("smudged decryption would exceed q/2")
        if () in ct.payload.comps:
            total = self.ctx.intt(ct.payload.comps[()])
        else:
            total = np.zeros((ct.plain_len, self.ctx.P, self.n), dtype=np.int64)
        for s in shares:
            total = self.ctx.add(total, s.share)
        return self.ctx.to_mod_t(total)

    # ---------------------------------------------------------------- diagnostics
    def exact_noise_bits(self, ct, keypairs):
        """log2 of the true infinity norm of m + t*e (secret-key diagnostic for tests)."""
        lookup = {kp.party_id: kp for kp in keypairs}
        q3 = self.ctx.q3
        acc = None
        for mono, arr in ct.payload.comps.items():
            term = arr
            for pid in mono:
                term = term * self._secret_ntt(lookup[pid].sk)[0][None] % q3
            acc = term if acc is None else (acc + term) % q3
        coeff = self.ctx.intt(acc)
        Q = self.ctx.Q
        worst = 0
        for l in range(coeff.shape[0]):
            for j in range(self.n):
                v = 0
                for i, qi in enumerate(self.ctx.primes):
                    Mi = Q // qi
                    v += int(coeff[l, i, j]) * Mi * pow(Mi, -1, qi)
                v %= Q
                worst = max(worst, min(v, Q - v))
        return math.log2(worst) if worst else -math.inf
