"""Backend-independent MKHE types and the evaluation dispatcher."""

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..algebra import FieldElement, RingElement
from ..encoding import digest
from ..errors import (
    DepthExceeded,
    IncompleteShares,
    InvalidParams,
    NotAParticipant,
    ParamMismatch,
    ShareBindingError,
)
from ..relation.r1cs import SparseMatrix

MAX_LEVEL = 1
OPS = ("add", "scalar_mul", "matrix_mul", "ct_mul")


@dataclass(frozen=True)
class MkheKeyPair:
    pk: object
    sk: object
    party_id: str


@dataclass(frozen=True, eq=False)
class MultiKeyCiphertext:
    payload: object
    key_set: tuple
    level: int
    plain_len: int
    backend: str

    def __post_init__(self):
        if not self.key_set or list(self.key_set) != sorted(set(self.key_set)):
            raise InvalidParams("key set must be nonempty, sorted and duplicate-free")
        if not 0 <= self.level <= MAX_LEVEL:
            raise DepthExceeded(f"level {self.level} exceeds the supported depth")

    @cached_property
    def digest(self):
        return digest("zkams/mkhe/ct", self.to_bytes())

    def to_bytes(self):
        return self.payload.to_bytes(self.backend, self.key_set, self.level, self.plain_len)


@dataclass(frozen=True)
class DecryptionShare:
    party_id: str
    share: object = field(repr=False)
    ct_digest: bytes


class RingMatrix:
    """Dense matrix over R_t stored as coefficients of shape (rows, cols, n)."""

    def __init__(self, coeffs, t):
        self.coeffs = np.asarray(coeffs, dtype=np.uint64)
        self.t = t
        if self.coeffs.ndim != 3:
            raise ParamMismatch("ring matrix must have shape (rows, cols, n)")

    @property
    def shape(self):
        return self.coeffs.shape[:2]

    @cached_property
    def key(self):
        return digest("zkams/mkhe/ring-matrix", self.coeffs.tobytes())


# ---------------------------------------------------------------- plaintext vectors

def to_plain_array(m, t, n):
    """Coefficient array (L, n) of Python ints mod t from ring elements or field scalars."""
    if isinstance(m, np.ndarray) and m.ndim == 2:
        return np.array([[int(c) % t for c in row] for row in m], dtype=object).reshape(m.shape)
    rows = []
    for e in m:
        if isinstance(e, RingElement):
            if e.n != n or e.t != t:
                raise ParamMismatch("ring parameters differ")
            rows.append(list(e.coeffs))
        else:
            rows.append([_scalar(e) % t] + [0] * (n - 1))
    out = np.zeros((len(rows), n), dtype=object)
    for i, row in enumerate(rows):
        out[i] = row
    return out


def from_plain_array(arr, t):
    return [RingElement(tuple(int(c) for c in row), t) for row in arr]


def constant_terms(vec):
    """Field values carried by constant-embedded ring elements."""
    return [e.coeffs[0] for e in vec]


def _scalar(v):
    return v.value if isinstance(v, FieldElement) else int(v)


def as_rng(rng):
    if rng is None:
        return random.SystemRandom()
    return rng


def np_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(as_rng(rng).getrandbits(128))


# ---------------------------------------------------------------- backend interface

class Backend(ABC):
    name = "abstract"

    def __init__(self, algebra):
        self.algebra = algebra
        self.t = algebra.t
        self.n = algebra.n

    # keys and encryption
    @abstractmethod
    def keygen(self, party_id, rng=None):
        ...

    @abstractmethod
    def public_key_from_secret(self, sk):
        ...

    @abstractmethod
    def encrypt(self, pk, m, rng=None):
        ...

    # primitive homomorphic operations on payloads
    @abstractmethod
    def _add(self, a, b): ...

    @abstractmethod
    def _scalar_mul(self, c, a): ...

    @abstractmethod
    def _sparse_mul(self, mat, a): ...

    @abstractmethod
    def _ring_mul(self, mat, a): ...

    @abstractmethod
    def _ct_mul(self, a, b): ...

    @abstractmethod
    def _concat(self, payloads): ...

    @abstractmethod
    def _slice(self, payload, start, stop): ...

    @abstractmethod
    def _partial(self, keypair, ct, rng): ...

    @abstractmethod
    def _combine(self, ct, shares): ...

    def linearize(self, keypair, ct, rng=None):
        """Remove cross-party key products that involve ``keypair``'s party."""
        return ct

    def needs_linearization(self, ct):
        return False

    # dispatcher
    def eval(self, op, lhs, rhs):
        if op not in OPS:
            raise InvalidParams(f"unknown operation {op!r}")
        if op == "add":
            return self.add(lhs, rhs)
        if op == "scalar_mul":
            c, ct = (lhs, rhs) if isinstance(rhs, MultiKeyCiphertext) else (rhs, lhs)
            return self.scalar_mul(c, ct)
        if op == "matrix_mul":
            mat, ct = (lhs, rhs) if isinstance(rhs, MultiKeyCiphertext) else (rhs, lhs)
            return self.matrix_mul(mat, ct)
        return self.ct_mul(lhs, rhs)

    def _check(self, *cts):
        for ct in cts:
            if not isinstance(ct, MultiKeyCiphertext) or ct.backend != self.name:
                raise ParamMismatch("ciphertext from a different backend")

    def add(self, a, b):
        self._check(a, b)
        if a.plain_len != b.plain_len:
            raise ParamMismatch("plaintext lengths differ")
        return MultiKeyCiphertext(self._add(a.payload, b.payload), _union(a, b), max(a.level, b.level),
                                  a.plain_len, self.name)

    def sub(self, a, b):
        return self.add(a, self.scalar_mul(-1, b))

    def scalar_mul(self, c, a):
        self._check(a)
        c = _scalar(c) % self.t
        return MultiKeyCiphertext(self._scalar_mul(c, a.payload), a.key_set, a.level, a.plain_len, self.name)

    def matrix_mul(self, mat, a):
        self._check(a)
        if isinstance(mat, SparseMatrix):
            rows, cols = mat.shape
            payload = None if cols != a.plain_len else self._sparse_mul(mat, a.payload)
        elif isinstance(mat, RingMatrix):
            rows, cols = mat.shape
            payload = None if cols != a.plain_len else self._ring_mul(mat, a.payload)
        else:
            raise InvalidParams("matrix must be a SparseMatrix or RingMatrix")
        if payload is None:
            raise ParamMismatch(f"matrix has {cols} columns, ciphertext carries {a.plain_len}")
        return MultiKeyCiphertext(payload, a.key_set, a.level, rows, self.name)

    def _check_product(self, a, b):
        self._check(a, b)
        if a.level or b.level:
            raise DepthExceeded("ciphertext multiplication needs level-0 operands")
        if a.plain_len != b.plain_len and 1 not in (a.plain_len, b.plain_len):
            raise ParamMismatch("plaintext lengths differ")
        return max(a.plain_len, b.plain_len)

    def ct_mul(self, a, b):
        """Entry-wise product; a length-1 operand is broadcast across the other."""
        L = self._check_product(a, b)
        return MultiKeyCiphertext(self._ct_mul(a.payload, b.payload), _union(a, b), 1, L, self.name)

    def bilinear(self, terms):
        """Sum of c * (a ⊗ b) over (c, a, b) triples, as one level-1 ciphertext."""
        if not terms:
            raise InvalidParams("bilinear needs at least one term")
        lengths = {self._check_product(a, b) for _, a, b in terms}
        if len(lengths) != 1:
            raise ParamMismatch("bilinear terms have different lengths")
        L = lengths.pop()
        keys = tuple(sorted(set().union(*(set(a.key_set) | set(b.key_set) for _, a, b in terms))))
        payload = self._bilinear([(_scalar(c) % self.t, a.payload, b.payload) for c, a, b in terms], L)
        return MultiKeyCiphertext(payload, keys, 1, L, self.name)

    def lincomb(self, terms):
        """Sum of c * ct over (c, ct) pairs."""
        if not terms:
            raise InvalidParams("lincomb needs at least one term")
        self._check(*(ct for _, ct in terms))
        lengths = {ct.plain_len for _, ct in terms}
        if len(lengths) != 1:
            raise ParamMismatch("plaintext lengths differ")
        keys = tuple(sorted(set().union(*(ct.key_set for _, ct in terms))))
        payload = self._lincomb([(_scalar(c) % self.t, ct.payload) for c, ct in terms], lengths.pop())
        return MultiKeyCiphertext(payload, keys, max(ct.level for _, ct in terms), payload_len(terms), self.name)

    def _lincomb(self, terms, L):
        out = None
        for c, a in terms:
            t = a if c == 1 else self._scalar_mul(c, a)
            out = t if out is None else self._add(out, t)
        return out

    def _bilinear(self, terms, L):
        out = None
        for c, a, b in terms:
            t = self._scalar_mul(c, self._ct_mul(a, b))
            out = t if out is None else self._add(out, t)
        return out

    def concat(self, cts):
        self._check(*cts)
        keys = tuple(sorted(set().union(*(c.key_set for c in cts))))
        return MultiKeyCiphertext(self._concat([c.payload for c in cts]), keys, max(c.level for c in cts),
                                  sum(c.plain_len for c in cts), self.name)

    def slice(self, ct, start, stop):
        self._check(ct)
        return MultiKeyCiphertext(self._slice(ct.payload, start, stop), ct.key_set, ct.level, stop - start,
                                  self.name)

    # decryption
    def partial_decrypt(self, keypair, ct, rng=None):
        self._check(ct)
        if keypair.party_id not in ct.key_set:
            raise NotAParticipant(f"{keypair.party_id} is not in the ciphertext key set")
        return DecryptionShare(keypair.party_id, self._partial(keypair, ct, rng), ct.digest)

    def combine(self, shares, ct):
        return from_plain_array(self.combine_array(shares, ct), self.t)

    def combine_array(self, shares, ct):
        """Like ``combine`` but returns the (L, n) coefficient array."""
        self._check(ct)
        by_party = {}
        for s in shares:
            if s.ct_digest != ct.digest:
                raise ShareBindingError(f"share from {s.party_id} is bound to a different ciphertext")
            by_party.setdefault(s.party_id, s)
        missing = set(ct.key_set) - set(by_party)
        if missing:
            raise IncompleteShares(f"missing shares from {sorted(missing)}")
        extra = set(by_party) - set(ct.key_set)
        if extra:
            raise NotAParticipant(f"shares from non-participants {sorted(extra)}")
        return self._combine(ct, [by_party[p] for p in ct.key_set])

    def decrypt_with(self, keypairs, ct, rng=None):
        """Convenience: collect every needed share from ``keypairs`` and combine."""
        lookup = {kp.party_id: kp for kp in keypairs}
        return self.combine([self.partial_decrypt(lookup[p], ct, rng) for p in ct.key_set if p in lookup], ct)


def payload_len(terms):
    return terms[0][1].plain_len


def _union(a, b):
    return tuple(sorted(set(a.key_set) | set(b.key_set)))
