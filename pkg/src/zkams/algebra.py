"""Prime-field and negacyclic polynomial-ring arithmetic.

Field elements live in F_p; ring elements in R_t = Z_t[X]/(X^n + 1). Field
values are lifted into the ring as constant polynomials, which is a ring
homomorphism when t = p.
"""

import random
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from sympy import isprime

from .encoding import decode_residues, encode_residues, frame
from .errors import DivisionByZero, InvalidParams, ParamMismatch

GOLDILOCKS_P = 2**64 - 2**32 + 1


def ntt_friendly_primes(n, bits, count):
    """Largest primes below 2**bits that are 1 mod 2n, in descending order."""
    step = 2 * n
    cand = ((1 << bits) - 1) // step * step + 1
    out = []
    while len(out) < count:
        if cand < step:
            raise InvalidParams("not enough NTT-friendly primes")
        if isprime(cand):
            out.append(cand)
        cand -= step
    return tuple(out)


@dataclass(frozen=True)
class AlgebraParams:
    """Moduli shared by commitments and MKHE.

    ``q`` is the product of ``q_primes`` (an RNS basis of 30-bit primes that
    are 1 mod 2n, so every residue ring supports a negacyclic NTT).
    """

    p: int = GOLDILOCKS_P
    t: int = GOLDILOCKS_P
    n: int = 64
    q_limbs: int = 16
    q_primes: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if not isprime(self.p):
            raise InvalidParams("p must be prime")
        if self.t % self.p:
            raise InvalidParams("p must divide t")
        if self.n < 1 or self.n & (self.n - 1):
            raise InvalidParams("n must be a power of two")
        if self.q_primes is None:
            object.__setattr__(self, "q_primes", ntt_friendly_primes(self.n, 30, self.q_limbs))
        if any((qi - 1) % (2 * self.n) for qi in self.q_primes):
            raise InvalidParams("RNS primes must be 1 mod 2n")
        if self.q <= self.t:
            raise InvalidParams("q must exceed t")

    @cached_property
    def q(self):
        out = 1
        for qi in self.q_primes:
            out *= qi
        return out

    @cached_property
    def field(self):
        return PrimeField(self.p)

    @cached_property
    def ring(self):
        return Ring(self.t, self.n)

    def to_bytes(self):
        return frame(b"algebra-v1", *(str(v).encode() for v in (self.p, self.t, self.n, self.q)))


# ---------------------------------------------------------------- field

class PrimeField:
    def __init__(self, p):
        self.p = p

    def __repr__(self):
        return f"PrimeField({self.p})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("F", self.p))

    def __call__(self, value):
        return FieldElement(value % self.p, self.p)

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    def neg(self, a):
        return -a % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise DivisionByZero("inverse of zero")
        return pow(a, -1, self.p)

    def random(self, rng=None):
        rng = rng or random.SystemRandom()
        return rng.randrange(self.p)

    def centered(self, a):
        a %= self.p
        return a - self.p if a > self.p // 2 else a


@dataclass(frozen=True)
class FieldElement:
    value: int
    p: int

    def __post_init__(self):
        if not 0 <= self.value < self.p:
            raise InvalidParams("field element out of range")

    def _coerce(self, other):
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise ParamMismatch("field moduli differ")
            return other.value
        return other % self.p

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.p, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.p, self.p)

    def __rsub__(self, other):
        return FieldElement((self._coerce(other) - self.value) % self.p, self.p)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other) % self.p, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.p, self.p)

    def __truediv__(self, other):
        return self * FieldElement(self._coerce(other), self.p).inv()

    def __pow__(self, e):
        if e < 0:
            return self.inv() ** -e
        return FieldElement(pow(self.value, e, self.p), self.p)

    def inv(self):
        if self.value == 0:
            raise DivisionByZero("inverse of zero")
        return FieldElement(pow(self.value, -1, self.p), self.p)

    def __int__(self):
        return self.value

    def to_bytes(self):
        return encode_residues([self.value], self.p)


def add(a, b):
    return a + b


def sub(a, b):
    return a - b


def mul(a, b):
    return a * b


def inv(a):
    return a.inv()


# ---------------------------------------------------------------- ring

def negacyclic_schoolbook(a, b, mod):
    n = len(a)
    acc = [0] * (2 * n)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                acc[i + j] += ai * bj
    return [(acc[k] - acc[k + n]) % mod for k in range(n)]


def _bitrev(k, bits):
    return int(format(k, f"0{bits}b")[::-1], 2) if bits else 0


class NegacyclicNtt:
    """Iterative negacyclic NTT over Z_mod; requires mod prime and 2n | mod - 1."""

    def __init__(self, n, mod):
        if (mod - 1) % (2 * n):
            raise InvalidParams("modulus does not support a length-2n root of unity")
        self.n, self.mod = n, mod
        psi = _root_of_unity(2 * n, mod)
        bits = n.bit_length() - 1
        psi_inv = pow(psi, -1, mod)
        self.psi_rev = [pow(psi, _bitrev(k, bits), mod) for k in range(n)]
        self.psi_inv_rev = [pow(psi_inv, _bitrev(k, bits), mod) for k in range(n)]
        self.n_inv = pow(n, -1, mod)

    def forward(self, a):
        a = list(a)
        q, n = self.mod, self.n
        t, m = n, 1
        while m < n:
            t //= 2
            for i in range(m):
                j1 = 2 * i * t
                s = self.psi_rev[m + i]
                for j in range(j1, j1 + t):
                    u, v = a[j], a[j + t] * s % q
                    a[j], a[j + t] = (u + v) % q, (u - v) % q
            m *= 2
        return a

    def inverse(self, a):
        a = list(a)
        q, n = self.mod, self.n
        t, m = 1, n
        while m > 1:
            j1, h = 0, m // 2
            for i in range(h):
                s = self.psi_inv_rev[h + i]
                for j in range(j1, j1 + t):
                    u, v = a[j], a[j + t]
                    a[j], a[j + t] = (u + v) % q, (u - v) * s % q
                j1 += 2 * t
            t *= 2
            m = h
        return [x * self.n_inv % q for x in a]


def _root_of_unity(order, mod):
    """An element of exact multiplicative order ``order`` (a power of two)."""
    exp = (mod - 1) // order
    for g in range(2, 10_000):
        r = pow(g, exp, mod)
        if pow(r, order // 2, mod) == mod - 1:
            return r
    raise InvalidParams("no root of unity found")


class Ring:
    """R_t = Z_t[X]/(X^n + 1)."""

    def __init__(self, t, n):
        self.t, self.n = t, n

    def __repr__(self):
        return f"Ring(t={self.t}, n={self.n})"

    def __eq__(self, other):
        return isinstance(other, Ring) and (other.t, other.n) == (self.t, self.n)

    def __hash__(self):
        return hash(("R", self.t, self.n))

    def __call__(self, coeffs):
        coeffs = [int(c) % self.t for c in coeffs]
        if len(coeffs) != self.n:
            raise ParamMismatch(f"expected {self.n} coefficients, got {len(coeffs)}")
        return RingElement(tuple(coeffs), self.t)

    def zero(self):
        return RingElement((0,) * self.n, self.t)

    def one(self):
        return self.constant(1)

    def constant(self, c):
        return RingElement((c % self.t,) + (0,) * (self.n - 1), self.t)

    def monomial(self, k):
        coeffs = [0] * self.n
        sign = -1 if (k // self.n) % 2 else 1
        coeffs[k % self.n] = sign % self.t
        return RingElement(tuple(coeffs), self.t)

    def random(self, rng=None):
        rng = rng or random.SystemRandom()
        return RingElement(tuple(rng.randrange(self.t) for _ in range(self.n)), self.t)

    @cached_property
    def ntt(self):
        return NegacyclicNtt(self.n, self.t)


@dataclass(frozen=True)
class RingElement:
    coeffs: tuple
    t: int

    @property
    def n(self):
        return len(self.coeffs)

    def _check(self, other):
        if not isinstance(other, RingElement) or other.t != self.t or other.n != self.n:
            raise ParamMismatch("ring parameters differ")

    def __add__(self, other):
        self._check(other)
        return RingElement(tuple((a + b) % self.t for a, b in zip(self.coeffs, other.coeffs)), self.t)

    def __sub__(self, other):
        self._check(other)
        return RingElement(tuple((a - b) % self.t for a, b in zip(self.coeffs, other.coeffs)), self.t)

    def __neg__(self):
        return RingElement(tuple(-a % self.t for a in self.coeffs), self.t)

    def __mul__(self, other):
        if isinstance(other, RingElement):
            self._check(other)
            return RingElement(tuple(negacyclic_schoolbook(self.coeffs, other.coeffs, self.t)), self.t)
        if isinstance(other, FieldElement):
            other = other.value
        return RingElement(tuple(a * other % self.t for a in self.coeffs), self.t)

    __rmul__ = __mul__

    def mul_ntt(self, other):
        """Ring product through the NTT; agrees with ``*``."""
        self._check(other)
        ntt = Ring(self.t, self.n).ntt
        fa, fb = ntt.forward(self.coeffs), ntt.forward(other.coeffs)
        return RingElement(tuple(ntt.inverse([x * y % self.t for x, y in zip(fa, fb)])), self.t)

    def is_zero(self):
        return not any(self.coeffs)

    def is_constant(self):
        return not any(self.coeffs[1:])

    def to_bytes(self):
        return encode_residues(self.coeffs, self.t)

    @classmethod
    def from_bytes(cls, data, t):
        return cls(tuple(decode_residues(data, t)), t)


def embed(f, params):
    """Constant-coefficient lift F_p -> R_t."""
    if params.t < params.p:
        raise InvalidParams("embedding requires t >= p")
    value = f.value if isinstance(f, FieldElement) else int(f) % params.p
    return params.ring.constant(value)


def ring_add(a, b):
    return a + b


def ring_mul(a, b):
    return a * b


DEFAULT_PARAMS = AlgebraParams()


# ---------------------------------------------------------------- vectorized

_CHUNK = 1 << 15


def matvec_mod(A, x, mod):
    """Exact ``A @ x mod mod`` for uint64 ``A`` and residues ``x`` below 2**64.

    A is split into 32-bit limbs and x into 16-bit limbs so every partial
    product sum fits in a uint64 for up to 2**16 columns.
    """
    A = np.asarray(A, dtype=np.uint64)
    x = np.asarray([int(v) for v in x], dtype=np.uint64)
    rows, cols = A.shape
    acc = np.zeros(rows, dtype=object)
    a_limbs = [A & np.uint64(0xFFFFFFFF), A >> np.uint64(32)]
    x_limbs = [(x >> np.uint64(16 * j)) & np.uint64(0xFFFF) for j in range(4)]
    for start in range(0, cols, _CHUNK):
        sl = slice(start, start + _CHUNK)
        for i, a in enumerate(a_limbs):
            for j, xl in enumerate(x_limbs):
                part = a[:, sl] @ xl[sl]
                acc += part.astype(object) << (32 * i + 16 * j)
    return acc % mod


def negacyclic_matrix(poly, mod):
    """n x n matrix N with N @ b = poly * b in Z_mod[X]/(X^n+1)."""
    poly = np.asarray([int(c) % mod for c in poly], dtype=object)
    n = len(poly)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    sign_neg = np.arange(n)[:, None] < np.arange(n)[None, :]
    out = poly[idx]
    out[sign_neg] = (mod - out[sign_neg]) % mod
    return out.astype(np.uint64)
