"""Additively homomorphic linear commitments Com(pp, M, r) = G·r + H·M over R_t.

G (k x l) and H (k x m) are expanded from a public seed, so there is no
trusted setup. Cross-term commitments reuse the E-matrices: folding
Ē + v·T̄ + v²·Ē_i must open under a single key, so a T-labelled parameter set
is expanded from the E domain and shares its ``key_id``.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .algebra import DEFAULT_PARAMS, FieldElement, RingElement, matvec_mod, negacyclic_matrix
from .encoding import digest, encode_int, encode_residues, frame, xof
from .errors import InvalidParams, ParamMismatch

DEFAULT_K = 4
DEFAULT_L = 4

# labels that share matrices with another label
_DOMAIN_ALIAS = {"T": "E"}


def _expand_poly(seed, domain, which, row, col, n, t):
    # rejection-sample n uniform residues mod t from a SHAKE stream
    out = []
    counter = 0
    while len(out) < n:
        stream = xof(
            "zkams/commit/expand",
            seed,
            domain.encode(),
            which,
            encode_int(row, 4),
            encode_int(col, 4),
            encode_int(counter, 4),
            length=8 * (n + 8),
        )
        words = np.frombuffer(stream, dtype="<u8")
        out.extend(int(w) for w in words if int(w) < t)
        counter += 1
    return out[:n]


def _expand_matrix(seed, domain, which, rows, cols, n, t):
    mat = np.empty((rows, cols, n), dtype=np.uint64)
    for i in range(rows):
        for j in range(cols):
            mat[i, j] = _expand_poly(seed, domain, which, i, j, n, t)
    return mat


@dataclass(frozen=True, eq=False)
class CommitParams:
    seed: bytes
    label: str
    k: int
    l: int
    m: int
    t: int
    n: int
    G: np.ndarray  # (k, l, n) coefficients mod t
    H: np.ndarray  # (k, m, n)

    @cached_property
    def key_id(self):
        domain = _DOMAIN_ALIAS.get(self.label, self.label)
        return digest("zkams/commit/key", self.seed, domain.encode(),
                      *(encode_int(v, 8) for v in (self.k, self.l, self.m, self.n)),
                      encode_int(self.t, 16))

    def __eq__(self, other):
        return isinstance(other, CommitParams) and self.key_id == other.key_id and self.label == other.label

    def __hash__(self):
        return hash((self.key_id, self.label))

    @cached_property
    def G_negacyclic(self):
        # (k*n, l*n) so that G·r = G_negacyclic @ flatten(r)
        blocks = [[negacyclic_matrix(self.G[i, j], self.t) for j in range(self.l)] for i in range(self.k)]
        return np.block(blocks)

    @cached_property
    def H_constant(self):
        # (k*n, m): acts on messages whose entries are constant polynomials
        return self.H.transpose(0, 2, 1).reshape(self.k * self.n, self.m)

    def ring(self, i, j, which="H"):
        mat = self.H if which == "H" else self.G
        return RingElement(tuple(int(c) for c in mat[i, j]), self.t)

    def to_bytes(self):
        return frame(b"commit-params-v1", self.label.encode(), self.key_id)


@lru_cache(maxsize=32)
def _cached_params(seed, label, k, l, m, t, n):
    domain = _DOMAIN_ALIAS.get(label, label)
    G = _expand_matrix(seed, domain, b"G", k, l, n, t)
    H = _expand_matrix(seed, domain, b"H", k, m, n, t)
    G.setflags(write=False)
    H.setflags(write=False)
    return CommitParams(seed, label, k, l, m, t, n, G, H)


def gen_params(seed, label, k=DEFAULT_K, l=DEFAULT_L, m=1, algebra=DEFAULT_PARAMS):
    """Deterministically expand commitment matrices for ``label`` from ``seed``."""
    if not seed:
        raise InvalidParams("seed must be nonempty")
    if min(k, l, m) < 1:
        raise InvalidParams("commitment dimensions must be positive")
    if not label:
        raise InvalidParams("label must be nonempty")
    return _cached_params(bytes(seed), label, k, l, m, algebra.t, algebra.n)


@dataclass(frozen=True)
class Commitment:
    value: tuple  # k tuples of n coefficients
    key_id: bytes
    t: int

    @property
    def k(self):
        return len(self.value)

    def elements(self):
        return [RingElement(c, self.t) for c in self.value]

    def is_zero(self):
        return not any(any(c) for c in self.value)

    def to_bytes(self):
        return frame(self.key_id, *(encode_residues(c, self.t) for c in self.value))

    def _check(self, other):
        if not isinstance(other, Commitment) or other.key_id != self.key_id:
            raise ParamMismatch("commitments under different parameters")

    def __add__(self, other):
        self._check(other)
        return Commitment(
            tuple(tuple((a + b) % self.t for a, b in zip(r1, r2)) for r1, r2 in zip(self.value, other.value)),
            self.key_id, self.t)

    def scale(self, s):
        s = _scalar(s) % self.t
        return Commitment(tuple(tuple(a * s % self.t for a in row) for row in self.value), self.key_id, self.t)


def _scalar(v):
    return v.value if isinstance(v, FieldElement) else int(v)


def _as_coeffs(vec, length, n, t, what):
    """Coefficient matrix (length, n) as Python ints, plus whether all entries are constants."""
    if len(vec) != length:
        raise ParamMismatch(f"{what} has length {len(vec)}, expected {length}")
    rows = []
    constant = True
    for e in vec:
        if isinstance(e, RingElement):
            if e.n != n or e.t != t:
                raise ParamMismatch("ring parameters differ")
            rows.append(e.coeffs)
            constant = constant and e.is_constant()
        else:
            rows.append((_scalar(e) % t,) + (0,) * (n - 1))
    return rows, constant


def commit(params, M, r):
    """G·r + H·M in R_t^k. Field-valued entries of M or r are embedded as constants."""
    n, t, k = params.n, params.t, params.k
    m_rows, m_const = _as_coeffs(M, params.m, n, t, "message")
    r_rows, _ = _as_coeffs(r, params.l, n, t, "randomness")
    acc = matvec_mod(params.G_negacyclic, [c for row in r_rows for c in row], t)
    if m_const:
        acc = (acc + matvec_mod(params.H_constant, [row[0] for row in m_rows], t)) % t
    else:
        for j, row in enumerate(m_rows):
            if not any(row):
                continue
            block = np.vstack([negacyclic_matrix(params.H[i, j], t) for i in range(k)])
            acc = (acc + matvec_mod(block, row, t)) % t
    value = tuple(tuple(int(c) for c in acc[i * n:(i + 1) * n]) for i in range(k))
    return Commitment(value, params.key_id, t)


def zero_commitment(params):
    return Commitment(tuple((0,) * params.n for _ in range(params.k)), params.key_id, params.t)


def fold_commitments(c1, c2, v, power=1):
    """c1 + v^power · c2 with v embedded as a constant polynomial."""
    if power not in (1, 2):
        raise InvalidParams("power must be 1 or 2")
    c1._check(c2)
    s = pow(_scalar(v), power, c1.t)
    return c1 + c2.scale(s)


def fold_error_commitment(E_acc, T_bar, E_i, v):
    """Ē_acc + v·T̄ + v²·Ē_i."""
    return fold_commitments(fold_commitments(E_acc, T_bar, v, 1), E_i, v, 2)


@dataclass(frozen=True)
class CommitSetup:
    """The E, W and T parameter sets of one deployment."""

    E: CommitParams
    W: CommitParams
    T: CommitParams

    @classmethod
    def create(cls, seed, m_c, n_w, k=DEFAULT_K, l=DEFAULT_L, algebra=DEFAULT_PARAMS):
        return cls(
            gen_params(seed, "E", k, l, m_c, algebra),
            gen_params(seed, "W", k, l, n_w, algebra),
            gen_params(seed, "T", k, l, m_c, algebra),
        )

    def to_bytes(self):
        return frame(self.E.to_bytes(), self.W.to_bytes(), self.T.to_bytes())
