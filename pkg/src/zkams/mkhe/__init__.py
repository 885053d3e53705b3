"""Multi-key homomorphic encryption with two interchangeable backends."""

from functools import lru_cache

from ..algebra import DEFAULT_PARAMS
from ..errors import InvalidParams
from .base import (
    OPS,
    Backend,
    DecryptionShare,
    MkheKeyPair,
    MultiKeyCiphertext,
    RingMatrix,
    constant_terms,
    from_plain_array,
    to_plain_array,
)
from .rlwe import RlweBackend
from .transparent import TransparentBackend

BACKENDS = {"transparent": TransparentBackend, "rlwe": RlweBackend}


@lru_cache(maxsize=8)
def get_backend(name, algebra=DEFAULT_PARAMS):
    try:
        return BACKENDS[name](algebra)
    except KeyError:
        raise InvalidParams(f"unknown MKHE backend {name!r}") from None


def keygen(backend, party_id, rng=None):
    return backend.keygen(party_id, rng)


def encrypt(backend, pk, m, rng=None):
    return backend.encrypt(pk, m, rng)


def eval(backend, op, lhs, rhs):  # noqa: A001 - mirrors the interface name
    return backend.eval(op, lhs, rhs)


def partial_decrypt(backend, keypair, ct, rng=None):
    return backend.partial_decrypt(keypair, ct, rng)


def combine(backend, shares, ct):
    return backend.combine(shares, ct)
