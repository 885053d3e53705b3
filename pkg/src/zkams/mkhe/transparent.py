"""TRANSPARENT backend: plaintext carried in the clear next to a random tag.

It implements the interface semantics exactly with no cryptography and is the
reference the RLWE backend is checked against.
"""

import secrets
from dataclasses import dataclass

import numpy as np

from ..encoding import digest, encode_int, encode_residues, frame
from . import plain
from .base import Backend, MkheKeyPair, MultiKeyCiphertext, as_rng, to_plain_array

NAME = "transparent"


@dataclass(frozen=True, eq=False)
class TransparentPayload:
    values: np.ndarray  # (L, n) Python ints mod t
    tag: bytes
    t: int

    def to_bytes(self, backend, key_set, level, plain_len):
        if self.t <= 1 << 64:
            body = np.asarray(self.values, dtype="<u8").tobytes()
        else:
            body = encode_residues((int(v) for v in self.values.ravel()), self.t)
        return frame(backend.encode(), *(k.encode() for k in key_set), encode_int(level, 1),
                     encode_int(plain_len, 4), self.tag, body)


@dataclass(frozen=True)
class TransparentKey:
    party_id: str
    material: bytes


class TransparentBackend(Backend):
    name = NAME

    def keygen(self, party_id, rng=None):
        sk = TransparentKey(party_id, as_rng(rng).getrandbits(256).to_bytes(32, "little"))
        return MkheKeyPair(self.public_key_from_secret(sk), sk, party_id)

    def public_key_from_secret(self, sk):
        return TransparentKey(sk.party_id, digest("zkams/mkhe/transparent/pk", sk.material))

    def encrypt(self, pk, m, rng=None):
        values = to_plain_array(m, self.t, self.n)
        tag = as_rng(rng).getrandbits(128).to_bytes(16, "little") if rng is not None else secrets.token_bytes(16)
        return MultiKeyCiphertext(TransparentPayload(values, tag, self.t), (pk.party_id,), 0, len(values),
                                  self.name)
    def _wrap(self, values, *parents):
        tag = digest("zkams/mkhe/transparent/tag", *(p.tag for p in parents))[:16]
        return TransparentPayload(values, tag, self.t)

    def _add(self, a, b):
        return self._wrap(plain.add(a.values, b.values, self.t), a, b)

    def _scalar_mul(self, c, a):
        return self._wrap(plain.scalar_mul(c, a.values, self.t), a)

    def _sparse_mul(self, mat, a):
        return self._wrap(plain.sparse_mul(mat, a.values, self.t), a)

    def _ring_mul(self, mat, a):
        return self._wrap(plain.ring_mul(mat, a.values, self.t), a)

    def _ct_mul(self, a, b):
        return self._wrap(plain.hadamard(a.values, b.values, self.t), a, b)

    def _concat(self, payloads):
        return self._wrap(np.concatenate([p.values for p in payloads]), *payloads)

    def _slice(self, payload, start, stop):
        return self._wrap(payload.values[start:stop].copy(), payload)

    def _partial(self, keypair, ct, rng):
        return digest("zkams/mkhe/transparent/share", keypair.sk.material, ct.digest)

    def _combine(self, ct, shares):
        return ct.payload.values.copy()
