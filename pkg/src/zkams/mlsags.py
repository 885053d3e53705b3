"""Linkable ring signatures (single-layer LSAG) over the ed25519 prime-order group.

Group arithmetic comes from libsodium through PyNaCl. Points are 32-byte
compressed encodings; scalars are integers mod the group order and are
serialized as 32 little-endian bytes.
"""

import hashlib
import random
from dataclasses import dataclass

from nacl import bindings as sodium
from nacl.exceptions import RuntimeError as SodiumError

from .encoding import digest, frame
from .errors import DuplicateRingKey, InvalidParams, SignerNotInRing

GROUP_ORDER = 2**252 + 27742317777372353535851937790883648493
SCALAR_BYTES = 32
POINT_BYTES = 32
DEFAULT_RING_SIZE = 11

_HP_DST = b"zkams/lsag/hash-to-point/v1"


def _sb(s):
    return (s % GROUP_ORDER).to_bytes(SCALAR_BYTES, "little")


def base_mul(s):
    return sodium.crypto_scalarmult_ed25519_base_noclamp(_sb(s))


def point_mul(s, P):
    return sodium.crypto_scalarmult_ed25519_noclamp(_sb(s), P)


def point_add(P, Q):
    return sodium.crypto_core_ed25519_add(P, Q)


GENERATOR = base_mul(1)


def hash_to_point(data):
    """Try-and-increment: the first SHA-512 candidate that is a valid prime-order point."""
    for ctr in range(1 << 16):
        cand = hashlib.sha512(_HP_DST + data + ctr.to_bytes(4, "little")).digest()[:32]
        if sodium.crypto_core_ed25519_is_valid_point(cand):
            return cand
    raise InvalidParams("hash-to-point did not terminate")


def hash_to_scalar(*parts):
    return int.from_bytes(hashlib.sha512(frame(b"zkams/lsag/challenge/v1", *parts)).digest(), "little") % GROUP_ORDER


def random_scalar(rng=None):
    rng = rng or random.SystemRandom()
    return rng.randrange(1, GROUP_ORDER)


@dataclass(frozen=True)
class SeedKeyPair:
    sk: int
    pk: bytes

    @classmethod
    def from_scalar(cls, sk):
        sk %= GROUP_ORDER
        if sk == 0:
            raise InvalidParams("secret scalar must be nonzero")
        return cls(sk, base_mul(sk))


@dataclass(frozen=True)
class KeyImage:
    y0: bytes


@dataclass(frozen=True)
class RingSignature:
    y0: bytes
    c0: int
    responses: tuple
    ring_digest: bytes

    @property
    def key_image(self):
        return KeyImage(self.y0)

    def to_bytes(self):
        return self.y0 + _sb(self.c0) + b"".join(_sb(s) for s in self.responses) + self.ring_digest

    @classmethod
    def from_bytes(cls, data):
        if len(data) < 96 or len(data) % 32:
            raise ValueError("malformed signature encoding")
        words = [data[i:i + 32] for i in range(0, len(data), 32)]
        return cls(words[0], int.from_bytes(words[1], "little"),
                   tuple(int.from_bytes(w, "little") for w in words[2:-1]), words[-1])


def lrs_keygen(rng=None):
    return SeedKeyPair.from_scalar(random_scalar(rng))


def key_image(keypair):
    return KeyImage(point_mul(keypair.sk, hash_to_point(keypair.pk)))


def ring_digest(ring):
    return digest("zkams/lsag/ring", *ring)


def _check_ring(ring):
    if not ring:
        raise InvalidParams("ring must be nonempty")
    if len(set(ring)) != len(ring):
        raise DuplicateRingKey("ring contains a repeated public key")


def lrs_sign(message, ring, signer_index, sk, rng=None):
    ring = [bytes(pk) for pk in ring]
    _check_ring(ring)
    n = len(ring)
    kp = SeedKeyPair.from_scalar(sk)
    if not 0 <= signer_index < n or ring[signer_index] != kp.pk:
        raise SignerNotInRing("signer public key is not at the given ring position")
    rng = rng or random.SystemRandom()
    rd = ring_digest(ring)
    hp = [hash_to_point(pk) for pk in ring]
    y0 = point_mul(kp.sk, hp[signer_index])

    c = [0] * n
    s = [0] * n
    alpha = random_scalar(rng)
    j = (signer_index + 1) % n
    c[j] = hash_to_scalar(message, rd, y0, base_mul(alpha), point_mul(alpha, hp[signer_index]))
    while j != signer_index:
        s[j] = random_scalar(rng)
        L = point_add(base_mul(s[j]), point_mul(c[j], ring[j]))
        R = point_add(point_mul(s[j], hp[j]), point_mul(c[j], y0))
        nxt = (j + 1) % n
        c[nxt] = hash_to_scalar(message, rd, y0, L, R)
        j = nxt
    s[signer_index] = (alpha - c[signer_index] * kp.sk) % GROUP_ORDER
    return RingSignature(y0, c[0], tuple(s), rd)


def _mul_sum(a, P, b, Q):
    # a*P + b*Q, tolerating zero scalars (libsodium rejects identity results)
    terms = [point_mul(k, X) for k, X in ((a, P), (b, Q)) if k % GROUP_ORDER]
    if not terms:
        raise ValueError("identity")
    return terms[0] if len(terms) == 1 else point_add(*terms)


def lrs_verify(message, ring, sig):
    try:
        ring = [bytes(pk) for pk in ring]
        if not ring or len(set(ring)) != len(ring) or len(sig.responses) != len(ring):
            return False
        if sig.ring_digest != ring_digest(ring):
            return False
        if not sodium.crypto_core_ed25519_is_valid_point(sig.y0):
            return False
        if not all(sodium.crypto_core_ed25519_is_valid_point(pk) for pk in ring):
            return False
        if not (0 <= sig.c0 < GROUP_ORDER and all(0 <= s < GROUP_ORDER for s in sig.responses)):
            return False
        c = sig.c0
        for pk, s in zip(ring, sig.responses):
            L = _mul_sum(s, GENERATOR, c, pk)
            R = _mul_sum(s, hash_to_point(pk), c, sig.y0)
            c = hash_to_scalar(message, sig.ring_digest, sig.y0, L, R)
        return c == sig.c0
    except (SodiumError, ValueError, TypeError):
        return False


def lrs_link(sig1, sig2):
    """Same signer iff the key images coincide; messages and rings play no part."""
    return sig1.y0 == sig2.y0


def sample_ring(candidates, signer_pk, size=DEFAULT_RING_SIZE, rng=None):
    """Signer plus ``size - 1`` distinct decoys drawn uniformly; returns (ring, index)."""
    rng = rng or random.SystemRandom()
    pool = sorted({bytes(pk) for pk in candidates} - {bytes(signer_pk)})
    if len(pool) < size - 1:
        raise InvalidParams(f"need {size - 1} decoys, only {len(pool)} registered keys available")
    ring = rng.sample(pool, size - 1) + [bytes(signer_pk)]
    rng.shuffle(ring)
    return ring, ring.index(bytes(signer_pk))
