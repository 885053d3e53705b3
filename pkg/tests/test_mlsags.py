import random

import pytest

from zkams.errors import DuplicateRingKey, SignerNotInRing
from zkams.mlsags import (
    GENERATOR,
    GROUP_ORDER,
    RingSignature,
    SeedKeyPair,
    hash_to_point,
    key_image,
    lrs_keygen,
    lrs_link,
    lrs_sign,
    lrs_verify,
    sample_ring,
)


def make_ring(rng, n):
    keys = [lrs_keygen(rng) for _ in range(n)]
    return keys, [k.pk for k in keys]


def test_generator_and_unit_key():
    assert SeedKeyPair.from_scalar(1).pk == GENERATOR
    # ed25519 base point encoding
    assert GENERATOR.hex() == "5866666666666666666666666666666666666666666666666666666666666666"


def test_key_image_deterministic_and_distinct():
    rng = random.Random(1)
    kp = lrs_keygen(rng)
    assert key_image(kp) == key_image(kp)
    images = {key_image(lrs_keygen(rng)).y0 for _ in range(1000)}
    assert len(images) == 1000


def test_hash_to_point_deterministic():
    assert hash_to_point(b"a") == hash_to_point(b"a")
    assert hash_to_point(b"a") != hash_to_point(b"b")


def test_degenerate_ring():
    rng = random.Random(2)
    kp = lrs_keygen(rng)
    sig = lrs_sign(b"m", [kp.pk], 0, kp.sk, rng)
    assert lrs_verify(b"m", [kp.pk], sig)
    assert sig.y0 == key_image(kp).y0


def test_sign_first_and_last_index():
    rng = random.Random(3)
    keys, ring = make_ring(rng, 6)
    s0 = lrs_sign(b"msg", ring, 0, keys[0].sk, rng)
    s5 = lrs_sign(b"msg", ring, 5, keys[5].sk, rng)
    assert lrs_verify(b"msg", ring, s0) and lrs_verify(b"msg", ring, s5)
    assert set(vars(s0)) == {"y0", "c0", "responses", "ring_digest"}
    assert len(s0.to_bytes()) == len(s5.to_bytes())


def test_key_image_message_independent():
    rng = random.Random(4)
    keys, ring = make_ring(rng, 4)
    a = lrs_sign(b"one", ring, 2, keys[2].sk, rng)
    _, ring2 = make_ring(rng, 3)
    ring2 = ring2 + [keys[2].pk]
    b = lrs_sign(b"two", ring2, 3, keys[2].sk, rng)
    assert a.y0 == b.y0
    assert lrs_link(a, b)
    assert lrs_link(a, a)
    c = lrs_sign(b"one", ring, 1, keys[1].sk, rng)
    assert not lrs_link(a, c)


def test_verify_mutations():
    rng = random.Random(5)
    keys, ring = make_ring(rng, 5)
    sig = lrs_sign(b"hello", ring, 3, keys[3].sk, rng)
    assert lrs_verify(b"hello", ring, sig)
    assert not lrs_verify(b"hellp", ring, sig)
    _, other = make_ring(rng, 5)
    assert not lrs_verify(b"hello", other, sig)
    assert not lrs_verify(b"hello", ring[::-1], sig)


def test_signer_errors():
    rng = random.Random(6)
    keys, ring = make_ring(rng, 3)
    with pytest.raises(SignerNotInRing):
        lrs_sign(b"m", ring, 0, keys[1].sk)
    with pytest.raises(SignerNotInRing):
        lrs_sign(b"m", ring, 7, keys[1].sk)
    with pytest.raises(DuplicateRingKey):
        lrs_sign(b"m", ring + [ring[0]], 1, keys[1].sk)


def test_serialization_roundtrip():
    rng = random.Random(7)
    keys, ring = make_ring(rng, 4)
    sig = lrs_sign(b"m", ring, 1, keys[1].sk, rng)
    data = sig.to_bytes()
    assert len(data) == 32 * (3 + 4)
    assert RingSignature.from_bytes(data) == sig


def test_out_of_range_scalar_rejected():
    rng = random.Random(8)
    keys, ring = make_ring(rng, 2)
    sig = lrs_sign(b"m", ring, 0, keys[0].sk, rng)
    bumped = RingSignature(sig.y0, sig.c0 + GROUP_ORDER, sig.responses, sig.ring_digest)
    assert not lrs_verify(b"m", ring, bumped)


def test_sample_ring():
    rng = random.Random(9)
    keys, pool = make_ring(rng, 20)
    ring, idx = sample_ring(pool, keys[4].pk, 11, rng)
    assert len(ring) == 11 and len(set(ring)) == 11 and ring[idx] == keys[4].pk
