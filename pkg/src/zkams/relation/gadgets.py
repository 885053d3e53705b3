"""Toy algebraic hash and Schnorr signature over F_p, natively and in-circuit.

Neither primitive is production-secure. The hash is MiMC with a cubic S-box
chained in Miyaguchi-Preneel mode. The signature is Schnorr over the
multiplicative group F_p^* with exponents handled as 64-bit integers.
"""

import random
from functools import lru_cache

from ..encoding import xof

MIMC_ROUNDS = 64
MIMC_EXPONENT = 3
GENERATOR = 7
EXP_BITS = 64


@lru_cache(maxsize=8)
def round_constants(p, rounds=MIMC_ROUNDS):
    stream = xof("zkams/mimc/rc", p.to_bytes(16, "little"), length=16 * rounds)
    consts = [int.from_bytes(stream[16 * i:16 * (i + 1)], "little") % p for i in range(rounds)]
    consts[0] = 0
    return tuple(consts)


@lru_cache(maxsize=32)
def domain_iv(domain, p):
    return int.from_bytes(xof("zkams/mimc/iv", domain.encode(), length=16), "little") % p


# ---------------------------------------------------------------- native

def mimc_encrypt(key, msg, p):
    x = msg
    for c in round_constants(p):
        x = pow((x + key + c) % p, MIMC_EXPONENT, p)
    return (x + key) % p


def mimc_hash(values, p, domain="zkams/hash/v1"):
    h = domain_iv(domain, p)
    for m in values:
        m = int(m) % p
        h = (mimc_encrypt(h, m, p) + h + m) % p
    return h


def schnorr_keygen(p, rng=None):
    rng = rng or random.SystemRandom()
    sk = rng.randrange(1, p - 1)
    return sk, pow(GENERATOR, sk, p)


def schnorr_challenge(R, pk, msg, p):
    return mimc_hash([R, pk, msg], p, domain="zkams/sig/v1")


def schnorr_sign(sk, msg, p, rng=None):
    rng = rng or random.SystemRandom()
    pk = pow(GENERATOR, sk, p)
    k = rng.randrange(1, p - 1)
    R = pow(GENERATOR, k, p)
    e = schnorr_challenge(R, pk, msg, p)
    return R, (k + e * sk) % (p - 1)


def schnorr_verify(pk, msg, sig, p):
    R, s = sig
    if not (0 < R < p and 0 <= s < p - 1 and 0 < pk < p):
        return False
    e = schnorr_challenge(R, pk, msg, p)
    return pow(GENERATOR, s, p) == R * pow(pk, e, p) % p


# ---------------------------------------------------------------- in-circuit

def mimc_encrypt_gadget(cs, key, msg):
    x = msg
    for c in round_constants(cs.p):
        t = x + key + c
        sq = cs.mul(t, t)
        x = cs.mul(sq, t)
    return x + key


def mimc_hash_gadget(cs, values, domain="zkams/hash/v1"):
    h = cs.const(domain_iv(domain, cs.p))
    for m in values:
        h = mimc_encrypt_gadget(cs, h, m) + h + m
    return h


def fixed_base_pow_gadget(cs, base, bits):
    """base^(sum b_i 2^i) for a constant base."""
    p = cs.p
    acc = None
    power = base
    for b in bits:
        factor = b * (power - 1) + 1
        acc = factor if acc is None else cs.mul(acc, factor)
        power = power * power % p
    return acc


def variable_base_pow_gadget(cs, base, bits):
    acc = None
    power = base
    for i, b in enumerate(bits):
        if i:
            power = cs.mul(power, power)
        sel = cs.mul(b, power - 1) + 1
        acc = sel if acc is None else cs.mul(acc, sel)
    return acc


def schnorr_verify_gadget(cs, pk, msg, R, s):
    """Enforce g^s = R * pk^e with e = H(R, pk, msg)."""
    e = mimc_hash_gadget(cs, [R, pk, msg], domain="zkams/sig/v1")
    s_bits = cs.bits(s, EXP_BITS)
    lhs = fixed_base_pow_gadget(cs, GENERATOR, s_bits)
    e_bits = cs.bits(e, EXP_BITS)
    pk_e = variable_base_pow_gadget(cs, pk, e_bits)
    cs.enforce(R, pk_e, lhs)
