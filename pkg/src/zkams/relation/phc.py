"""The personhood-credential admission relation.

Public input layout (offsets into x):
    0  hash_phc    algebraic hash of the canonical credential body
    1  R_h         holder signature commitment
    2  s_h         holder signature response
    3  pk_issuer   issuer public key

Witness inputs come first in W: holder_pk, the attributes, then the issuer
signature (R_I, s_I); every later wire is an intermediate of the gadgets.
The canonical body is (holder_pk, pk_issuer, attributes...) under a versioned
hash domain; the issuer signature is over hash_phc and is not part of it.
"""

import random
from dataclasses import dataclass
from functools import lru_cache

from ..algebra import DEFAULT_PARAMS
from ..encoding import digest, encode_residues
from ..errors import InvalidParams
from .circuit import ConstraintSystem
from .gadgets import mimc_hash, mimc_hash_gadget, schnorr_keygen, schnorr_sign, schnorr_verify, schnorr_verify_gadget

PHC_LAYOUT_VERSION = 1
NUM_ATTRIBUTES = 2
PHC_DOMAIN = f"zkams/phc/v{PHC_LAYOUT_VERSION}"

X_HASH, X_R_HOLDER, X_S_HOLDER, X_PK_ISSUER = range(4)
NUM_PUBLIC = 4


@dataclass(frozen=True)
class Phc:
    holder_pk: int
    issuer_pk: int
    issuer_sig: tuple  # (R, s)
    attributes: tuple

    def canonical_body(self):
        return (self.holder_pk, self.issuer_pk) + tuple(self.attributes)

    def hash(self, p):
        return phc_hash(self, p)

    def to_bytes(self, p):
        return encode_residues(self.canonical_body(), p)


def phc_hash(phc, p):
    if len(phc.attributes) != NUM_ATTRIBUTES:
        raise InvalidParams(f"credential must carry exactly {NUM_ATTRIBUTES} attributes")
    if any(not 0 <= v < p for v in phc.canonical_body()):
        raise InvalidParams("credential fields must be canonical field elements")
    return mimc_hash(phc.canonical_body(), p, domain=PHC_DOMAIN)


@dataclass(frozen=True)
class Issuer:
    sk: int
    pk: int

    @classmethod
    def generate(cls, p, rng=None):
        return cls(*schnorr_keygen(p, rng))

    def issue(self, holder_pk, attributes, p, rng=None):
        body = Phc(holder_pk, self.pk, (0, 0), tuple(int(a) % p for a in attributes))
        sig = schnorr_sign(self.sk, phc_hash(body, p), p, rng)
        return Phc(holder_pk, self.pk, sig, body.attributes)


@dataclass(frozen=True)
class Holder:
    sk: int
    pk: int

    @classmethod
    def generate(cls, p, rng=None):
        return cls(*schnorr_keygen(p, rng))


def sample_phc(p, rng=None, issuer=None):
    """A fresh holder and an issued credential with random attributes."""
    rng = rng or random.SystemRandom()
    issuer = issuer or Issuer.generate(p, rng)
    holder = Holder.generate(p, rng)
    attrs = [rng.randrange(p) for _ in range(NUM_ATTRIBUTES)]
    return holder, issuer.issue(holder.pk, attrs, p, rng)


def _circuit(p, phc, holder_sig):
    cs = ConstraintSystem(p)
    h_val = mimc_hash(phc.canonical_body(), p, domain=PHC_DOMAIN)
    x_hash = cs.public(h_val)
    x_R_h = cs.public(holder_sig[0])
    x_s_h = cs.public(holder_sig[1])
    x_pk_i = cs.public(phc.issuer_pk)

    w_holder = cs.witness(phc.holder_pk)
    w_attrs = [cs.witness(a) for a in phc.attributes]
    w_R_i = cs.witness(phc.issuer_sig[0])
    w_s_i = cs.witness(phc.issuer_sig[1])

    cs.begin_group("integrity")
    body = [w_holder, x_pk_i] + w_attrs
    cs.enforce(mimc_hash_gadget(cs, body, domain=PHC_DOMAIN), 1, x_hash)
    cs.end_group()

    cs.begin_group("validity")
    schnorr_verify_gadget(cs, x_pk_i, x_hash, w_R_i, w_s_i)
    cs.end_group()

    cs.begin_group("ownership")
    schnorr_verify_gadget(cs, w_holder, x_hash, x_R_h, x_s_h)
    cs.end_group()
    return cs


@lru_cache(maxsize=4)
def _shape_for(p):
    holder, phc = sample_phc(p, random.Random(0))
    sig = schnorr_sign(holder.sk, phc_hash(phc, p), p, random.Random(1))
    return _circuit(p, phc, sig).shape()


def build_phc_relation(config=DEFAULT_PARAMS):
    """The shared admission shape; identical for every user."""
    return _shape_for(config.p)


def holder_sign(holder, phc, p, rng=None):
    return schnorr_sign(holder.sk, phc_hash(phc, p), p, rng)


def phc_assignment(phc, holder_sig, config=DEFAULT_PARAMS):
    """(x, W) for a credential and a holder signature over its hash.

    The assignment is produced for any inputs; whether it satisfies the shape
    is decided by the checkers, so malformed credentials yield unsatisfying
    assignments rather than exceptions.
    """
    return _circuit(config.p, phc, holder_sig).assignment()


def native_check(phc, holder_sig, p):
    """Out-of-circuit evaluation of the three admission constraints."""
    h = phc_hash(phc, p)
    return {
        "integrity": True,
        "validity": schnorr_verify(phc.issuer_pk, h, phc.issuer_sig, p),
        "ownership": schnorr_verify(phc.holder_pk, h, holder_sig, p),
    }


def credential_digest(phc, p):
    return digest("zkams/phc/bytes", phc.to_bytes(p))
