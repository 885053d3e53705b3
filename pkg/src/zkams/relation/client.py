"""Convenience wrapper for the whole client-side credential flow."""

import random
from dataclasses import dataclass

from ..algebra import DEFAULT_PARAMS
from .instances import client_generate
from .phc import holder_sign, phc_assignment, sample_phc


@dataclass(frozen=True)
class ClientBundle:
    holder: object
    phc: object
    holder_sig: tuple
    x: tuple
    W: tuple
    instance: object
    witness: object


def honest_client(shape, setup, rng=None, issuer=None, algebra=DEFAULT_PARAMS):
    rng = rng or random.SystemRandom()
    holder, phc = sample_phc(algebra.p, rng, issuer)
    sig = holder_sign(holder, phc, algebra.p, rng)
    x, W = phc_assignment(phc, sig, algebra)
    inst, wit = client_generate(shape, x, W, setup, rng, algebra)
    return ClientBundle(holder, phc, sig, tuple(x), tuple(W), inst, wit)
