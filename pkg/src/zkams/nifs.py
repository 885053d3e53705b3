"""Plaintext non-interactive folding of committed relaxed R1CS pairs."""

import random
from dataclasses import dataclass
from typing import NamedTuple

from .algebra import DEFAULT_PARAMS, FieldElement
from .commit import commit, fold_commitments, fold_error_commitment
from .encoding import digest, encode_int, frame
from .errors import NotSatisfied, ParamMismatch
from .relation.instances import (
    CommittedRelaxedInstance,
    CommittedRelaxedWitness,
    c1_diagnostics,
    random_ring_vector,
)

CTX_VERSION = 1
PROTOCOL_ID = b"zkams/admission"


def compute_cross_term(shape, first, second):
    """T = AZ1∘BZ2 + AZ2∘BZ1 − u1·CZ2 − u2·CZ1 for (x, u, W) triples."""
    (x1, u1, W1), (x2, u2, W2) = first, second
    az1, bz1, cz1 = shape.products(x1, u1, W1)
    az2, bz2, cz2 = shape.products(x2, u2, W2)
    p = shape.p
    u1, u2 = int(u1) % p, int(u2) % p
    return [(a1 * b2 + a2 * b1 - u1 * c2 - u2 * c1) % p
            for a1, b1, c1, a2, b2, c2 in zip(az1, bz1, cz1, az2, bz2, cz2)]


def vk_digest(shape, setup):
    """Stand-in for the folding verification key: the shape and commitment keys."""
    return digest("zkams/vk-nifs", shape.digest, setup.to_bytes())


def x_digest(X):
    """Digest of the batch input list of (hash_phc, pk_seed) pairs, in fold order."""
    return digest("zkams/batch-inputs", *(frame(encode_int(h, 32), bytes(pk)) for h, pk in X))


@dataclass(frozen=True)
class FoldContext:
    vk: bytes
    X_digest: bytes
    chain_id: int = 1
    batch_id: bytes = b""
    version: int = CTX_VERSION
    protocol_id: bytes = PROTOCOL_ID

    @property
    def binding(self):
        return digest("zkams/ctx-binding", self.vk, self.X_digest)

    def to_bytes(self):
        return frame(encode_int(self.version, 2), self.protocol_id, encode_int(self.chain_id, 8),
                     self.batch_id, self.binding)


def make_context(shape, setup, X, batch_id=b"", chain_id=1):
    return FoldContext(vk_digest(shape, setup), x_digest(X), chain_id, batch_id)


def _ctx_bytes(ctx):
    return ctx.to_bytes() if isinstance(ctx, FoldContext) else bytes(ctx)


@dataclass(frozen=True)
class FoldChallenge:
    v: FieldElement
    transcript_digest: bytes


def fold_challenge(ctx, E_bar_acc, W_bar_acc, E_bar_i, W_bar_i, T_bar, step_index, p=DEFAULT_PARAMS.p):
    d = digest("zkams/fold-challenge", _ctx_bytes(ctx), E_bar_acc.to_bytes(), W_bar_acc.to_bytes(),
               E_bar_i.to_bytes(), W_bar_i.to_bytes(), T_bar.to_bytes(), encode_int(step_index, 8))
    return FoldChallenge(FieldElement(int.from_bytes(d, "little") % p, p), d)


def derive_challenge(ctx, E_bar_acc, W_bar_acc, E_bar_i, W_bar_i, T_bar, step_index, p=DEFAULT_PARAMS.p):
    """v = H(ctx, Ē_acc, W̄_acc, Ē_i, W̄_i, T̄, i) reduced into F_p."""
    return fold_challenge(ctx, E_bar_acc, W_bar_acc, E_bar_i, W_bar_i, T_bar, step_index, p).v


def fold_instances(I1, I2, T_bar, v, p=DEFAULT_PARAMS.p):
    v = int(v) % p
    if len(I1.x) != len(I2.x):
        raise ParamMismatch("public input lengths differ")
    return CommittedRelaxedInstance(
        fold_error_commitment(I1.E_bar, T_bar, I2.E_bar, v),
        (I1.u + v * I2.u) % p,
        fold_commitments(I1.W_bar, I2.W_bar, v),
        tuple((a + v * b) % p for a, b in zip(I1.x, I2.x)),
    )


def fold_witnesses(W1, W2, T, r_T, v, p=DEFAULT_PARAMS.p):
    v = int(v) % p
    v2 = v * v % p
    return CommittedRelaxedWitness(
        tuple((a + v * t + v2 * b) % p for a, t, b in zip(W1.E, T, W2.E)),
        tuple(a + t * v + b * v2 for a, t, b in zip(W1.r_E, r_T, W2.r_E)),
        tuple((a + v * b) % p for a, b in zip(W1.W, W2.W)),
        tuple(a + b * v for a, b in zip(W1.r_W, W2.r_W)),
    )


class FoldOutput(NamedTuple):
    instance: CommittedRelaxedInstance
    witness: CommittedRelaxedWitness
    T_bar: object


def fold_plain(shape, acc, new, ctx, step, setup, r_T=None, rng=None, check=True, algebra=DEFAULT_PARAMS):
    """Fold (I_acc, W_acc) with (I_i, W_i); returns the folded pair and T̄."""
    (I1, W1), (I2, W2) = acc, new
    if check:
        for label, (I, Wt) in (("accumulator", acc), ("incoming", new)):
            problems = c1_diagnostics(shape, I, Wt, setup)
            if problems:
                raise NotSatisfied(f"{label} pair fails C1: {'; '.join(problems)}")
    T = compute_cross_term(shape, (I1.x, I1.u, W1.W), (I2.x, I2.u, W2.W))
    if r_T is None:
        r_T = random_ring_vector(setup.T.l, algebra, rng or random.SystemRandom())
    T_bar = commit(setup.T, T, r_T)
    v = derive_challenge(ctx, I1.E_bar, I1.W_bar, I2.E_bar, I2.W_bar, T_bar, step, shape.p)
    return FoldOutput(fold_instances(I1, I2, T_bar, v, shape.p), fold_witnesses(W1, W2, T, r_T, v, shape.p), T_bar)


def nifs_verify(I_acc, I_new, T_bar, ctx, step, p=DEFAULT_PARAMS.p):
    """The folded public instance, computed from public data only."""
    v = derive_challenge(ctx, I_acc.E_bar, I_acc.W_bar, I_new.E_bar, I_new.W_bar, T_bar, step, p)
    return fold_instances(I_acc, I_new, T_bar, v, p)
