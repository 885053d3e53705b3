"""Committed relaxed instances, client-side generation and the C1 checker."""

import random
from dataclasses import dataclass

from ..algebra import DEFAULT_PARAMS
from ..commit import CommitSetup, commit
from ..encoding import encode_residues, frame
from ..errors import InconsistentCredential, NotSatisfied, ParamMismatch
from .phc import X_HASH, phc_hash
from .r1cs import check_r1cs

DEFAULT_COMMIT_SEED = b"zkams/public-parameters/v1"


@dataclass(frozen=True)
class CommittedRelaxedInstance:
    E_bar: object
    u: int
    W_bar: object
    x: tuple

    def to_bytes(self, p=DEFAULT_PARAMS.p):
        return frame(self.E_bar.to_bytes(), encode_residues([self.u], p), self.W_bar.to_bytes(),
                     encode_residues(self.x, p))


@dataclass(frozen=True)
class CommittedRelaxedWitness:
    E: tuple
    r_E: tuple
    W: tuple
    r_W: tuple


def commit_setup_for(shape, seed=DEFAULT_COMMIT_SEED, algebra=DEFAULT_PARAMS):
    return CommitSetup.create(seed, shape.m_c, shape.num_w, algebra=algebra)


def random_ring_vector(length, algebra, rng):
    ring = algebra.ring
    return tuple(ring.random(rng) for _ in range(length))


def client_generate(shape, x, W, setup, rng=None, algebra=DEFAULT_PARAMS):
    """Lift a satisfied R1CS pair to a committed relaxed instance with u = 1, E = 0."""
    if not check_r1cs(shape, x, W):
        raise NotSatisfied("client assignment does not satisfy the relation")
    rng = rng or random.SystemRandom()
    r_E = random_ring_vector(setup.E.l, algebra, rng)
    r_W = random_ring_vector(setup.W.l, algebra, rng)
    E = (0,) * shape.m_c
    W = tuple(int(v) % shape.p for v in W)
    x = tuple(int(v) % shape.p for v in x)
    inst = CommittedRelaxedInstance(commit(setup.E, E, r_E), 1, commit(setup.W, W, r_W), x)
    return inst, CommittedRelaxedWitness(E, r_E, W, r_W)


def c1_diagnostics(shape, instance, witness, setup):
    """Reasons the pair fails C1; an empty list means it passes."""
    problems = []
    try:
        if commit(setup.E, witness.E, witness.r_E) != instance.E_bar:
            problems.append("E_bar does not open to (E, r_E)")
        if commit(setup.W, witness.W, witness.r_W) != instance.W_bar:
            problems.append("W_bar does not open to (W, r_W)")
        groups = shape.failing_groups(instance.x, instance.u, witness.W, witness.E)
        rows = shape.failing_rows(instance.x, instance.u, witness.W, witness.E)
        if rows:
            problems.append(f"relaxed R1CS violated in {len(rows)} rows ({', '.join(groups) or 'ungrouped'})")
    except ParamMismatch as exc:
        problems.append(f"size mismatch: {exc}")
    return problems


def check_c1(shape, instance, witness, setup):
    """Opening consistency of Ē and W̄ plus relaxed satisfiability."""
    return not c1_diagnostics(shape, instance, witness, setup)


@dataclass(frozen=True)
class ResCredential:
    hash_phc: int
    pk_seed: bytes
    instance: CommittedRelaxedInstance
    witness: CommittedRelaxedWitness


def make_res_credential(phc, instance, witness, seed_keypair, p=DEFAULT_PARAMS.p):
    h = phc_hash(phc, p)
    if not instance.x or instance.x[X_HASH] != h:
        raise InconsistentCredential("instance public input does not carry the credential hash")
    pk = getattr(seed_keypair, "pk", seed_keypair)
    return ResCredential(h, bytes(pk), instance, witness)
