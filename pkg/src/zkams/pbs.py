"""Batch finalization by the permissionless batch submitter.

After the members fuse a batch, the submitter folds in the public padding pair
once more, states the settlement claim (I_acc_N, T̄_{N+1}, I_acc_{N+1}) and
proves it with a pluggable proof system. The only bundled backend is
TRANSPARENT: its proof carries the folded openings and verification simply
re-runs every clause. It is sound but not zero-knowledge.
"""

from dataclasses import dataclass, field

from .algebra import DEFAULT_PARAMS
from .commit import commit
from .encoding import decode_residues, digest, encode_int, encode_residues, frame, unframe
from .errors import CtxBindingError, NotSatisfied, ProofRefused
from .nifs import FoldContext, compute_cross_term, fold_plain, nifs_verify, vk_digest, x_digest
from .relation.instances import CommittedRelaxedInstance, CommittedRelaxedWitness, check_c1

FIXED_PADDING = "FixedPadding"
NIFS_CONSISTENCY = "NifsConsistency"
C1 = "C1"
DEFAULT_T_SUB_BLOCKS = 10


@dataclass(frozen=True)
class PaddingPair:
    I_pad: CommittedRelaxedInstance
    W_pad: CommittedRelaxedWitness


def canonical_pad(shape, setup, algebra=DEFAULT_PARAMS):
    """The all-zero pair with zero randomness; satisfies relaxed R1CS as 0 = 0."""
    zero = algebra.ring.zero()
    r_E, r_W = (zero,) * setup.E.l, (zero,) * setup.W.l
    E, W = (0,) * shape.m_c, (0,) * shape.num_w
    inst = CommittedRelaxedInstance(commit(setup.E, E, r_E), 0, commit(setup.W, W, r_W), (0,) * shape.num_x)
    return PaddingPair(inst, CommittedRelaxedWitness(E, r_E, W, r_W))


@dataclass(frozen=True)
class PaddingFold:
    T: tuple
    T_bar: object
    I_next: CommittedRelaxedInstance
    W_next: CommittedRelaxedWitness
    step: int


def padding_fold(shape, setup, batch, pad, ctx, algebra=DEFAULT_PARAMS):
    """Step N+1: fold the materialized batch with the pad in the clear (r_T = 0)."""
    if not check_c1(shape, batch.I_acc_N, batch.W_acc_N, setup):
        raise NotSatisfied("materialized batch fails C1")
    r_T = (algebra.ring.zero(),) * setup.T.l
    step = batch.size + 1
    out = fold_plain(shape, (batch.I_acc_N, batch.W_acc_N), (pad.I_pad, pad.W_pad), ctx, step, setup,
                     r_T=r_T, check=False, algebra=algebra)
    T = compute_cross_term(shape, (batch.x_f, batch.u_f, batch.W_f), (pad.I_pad.x, pad.I_pad.u, pad.W_pad.W))
    return PaddingFold(tuple(T), out.T_bar, out.instance, out.witness, step)


# ---------------------------------------------------------------- statement and proof

@dataclass(frozen=True)
class SettlementStatement:
    I_acc_N: CommittedRelaxedInstance
    T_bar: object
    I_acc_next: CommittedRelaxedInstance
    ctx: FoldContext
    step: int

    def to_bytes(self):
        return frame(b"zkams/settlement/v1", self.I_acc_N.to_bytes(), self.T_bar.to_bytes(),
                     self.I_acc_next.to_bytes(), self.ctx.to_bytes(), self.ctx.vk, self.ctx.X_digest,
                     encode_int(self.step, 8))

    @property
    def digest(self):
        return digest("zkams/settlement", self.to_bytes())


@dataclass(frozen=True)
class SettlementProof:
    backend: str
    payload: bytes

    def to_bytes(self):
        return frame(self.backend.encode(), self.payload)


def _encode_ring_vector(vec, t):
    return frame(*(encode_residues(e.coeffs, t) for e in vec))


def _decode_ring_vector(data, ring, length):
    parts = unframe(data)
    if len(parts) != length:
        raise ValueError("ring vector length")
    return tuple(ring(decode_residues(p, ring.t)) for p in parts)


class TransparentProofSystem:
    """Proof = statement digest, the pad and the folded witness; verify re-checks all clauses."""

    name = "transparent"

    def __init__(self, shape, setup, algebra=DEFAULT_PARAMS):
        self.shape = shape
        self.setup = setup
        self.algebra = algebra
        self.pad = canonical_pad(shape, setup, algebra)
        self.vk = vk_digest(shape, setup)

    def refusal(self, statement, I_pad, W_next):
        """The first violated clause, or None."""
        if I_pad != self.pad.I_pad:
            return FIXED_PADDING
        if statement.ctx.vk != self.vk:
            return NIFS_CONSISTENCY
        expected = nifs_verify(statement.I_acc_N, I_pad, statement.T_bar, statement.ctx, statement.step,
                               self.shape.p)
        if expected != statement.I_acc_next:
            return NIFS_CONSISTENCY
        if not check_c1(self.shape, statement.I_acc_next, W_next, self.setup):
            return C1
        return None

    def prove(self, statement, I_pad, W_next):
        clause = self.refusal(statement, I_pad, W_next)
        if clause is not None:
            raise ProofRefused(clause)
        p, t = self.shape.p, self.algebra.t
        payload = frame(statement.digest, I_pad.to_bytes(p),
                        encode_residues(W_next.E, p), _encode_ring_vector(W_next.r_E, t),
                        encode_residues(W_next.W, p), _encode_ring_vector(W_next.r_W, t))
        return SettlementProof(self.name, payload)

    def verify(self, statement, proof):
        if not isinstance(proof, SettlementProof) or proof.backend != self.name:
            return False
        try:
            st_digest, pad_bytes, E, r_E, W, r_W = unframe(proof.payload)
            if st_digest != statement.digest or pad_bytes != self.pad.I_pad.to_bytes(self.shape.p):
                return False
            ring, p = self.algebra.ring, self.shape.p
            witness = CommittedRelaxedWitness(
                tuple(decode_residues(E, p)), _decode_ring_vector(r_E, ring, self.setup.E.l),
                tuple(decode_residues(W, p)), _decode_ring_vector(r_W, ring, self.setup.W.l))
            if len(witness.E) != self.shape.m_c or len(witness.W) != self.shape.num_w:
                return False
        except ValueError:
            return False
        return self.refusal(statement, self.pad.I_pad, witness) is None


def settlement_statement(batch, fold, ctx):
    return SettlementStatement(batch.I_acc_N, fold.T_bar, fold.I_next, ctx, fold.step)


def prove_settlement(statement, private, proof_system):
    """private = (I_pad, W_acc_{N+1}); raises ProofRefused naming the violated clause."""
    I_pad, W_next = private
    return proof_system.prove(statement, I_pad, W_next)


def verify_settlement(statement, proof, proof_system):
    return bool(proof_system.verify(statement, proof))


# ---------------------------------------------------------------- submission

@dataclass(frozen=True)
class BatchSubmission:
    X: tuple  # (hash_phc, pk_seed) pairs in fold order
    statement: SettlementStatement
    proof: SettlementProof

    @property
    def size(self):
        return len(self.X)


def _pair(cred):
    if hasattr(cred, "hash_phc"):
        return int(cred.hash_phc), bytes(cred.pk_seed)
    h, pk = cred
    return int(h), bytes(pk)


def assemble_submission(statement, proof, credentials):
    """Compact the participants' (hash_phc, pk_seed) into X; it must reproduce the fold context."""
    X = tuple(_pair(c) for c in credentials)
    if not X or x_digest(X) != statement.ctx.X_digest:
        raise CtxBindingError("credential list does not match the batch context")
    return BatchSubmission(X, statement, proof)


def finalize_batch(shape, setup, batch, ctx, X, proof_system, algebra=DEFAULT_PARAMS):
    """Padding fold, statement, proof and submission for a fused batch."""
    fold = padding_fold(shape, setup, batch, proof_system.pad, ctx, algebra)
    statement = settlement_statement(batch, fold, ctx)
    proof = prove_settlement(statement, (proof_system.pad.I_pad, fold.W_next), proof_system)
    return assemble_submission(statement, proof, X)


# ---------------------------------------------------------------- timeout

@dataclass
class PendingBatch:
    batch_id: bytes
    users: list
    opened_at: int  # block height
    finalized: bool = field(default=False)

    def expired(self, height, t_sub=DEFAULT_T_SUB_BLOCKS):
        return not self.finalized and height - self.opened_at >= t_sub


def requeue_expired(pending, height, t_sub=DEFAULT_T_SUB_BLOCKS):
    """Split pending batches into (still open, users to re-queue from expired ones)."""
    keep, requeue = [], []
    for b in pending:
        if b.expired(height, t_sub):
            requeue.extend(b.users)
        else:
            keep.append(b)
    return keep, requeue
