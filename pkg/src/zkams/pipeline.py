"""Encrypted folding of a batch of committed relaxed instances.

Each batch member publishes its instance parts encrypted under its own MKHE
key. The accumulator is folded one member at a time: the cross-term is
evaluated homomorphically, committed inside the encrypted domain and only the
commitment T̄ is decrypted jointly. After the last member the parties release
decryption shares for the six accumulated variables, which fuse into a
plaintext folded pair that the batch submitter finalizes.

Nothing here returns a plaintext cross-term.
"""

import random
from dataclasses import dataclass, field, replace

from .algebra import DEFAULT_PARAMS
from .commit import Commitment, fold_commitments, fold_error_commitment
from .encoding import digest, encode_int, frame
from .errors import IncompleteContribution, IncompleteShares, NotSatisfied, ParamMismatch
from .mkhe import RingMatrix, constant_terms
from .nifs import derive_challenge, make_context
from .relation.instances import (
    CommittedRelaxedInstance,
    CommittedRelaxedWitness,
    check_c1,
    random_ring_vector,
)

VARIABLES = ("x", "u", "E", "r_E", "W", "r_W")
FIELD_VARIABLES = ("x", "u", "E", "W")
RECORD_VERSION = 1


# ---------------------------------------------------------------- members

@dataclass(frozen=True)
class Contribution:
    """What a member publishes before folding: ciphertexts, commitments and its X entry."""

    party_id: str
    enc: dict
    E_bar: Commitment
    W_bar: Commitment
    credential: tuple  # (hash_phc, pk_seed)

    @property
    def address(self):
        return digest("zkams/contribution", self.party_id.encode(),
                      *(self.enc[v].digest for v in VARIABLES),
                      self.E_bar.to_bytes(), self.W_bar.to_bytes(),
                      encode_int(self.credential[0], 32), bytes(self.credential[1]))


class BatchMember:
    """A batch participant: holds its MKHE secret and answers linearization and share requests."""

    def __init__(self, backend, keypair, contribution, withhold=False):
        self.backend = backend
        self.keypair = keypair
        self.contribution = contribution
        self.withhold = withhold
        self.r_T_log = {}

    @property
    def party_id(self):
        return self.keypair.party_id

    def cross_randomness(self, ctx, step, setup, rng=None, algebra=DEFAULT_PARAMS):
        """Fresh r_T for one fold, encrypted under this member's key."""
        r_T = random_ring_vector(setup.T.l, algebra, rng or random.SystemRandom())
        self.r_T_log[(ctx.batch_id, step)] = r_T
        return self.backend.encrypt(self.keypair.pk, list(r_T), rng)

    def linearize(self, ct, rng=None):
        return self.backend.linearize(self.keypair, ct, rng)

    def share(self, ct, rng=None):
        if self.withhold:
            return None
        return self.backend.partial_decrypt(self.keypair, ct, rng)


def make_member(backend, party_id, instance, witness, credential, rng=None):
    """Client step: key generation and encryption of the six credential variables."""
    kp = backend.keygen(party_id, rng)
    plain = {"x": list(instance.x), "u": [instance.u], "E": list(witness.E), "r_E": list(witness.r_E),
             "W": list(witness.W), "r_W": list(witness.r_W)}
    enc = {v: backend.encrypt(kp.pk, plain[v], rng) for v in VARIABLES}
    contribution = Contribution(party_id, enc, instance.E_bar, instance.W_bar, tuple(credential))
    return BatchMember(backend, kp, contribution)


def order_members(members):
    """Arrival order with ties broken by content address."""
    return sorted(members, key=lambda m: m.contribution.address)


# ---------------------------------------------------------------- transcript

@dataclass(frozen=True)
class FoldRecord:
    step: int
    E_bar_acc: Commitment
    W_bar_acc: Commitment
    E_bar_i: Commitment
    W_bar_i: Commitment
    T_bar: Commitment
    v: int
    prev: bytes = b""

    def to_bytes(self):
        return frame(encode_int(RECORD_VERSION, 2), encode_int(self.step, 8), self.E_bar_acc.to_bytes(),
                     self.W_bar_acc.to_bytes(), self.E_bar_i.to_bytes(), self.W_bar_i.to_bytes(),
                     self.T_bar.to_bytes(), encode_int(self.v, 8), self.prev)


@dataclass
class FoldTranscript:
    ctx: bytes
    X_digest: bytes
    records: list = field(default_factory=list)
    addresses: list = field(default_factory=list)

    def append(self, record, store=None):
        data = record.to_bytes()
        self.records.append(record)
        self.addresses.append(store.put(data).digest if store is not None else digest("zkams/store/object", data))

    @property
    def head(self):
        return self.addresses[-1] if self.addresses else digest("zkams/transcript/genesis", self.ctx)

    @property
    def digest(self):
        return digest("zkams/transcript", self.ctx, self.X_digest, *self.addresses)


def replay_transcript(transcript, ctx, p=DEFAULT_PARAMS.p):
    """Recompute every challenge and check the commitment chain; True iff consistent."""
    if transcript.ctx != ctx.to_bytes() or transcript.X_digest != ctx.X_digest:
        return False
    E_acc = W_acc = None
    prev = b""
    for rec in transcript.records:
        if rec.prev != prev:
            return False
        if E_acc is not None and (rec.E_bar_acc != E_acc or rec.W_bar_acc != W_acc):
            return False
        v = derive_challenge(ctx, rec.E_bar_acc, rec.W_bar_acc, rec.E_bar_i, rec.W_bar_i, rec.T_bar, rec.step, p)
        if v.value != rec.v:
            return False
        E_acc = fold_error_commitment(rec.E_bar_acc, rec.T_bar, rec.E_bar_i, rec.v)
        W_acc = fold_commitments(rec.W_bar_acc, rec.W_bar_i, rec.v)
        prev = digest("zkams/store/object", rec.to_bytes())
    return True


# ---------------------------------------------------------------- accumulator

@dataclass(frozen=True)
class AccumulatorState:
    enc: dict
    E_bar_acc: Commitment
    W_bar_acc: Commitment
    step: int
    batch_id: bytes
    transcript: FoldTranscript = field(compare=False, repr=False)
    products: tuple = field(default=None, compare=False, repr=False)  # encrypted (AZ, BZ, CZ)

    @property
    def key_set(self):
        return tuple(sorted(set().union(*(ct.key_set for ct in self.enc.values()))))


def _require_complete(contribution, needed=VARIABLES):
    missing = [v for v in needed if v not in contribution.enc]
    if missing:
        raise IncompleteContribution(f"{contribution.party_id} did not provide {', '.join(missing)}")


def init_accumulator(contribution, ctx, store=None):
    """The first member's ciphertexts and commitments become the accumulator (step 1)."""
    _require_complete(contribution)
    transcript = FoldTranscript(ctx.to_bytes(), ctx.X_digest)
    enc = {v: contribution.enc[v] for v in VARIABLES}
    return AccumulatorState(enc, contribution.E_bar, contribution.W_bar, 1, ctx.batch_id, transcript)


def encrypted_products(backend, shape, enc):
    """Encryptions of (AZ, BZ, CZ) for Z = (W, x, u)."""
    z = backend.concat([enc["W"], enc["x"], enc["u"]])
    if z.plain_len != shape.num_z:
        raise ParamMismatch(f"encrypted Z has {z.plain_len} entries, shape expects {shape.num_z}")
    return tuple(backend.matrix_mul(M, z) for M in (shape.A, shape.B, shape.C))


def _products_of(backend, shape, obj):
    cached = getattr(obj, "products", None)
    return cached if cached is not None else encrypted_products(backend, shape, obj.enc)


def _cross_from_products(backend, u1, prod1, u2, prod2):
    (az1, bz1, cz1), (az2, bz2, cz2) = prod1, prod2
    return backend.bilinear([(1, az1, bz2), (1, az2, bz1), (-1, u1, cz2), (-1, u2, cz1)])


def encrypted_cross_term(backend, shape, first, second):
    """ĉ_T = AZ1⊗BZ2 ⊕ AZ2⊗BZ1 ⊕ (−1)⊙u1⊗CZ2 ⊕ (−1)⊙u2⊗CZ1 over two encrypted (x, u, W) sets.

    ``first`` and ``second`` are accumulator states or contributions.
    """
    return _cross_from_products(backend, first.enc["u"], _products_of(backend, shape, first),
                                second.enc["u"], _products_of(backend, shape, second))


def collect_shares(members, ct, rng=None):
    """Ask every member in the ciphertext's key set for a share; withheld shares are skipped."""
    by_id = {m.party_id: m for m in members}
    shares = []
    for pid in ct.key_set:
        m = by_id.get(pid)
        s = m.share(ct, rng) if m is not None else None
        if s is not None:
            shares.append(s)
    return shares


def encrypted_commit_cross_term(backend, ct_T, c_rT, pp_T, members, rng=None):
    """ĉ_T̄ = G_T·c_{r_T} ⊕ H_T·ĉ_T, then joint decryption of ĉ_T̄ only."""
    if c_rT.plain_len != pp_T.l or ct_T.plain_len != pp_T.m:
        raise ParamMismatch("cross-term or randomness length does not fit the commitment key")
    ct_Tbar = backend.add(backend.matrix_mul(RingMatrix(pp_T.G, pp_T.t), c_rT),
                          backend.matrix_mul(RingMatrix(pp_T.H, pp_T.t), ct_T))
    for m in members:
        if m.party_id in ct_Tbar.key_set:
            ct_Tbar = m.linearize(ct_Tbar, rng)
    values = backend.combine(collect_shares(members, ct_Tbar, rng), ct_Tbar)
    T_bar = Commitment(tuple(e.coeffs for e in values), pp_T.key_id, pp_T.t)
    return ct_Tbar, T_bar


def fold_step_encrypted(backend, shape, acc, member, ctx, setup, members, rng=None, store=None,
                        algebra=DEFAULT_PARAMS):
    """Fold one incoming member into the encrypted accumulator."""
    c = member.contribution
    _require_complete(c)
    if backend.t != shape.p:
        raise ParamMismatch("MKHE plaintext modulus must equal the field modulus")
    step = acc.step + 1
    p = shape.p

    acc_prod = _products_of(backend, shape, acc)
    new_prod = encrypted_products(backend, shape, c.enc)
    ct_T = member.linearize(_cross_from_products(backend, acc.enc["u"], acc_prod, c.enc["u"], new_prod), rng)
    c_rT = member.cross_randomness(ctx, step, setup, rng, algebra)
    participants = list(members) + [member]
    _, T_bar = encrypted_commit_cross_term(backend, ct_T, c_rT, setup.T, participants, rng)
    v = derive_challenge(ctx, acc.E_bar_acc, acc.W_bar_acc, c.E_bar, c.W_bar, T_bar, step, p).value
    v2 = v * v % p

    e = acc.enc
    lc = backend.lincomb
    enc = {name: lc([(1, e[name]), (v, c.enc[name])]) for name in ("x", "u", "W", "r_W")}
    enc["E"] = lc([(1, e["E"]), (v, ct_T), (v2, c.enc["E"])])
    enc["r_E"] = lc([(1, e["r_E"]), (v, c_rT), (v2, c.enc["r_E"])])
    record = FoldRecord(step, acc.E_bar_acc, acc.W_bar_acc, c.E_bar, c.W_bar, T_bar, v,
                        acc.transcript.addresses[-1] if acc.transcript.addresses else b"")
    acc.transcript.append(record, store)
    # A(Z + vZ_i) = AZ + v·AZ_i, so the products fold like every other linear variable
    products = tuple(lc([(1, a), (v, b)]) for a, b in zip(acc_prod, new_prod))
    return replace(acc, enc=enc, E_bar_acc=fold_error_commitment(acc.E_bar_acc, T_bar, c.E_bar, v),
                   W_bar_acc=fold_commitments(acc.W_bar_acc, c.W_bar, v), step=step, products=products)


# ---------------------------------------------------------------- fusion

@dataclass(frozen=True)
class MaterializedBatch:
    x_f: tuple
    u_f: int
    E_f: tuple
    r_Ef: tuple
    W_f: tuple
    r_Wf: tuple
    I_acc_N: CommittedRelaxedInstance
    W_acc_N: CommittedRelaxedWitness
    size: int = 0


def request_fusion_shares(acc, members, rng=None):
    """Stage 3: each member's shares for all six accumulated ciphertexts."""
    shares = {}
    for m in members:
        for v in VARIABLES:
            ct = acc.enc[v]
            if m.party_id in ct.key_set:
                s = m.share(ct, rng)
                if s is not None:
                    shares.setdefault(m.party_id, {})[v] = s
    return shares


def collect_and_fuse(backend, acc, shares):
    """Combine per-party share sets into the plaintext folded pair."""
    plain = {}
    for v in VARIABLES:
        ct = acc.enc[v]
        got = [s[v] for s in shares.values() if v in s]
        plain[v] = backend.combine(got, ct)
    for v in FIELD_VARIABLES:
        if any(not e.is_constant() for e in plain[v]):
            raise NotSatisfied(f"fused {v} is not a vector of field elements")
    x_f = tuple(constant_terms(plain["x"]))
    (u_f,) = constant_terms(plain["u"])
    E_f = tuple(constant_terms(plain["E"]))
    W_f = tuple(constant_terms(plain["W"]))
    r_Ef, r_Wf = tuple(plain["r_E"]), tuple(plain["r_W"])
    inst = CommittedRelaxedInstance(acc.E_bar_acc, u_f, acc.W_bar_acc, x_f)
    wit = CommittedRelaxedWitness(E_f, r_Ef, W_f, r_Wf)
    return MaterializedBatch(x_f, u_f, E_f, r_Ef, W_f, r_Wf, inst, wit, acc.step)


# ---------------------------------------------------------------- batch driver

@dataclass
class BatchRun:
    ctx: object
    members: list
    accumulator: AccumulatorState
    batch: MaterializedBatch
    ok: bool

    @property
    def X(self):
        return [m.contribution.credential for m in self.members]


def batch_context(shape, setup, members, batch_id, chain_id=1):
    return make_context(shape, setup, [m.contribution.credential for m in members], batch_id, chain_id)


def run_encrypted_batch(backend, shape, setup, members, batch_id, rng=None, store=None, chain_id=1,
                        algebra=DEFAULT_PARAMS):
    """Encrypted folding end to end for members already in fold order: fold chain, fusion, C1 check."""
    if not members:
        raise IncompleteContribution("a batch needs at least one member")
    ctx = batch_context(shape, setup, members, batch_id, chain_id)
    acc = init_accumulator(members[0].contribution, ctx, store)
    for i, m in enumerate(members[1:], start=1):
        acc = fold_step_encrypted(backend, shape, acc, m, ctx, setup, members[:i], rng, store, algebra)
    batch = collect_and_fuse(backend, acc, request_fusion_shares(acc, members, rng))
    return BatchRun(ctx, list(members), acc, batch, check_c1(shape, batch.I_acc_N, batch.W_acc_N, setup))


def _try_batch(backend, shape, setup, members, batch_id, rng, store, chain_id, algebra):
    try:
        return run_encrypted_batch(backend, shape, setup, members, batch_id, rng, store, chain_id, algebra)
    except (NotSatisfied, IncompleteShares):
        return None


def find_faulty(backend, shape, setup, members, batch_id, rng=None, store=None, chain_id=1,
                algebra=DEFAULT_PARAMS):
    """Members whose contributions break the fold, located by bisection over sub-batches."""
    run = _try_batch(backend, shape, setup, members, batch_id, rng, store, chain_id, algebra)
    if run is not None and run.ok:
        return []
    if len(members) == 1:
        return list(members)
    mid = len(members) // 2
    left = find_faulty(backend, shape, setup, members[:mid], batch_id + b"/L", rng, store, chain_id, algebra)
    right = find_faulty(backend, shape, setup, members[mid:], batch_id + b"/R", rng, store, chain_id, algebra)
    return left + right


def admit_batch(backend, shape, setup, members, batch_id, rng=None, store=None, chain_id=1,
                algebra=DEFAULT_PARAMS):
    """Run a batch; on a failed fuse, exclude the faulty members and restart once.

    Returns (run or None, excluded members).
    """
    run = _try_batch(backend, shape, setup, members, batch_id, rng, store, chain_id, algebra)
    if run is not None and run.ok:
        return run, []
    faulty = find_faulty(backend, shape, setup, members, batch_id + b"/probe", rng, store, chain_id, algebra)
    bad = {m.party_id for m in faulty}
    rest = [m for m in members if m.party_id not in bad]
    if not rest:
        return None, faulty
    run = _try_batch(backend, shape, setup, rest, batch_id + b"/restart", rng, store, chain_id, algebra)
    return (run if run is not None and run.ok else None), faulty
