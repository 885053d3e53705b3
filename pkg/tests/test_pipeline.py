import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkams import pipeline
from zkams.algebra import DEFAULT_PARAMS
from zkams.commit import Commitment, commit, zero_commitment
from zkams.errors import DepthExceeded, IncompleteContribution, IncompleteShares
from zkams.mkhe import MultiKeyCiphertext, constant_terms, get_backend
from zkams.mlsags import lrs_keygen
from zkams.nifs import compute_cross_term, derive_challenge, fold_plain
from zkams.pipeline import (
    VARIABLES,
    batch_context,
    encrypted_commit_cross_term,
    encrypted_cross_term,
    fold_step_encrypted,
    init_accumulator,
    make_member,
    order_members,
    replay_transcript,
    run_encrypted_batch,
)
from zkams.relation.instances import CommittedRelaxedInstance, CommittedRelaxedWitness
from zkams.store import ContentStore

A = DEFAULT_PARAMS
P = A.p
BACKENDS = ["transparent", "rlwe"]


def members_for(be, clients, rng, prefix="u"):
    return [make_member(be, f"{prefix}{i}", c.instance, c.witness, (c.phc.hash(P), lrs_keygen(rng).pk), rng)
            for i, c in enumerate(clients)]


def member_from_pair(be, pid, inst, wit, rng):
    return make_member(be, pid, inst, wit, (rng.randrange(P), lrs_keygen(rng).pk), rng)


def open_ct(be, members, ct, rng):
    for m in members:
        if be.needs_linearization(ct) and m.party_id in ct.key_set:
            ct = m.linearize(ct, rng)
    return be.combine([m.share(ct, rng) for m in members if m.party_id in ct.key_set], ct)


def oracle_chain(shape, setup, pairs, members, run):
    acc = pairs[0]
    for i in range(1, len(pairs)):
        r_T = members[i].r_T_log[(run.ctx.batch_id, i + 1)]
        out = fold_plain(shape, acc, pairs[i], run.ctx, i + 1, setup, r_T=r_T, check=False)
        acc = (out.instance, out.witness)
    return acc


def zero_pair(shape, setup):
    zero = A.ring.zero()
    r_E, r_W = (zero,) * setup.E.l, (zero,) * setup.W.l
    E, W = (0,) * shape.m_c, (0,) * shape.num_w
    inst = CommittedRelaxedInstance(commit(setup.E, E, r_E), 0, commit(setup.W, W, r_W), (0,) * shape.num_x)
    return inst, CommittedRelaxedWitness(E, r_E, W, r_W)


def corrupt_pair(setup, client, index=5):
    W = list(client.witness.W)
    W[index] = (W[index] + 1) % P
    W_bar = commit(setup.W, W, client.witness.r_W)
    return replace(client.instance, W_bar=W_bar), replace(client.witness, W=tuple(W))


@pytest.fixture(scope="module")
def tp():
    return get_backend("transparent")


@pytest.fixture(scope="module")
def run3(shape, setup, clients, tp):
    rng = random.Random(31)
    members = members_for(tp, clients[:3], rng)
    return run_encrypted_batch(tp, shape, setup, members, b"run3", rng, ContentStore())


# ---------------------------------------------------------------- init

def test_init_decrypts_to_user_plaintext(shape, setup, clients, tp):
    rng = random.Random(1)
    (m,) = members_for(tp, clients[:1], rng)
    c = clients[0]
    ctx = batch_context(shape, setup, [m], b"init")
    acc = init_accumulator(m.contribution, ctx)
    assert acc.step == 1
    assert acc.E_bar_acc == c.instance.E_bar and acc.W_bar_acc == c.instance.W_bar
    got = {v: open_ct(tp, [m], acc.enc[v], rng) for v in VARIABLES}
    assert constant_terms(got["x"]) == list(c.instance.x)
    assert constant_terms(got["u"]) == [1]
    assert constant_terms(got["E"]) == list(c.witness.E)
    assert constant_terms(got["W"]) == list(c.witness.W)
    assert got["r_E"] == list(c.witness.r_E) and got["r_W"] == list(c.witness.r_W)


def test_init_missing_variable(shape, setup, clients, tp):
    rng = random.Random(2)
    (m,) = members_for(tp, clients[:1], rng)
    enc = {k: v for k, v in m.contribution.enc.items() if k != "r_W"}
    ctx = batch_context(shape, setup, [m], b"x")
    with pytest.raises(IncompleteContribution):
        init_accumulator(replace(m.contribution, enc=enc), ctx)


def test_empty_batch_rejected(shape, setup, tp):
    with pytest.raises(IncompleteContribution):
        run_encrypted_batch(tp, shape, setup, [], b"empty")


# ---------------------------------------------------------------- cross term

def test_cross_term_with_zero_pad_is_zero(shape, setup, clients, tp):
    rng = random.Random(3)
    (m,) = members_for(tp, clients[:1], rng)
    pad = member_from_pair(tp, "pad", *zero_pair(shape, setup), rng)
    ct = encrypted_cross_term(tp, shape, m.contribution, pad.contribution)
    assert constant_terms(open_ct(tp, [m, pad], ct, rng)) == [0] * shape.m_c


@pytest.mark.parametrize("name", BACKENDS)
def test_cross_term_matches_oracle_and_is_symmetric(shape, clients, name):
    be = get_backend(name)
    rng = random.Random(4)
    members = members_for(be, clients[:2], rng)
    triples = [(c.instance.x, c.instance.u, c.witness.W) for c in clients[:2]]
    expected = compute_cross_term(shape, *triples)
    c1, c2 = (m.contribution for m in members)
    ab = encrypted_cross_term(be, shape, c1, c2)
    ba = encrypted_cross_term(be, shape, c2, c1)
    assert ab.level == 1
    assert constant_terms(open_ct(be, members, ab, rng)) == expected
    assert constant_terms(open_ct(be, members, ba, rng)) == expected


def test_cross_term_of_level_one_operands(shape, clients, tp):
    rng = random.Random(5)
    members = members_for(tp, clients[:2], rng)
    c1, c2 = (m.contribution for m in members)
    prod = tp.ct_mul(c1.enc["u"], c2.enc["u"])
    deep = replace(c1, enc=dict(c1.enc, u=prod))
    with pytest.raises(DepthExceeded):
        encrypted_cross_term(tp, shape, deep, c2)


def test_zero_cross_term_commits_to_zero(setup, tp):
    rng = random.Random(6)
    m = pipeline.BatchMember(tp, tp.keygen("a", rng), None)
    ct_T = tp.encrypt(m.keypair.pk, [0] * setup.T.m, rng)
    c_rT = tp.encrypt(m.keypair.pk, [0] * setup.T.l, rng)
    ct_Tbar, T_bar = encrypted_commit_cross_term(tp, ct_T, c_rT, setup.T, [m], rng)
    assert isinstance(ct_Tbar, MultiKeyCiphertext)
    assert T_bar == zero_commitment(setup.T)


@pytest.mark.parametrize("name", BACKENDS)
def test_committed_cross_term_matches_plain_commit(shape, setup, clients, name):
    be = get_backend(name)
    rng = random.Random(7)
    members = members_for(be, clients[:2], rng)
    run = run_encrypted_batch(be, shape, setup, members, b"tbar", rng)
    T = compute_cross_term(shape, *((c.instance.x, c.instance.u, c.witness.W) for c in clients[:2]))
    r_T = members[1].r_T_log[(b"tbar", 2)]
    assert run.accumulator.transcript.records[0].T_bar == commit(setup.T, T, r_T)


def test_withheld_share_blocks_the_fold(shape, setup, clients, tp):
    rng = random.Random(8)
    members = members_for(tp, clients[:2], rng)
    members[0].withhold = True
    with pytest.raises(IncompleteShares):
        run_encrypted_batch(tp, shape, setup, members, b"withhold", rng)


def test_cross_randomness_key_set(shape, setup, clients, tp):
    rng = random.Random(9)
    members = members_for(tp, clients[:2], rng)
    ct_T = encrypted_cross_term(tp, shape, members[0].contribution, members[1].contribution)
    ctx = batch_context(shape, setup, members, b"ks")
    c_rT = members[1].cross_randomness(ctx, 2, setup, rng)
    ct_Tbar, _ = encrypted_commit_cross_term(tp, ct_T, c_rT, setup.T, members, rng)
    assert c_rT.key_set == ("u1",)
    assert ct_Tbar.key_set == ct_T.key_set == ("u0", "u1")


# ---------------------------------------------------------------- fold chain

@pytest.mark.parametrize("name", BACKENDS)
def test_three_fold_oracle(shape, setup, clients, name):
    be = get_backend(name)
    rng = random.Random(10)
    members = members_for(be, clients[:3], rng)
    run = run_encrypted_batch(be, shape, setup, members, b"oracle3", rng)
    pairs = [(c.instance, c.witness) for c in clients[:3]]
    inst, wit = oracle_chain(shape, setup, pairs, members, run)
    b = run.batch
    assert (b.x_f, b.u_f, b.E_f, b.r_Ef, b.W_f, b.r_Wf) == (inst.x, inst.u, wit.E, wit.r_E, wit.W, wit.r_W)
    assert b.I_acc_N == inst and b.W_acc_N == wit
    assert run.ok and b.size == 3


def test_fold_with_zero_pad_keeps_field_variables(shape, setup, clients, tp):
    rng = random.Random(11)
    first = members_for(tp, clients[:1], rng)[0]
    pad = member_from_pair(tp, "pad", *zero_pair(shape, setup), rng)
    run = run_encrypted_batch(tp, shape, setup, [first, pad], b"pad", rng)
    c = clients[0]
    v = run.accumulator.transcript.records[0].v
    r_T = pad.r_T_log[(b"pad", 2)]
    assert run.batch.x_f == c.instance.x and run.batch.u_f == 1 and run.batch.W_f == c.witness.W
    assert run.batch.E_f == c.witness.E
    assert run.batch.r_Ef == tuple(a + t * v for a, t in zip(c.witness.r_E, r_T))
    assert run.batch.r_Wf == c.witness.r_W


def test_u_f_is_the_challenge_sum(run3):
    recs = run3.accumulator.transcript.records
    assert run3.batch.u_f == (1 + recs[0].v + recs[1].v) % P


def test_honest_batch_of_four_passes_c1(shape, setup, clients, tp):
    rng = random.Random(12)
    run = run_encrypted_batch(tp, shape, setup, members_for(tp, clients[:4], rng), b"four", rng)
    assert run.ok


def test_tampered_commitment_fails_c1(shape, setup, clients, tp):
    rng = random.Random(13)
    members = members_for(tp, clients[:3], rng)
    m = members[1]
    m.contribution = replace(m.contribution, E_bar=clients[2].instance.E_bar)
    run = run_encrypted_batch(tp, shape, setup, members, b"tamper", rng)
    assert not run.ok


def test_unsatisfying_witness_fails_c1(shape, setup, clients, tp):
    rng = random.Random(14)
    members = members_for(tp, clients[:2], rng)
    bad = member_from_pair(tp, "bad", *corrupt_pair(setup, clients[2]), rng)
    run = run_encrypted_batch(tp, shape, setup, members + [bad], b"bad", rng)
    assert not run.ok


def test_admit_batch_excludes_faulty_member(shape, setup, clients, tp):
    rng = random.Random(15)
    members = members_for(tp, clients[:4], rng)
    members[2] = member_from_pair(tp, "u2", *corrupt_pair(setup, clients[2]), rng)
    run, faulty = pipeline.admit_batch(tp, shape, setup, members, b"admit", rng)
    assert [m.party_id for m in faulty] == ["u2"]
    assert run is not None and run.ok
    assert [m.party_id for m in run.members] == ["u0", "u1", "u3"]


def test_admit_batch_honest_needs_no_restart(shape, setup, clients, tp):
    rng = random.Random(16)
    run, faulty = pipeline.admit_batch(tp, shape, setup, members_for(tp, clients[:2], rng), b"ok", rng)
    assert faulty == [] and run.ctx.batch_id == b"ok"


def test_order_members_by_address(clients, tp):
    rng = random.Random(17)
    members = members_for(tp, clients[:4], rng)
    ordered = order_members(reversed(members))
    assert [m.contribution.address for m in ordered] == sorted(m.contribution.address for m in members)


def test_user_and_submitter_modes_give_identical_transcripts(shape, setup, clients, tp):
    members = members_for(tp, clients[:3], random.Random(18))
    rng = random.Random(99)
    by_users = run_encrypted_batch(tp, shape, setup, members, b"mode", rng)
    # the submitter drives the same steps, asking each member only for linearization, r_T and shares
    rng = random.Random(99)
    ctx = batch_context(shape, setup, members, b"mode")
    acc = init_accumulator(members[0].contribution, ctx)
    for i in range(1, 3):
        acc = fold_step_encrypted(tp, shape, acc, members[i], ctx, setup, members[:i], rng)
    assert acc.transcript.digest == by_users.accumulator.transcript.digest
    assert [r.to_bytes() for r in acc.transcript.records] == \
        [r.to_bytes() for r in by_users.accumulator.transcript.records]


# ---------------------------------------------------------------- transcript

def test_transcript_replays(run3):
    t = run3.accumulator.transcript
    assert len(t.records) == 2
    assert replay_transcript(t, run3.ctx)
    assert t.records[1].prev == t.addresses[0]


def test_transcript_records_are_stored(shape, setup, clients, tp):
    rng = random.Random(19)
    store = ContentStore()
    run = run_encrypted_batch(tp, shape, setup, members_for(tp, clients[:3], rng), b"st", rng, store)
    from zkams.store import ContentAddress
    for rec, addr in zip(run.accumulator.transcript.records, run.accumulator.transcript.addresses):
        assert store.get(ContentAddress(addr)) == rec.to_bytes()


def test_transcript_bound_to_context(run3, shape, setup):
    other = batch_context(shape, setup, list(reversed(run3.members)), run3.ctx.batch_id)
    assert not replay_transcript(run3.accumulator.transcript, other)


def _flip(c, pos):
    coeffs = [list(row) for row in c.value]
    n = len(coeffs[0])
    row, col = divmod(pos % (len(coeffs) * n), n)
    coeffs[row][col] = (coeffs[row][col] + 1) % c.t
    return Commitment(tuple(tuple(r) for r in coeffs), c.key_id, c.t)


@given(st.integers(0, 10**6), st.sampled_from(["E_bar_acc", "W_bar_acc", "E_bar_i", "W_bar_i", "T_bar"]))
@settings(max_examples=40, deadline=None)
def test_transcript_avalanche(run3, pos, name):
    t = run3.accumulator.transcript
    rec = t.records[0]
    mutated = replace(rec, **{name: _flip(getattr(rec, name), pos)})
    v = derive_challenge(run3.ctx, mutated.E_bar_acc, mutated.W_bar_acc, mutated.E_bar_i, mutated.W_bar_i,
                         mutated.T_bar, mutated.step, P)
    assert v.value != rec.v
    bad = pipeline.FoldTranscript(t.ctx, t.X_digest, [mutated] + t.records[1:], list(t.addresses))
    assert not replay_transcript(bad, run3.ctx)


# ---------------------------------------------------------------- exposure

def test_fused_components_differ_from_every_user(shape, setup, clients, tp):
    rng = random.Random(20)
    for N in (2, 3, 4):
        run = run_encrypted_batch(tp, shape, setup, members_for(tp, clients[:N], rng), b"hide%d" % N, rng)
        for c in clients[:N]:
            assert run.batch.W_f != c.witness.W
            assert run.batch.x_f != c.instance.x
            assert run.batch.r_Wf != c.witness.r_W


def test_no_plaintext_cross_term_in_api():
    public = [n for n in dir(pipeline) if not n.startswith("_") and callable(getattr(pipeline, n))]
    for name in public:
        assert "plain" not in name.lower() or name == "MaterializedBatch"
        assert not name.lower().startswith(("decrypt", "reveal"))
    assert not hasattr(pipeline, "compute_cross_term")
    assert not hasattr(pipeline.MaterializedBatch, "T")
    fields = pipeline.FoldRecord.__dataclass_fields__
    assert set(fields) == {"step", "E_bar_acc", "W_bar_acc", "E_bar_i", "W_bar_i", "T_bar", "v", "prev"}
