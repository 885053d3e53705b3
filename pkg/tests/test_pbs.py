import inspect
import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkams import pbs
from zkams.errors import CtxBindingError, NotSatisfied, ProofRefused
from zkams.ledger import ALREADY_REGISTERED, VERIFICATION_FAILED, GasModel, Ledger
from zkams.mkhe import get_backend
from zkams.mlsags import lrs_keygen
from zkams.nifs import nifs_verify
from zkams.pipeline import make_member, run_encrypted_batch
from zkams.relation.instances import ResCredential, check_c1

P = 0xFFFFFFFF00000001


def _run(shape, setup, clients, batch_id, seed):
    be = get_backend("transparent")
    rng = random.Random(seed)
    members = [make_member(be, f"u{i}", c.instance, c.witness, (c.phc.hash(P), lrs_keygen(rng).pk), rng)
               for i, c in enumerate(clients)]
    return run_encrypted_batch(be, shape, setup, members, batch_id, rng)


@pytest.fixture(scope="module")
def ps(shape, setup):
    return pbs.TransparentProofSystem(shape, setup)


@pytest.fixture(scope="module")
def run_a(shape, setup, clients):
    return _run(shape, setup, clients[:3], b"A", 1)


@pytest.fixture(scope="module")
def run_b(shape, setup, clients):
    return _run(shape, setup, clients[3:5], b"B", 2)


@pytest.fixture(scope="module")
def sub_a(shape, setup, run_a, ps):
    return pbs.finalize_batch(shape, setup, run_a.batch, run_a.ctx, run_a.X, ps)


@pytest.fixture(scope="module")
def sub_b(shape, setup, run_b, ps):
    return pbs.finalize_batch(shape, setup, run_b.batch, run_b.ctx, run_b.X, ps)


def test_canonical_pad_satisfies_c1(shape, setup, ps):
    pad = ps.pad
    assert check_c1(shape, pad.I_pad, pad.W_pad, setup)
    assert pad.I_pad.u == 0 and set(pad.I_pad.x) == {0}
    assert pad == pbs.canonical_pad(shape, setup)


def test_padding_fold(shape, setup, run_a, ps):
    f = pbs.padding_fold(shape, setup, run_a.batch, ps.pad, run_a.ctx)
    assert set(f.T) == {0} and f.T_bar.is_zero()
    assert f.step == 4
    assert check_c1(shape, f.I_next, f.W_next, setup)
    assert nifs_verify(run_a.batch.I_acc_N, ps.pad.I_pad, f.T_bar, run_a.ctx, f.step) == f.I_next
    assert f.I_next.x == run_a.batch.x_f and f.I_next.u == run_a.batch.u_f
    assert f.W_next.W == run_a.batch.W_f and f.W_next.E == run_a.batch.E_f


def test_padding_fold_rejects_unsatisfied_batch(shape, setup, run_a, ps):
    W = list(run_a.batch.W_f)
    W[3] = (W[3] + 1) % P
    bad = replace(run_a.batch, W_acc_N=replace(run_a.batch.W_acc_N, W=tuple(W)))
    with pytest.raises(NotSatisfied):
        pbs.padding_fold(shape, setup, bad, ps.pad, run_a.ctx)


def test_honest_proof_verifies(sub_a, ps):
    assert pbs.verify_settlement(sub_a.statement, sub_a.proof, ps)
    assert sub_a.proof.backend == "transparent"


def test_refusal_clauses(shape, setup, run_a, run_b, sub_a, ps):
    st_a = sub_a.statement
    f = pbs.padding_fold(shape, setup, run_a.batch, ps.pad, run_a.ctx)
    odd_pad = replace(ps.pad.I_pad, x=(1,) + ps.pad.I_pad.x[1:])
    with pytest.raises(ProofRefused) as e:
        pbs.prove_settlement(st_a, (odd_pad, f.W_next), ps)
    assert e.value.clause == pbs.FIXED_PADDING
    stale = replace(st_a, I_acc_N=run_b.batch.I_acc_N)
    with pytest.raises(ProofRefused) as e:
        pbs.prove_settlement(stale, (ps.pad.I_pad, f.W_next), ps)
    assert e.value.clause == pbs.NIFS_CONSISTENCY
    W = list(f.W_next.W)
    W[0] = (W[0] + 1) % P
    with pytest.raises(ProofRefused) as e:
        pbs.prove_settlement(st_a, (ps.pad.I_pad, replace(f.W_next, W=tuple(W))), ps)
    assert e.value.clause == pbs.C1


def test_statement_swap_and_field_mutations(sub_a, sub_b, ps):
    assert not pbs.verify_settlement(sub_b.statement, sub_a.proof, ps)
    st_a = sub_a.statement
    for mutated in (replace(st_a, T_bar=sub_b.statement.I_acc_N.E_bar),
                    replace(st_a, I_acc_next=sub_b.statement.I_acc_next),
                    replace(st_a, I_acc_N=sub_b.statement.I_acc_N),
                    replace(st_a, step=st_a.step + 1),
                    replace(st_a, ctx=sub_b.statement.ctx)):
        assert not pbs.verify_settlement(mutated, sub_a.proof, ps)


def test_altered_cross_commitment(sub_a, ps):
    T = sub_a.statement.T_bar
    coeffs = [list(r) for r in T.value]
    coeffs[0][0] = (coeffs[0][0] + 1) % T.t
    altered = replace(T, value=tuple(tuple(r) for r in coeffs))
    assert not pbs.verify_settlement(replace(sub_a.statement, T_bar=altered), sub_a.proof, ps)


@given(st.integers(0, 10**9))
@settings(max_examples=30, deadline=None)
def test_bit_flipped_payload(sub_a, ps, pos):
    payload = bytearray(sub_a.proof.payload)
    bit = pos % (8 * len(payload))
    payload[bit // 8] ^= 1 << (bit % 8)
    forged = pbs.SettlementProof(sub_a.proof.backend, bytes(payload))
    assert not pbs.verify_settlement(sub_a.statement, forged, ps)


def test_foreign_backend_or_truncated_proof(sub_a, ps):
    assert not pbs.verify_settlement(sub_a.statement, pbs.SettlementProof("groth16", sub_a.proof.payload), ps)
    assert not pbs.verify_settlement(sub_a.statement, replace(sub_a.proof, payload=sub_a.proof.payload[:-9]), ps)
    assert not pbs.verify_settlement(sub_a.statement, b"junk", ps)


def test_assemble_submission_binding(run_a, sub_a):
    X = list(run_a.X)
    assert sub_a.X == tuple((h, bytes(pk)) for h, pk in X)
    with pytest.raises(CtxBindingError):
        pbs.assemble_submission(sub_a.statement, sub_a.proof, X[::-1])
    with pytest.raises(CtxBindingError):
        pbs.assemble_submission(sub_a.statement, sub_a.proof, X[:-1])
    with pytest.raises(CtxBindingError):
        pbs.assemble_submission(sub_a.statement, sub_a.proof, [])
    creds = [ResCredential(h, pk, None, None) for h, pk in X]
    assert pbs.assemble_submission(sub_a.statement, sub_a.proof, creds).X == sub_a.X


def test_ledger_settles_and_rejects_resubmission(sub_a, ps):
    led = Ledger(GasModel(), ps)
    assert led.verifier_submit(sub_a).ok
    assert led.verifier_submit(sub_a).reason == ALREADY_REGISTERED
    assert len(led.state.phc_registry) == 3


def test_ledger_rejects_forged_submissions(sub_a, sub_b, ps):
    led = Ledger(GasModel(), ps)
    forged = [
        replace(sub_a, X=sub_a.X[::-1]),
        replace(sub_a, X=sub_a.X[:-1]),
        replace(sub_a, statement=sub_b.statement),
        replace(sub_a, proof=sub_b.proof),
        replace(sub_a, X=sub_b.X),
    ]
    for sub in forged:
        assert led.verifier_submit(sub).reason == VERIFICATION_FAILED
    assert led.state.phc_registry == {}


def test_timeout_requeue():
    b1 = pbs.PendingBatch(b"a", ["u1", "u2"], opened_at=0)
    b2 = pbs.PendingBatch(b"b", ["u3"], opened_at=5)
    done = pbs.PendingBatch(b"c", ["u4"], opened_at=0, finalized=True)
    keep, requeue = pbs.requeue_expired([b1, b2, done], 9)
    assert requeue == [] and len(keep) == 3
    keep, requeue = pbs.requeue_expired([b1, b2, done], 10)
    assert requeue == ["u1", "u2"] and keep == [b2, done]


def test_submitter_consumes_only_fused_data():
    for fn in (pbs.padding_fold, pbs.finalize_batch, pbs.prove_settlement, pbs.assemble_submission):
        params = set(inspect.signature(fn).parameters)
        assert not params & {"run", "witness", "witnesses", "members", "keypair"}
