import random
from dataclasses import replace

import pytest

from zkams.algebra import DEFAULT_PARAMS
from zkams.commit import commit, zero_commitment
from zkams.errors import NotSatisfied
from zkams.nifs import (
    FoldContext,
    compute_cross_term,
    derive_challenge,
    fold_challenge,
    fold_plain,
    make_context,
    nifs_verify,
)
from zkams.relation import (
    CommittedRelaxedInstance,
    CommittedRelaxedWitness,
    check_c1,
    check_relaxed,
)

P = DEFAULT_PARAMS.p
R = DEFAULT_PARAMS.ring


def zero_pad(shape, setup):
    r0 = tuple(R.zero() for _ in range(setup.E.l))
    inst = CommittedRelaxedInstance(zero_commitment(setup.E), 0, zero_commitment(setup.W), (0,) * shape.num_x)
    wit = CommittedRelaxedWitness((0,) * shape.m_c, r0, (0,) * shape.num_w, r0)
    return inst, wit


@pytest.fixture(scope="module")
def ctx(shape, setup):
    return make_context(shape, setup, [(i, bytes([i]) * 32) for i in range(4)], batch_id=b"batch-0")


@pytest.fixture(scope="module")
def folded_pair(shape, setup, clients, ctx):
    a, b = clients[0], clients[1]
    out = fold_plain(shape, (a.instance, a.witness), (b.instance, b.witness), ctx, 2, setup, rng=random.Random(1))
    return out


def per_row_cross_term(shape, first, second):
    # scalar oracle: evaluate each row's dot products independently
    def dots(mat, z):
        rows = [0] * shape.m_c
        for r, c, v in mat.triplets():
            rows[r] += v * z[c]
        return rows

    (x1, u1, W1), (x2, u2, W2) = first, second
    z1 = list(W1) + list(x1) + [u1]
    z2 = list(W2) + list(x2) + [u2]
    a1, b1, c1 = (dots(m, z1) for m in (shape.A, shape.B, shape.C))
    a2, b2, c2 = (dots(m, z2) for m in (shape.A, shape.B, shape.C))
    return [(a1[i] * b2[i] + a2[i] * b1[i] - u1 * c2[i] - u2 * c1[i]) % P for i in range(shape.m_c)]


def test_cross_term_self_is_twice_residual(shape, folded_pair):
    I, W = folded_pair.instance, folded_pair.witness
    T = compute_cross_term(shape, (I.x, I.u, W.W), (I.x, I.u, W.W))
    assert check_relaxed(shape, I.x, I.u, W.W, W.E)
    assert T == [2 * e % P for e in W.E]


def test_cross_term_with_zero_pad(shape, clients):
    c = clients[0]
    T = compute_cross_term(shape, (c.x, 1, c.W), ([0] * shape.num_x, 0, [0] * shape.num_w))
    assert not any(T)


def test_cross_term_random_pair_vs_oracle(shape):
    rng = random.Random(4)
    first = ([rng.randrange(P) for _ in range(shape.num_x)], rng.randrange(P),
             [rng.randrange(P) for _ in range(shape.num_w)])
    second = ([rng.randrange(P) for _ in range(shape.num_x)], rng.randrange(P),
              [rng.randrange(P) for _ in range(shape.num_w)])
    assert compute_cross_term(shape, first, second) == per_row_cross_term(shape, first, second)


def test_challenge_determinism_and_avalanche(setup, ctx, clients):
    a, b = clients[0].instance, clients[1].instance
    T_bar = zero_commitment(setup.T)
    args = (a.E_bar, a.W_bar, b.E_bar, b.W_bar, T_bar)
    v3 = derive_challenge(ctx, *args, 3)
    assert v3 == derive_challenge(ctx, *args, 3)
    assert v3 != derive_challenge(ctx, *args, 4)
    other = replace(ctx, X_digest=bytes(32))
    assert v3 != derive_challenge(other, *args, 3)
    ch = fold_challenge(ctx, *args, 3)
    assert ch.v == v3 and int.from_bytes(ch.transcript_digest, "little") % P == v3.value


def test_fold_completeness(shape, setup, folded_pair):
    assert check_c1(shape, folded_pair.instance, folded_pair.witness, setup)


def test_fold_chain_completeness(shape, setup, clients, ctx):
    acc = (clients[0].instance, clients[0].witness)
    rng = random.Random(9)
    for step, c in enumerate(clients[1:5], start=2):
        I, W, _ = fold_plain(shape, acc, (c.instance, c.witness), ctx, step, setup, rng=rng)
        acc = (I, W)
        assert check_c1(shape, I, W, setup)


def test_fold_with_zero_pad(shape, setup, folded_pair, ctx):
    pad = zero_pad(shape, setup)
    acc = (folded_pair.instance, folded_pair.witness)
    r0 = tuple(R.zero() for _ in range(setup.T.l))
    I, W, T_bar = fold_plain(shape, acc, pad, ctx, 3, setup, r_T=r0)
    assert T_bar.is_zero()
    assert I == acc[0]
    assert W == acc[1]


def test_fold_with_zero_pad_random_rt(shape, setup, folded_pair, ctx):
    pad = zero_pad(shape, setup)
    acc = (folded_pair.instance, folded_pair.witness)
    I, W, T_bar = fold_plain(shape, acc, pad, ctx, 3, setup, rng=random.Random(3))
    assert not T_bar.is_zero()
    # the accumulator moves only by v·T̄ with T = 0
    assert I.u == acc[0].u and I.x == acc[0].x and I.W_bar == acc[0].W_bar
    assert W.E == acc[1].E and W.W == acc[1].W
    assert check_c1(shape, I, W, setup)
    assert nifs_verify(acc[0], pad[0], T_bar, ctx, 3) == I


def test_fold_rejects_bad_inputs(shape, setup, clients, ctx):
    a, b = clients[0], clients[1]
    W = list(b.witness.W)
    W[0] = (W[0] + 1) % P
    bad = replace(b.witness, W=tuple(W))
    with pytest.raises(NotSatisfied):
        fold_plain(shape, (a.instance, a.witness), (b.instance, bad), ctx, 2, setup)


def test_corrupted_input_fold_fails(shape, setup, clients, ctx):
    # unsatisfying witness committed honestly: the fold must not satisfy C1
    a, b = clients[0], clients[1]
    W = list(b.witness.W)
    W[10] = (W[10] + 5) % P
    W_bar = commit(setup.W, W, b.witness.r_W)
    inst = replace(b.instance, W_bar=W_bar)
    wit = replace(b.witness, W=tuple(W))
    rng = random.Random(17)
    for trial in range(20):
        I, Wt, _ = fold_plain(shape, (a.instance, a.witness), (inst, wit), ctx, 2 + trial, setup, rng=rng,
                              check=False)
        assert not check_c1(shape, I, Wt, setup)


def test_verifier_agrees_with_prover(shape, setup, clients, ctx):
    rng = random.Random(23)
    for k in range(100):
        a, b = rng.sample(clients, 2)
        out = fold_plain(shape, (a.instance, a.witness), (b.instance, b.witness), ctx, k, setup, rng=rng,
                         check=False)
        assert nifs_verify(a.instance, b.instance, out.T_bar, ctx, k) == out.instance


def test_wrong_cross_term_commitment(shape, setup, clients, ctx):
    a, b = clients[0], clients[1]
    out = fold_plain(shape, (a.instance, a.witness), (b.instance, b.witness), ctx, 2, setup, rng=random.Random(2))
    wrong = commit(setup.T, [1] * shape.m_c, [R.zero()] * 4)
    I = nifs_verify(a.instance, b.instance, wrong, ctx, 2)
    assert not check_c1(shape, I, out.witness, setup)


def test_context_bytes_layout(ctx):
    assert isinstance(ctx, FoldContext)
    assert ctx.to_bytes() != replace(ctx, chain_id=2).to_bytes()
    assert ctx.to_bytes() != replace(ctx, batch_id=b"other").to_bytes()
