import random

import pytest

from zkams.algebra import DEFAULT_PARAMS, PrimeField
from zkams.commit import (
    CommitSetup,
    commit,
    fold_commitments,
    fold_error_commitment,
    gen_params,
    zero_commitment,
)
from zkams.errors import InvalidParams, ParamMismatch

A = DEFAULT_PARAMS
R = A.ring
F = PrimeField(A.p)
SEED = b"commit-tests"


def naive_commit(params, M, r):
    # triple loop over ring entries using the schoolbook ring product
    out = []
    for i in range(params.k):
        acc = R.zero()
        for j in range(params.l):
            acc = acc + params.ring(i, j, "G") * r[j]
        for j in range(params.m):
            mj = M[j] if hasattr(M[j], "coeffs") else R.constant(M[j])
            acc = acc + params.ring(i, j, "H") * mj
        out.append(acc.coeffs)
    return tuple(out)


def rand_inputs(params, rng):
    M = [rng.randrange(A.p) for _ in range(params.m)]
    r = [R.random(rng) for _ in range(params.l)]
    return M, r


def test_determinism():
    a = gen_params(SEED, "E", m=5)
    b = gen_params(SEED, "E", m=5)
    assert (a.G == b.G).all() and (a.H == b.H).all()
    assert a.key_id == b.key_id


def test_labels_domain_separated():
    e = gen_params(SEED, "E", m=5)
    w = gen_params(SEED, "W", m=5)
    assert e.G.tobytes() != w.G.tobytes()
    assert e.key_id != w.key_id


def test_cross_term_label_shares_error_key():
    e = gen_params(SEED, "E", m=5)
    t = gen_params(SEED, "T", m=5)
    assert t.key_id == e.key_id
    assert (t.H == e.H).all()


@pytest.mark.parametrize("bad", [dict(k=0), dict(l=0), dict(m=0)])
def test_zero_dimension(bad):
    kw = dict(k=4, l=4, m=3) | bad
    with pytest.raises(InvalidParams):
        gen_params(SEED, "E", **kw)


def test_empty_seed():
    with pytest.raises(InvalidParams):
        gen_params(b"", "E")


def test_scalar_case_by_hand():
    p = gen_params(SEED, "W", k=1, l=1, m=1)
    rng = random.Random(4)
    M, r = R.random(rng), R.random(rng)
    expected = p.ring(0, 0, "G") * r + p.ring(0, 0, "H") * M
    assert commit(p, [M], [r]).value == (expected.coeffs,)


def test_zero_commit():
    p = gen_params(SEED, "E", m=6)
    c = commit(p, [0] * 6, [R.zero()] * 4)
    assert c.is_zero()
    assert c == zero_commitment(p)


def test_commit_matches_naive_oracle():
    p = gen_params(SEED, "E", m=7)
    rng = random.Random(9)
    for _ in range(5):
        M, r = rand_inputs(p, rng)
        c = commit(p, M, r)
        assert c == commit(p, M, r)
        assert c.value == naive_commit(p, M, r)


def test_commit_ring_valued_message_matches_oracle():
    p = gen_params(SEED, "W", m=3)
    rng = random.Random(2)
    M = [R.random(rng) for _ in range(3)]
    r = [R.random(rng) for _ in range(4)]
    assert commit(p, M, r).value == naive_commit(p, M, r)


def test_size_mismatch():
    p = gen_params(SEED, "E", m=3)
    with pytest.raises(ParamMismatch):
        commit(p, [0, 0], [R.zero()] * 4)
    with pytest.raises(ParamMismatch):
        commit(p, [0, 0, 0], [R.zero()] * 3)


def test_fold_identity_and_homomorphism():
    p = gen_params(SEED, "W", m=8)
    rng = random.Random(13)
    for _ in range(10):
        (M1, r1), (M2, r2) = rand_inputs(p, rng), rand_inputs(p, rng)
        v = rng.randrange(A.p)
        c1, c2 = commit(p, M1, r1), commit(p, M2, r2)
        assert fold_commitments(c1, c2, 0) == c1
        M = [(a + v * b) % A.p for a, b in zip(M1, M2)]
        r = [x + y * v for x, y in zip(r1, r2)]
        assert fold_commitments(c1, c2, F(v)) == commit(p, M, r)


def test_three_term_error_fold():
    setup = CommitSetup.create(SEED, m_c=6, n_w=4)
    rng = random.Random(21)
    (E1, rE1), (T, rT), (E2, rE2) = (rand_inputs(setup.E, rng) for _ in range(3))
    v = rng.randrange(A.p)
    cE1, cT, cE2 = commit(setup.E, E1, rE1), commit(setup.T, T, rT), commit(setup.E, E2, rE2)
    folded = fold_error_commitment(cE1, cT, cE2, v)
    E = [(a + v * b + v * v * c) % A.p for a, b, c in zip(E1, T, E2)]
    r = [a + b * v + c * (v * v) for a, b, c in zip(rE1, rT, rE2)]
    assert folded == commit(setup.E, E, r)


def test_label_mismatch():
    e = gen_params(SEED, "E", m=4)
    w = gen_params(SEED, "W", m=4)
    with pytest.raises(ParamMismatch):
        fold_commitments(zero_commitment(e), zero_commitment(w), 3)


def test_no_collisions_random_pairs():
    p = gen_params(SEED, "E", m=4)
    rng = random.Random(77)
    seen = set()
    for _ in range(10_000):
        M, r = rand_inputs(p, rng)
        seen.add(commit(p, M, r).value)
    assert len(seen) == 10_000
