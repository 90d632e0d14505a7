import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opspace import seqlab
from opspace.seqlab import GenIntSeq, XiPoint
from opspace.xspace import NotSubbasisTail, PowerTail, WeightSequence

NH = {"sorted", "non-HS"}
ALPHA = WeightSequence((), NotSubbasisTail("alpha"), NH)
BETA = WeightSequence((), NotSubbasisTail("beta"), NH)


def test_dominates_reflexive():
    a = WeightSequence.finite([0.9, 0.5, 0.1], ["sorted"])
    v = seqlab.dominates(a, a, 10)
    assert v.kind == seqlab.EQUIVALENT and v.K == 1 and v.witness == ()


def test_not_subbasis_pointwise_domination():
    v = seqlab.dominates(ALPHA, BETA, 10 ** 6)
    assert v.kind == seqlab.EQUIVALENT and v.K == 1 and v.witness == ()


def test_not_subbasis_refutation():
    v = seqlab.dominates(BETA, ALPHA, 10 ** 6)
    assert v.kind == seqlab.NOT_EQUIVALENT
    masses = [m for _, m in v.certificate]
    depths = [d for d, _ in v.certificate]
    assert depths[-1] == 10 ** 6
    assert all(x <= y for x, y in zip(masses, masses[1:]))
    # direct oracle: every index with alpha_i > beta_i, summed exactly
    oracle = sum(Fraction(ALPHA.value(i)) ** 2 for i in range(1, 1025)
                 if ALPHA.value(i) > BETA.value(i))
    assert dict(v.certificate)[1024] == oracle


def test_dominates_needs_sorted():
    with pytest.raises(seqlab.PreconditionError):
        seqlab.dominates(WeightSequence.finite([0.1, 0.5]), WeightSequence.finite([0.1, 0.5]), 2)


def test_seq_equivalent_reflexive():
    v = seqlab.seq_equivalent(ALPHA, ALPHA, 1000)
    assert v.kind == seqlab.EQUIVALENT and v.K == 1


def test_finite_difference():
    a = WeightSequence((), PowerTail(1.0, 0.5), {"sorted"})
    b = WeightSequence((1.0,) * 5, PowerTail(1.0, 0.5), {"sorted"})
    v = seqlab.seq_equivalent(a, b, 100)
    assert v.kind == seqlab.EQUIVALENT and v.witness == (1, 2, 3, 4, 5)
    assert seqlab.replay_equivalence(a, b, v, 100)


def test_not_subbasis_not_equivalent():
    assert seqlab.seq_equivalent(ALPHA, BETA, 10 ** 6).kind == seqlab.NOT_EQUIVALENT


@pytest.mark.parametrize("s,n", [(1.0, 1), (0.0, seqlab.INF), (0.125, 4), (0.5, 2),
                                 (0.3, 2), (0.25, 3), (1e-300, 997)])
def test_n_value(s, n):
    assert seqlab.n_value(s) == n


def test_n_value_matches_definition():
    for s in np.random.default_rng(0).uniform(1e-6, 1, 500):
        ell = seqlab.n_value(float(s))
        assert 2.0 ** (1 - ell) >= s > 2.0 ** -ell


def test_y_map_base_point():
    base = [2.0 ** (1 - k) for k in (1, 2, 3)]
    out = seqlab.y_map(GenIntSeq((1, 2, 3)), base, 3)
    assert [sin for _, sin, _ in out] == [0.75, 0.75, 0.75]
    for _, sin, cos in out:
        assert sin * sin + cos * cos == pytest.approx(1.0)


def test_y_map_infinite_entry():
    (_, sin, cos), = seqlab.y_map(GenIntSeq((seqlab.INF,)), [0.5], 1)
    assert sin == 0.0 and cos == 1.0


def test_y_map_pure_column_vector():
    # n(0.3) = 2 and the target 1.5 * 2^-2 exceeds 0.3, so it clamps to s_o
    out = seqlab.y_map(GenIntSeq((2,)), [0.3], 1)
    assert out[0][1] == 1.0 and out[0][2] == 0.0


def test_y_map_membership():
    with pytest.raises(seqlab.MembershipError):
        seqlab.y_map(GenIntSeq((1,)), [0.25], 1)


def test_star_identical():
    b = GenIntSeq((1, 2, 5), seqlab.Log4IntTail(6))
    for K in (0, 1, 4):
        assert seqlab.star_equiv_at(b, b, K, 30)
    v = seqlab.star_equiv(b, b, 30)
    assert v.kind == seqlab.EQUIVALENT and v.K == 0 and v.witness == ()


def test_star_linear_pair():
    b, g = GenIntSeq((), seqlab.LinearIntTail(1)), GenIntSeq((), seqlab.LinearIntTail(2))
    for n in (1, 2, 10, 100):
        ok, forced, mass = seqlab.star_witness(b, g, 1, n)
        assert ok and forced == tuple(range(2, n + 1))
        assert mass == sum(Fraction(1, 4 ** i) + Fraction(1, 16 ** i) for i in range(2, n + 1))
        assert mass < Fraction(1, 12) + Fraction(1, 240)
    v = seqlab.star_equiv(b, g, 50)
    assert v.kind == seqlab.EQUIVALENT and v.K == 1
    assert "7/80" in v.note


def test_star_divergent_refutation():
    b = GenIntSeq((), seqlab.ConstIntTail(2))
    g = GenIntSeq((), seqlab.Log4IntTail(2))
    v = seqlab.star_equiv(b, g, 100, K_max=4)
    assert v.kind == seqlab.NOT_EQUIVALENT


def test_genint_nondecreasing():
    with pytest.raises(seqlab.MembershipError):
        GenIntSeq((3, 2))


def test_genint_json_round_trip():
    for s in [GenIntSeq((1, 2, seqlab.INF)), GenIntSeq((0,), seqlab.Log4IntTail(1)),
              GenIntSeq((), seqlab.LinearIntTail(2, 1)), GenIntSeq((4,), seqlab.InfTail())]:
        back = GenIntSeq.from_json(s.to_json())
        assert back == s and back.materialize(20 if s.tail else 3) == s.materialize(20 if s.tail else 3)


def log4_first_close(offset: int, target: Fraction) -> int:
    """q_1 by walking 1, then runs (4^(m-1), 4^m], until mass strictly exceeds target."""
    mass = Fraction(1, 4 ** offset)
    if mass > target:
        return 2
    m = 1
    while True:
        w = Fraction(1, 4 ** (offset + m))
        count = 3 * 4 ** (m - 1)
        if mass + count * w > target:
            need = (target - mass) / w
            take = int(need) + 1
            return 4 ** (m - 1) + 1 + take
        mass += count * w
        m += 1


def test_borel2_first_cut():
    base = GenIntSeq((), seqlab.Log4IntTail(1))
    blocks = seqlab.borel2_blocks(base, 4 ** 90)
    assert blocks.p[0] == 1
    q1 = log4_first_close(1, Fraction(16))
    assert q1 == 4 ** 84 + 2  # mass after run 84 is exactly 16, not more
    assert blocks.q[0] == q1
    assert blocks.masses[0] > 16


def test_borel2_open_block_at_small_depth():
    blocks = seqlab.borel2_blocks(GenIntSeq((), seqlab.Log4IntTail(1)), 10 ** 4)
    assert blocks.p == (1,) and blocks.open_block


def test_borel2_needs_divergent_base():
    with pytest.raises(seqlab.ConstructionError):
        seqlab.borel2_blocks(GenIntSeq((), seqlab.LinearIntTail(1)), 100)


def test_phi_of_zero_is_base():
    base = GenIntSeq((), seqlab.Log4IntTail(1))
    out = seqlab.borel2_phi(XiPoint((0,) * 500), base, 500)
    assert out.materialize(500) == base.materialize(500)


def test_phi_soundness():
    base = GenIntSeq((), seqlab.Log4IntTail(1))
    rng = np.random.default_rng(4)
    depth = 300
    for _ in range(5):
        b = XiPoint(tuple(int(rng.integers(0, i)) for i in range(1, depth + 1)))
        c = XiPoint(tuple(int(rng.integers(0, i)) for i in range(1, depth + 1)))
        K = seqlab.eks_discrepancy(b, c, depth)
        pb, pc = seqlab.borel2_phi(b, base, depth), seqlab.borel2_phi(c, base, depth)
        assert seqlab.star_equiv_at(pb, pc, K, depth)


def test_b_epsilon_zero():
    p = seqlab.b_epsilon([0] * 10, seqlab.DyadicPartition(), 64)
    assert p.entries == (0,) * 64


def test_b_epsilon_same_bits():
    eps = [1, 0, 1, 1]
    part = seqlab.DyadicPartition()
    assert seqlab.b_epsilon(eps, part, 100) == seqlab.b_epsilon(eps, part, 100)


def test_b_epsilon_progression_discrepancy():
    part = seqlab.DyadicPartition()
    eps, delta = [0, 0, 1], [0, 0, 0]  # differ on I_2 = {4, 12, 20, ...}
    prev = -1
    for depth in (4, 10, 30, 100, 1000):
        b, c = seqlab.b_epsilon(eps, part, depth), seqlab.b_epsilon(delta, part, depth)
        top = max(i for i in range(4, depth + 1, 8))
        d = seqlab.eks_discrepancy(b, c, depth)
        assert d == top - 1 and d >= prev
        prev = d


def test_b_epsilon_standard_scale():
    part = seqlab.DyadicPartition()
    b = seqlab.b_epsilon([1, 0, 1], part, 10 ** 4)
    c = seqlab.b_epsilon([0, 1, 1], part, 10 ** 4)
    assert seqlab.eks_discrepancy(b, c, 10 ** 4) >= 10 ** 3


def test_eks_prefix_difference():
    b = XiPoint((0, 1, 2, 0, 4, 5, 6))
    c = XiPoint((0, 0, 0, 3, 1, 5, 6))
    assert seqlab.eks_discrepancy(b, c, 7) == 3


def test_xi_range():
    with pytest.raises(seqlab.MembershipError):
        XiPoint((1,))


int_seqs = st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 6), min_size=n, max_size=n).map(sorted),
    st.lists(st.integers(0, 6), min_size=n, max_size=n).map(sorted)))


@settings(max_examples=60, deadline=None)
@given(int_seqs, st.integers(0, 4))
def test_minimal_witness_optimal(pair, K):
    b, g = GenIntSeq(tuple(pair[0])), GenIntSeq(tuple(pair[1]))
    n = len(pair[0])
    _, forced, mass = seqlab.star_witness(b, g, K, n)
    for r in range(n + 1):
        for sub in itertools.combinations(range(1, n + 1), r):
            if set(forced) <= set(sub):
                assert seqlab.subset_mass(b, g, sub) >= mass
            else:
                # a set missing a forced index violates the difference condition
                assert any(abs(b.value(i) - g.value(i)) > K for i in range(1, n + 1) if i not in sub)


@settings(max_examples=100, deadline=None)
@given(int_seqs, st.integers(0, 5))
def test_f_tree_monotone(pair, K):
    b, g = GenIntSeq(tuple(pair[0])), GenIntSeq(tuple(pair[1]))
    n = len(pair[0])
    if seqlab.star_equiv_at(b, g, K, n):
        assert seqlab.star_equiv_at(b, g, K + 1, n)
        if n > 1:
            assert seqlab.star_equiv_at(b, g, K, n - 1)


@settings(max_examples=50, deadline=None)
@given(int_seqs)
def test_star_symmetric(pair):
    b, g = GenIntSeq(tuple(pair[0])), GenIntSeq(tuple(pair[1]))
    n = len(pair[0])
    vb, vg = seqlab.star_equiv(b, g, n), seqlab.star_equiv(g, b, n)
    assert (vb.kind, vb.K, vb.witness) == (vg.kind, vg.K, vg.witness)


sorted_weights = st.lists(st.floats(0.01, 1), min_size=1, max_size=8).map(
    lambda v: WeightSequence.finite(sorted(v, reverse=True), ["sorted"]))


@settings(max_examples=40, deadline=None)
@given(sorted_weights, sorted_weights)
def test_equivalence_symmetric_and_replayable(a, b):
    if len(a.prefix) != len(b.prefix):
        return
    d = len(a.prefix)
    v, w = seqlab.seq_equivalent(a, b, d), seqlab.seq_equivalent(b, a, d)
    assert v.kind == w.kind == seqlab.EQUIVALENT
    assert set(v.witness) == set(w.witness) and v.K == w.K
    assert seqlab.replay_equivalence(a, b, v, d)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_forced_mass_profile_matches_direct_sum(seed):
    rng = np.random.default_rng(seed)
    a = WeightSequence.finite(sorted(rng.uniform(0, 1, 30), reverse=True), ["sorted"])
    b = WeightSequence.finite(sorted(rng.uniform(0, 1, 30), reverse=True), ["sorted"])
    K = int(rng.integers(1, 3))
    pts = [5, 17, 30]
    prof = seqlab.forced_mass_profile(a, b, K, pts)
    for d, m in zip(pts, prof):
        direct = sum(Fraction(b.value(i)) ** 2 for i in range(1, d + 1)
                     if Fraction(b.value(i)) > K * Fraction(a.value(i)))
        assert m == direct
