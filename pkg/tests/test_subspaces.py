import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opspace import linalg, seqlab, subspaces
from opspace.subspaces import SubspaceFrame
from opspace.xspace import NotSubbasisTail, PowerTail, SubbasisTail, WeightSequence


def frame_from_angles(weights, angles):
    """Columns sin e_i + cos f_i from a y_map output."""
    n = len(weights)
    cols = []
    for i, sin, cos in angles:
        v = np.zeros(2 * n)
        v[i - 1], v[n + i - 1] = sin, cos
        cols.append(v)
    return SubspaceFrame.from_columns(WeightSequence(tuple(weights)), n, cols)


def test_coordinate_spectrum():
    f = SubspaceFrame.coordinate(WeightSequence((0.9, 0.5, 0.3)), 3, e=[1, 3])
    assert np.allclose(subspaces.restricted_spectrum(f), [0.9, 0.3], atol=1e-15)


def test_row_vectors_have_zero_spectrum():
    f = SubspaceFrame.coordinate(WeightSequence((0.9, 0.5)), 2, f=[1, 2])
    assert np.all(subspaces.restricted_spectrum(f) == 0)


def test_y_map_frame_spectrum():
    base = [1.0, 0.6, 0.3, 0.2]
    beta = seqlab.GenIntSeq((2, 2, 5, seqlab.INF))
    frame = frame_from_angles(base, seqlab.y_map(beta, base, 4))
    expected = sorted((seqlab.y_target(b, s) for b, s in zip(beta.materialize(4), base)),
                      reverse=True)
    assert np.allclose(subspaces.restricted_spectrum(frame), expected, atol=1e-14)
    assert seqlab.n_sequence(subspaces.restricted_spectrum(frame)[:3]).prefix == (2, 2, 5)


def test_frame_rows_checked():
    with pytest.raises(subspaces.FrameError):
        SubspaceFrame(WeightSequence((1.0,)), 1, np.ones((3, 1)))


def test_frame_rank_checked():
    with pytest.raises(subspaces.FrameError):
        SubspaceFrame.from_columns(WeightSequence((1.0,)), 1, [[1, 0], [2, 0]])


def test_frame_json_round_trip():
    rng = np.random.default_rng(0)
    f = subspaces.random_subspace(WeightSequence((0.9, 0.4, 0.1)), 3, 2, rng)
    g = SubspaceFrame.from_json(f.to_json())
    assert np.allclose(linalg.projector(f.basis), linalg.projector(g.basis), atol=1e-12)


def test_wielandt_hand_case():
    f = SubspaceFrame.coordinate(WeightSequence((0.9, 0.6, 0.3)), 3, e=[1, 2, 3])
    r = subspaces.wielandt_check(f, [1, 3], trials=200, seed=1)
    assert r.closed_form == pytest.approx(0.90, abs=1e-15)
    assert r.singular_chain == pytest.approx(0.90, abs=1e-9)
    assert r.best_oracle <= r.closed_form + 1e-9


def test_wielandt_single_index():
    f = SubspaceFrame.coordinate(WeightSequence((0.7, 0.2)), 2, e=[1, 2])
    r = subspaces.wielandt_check(f, [1], trials=50)
    assert r.closed_form == pytest.approx(0.49) and r.singular_chain == pytest.approx(0.49)


def test_wielandt_index_range():
    f = SubspaceFrame.coordinate(WeightSequence((0.7, 0.2)), 2, e=[1, 2])
    with pytest.raises(IndexError):
        subspaces.wielandt_check(f, [3])


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 31))
def test_wielandt_random_chains(dim, seed):
    rng = np.random.default_rng(seed)
    depth = dim + 1
    amb = WeightSequence(tuple(np.sort(rng.uniform(0, 1, depth))[::-1]))
    f = subspaces.random_subspace(amb, depth, dim, rng)
    k = int(rng.integers(1, dim + 1))
    idx = sorted(rng.choice(np.arange(1, dim + 1), size=k, replace=False).tolist())
    r = subspaces.wielandt_check(f, idx, trials=30, seed=seed)
    assert r.best_oracle <= r.closed_form + 1e-9
    assert r.singular_chain == pytest.approx(r.closed_form, abs=1e-9)


def test_canonical_coordinate():
    amb = WeightSequence((0.9, 0.5, 0.3))
    cb = subspaces.canonical_basis(SubspaceFrame.coordinate(amb, 3, e=[1, 3]))
    assert np.allclose(cb.beta.materialize(2), [0.9, 0.3])
    assert np.allclose(cb.T, np.eye(2))
    assert cb.residual <= 1e-12


@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 4, 1.2])
def test_canonical_rotated(theta):
    amb = WeightSequence((1.0, 0.0))
    f = SubspaceFrame.coordinate(amb, 2, e=[1, 2])
    c = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    cb = subspaces.canonical_basis(f, c)
    assert np.allclose(cb.beta.materialize(2), [abs(math.cos(theta)), abs(math.sin(theta))])
    assert cb.residual <= 1e-12


def test_canonical_eigenbasis():
    amb = WeightSequence((0.8, 0.5, 0.2))
    f = SubspaceFrame.coordinate(amb, 3, e=[1, 2, 3])
    d = np.diag([1j, -1, 1])
    cb = subspaces.canonical_basis(f, d)
    t = cb.T
    assert np.allclose(t, np.diag(np.diag(t)))
    assert np.allclose(np.abs(np.diag(t)), 1)


def test_sign_average_exact():
    rng = np.random.default_rng(3)
    d = 6
    m = np.array([[Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 9)))
                   for _ in range(d)] for _ in range(d)], dtype=object)
    avg = subspaces.sign_average(m)
    for i in range(d):
        for j in range(d):
            assert avg[i, j] == (m[i, i] if i == j else 0)


def test_mask_path_beyond_enumeration():
    rng = np.random.default_rng(5)
    amb = WeightSequence(tuple(rng.uniform(0, 1, 14)))
    f = subspaces.random_subspace(amb, 14, 12, rng)
    cb = subspaces.canonical_basis(f)
    assert cb.residual <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 31))
def test_averaging_identity(d, seed):
    rng = np.random.default_rng(seed)
    amb = WeightSequence(tuple(rng.uniform(0, 1, d + 2)))
    f = subspaces.random_subspace(amb, d + 2, d, rng)
    cb = subspaces.canonical_basis(f)
    assert cb.residual <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_interlacing(dim, seed):
    rng = np.random.default_rng(seed)
    depth = dim + int(rng.integers(0, 4))
    amb = WeightSequence(tuple(rng.uniform(0, 1, depth)))
    f = subspaces.random_subspace(amb, depth, dim, rng)
    s = subspaces.restricted_spectrum(f)
    amb_s = subspaces.ambient_spectrum(f)
    assert np.all(s <= amb_s[:s.size] + 1e-10)


SCHED = SubbasisTail(1.5)


def test_subbasis_whole_space():
    depth = 40
    amb = WeightSequence((), SCHED)
    f = SubspaceFrame.coordinate(amb, depth, e=range(1, depth + 1), f=range(1, depth + 1))
    emb = subspaces.subbasis_embed(SCHED, f)
    assert emb.distortion <= 1.5 + 1e-8
    assert len(set(emb.pi)) == len(emb.pi) == 2 * depth


def test_subbasis_kernel():
    amb = WeightSequence((), SCHED)
    f = SubspaceFrame.coordinate(amb, 10, f=[1, 2, 3])
    emb = subspaces.subbasis_embed(SCHED, f)
    assert emb.pi == (1, 3, 5)
    assert emb.distortion == 1.0


@pytest.mark.parametrize("k", [1, 2, 3])
def test_subbasis_boundary(k):
    # an even index in block k carries exactly a^-k, so M_k excludes it
    amb = WeightSequence((), SCHED)
    j = 2 * SCHED.cutpoint(k)
    assert amb.value(j) == 1.5 ** -k
    f = SubspaceFrame.coordinate(amb, j, e=[j])
    emb = subspaces.subbasis_embed(SCHED, f)
    assert emb.cutoffs[k] == 1 and emb.cutoffs[k + 1] == 2
    assert emb.pi == (2 * SCHED.cutpoint(k + 1),)


def test_subbasis_wrong_space():
    f = SubspaceFrame.coordinate(WeightSequence((0.5, 0.4)), 2, e=[1])
    with pytest.raises(subspaces.FrameError):
        subspaces.subbasis_embed(SCHED, f)


def test_subbasis_random():
    amb = WeightSequence((), SCHED)
    rng = np.random.default_rng(12)
    for _ in range(10):
        dim = int(rng.integers(1, 30))
        f = subspaces.random_subspace(amb, 200, dim, rng)
        assert subspaces.subbasis_embed(SCHED, f).distortion <= 1.5 + 1e-8


def test_noncomplemented_harmonic():
    alpha = WeightSequence((), PowerTail(0.5), {"non-HS"})
    beta = WeightSequence((), PowerTail(0.0))
    r = subspaces.noncomplemented_bound(alpha, beta, 0, 100)
    harmonic = sum(Fraction(1, i) for i in range(1, 101))
    assert r.value == pytest.approx(math.sqrt(harmonic) / 2, rel=1e-14)
    assert r.value == pytest.approx(1.1387907531280297, rel=1e-14)
    assert r.divergent


def test_noncomplemented_gamma_is_alpha():
    alpha = WeightSequence.finite([0.9, 0.5, 0.4, 0.1])
    beta = WeightSequence.finite([1.0] * 4)
    r = subspaces.noncomplemented_bound(alpha, beta, 0, 4)
    assert r.value == pytest.approx(math.sqrt(0.81 + 0.25 + 0.16 + 0.01) / 2)
    assert not r.divergent


def test_noncomplemented_doubling():
    alpha = WeightSequence((), PowerTail(0.25), {"non-HS"})
    beta = WeightSequence((), PowerTail(0.1))
    vals = [subspaces.noncomplemented_bound(alpha, beta, 3, 2 ** j).value for j in range(12)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))


def test_complement_vectors_unit():
    v = subspaces.complement_vectors([0.6, 1.0, 0.0])
    assert np.allclose(np.linalg.norm(v, axis=0), 1)
    assert v[1, 0] == 0.6 and v[0, 0] == pytest.approx(0.8)


def distortion_oracle(n, case):
    """Exact squared ratio of the E_i1 norms, written out from the block weights."""
    count = 4 ** (n * n + 2 * n) + 1
    w_beta = Fraction(1, 4 ** (n * n + n))
    if case == "inside":
        w_alpha = Fraction(1, 4 ** (n * n))
        return max(1, count * w_alpha) / max(1, count * w_beta)
    w_alpha = Fraction(1, 4 ** ((n + 1) ** 2))
    return max(1, count * w_beta) / max(1, count * w_alpha)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_distortion_certificates(n):
    for case in ("inside", "outside"):
        d = subspaces.subsequence_distortion(n, case)
        assert d.ratio_sq == distortion_oracle(n, case)
        assert d.bound >= 2 ** (n / 2)
    both = subspaces.subsequence_distortion(n)
    assert both.bound == pytest.approx(2.0 ** n)
    assert both.target == 2 ** (n / 2)


def test_distortion_block_counts_exact():
    lo, hi = NotSubbasisTail.block_range(4)
    assert hi - lo == 4 ** 25 - 4 ** 16 and hi - lo > 2 * 4 ** 24


def test_fin_sum_routes_agree():
    rng = np.random.default_rng(8)
    for _ in range(50):
        k = int(rng.integers(1, 9))
        a, b = rng.uniform(0, 1, k), rng.uniform(0, 1.2, k)
        assert subspaces.fin_sum_margin(a, b) == pytest.approx(
            subspaces.fin_sum_margin_enumerated(a, b), abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2 ** 31))
def test_domination_shadows(dim, seed):
    rng = np.random.default_rng(seed)
    depth = dim + 2
    alpha = np.sort(rng.uniform(0, 1, depth))[::-1]
    beta = np.sort(rng.uniform(0, 1, depth))[::-1]
    q = linalg.orthonormalize(linalg.complex_gaussian((depth, dim), rng))
    u = subspaces.contractive_map(alpha, beta, q, rng, seed=seed % 97)
    a_sorted = np.sort(np.linalg.svd(np.diag(alpha) @ q, compute_uv=False))[::-1]
    b_prime = np.linalg.svd(np.diag(beta) @ u, compute_uv=False)
    assert subspaces.fin_sum_margin(a_sorted, b_prime) >= -1e-8
    assert subspaces.dominated_set_mass(a_sorted, b_prime) <= 2 + 1e-8
