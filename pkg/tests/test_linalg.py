import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opspace import linalg


def charpoly_eigenvalues(h: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix from its characteristic polynomial.

    Coefficients come from the Faddeev-LeVerrier recursion; the real roots
    are isolated by bisection on sign changes over a Gershgorin interval.
    """
    n = h.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(h)
    for k in range(1, n + 1):
        m = h @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(h @ m) / k)
    c = np.real(np.array(coeffs))

    def p(x):
        return np.polyval(c, x)

    radius = float(np.max(np.sum(np.abs(h), axis=1))) + 1.0
    grid = np.linspace(-radius, radius, 20001)
    vals = p(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            for _ in range(200):
                mid = (a + b) / 2
                if p(a) * p(mid) <= 0:
                    b = mid
                else:
                    a = mid
            roots.append((a + b) / 2)
    return np.sort(np.array(roots))[::-1]


def test_identity_spectrum():
    assert np.allclose(linalg.svd(np.eye(2)).spectrum, [1, 1])


def test_diagonal_spectrum():
    assert np.allclose(linalg.svd(np.diag([3.0, 2.0, 1.0])).spectrum, [3, 2, 1])


def test_spectrum_matches_charpoly_oracle():
    rng = np.random.default_rng(7)
    m = linalg.complex_gaussian((4, 3), rng)
    s = linalg.svd(m).spectrum
    oracle = np.sqrt(np.clip(charpoly_eigenvalues(m.conj().T @ m), 0, None))
    assert s.shape == oracle.shape
    assert np.allclose(s, oracle, atol=1e-9)


def test_empty_matrix_rejected():
    with pytest.raises(linalg.InvalidMatrixError):
        linalg.svd(np.zeros((0, 3)))


def test_nonfinite_rejected():
    with pytest.raises(linalg.InvalidMatrixError):
        linalg.as_matrix([[1.0, np.nan]])


def test_norms_of_diagonal():
    n = linalg.matrix_norms(np.diag([1.0, 0.5]))
    assert n.op_norm == pytest.approx(1.0)
    assert n.hs_norm == pytest.approx(np.sqrt(1.25))


def test_norms_of_zero():
    assert linalg.matrix_norms(np.zeros((3, 3))) == (0.0, 0.0)


def test_hs_norm_is_entrywise():
    rng = np.random.default_rng(11)
    m = linalg.complex_gaussian((5, 5), rng)
    entrywise = np.sqrt(sum(abs(z) ** 2 for z in m.ravel()))
    assert linalg.matrix_norms(m).hs_norm == pytest.approx(entrywise, rel=1e-12)


def test_orthonormal_frame_unchanged():
    q = linalg.random_unitary(4, np.random.default_rng(3))[:, :2]
    assert np.allclose(linalg.orthonormalize(q), q, atol=1e-10)


def test_two_column_hand_case():
    q = linalg.orthonormalize(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert np.allclose(q, np.eye(2), atol=1e-12)


def test_span_preserved():
    rng = np.random.default_rng(5)
    f = linalg.complex_gaussian((6, 3), rng)
    q = linalg.orthonormalize(f)
    assert linalg.is_orthonormal(q)
    # projector through the normal equations of the raw frame
    p_raw = f @ np.linalg.solve(f.conj().T @ f, f.conj().T)
    assert np.allclose(linalg.projector(q), p_raw, atol=1e-10)


def test_rank_deficiency_names_column():
    f = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
    with pytest.raises(linalg.RankDeficiencyError) as info:
        linalg.orthonormalize(f)
    assert info.value.column == 2
    assert "column 2" in str(info.value)


matrices = st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 31))


@settings(max_examples=50, deadline=None)
@given(matrices)
def test_reconstruction(shape):
    r, c, seed = shape
    m = linalg.complex_gaussian((r, c), np.random.default_rng(seed))
    u, s, v = linalg.svd(m)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert np.linalg.norm(m - u @ np.diag(s) @ v.conj().T, 2) <= 1e-10 * max(s[0], 1)
    assert linalg.is_orthonormal(u) and linalg.is_orthonormal(v)


@settings(max_examples=50, deadline=None)
@given(matrices)
def test_unitary_invariance(shape):
    r, c, seed = shape
    rng = np.random.default_rng(seed)
    m = linalg.complex_gaussian((r, c), rng)
    w1, w2 = linalg.random_unitary(r, rng), linalg.random_unitary(c, rng)
    a, b = linalg.matrix_norms(m), linalg.matrix_norms(w1 @ m @ w2)
    assert b.op_norm == pytest.approx(a.op_norm, abs=1e-10)
    assert b.hs_norm == pytest.approx(a.hs_norm, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(matrices)
def test_adjoint_and_ordering(shape):
    r, c, seed = shape
    m = linalg.complex_gaussian((r, c), np.random.default_rng(seed))
    n = linalg.matrix_norms(m)
    assert linalg.op_norm(m.conj().T) == pytest.approx(n.op_norm, rel=1e-12)
    assert n.op_norm <= n.hs_norm + 1e-12
    assert n.hs_norm == pytest.approx(linalg.hs_norm(m), rel=1e-12)
