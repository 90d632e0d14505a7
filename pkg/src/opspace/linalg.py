"""Dense complex-matrix primitives shared by every other module.

Matrices are plain ``numpy.ndarray`` objects with a complex dtype.  The
helpers here validate shape and finiteness once so that callers can rely
on clean input.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

STRUCTURAL_TOL = 1e-10


class InvalidMatrixError(ValueError):
    """Raised for empty, ragged or non-finite matrix input."""


class RankDeficiencyError(ValueError):
    """Raised when a frame has a column dependent on the earlier ones."""

    def __init__(self, column: int, residual: float):
        super().__init__(
            f"column {column} is linearly dependent on columns 0..{column - 1} "
            f"(residual norm {residual:.3e})"
        )
        self.column = column
        self.residual = residual


class SVDResult(NamedTuple):
    left: np.ndarray
    spectrum: np.ndarray
    right: np.ndarray


class MatrixNorms(NamedTuple):
    op_norm: float
    hs_norm: float


def as_matrix(data, *, allow_empty: bool = False) -> np.ndarray:
    """Coerce ``data`` to a 2-d complex array, rejecting NaN/Inf."""
    m = np.asarray(data, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise InvalidMatrixError(f"expected a 2-d matrix, got shape {m.shape}")
    if not allow_empty and m.size == 0:
        raise InvalidMatrixError("matrix has a zero dimension")
    if not np.all(np.isfinite(m)):
        raise InvalidMatrixError("matrix has non-finite entries")
    return m


def svd(m) -> SVDResult:
    """Thin SVD with ``m = left @ diag(spectrum) @ right.conj().T``.

    LAPACK's divide-and-conquer driver is deterministic for fixed input bits.
    """
    m = as_matrix(m)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SVDResult(u, s, vh.conj().T)


def singular_values(m) -> np.ndarray:
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def matrix_norms(m) -> MatrixNorms:
    s = singular_values(m)
    op = float(s[0]) if s.size else 0.0
    return MatrixNorms(op, float(np.sqrt(np.sum(s * s))))


def op_norm(m) -> float:
    m = as_matrix(m, allow_empty=True)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def hs_norm(m) -> float:
    m = as_matrix(m, allow_empty=True)
    return float(np.sqrt(np.sum(np.abs(m) ** 2)))


def orthonormalize(frame, tol: float = STRUCTURAL_TOL) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    A column whose residual after projection falls below ``tol`` times its
    original norm (or below ``tol`` absolutely) is reported by index.
    """
    f = as_matrix(frame)
    rows, cols = f.shape
    if cols > rows:
        raise RankDeficiencyError(rows, 0.0)
    q = np.zeros((rows, cols), dtype=complex)
    for j in range(cols):
        v = f[:, j].copy()
        scale = np.linalg.norm(v)
        for _ in range(2):
            for k in range(j):
                v -= (q[:, k].conj() @ v) * q[:, k]
        r = np.linalg.norm(v)
        if r <= tol * max(scale, 1.0):
            raise RankDeficiencyError(j, float(r))
        q[:, j] = v / r
    return q


def is_orthonormal(q, tol: float = STRUCTURAL_TOL) -> bool:
    q = as_matrix(q)
    gram = q.conj().T @ q
    return bool(np.max(np.abs(gram - np.eye(q.shape[1]))) <= tol)


def projector(q) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal columns ``q``."""
    q = as_matrix(q)
    return q @ q.conj().T


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    """Standard complex Gaussian entries: real and imaginary parts N(0, 1/2)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
