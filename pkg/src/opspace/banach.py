"""Subspaces of R (+)_1 l_2 at a finite truncation, real scalars.

A vector is ``s (+) xi`` with norm ``|s| + ||xi||_2``.  Frames store a
``(1 + d) x m`` real matrix whose first row is the R-coordinate.  The
invariant ``c(Y)`` is the norm of the coordinate projection onto R
restricted to Y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import linalg

ISOMETRY_TOL = 1e-9


class FrameError(ValueError):
    """A Banach frame is empty, malformed or rank deficient."""


class CanonicalFormError(ValueError):
    """The attaining decomposition of a subspace could not be formed."""


@dataclass(frozen=True)
class BanachFrame:
    d: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        if b.ndim != 2 or b.shape[1] < 1 or b.shape[0] != 1 + self.d:
            raise FrameError(f"frame must be {(1 + self.d)} x m with m >= 1, got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise FrameError("frame has non-finite entries")
        try:
            q = linalg.orthonormalize(b).real
        except linalg.RankDeficiencyError as exc:
            raise FrameError(str(exc)) from None
        b.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "_q", q)

    @property
    def orthonormal(self) -> np.ndarray:
        return self._q

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def to_json(self) -> dict:
        return {"d": self.d, "columns": [list(map(float, c)) for c in self.basis.T]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "BanachFrame":
        try:
            d = int(obj["d"])
            cols = [[float(v) for v in c] for c in obj["columns"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise FrameError(f"malformed frame: {exc}") from None
        if not cols:
            raise FrameError("frame has no columns")
        return cls(d, np.column_stack(cols))


def norm1(x) -> float:
    """``|s| + ||xi||_2`` for ``x = s (+) xi``."""
    x = np.asarray(x, dtype=float)
    return abs(float(x[0])) + float(np.linalg.norm(x[1:]))


def _slice_minimum(frame: BanachFrame):
    """Least ``||xi||`` over ``1 (+) xi`` in Y and its attaining ``xi``; None if Y lies in l_2."""
    q = frame.orthonormal
    q0 = q[0]
    r2 = float(q0 @ q0)
    if r2 <= linalg.STRUCTURAL_TOL ** 2:
        return None
    # least-norm coefficients z with <q0, z> = 1; the direct norm avoids
    # the cancellation in 1/r2 - 1 when Y nearly contains 1 (+) 0
    z = q0 / r2
    xi = q[1:] @ z
    return float(np.linalg.norm(xi)), xi


def c_invariant(frame: BanachFrame) -> tuple[float, np.ndarray]:
    """``c(Y)`` and a norm-one vector ``c (+) (1 - c) xi_0`` attaining it."""
    sl = _slice_minimum(frame)
    if sl is None:
        x = np.zeros(1 + frame.d)
        x[1:] = frame.orthonormal[1:, 0]
        return 0.0, x / norm1(x)
    m, xi = sl
    c = 1.0 / (1.0 + m)
    x = np.concatenate([[1.0], xi]) * c
    return c, x


def phi_fn(t: float) -> float:
    """``t + sqrt((1 - t)^2 + 1)``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"phi is defined on [0, 1], got {t}")
    return t + math.sqrt((1.0 - t) ** 2 + 1.0)


def make_Phi(t: float, d: int) -> BanachFrame:
    """Span of ``t (+) (1 - t) e_0`` and ``0 (+) e_j`` for ``1 <= j < d``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if d < 2:
        raise ValueError("need at least two l_2 coordinates")
    b = np.zeros((1 + d, d))
    b[0, 0], b[1, 0] = t, 1.0 - t
    for j in range(1, d):
        b[1 + j, j] = 1.0
    return BanachFrame(d, b)


@dataclass(frozen=True)
class CanonicalForm:
    c: float
    x: np.ndarray
    xi0: np.ndarray | None
    l2_part: np.ndarray
    orthogonality: float


def canonical_form(frame: BanachFrame) -> CanonicalForm:
    """``Y = span[x, Y']`` with ``x`` attaining ``c`` and ``Y'`` inside l_2.

    ``l2_part`` holds an orthonormal basis (columns, l_2 coordinates) of
    ``Y`` intersected with l_2, minus ``xi_0`` when ``c = 0``.
    ``orthogonality`` is the largest ``|<xi_0, xi>|`` over that basis.
    """
    c, x = c_invariant(frame)
    q = frame.orthonormal
    if c == 0.0:
        ell = q[1:]
        xi0 = ell[:, 0]
        rest = ell[:, 1:]
        return CanonicalForm(0.0, x, xi0, rest, float(np.max(np.abs(xi0 @ rest), initial=0.0)))
    # null space of the first row inside Y gives Y intersected with l_2
    _, s, vt = np.linalg.svd(q[0:1], full_matrices=True)
    kernel = vt[1:].T
    ell = q[1:] @ kernel
    xi = x[1:]
    if 1.0 - c <= linalg.STRUCTURAL_TOL:
        xi0 = None
        orth = 0.0
    else:
        xi0 = xi / np.linalg.norm(xi)
        orth = float(np.max(np.abs(xi0 @ ell), initial=0.0))
    return CanonicalForm(c, x, xi0, ell, orth)


def weak_sup_check(frame: BanachFrame, tol: float = ISOMETRY_TOL) -> tuple[float, float]:
    """``max_i ||x + y_i||`` over the orthonormal l_2 block, and ``phi(c(Y))``."""
    cf = canonical_form(frame)
    if cf.orthogonality > tol:
        raise CanonicalFormError(
            f"attaining vector is not orthogonal to Y in l_2 (inner product {cf.orthogonality:.3e})")
    if cf.l2_part.shape[1] == 0:
        raise CanonicalFormError("Y has no l_2 directions beyond the attaining vector")
    sup = max(norm1(cf.x + np.concatenate([[0.0], y])) for y in cf.l2_part.T)
    return sup, phi_fn(min(max(cf.c, 0.0), 1.0))


def isometric(y: BanachFrame, z: BanachFrame, tol: float = ISOMETRY_TOL) -> bool:
    """Whether ``|c(Y) - c(Z)| <= tol``."""
    return abs(c_invariant(y)[0] - c_invariant(z)[0]) <= tol


def ut_member(x, t: float) -> bool:
    """``|s| > t`` and ``||xi|| < sqrt(1 - t^2)`` for ``x = s (+) xi``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    x = np.asarray(x, dtype=float)
    return abs(float(x[0])) > t and float(np.linalg.norm(x[1:])) < math.sqrt(1.0 - t * t)


def ball_member(x, t: float) -> bool:
    """``|s| > t`` and ``||xi|| < 1 - t``; this open set meets Y iff ``c(Y) > t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    x = np.asarray(x, dtype=float)
    return abs(float(x[0])) > t and float(np.linalg.norm(x[1:])) < 1.0 - t


def meets(frame: BanachFrame, t: float, radius: float) -> bool:
    """Whether Y contains ``s (+) xi`` with ``|s| > t`` and ``||xi|| < radius``.

    Along ``s (1 (+) xi_min)`` the l_2 part is ``|s| m``, so the set is met
    iff ``t m < radius``.
    """
    sl = _slice_minimum(frame)
    if sl is None:
        return False
    return t * sl[0] < radius
