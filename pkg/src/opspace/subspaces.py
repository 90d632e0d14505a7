"""Subspaces Y of X^d(alpha) at a finite truncation.

A subspace is stored by an orthonormal frame in the 2N underlying
coordinates: rows ``0..N-1`` are the e-part (weights ``alpha_1..alpha_N``)
and rows ``N..2N-1`` the f-part (weight zero).  The operator ``A`` of the
ambient space is ``diag(alpha) (+) 0``; ``A|_Y`` is ``A`` times the frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import linalg
from .cbnorm import _diag_identity, amplified_ratio_sq, cb_norm_general
from .xspace import (NotSubbasisTail, PowerTail, RangeError, SubbasisTail,
                     WeightSequence)

SPECTRUM_TOL = 1e-10
EXACT_AVERAGE_DIM = 10
MASK_AVERAGE_DIM = 20


class FrameError(ValueError):
    """A frame is empty, malformed or does not fit its ambient space."""


class ScheduleViolation(ValueError):
    """A block of the subbasis injection does not fit its target range."""


# ------------------------------------------------------------------ frames


@dataclass(frozen=True)
class SubspaceFrame:
    """Orthonormal frame of a subspace of X^d(ambient) truncated at ``depth``."""

    ambient: WeightSequence
    depth: int
    basis: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise FrameError("truncation depth must be positive")
        try:
            raw = linalg.as_matrix(self.basis)
        except linalg.InvalidMatrixError as exc:
            raise FrameError(str(exc)) from None
        if raw.shape[0] != 2 * self.depth:
            raise FrameError(f"frame has {raw.shape[0]} rows, expected {2 * self.depth}")
        try:
            q = linalg.orthonormalize(raw)
        except linalg.RankDeficiencyError as exc:
            raise FrameError(str(exc)) from None
        q.setflags(write=False)
        object.__setattr__(self, "basis", q)
        try:
            self.ambient.materialize(self.depth)
        except RangeError as exc:
            raise FrameError(f"ambient weights do not reach depth {self.depth}: {exc}") from None

    @classmethod
    def from_columns(cls, ambient: WeightSequence, depth: int, columns) -> "SubspaceFrame":
        """Frame from a list of column vectors (raw spans are accepted)."""
        cols = [np.asarray(c, dtype=complex).ravel() for c in columns]
        if not cols:
            raise FrameError("frame has no columns")
        return cls(ambient, depth, np.column_stack(cols))

    @classmethod
    def coordinate(cls, ambient: WeightSequence, depth: int,
                   e: Sequence[int] = (), f: Sequence[int] = ()) -> "SubspaceFrame":
        """Span of the listed e- and f-coordinates (1-based)."""
        cols = []
        for i in e:
            v = np.zeros(2 * depth, dtype=complex)
            v[i - 1] = 1
            cols.append(v)
        for i in f:
            v = np.zeros(2 * depth, dtype=complex)
            v[depth + i - 1] = 1
            cols.append(v)
        return cls.from_columns(ambient, depth, cols)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def weights(self) -> np.ndarray:
        return self.ambient.materialize(self.depth)

    def operator(self) -> np.ndarray:
        """``A`` on the 2N coordinates."""
        return np.diag(np.concatenate([self.weights(), np.zeros(self.depth)])).astype(complex)

    def restricted(self) -> np.ndarray:
        """``A|_Y`` in frame coordinates: a 2N x dim matrix."""
        w = np.concatenate([self.weights(), np.zeros(self.depth)])
        return w[:, None] * self.basis

    def to_json(self) -> dict:
        return {"ambient": self.ambient.to_json(), "depth": self.depth,
                "columns": [[[z.real, z.imag] for z in col] for col in self.basis.T]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "SubspaceFrame":
        try:
            ambient = WeightSequence.from_json(obj["ambient"])
            depth = int(obj["depth"])
            cols = [[complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in col]
                    for col in obj["columns"]]
        except (KeyError, TypeError) as exc:
            raise FrameError(f"malformed frame: {exc}") from None
        return cls.from_columns(ambient, depth, cols)


def ambient_spectrum(frame: SubspaceFrame) -> np.ndarray:
    """Singular values of the ambient ``A``, nonincreasing, length 2N."""
    w = np.concatenate([frame.weights(), np.zeros(frame.depth)])
    return np.sort(np.abs(w))[::-1]


def restricted_spectrum(frame: SubspaceFrame) -> np.ndarray:
    """Singular values of ``A|_Y``, nonincreasing, with the interlacing check."""
    s = np.linalg.svd(frame.restricted(), compute_uv=False)
    amb = ambient_spectrum(frame)
    bad = np.nonzero(s > amb[:s.size] + SPECTRUM_TOL)[0]
    if bad.size:
        k = int(bad[0])
        raise FrameError(f"interlacing fails at k={k + 1}: {s[k]:.17g} > {amb[k]:.17g}")
    return s


# --------------------------------------------------------------- Wielandt


class WielandtResult(NamedTuple):
    closed_form: float
    best_oracle: float
    singular_chain: float


def _bottom(g: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Unit vector in span(basis) minimizing the quadratic form ``g``."""
    h = basis.conj().T @ g @ basis
    _, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    return basis @ vecs[:, 0]


def _complement(space: np.ndarray, taken: Sequence[np.ndarray]) -> np.ndarray | None:
    """Orthonormal basis of ``span(space)`` orthogonal to ``taken``."""
    if not taken:
        return space
    t = np.column_stack(taken)
    r = space - t @ (t.conj().T @ space)
    u, s, _ = np.linalg.svd(r, full_matrices=False)
    keep = s > 1e-9
    if not np.any(keep):
        return None
    return u[:, keep]


def _tuple_value(g: np.ndarray, xs: Sequence[np.ndarray]) -> float:
    return float(sum((x.conj() @ g @ x).real for x in xs))


def chain_minimum(g: np.ndarray, chain: np.ndarray, dims: Sequence[int], *,
                  sweeps: int = 20, starts: int = 1, rng: np.random.Generator | None = None) -> float:
    """Minimum of ``sum <g x_j, x_j>`` over orthonormal ``x_j`` in ``E_j``.

    ``E_j`` is spanned by the first ``dims[j]`` columns of the unitary
    ``chain``.  The greedy tuple (each ``x_j`` a bottom eigenvector of ``g``
    on ``E_j`` minus the earlier picks) seeds block-coordinate descent; extra
    random orthonormal starts guard against poor local minima.
    """
    k = len(dims)
    spaces = [chain[:, :d] for d in dims]
    seeds = []
    greedy: list[np.ndarray] = []
    for j in range(k):
        greedy.append(_bottom(g, _complement(spaces[j], greedy)))
    seeds.append(greedy)
    rng = rng or np.random.default_rng(0)
    for _ in range(starts):
        xs: list[np.ndarray] = []
        for j in range(k):
            sub = _complement(spaces[j], xs)
            z = sub @ linalg.complex_gaussian(sub.shape[1], rng)
            xs.append(z / np.linalg.norm(z))
        seeds.append(xs)
    best = math.inf
    for xs in seeds:
        xs = list(xs)
        val = _tuple_value(g, xs)
        for _ in range(sweeps):
            for j in range(k):
                others = xs[:j] + xs[j + 1:]
                sub = _complement(spaces[j], others)
                if sub is not None:
                    xs[j] = _bottom(g, sub)
            new = _tuple_value(g, xs)
            if val - new <= 1e-15:
                val = min(val, new)
                break
            val = new
        best = min(best, val)
    return best


def _check_indices(indices: Sequence[int], dim: int) -> list[int]:
    idx = [int(i) for i in indices]
    if not idx:
        raise RangeError("at least one index is required")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise RangeError("indices must be strictly increasing")
    if idx[0] < 1 or idx[-1] > dim:
        raise RangeError(f"indices must lie in 1..{dim}")
    return idx


def wielandt_check(frame: SubspaceFrame, indices: Sequence[int], trials: int = 100,
                   seed: int = 0) -> WielandtResult:
    """Closed form ``sum s_{i_j}^2`` against the chain minimax oracle.

    ``best_oracle`` is the largest chain minimum over ``trials`` random
    nested chains; ``singular_chain`` is the minimum on the chain spanned by
    top right singular vectors, which attains the closed form.
    """
    r = frame.restricted()
    g = r.conj().T @ r
    g = (g + g.conj().T) / 2
    idx = _check_indices(indices, frame.dim)
    _, s, vh = np.linalg.svd(r, full_matrices=True)
    s_full = np.zeros(frame.dim)
    s_full[:s.size] = s
    closed = float(sum(s_full[i - 1] ** 2 for i in idx))
    right = vh.conj().T
    singular = chain_minimum(g, right, idx, starts=0)
    best = -math.inf
    seq = np.random.SeedSequence(seed)
    for child in seq.spawn(trials):
        rng = np.random.default_rng(child)
        chain = linalg.random_unitary(frame.dim, rng)
        best = max(best, chain_minimum(g, chain, idx, rng=rng))
    return WielandtResult(closed, best, singular)


# ---------------------------------------------------------- canonical basis


@dataclass(frozen=True)
class CanonicalBasis:
    beta: WeightSequence
    T: np.ndarray
    residual: float
    method: str
    note: str = ""


def sign_average(m) -> np.ndarray:
    """Average of ``L m L`` over all diagonal sign matrices ``L``.

    Literal enumeration; works for float, complex and Fraction (object)
    arrays, so the cancellation of off-diagonal entries is exact for
    rational input.
    """
    m = np.asarray(m)
    d = m.shape[0]
    total = np.zeros_like(m)
    for signs in product((1, -1), repeat=d):
        lam = np.array(signs, dtype=object if m.dtype == object else int)
        total = total + lam[:, None] * m * lam[None, :]
    if m.dtype == object:
        return total * Fraction(1, 2 ** d)
    return total / 2 ** d


def _mask_average(m: np.ndarray) -> np.ndarray:
    """Sign average through the mask ``S^T S / 2^d`` over all sign rows."""
    d = m.shape[0]
    acc = np.zeros((d, d), dtype=np.int64)
    for chunk in range(0, 2 ** d, 1 << 14):
        rows = np.arange(chunk, min(chunk + (1 << 14), 2 ** d))
        s = 1 - 2 * ((rows[:, None] >> np.arange(d)[None, :]) & 1)
        acc += s.T @ s
    return m * (acc / 2 ** d)


def canonical_basis(frame: SubspaceFrame, coefficients=None) -> CanonicalBasis:
    """Weights ``beta_i = ||A e_i'||`` and the map ``T`` onto X^d(beta).

    ``coefficients`` (dim x dim, invertible) expresses the basis ``e_i'`` in
    frame coordinates; columns are normalized.  It defaults to the frame
    columns.  ``T`` is given in frame coordinates, so ``T = C^-1``.  The
    residual compares the sign average of the Gram matrix of ``A e_i'``
    with ``B^2``, conjugated back to frame coordinates.
    """
    d = frame.dim
    if coefficients is None:
        c = np.eye(d, dtype=complex)
    else:
        c = linalg.as_matrix(coefficients)
        if c.shape != (d, d):
            raise FrameError(f"coefficients must be {d} x {d}")
        c = c / np.linalg.norm(c, axis=0)[None, :]
    ae = frame.restricted() @ c
    beta = np.linalg.norm(ae, axis=0)
    m = ae.conj().T @ ae
    note = ""
    if d <= EXACT_AVERAGE_DIM:
        avg, method = sign_average(m), "enumeration"
    elif d <= MASK_AVERAGE_DIM:
        avg, method = _mask_average(m), "sign-mask"
    else:
        avg, method = np.diag(np.diag(m)), "diagonal"
        note = f"dimension {d} exceeds {MASK_AVERAGE_DIM}; average taken as the diagonal"
    t = np.linalg.inv(c)
    residual = float(np.max(np.abs(avg - np.diag(beta ** 2))))
    return CanonicalBasis(WeightSequence.finite(np.clip(beta, 0.0, 1.0)), t, residual, method, note)


# ---------------------------------------------------------- subbasis embedding


@dataclass(frozen=True)
class SubbasisEmbedding:
    pi: tuple[int, ...]
    cutoffs: tuple[int, ...]
    forward: float
    backward: float

    @property
    def distortion(self) -> float:
        return self.forward * self.backward


def _schedule_of(schedule) -> SubbasisTail:
    if isinstance(schedule, SubbasisTail):
        return schedule
    if isinstance(schedule, WeightSequence) and isinstance(schedule.tail, SubbasisTail) \
            and not schedule.prefix:
        return schedule.tail
    raise FrameError("expected a subbasis schedule")


def schedule_weights(schedule: SubbasisTail) -> WeightSequence:
    return WeightSequence((), schedule)


def _at_most(x: float, level: float) -> bool:
    """``x <= level`` with exact ties snapped through a relative tolerance."""
    return x <= level * (1 + 1e-12)


def subbasis_embed(schedule, frame: SubspaceFrame) -> SubbasisEmbedding:
    """Injection of the canonical basis of Y into the schedule's basis.

    ``beta`` are the positive singular values of ``A|_Y``.  With ``M_0 = 1``
    and ``M_k`` the least ``i`` with ``beta_i <= a^-k``, indices
    ``[M_{k-1}, M_k)`` go in order to ``2j`` for ``j`` in ``[N_k, N_{k+1})``;
    kernel directions go to odd indices.  The distortion is the product of
    the cb-norms of the formal identities between ``beta`` and the weights
    at the image.
    """
    sched = _schedule_of(schedule)
    if not isinstance(frame.ambient.tail, SubbasisTail) or frame.ambient.tail != sched \
            or frame.ambient.prefix:
        raise FrameError("frame does not live in the schedule's space")
    spec = restricted_spectrum(frame)
    top = spec[0] if spec.size else 0.0
    beta = [float(x) for x in spec if x > SPECTRUM_TOL * max(top, 1.0)]
    kernel = frame.dim - len(beta)
    a = sched.a
    cutoffs = [1]
    pi: list[int] = []
    k = 0
    while cutoffs[-1] <= len(beta):
        k += 1
        level = a ** -k
        m_k = 1 + sum(1 for b in beta if not _at_most(b, level))
        lo, hi = cutoffs[-1], m_k
        room = sched.cutpoint(k + 1) - sched.cutpoint(k)
        if hi - lo > room:
            raise ScheduleViolation(f"block {k} needs {hi - lo} slots but only {room} exist")
        pi.extend(2 * (sched.cutpoint(k) + t) for t in range(hi - lo))
        cutoffs.append(m_k)
    pi.extend(2 * t + 1 for t in range(kernel))
    src = beta + [0.0] * kernel
    dst = [sched.value(j) for j in pi]
    fwd = _diag_identity(src, dst).value if pi else 1.0
    bwd = _diag_identity(dst, src).value if pi else 1.0
    return SubbasisEmbedding(tuple(pi), tuple(cutoffs), fwd, bwd)


def random_subspace(ambient: WeightSequence, depth: int, dim: int,
                    rng: np.random.Generator) -> SubspaceFrame:
    return SubspaceFrame(ambient, depth, linalg.complex_gaussian((2 * depth, dim), rng))


# ------------------------------------------------------ non-complementation


@dataclass(frozen=True)
class NoncomplementedBound:
    value: float
    divergent: bool
    certificate: str | None


def _product_certificate(alpha: WeightSequence, beta: WeightSequence) -> str | None:
    ta, tb = alpha.tail, beta.tail
    if isinstance(ta, PowerTail) and isinstance(tb, PowerTail):
        if ta.scale > 0 and tb.scale > 0 and 2 * (ta.p + tb.p) <= 1:
            return f"gamma_i^2 is a multiple of i^-{2 * (ta.p + tb.p)}, a divergent p-series"
        return None
    if isinstance(tb, PowerTail) and tb.p == 0 and tb.scale > 0 and ta is not None:
        cert = ta.divergence_certificate()
        if cert:
            return f"beta is eventually the constant {tb.scale}; alpha: {cert}"
    return None


def noncomplemented_bound(alpha: WeightSequence, beta: WeightSequence, K: int, N: int
                          ) -> NoncomplementedBound:
    """``(sum_{i=K+1}^{K+N} gamma_i^2)^(1/2) / 2`` with ``gamma_i = alpha_i beta_i``.

    This bounds from below the cb-norm of any projection onto the span of
    ``f_i = beta_i e_2i + sqrt(1 - beta_i^2) e_(2i-1)``.  Without a
    divergence certificate for ``sum gamma_i^2`` the value is still returned
    but flagged.
    """
    if K < 0 or N < 1:
        raise RangeError("need K >= 0 and N >= 1")
    a = alpha.materialize(K + N)[K:]
    b = beta.materialize(K + N)
    if np.any(b <= 0) or np.any(np.diff(b) > 0):
        raise RangeError("beta must be positive and nonincreasing")
    g2 = math.fsum(float(x) ** 2 for x in a * b[K:])
    cert = _product_certificate(alpha, beta)
    return NoncomplementedBound(math.sqrt(g2) / 2, cert is not None, cert)


def complement_vectors(beta_vals: Sequence[float]) -> np.ndarray:
    """Columns ``f_i = beta_i e_2i + sqrt(1 - beta_i^2) e_(2i-1)`` (1-based)."""
    n = len(beta_vals)
    out = np.zeros((2 * n, n))
    for i, b in enumerate(beta_vals, start=1):
        out[2 * i - 1, i - 1] = b
        out[2 * i - 2, i - 1] = math.sqrt(max(0.0, 1 - b * b))
    return out


# ------------------------------------------------------ subsequence distortion


@dataclass(frozen=True)
class DistortionBound:
    n: int
    case: str
    count: int
    ratio_sq: Fraction
    bound: float
    target: float


def _case_ratio(n: int, case: str) -> tuple[int, Fraction]:
    alpha, beta = NotSubbasisTail("alpha"), NotSubbasisTail("beta")
    lo, hi = NotSubbasisTail.block_range(n)
    threshold = 4 ** (n * n + 2 * n)
    if hi - lo <= 2 * threshold:
        raise ArithmeticError("pigeonhole split does not apply")
    count = threshold + 1
    src = beta.exact_block_value(n) ** 2
    if case == "inside":
        # images below 4^((n+1)^2) carry alpha-weights at least 2^-(n^2)
        return count, amplified_ratio_sq(count, src, alpha.exact_block_value(n) ** 2)
    if case == "outside":
        # images beyond carry alpha-weights at most 2^-((n+1)^2); bound T^-1
        return count, amplified_ratio_sq(count, alpha.exact_block_value(n + 1) ** 2, src)
    raise ValueError(f"unknown case {case!r}")


def subsequence_distortion(n: int, kind: str | None = None) -> DistortionBound:
    """Lower bound on ``max(||T||_cb, ||T^-1||_cb)`` for a basis-to-subsequence map.

    ``T`` sends the canonical basis of the beta-space to a subsequence of
    the alpha-space basis.  ``kind`` selects where block ``n`` is sent
    (``inside`` or ``outside`` the same alpha-block range); without it the
    bound is the smaller of the two cases, which holds whichever occurs.
    Norms are the closed forms of ``sum E_i1 (x) e_i`` with exact integer
    counts; ``target`` is ``2^(n/2)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    cases = [kind] if kind else ["inside", "outside"]
    best = None
    for case in cases:
        count, r = _case_ratio(n, case)
        if best is None or r < best[2]:
            best = (case, count, r)
    case, count, r = best
    bound = math.sqrt(r.numerator) / math.sqrt(r.denominator)
    return DistortionBound(n, case, count, r, bound, 2 ** (n / 2))


# ------------------------------------------------------- domination shadows


def contractive_map(alpha_vals: Sequence[float], beta_vals: Sequence[float], frame_coords,
                    rng: np.random.Generator, *, seed: int = 0) -> np.ndarray:
    """Random ``U : E -> X^d(beta)`` scaled so that ``||U||_cb <= 1``.

    ``E`` is the span of the orthonormal columns ``frame_coords`` inside the
    e-coordinates of X^d(alpha).  The scale is the certified upper bound of
    the cb-norm solver.
    """
    q = linalg.as_matrix(frame_coords)
    a = np.diag(np.asarray(alpha_vals, dtype=float)) @ q
    b = np.diag(np.asarray(beta_vals, dtype=float)).astype(complex)
    u = linalg.complex_gaussian((len(beta_vals), q.shape[1]), rng)
    res = cb_norm_general(a, b, u, seed=seed)
    return u / res.upper_bound


def fin_sum_margin(alpha_sorted: Sequence[float], beta_prime: Sequence[float]) -> float:
    """Least ``1 + sum alpha_{i_j}^2 - sum beta'_{i_j}^2`` over nonempty index sets.

    The minimizing set takes every index with a negative term, or the single
    least term when none is negative.
    """
    k = min(len(alpha_sorted), len(beta_prime))
    terms = [alpha_sorted[i] ** 2 - beta_prime[i] ** 2 for i in range(k)]
    neg = [t for t in terms if t < 0]
    return 1.0 + (math.fsum(neg) if neg else min(terms))


def fin_sum_margin_enumerated(alpha_sorted: Sequence[float], beta_prime: Sequence[float]) -> float:
    """Same quantity by enumerating every nonempty increasing index tuple."""
    k = min(len(alpha_sorted), len(beta_prime))
    best = math.inf
    for mask in range(1, 2 ** k):
        sel = [i for i in range(k) if mask >> i & 1]
        val = 1.0 + math.fsum(alpha_sorted[i] ** 2 for i in sel) \
            - math.fsum(beta_prime[i] ** 2 for i in sel)
        best = min(best, val)
    return best


def dominated_set_mass(alpha_sorted: Sequence[float], beta_prime: Sequence[float]) -> float:
    """``sum beta'_i^2`` over ``i`` with ``beta'_i > 2 alpha_i``."""
    k = min(len(alpha_sorted), len(beta_prime))
    return math.fsum(beta_prime[i] ** 2 for i in range(k) if beta_prime[i] > 2 * alpha_sorted[i])


__all__ = [
    "FrameError", "ScheduleViolation", "SubspaceFrame", "ambient_spectrum",
    "restricted_spectrum", "WielandtResult", "chain_minimum", "wielandt_check",
    "CanonicalBasis", "sign_average", "canonical_basis", "SubbasisEmbedding",
    "schedule_weights", "subbasis_embed", "random_subspace", "NoncomplementedBound",
    "noncomplemented_bound", "complement_vectors", "DistortionBound",
    "subsequence_distortion", "contractive_map", "fin_sum_margin",
    "fin_sum_margin_enumerated", "dominated_set_mass",
]
