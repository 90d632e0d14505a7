"""Completely bounded norms of maps between X(A) spaces.

For contractions A, B and T : X(A) -> X(B),

    ||T||_cb^2 = max(||T||^2, sup tr(T^* B^* B T v))

with the sup over positive v with ||v|| <= 1 and tr(A^* A v) <= 1
(v = u u^* for the u of the characterization).  The sup is a linear
objective over a convex set; it is solved exactly by a fractional
knapsack when the two quadratic forms commute, and by projected-gradient
ascent otherwise.  A one-dimensional Lagrangian dual gives an upper bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg
from .xspace import WeightSequence

MAX_EXACT_COUNT = 2 ** 53
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class PreconditionError(ValueError):
    """Input violates an operation's precondition."""


@dataclass(frozen=True)
class CbNormResult:
    value: float
    witness: np.ndarray
    method: str
    certified: bool
    upper_bound: float | None = None

    def to_json(self) -> dict:
        w = self.witness
        return {
            "value": self.value,
            "method": self.method,
            "certified": self.certified,
            "upper_bound": self.upper_bound,
            "witness": [[[z.real, z.imag] for z in row] for row in w] if w.size else [],
        }


# ------------------------------------------------------------ knapsack


def knapsack(gain: Sequence, cost: Sequence, budget=1):
    """Fractional knapsack: maximize sum gain_i s_i, sum cost_i s_i <= budget.

    Inputs are converted to exact fractions, so the optimum is exact for
    float data.  Free items (cost 0) are always taken in full.  Returns
    ``(optimum, s)`` with ``s`` a list of fractions in [0, 1].
    """
    g = [Fraction(x) for x in gain]
    c = [Fraction(x) for x in cost]
    if any(x < 0 for x in g + c):
        raise PreconditionError("knapsack data must be nonnegative")
    s = [Fraction(0)] * len(g)
    left = Fraction(budget)
    total = Fraction(0)
    for i in range(len(g)):
        if c[i] == 0:
            s[i] = Fraction(1)
            total += g[i]
    order = sorted((i for i in range(len(g)) if c[i] > 0 and g[i] > 0),
                   key=lambda i: (-(g[i] / c[i]), i))
    for i in order:
        if left <= 0:
            break
        take = min(Fraction(1), left / c[i])
        s[i] = take
        left -= take * c[i]
        total += take * g[i]
    return total, s


def cb_norm_diag_identity(alpha: WeightSequence, beta: WeightSequence, depth: int) -> CbNormResult:
    """cb-norm of the formal identity X^d(alpha) -> X^d(beta) at a truncation."""
    if depth < 1:
        raise PreconditionError("empty truncation")
    a = alpha.materialize(depth)
    b = beta.materialize(depth)
    return _diag_identity(a, b)


def _diag_identity(a, b) -> CbNormResult:
    opt, s = knapsack([float(x) ** 2 for x in b], [float(x) ** 2 for x in a])
    value = math.sqrt(float(max(Fraction(1), opt)))
    witness = np.diag(np.sqrt(np.array([float(x) for x in s]))).astype(complex)
    return CbNormResult(value, witness, "exact-greedy", True, value)


# ------------------------------------------------- convex-set machinery


def _clip_unit(h: np.ndarray) -> np.ndarray:
    """Frobenius projection of a Hermitian matrix onto {0 <= v <= I}."""
    w, q = np.linalg.eigh((h + h.conj().T) / 2)
    return (q * np.clip(w, 0.0, 1.0)) @ q.conj().T


def project_feasible(w: np.ndarray, p: np.ndarray, iters: int = 100) -> np.ndarray:
    """Frobenius projection onto {0 <= v <= I, tr(p v) <= 1}.

    The minimizer is ``clip(w - mu p)`` for the multiplier mu >= 0 found by
    bisection; ``tr(p clip(w - mu p))`` is nonincreasing in mu.
    """
    v = _clip_unit(w)
    if np.trace(p @ v).real <= 1.0:
        return v
    lo, hi = 0.0, 1.0
    while np.trace(p @ _clip_unit(w - hi * p)).real > 1.0:
        hi *= 2.0
        if hi > 1e300:
            break
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.trace(p @ _clip_unit(w - mid * p)).real > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(hi, 1.0):
            break
    return _clip_unit(w - hi * p)


def projected_gradient_sup(p: np.ndarray, m: np.ndarray, *, starts: int = 4, seed: int = 0,
                           steps: int = 200, warm: Sequence[np.ndarray] = ()):
    """Maximize tr(m v) over {0 <= v <= I, tr(p v) <= 1} by projected ascent.

    Each start runs with a geometrically growing step size; the best feasible
    iterate over all starts is returned as ``(value, v)``.
    """
    d = p.shape[0]
    rng = np.random.default_rng(seed)
    scale = max(linalg.op_norm(m), 1e-300)
    inits = [np.zeros((d, d), dtype=complex)] + list(warm)
    for _ in range(max(starts - 1, 0)):
        g = linalg.complex_gaussian((d, d), rng)
        inits.append(g @ g.conj().T / d)
    best_val, best_v = -math.inf, inits[0]
    for v0 in inits:
        v = project_feasible(v0, p)
        eta = 1.0 / scale
        for _ in range(steps):
            nv = project_feasible(v + eta * m, p)
            done = np.max(np.abs(nv - v)) <= 1e-13
            v = nv
            eta = min(eta * 1.5, 1e8 / scale)
            if done:
                break
        val = float(np.trace(m @ v).real)
        if val > best_val:
            best_val, best_v = val, v
    return best_val, best_v


def dual_upper_bound(p: np.ndarray, m: np.ndarray, iters: int = 200) -> float:
    """min over lam >= 0 of lam + sum of positive eigenvalues of (m - lam p).

    Every lam gives a valid upper bound on the sup; golden-section search
    on this convex function tightens it.
    """

    def g(lam: float) -> float:
        ev = np.linalg.eigvalsh(m - lam * p)
        return lam + float(np.sum(ev[ev > 0]))

    lo, hi = 0.0, g(0.0)
    if hi <= 0:
        return max(hi, 0.0)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = g(x1), g(x2)
    best = min(g(0.0), f1, f2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = g(x2)
        best = min(best, f1, f2)
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return best


def _joint_diagonal(p: np.ndarray, m: np.ndarray, tol: float = 1e-10):
    """Common eigenbasis of commuting Hermitian p and m, or None."""
    scale = max(linalg.op_norm(p), linalg.op_norm(m), 1.0)
    if np.max(np.abs(p @ m - m @ p)) > tol * scale * scale:
        return None
    off_p = p - np.diag(np.diag(p))
    off_m = m - np.diag(np.diag(m))
    if np.max(np.abs(off_p)) <= tol * scale and np.max(np.abs(off_m)) <= tol * scale:
        return np.eye(p.shape[0], dtype=complex)
    _, q = np.linalg.eigh(p + _GOLDEN * m)
    for h in (p, m):
        r = q.conj().T @ h @ q
        if np.max(np.abs(r - np.diag(np.diag(r)))) > tol * scale:
            return None
    return q


def _check_contraction(name: str, x: np.ndarray) -> None:
    if x.size and linalg.op_norm(x) > 1.0 + 1e-12:
        raise PreconditionError(f"{name} is not a contraction (norm {linalg.op_norm(x):.6g})")


def cb_norm_general(A, B, T, *, starts: int = 4, seed: int = 0,
                    exact_path: bool = True) -> CbNormResult:
    """cb-norm of T : X(A) -> X(B) for contractions A, B.

    ``T`` acts between the underlying Hilbert spaces: shape
    ``(dim H_B, dim H_A)``; ``A`` has ``dim H_A`` columns and ``B`` has
    ``dim H_B`` columns.
    """
    A = linalg.as_matrix(A, allow_empty=True)
    B = linalg.as_matrix(B, allow_empty=True)
    T = linalg.as_matrix(T, allow_empty=True)
    if T.shape[1] != A.shape[1] or T.shape[0] != B.shape[1]:
        raise PreconditionError(f"incompatible shapes A{A.shape}, B{B.shape}, T{T.shape}")
    _check_contraction("A", A)
    _check_contraction("B", B)
    d = T.shape[1]
    t_norm = linalg.op_norm(T)
    p = A.conj().T @ A if A.size else np.zeros((d, d), dtype=complex)
    bt = B @ T if B.size else np.zeros((0, d), dtype=complex)
    m = bt.conj().T @ bt
    p, m = (p + p.conj().T) / 2, (m + m.conj().T) / 2

    q = _joint_diagonal(p, m) if exact_path else None
    if q is not None:
        pd = np.clip(np.diag(q.conj().T @ p @ q).real, 0.0, None)
        md = np.clip(np.diag(q.conj().T @ m @ q).real, 0.0, None)
        opt, s = knapsack(md.tolist(), pd.tolist())
        sup = float(opt)
        u = q @ np.diag(np.sqrt([float(x) for x in s]))
        value = math.sqrt(max(t_norm ** 2, sup))
        return CbNormResult(value, u, "optimizer", False, value)

    sup, v = projected_gradient_sup(p, m, starts=starts, seed=seed)
    upper = dual_upper_bound(p, m)
    w, vecs = np.linalg.eigh(v)
    u = (vecs * np.sqrt(np.clip(w, 0.0, None))) @ vecs.conj().T
    value = math.sqrt(max(t_norm ** 2, sup, 0.0))
    return CbNormResult(value, u, "optimizer", False, math.sqrt(max(t_norm ** 2, upper)))


# ------------------------------------------------ amplification bounds


def _exact(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def amplified_ratio_sq(count: int, src_weight_sq, dst_weight_sq) -> Fraction:
    """Exact ``max(1, count w_dst^2) / max(1, count w_src^2)``.

    These are the squared norms of ``sum_{i in I} E_i1 (x) e_i`` in the target
    and source spaces when all weights on the index set are equal.
    """
    if not isinstance(count, int) or count < 1:
        raise PreconditionError("index set must have at least one element")
    if count > MAX_EXACT_COUNT:
        raise OverflowError(f"index count {count} exceeds the exact range 2^53")
    ws, wd = _exact(src_weight_sq), _exact(dst_weight_sq)
    if not (0 <= ws <= 1 and 0 <= wd <= 1):
        raise PreconditionError("weights must lie in [0, 1]")
    return max(Fraction(1), count * wd) / max(Fraction(1), count * ws)


def amplified_lower_bound(count: int, src_weight_sq, dst_weight_sq) -> float:
    """Certified lower bound on the cb-norm of a map sending the
    ``E_i1``-patterned element over ``count`` source indices of squared weight
    ``src_weight_sq`` to target indices of squared weight ``dst_weight_sq``."""
    r = amplified_ratio_sq(count, src_weight_sq, dst_weight_sq)
    return math.sqrt(r.numerator) / math.sqrt(r.denominator) if r.denominator > 1 else math.sqrt(r)


def element_norm_sq(count: int, weight_sq) -> Fraction:
    """Squared norm of ``sum_{i in I} E_i1 (x) e_i`` with equal squared weights."""
    if count > MAX_EXACT_COUNT:
        raise OverflowError(f"index count {count} exceeds the exact range 2^53")
    return max(Fraction(1), count * _exact(weight_sq))


# ------------------------------------------------------- same basis


@dataclass(frozen=True)
class SameBasisReport:
    C: float
    id_product: float
    bound_holds: bool
    slack: float


def same_basis_check(alpha: WeightSequence, beta: WeightSequence, U, depth: int,
                     *, seed: int = 0) -> SameBasisReport:
    """Compare ||id||_cb ||id^-1||_cb with 16 C^4 for an isomorphism U."""
    U = linalg.as_matrix(U)
    if U.shape != (depth, depth):
        raise PreconditionError(f"U must be {depth} x {depth}")
    s = linalg.singular_values(U)
    if s[-1] <= 1e-12 * s[0]:
        raise PreconditionError("U is singular on the truncation")
    A = np.diag(alpha.materialize(depth)).astype(complex)
    B = np.diag(beta.materialize(depth)).astype(complex)
    fwd = cb_norm_general(A, B, U, seed=seed)
    inv = cb_norm_general(B, A, np.linalg.inv(U), seed=seed + 1)
    c = max(fwd.value, inv.value)
    there = cb_norm_diag_identity(alpha, beta, depth).value
    back = cb_norm_diag_identity(beta, alpha, depth).value
    prod = there * back
    bound = 16 * c ** 4
    return SameBasisReport(c, prod, prod <= bound + 1e-6, bound - prod)
