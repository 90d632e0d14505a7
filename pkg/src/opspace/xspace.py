"""Finite sections of the diagonal spaces X^d(alpha).

An element of M_n(X^d(alpha)) is written ``sum a_i (x) e_i + sum b_i (x) f_i``
where ``e_i`` carries weight ``alpha_i`` (a row vector plus a column vector
scaled by ``alpha_i``) and ``f_i`` is a pure row vector.  Its norm is

    max(||sum a_i a_i^* + sum b_i b_i^*||, ||sum alpha_i^2 a_i^* a_i||) ** 0.5

which :func:`xd_norm` evaluates through Gram matrices and
:func:`concrete_rep_norm` re-derives from explicit block operators.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import linalg

FLAGS = frozenset({"sorted", "class-c", "non-HS"})


class RangeError(IndexError):
    """Index outside the materialized range of a weight sequence."""


class CoverageError(ValueError):
    """Partition does not cover the indices used by an element."""


class SequenceError(ValueError):
    """A weight sequence violates one of its declared invariants."""


# ---------------------------------------------------------------- tail rules


class TailRule:
    """Closed-form rule for the entries of a sequence at absolute indices.

    ``pieces(lo, hi)`` yields ``(start, stop, value)`` runs on which the
    rule is constant; ``stop`` is exclusive and runs cover ``[lo, hi)``.
    """

    kind = ""
    tends_to_zero = True

    def value(self, i: int) -> float:
        for _, _, v in self.pieces(i, i + 1):
            return v
        raise RangeError(i)

    def pieces(self, lo: int, hi: int) -> Iterator[tuple[int, int, float]]:
        raise NotImplementedError

    def divergence_certificate(self) -> str | None:
        """Symbolic reason why the sum of squares diverges, if it does."""
        return None

    def params(self) -> dict:
        return {}

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.params()}


@dataclass(frozen=True)
class ZeroTail(TailRule):
    kind = "zero"

    def pieces(self, lo, hi):
        if lo < hi:
            yield lo, hi, 0.0


@dataclass(frozen=True)
class BlocksTail(TailRule):
    """Runs of ``(count, value)`` starting right after the prefix, then zero."""

    blocks: tuple[tuple[int, float], ...]
    start: int = 1
    kind = "blocks"

    def pieces(self, lo, hi):
        pos = self.start
        for count, value in self.blocks:
            a, b = max(lo, pos), min(hi, pos + count)
            if a < b:
                yield a, b, value
            pos += count
        a = max(lo, pos)
        if a < hi:
            yield a, hi, 0.0

    def params(self):
        return {"blocks": [[c, v] for c, v in self.blocks]}


def _isqrt_block(i: int) -> int:
    """The n with 4**(n*n) <= i < 4**((n+1)*(n+1))."""
    e = (i.bit_length() - 1) // 2  # floor(log4 i)
    return math.isqrt(e)


@dataclass(frozen=True)
class NotSubbasisTail(TailRule):
    """Block rule with values 2^-(n^2) (role alpha) or 2^-(n^2+n) (role beta).

    Block ``n`` is ``4**(n*n) <= i < 4**((n+1)**2)``.
    """

    role: str = "alpha"
    kind = "notsubbasis"

    def __post_init__(self):
        if self.role not in ("alpha", "beta"):
            raise SequenceError(f"unknown role {self.role!r}")

    def exponent(self, n: int) -> int:
        return n * n + (n if self.role == "beta" else 0)

    def block_value(self, n: int) -> float:
        return 2.0 ** -self.exponent(n)

    def exact_block_value(self, n: int) -> Fraction:
        return Fraction(1, 2 ** self.exponent(n))

    @staticmethod
    def block_range(n: int) -> tuple[int, int]:
        return 4 ** (n * n), 4 ** ((n + 1) * (n + 1))

    def pieces(self, lo, hi):
        pos = max(lo, 1)
        while pos < hi:
            n = _isqrt_block(pos)
            _, stop = self.block_range(n)
            yield pos, min(stop, hi), self.block_value(n)
            pos = stop

    def divergence_certificate(self):
        return ("block n has 4^((n+1)^2) - 4^(n^2) entries of square "
                f"4^-{self.exponent_label()}; block mass grows without bound")

    def exponent_label(self):
        return "(n^2)" if self.role == "alpha" else "(n^2+n)"

    def params(self):
        return {"role": self.role}


@dataclass(frozen=True)
class SubbasisTail(TailRule):
    """Interleaved schedule: even index 2i gets a^-k for N_k <= i < N_{k+1}.

    Odd indices are zero.  Cutpoints are ``N_k = growth**k`` unless an
    explicit list is given; either way ``N_0 = 1`` and ``N_k > 2 N_{k-1}``.
    """

    a: float
    growth: int = 3
    cutpoints: tuple[int, ...] = ()
    kind = "subbasis"

    def __post_init__(self):
        if not 1.0 < self.a < 2.0:
            raise SequenceError("subbasis schedule needs a in (1, 2)")
        if self.cutpoints:
            cps = self.cutpoints
            if cps[0] != 1 or any(cps[k] <= 2 * cps[k - 1] for k in range(1, len(cps))):
                raise SequenceError("cutpoints must start at 1 and more than double")
        elif self.growth < 3:
            raise SequenceError("growth factor must be at least 3")

    def cutpoint(self, k: int) -> int:
        if self.cutpoints:
            if k < len(self.cutpoints):
                return self.cutpoints[k]
            # keep doubling strictly past the explicit list
            last = self.cutpoints[-1]
            for _ in range(k - len(self.cutpoints) + 1):
                last = 2 * last + 1
            return last
        return self.growth ** k

    def block_of(self, i: int) -> int:
        """k with N_k <= i < N_{k+1}."""
        k = 0
        while self.cutpoint(k + 1) <= i:
            k += 1
        return k

    def pieces(self, lo, hi):
        for j in range(max(lo, 1), hi):
            if j % 2:
                yield j, j + 1, 0.0
            else:
                yield j, j + 1, self.a ** -self.block_of(j // 2)

    def params(self):
        out = {"a": self.a}
        if self.cutpoints:
            out["cutpoints"] = list(self.cutpoints)
        else:
            out["growth"] = self.growth
        return out


@dataclass(frozen=True)
class Log4Tail(TailRule):
    """alpha_i = 2^-(offset + ceil(log4 i)); not Hilbert-Schmidt."""

    offset: int = 1
    kind = "log4"

    @staticmethod
    def ceil_log4(i: int) -> int:
        if i <= 1:
            return 0
        return ((i - 1).bit_length() + 1) // 2

    def exponent(self, i: int) -> int:
        return self.offset + self.ceil_log4(i)

    def pieces(self, lo, hi):
        pos = max(lo, 1)
        while pos < hi:
            m = self.ceil_log4(pos)
            stop = 4 ** m + 1
            yield pos, min(stop, hi), 2.0 ** -(self.offset + m)
            pos = stop

    def divergence_certificate(self):
        return (f"run (4^(m-1), 4^m] contributes 3*4^-({self.offset}+1) to the "
                "sum of squares for every m")

    def params(self):
        return {"offset": self.offset}


@dataclass(frozen=True)
class PowerTail(TailRule):
    """alpha_i = scale * i^-p; p = 0 gives the constant sequence ``scale``."""

    p: float
    scale: float = 1.0
    kind = "power"

    def __post_init__(self):
        if self.p < 0 or not 0.0 <= self.scale <= 1.0:
            raise SequenceError("power tail needs p >= 0 and scale in [0, 1]")

    @property
    def tends_to_zero(self):
        return self.p > 0 or self.scale == 0

    def pieces(self, lo, hi):
        if self.p == 0:
            if lo < hi:
                yield max(lo, 1), hi, self.scale
            return
        for j in range(max(lo, 1), hi):
            yield j, j + 1, self.scale * j ** -self.p

    def divergence_certificate(self):
        if self.scale > 0 and 2 * self.p <= 1:
            return f"squares scale^2 i^-{2 * self.p} form a divergent p-series"
        return None

    def params(self):
        return {"p": self.p, "scale": self.scale}


def tail_from_json(obj: Mapping | None, prefix_len: int = 0) -> TailRule | None:
    if obj is None:
        return None
    kind = obj.get("kind")
    if kind == "zero":
        return ZeroTail()
    if kind == "blocks":
        blocks = tuple((int(c), float(v)) for c, v in obj.get("blocks", []))
        return BlocksTail(blocks, start=prefix_len + 1)
    if kind == "notsubbasis":
        return NotSubbasisTail(obj.get("role", "alpha"))
    if kind == "subbasis":
        return SubbasisTail(float(obj["a"]), int(obj.get("growth", 3)),
                            tuple(int(c) for c in obj.get("cutpoints", ())))
    if kind == "log4":
        return Log4Tail(int(obj.get("offset", 1)))
    if kind == "power":
        return PowerTail(float(obj["p"]), float(obj.get("scale", 1.0)))
    raise SequenceError(f"unknown tail kind {kind!r}")


# ------------------------------------------------------------ weight sequence


@dataclass(frozen=True)
class WeightSequence:
    """Sequence in [0, 1] given by an explicit prefix and an optional tail rule.

    Indices are 1-based.  Without a tail rule the sequence is finite and
    only the prefix is defined.
    """

    prefix: tuple[float, ...] = ()
    tail: TailRule | None = None
    flags: frozenset = frozenset()
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False,
                                  repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(float(v) for v in self.prefix))
        object.__setattr__(self, "flags", frozenset(self.flags))
        unknown = self.flags - FLAGS
        if unknown:
            raise SequenceError(f"unknown flags {sorted(unknown)}")
        if any(not 0.0 <= v <= 1.0 for v in self.prefix):
            raise SequenceError("prefix entries must lie in [0, 1]")
        if "class-c" in self.flags and self.tail is not None and not self.tail.tends_to_zero:
            raise SequenceError("class-c flag needs a tail tending to zero")
        if "non-HS" in self.flags:
            if self.tail is None or self.tail.divergence_certificate() is None:
                raise SequenceError("non-HS flag needs a tail with a divergence certificate")

    @classmethod
    def finite(cls, values: Iterable[float], flags: Iterable[str] = ()) -> "WeightSequence":
        return cls(tuple(values), ZeroTail(), frozenset(flags))

    @property
    def length(self) -> float:
        """Number of defined entries (infinite when a tail rule is present)."""
        return math.inf if self.tail is not None else len(self.prefix)

    def value(self, i: int) -> float:
        if i < 1:
            raise RangeError(f"index {i} is not positive")
        if i <= len(self.prefix):
            return self.prefix[i - 1]
        if self.tail is None:
            raise RangeError(f"index {i} beyond the finite sequence of length {len(self.prefix)}")
        return self.tail.value(i)

    def pieces(self, lo: int, hi: int) -> Iterator[tuple[int, int, float]]:
        """Constant runs covering ``[lo, hi)`` (1-based, ``hi`` exclusive)."""
        lo = max(lo, 1)
        p = len(self.prefix)
        for j in range(lo, min(hi, p + 1)):
            yield j, j + 1, self.prefix[j - 1]
        start = max(lo, p + 1)
        if start < hi:
            if self.tail is None:
                raise RangeError(f"index {start} beyond the finite sequence of length {p}")
            yield from self.tail.pieces(start, hi)

    def materialize(self, depth: int) -> np.ndarray:
        """First ``depth`` entries as a read-only float array (memoized)."""
        with self._lock:
            cached = self._cache.get(depth)
        if cached is not None:
            return cached
        out = np.empty(depth)
        for a, b, v in self.pieces(1, depth + 1):
            out[a - 1:b - 1] = v
        if np.any((out < 0) | (out > 1)):
            raise SequenceError("materialized entries leave [0, 1]")
        if "sorted" in self.flags and np.any(np.diff(out) > 0):
            raise SequenceError("sequence flagged sorted is not nonincreasing")
        out.setflags(write=False)
        with self._lock:
            self._cache[depth] = out
        return out

    def scaled(self, lam: float) -> "WeightSequence":
        """Finite section ``lam * alpha`` of the first ``len(prefix)`` entries."""
        return WeightSequence(tuple(lam * v for v in self.prefix),
                              ZeroTail() if self.tail is not None else None)

    def to_json(self) -> dict:
        out: dict = {"prefix": list(self.prefix)}
        if self.tail is not None:
            out["tail"] = self.tail.to_json()
        if self.flags:
            out["flags"] = sorted(self.flags)
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "WeightSequence":
        if not isinstance(obj, Mapping):
            raise SequenceError("weight sequence must be a JSON object")
        prefix = tuple(float(v) for v in obj.get("prefix", []))
        tail = tail_from_json(obj.get("tail"), len(prefix))
        return cls(prefix, tail, frozenset(obj.get("flags", [])))


# ----------------------------------------------------------------- elements


@dataclass(frozen=True)
class MatElement:
    """``sum a_i (x) e_i + sum b_i (x) f_i`` with n x n coefficient matrices."""

    n: int
    e_coeffs: tuple[tuple[int, np.ndarray], ...] = ()
    f_coeffs: tuple[tuple[int, np.ndarray], ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("matrix size must be positive")
        for name in ("e_coeffs", "f_coeffs"):
            coeffs = tuple((int(i), linalg.as_matrix(a)) for i, a in getattr(self, name))
            idx = [i for i, _ in coeffs]
            if len(set(idx)) != len(idx):
                raise ValueError(f"repeated index in {name}")
            if any(i < 1 for i in idx):
                raise ValueError(f"indices in {name} must be positive")
            if any(a.shape != (self.n, self.n) for _, a in coeffs):
                raise ValueError(f"all coefficients must be {self.n} x {self.n}")
            object.__setattr__(self, name, coeffs)

    @classmethod
    def from_dicts(cls, n: int, e: Mapping[int, object] | None = None,
                   f: Mapping[int, object] | None = None) -> "MatElement":
        return cls(n, tuple((e or {}).items()), tuple((f or {}).items()))

    def indices(self) -> set[int]:
        return {i for i, _ in self.e_coeffs} | {i for i, _ in self.f_coeffs}

    def restrict(self, block: set[int]) -> "MatElement":
        return MatElement(self.n,
                          tuple((i, a) for i, a in self.e_coeffs if i in block),
                          tuple((i, b) for i, b in self.f_coeffs if i in block))

    def to_json(self) -> dict:
        def enc(a):
            return [[[z.real, z.imag] for z in row] for row in a]

        return {"n": self.n,
                "e": [[i, enc(a)] for i, a in self.e_coeffs],
                "f": [[i, enc(b)] for i, b in self.f_coeffs]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "MatElement":
        def dec(rows):
            return np.array([[complex(*z) if isinstance(z, (list, tuple)) else complex(z)
                              for z in row] for row in rows], dtype=complex)

        n = int(obj["n"])
        return cls(n,
                   tuple((int(i), dec(a)) for i, a in obj.get("e", [])),
                   tuple((int(i), dec(b)) for i, b in obj.get("f", [])))


def _weights_for(alpha: WeightSequence, x: MatElement) -> dict[int, float]:
    try:
        return {i: alpha.value(i) for i, _ in x.e_coeffs}
    except RangeError as exc:
        raise RangeError(f"element uses an index outside the weight sequence: {exc}") from None


def _gram_norm(h: np.ndarray) -> float:
    if h.size == 0:
        return 0.0
    return max(float(np.linalg.eigvalsh(h)[-1]), 0.0)


def norm_with_weights(weights: Mapping[int, float], x: MatElement) -> float:
    """Gram-matrix formula with explicit e-weights."""
    n = x.n
    row = np.zeros((n, n), dtype=complex)
    col = np.zeros((n, n), dtype=complex)
    for i, a in x.e_coeffs:
        row += a @ a.conj().T
        col += (weights[i] ** 2) * (a.conj().T @ a)
    for _, b in x.f_coeffs:
        row += b @ b.conj().T
    return math.sqrt(max(_gram_norm(row), _gram_norm(col)))


def xd_norm(alpha: WeightSequence, x: MatElement) -> float:
    """Norm of ``x`` in M_n(X^d(alpha))."""
    return norm_with_weights(_weights_for(alpha, x), x)


def concrete_rep_norm(alpha: WeightSequence, x: MatElement) -> float:
    """Norm from the block-row and block-column realization of the basis."""
    w = _weights_for(alpha, x)
    blocks = [a for _, a in x.e_coeffs] + [b for _, b in x.f_coeffs]
    if not blocks:
        return 0.0
    row = np.hstack(blocks)
    col_blocks = [w[i] * a for i, a in x.e_coeffs]
    col = np.vstack(col_blocks) if col_blocks else np.zeros((1, x.n))
    return max(linalg.op_norm(row), linalg.op_norm(col))


# ------------------------------------------------------------ partitions


@dataclass(frozen=True)
class SpacePartition:
    blocks: tuple[frozenset, ...]

    def __post_init__(self):
        blocks = tuple(frozenset(int(i) for i in b) for b in self.blocks)
        seen: set[int] = set()
        for b in blocks:
            if seen & b:
                raise CoverageError("partition blocks overlap")
            seen |= b
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def of(cls, *blocks: Iterable[int]) -> "SpacePartition":
        return cls(tuple(frozenset(b) for b in blocks))

    def check_range(self, depth: int) -> None:
        union = set().union(*self.blocks) if self.blocks else set()
        if union != set(range(1, depth + 1)):
            raise CoverageError(f"partition does not cover exactly 1..{depth}")


def split_bounds(alpha: WeightSequence, x: MatElement, part: SpacePartition):
    """(max block norm, sqrt(m) times it, whole norm)."""
    covered = set().union(*part.blocks) if part.blocks else set()
    gap = x.indices() - covered
    if gap:
        raise CoverageError(f"indices {sorted(gap)} are not covered by the partition")
    lower = max((xd_norm(alpha, x.restrict(set(b))) for b in part.blocks), default=0.0)
    upper = math.sqrt(len(part.blocks)) * lower
    return lower, upper, xd_norm(alpha, x)


# -------------------------------------------------------------- sampling


def random_element(rng: np.random.Generator, n: int, e_indices: Sequence[int],
                   f_indices: Sequence[int] = ()) -> MatElement:
    """Complex Gaussian coefficients (real and imaginary parts N(0, 1/2))."""
    return MatElement(n,
                      tuple((i, linalg.complex_gaussian((n, n), rng)) for i in e_indices),
                      tuple((i, linalg.complex_gaussian((n, n), rng)) for i in f_indices))


def scale_check(alpha: WeightSequence, lam: float, samples: int, seed: int,
                depth: int | None = None, max_n: int = 3) -> float:
    """Largest observed ``||x||_alpha / ||x||_{lam alpha}`` over random elements.

    The ratio always lies in [1, 1/lam].
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    if depth is None:
        depth = len(alpha.prefix) if alpha.prefix else 1
    weights = alpha.materialize(depth)
    rng = np.random.default_rng(seed)
    worst = 1.0
    for _ in range(samples):
        n = int(rng.integers(1, max_n + 1))
        m = int(rng.integers(1, depth + 1))
        e_idx = sorted(rng.choice(np.arange(1, depth + 1), size=m, replace=False).tolist())
        f_idx = sorted(rng.choice(np.arange(1, depth + 1),
                                  size=int(rng.integers(0, depth + 1)), replace=False).tolist())
        x = random_element(rng, n, e_idx, f_idx)
        full = {i: float(weights[i - 1]) for i in e_idx}
        small = {i: lam * w for i, w in full.items()}
        worst = max(worst, norm_with_weights(full, x) / norm_with_weights(small, x))
    return worst
