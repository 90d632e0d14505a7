"""Sequence relations, the generalized-integer space S_A and reduction maps.

Two families of relations live here:

* domination and equivalence of weight sequences (multiplicative constant
  K off an exceptional set of finite square mass), and
* the relation ~* on nondecreasing sequences over N u {inf} (additive
  constant K off a set whose 4^-x mass is at most K).

Every mass that decides a verdict is an exact :class:`fractions.Fraction`.
Claims about the infinite tail are made only when the tail rules give a
closed form; otherwise the verdict is ``Inconclusive`` at the scanned depth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .xspace import (BlocksTail, Log4Tail, NotSubbasisTail, SubbasisTail,
                     WeightSequence, ZeroTail)

INF = math.inf

EQUIVALENT = "Equivalent"
NOT_EQUIVALENT = "NotEquivalent"
INCONCLUSIVE = "Inconclusive"


class PreconditionError(ValueError):
    pass


class MembershipError(ValueError):
    """A sequence is not an element of S_A (or of the product space Xi)."""


class ConstructionError(ValueError):
    """The block construction for the reduction map cannot be carried out."""


def pow4_neg(x) -> Fraction:
    """Exact 4^-x for x in N u {inf}."""
    if x == INF:
        return Fraction(0)
    return Fraction(1, 4 ** int(x))


def _absdiff(a, b):
    if a == INF and b == INF:
        return 0
    if a == INF or b == INF:
        return INF
    return abs(int(a) - int(b))


# ------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class EquivVerdict:
    kind: str
    K: int | None = None
    witness: tuple[int, ...] = ()
    certificate: tuple[tuple[int, Fraction], ...] = ()
    depth: int | None = None
    note: str = ""
    certificate_K: int | None = None

    @property
    def equivalent(self) -> bool:
        return self.kind == EQUIVALENT

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "K": self.K,
            "witness": list(self.witness),
            "certificate": [[d, m] for d, m in self.certificate],
            "depth": self.depth,
            "note": self.note,
            "certificate_K": self.certificate_K,
        }


# ---------------------------------------------- weight-sequence relations


def _tail_region_start(seq: WeightSequence) -> int:
    """First index from which only the closed-form rule determines entries."""
    start = len(seq.prefix) + 1
    if isinstance(seq.tail, BlocksTail):
        start = seq.tail.start + sum(c for c, _ in seq.tail.blocks)
    return start


def _eventually_zero(seq: WeightSequence) -> bool:
    return seq.tail is None or isinstance(seq.tail, (ZeroTail, BlocksTail))


def _non_hs(seq: WeightSequence) -> bool:
    t = seq.tail
    if isinstance(t, SubbasisTail):
        return not t.cutpoints and t.a * t.a < t.growth
    return t is not None and t.divergence_certificate() is not None


def _tail_forcing(alpha: WeightSequence, beta: WeightSequence, K: int):
    """Decide the part of {i : beta_i > K alpha_i} beyond the explicit region.

    Returns ``("finite", None)`` when no index past the explicit region is
    forced, ``("divergent", reason, every_k)`` when the forced tail carries
    infinite square mass (``every_k`` true if this holds for all K), or
    ``None`` when the rules give no closed form.
    """
    ta, tb = alpha.tail, beta.tail
    if _eventually_zero(beta):
        return ("finite", None)
    if _eventually_zero(alpha):
        if _non_hs(beta):
            return ("divergent", "the dominated sequence has a non-Hilbert-Schmidt tail "
                    "where the dominating one vanishes", True)
        return None
    if ta == tb:
        return ("finite", None)
    if isinstance(ta, Log4Tail) and isinstance(tb, Log4Tail):
        ratio = Fraction(2) ** (ta.offset - tb.offset)
        if ratio <= K:
            return ("finite", None)
        return ("divergent", f"constant tail ratio {ratio} exceeds K on a "
                "non-Hilbert-Schmidt tail", False)
    if isinstance(ta, NotSubbasisTail) and isinstance(tb, NotSubbasisTail):
        if ta.role == "alpha" and tb.role == "beta":
            return ("finite", None)
        return ("divergent", "on block n the ratio is 2^n, so every block with "
                "2^n > K is forced, and it carries square mass 4^(2n+1) - 1", True)
    return None


def _merged_pieces(seqs: Sequence, lo: int, hi: int) -> Iterator[tuple]:
    """Common constant runs of several sequences on [lo, hi)."""
    if lo >= hi:
        return
    iters = [s.pieces(lo, hi) for s in seqs]
    cur = [next(it) for it in iters]
    pos = lo
    while pos < hi:
        stop = min(c[1] for c in cur)
        yield (pos, stop) + tuple(c[2] for c in cur)
        pos = stop
        for k, c in enumerate(cur):
            if c[1] == stop and pos < hi:
                cur[k] = next(iters[k])


_SQ_SHIFT = 2 * 1100  # 2^-_SQ_SHIFT divides the square of every float


def _exceeds(vb: float, K, va: float) -> bool:
    """Exact ``vb > K * va`` for floats and an integer or Fraction ``K``."""
    approx = K * va
    if abs(vb - approx) > 1e-9 * max(abs(vb), abs(approx)):
        return vb > approx
    return Fraction(vb) > Fraction(K) * Fraction(va)


def _square_units(v: float) -> int:
    """``v^2`` as an integer multiple of ``2^-_SQ_SHIFT`` (exact for floats)."""
    n, d = v.as_integer_ratio()
    return (n * n) << (_SQ_SHIFT - 2 * (d.bit_length() - 1))


def forced_mass_profile(alpha: WeightSequence, beta: WeightSequence, K,
                        points: Sequence[int]) -> list[Fraction]:
    """Exact sums of beta_i^2 over i <= d with beta_i > K alpha_i, for each d in points."""
    out: list[Fraction] = []
    total, pos = 0, 1
    for d in points:
        for a, b, va, vb in _merged_pieces((alpha, beta), pos, d + 1):
            if vb != 0 and _exceeds(vb, K, va):
                total += (b - a) * _square_units(vb)
        pos = max(pos, d + 1)
        out.append(Fraction(total, 1 << _SQ_SHIFT))
    return out


def forced_mass(alpha: WeightSequence, beta: WeightSequence, K, depth: int) -> Fraction:
    """Exact sum of beta_i^2 over i <= depth with beta_i > K alpha_i."""
    return forced_mass_profile(alpha, beta, K, [depth])[0]


def _forced_set(alpha, beta, K, stop: int) -> tuple[int, ...]:
    K = Fraction(K)
    out = []
    for a, b, va, vb in _merged_pieces((alpha, beta), 1, stop):
        if Fraction(vb) > K * Fraction(va):
            out.extend(range(a, b))
    return tuple(out)


def _checkpoints(depth: int) -> list[int]:
    pts, d = [], 4
    while d < depth:
        pts.append(d)
        d *= 4
    pts.append(depth)
    return pts


def dominates(alpha: WeightSequence, beta: WeightSequence, depth: int,
              K_max: int = 64) -> EquivVerdict:
    """Does alpha dominate beta (beta_i <= K alpha_i off a square-summable set)?"""
    for s in (alpha, beta):
        if "sorted" not in s.flags:
            raise PreconditionError("domination is defined on sequences flagged sorted")
        s.materialize(min(depth, 4096))
    stop = max(_tail_region_start(alpha), _tail_region_start(beta))
    every_k_reason = None
    for K in range(1, K_max + 1):
        tail = _tail_forcing(alpha, beta, K)
        if tail is None:
            break
        if tail[0] == "finite":
            witness = _forced_set(alpha, beta, K, stop)
            return EquivVerdict(EQUIVALENT, K, witness, depth=depth,
                                note="exceptional set is finite")
        if tail[2]:
            every_k_reason = tail[1]
            break
    # the numeric certificate uses K = 1, whose forced set is the largest
    points = _checkpoints(depth)
    cert = tuple(zip(points, forced_mass_profile(alpha, beta, 1, points)))
    if every_k_reason is not None:
        return EquivVerdict(NOT_EQUIVALENT, certificate=cert, depth=depth,
                            note=every_k_reason, certificate_K=1)
    return EquivVerdict(INCONCLUSIVE, certificate=cert, depth=depth,
                        note="no closed form decides the tail", certificate_K=1)


def seq_equivalent(alpha: WeightSequence, beta: WeightSequence, depth: int,
                   K_max: int = 64) -> EquivVerdict:
    """Equivalence: both dominations, with one K and the union of the sets."""
    fwd = dominates(alpha, beta, depth, K_max)
    back = dominates(beta, alpha, depth, K_max)
    for v in (fwd, back):
        if v.kind == NOT_EQUIVALENT:
            return v
    if fwd.equivalent and back.equivalent:
        K = max(fwd.K, back.K)
        stop = max(_tail_region_start(alpha), _tail_region_start(beta))
        s = sorted(set(_forced_set(alpha, beta, K, stop)) | set(_forced_set(beta, alpha, K, stop)))
        return EquivVerdict(EQUIVALENT, K, tuple(s), depth=depth,
                            note="K^-1 alpha_i <= beta_i <= K alpha_i off the witness set")
    return EquivVerdict(INCONCLUSIVE, depth=depth,
                        certificate=fwd.certificate or back.certificate,
                        note="one direction is undecided")


def replay_equivalence(alpha: WeightSequence, beta: WeightSequence,
                       verdict: EquivVerdict, depth: int) -> bool:
    """Check an Equivalent verdict's two-sided bound off its witness up to depth."""
    if not verdict.equivalent:
        return False
    K = Fraction(verdict.K)
    skip = set(verdict.witness)
    for a, b, va, vb in _merged_pieces((alpha, beta), 1, depth + 1):
        fa, fb = Fraction(va), Fraction(vb)
        ok = fa <= K * fb and fb <= K * fa
        if not ok and any(i not in skip for i in range(a, b)):
            return False
    return True


# -------------------------------------------------- generalized integers


class IntTail:
    kind = ""

    def value(self, i: int):
        raise NotImplementedError

    def pieces(self, lo: int, hi: int):
        for i in range(lo, hi):
            yield i, i + 1, self.value(i)

    def first_index_above(self, threshold: int, start: int, limit: int | None = None):
        """Smallest i >= start with value(i) > threshold.

        None when there is no such index or it lies beyond ``limit``.
        """
        raise NotImplementedError

    def first_value_above(self, threshold: int):
        """The entry at :meth:`first_index_above`, computed without the index."""
        raise NotImplementedError

    def borel2_ready(self) -> bool:
        """Entries tend to infinity while sum 4^-entry diverges."""
        return False

    def params(self) -> dict:
        return {}

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.params()}


@dataclass(frozen=True)
class ConstIntTail(IntTail):
    c: int
    kind = "const"

    def value(self, i):
        return self.c

    def pieces(self, lo, hi):
        if lo < hi:
            yield lo, hi, self.c

    def first_index_above(self, threshold, start, limit=None):
        return start if self.c > threshold and (limit is None or start <= limit) else None

    def first_value_above(self, threshold):
        return self.c if self.c > threshold else None

    def params(self):
        return {"value": self.c}


@dataclass(frozen=True)
class InfTail(IntTail):
    kind = "inf"

    def value(self, i):
        return INF

    def pieces(self, lo, hi):
        if lo < hi:
            yield lo, hi, INF

    def first_index_above(self, threshold, start, limit=None):
        return start if limit is None or start <= limit else None

    def first_value_above(self, threshold):
        return INF


@dataclass(frozen=True)
class LinearIntTail(IntTail):
    slope: int
    offset: int = 0
    kind = "linear"

    def value(self, i):
        return self.slope * i + self.offset

    def first_index_above(self, threshold, start, limit=None):
        if self.slope <= 0:
            i = start if self.value(start) > threshold else None
        else:
            i = max(start, (threshold - self.offset) // self.slope + 1)
        return i if i is not None and (limit is None or i <= limit) else None

    def first_value_above(self, threshold):
        i = self.first_index_above(threshold, 1)
        return None if i is None else self.value(i)

    def params(self):
        return {"slope": self.slope, "offset": self.offset}


@dataclass(frozen=True)
class Log4IntTail(IntTail):
    """offset + ceil(log4 i): entries grow while sum 4^-entry diverges."""

    offset: int = 1
    kind = "log4"

    def value(self, i):
        return self.offset + Log4Tail.ceil_log4(i)

    def pieces(self, lo, hi):
        pos = max(lo, 1)
        while pos < hi:
            m = Log4Tail.ceil_log4(pos)
            stop = 4 ** m + 1
            yield pos, min(stop, hi), self.offset + m
            pos = stop

    def first_index_above(self, threshold, start, limit=None):
        m = threshold - self.offset + 1
        if m <= 0:
            i = start
        else:
            if limit is not None and 2 * (m - 1) > limit.bit_length():
                return None
            i = max(start, 4 ** (m - 1) + 1)
        return i if limit is None or i <= limit else None

    def first_value_above(self, threshold):
        return max(threshold + 1, self.offset)

    def borel2_ready(self):
        return True

    def params(self):
        return {"offset": self.offset}


def int_tail_from_json(obj):
    if obj is None:
        return None
    kind = obj.get("kind")
    if kind == "const":
        return ConstIntTail(_parse_gen_int(obj["value"]))
    if kind == "inf":
        return InfTail()
    if kind == "linear":
        return LinearIntTail(int(obj["slope"]), int(obj.get("offset", 0)))
    if kind == "log4":
        return Log4IntTail(int(obj.get("offset", 1)))
    raise PreconditionError(f"unknown integer tail kind {kind!r}")


def _parse_gen_int(v):
    if v in ("inf", "Infinity", INF) or v is None:
        return INF
    if isinstance(v, float) and v.is_integer():
        return int(v)
    if isinstance(v, int):
        return v
    raise PreconditionError(f"not a generalized integer: {v!r}")


def _enc_gen_int(v):
    return "inf" if v == INF else int(v)


@dataclass(frozen=True)
class GenIntSeq:
    """Nondecreasing sequence over N u {inf}: explicit prefix plus tail rule.

    Without a tail the sequence is finite and only its prefix is defined.
    """

    prefix: tuple = ()
    tail: IntTail | None = None

    def __post_init__(self):
        vals = tuple(_parse_gen_int(v) for v in self.prefix)
        object.__setattr__(self, "prefix", vals)
        for a, b in zip(vals, vals[1:]):
            if b < a:
                raise MembershipError("generalized-integer sequence must be nondecreasing")
        if vals and self.tail is not None and self.tail.value(len(vals) + 1) < vals[-1]:
            raise MembershipError("tail rule drops below the prefix")

    @property
    def length(self):
        return INF if self.tail is not None else len(self.prefix)

    def value(self, i: int):
        if 1 <= i <= len(self.prefix):
            return self.prefix[i - 1]
        if self.tail is None or i < 1:
            raise IndexError(f"index {i} outside the sequence")
        return self.tail.value(i)

    def pieces(self, lo: int, hi: int):
        p = len(self.prefix)
        for j in range(max(lo, 1), min(hi, p + 1)):
            yield j, j + 1, self.prefix[j - 1]
        start = max(lo, p + 1)
        if start < hi:
            if self.tail is None:
                raise IndexError(f"index {start} outside the finite sequence")
            yield from self.tail.pieces(start, hi)

    def materialize(self, depth: int) -> list:
        out = []
        for a, b, v in self.pieces(1, depth + 1):
            out.extend([v] * (b - a))
        return out

    def check_dominates_base(self, base: "GenIntSeq", depth: int) -> None:
        for a, b, v, w in _merged_pieces((self, base), 1, depth + 1):
            if v < w:
                raise MembershipError(f"entry {a} is {v}, below the base value {w}")

    def first_index_above(self, threshold, start: int = 1, limit: int | None = None):
        for i in range(start, len(self.prefix) + 1):
            if self.prefix[i - 1] > threshold:
                return i if limit is None or i <= limit else None
        if self.tail is None:
            return None
        return self.tail.first_index_above(threshold, max(start, len(self.prefix) + 1), limit)

    def first_value_above(self, threshold, start: int = 1):
        for i in range(start, len(self.prefix) + 1):
            if self.prefix[i - 1] > threshold:
                return self.prefix[i - 1]
        return None if self.tail is None else self.tail.first_value_above(threshold)

    def to_json(self) -> dict:
        out: dict = {"prefix": [_enc_gen_int(v) for v in self.prefix]}
        if self.tail is not None:
            out["tail"] = self.tail.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "GenIntSeq":
        if isinstance(obj, list):
            return cls(tuple(obj))
        return cls(tuple(obj.get("prefix", [])), int_tail_from_json(obj.get("tail")))


# ------------------------------------------------------------- n and Y


def n_value(s: float):
    """sup{l in N : 2^(1-l) >= s}; inf when s = 0."""
    if s < 0 or s > 1:
        raise PreconditionError(f"singular value {s} outside [0, 1]")
    if s == 0:
        return INF
    m, e = math.frexp(s)  # s = m 2^e with m in [1/2, 1)
    return 2 - e if m == 0.5 else 1 - e


def n_map(spectrum: Sequence[float], k: int):
    if not 1 <= k <= len(spectrum):
        raise IndexError(f"index {k} outside a spectrum of length {len(spectrum)}")
    return n_value(float(spectrum[k - 1]))


def n_sequence(spectrum: Sequence[float]) -> GenIntSeq:
    return GenIntSeq(tuple(n_value(float(s)) for s in spectrum))


def y_target(beta_i, s_o: float) -> float:
    """Singular value assigned to coordinate i: min(s_o, 3 * 2^-(beta_i + 1)).

    The value lies strictly inside the dyadic cell (2^-beta, 2^(1-beta)] that
    n maps to beta_i, so n recovers beta_i with rounding headroom.
    """
    if beta_i == INF:
        return 0.0
    return min(s_o, 1.5 * 2.0 ** -int(beta_i))


def y_map(beta: GenIntSeq, base_spectrum: Sequence[float], depth: int):
    """Angles of the frame g_i = sin(phi_i) e_i + cos(phi_i) f_i realizing beta.

    Returns a list of ``(i, sin phi_i, cos phi_i)``.
    """
    if depth > len(base_spectrum):
        raise PreconditionError("base spectrum shorter than the requested depth")
    base = n_sequence(base_spectrum[:depth])
    beta.check_dominates_base(base, depth)
    out = []
    for i, (b, s) in enumerate(zip(beta.materialize(depth), base_spectrum[:depth]), start=1):
        t = y_target(b, float(s))
        sin = 0.0 if t == 0.0 else t / float(s)
        out.append((i, sin, math.sqrt(max(0.0, 1.0 - sin * sin))))
    return out


# ------------------------------------------------------------- relation ~*


def star_witness(beta, gamma, K: int, n: int) -> tuple[bool, tuple[int, ...], Fraction]:
    """Minimal witness I_n = {i <= n : |beta_i - gamma_i| > K} and its mass."""
    if K < 0 or n < 1:
        raise PreconditionError("need K >= 0 and n >= 1")
    forced: list[int] = []
    mass = Fraction(0)
    for a, b, vb, vg in _merged_pieces((beta, gamma), 1, n + 1):
        if _absdiff(vb, vg) > K:
            forced.extend(range(a, b))
            mass += (b - a) * (pow4_neg(vb) + pow4_neg(vg))
    return mass <= K, tuple(forced), mass


def star_equiv_at(beta, gamma, K: int, n: int) -> bool:
    """Membership of (beta, gamma) in F(K, n)."""
    return star_witness(beta, gamma, K, n)[0]


def subset_mass(beta, gamma, subset: Iterable[int]) -> Fraction:
    return sum((pow4_neg(beta.value(i)) + pow4_neg(gamma.value(i)) for i in subset), Fraction(0))


def _int_tail_start(seq) -> int:
    return len(seq.prefix) + 1


def _divergent_int_tail(t) -> bool:
    """Whether sum 4^-entry over the tail diverges."""
    return isinstance(t, (ConstIntTail, Log4IntTail)) and not (
        isinstance(t, ConstIntTail) and t.c == INF)


def _star_tail(beta, gamma, K: int):
    """Closed-form behaviour of ~* beyond both prefixes.

    ``("clear",)`` when no tail index is forced at this K,
    ``("diverges", every_k)`` when forced tail indices carry infinite mass,
    ``None`` when the rules give no closed form.
    """
    tb, tg = beta.tail, gamma.tail
    if tb is None or tg is None:
        return ("clear",) if tb is None and tg is None else None
    if tb == tg:
        return ("clear",)
    kinds = {type(tb), type(tg)}
    if kinds == {ConstIntTail} or kinds == {Log4IntTail}:
        gap = abs(tb.c - tg.c) if kinds == {ConstIntTail} else abs(tb.offset - tg.offset)
        return ("clear",) if K >= gap else ("diverges", False)
    if InfTail in kinds:
        other = tg if isinstance(tb, InfTail) else tb
        if _divergent_int_tail(other):
            return ("diverges", True)
        return None
    if kinds == {ConstIntTail, Log4IntTail}:
        # the difference grows without bound and the log4 side is not summable
        return ("diverges", True)
    if kinds == {LinearIntTail} and tb.slope > 0 and tg.slope > 0:
        if tb.slope == tg.slope and K >= abs(tb.offset - tg.offset):
            return ("clear",)
        return ("converges",)
    return None


def _linear_tail_mass(t: LinearIntTail, n: int) -> Fraction:
    """Exact sum of 4^-(slope i + offset) over i > n."""
    first = pow4_neg(t.value(n + 1))
    return first / (1 - pow4_neg(t.slope))


def star_equiv(beta, gamma, depth: int, K_max: int = 16) -> EquivVerdict:
    """Relation ~* decided at ``depth``, with tail claims only from closed forms.

    Failing F(K, n) refutes K for good, since F(K) lies inside F(K, n).
    """
    if beta.tail is None or gamma.tail is None:
        n = int(min(depth, beta.length, gamma.length))
    else:
        n = max(depth, _int_tail_start(beta) - 1, _int_tail_start(gamma) - 1)
    refuted, candidate, every_k = [], None, False
    for K in range(0, K_max + 1):
        ok, forced, mass = star_witness(beta, gamma, K, n)
        tail = _star_tail(beta, gamma, K)
        if ok and tail == ("clear",):
            return EquivVerdict(EQUIVALENT, K, forced, depth=n,
                                note="no index beyond the scanned depth is forced")
        if ok and tail == ("converges",):
            bound = mass + _linear_tail_mass(beta.tail, n) + _linear_tail_mass(gamma.tail, n)
            if bound <= K:
                return EquivVerdict(EQUIVALENT, K, forced, depth=n,
                                    note=f"every index beyond {n} may be added to the witness; "
                                         f"total mass stays at most {bound} <= {K}")
        if not ok or (tail is not None and tail[0] == "diverges"):
            refuted.append((K, mass))
            every_k = every_k or (tail is not None and tail[0] == "diverges" and tail[1])
        elif candidate is None:
            candidate = (K, forced)
    if every_k and len(refuted) == K_max + 1:
        return EquivVerdict(NOT_EQUIVALENT, certificate=tuple(refuted), depth=n,
                            note="forced tail indices carry infinite mass for every K")
    if candidate is not None:
        return EquivVerdict(INCONCLUSIVE, candidate[0], candidate[1], tuple(refuted), n,
                            note=f"pair lies in F({candidate[0]}, {n}); the tail is undecided")
    return EquivVerdict(INCONCLUSIVE, certificate=tuple(refuted), depth=n,
                        note=f"no K <= {K_max} works through depth {n}")


# ----------------------------------------------------------------- Xi


@dataclass(frozen=True)
class XiPoint:
    """Point of prod_k {0, ..., k-1}, materialized as an explicit prefix."""

    entries: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.entries)
        for i, v in enumerate(vals, start=1):
            if not 0 <= v <= i - 1:
                raise MembershipError(f"coordinate {i} is {v}, outside 0..{i - 1}")
        object.__setattr__(self, "entries", vals)

    def value(self, i: int) -> int:
        if i > len(self.entries):
            raise IndexError(f"coordinate {i} beyond the materialized depth {len(self.entries)}")
        return self.entries[i - 1]

    def to_json(self):
        return {"entries": list(self.entries)}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, list):
            return cls(tuple(obj))
        return cls(tuple(obj["entries"]))


def eks_discrepancy(b: XiPoint, c: XiPoint, depth: int) -> int:
    return max((abs(b.value(i) - c.value(i)) for i in range(1, depth + 1)), default=0)


class DyadicPartition:
    """I_k = {i : 2^k exactly divides i}, k >= 0; the standard partition.

    Each block is the arithmetic progression 2^k, 3 * 2^k, 5 * 2^k, ...
    """

    def block_of(self, i: int) -> int:
        return (i & -i).bit_length() - 1

    def members(self, k: int, depth: int) -> range:
        return range(2 ** k, depth + 1, 2 ** (k + 1))

    def to_json(self):
        return {"kind": "dyadic"}


@dataclass(frozen=True)
class ExplicitPartition:
    """Finitely many listed blocks; indices not listed form block -1."""

    blocks: tuple[frozenset, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for b in self.blocks:
            if seen & b:
                raise PreconditionError("partition blocks overlap")
            seen |= b

    def block_of(self, i):
        for k, b in enumerate(self.blocks):
            if i in b:
                return k
        return -1

    def to_json(self):
        return {"kind": "explicit", "blocks": [sorted(b) for b in self.blocks]}


def partition_from_json(obj):
    if obj is None or obj.get("kind", "dyadic") == "dyadic":
        return DyadicPartition()
    return ExplicitPartition(tuple(frozenset(int(i) for i in b) for b in obj["blocks"]))


def b_epsilon(epsilon: Sequence[int] | Callable[[int], int], partition, depth: int) -> XiPoint:
    """b(i) = 0 when i lies in a block I_k with eps(k) = 0, and i - 1 otherwise.

    ``epsilon`` is a bit list indexed by block number (missing bits are 0)
    or a callable.
    """
    if callable(epsilon):
        bit = epsilon
    else:
        bits = list(epsilon)

        def bit(k):
            return bits[k] if 0 <= k < len(bits) else 0

    return XiPoint(tuple(0 if bit(partition.block_of(i)) == 0 else i - 1
                         for i in range(1, depth + 1)))


# ------------------------------------------------------------- borel2


@dataclass(frozen=True)
class Borel2Blocks:
    """Cutpoints of the construction; block k is I_k = {p_k, ..., q_k - 1}.

    ``p[k - 1]`` and ``q[k - 1]`` belong to block k.  ``open_block`` is true
    when the last block was still accumulating mass at the scan limit, in
    which case its ``q`` is ``None``.
    """

    p: tuple[int, ...]
    q: tuple[int | None, ...]
    masses: tuple[Fraction, ...] = field(default=(), compare=False)
    next_p: int | None = None
    next_cap: object = None

    @property
    def open_block(self) -> bool:
        return bool(self.q) and self.q[-1] is None


def borel2_blocks(alpha: GenIntSeq, depth: int) -> Borel2Blocks:
    """Scan for 1 = p_1 < q_1 < p_2 < ... through index ``depth``.

    The scan walks constant runs of the base, so astronomically large
    depths are fine for closed-form tails.

    Block k closes at the first index where its running mass of 4^-alpha_i
    strictly exceeds 4^(2k); the next block starts at the first index j with
    alpha_j > k + q_k (strict), located through the tail's closed form.
    """
    if alpha.tail is None or not alpha.tail.borel2_ready():
        raise ConstructionError("the base needs a tail tending to infinity with "
                                "divergent sum of 4^-alpha_i")
    ps, qs, masses = [], [], []
    k, start = 1, 1
    while start is not None and start <= depth:
        ps.append(start)
        target = Fraction(4) ** (2 * k)
        mass = Fraction(0)
        closed = None
        for a, b, v in alpha.pieces(start, depth + 1):
            w = pow4_neg(v)
            if w == 0:
                continue
            need = (target - mass) / w
            cnt = b - a
            if cnt > need:
                take = math.floor(need) + 1
                mass += take * w
                closed = a + take  # q_k: one past the last index of the block
                break
            mass += cnt * w
        masses.append(mass)
        if closed is None:
            qs.append(None)
            return Borel2Blocks(tuple(ps), tuple(qs), tuple(masses), None)
        qs.append(closed)
        cap = alpha.first_value_above(k + closed, closed)
        start = alpha.first_index_above(k + closed, closed, limit=depth)
        if start is None:
            return Borel2Blocks(tuple(ps), tuple(qs), tuple(masses), None,
                                INF if cap is None else cap)
        k += 1
    return Borel2Blocks(tuple(ps), tuple(qs), tuple(masses), start)


def borel2_phi(b: XiPoint, alpha: GenIntSeq, depth: int) -> GenIntSeq:
    """Image of b: alpha_j + b_k on block k, min(alpha_j + k, alpha_{p_{k+1}}) between blocks."""
    blocks = borel2_blocks(alpha, depth)
    base = alpha.materialize(depth)
    out = list(base)
    nblocks = len(blocks.p)
    for k in range(1, nblocks + 1):
        p, q = blocks.p[k - 1], blocks.q[k - 1]
        hi = depth + 1 if q is None else min(q, depth + 1)
        shift = b.value(k)
        for j in range(p, hi):
            out[j - 1] = base[j - 1] + shift
        if q is None or q > depth:
            break
        nxt = blocks.p[k] if k < nblocks else blocks.next_p
        cap = alpha.value(nxt) if nxt is not None else blocks.next_cap
        gap_end = depth + 1 if nxt is None else min(nxt, depth + 1)
        for j in range(q, gap_end):
            out[j - 1] = min(base[j - 1] + k, cap)
    return GenIntSeq(tuple(out))
