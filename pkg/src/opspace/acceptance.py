"""Quantitative acceptance suites, shared by the test run and ``opspace verify``.

Each suite returns a :class:`SuiteResult`; :func:`run_all` runs them in
order.  Suites are deterministic for a fixed master seed.
"""
from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import banach, cbnorm, linalg, seqlab, subspaces, xspace
from .xspace import (Log4Tail, NotSubbasisTail, PowerTail, SubbasisTail, WeightSequence,
                     ZeroTail)


@dataclass(frozen=True)
class SuiteResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d}. {self.title}: {self.detail} ({self.seconds:.2f} s)"


def _sorted_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.sort(rng.random(n))[::-1]


# ------------------------------------------------------------------ suites


def norm_formula(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 5))
        alpha = WeightSequence.finite(rng.random(8))
        k = int(rng.integers(1, 6))
        picks = rng.choice(np.arange(1, 17), size=k, replace=False)
        e = [int(i) for i in picks if i <= 8]
        f = [int(i) - 8 for i in picks if i > 8]
        x = xspace.random_element(rng, n, e, f)
        a, b = xspace.xd_norm(alpha, x), xspace.concrete_rep_norm(alpha, x)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst <= 1e-8, f"worst relative gap {worst:.2e} over 200 instances", 5.0


def _grid_sup(gain: np.ndarray, cost: np.ndarray, step: float = 1e-3) -> float:
    """Grid oracle: one coordinate on a 1e-3 grid, the others at 0 or 1."""
    n = gain.size
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    best = 0.0
    for j in range(n):
        others = [i for i in range(n) if i != j]
        for bits in itertools.product((0.0, 1.0), repeat=len(others)):
            g0 = sum(gain[i] * b for i, b in zip(others, bits))
            c0 = sum(cost[i] * b for i, b in zip(others, bits))
            val = g0 + grid * gain[j]
            ok = c0 + grid * cost[j] <= 1.0 + 1e-15
            if np.any(ok):
                best = max(best, float(np.max(val[ok])))
    return best


def solver_concordance(seed: int = 0):
    rng = np.random.default_rng(seed)
    gap_grid = gap_grad = 0.0
    for t in range(100):
        d = int(rng.integers(1, 7))
        a, b = rng.random(d), rng.random(d)
        greedy = cbnorm._diag_identity(a, b).value
        grid = math.sqrt(max(1.0, _grid_sup(b ** 2, a ** 2)))
        grad = cbnorm.cb_norm_general(np.diag(a), np.diag(b), np.eye(d), exact_path=False,
                                      seed=t).value
        gap_grid = max(gap_grid, abs(greedy - grid))
        gap_grad = max(gap_grad, abs(greedy - grad))
    ok = gap_grid <= 2e-3 and gap_grad <= 1e-6
    return ok, f"grid gap {gap_grid:.2e}, gradient gap {gap_grad:.2e}", 30.0


def row_inverse(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 30))
        alpha = WeightSequence.finite(rng.random(n) * rng.random())
        zero = WeightSequence.finite([0.0] * n)
        got = cbnorm.cb_norm_diag_identity(zero, alpha, n).value
        want = max(1.0, linalg.hs_norm(alpha.materialize(n)))
        worst = max(worst, abs(got - want))
    return worst <= 1e-10, f"worst gap {worst:.2e} over 50 sequences", None


def same_basis(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = math.inf
    for t in range(100):
        alpha = WeightSequence.finite(_sorted_weights(rng, 6))
        beta = WeightSequence.finite(_sorted_weights(rng, 6))
        u = np.eye(6) + 0.5 * linalg.complex_gaussian((6, 6), rng)
        rep = cbnorm.same_basis_check(alpha, beta, u, 6, seed=t)
        if not rep.bound_holds:
            return False, f"triple {t}: product {rep.id_product:.6g} > 16 C^4", None
        worst = min(worst, rep.slack)
    return True, f"least slack 16 C^4 - product = {worst:.3g} over 100 triples", None


def not_subbasis(seed: int = 0):
    parts = []
    for n in range(1, 5):
        r = subspaces.subsequence_distortion(n)
        lo, hi = NotSubbasisTail.block_range(n)
        if r.bound < r.target or hi - lo >= 2 ** 50:
            return False, f"n={n}: bound {r.bound} below {r.target}", 1.0
        parts.append(f"n={n}: {r.bound:.4g} >= {r.target:.4g}")
    return True, "; ".join(parts), 1.0


def dominate_shadows(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst_margin, worst_mass = math.inf, 0.0
    for t in range(100):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n + 1))
        alpha = _sorted_weights(rng, n) * rng.random()
        beta = _sorted_weights(rng, n)
        q = np.linalg.qr(linalg.complex_gaussian((n, k), rng))[0]
        u = subspaces.contractive_map(alpha, beta, q, rng, seed=t)
        bp = np.linalg.svd(np.diag(beta) @ u, compute_uv=False)
        m1 = subspaces.fin_sum_margin(alpha, bp)
        m2 = subspaces.fin_sum_margin_enumerated(alpha, bp)
        if abs(m1 - m2) > 1e-12:
            return False, f"instance {t}: margin routes disagree ({m1} vs {m2})", None
        worst_margin = min(worst_margin, m1)
        worst_mass = max(worst_mass, subspaces.dominated_set_mass(alpha, bp))
    ok = worst_margin >= -1e-8 and worst_mass <= 2 + 1e-8
    return ok, f"least fin_sum margin {worst_margin:.3g}, largest set mass {worst_mass:.3g}", None


def sequence_corpus() -> list[WeightSequence]:
    s = frozenset({"sorted"})
    nh = frozenset({"sorted", "non-HS"})
    out = [WeightSequence.finite(v, s) for v in
           ([1.0], [1.0, 0.5], [0.9, 0.9, 0.1], [0.5] * 6, [0.3, 0.2, 0.1, 0.05], [0.0])]
    for off in range(1, 7):
        out.append(WeightSequence((), Log4Tail(off), nh))
        out.append(WeightSequence((1.0,) * off, Log4Tail(off), nh))
    for role in ("alpha", "beta"):
        out.append(WeightSequence((), NotSubbasisTail(role), nh))
        out.append(WeightSequence((1.0, 1.0), NotSubbasisTail(role), nh))
    out.append(WeightSequence((), PowerTail(0.5), nh))
    out.append(WeightSequence((1.0,), PowerTail(0.5), nh))
    out.append(WeightSequence((), PowerTail(0.25, 0.5), nh))
    out.append(WeightSequence((), PowerTail(0.0, 0.5), nh))
    out.append(WeightSequence((), PowerTail(1.0), s))
    out.append(WeightSequence((0.7, 0.7, 0.7), ZeroTail(), s))
    out.append(WeightSequence((0.9, 0.6), Log4Tail(1), nh))
    out.append(WeightSequence((0.8,), PowerTail(0.5, 0.5), nh))
    return out


def _star_exhaustive(beta, gamma, n: int, Ks):
    """For each K: least mass over all S with |beta_i - gamma_i| <= K off S, and its minimizers."""
    diffs = [seqlab._absdiff(beta.value(i), gamma.value(i)) for i in range(1, n + 1)]
    weights = [seqlab.pow4_neg(beta.value(i)) + seqlab.pow4_neg(gamma.value(i))
               for i in range(1, n + 1)]
    table = []
    for mask in range(2 ** n):
        sub = tuple(i + 1 for i in range(n) if mask >> i & 1)
        off = max((diffs[i] for i in range(n) if not mask >> i & 1), default=0)
        table.append((off, sum((weights[i - 1] for i in sub), Fraction(0)), sub))
    out = {}
    for K in Ks:
        feas = [(m, sub) for off, m, sub in table if off <= K]
        best = min(m for m, _ in feas)
        out[K] = (best, [sub for m, sub in feas if m == best])
    return out


def sequence_relations(seed: int = 0):
    corpus = sequence_corpus()
    depth = 1024
    kinds = {}
    for i, a in enumerate(corpus):
        for j, b in enumerate(corpus):
            kinds[i, j] = seqlab.seq_equivalent(a, b, depth).kind
    n = len(corpus)
    if any(kinds[i, i] != seqlab.EQUIVALENT for i in range(n)):
        return False, "reflexivity fails", 10.0
    if any(kinds[i, j] != kinds[j, i] for i in range(n) for j in range(n)):
        return False, "symmetry fails", 10.0
    eq = seqlab.EQUIVALENT
    for i, j, k in itertools.product(range(n), repeat=3):
        if kinds[i, j] == eq and kinds[j, k] == eq and kinds[i, k] != eq:
            return False, f"transitivity fails at {(i, j, k)}", 10.0
    rng = random.Random(seed)
    checked = 0
    for n_len in range(1, 13):
        for _ in range(3):
            vals_b = sorted(rng.randrange(0, 6) for _ in range(n_len))
            vals_g = sorted(rng.randrange(0, 6) for _ in range(n_len))
            beta, gamma = seqlab.GenIntSeq(tuple(vals_b)), seqlab.GenIntSeq(tuple(vals_g))
            table = _star_exhaustive(beta, gamma, n_len, range(0, 4))
            for K in range(0, 4):
                ok, forced, mass = seqlab.star_witness(beta, gamma, K, n_len)
                best, argmin = table[K]
                if mass != best or forced not in argmin or ok != (best <= K):
                    return False, f"minimal witness not optimal for {vals_b}, {vals_g}, K={K}", 10.0
                checked += 1
    nh = frozenset({"sorted", "non-HS"})
    a = WeightSequence((), NotSubbasisTail("alpha"), nh)
    b = WeightSequence((), NotSubbasisTail("beta"), nh)
    v = seqlab.seq_equivalent(a, b, 10 ** 6)
    masses = [m for _, m in v.certificate]
    if v.kind != seqlab.NOT_EQUIVALENT or any(y < x for x, y in zip(masses, masses[1:])):
        return False, f"not_subbasis pair gave {v.kind}", 10.0
    return True, (f"{n} sequences, {n ** 3} triples; {checked} witness checks; "
                  f"certificate through {v.certificate[-1][0]} with mass {float(masses[-1]):.4g}"), 10.0


def reduction_laws(seed: int = 0):
    rng = random.Random(seed)
    depth = 10 ** 4
    base = seqlab.GenIntSeq((), seqlab.Log4IntTail(1))
    for t in range(20):
        b = seqlab.XiPoint(tuple(rng.randrange(i) for i in range(1, depth + 1)))
        spread = rng.randrange(0, 5)
        c = seqlab.XiPoint(tuple(min(i - 1, max(0, v + rng.randint(-spread, spread)))
                                 for i, v in enumerate(b.entries, start=1)))
        K = seqlab.eks_discrepancy(b, c, depth)
        pb, pc = seqlab.borel2_phi(b, base, depth), seqlab.borel2_phi(c, base, depth)
        ok, _, _ = seqlab.star_witness(pb, pc, K, depth)
        if not ok:
            return False, f"pair {t}: discrepancy {K} but no witness at K", None
    part = seqlab.DyadicPartition()
    points = [seqlab.b_epsilon(bits, part, depth)
              for bits in itertools.product((0, 1), repeat=5)]
    least = min(seqlab.eks_discrepancy(x, y, depth)
                for x, y in itertools.combinations(points, 2))
    if least <= 1000:
        return False, f"b_eps pairwise discrepancy only {least}", None
    return True, f"20 pairs hold; least b_eps discrepancy {least} over 496 pairs", None


def round_trip(seed: int = 0):
    rng = np.random.default_rng(seed)
    depth = 100
    for t in range(20):
        s_o = np.sort(rng.uniform(1e-6, 1.0, depth))[::-1]
        base = seqlab.n_sequence(s_o).materialize(depth)
        beta, run = [], 0
        for nb in base:
            run = max(run, nb + int(rng.integers(0, 3)))
            beta.append(run)
        cut = int(rng.integers(depth // 2, depth + 1))
        beta = beta[:cut] + [seqlab.INF] * (depth - cut)
        gseq = seqlab.GenIntSeq(tuple(beta))
        angles = seqlab.y_map(gseq, s_o, depth)
        cols = []
        for i, sin, cos in angles:
            v = np.zeros(2 * depth)
            v[i - 1], v[depth + i - 1] = sin, cos
            cols.append(v)
        frame = subspaces.SubspaceFrame.from_columns(WeightSequence.finite(s_o), depth, cols)
        spec = subspaces.restricted_spectrum(frame)
        got = [seqlab.n_value(min(float(x), 1.0)) if x > 1e-300 else seqlab.INF for x in spec]
        if got != beta:
            bad = next(i for i, (x, y) in enumerate(zip(got, beta)) if x != y)
            return False, f"point {t}: index {bad + 1} gives {got[bad]} not {beta[bad]}", None
    return True, "20 points recovered exactly at depth 100", None


def averaging_identity(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for d in range(1, 9):
        for _ in range(3):
            amb = WeightSequence.finite(rng.random(d + 2))
            frame = subspaces.random_subspace(amb, d + 2, d, rng)
            coef = linalg.complex_gaussian((d, d), rng) + 2 * np.eye(d)
            res = subspaces.canonical_basis(frame, coef)
            if res.method != "enumeration":
                return False, f"d={d} did not enumerate sign patterns", None
            worst = max(worst, res.residual)
    return worst <= 1e-12, f"largest residual {worst:.2e} for d <= 8", None


def wielandt(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst_gap, worst_attain, chains = -math.inf, 0.0, 0
    for t in range(100):
        d = int(rng.integers(1, 7))
        n = 6
        frame = subspaces.random_subspace(WeightSequence.finite(_sorted_weights(rng, n)),
                                          n, d, rng)
        k = int(rng.integers(1, d + 1))
        idx = sorted(int(i) for i in rng.choice(np.arange(1, d + 1), k, replace=False))
        r = subspaces.wielandt_check(frame, idx, trials=100, seed=seed * 1000 + t)
        chains += 100
        worst_gap = max(worst_gap, r.best_oracle - r.closed_form)
        worst_attain = max(worst_attain, abs(r.singular_chain - r.closed_form))
    ok = worst_gap <= 1e-9 and worst_attain <= 1e-9
    return ok, (f"{chains} random chains, largest excess {worst_gap:.2e}; "
                f"singular chains within {worst_attain:.2e}"), None


def subbasis(seed: int = 0):
    rng = np.random.default_rng(seed)
    sched = SubbasisTail(1.5)
    amb = WeightSequence((), sched)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 60))
        frame = subspaces.random_subspace(amb, 200, d, rng)
        worst = max(worst, subspaces.subbasis_embed(sched, frame).distortion)
    return worst <= 1.5 + 1e-8, f"largest distortion {worst:.6f} (a = 1.5)", None


def banach_suite(seed: int = 0):
    grid = [i / 100 for i in range(101)]
    err = max(abs(banach.c_invariant(banach.make_Phi(t, 50))[0] - t) for t in grid)
    if err > 1e-12:
        return False, f"c(Phi(t)) off by {err:.2e}", 5.0
    rng = np.random.default_rng(seed)
    frames = [banach.make_Phi(t, 50) for t in (0.0, 0.5, 1.0)]
    frames += [banach.BanachFrame(6, rng.standard_normal((7, int(rng.integers(2, 6)))))
               for _ in range(20)]
    weak = max(abs(s - p) for s, p in (banach.weak_sup_check(f) for f in frames))
    if weak > 1e-9:
        return False, f"weak_sup_check off by {weak:.2e}", 5.0
    pairs = [(t, t) for t in grid[::10]] + [(t, t + 5e-10) for t in grid[1:-1:10]] \
        + [(t, t + 2e-9) for t in grid[1:-1:10]] + [(0.2, 0.7), (0.0, 1.0)]
    for t1, t2 in pairs:
        got = banach.isometric(banach.make_Phi(t1, 50), banach.make_Phi(t2, 50))
        if got != (abs(t1 - t2) <= 1e-9):
            return False, f"isometric({t1}, {t2}) = {got}", 5.0
    return True, f"c error {err:.1e}, weak-limit error {weak:.1e}, {len(pairs)} pairs", 5.0


def split_sandwich(seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        depth = int(rng.integers(2, 9))
        alpha = WeightSequence.finite(rng.random(depth))
        m = int(rng.integers(1, depth + 1))
        labels = rng.integers(0, m, depth)
        blocks = [[i + 1 for i in range(depth) if labels[i] == b] for b in range(m)]
        part = xspace.SpacePartition.of(*[b for b in blocks if b])
        e = [i for i in range(1, depth + 1) if rng.random() < 0.7]
        f = [i for i in range(1, depth + 1) if rng.random() < 0.3]
        x = xspace.random_element(rng, int(rng.integers(1, 4)), e, f)
        lower, upper, whole = xspace.split_bounds(alpha, x, part)
        worst = max(worst, lower - whole, whole - upper)
    return worst <= 1e-10, f"largest violation {worst:.2e} (negative means slack)", None


SUITES: list[tuple[int, str, Callable]] = [
    (1, "norm formula vs concrete representation", norm_formula),
    (2, "cb-norm solver concordance", solver_concordance),
    (3, "row-space inverse norm", row_inverse),
    (4, "same-basis identity bound", same_basis),
    (5, "subsequence distortion certificates", not_subbasis),
    (6, "domination shadows", dominate_shadows),
    (7, "sequence-relation soundness", sequence_relations),
    (8, "reduction laws", reduction_laws),
    (9, "n/Y round trip", round_trip),
    (10, "sign-averaging identity", averaging_identity),
    (11, "Wielandt minimax", wielandt),
    (12, "subbasis embedding distortion", subbasis),
    (13, "Banach classification", banach_suite),
    (14, "split-norm sandwich", split_sandwich),
]


def run_suite(number: int, seed: int = 0) -> SuiteResult:
    num, title, fn = SUITES[number - 1]
    start = time.perf_counter()
    passed, detail, limit = fn(seed)
    secs = time.perf_counter() - start
    if limit is not None and secs >= limit:
        passed = False
        detail += f"; runtime {secs:.2f} s exceeds {limit:g} s"
    return SuiteResult(num, title, bool(passed), detail, secs)


def run_all(seed: int = 0) -> list[SuiteResult]:
    return [run_suite(n, seed) for n, _, _ in SUITES]
