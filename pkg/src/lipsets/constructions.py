"""Constructive procedures: monotone builders, ternary decompositions,
balance points, the small-lip sawtooth, and the lip-1 sum.

All builders return exact piecewise-linear functions whose slopes encode the
defining integrals; the companion check_* operations produce finite-scale
reports with exact certificates.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .intervals import Interval, IntervalSet, RationalLike, rat
from .density import (
    DensityReport,
    FAILS,
    HOLDS,
    HOLDS_AT_SCALE,
    check_strongly_dense_at,
    check_strongly_one_sided_dense_at,
    check_weakly_center_dense_at,
    check_weakly_dense_at,
)
from .pcw import (
    PiecewiseLinear,
    SlopeProfile,
    build_phi,
    build_signed_integral,
    geometric_grid,
)


# -- monotone builders ---------------------------------------------------------


def build_monotone_lip1(E: IntervalSet, window: Interval) -> PiecewiseLinear:
    """φ(x) = ∫ 1_E from the window's left edge: slope 1 on E, 0 off E."""
    if E.is_empty:
        return PiecewiseLinear.constant(0, window)
    return build_phi(E, window.lo, window)


@dataclass(frozen=True)
class MonotoneConditionsReport:
    mode: str
    on_set: tuple[tuple[Fraction, DensityReport], ...]
    on_complement: tuple[tuple[Fraction, DensityReport], ...]

    @property
    def all_hold(self) -> bool:
        good = (HOLDS, HOLDS_AT_SCALE)
        return all(rep.verdict in good for _, rep in self.on_set + self.on_complement)

    @property
    def failures(self):
        good = (HOLDS, HOLDS_AT_SCALE)
        return tuple(
            (x, rep)
            for x, rep in self.on_set + self.on_complement
            if rep.verdict not in good
        )


def _sample_points(
    S: IntervalSet, window: Interval, step: Fraction, edge_margin: Optional[Fraction] = None
) -> list[Fraction]:
    """Interval endpoints of S plus a step-grid, all within the window.

    Points within edge_margin of the window boundary are skipped: densities
    there reflect the truncation, not the represented set.
    """
    margin = step if edge_margin is None else edge_margin
    lo, hi = window.lo + margin, window.hi - margin
    pts = {e for e in S.endpoints() if lo <= e <= hi}
    x = window.lo
    while x <= window.hi:
        if lo <= x <= hi and S.contains(x):
            pts.add(x)
        x += step
    return sorted(pts)


def check_monotone_conditions(
    E: IntervalSet,
    mode: str,
    window: Interval,
    resolution: RationalLike,
) -> MonotoneConditionsReport:
    """Finite-scale check of the monotone Lip 1 / lip 1 characterizations.

    Lip1 mode: E weakly dense at sampled points of E, and E^c strongly dense
    at sampled points of E^c.  lip1 mode: E strongly one-sided dense on E,
    E^c weakly center dense on E^c.  The complement is taken closed, so its
    samples include E's boundary; certificates are exact either way.
    """
    res = rat(resolution)
    if not (0 < res < 1):
        raise ValueError("resolution must be in (0,1)")
    if mode not in ("Lip1", "lip1"):
        raise ValueError("mode must be 'Lip1' or 'lip1'")
    comp = E.complement_within(window)
    grid = geometric_grid(res, Fraction(1, 2), 4)
    on_set = []
    for x in _sample_points(E.clip(window), window, res):
        if mode == "Lip1":
            rep = check_weakly_dense_at(E, x, res)
        else:
            rep = check_strongly_one_sided_dense_at(E, x, grid, tolerance=res)
        on_set.append((x, rep))
    on_comp = []
    for x in _sample_points(comp, window, res):
        if mode == "Lip1":
            rep = check_strongly_dense_at(comp, x, grid, tolerance=res)
        else:
            rep = check_weakly_center_dense_at(comp, x, res)
        on_comp.append((x, rep))
    return MonotoneConditionsReport(mode, tuple(on_set), tuple(on_comp))


# -- ternary decompositions ------------------------------------------------------


@dataclass(frozen=True)
class TernaryDecomposition:
    """Partition of the window into E1 (slope +1), E0 (flat), Em1 (slope -1)."""

    e1: IntervalSet
    e0: IntervalSet
    em1: IntervalSet
    window: Interval

    def __post_init__(self):
        parts = [self.e1, self.e0, self.em1]
        for i in range(3):
            for j in range(i + 1, 3):
                if parts[i].intersect(parts[j]).measure() != 0:
                    raise ValueError("ternary parts overlap with positive measure")
        total = parts[0].union(parts[1]).union(parts[2]).clip(self.window)
        if total != IntervalSet([self.window]):
            raise ValueError("ternary parts do not cover the window")

    def to_json(self) -> dict:
        return {
            "e1": self.e1.to_json(),
            "e0": self.e0.to_json(),
            "em1": self.em1.to_json(),
            "window": [str(self.window.lo), str(self.window.hi)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TernaryDecomposition":
        return cls(
            IntervalSet.from_json(obj["e1"]),
            IntervalSet.from_json(obj["e0"]),
            IntervalSet.from_json(obj["em1"]),
            Interval(rat(obj["window"][0]), rat(obj["window"][1])),
        )


def build_ternary_integral(
    t: TernaryDecomposition, basepoint: RationalLike = 0
) -> PiecewiseLinear:
    """f(x) = ∫_base^x (1_{E1} - 1_{E-1}): slopes +1 / 0 / -1 exactly."""
    return build_signed_integral(t.e1, t.em1, basepoint, t.window)


def worst_imbalance(
    t: TernaryDecomposition, x: RationalLike, r: RationalLike
) -> tuple[Fraction, Fraction]:
    """max over windows I ∋ x, |I| = r of ||E1∩I| - |E-1∩I||/|I|.

    The signed mass of [u, u+r] is piecewise linear in u, so the max |·| is
    attained at a kink; returns (ratio, window left end)."""
    x, r = rat(x), rat(r)
    cands = {x - r, x}
    for S in (t.e1, t.em1):
        for e in S.endpoints():
            for u in (e, e - r):
                if x - r <= u <= x:
                    cands.add(u)
    best = None
    for u in sorted(cands):
        w = IntervalSet([Interval(u, u + r)])
        h = abs(t.e1.intersect(w).measure() - t.em1.intersect(w).measure()) / r
        if best is None or h > best[0]:
            best = (h, u)
    return best


@dataclass(frozen=True)
class TernaryReport:
    weakly_dense_entries: tuple[tuple[Fraction, str, DensityReport], ...]
    balance_entries: tuple[tuple[Fraction, tuple[tuple[Fraction, Fraction], ...]], ...]
    tolerance: Fraction

    @property
    def condition1_holds(self) -> bool:
        return all(rep.verdict == HOLDS for _, _, rep in self.weakly_dense_entries)

    @property
    def condition2_holds_at_scale(self) -> bool:
        # judged at the smallest sampled radius; below it the limit statement
        # is inconclusive, not certified
        return all(rows[-1][1] <= self.tolerance for _, rows in self.balance_entries)

    @property
    def all_hold(self) -> bool:
        return self.condition1_holds and self.condition2_holds_at_scale


def check_ternary(
    t: TernaryDecomposition,
    E: IntervalSet,
    resolution: RationalLike,
    tolerance: Optional[RationalLike] = None,
) -> TernaryReport:
    """Condition 1 at sampled x ∈ E (E1 or E-1 weakly dense); condition 2 at
    sampled x ∉ E (imbalance ratios over shrinking windows)."""
    res = rat(resolution)
    tol = rat(tolerance) if tolerance is not None else res
    if not (0 < res < 1):
        raise ValueError("resolution must be in (0,1)")
    cond1 = []
    for x in _sample_points(E.clip(t.window), t.window, res):
        rep1 = check_weakly_dense_at(t.e1, x, res)
        if rep1.verdict == HOLDS:
            cond1.append((x, "E1", rep1))
            continue
        rep2 = check_weakly_dense_at(t.em1, x, res)
        cond1.append((x, "E-1" if rep2.verdict == HOLDS else "neither",
                      rep2 if rep2.verdict == HOLDS else rep1))
    comp = E.complement_within(t.window)
    radii = geometric_grid(res, Fraction(1, 2), 5)
    cond2 = []
    for x in _sample_points(comp, t.window, res):
        if E.contains(x):
            continue  # closed-collapse boundary point: x ∈ E is not quantified
        rows = tuple((r, worst_imbalance(t, x, r)[0]) for r in radii)
        cond2.append((x, rows))
    return TernaryReport(tuple(cond1), tuple(cond2), tol)


def normalize_ternary(t: TernaryDecomposition, E: IntervalSet) -> TernaryDecomposition:
    """Move everything outside E into the flat part: F1 = E \\ E-1,
    F-1 = E-1 ∩ E, F0 = E^c, so F1 ⊔ F-1 = E exactly."""
    w = t.window
    f_m1 = t.em1.intersect(E).clip(w)
    f_1 = E.clip(w).intersect(f_m1.complement_within(w)) if not f_m1.is_empty else E.clip(w)
    f_0 = E.complement_within(w)
    return TernaryDecomposition(f_1, f_0, f_m1, w)


def remark_ternary_example(n_max: int, window: Interval) -> TernaryDecomposition:
    """Truncated decomposition for E = (0, ∞): E-1 = ∪(1/(2n+1), 1/(2n)],
    E1 = ∪(1/(2n), 1/(2n-1)] ∪ (1, ∞).  The left-over stub (0, 1/(2n_max+1)]
    is assigned to E0 so the window is covered exactly."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if not (window.lo < 0 < 1 < window.hi):
        raise ValueError("window must contain [0, 1] strictly")
    em1 = IntervalSet.from_pairs(
        [(Fraction(1, 2 * n + 1), Fraction(1, 2 * n)) for n in range(1, n_max + 1)]
    )
    e1_pairs = [(Fraction(1, 2 * n), Fraction(1, 2 * n - 1)) for n in range(1, n_max + 1)]
    e1 = IntervalSet.from_pairs(e1_pairs + [(1, window.hi)])
    e0 = IntervalSet.from_pairs([(window.lo, Fraction(1, 2 * n_max + 1))])
    return TernaryDecomposition(e1, e0, em1, window)


# -- balance points ---------------------------------------------------------------


def balance_point(
    E: IntervalSet,
    r: RationalLike,
    s: RationalLike,
    target: RationalLike,
    delta: RationalLike,
) -> Fraction:
    """Exact t ∈ (r, s) with (1-δ)(|E∩[r,t]| - |E∩[t,s]|) = target.

    The left side is continuous, nondecreasing and piecewise linear in t, so
    t is found by a segment walk plus one linear solve; the leftmost solution
    is returned on flat ties.  With zero E-mass the only admissible target is
    0 and the midpoint is returned (the integral is flat there anyway).
    """
    r, s, target, delta = rat(r), rat(s), rat(target), rat(delta)
    if not r < s:
        raise ValueError("need r < s")
    if not 0 <= delta < 1:
        raise ValueError("delta must be in [0,1)")
    block = IntervalSet([Interval(r, s)])
    A = E.intersect(block).measure()
    tau = target / (1 - delta)
    if A == 0:
        if target != 0:
            raise ValueError("unsolvable target: block carries no E-mass")
        return (r + s) / 2
    if abs(tau) >= A:
        raise ValueError("unsolvable target (precondition violated)")
    # h(t) = 2|E∩[r,t]| - A; walk segments cut at E endpoints
    cuts = sorted({r, s} | {e for e in E.endpoints() if r < e < s})
    h = -A
    for a, b in zip(cuts, cuts[1:]):
        in_e = E.contains((a + b) / 2)
        h_next = h + (2 * (b - a) if in_e else 0)
        if h_next >= tau:
            # flat segments cannot reach tau (h < tau on entry), so in_e holds
            return a + (tau - h) / 2
        h = h_next
    raise AssertionError("walk must terminate: h(s) = A > tau")


# -- the small-lip sawtooth ---------------------------------------------------------


@dataclass(frozen=True)
class SmallLipBlock:
    lo: Fraction
    hi: Fraction
    balance: Fraction
    left_mass: Fraction
    right_mass: Fraction


def small_lip_blocks(
    E: IntervalSet, epsilon: RationalLike, window: Interval
) -> list[SmallLipBlock]:
    """ε-grid blocks of the window with their exact balance points."""
    eps = rat(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    bounds = {window.lo, window.hi}
    k = -(-window.lo // eps)  # smallest integer k with k*eps >= lo
    while k * eps < window.hi:
        if window.lo < k * eps:
            bounds.add(k * eps)
        k += 1
    cuts = sorted(bounds)
    blocks = []
    for a, b in zip(cuts, cuts[1:]):
        seg = IntervalSet([Interval(a, b)])
        mass = E.intersect(seg).measure()
        if mass == 0:
            x = (a + b) / 2
            blocks.append(SmallLipBlock(a, b, x, Fraction(0), Fraction(0)))
            continue
        x = balance_point(E, a, b, 0, 0)
        left = E.intersect(IntervalSet([Interval(a, x)])).measure() if a < x else Fraction(0)
        right = E.intersect(IntervalSet([Interval(x, b)])).measure() if x < b else Fraction(0)
        blocks.append(SmallLipBlock(a, b, x, left, right))
    return blocks


def build_small_lip(
    E: IntervalSet, epsilon: RationalLike, window: Interval
) -> PiecewiseLinear:
    """The sawtooth f = ∫(1_{E+} - 1_{E-}) over ε-grid blocks.

    0 <= f <= ε exactly; slope +1 on the first half of each block's E-mass,
    -1 on the second half, 0 off E; f vanishes at block boundaries.
    """
    eps = rat(epsilon)
    blocks = small_lip_blocks(E, eps, window)
    plus_parts, minus_parts = [], []
    for blk in blocks:
        if blk.left_mass > 0:
            plus_parts.extend(
                E.intersect(IntervalSet([Interval(blk.lo, blk.balance)])).intervals
            )
        if blk.right_mass > 0:
            minus_parts.extend(
                E.intersect(IntervalSet([Interval(blk.balance, blk.hi)])).intervals
            )
    plus = IntervalSet(plus_parts)
    minus = IntervalSet(minus_parts)
    return build_signed_integral(plus, minus, window.lo, window)


# -- the lip-1 sum -------------------------------------------------------------------


@dataclass(frozen=True)
class Lip1Part:
    index: int
    epsilon: Optional[Fraction]
    distance: Optional[Fraction]
    sup_norm: Fraction
    constant_off_part: bool
    skipped: bool


@dataclass(frozen=True)
class Lip1SumResult:
    function: PiecewiseLinear
    parts: tuple[Lip1Part, ...]
    window: Interval

    @property
    def skipped_parts(self) -> tuple[int, ...]:
        return tuple(p.index for p in self.parts if p.skipped)


def _constant_off(f: PiecewiseLinear, S: IntervalSet) -> bool:
    for seg, slope in zip(SlopeProfile.of(f).segments, f.slopes()):
        if slope == 0:
            continue
        if S.intersect(IntervalSet([seg])).measure() != seg.length:
            return False
    return True


def build_lip1_sum(parts: Sequence[IntervalSet], window: Interval) -> Lip1SumResult:
    """f = Σ f_n with f_n the small-lip sawtooth of part n at the exact bound
    ε_n = 2^{-n} min{1, d(E_n, ∪_{k<n} E_k)} (ε_1 = 1).

    Parts must be pairwise disjoint up to endpoints.  A part at distance 0
    from the earlier union forces ε_n = 0 and is skipped with a warning
    entry in the diagnostics.
    """
    if not parts:
        raise ValueError("need at least one part")
    for i in range(len(parts)):
        for j in range(i + 1, len(parts)):
            if parts[i].intersect(parts[j]).measure() != 0:
                raise ValueError(f"parts {i+1} and {j+1} overlap with positive measure")
    total = PiecewiseLinear.constant(0, window)
    diags: list[Lip1Part] = []
    earlier: Optional[IntervalSet] = None
    for n, part in enumerate(parts, start=1):
        if n == 1:
            eps: Optional[Fraction] = Fraction(1)
            dist: Optional[Fraction] = None
        else:
            dist = part.distance(earlier)
            if dist is None:
                dist = Fraction(0)
            eps = Fraction(1, 2 ** n) * min(Fraction(1), dist) if dist > 0 else Fraction(0)
        if not eps:
            diags.append(Lip1Part(n, None, dist, Fraction(0), True, True))
        else:
            f_n = build_small_lip(part, eps, window)
            total = total + f_n
            diags.append(
                Lip1Part(n, eps, dist, f_n.sup_norm(), _constant_off(f_n, part), False)
            )
        earlier = part if earlier is None else earlier.union(part)
    return Lip1SumResult(total.simplify(), tuple(diags), window)


def split_into_bounded_shards(S: IntervalSet, max_len: RationalLike) -> list[IntervalSet]:
    """Group consecutive components into shards whose hulls are <= max_len.

    Helper for the lip-1 sum precondition that parts beyond the first be
    bounded: shards of an oversized part can be fed in as separate parts.
    """
    max_len = rat(max_len)
    if max_len <= 0:
        raise ValueError("max_len must be positive")
    shards: list[list[Interval]] = []
    current: list[Interval] = []
    for iv in S:
        if iv.length > max_len:
            raise ValueError(f"component {iv} is longer than max_len")
        if current and iv.hi - current[0].lo > max_len:
            shards.append(current)
            current = []
        current.append(iv)
    if current:
        shards.append(current)
    return [IntervalSet(sh) for sh in shards]
