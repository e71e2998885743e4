"""Exact density ratios, two-parameter level sets, and density-type checks.

For an interval set E and a fixed point x, r ↦ |(x-r,x) ∩ E| is piecewise
linear in r with kinks at the distances from x to endpoints of E; on each
linear piece c + b·r the ratio c/r + b is monotone.  Every decision below
reduces to evaluating exact ratios at those finitely many candidate radii
(plus the rational crossings of the two one-sided ratio curves), so
quantified statements over r ∈ (0, δ] are decided exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .intervals import Interval, IntervalSet, RationalLike, rat

LEFT = "left"
RIGHT = "right"
BOTH = "both"


@dataclass(frozen=True)
class DensityQuery:
    point: Fraction
    side: str
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "point", rat(self.point))
        object.__setattr__(self, "radius", rat(self.radius))
        if self.side not in (LEFT, RIGHT, BOTH):
            raise ValueError(f"side must be left/right/both, got {self.side!r}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")


def one_sided_measure(E: IntervalSet, x: RationalLike, r: RationalLike, side: str) -> Fraction:
    x, r = rat(x), rat(r)
    window = Interval(x - r, x) if side == LEFT else Interval(x, x + r)
    return E.intersect(IntervalSet([window])).measure()


def one_sided_ratio(E: IntervalSet, x: RationalLike, r: RationalLike, side: str) -> Fraction:
    return one_sided_measure(E, x, r, side) / rat(r)


def density_ratio(E: IntervalSet, query: DensityQuery) -> Fraction:
    """Exact |(x-r,x) ∩ E|/r (resp. right, or the max of both sides)."""
    if query.side == BOTH:
        return max(
            one_sided_ratio(E, query.point, query.radius, LEFT),
            one_sided_ratio(E, query.point, query.radius, RIGHT),
        )
    return one_sided_ratio(E, query.point, query.radius, query.side)


def max_ratio(E: IntervalSet, x: RationalLike, r: RationalLike) -> Fraction:
    return density_ratio(E, DensityQuery(rat(x), BOTH, rat(r)))


def centered_ratio(E: IntervalSet, x: RationalLike, r: RationalLike) -> Fraction:
    x, r = rat(x), rat(r)
    return E.intersect(IntervalSet([Interval(x - r, x + r)])).measure() / (2 * r)


# -- candidate radii ---------------------------------------------------------


def _endpoint_distances(E: IntervalSet, x: Fraction, bound: Fraction) -> list[Fraction]:
    ds = {abs(e - x) for e in E.endpoints()}
    return sorted(d for d in ds if 0 < d < bound)


def _affine_on(E, x, side, r_a, r_b):
    """(c, b) with one_sided_measure == c + b*r on the piece [r_a, r_b]."""
    g_a = one_sided_measure(E, x, r_a, side)
    g_b = one_sided_measure(E, x, r_b, side)
    b = (g_b - g_a) / (r_b - r_a)
    return g_a - b * r_a, b


def _ratio_candidates(E: IntervalSet, x: Fraction, delta: Fraction) -> list[Fraction]:
    """Radii at which inf/sup of max(left,right)/r over (0, δ] can occur:
    piece endpoints plus in-piece crossings of the two one-sided curves."""
    pts = _endpoint_distances(E, x, delta) + [delta]
    out = list(pts)
    prev = None
    for r in pts:
        if prev is not None and prev < r:
            cl, bl = _affine_on(E, x, LEFT, prev, r)
            cr, br = _affine_on(E, x, RIGHT, prev, r)
            if bl != br:
                cross = (cl - cr) / (br - bl)
                if prev < cross < r:
                    out.append(cross)
        prev = r
    return sorted(set(out))


# -- level-set membership -----------------------------------------------------


@dataclass(frozen=True)
class MembershipCertificate:
    member: bool
    worst_r: Fraction
    worst_ratio: Fraction
    left_ratio: Fraction
    right_ratio: Fraction


def level_set_membership(
    E: IntervalSet, x: RationalLike, gamma: RationalLike, delta: RationalLike
) -> MembershipCertificate:
    """Exact decision of x ∈ E^{γ,δ} with the minimizing radius as certificate.

    On the first piece (0, d_min) both one-sided ratios are constant (0 or 1),
    so the infimum over (0, δ] is attained at one of the candidate radii.
    """
    x, gamma, delta = rat(x), rat(gamma), rat(delta)
    if gamma <= 0 or delta <= 0:
        raise ValueError("gamma and delta must be positive")
    worst = None
    for r in _ratio_candidates(E, x, delta):
        left = one_sided_ratio(E, x, r, LEFT)
        right = one_sided_ratio(E, x, r, RIGHT)
        m = max(left, right)
        if worst is None or m < worst[1]:
            worst = (r, m, left, right)
    r, m, left, right = worst
    return MembershipCertificate(m >= gamma, r, m, left, right)


@dataclass(frozen=True)
class LevelSetResult:
    approximation: IntervalSet
    margin: Fraction
    gamma: Fraction
    delta: Fraction
    window: Interval


def level_set(
    E: IntervalSet,
    gamma: RationalLike,
    delta: RationalLike,
    window: Interval,
    resolution: RationalLike,
) -> LevelSetResult:
    """Reconstruct E^{γ,δ} ∩ window within the reported margin.

    Structure used: points off E are never members (their small-radius ratio
    is 0), so E^{γ,δ} ⊆ E, and a point whose distance to the far end of its
    component is ≥ δ is always a member (that side's ratio is 1 at every
    r ≤ δ).  Only the remaining middle zones are sampled, at spacing ≤
    resolution, with exact membership tests; the margin is the largest
    sampled cell, 0 when no sampling was needed.
    """
    gamma, delta, resolution = rat(gamma), rat(delta), rat(resolution)
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if window.is_degenerate:
        raise ValueError("degenerate window")
    pieces: list[Interval] = []
    margin = Fraction(0)
    for comp in E.clip(window):
        c0, c1 = comp.lo, comp.hi
        # right-stretch >= delta on [c0, c1-delta]; left-stretch on [c0+delta, c1]
        sure: list[Interval] = []
        if c1 - delta > c0:
            sure.append(Interval(c0, c1 - delta))
        if c0 + delta < c1:
            sure.append(Interval(c0 + delta, c1))
        covered = IntervalSet(sure) if sure else IntervalSet.empty()
        if not covered.is_empty and covered.measure() == comp.length:
            pieces.append(comp)
            continue
        pieces.extend(covered.intervals)
        gaps = (
            covered.complement_within(comp)
            if not covered.is_empty
            else IntervalSet([comp], allow_degenerate=True)
        )
        for gap in gaps:
            if gap.is_degenerate:
                grid = [gap.lo]
                member = [level_set_membership(E, gap.lo, gamma, delta).member]
                if member[0]:
                    pieces.append(Interval.point(gap.lo))
                continue
            n_cells = max(1, -(-(gap.length) // resolution))
            step = gap.length / n_cells
            grid = [gap.lo + i * step for i in range(int(n_cells) + 1)]
            member = [
                level_set_membership(E, p, gamma, delta).member for p in grid
            ]
            margin = max(margin, step)
            for i in range(len(grid) - 1):
                if member[i] and member[i + 1]:
                    pieces.append(Interval(grid[i], grid[i + 1]))
            for i, p in enumerate(grid):
                if member[i] and not (
                    (i > 0 and member[i - 1]) or (i + 1 < len(member) and member[i + 1])
                ):
                    pieces.append(Interval.point(p))
    approx = IntervalSet(pieces, allow_degenerate=True)
    return LevelSetResult(approx, margin, gamma, delta, window)


# -- density reports ----------------------------------------------------------

HOLDS = "holds"
FAILS = "fails"
HOLDS_AT_SCALE = "holds-at-scale"
INCONCLUSIVE = "inconclusive-at-resolution"


@dataclass(frozen=True)
class DensityReport:
    point: Fraction
    verdict: str
    worst_r: Optional[Fraction] = None
    ratio: Optional[Fraction] = None
    side: Optional[str] = None
    details: tuple = ()

    def to_json(self) -> dict:
        return {
            "point": str(self.point),
            "verdict": self.verdict,
            "worst_r": None if self.worst_r is None else str(self.worst_r),
            "ratio": None if self.ratio is None else str(self.ratio),
            "side": self.side,
        }


def _sided_max(E, x, r):
    left = one_sided_ratio(E, x, r, LEFT)
    right = one_sided_ratio(E, x, r, RIGHT)
    if left >= right:
        return left, LEFT
    return right, RIGHT


def _strict_witness(E, x, eps, threshold, value_at):
    """Exact r ∈ (0, eps) with value_at(r) > threshold, or None.

    value_at must be piecewise of the form c/r + b between consecutive
    candidate radii; the sup over (0, eps] is attained at a candidate, and a
    sup attained only at r = eps is pushed strictly inside by solving the
    affine piece (the value function is continuous in r).
    """
    cands = _endpoint_distances(E, x, eps) + [eps]
    best_r, best_v = None, None
    for r in cands:
        v = value_at(r)
        if best_v is None or v > best_v:
            best_r, best_v = r, v
    if best_v is None or best_v <= threshold:
        return None
    if best_r < eps:
        return best_r
    # sup only at the open right end: value_at is continuous there, so some
    # r slightly inside still exceeds the threshold; bisect toward eps.
    inner = [r for r in cands if r < eps]
    lo = inner[-1] if inner else eps / 2
    if value_at(lo) > threshold:
        return lo
    step = eps - lo
    for _ in range(64):
        step /= 2
        r = eps - step
        if value_at(r) > threshold:
            return r
    return None


def check_weakly_dense_at(E: IntervalSet, x: RationalLike, epsilon: RationalLike) -> DensityReport:
    """Is there r ∈ (0, ε) with max one-sided ratio > 1 - ε?  Exact."""
    x, eps = rat(x), rat(epsilon)
    if not (0 < eps < 1):
        raise ValueError("epsilon must be in (0,1)")
    r = _strict_witness(E, x, eps, 1 - eps, lambda rr: _sided_max(E, x, rr)[0])
    if r is not None:
        value, side = _sided_max(E, x, r)
        return DensityReport(x, HOLDS, r, value, side)
    cands = _endpoint_distances(E, x, eps) + [eps]
    best = max(cands, key=lambda rr: _sided_max(E, x, rr)[0])
    value, side = _sided_max(E, x, best)
    return DensityReport(x, FAILS, best, value, side)


def check_weakly_center_dense_at(
    E: IntervalSet, x: RationalLike, epsilon: RationalLike
) -> DensityReport:
    """Same as check_weakly_dense_at but for intervals centered at x."""
    x, eps = rat(x), rat(epsilon)
    if not (0 < eps < 1):
        raise ValueError("epsilon must be in (0,1)")
    r = _strict_witness(E, x, eps, 1 - eps, lambda rr: centered_ratio(E, x, rr))
    if r is not None:
        return DensityReport(x, HOLDS, r, centered_ratio(E, x, r), BOTH)
    cands = _endpoint_distances(E, x, eps) + [eps]
    best = max(cands, key=lambda rr: centered_ratio(E, x, rr))
    return DensityReport(x, FAILS, best, centered_ratio(E, x, best), BOTH)


def check_strongly_one_sided_dense_at(
    E: IntervalSet,
    x: RationalLike,
    r_grid: Sequence[RationalLike],
    tolerance: RationalLike = Fraction(1, 16),
) -> DensityReport:
    """Exact max one-sided ratios along a finite descending grid of radii.

    A finite-scale check, not a limit claim: the verdict is holds-at-scale
    when every grid radius achieves ratio >= 1 - tolerance.
    """
    x, tol = rat(x), rat(tolerance)
    grid = [rat(r) for r in r_grid]
    if not grid or any(r <= 0 for r in grid):
        raise ValueError("grid must be positive")
    if any(a <= b for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly descending")
    rows = []
    worst = None
    for r in grid:
        left = one_sided_ratio(E, x, r, LEFT)
        right = one_sided_ratio(E, x, r, RIGHT)
        m = max(left, right)
        rows.append((r, left, right, m))
        if worst is None or m < worst[1]:
            worst = (r, m)
    verdict = HOLDS_AT_SCALE if worst[1] >= 1 - tol else FAILS
    side = None
    return DensityReport(x, verdict, worst[0], worst[1], side, tuple(rows))


def worst_window_ratio(E: IntervalSet, x: RationalLike, r: RationalLike) -> tuple[Fraction, Fraction]:
    """min over windows I ∋ x with |I| = r of |E ∩ I|/|I|; returns (ratio, left end).

    |E ∩ [t, t+r]| is piecewise linear in t, so the min is at a kink."""
    x, r = rat(x), rat(r)
    cands = {x - r, x}
    for e in E.endpoints():
        for t in (e, e - r):
            if x - r <= t <= x:
                cands.add(t)
    best = None
    for t in sorted(cands):
        m = E.intersect(IntervalSet([Interval(t, t + r)])).measure() / r
        if best is None or m < best[0]:
            best = (m, t)
    return best


def check_strongly_dense_at(
    E: IntervalSet,
    x: RationalLike,
    r_grid: Sequence[RationalLike],
    tolerance: RationalLike = Fraction(1, 16),
) -> DensityReport:
    """Worst-window density at each grid radius (Lebesgue density at scale)."""
    x, tol = rat(x), rat(tolerance)
    grid = [rat(r) for r in r_grid]
    if not grid or any(r <= 0 for r in grid):
        raise ValueError("grid must be positive")
    rows = []
    worst = None
    for r in grid:
        ratio, t = worst_window_ratio(E, x, r)
        rows.append((r, ratio, t))
        if worst is None or ratio < worst[1]:
            worst = (r, ratio, t)
    verdict = HOLDS_AT_SCALE if worst[1] >= 1 - tol else FAILS
    return DensityReport(x, verdict, worst[0], worst[1], None, tuple(rows))


# -- UDT witnesses -------------------------------------------------------------


@dataclass(frozen=True)
class UDTWitness:
    """Finite prefix of sequences γ_n ↗ 1, δ_n ↘ 0."""

    gammas: tuple[Fraction, ...]
    deltas: tuple[Fraction, ...]

    def __post_init__(self):
        gs = tuple(rat(g) for g in self.gammas)
        ds = tuple(rat(d) for d in self.deltas)
        object.__setattr__(self, "gammas", gs)
        object.__setattr__(self, "deltas", ds)
        if len(gs) != len(ds) or not gs:
            raise ValueError("need equally long, nonempty gamma/delta prefixes")
        if any(not (0 < g < 1) for g in gs):
            raise ValueError("gammas must lie in (0,1)")
        if any(d <= 0 for d in ds):
            raise ValueError("deltas must be positive")
        if any(a >= b for a, b in zip(gs, gs[1:])):
            raise ValueError("gammas must strictly increase")
        if any(a <= b for a, b in zip(ds, ds[1:])):
            raise ValueError("deltas must strictly decrease")

    @property
    def depth(self) -> int:
        return len(self.gammas)

    def to_json(self) -> dict:
        return {
            "gammas": [str(g) for g in self.gammas],
            "deltas": [str(d) for d in self.deltas],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "UDTWitness":
        return cls(tuple(obj["gammas"]), tuple(obj["deltas"]))


def merge_udt_witnesses(ws: Sequence[UDTWitness]) -> UDTWitness:
    """Diagonalize finitely many witnesses into one dominating them all.

    Output prefix (γ_n, δ_n) satisfies γ_n < γ_{m,n} and δ_n < δ_{m,n} for
    every input m and every n of the common prefix (n_m = 0 works here).
    """
    if not ws:
        raise ValueError("empty witness list")
    if len(ws) == 1:
        return ws[0]
    depth = min(w.depth for w in ws)
    g = [min(w.gammas[n] for w in ws) for n in range(depth)]
    d = [min(w.deltas[n] for w in ws) for n in range(depth)]
    gammas = [g[0] / 2] + [(g[n - 1] + g[n]) / 2 for n in range(1, depth)]
    deltas = [(d[n] + d[n + 1]) / 2 for n in range(depth - 1)] + [d[-1] / 2]
    return UDTWitness(tuple(gammas), tuple(deltas))


def witness_dominates(merged: UDTWitness, w: UDTWitness) -> bool:
    depth = min(merged.depth, w.depth)
    return all(
        merged.gammas[n] < w.gammas[n] and merged.deltas[n] < w.deltas[n]
        for n in range(depth)
    )


def suggest_udt_witness(E: IntervalSet, depth: int) -> UDTWitness:
    """Greedy witness for a finite interval union.

    Any x ∈ E has a one-sided run of length ≥ half its component, so
    δ_n ≤ (min component length)/2 validates every point for every γ < 1.
    Heuristic per the spec's open question; callers should re-validate via
    level_set_membership.
    """
    if E.is_empty:
        raise ValueError("no witness for the empty set")
    min_len = min(iv.length for iv in E if not iv.is_degenerate)
    gammas = [1 - Fraction(1, 2 ** (n + 1)) for n in range(depth)]
    deltas = [min_len / 2 ** (n + 1) for n in range(depth)]
    return UDTWitness(tuple(gammas), tuple(deltas))


# -- Prop. 5.x(iv) example ------------------------------------------------------


@dataclass(frozen=True)
class DyadicBlocksExample:
    """Truncation of ∪_n [2^n - 2^{n-2}, 2^n] plus its closure (adds {0})."""

    truncated: IntervalSet
    closure: IntervalSet
    depth: int

    @staticmethod
    def block(n: int) -> Interval:
        top = Fraction(2) ** n
        return Interval(top - top / 4, top)

    @classmethod
    def build(cls, depth: int) -> "DyadicBlocksExample":
        if depth < 1:
            raise ValueError("depth must be >= 1")
        blocks = [cls.block(n) for n in range(-depth, depth + 1)]
        truncated = IntervalSet(blocks)
        closure = truncated.union(
            IntervalSet([Interval.point(0)], allow_degenerate=True)
        )
        return cls(truncated, closure, depth)

    @staticmethod
    def right_measure_infinite(r: RationalLike) -> Fraction:
        """|E∞ ∩ (0, r)| in closed form (the geometric tail summed exactly)."""
        r = rat(r)
        if r <= 0:
            return Fraction(0)
        k = 0
        while Fraction(2) ** k < r:
            k += 1
        while Fraction(2) ** (k - 1) >= r:
            k -= 1
        # now 2^{k-1} < r <= 2^k; blocks below level k sum to 2^{k-2}
        full = Fraction(2) ** (k - 2)
        bottom = 3 * Fraction(2) ** (k - 2)
        partial = max(Fraction(0), r - bottom)
        return full + partial

    @classmethod
    def right_density_infinite(cls, r: RationalLike) -> Fraction:
        r = rat(r)
        return cls.right_measure_infinite(r) / r

    @staticmethod
    def critical_radius(n: int) -> Fraction:
        return Fraction(2) ** n - Fraction(2) ** (n - 2)


def prop5_example(depth: int) -> DyadicBlocksExample:
    return DyadicBlocksExample.build(depth)
