"""Finite-stage builder for the density-type-to-Lipschitz construction.

Given an increasing chain of closed sets F_1 ⊆ ... ⊆ F_N (complements G_n),
a target interval set standing in for E = ∩ G_n, and a witness prefix
(γ_n ↗ 1, δ_n ↘ 0), the builder produces stage functions f_1, ..., f_N with

  (i)    slope exactly 0 on F_n,
  (ii)   f_m = f_n exactly on F_n for m >= n,
  (iii)  |f_n(x)-f_n(y)| <= (1 - 2^-3n)|φ(x)-φ(y)| exactly,
  (iv)   witness pairs (x, y) with |x-y| <= δ_n and ratio > (1-2^-2n)γ_n at
         sampled points of the level set inside the active regions,
  (v)    a piecewise-linear vicinity radius r_n <= min{2^-n, quadratic-margin
         minorant} with r_n = 0 on F_n and r_n small against every witness
         pair, giving U_{n+1} ⊆ U_n and the Cauchy bound ‖f_{n+1}-f_n‖ <= 2^-n,
  (vi)   later stages keep witness ratios above (1-2^-n)γ_n.

Each stage flattens the previous function on the new F-parts inside an
r-positive segment (envelope_flatten), then re-zigzags inside the margin
envelope (envelope_refine).  Quadratic margins d(x, F_n)^2 are replaced by
exact piecewise-linear tangent minorants, which is strictly harder.  A
piecewise-linear stage function keeps an exactly flat collar next to each
F_n endpoint, so witnesses are sampled from the recorded active regions.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .intervals import Interval, IntervalSet, RationalLike, rat
from .density import UDTWitness, level_set_membership
from .envelopes import (
    Envelope,
    PreconditionError,
    Vicinity,
    envelope_flatten,
    envelope_refine,
    slope_zero_on,
    verify_contraction,
)
from .pcw import PiecewiseLinear, build_phi, pl_max, pl_min


class WitnessSearchError(RuntimeError):
    """Raised when a sampled level-set point has no stage witness: the input
    system does not realize its claimed witness at that scale."""

    def __init__(self, stage, point, best_ratio, target):
        super().__init__(
            f"stage {stage}: no witness at x={point}: best ratio {best_ratio} "
            f"<= target {target}"
        )
        self.stage = stage
        self.point = point
        self.best_ratio = best_ratio
        self.target = target


@dataclass(frozen=True)
class NestedClosedSystem:
    """F_1 ⊆ F_2 ⊆ ... inside a window, plus the target set standing in
    for E at the available depth; every complement component must meet the
    target."""

    closed_sets: tuple[IntervalSet, ...]
    window: Interval
    target: IntervalSet

    def __post_init__(self):
        prev: Optional[IntervalSet] = None
        for n, F in enumerate(self.closed_sets, start=1):
            if prev is not None and not prev.is_empty and prev.intersect(F) != prev:
                raise ValueError(f"nesting violated at stage {n}")
            prev = F
        for comp in self.complement(len(self.closed_sets)):
            if self.target.intersect(IntervalSet([comp])).is_empty:
                raise ValueError(f"complement component {comp} misses the target")

    @property
    def depth(self) -> int:
        return len(self.closed_sets)

    def closed_at(self, n: int) -> IntervalSet:
        if n == 0:
            return IntervalSet.empty()
        return self.closed_sets[n - 1]

    def complement(self, n: int) -> IntervalSet:
        """G_n within the window (closed collapse)."""
        F = self.closed_at(n)
        if F.is_empty:
            return IntervalSet([self.window])
        return F.complement_within(self.window)

    def to_json(self) -> dict:
        return {
            "closed_sets": [F.to_json() for F in self.closed_sets],
            "window": [str(self.window.lo), str(self.window.hi)],
            "target": self.target.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NestedClosedSystem":
        return cls(
            tuple(IntervalSet.from_json(o) for o in obj["closed_sets"]),
            Interval(rat(obj["window"][0]), rat(obj["window"][1])),
            IntervalSet.from_json(obj["target"]),
        )


def fat_cantor_system(levels: int, window: Interval = Interval(Fraction(0), Fraction(1))) -> NestedClosedSystem:
    """Fat-Cantor-style nested system: level n removes the middle 4^-n
    fraction of every kept piece, so the removed closed sets F_n increase
    while the kept set retains positive measure."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    kept = [Interval(window.lo, window.hi)]
    removed: list[Interval] = []
    chain: list[IntervalSet] = []
    for n in range(1, levels + 1):
        frac = Fraction(1, 4 ** n)
        new_kept: list[Interval] = []
        for piece in kept:
            gap = piece.length * frac
            mid = piece.midpoint
            lo, hi = mid - gap / 2, mid + gap / 2
            removed.append(Interval(lo, hi))
            new_kept.append(Interval(piece.lo, lo))
            new_kept.append(Interval(hi, piece.hi))
        kept = new_kept
        chain.append(IntervalSet(list(removed)))
    target = chain[-1].complement_within(window)
    return NestedClosedSystem(tuple(chain), window, target)


# -- margin minorants ------------------------------------------------------------


def quadratic_margin(
    region: Interval,
    segment: tuple[Fraction, Fraction],
    left_is_f: bool,
    right_is_f: bool,
    cap: Fraction,
) -> PiecewiseLinear:
    """Piecewise-linear minorant of min(d(x, region ends)^2, cap), positive
    on the segment, zero at F-adjacent region ends (clamped at 0).

    Tangent lines of the parabola lie below it, so the max of finitely many
    tangents is an exact minorant; tangents are taken at the segment ends
    and midpoint.
    """
    a, b = region.lo, region.hi
    c, d = segment
    mid = (c + d) / 2
    dom = region
    cap_fn = PiecewiseLinear.constant(cap, dom)
    pieces = [cap_fn]
    if left_is_f:
        best = None
        for t in (c, mid, d):
            # tangent of (x-a)^2 at t: slope 2(t-a), value (t-a)^2 at t
            line = PiecewiseLinear(
                [a, b],
                [
                    (t - a) * (2 * a - t - a),
                    (t - a) * (2 * b - t - a),
                ],
            )
            best = line if best is None else pl_max(best, line)
        pieces.append(best)
    if right_is_f:
        best = None
        for t in (c, mid, d):
            line = PiecewiseLinear(
                [a, b],
                [
                    (b - t) * (b + t - 2 * a),
                    (b - t) * (b + t - 2 * b),
                ],
            )
            best = line if best is None else pl_max(best, line)
        pieces.append(best)
    out = pieces[0]
    for p in pieces[1:]:
        out = pl_min(out, p)
    return pl_max(out, PiecewiseLinear.constant(0, dom))


def _assemble_regions(
    window: Interval, parts: Sequence[tuple[Interval, PiecewiseLinear]]
) -> PiecewiseLinear:
    """Glue per-region functions with 0 elsewhere into one window function."""
    xs: list[Fraction] = []
    vs: list[Fraction] = []

    def push(x, v):
        if xs and xs[-1] == x:
            if vs[-1] != v:
                raise AssertionError("discontinuous assembly")
            return
        xs.append(x)
        vs.append(v)

    cursor = window.lo
    for region, fn in sorted(parts, key=lambda rv: rv[0].lo):
        if region.lo > cursor:
            push(cursor, Fraction(0))
            push(region.lo, Fraction(0))
        for x, v in fn.as_pairs():
            push(x, v)
        cursor = region.hi
    if cursor < window.hi:
        push(cursor, Fraction(0))
        push(window.hi, Fraction(0))
    if len(xs) < 2:
        return PiecewiseLinear.constant(0, window)
    return PiecewiseLinear(xs, vs).simplify()


def _positive_zone(f: PiecewiseLinear, lo: Fraction, hi: Fraction) -> Optional[tuple[Fraction, Fraction]]:
    """Largest interval inside [lo, hi] on which f > 0 except at its ends."""
    g = f.restrict(lo, hi)
    xs = list(g.breakpoints)
    zones: list[tuple[Fraction, Fraction]] = []
    start: Optional[Fraction] = None
    for i, x in enumerate(xs):
        positive_right = (
            i + 1 < len(xs) and (g(x) > 0 or g((x + xs[i + 1]) / 2) > 0)
        )
        if positive_right and start is None:
            start = x
        if not positive_right and start is not None:
            zones.append((start, x))
            start = None
    if start is not None:
        zones.append((start, xs[-1]))
    if not zones:
        return None
    return max(zones, key=lambda z: z[1] - z[0])


# -- stage records ---------------------------------------------------------------


@dataclass(frozen=True)
class WitnessRecord:
    stage: int
    x: Fraction
    y: Fraction
    ratio: Fraction
    stage_target: Fraction  # (1 - 2^-2n) γ_n
    tail_target: Fraction  # (1 - 2^-n) γ_n


@dataclass(frozen=True)
class StageDiagnostics:
    stage: int
    contraction_factor: Fraction
    contraction_ok: bool
    flat_on_closed_ok: bool
    active_segments: tuple[tuple[Fraction, Fraction], ...]
    witnesses: tuple[WitnessRecord, ...]
    witness_failures: tuple[tuple[Fraction, Fraction], ...]  # (x, best ratio)
    cauchy_step: Optional[Fraction]  # ‖f_n - f_{n-1}‖
    radius_sup: Fraction
    radius_zero_on_closed: bool
    radius_within_margin: bool
    min_witness_gap: Optional[Fraction]


@dataclass(frozen=True)
class UdtBuildResult:
    system: NestedClosedSystem
    witness: UDTWitness
    stages: tuple[PiecewiseLinear, ...]
    radii: tuple[PiecewiseLinear, ...]
    diagnostics: tuple[StageDiagnostics, ...]

    def vicinity(self, n: int) -> Vicinity:
        return Vicinity(self.stages[n - 1], self.radii[n - 1])

    def persistence_ok(self) -> bool:
        """(ii) f_m = f_n on F_n and (vi) tail witness ratios, all stages."""
        for n in range(1, len(self.stages) + 1):
            f_n = self.stages[n - 1]
            F_n = self.system.closed_at(n)
            for m in range(n, len(self.stages) + 1):
                f_m = self.stages[m - 1]
                for comp in F_n:
                    if comp.is_degenerate:
                        continue
                    if (f_m - f_n).restrict(comp.lo, comp.hi).sup_norm() != 0:
                        return False
                for rec in self.diagnostics[n - 1].witnesses:
                    gap = abs(rec.x - rec.y)
                    if not abs(f_m(rec.x) - f_m(rec.y)) > rec.tail_target * gap:
                        return False
        return True

    def vicinity_chain_ok(self) -> bool:
        """(v)/(vii): f_m ∈ U_n for m >= n, U_{n+1} ⊆ U_n, r_n = 0 on F_n."""
        N = len(self.stages)
        for n in range(1, N + 1):
            U_n = self.vicinity(n)
            for m in range(n, N + 1):
                if not U_n.contains(self.stages[m - 1]):
                    return False
            if n < N and not self.vicinity(n + 1).is_inside(U_n):
                return False
        return True


# -- witness search ----------------------------------------------------------------


def _monotone_runs(f: PiecewiseLinear, lo: Fraction, hi: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Maximal intervals of [lo, hi] on which f is monotone (zero slopes
    extend the current run)."""
    xs = [lo] + [b for b in f.breakpoints if lo < b < hi] + [hi]
    runs: list[tuple[Fraction, Fraction]] = []
    start = xs[0]
    direction = 0
    for a, b in zip(xs, xs[1:]):
        s = f(b) - f(a)
        sgn = 0 if s == 0 else (1 if s > 0 else -1)
        if sgn != 0 and direction != 0 and sgn != direction:
            runs.append((start, a))
            start = a
            direction = sgn
        elif sgn != 0 and direction == 0:
            direction = sgn
    runs.append((start, xs[-1]))
    return runs


def _case_split_candidates(
    f: PiecewiseLinear,
    x: Fraction,
    delta_n: Fraction,
    region: tuple[Fraction, Fraction],
) -> list[Fraction]:
    """The proof's prescribed witness candidates x ± δ*, x ± 100 δ* with
    δ* = (1/101) min{c - e, d - c, δ_n} from the monotone-run structure
    around x, mirrored when x sits in the right half of its run."""
    runs = _monotone_runs(f, region[0], region[1])
    idx = next((i for i, (a, b) in enumerate(runs) if a <= x <= b), None)
    if idx is None:
        return []
    a, b = runs[idx]
    mirrored = (x - a) > (b - x)
    if mirrored:
        run_lo, run_hi = -b, -a
        z = -x
        prev_end = -runs[idx + 1][1] if idx + 1 < len(runs) else -region[1]
    else:
        run_lo, run_hi = a, b
        z = x
        prev_end = runs[idx - 1][0] if idx > 0 else region[0]
    if run_lo == (region[0] if not mirrored else -region[1]):
        c = run_lo + (z - run_lo) / 2
    else:
        c = run_lo
    e = prev_end
    parts = [p for p in (c - e, run_hi - c, delta_n) if p > 0]
    if not parts:
        return []
    dstar = min(parts) / 101
    if dstar <= 0:
        return []
    out = [z - dstar, z + dstar, z - 100 * dstar, z + 100 * dstar]
    if mirrored:
        out = [-v for v in out]
    return out


def stage_witness_search(
    f: PiecewiseLinear,
    E: IntervalSet,
    x: Fraction,
    delta_n: Fraction,
    region: tuple[Fraction, Fraction],
    target: Fraction,
) -> tuple[Optional[Fraction], Fraction]:
    """Witness y with |f(x)-f(y)|/|x-y| > target, 0 < |x-y| <= δ_n, y in the
    region.

    The proof's case-split candidates are tried first (max ratio, ties to
    the smaller |x-y|); if none beats the target, fall back to the exact
    maximizer over all breakpoint/endpoint candidates (the sup over y is
    attained there for piecewise-linear f)."""
    lo = max(region[0], x - delta_n)
    hi = min(region[1], x + delta_n)

    def best_of(cands):
        fx = f(x)
        best_y, best_ratio = None, Fraction(0)
        for y in sorted(set(cands)):
            if y == x or not (lo <= y <= hi):
                continue
            gap = abs(y - x)
            ratio = abs(f(y) - fx) / gap
            if ratio > best_ratio or (
                ratio == best_ratio
                and best_y is not None
                and gap < abs(best_y - x)
            ):
                best_ratio, best_y = ratio, y
        return best_y, best_ratio

    y, ratio = best_of(_case_split_candidates(f, x, delta_n, region))
    if y is not None and ratio > target:
        return y, ratio
    full = set(f.breakpoints_in(lo, hi))
    full.update([lo, hi])
    for e in E.endpoints():
        if lo <= e <= hi:
            full.add(e)
    return best_of(full)


def _sample_level_points(
    E: IntervalSet,
    gamma: Fraction,
    delta: Fraction,
    segments: Sequence[tuple[Fraction, Fraction]],
    count: int,
    rng: random.Random,
) -> list[Fraction]:
    comps: list[Interval] = []
    for lo, hi in segments:
        comps.extend(E.intersect(IntervalSet([Interval(lo, hi)])).intervals)
    comps = [c for c in comps if not c.is_degenerate]
    if not comps:
        return []
    out: list[Fraction] = []
    seen = set()
    tries = 0
    denom = 64
    while len(out) < count and tries < 40 * count:
        tries += 1
        comp = rng.choices(comps, weights=[float(c.length) for c in comps])[0]
        k = rng.randint(0, denom)
        x = comp.lo + comp.length * Fraction(k, denom)
        if x in seen:
            continue
        seen.add(x)
        if level_set_membership(E, x, gamma, delta).member:
            out.append(x)
    return sorted(out)


# -- the builder ----------------------------------------------------------------------


def build_udt_lip1(
    system: NestedClosedSystem,
    witness: UDTWitness,
    stages: int,
    samples_per_stage: int = 8,
    seed: int = 0,
    collar: Fraction = Fraction(1, 8),
    strict: bool = True,
) -> UdtBuildResult:
    """Run the staged construction for the given number of stages.

    Stage 1 refines the zero function inside the quadratic-margin envelope
    (δ = 2^-3, ε = 1); stage n >= 2 first flattens f_{n-1} on the new closed
    parts inside the vicinity tube of radius r_{n-1}/3 (ε = 2^-3(n-1),
    δ' = midpoint of (2^-3n, 2^-3(n-1))), then refines inside
    min{quadratic margin, r_{n-1}/3} with δ = 2^-3n.
    """
    if stages < 1 or stages > system.depth:
        raise ValueError("stages must be between 1 and the system depth")
    if witness.depth < stages:
        raise ValueError("witness exhausted: need a prefix of length >= stages")
    E = system.target
    window = system.window
    phi = build_phi(E, window.lo, window)
    rng = random.Random(seed)

    f_prev = PiecewiseLinear.constant(0, window)
    r_prev: Optional[PiecewiseLinear] = None
    stage_fns: list[PiecewiseLinear] = []
    radii: list[PiecewiseLinear] = []
    diags: list[StageDiagnostics] = []

    for n in range(1, stages + 1):
        gamma_n, delta_n = witness.gammas[n - 1], witness.deltas[n - 1]
        delta_stage = Fraction(1, 2 ** (3 * n))
        F_n = system.closed_at(n)
        F_prev = system.closed_at(n - 1)

        # ---- flatten on the new closed parts (stage >= 2) ----
        if n == 1:
            f_star = f_prev
            eps_contract = Fraction(1)  # f_0 = 0 satisfies the ε = 1 bound
        else:
            eps_prev = Fraction(1, 2 ** (3 * (n - 1)))
            delta_prime = (delta_stage + eps_prev) / 2
            f_star = f_prev
            for region in system.complement(n - 1):
                if region.is_degenerate:
                    continue
                h_loc = F_n.intersect(IntervalSet([region]))
                if h_loc.is_empty:
                    continue
                zone = _positive_zone(r_prev, region.lo, region.hi)
                if zone is None:
                    if slope_zero_on(f_star.restrict(region.lo, region.hi), h_loc):
                        continue
                    raise PreconditionError(
                        f"stage {n}: no r-positive zone in {region} but new "
                        "closed parts need flattening"
                    )
                zlen = zone[1] - zone[0]
                c0 = zone[0] + zlen * collar
                d0 = zone[1] - zlen * collar
                nonflat = [
                    comp
                    for comp in h_loc
                    if not slope_zero_on(
                        f_star.restrict(region.lo, region.hi),
                        IntervalSet([comp], allow_degenerate=True),
                    )
                ]
                if nonflat:
                    hull_lo = min(cp.lo for cp in nonflat)
                    hull_hi = max(cp.hi for cp in nonflat)
                    c0 = min(c0, (zone[0] + hull_lo) / 2)
                    d0 = max(d0, (hull_hi + zone[1]) / 2)
                f_loc = f_star.restrict(region.lo, region.hi)
                env_loc = Envelope(
                    (f_prev - r_prev.scale(Fraction(1, 3))).restrict(region.lo, region.hi),
                    (f_prev + r_prev.scale(Fraction(1, 3))).restrict(region.lo, region.hi),
                )
                res = envelope_flatten(
                    f_loc, env_loc, E, h_loc, eps_prev, delta_prime,
                    segment=(c0, d0), phi=phi,
                )
                f_star = _splice(f_star, res.function)
            eps_contract = delta_prime

        # ---- margins and refine inside each complement region of F_n ----
        margin_parts: list[tuple[Interval, PiecewiseLinear]] = []
        active: list[tuple[Fraction, Fraction]] = []
        f_n = f_star
        for region in system.complement(n):
            if region.is_degenerate:
                continue
            if r_prev is None:
                zone = (region.lo, region.hi)
            else:
                zone = _positive_zone(r_prev, region.lo, region.hi)
                if zone is None:
                    continue
            zlen = zone[1] - zone[0]
            c0, d0 = zone[0] + zlen * collar, zone[1] - zlen * collar
            if not (region.lo <= c0 < d0 <= region.hi):
                continue
            qmargin = quadratic_margin(
                region, (c0, d0),
                left_is_f=region.lo != window.lo,
                right_is_f=region.hi != window.hi,
                cap=Fraction(1),
            )
            if r_prev is not None:
                qmargin = pl_min(
                    qmargin, r_prev.scale(Fraction(1, 3)).restrict(region.lo, region.hi)
                )
            margin_parts.append((region, qmargin))
            seg_mass = E.intersect(IntervalSet([Interval(c0, d0)])).measure()
            if seg_mass == 0:
                continue
            f_loc = f_n.restrict(region.lo, region.hi)
            env_loc = Envelope(f_loc - qmargin, f_loc + qmargin)
            res = envelope_refine(
                f_loc, env_loc, E, eps_contract, delta_stage,
                segment=(c0, d0), phi=phi, division="adaptive",
            )
            f_n = _splice(f_n, res.function)
            active.append((c0, d0))

        eps_margin = _assemble_regions(window, margin_parts)

        # ---- diagnostics: (i) and (iii) ----
        factor = 1 - delta_stage
        contraction_ok = verify_contraction(f_n, phi, factor) is None
        flat_ok = slope_zero_on(f_n, F_n)

        # ---- (iv): witness search at sampled level-set points ----
        witnesses: list[WitnessRecord] = []
        failures: list[tuple[Fraction, Fraction]] = []
        stage_target = (1 - Fraction(1, 2 ** (2 * n))) * gamma_n
        tail_target = (1 - Fraction(1, 2 ** n)) * gamma_n
        regions_n = [
            (reg.lo, reg.hi) for reg in system.complement(n) if not reg.is_degenerate
        ]
        samples = _sample_level_points(
            E, gamma_n, delta_n, active, samples_per_stage, rng
        )
        for x in samples:
            region = next(
                (r for r in regions_n if r[0] <= x <= r[1]), None
            )
            if region is None:
                continue
            y, ratio = stage_witness_search(f_n, E, x, delta_n, region, stage_target)
            if y is not None and ratio > stage_target:
                witnesses.append(
                    WitnessRecord(n, x, y, ratio, stage_target, tail_target)
                )
            else:
                failures.append((x, ratio))
        if failures and strict:
            x, best = failures[0]
            raise WitnessSearchError(n, x, best, stage_target)

        # ---- (v): the radius function; witness caps are local V-notches so
        # the radius only collapses near the protected pairs ----
        r_n = pl_min(
            eps_margin, PiecewiseLinear.constant(Fraction(1, 2 ** n), window)
        )
        for rec in witnesses:
            gap = abs(rec.x - rec.y)
            cap = min(
                (rec.ratio - rec.tail_target) * gap / 2,
                Fraction(1, 2 ** (2 * n)) * gamma_n * gap / 2,
            )
            r_n = pl_min(r_n, _v_notch(window, min(rec.x, rec.y), max(rec.x, rec.y), cap))

        radius_zero = all(
            r_n.restrict(comp.lo, comp.hi).sup_norm() == 0
            for comp in F_n
            if not comp.is_degenerate
        )
        radius_within = r_n.le(eps_margin)
        cauchy = (f_n - f_prev).sup_norm() if n >= 1 else None
        gaps = [abs(rec.x - rec.y) for rec in witnesses]
        diags.append(
            StageDiagnostics(
                stage=n,
                contraction_factor=factor,
                contraction_ok=contraction_ok,
                flat_on_closed_ok=flat_ok,
                active_segments=tuple(active),
                witnesses=tuple(witnesses),
                witness_failures=tuple(failures),
                cauchy_step=cauchy,
                radius_sup=r_n.sup_norm(),
                radius_zero_on_closed=radius_zero,
                radius_within_margin=radius_within,
                min_witness_gap=min(gaps) if gaps else None,
            )
        )
        stage_fns.append(f_n)
        radii.append(r_n)
        f_prev, r_prev = f_n, r_n

    return UdtBuildResult(system, witness, tuple(stage_fns), tuple(radii), tuple(diags))


def _v_notch(window: Interval, lo: Fraction, hi: Fraction, cap: Fraction) -> PiecewiseLinear:
    """Piecewise-linear function equal to cap on [lo, hi], rising with unit
    slope away from it; used to pin the radius near a witness pair."""
    xs = [window.lo]
    vs = [cap + max(Fraction(0), lo - window.lo)]
    for x, v in ((lo, cap), (hi, cap), (window.hi, cap + max(Fraction(0), window.hi - hi))):
        if x > xs[-1]:
            xs.append(x)
            vs.append(v)
    if len(xs) < 2:
        return PiecewiseLinear.constant(cap, window)
    return PiecewiseLinear(xs, vs)


def _splice(whole: PiecewiseLinear, piece: PiecewiseLinear) -> PiecewiseLinear:
    lo, hi = piece.domain.lo, piece.domain.hi
    parts = []
    if whole.domain.lo < lo:
        parts.append(whole.restrict(whole.domain.lo, lo))
    parts.append(piece)
    if hi < whole.domain.hi:
        parts.append(whole.restrict(hi, whole.domain.hi))
    out = parts[0]
    for p in parts[1:]:
        out = out.concat(p)
    return out.simplify()
