from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lipsets.intervals import Interval, IntervalSet
from lipsets.density import (
    BOTH,
    FAILS,
    HOLDS,
    HOLDS_AT_SCALE,
    LEFT,
    RIGHT,
    DensityQuery,
    UDTWitness,
    centered_ratio,
    check_strongly_dense_at,
    check_strongly_one_sided_dense_at,
    check_weakly_center_dense_at,
    check_weakly_dense_at,
    density_ratio,
    level_set,
    level_set_membership,
    max_ratio,
    merge_udt_witnesses,
    one_sided_ratio,
    prop5_example,
    suggest_udt_witness,
    witness_dominates,
    worst_window_ratio,
)

from oracles import brute_level_membership, brute_max_ratio

F = Fraction


def iset(*pairs):
    return IntervalSet.from_pairs(pairs)


GRID_M = 5
dyadic = st.integers(0, 2 ** GRID_M).map(lambda k: F(k, 2 ** GRID_M))


def dyadic_sets():
    return st.lists(st.tuples(dyadic, dyadic), min_size=0, max_size=5).map(
        lambda ps: IntervalSet.from_pairs(
            [(min(a, b), max(a, b)) for a, b in ps if a != b]
        )
    )


class TestDensityRatio:
    def test_right_full(self):
        assert density_ratio(iset((0, 1)), DensityQuery(F(0), RIGHT, F(1, 2))) == 1

    def test_left_empty(self):
        assert density_ratio(iset((0, 1)), DensityQuery(F(0), LEFT, F(1, 2))) == 0

    def test_direct_measure(self):
        E = iset((0, F(1, 4)), (F(1, 2), 1))
        assert density_ratio(E, DensityQuery(F(1), LEFT, F(1))) == F(3, 4)

    def test_both_is_max(self):
        E = iset((0, 1))
        q = DensityQuery(F(0), BOTH, F(1, 2))
        assert density_ratio(E, q) == 1

    def test_radius_validation(self):
        with pytest.raises(ValueError):
            DensityQuery(F(0), RIGHT, F(0))
        with pytest.raises(ValueError):
            DensityQuery(F(0), "up", F(1))

    @settings(max_examples=150)
    @given(dyadic_sets(), dyadic, st.integers(1, 2 ** GRID_M))
    def test_bitmask_oracle(self, E, x, rk):
        r = F(rk, 2 ** GRID_M)
        pairs = [(iv.lo, iv.hi) for iv in E]
        assert max_ratio(E, x, r) == brute_max_ratio(pairs, x, r)


class TestLevelSetMembership:
    def test_interior_point(self):
        cert = level_set_membership(iset((0, 1)), F(1, 2), F(1, 2), F(1, 4))
        assert cert.member and cert.worst_ratio == 1

    def test_isolated_exterior(self):
        cert = level_set_membership(iset((0, 1)), F(5, 4), F(1, 2), F(1, 4))
        assert not cert.member and cert.worst_ratio == 0

    def test_membership_exactly_unit_interval(self):
        # E = [0,1], gamma = 1/2, delta = 1/4: membership holds iff x in [0,1]
        E = iset((0, 1))
        for k in range(-8, 17):
            x = F(k, 8)
            cert = level_set_membership(E, x, F(1, 2), F(1, 4))
            assert cert.member == (0 <= x <= 1), x
        for x in [F(-1, 1000), F(1001, 1000), F(1, 1000), F(999, 1000)]:
            cert = level_set_membership(E, x, F(1, 2), F(1, 4))
            assert cert.member == (0 <= x <= 1), x

    def test_certificate_recomputable(self):
        E = iset((0, F(1, 3)), (F(1, 2), 1))
        cert = level_set_membership(E, F(1, 3), F(9, 10), F(1, 2))
        assert cert.left_ratio == one_sided_ratio(E, F(1, 3), cert.worst_r, LEFT)
        assert cert.right_ratio == one_sided_ratio(E, F(1, 3), cert.worst_r, RIGHT)
        assert cert.worst_ratio == max(cert.left_ratio, cert.right_ratio)

    def test_gamma_delta_validation(self):
        with pytest.raises(ValueError):
            level_set_membership(iset((0, 1)), 0, 0, F(1, 4))

    @settings(max_examples=100)
    @given(
        dyadic_sets(),
        dyadic,
        st.fractions(min_value=F(1, 8), max_value=F(7, 8), max_denominator=16),
        st.fractions(min_value=F(1, 16), max_value=F(1, 2), max_denominator=16),
    )
    def test_monotone_in_gamma_delta(self, E, x, gamma, delta):
        cert = level_set_membership(E, x, gamma, delta)
        weaker = level_set_membership(E, x, gamma / 2, delta / 2)
        if cert.member:
            assert weaker.member

    @settings(max_examples=100)
    @given(
        dyadic_sets(),
        dyadic,
        st.fractions(min_value=F(1, 8), max_value=F(7, 8), max_denominator=16),
        st.fractions(min_value=F(1, 16), max_value=F(1, 2), max_denominator=16),
    )
    def test_never_weaker_than_grid_oracle(self, E, x, gamma, delta):
        pairs = [(iv.lo, iv.hi) for iv in E]
        exact = level_set_membership(E, x, gamma, delta)
        oracle_member, oracle_worst = brute_level_membership(
            pairs, x, gamma, delta, m=9
        )
        if exact.member:
            assert oracle_member
        assert exact.worst_ratio <= oracle_worst

    @settings(max_examples=60)
    @given(
        dyadic_sets(),
        dyadic,
        st.fractions(min_value=F(1, 8), max_value=F(7, 8), max_denominator=16),
        st.fractions(min_value=F(1, 16), max_value=F(1, 2), max_denominator=16),
    )
    def test_udt_implies_strong_one_sided_at_scale(self, E, x, gamma, delta):
        cert = level_set_membership(E, x, gamma, delta)
        if not cert.member:
            return
        grid = [delta, delta / 2, delta / 4, delta / 8]
        rep = check_strongly_one_sided_dense_at(E, x, grid, tolerance=1 - gamma)
        assert all(row[3] >= gamma for row in rep.details)


class TestLevelSet:
    def test_unit_interval_exact(self):
        res = level_set(iset((0, 1)), F(1, 2), F(1, 4), Interval(F(-1), F(2)), F(1, 16))
        assert res.approximation == iset((0, 1))
        assert res.margin == 0

    def test_empty(self):
        res = level_set(
            IntervalSet.empty(), F(1, 2), F(1, 4), Interval(F(-1), F(1)), F(1, 16)
        )
        assert res.approximation.is_empty

    def test_monotonicity_probe_on_grid(self):
        E = iset((0, F(1, 4)), (F(3, 8), 1))
        for k in range(0, 33):
            x = F(k, 32)
            strong = level_set_membership(E, x, F(3, 4), F(1, 4)).member
            weak = level_set_membership(E, x, F(1, 2), F(1, 8)).member
            assert not strong or weak

    def test_degenerate_window_rejected(self):
        with pytest.raises(ValueError):
            level_set(iset((0, 1)), F(1, 2), F(1, 4), Interval.point(0), F(1, 16))

    def test_short_component_sampled_with_margin(self):
        # component shorter than delta: middle zone must be sampled
        E = iset((0, F(1, 8)))
        res = level_set(E, F(1, 2), F(1, 2), Interval(F(-1), F(1)), F(1, 64))
        assert 0 < res.margin <= F(1, 64)
        assert res.approximation.measure() <= E.measure()


class TestWeaklyDense:
    def test_boundary_point_holds(self):
        rep = check_weakly_dense_at(iset((0, 1)), 1, F(1, 10))
        assert rep.verdict == HOLDS and rep.ratio == 1 and rep.side == LEFT
        assert 0 < rep.worst_r < F(1, 10)

    def test_far_point_fails(self):
        rep = check_weakly_dense_at(iset((0, 1)), F(3, 2), F(1, 4))
        assert rep.verdict == FAILS

    def test_witness_recomputable(self):
        E = iset((0, F(1, 3)), (F(2, 5), 1))
        rep = check_weakly_dense_at(E, F(2, 5), F(1, 8))
        assert rep.verdict == HOLDS
        assert one_sided_ratio(E, F(2, 5), rep.worst_r, rep.side) == rep.ratio
        assert rep.ratio > 1 - F(1, 8)

    def test_center_dense(self):
        rep = check_weakly_center_dense_at(iset((-1, 1)), 0, F(1, 8))
        assert rep.verdict == HOLDS
        rep2 = check_weakly_center_dense_at(iset((0, 1)), 0, F(1, 8))
        assert rep2.verdict == FAILS  # centered ratio caps at 1/2

    def test_epsilon_validated(self):
        with pytest.raises(ValueError):
            check_weakly_dense_at(iset((0, 1)), 0, F(3, 2))


class TestStronglyOneSided:
    def test_interior_all_ones(self):
        grid = [F(1, 4), F(1, 8), F(1, 16)]
        rep = check_strongly_one_sided_dense_at(iset((0, 1)), F(1, 2), grid)
        assert rep.verdict == HOLDS_AT_SCALE
        assert all(row[3] == 1 for row in rep.details)

    def test_prop5_closure_fails_at_zero(self):
        ex = prop5_example(4)
        grid = [ex.critical_radius(n) for n in range(1, -3, -1)]
        rep = check_strongly_one_sided_dense_at(ex.closure, 0, grid, tolerance=F(1, 2))
        assert rep.verdict == FAILS
        # right ratio of the infinite set at the documented radii is exactly 1/3
        for n in range(-1, 2):
            r = ex.critical_radius(n)
            assert ex.right_density_infinite(r) == F(1, 3)
            trunc = one_sided_ratio(ex.closure, 0, r, RIGHT)
            tail = ex.right_measure_infinite(r) - trunc * r
            assert tail == F(2) ** (-ex.depth - 2)
        # left ratio is 0 at every radius
        assert one_sided_ratio(ex.closure, 0, F(5), LEFT) == 0

    def test_prop5_truncated_blocks(self):
        ex = prop5_example(3)
        assert iset((F(3, 4), 1), (F(3, 2), 2)).intersect(ex.truncated).measure() == F(3, 4)
        assert ex.closure.contains(0)

    def test_remark_one_sided_but_not_ordinary_dense(self):
        # truncation (n <= 6) of the two-sided block example: near 0 the max
        # one-sided ratio stays high along the documented radii while each
        # fixed side drops below 1/2 at some radius.
        right = [(F(1, 2 ** (2 * n + 1) ** 2), F(n, 2 ** (2 * n) ** 2)) for n in range(1, 7)]
        left = [(F(-n, 2 ** (2 * n + 1) ** 2), F(-1, 2 ** (2 * n + 2) ** 2)) for n in range(1, 7)]
        E = IntervalSet.from_pairs(right + left)
        for n in range(2, 6):
            r_good = F(1, 2 ** (2 * n) ** 2)
            assert max_ratio(E, 0, r_good) >= 1 - F(1, 2 ** n)
            assert one_sided_ratio(E, 0, r_good, LEFT) < F(1, 2)
            r_left = F(1, 2 ** (2 * n + 1) ** 2)
            assert one_sided_ratio(E, 0, r_left, RIGHT) < F(1, 2)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            check_strongly_one_sided_dense_at(iset((0, 1)), 0, [F(1, 8), F(1, 4)])


class TestStronglyDense:
    def test_worst_window(self):
        ratio, t = worst_window_ratio(iset((0, 1)), 0, F(1, 2))
        assert ratio == 0 and t == F(-1, 2)

    def test_interior_holds(self):
        rep = check_strongly_dense_at(iset((0, 1)), F(1, 2), [F(1, 4), F(1, 8)])
        assert rep.verdict == HOLDS_AT_SCALE

    def test_boundary_fails(self):
        rep = check_strongly_dense_at(iset((0, 1)), 0, [F(1, 4)])
        assert rep.verdict == FAILS


class TestUDTWitness:
    def test_validation(self):
        with pytest.raises(ValueError):
            UDTWitness((F(1, 2), F(1, 2)), (F(1, 2), F(1, 4)))
        with pytest.raises(ValueError):
            UDTWitness((F(1, 2),), (F(-1),))

    def test_single_witness_identity(self):
        w = UDTWitness((F(1, 2),), (F(1, 4),))
        assert merge_udt_witnesses([w]) is w

    def test_identical_pair_strictly_dominated(self):
        w = suggest_udt_witness(iset((0, 1)), 3)
        m = merge_udt_witnesses([w, w])
        assert witness_dominates(m, w)

    def test_empty_list(self):
        with pytest.raises(ValueError):
            merge_udt_witnesses([])

    def test_merged_validates_union(self):
        parts = [iset((F(1, 2 ** m), F(1, 2 ** (m - 1)))) for m in range(1, 5)]
        union = parts[0]
        for p in parts[1:]:
            union = union.union(p)
        ws = [suggest_udt_witness(p, 3) for p in parts]
        merged = merge_udt_witnesses(ws)
        for p in parts:
            for iv in p:
                for x in (iv.lo, iv.midpoint, iv.hi):
                    # every prefix index validates, so in particular the tail does
                    n = merged.depth - 1
                    cert = level_set_membership(
                        union, x, merged.gammas[n], merged.deltas[n]
                    )
                    assert cert.member

    def test_json_round_trip(self):
        w = suggest_udt_witness(iset((0, 1)), 4)
        assert UDTWitness.from_json(w.to_json()) == w
