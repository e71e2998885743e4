"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's own algorithms: sets with dyadic
endpoints are handled as bitmasks over a 2^-m grid, densities and level-set
membership are minimized over dense radius grids.
"""

from __future__ import annotations

from fractions import Fraction


def to_cells(pairs, window, m):
    """Bitmask of the set over the window at resolution 2^-m.

    Endpoints must lie on the grid k/2^m; cell i covers
    [window_lo + i/2^m, window_lo + (i+1)/2^m].
    """
    lo, hi = window
    scale = 2 ** m
    n = (hi - lo) * scale
    assert n == int(n), "window must be grid-aligned"
    n = int(n)
    cells = 0
    for a, b in pairs:
        ia = (a - lo) * scale
        ib = (b - lo) * scale
        assert ia == int(ia) and ib == int(ib), "endpoints must be grid-aligned"
        for i in range(max(0, int(ia)), min(n, int(ib))):
            cells |= 1 << i
    return cells, n


def cells_measure(cells, m):
    return Fraction(bin(cells).count("1"), 2 ** m)


def cells_union(c1, c2):
    return c1 | c2


def cells_intersect(c1, c2):
    return c1 & c2


def cells_complement(cells, n):
    return ~cells & ((1 << n) - 1)


def brute_one_sided_measure(pairs, x, r, side):
    """|E ∩ (x-r, x)| or |E ∩ (x, x+r)| by direct interval clipping."""
    if side == "left":
        lo, hi = x - r, x
    else:
        lo, hi = x, x + r
    total = Fraction(0)
    for a, b in pairs:
        c, d = max(a, lo), min(b, hi)
        if c < d:
            total += d - c
    return total


def brute_max_ratio(pairs, x, r):
    left = brute_one_sided_measure(pairs, x, r, "left") / r
    right = brute_one_sided_measure(pairs, x, r, "right") / r
    return max(left, right)


def brute_level_membership(pairs, x, gamma, delta, m=14):
    """Grid oracle for x ∈ E^{γ,δ}: minimize the max one-sided ratio over
    radii k/2^m in (0, δ].  Weaker than the exact test (misses off-grid
    minima) but never wrongly rejects a member at its own resolution."""
    step = Fraction(1, 2 ** m)
    k = 1
    worst = None
    while k * step <= delta:
        ratio = brute_max_ratio(pairs, x, k * step)
        if worst is None or ratio < worst:
            worst = ratio
        k += 1
    if worst is None:
        worst = brute_max_ratio(pairs, x, delta)
    return worst >= gamma, worst


def brute_m_ratio(f_eval, x, r, samples=512):
    """Grid lower bound for sup |f(x)-f(y)|/r over |y-x| <= r."""
    fx = f_eval(x)
    best = Fraction(0)
    for i in range(samples + 1):
        y = x - r + Fraction(2 * i, samples) * r
        v = abs(f_eval(y) - fx)
        if v > best:
            best = v
    return best / r
