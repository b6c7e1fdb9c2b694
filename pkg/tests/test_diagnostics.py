import numpy as np
import pytest

from propa import (Kernel, Measure, cesaro_profile, collapse_kernel,
                   collapse_power_oracle, gen_path, l1_distance,
                   pairwise_l1_bound_check, power, uniform_profile)
from propa.checks import random_kernel


def geometric_partial_sum(a, n):
    """Oracle: sum_{i=1..n} a^i by direct accumulation."""
    total, term = 0.0, 1.0
    for _ in range(n):
        term *= a
        total += term
    return total


class TestCollapseKernel:
    def test_basepoint_row(self, path100):
        P = collapse_kernel(path100, 0)
        row = P.row(0)
        assert list(row.idx) == [0] and row.val[0] == 1.0

    def test_neighbor_row(self, path100):
        row = collapse_kernel(path100, 0).row(1)
        assert list(row.idx) == [0, 1]
        assert row.val == pytest.approx([0.5, 0.5])

    def test_unbounded_flag_and_attained_radius(self, path100):
        P = collapse_kernel(path100, 0)
        assert P.unbounded
        assert P.support_radius == 100  # row of the far end reaches x0

    def test_tail_with_inverse_delta_radius(self, path100):
        P = collapse_kernel(path100, 0)
        from propa import tail_mass
        for delta in (0.5, 0.2, 0.1):
            for x in range(path100.point_count):
                assert tail_mass(P, x, int(1 / delta)) < delta


class TestCollapseOracle:
    def test_basepoint(self, path100):
        m = collapse_power_oracle(path100, 0, 0, 7)
        assert list(m.idx) == [0] and m.val[0] == 1.0

    def test_d1_n3(self, path100):
        m = collapse_power_oracle(path100, 0, 1, 3)
        assert m[0] == pytest.approx(7 / 8, abs=1e-15)
        assert m[1] == pytest.approx(1 / 8, abs=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 5, 15, 30])
    def test_matches_matrix_powering(self, n):
        space = gen_path(40)
        P = collapse_kernel(space, 0)
        Pn = power(P, n)
        for x in range(space.point_count):
            oracle = collapse_power_oracle(space, 0, x, n)
            assert l1_distance(Pn.row(x), oracle) <= 1e-12


class TestPairwiseBound:
    def test_basepoint_pair(self, path100):
        P = collapse_kernel(path100, 0)
        lhs, rhs = pairwise_l1_bound_check(P, 0, 0, 4)
        assert lhs == 0.0 and rhs == 0.0

    def test_hand_values_d1_d2_n2(self, path100):
        P = collapse_kernel(path100, 0)
        lhs, rhs = pairwise_l1_bound_check(P, 1, 2, 2)
        assert rhs == pytest.approx(2 * 0.25 + 2 * 4 / 9, abs=1e-15)
        # closed forms: rows are (1 - a^2) delta_0 + a^2 delta_x
        a2, b2 = 0.25, 4 / 9
        assert lhs == pytest.approx(abs(a2 - b2) + a2 + b2, abs=1e-12)

    def test_decays_with_n(self, path100):
        P = collapse_kernel(path100, 0)
        vals = [pairwise_l1_bound_check(P, 3, 7, n)[0] for n in (1, 5, 20, 60)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-3

    def test_finds_basepoint_automatically(self, path100):
        P = collapse_kernel(path100, 17)
        lhs, rhs = pairwise_l1_bound_check(P, 1, 2, 3)
        assert lhs <= rhs + 1e-12


class TestUniformProfile:
    def test_constant_kernel_zero(self, path10):
        rows = [Measure.uniform(path10, range(11)) for _ in range(11)]
        k = Kernel.from_rows(path10, rows)
        rep = uniform_profile(k, path10, 2, 5)
        assert all(v == 0.0 for v in rep.series.values())

    def test_identity_kernel_stays_two(self, path10):
        rep = uniform_profile(Kernel.identity(path10), path10, 2, 5)
        assert all(v == 2.0 for v in rep.series.values())
        assert rep.monotone

    def test_collapse_nonuniformity_closed_form(self, path100):
        P = collapse_kernel(path100, 0)
        rep = uniform_profile(P, path100, 2, 10)
        # sup attained at the far core pair (98, 99): 2 * (99/100)^n
        assert rep.series[10] == pytest.approx(2 * 0.99 ** 10, abs=1e-9)
        assert rep.sup_pairs[10] == (98, 99)
        assert rep.series[10] > 1.8

    def test_monotone_for_random_kernels(self, rng):
        space = gen_path(24)
        for _ in range(5):
            k = random_kernel(space, rng)
            rep = uniform_profile(k, space, 3, 10)
            vals = [rep.series[n] for n in range(1, 11)]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
            assert rep.monotone

    def test_empty_pairs_reported(self, path10):
        with pytest.raises(ValueError, match="core"):
            uniform_profile(Kernel.identity(path10), path10, 2, 3, margin=8)


class TestCesaroProfile:
    def test_same_point_zero(self, path10):
        k = Kernel.identity(path10)
        rep = cesaro_profile(k, [(3, 3)], 5)
        assert all(v == 0.0 for v in rep.series.values())

    def test_identity_distinct_two(self, path10):
        rep = cesaro_profile(Kernel.identity(path10), [(2, 7)], 5)
        assert all(v == 2.0 for v in rep.series.values())

    @pytest.mark.parametrize("n", [1, 5, 25, 100])
    def test_collapse_geometric_closed_form(self, path100, n):
        P = collapse_kernel(path100, 0)
        rep = cesaro_profile(P, [(1, 2)], n)
        s_a = geometric_partial_sum(0.5, n)     # d(x, x0) = 1
        s_b = geometric_partial_sum(2 / 3, n)   # d(y, x0) = 2
        expect = (abs(s_b - s_a) + s_a + s_b) / n
        assert rep.series[n] == pytest.approx(expect, abs=1e-12)

    def test_collapse_averaged_criterion_vanishes(self, path100):
        P = collapse_kernel(path100, 0)
        rep = cesaro_profile(P, [(1, 2)], 200)
        assert rep.series[200] < 0.05
