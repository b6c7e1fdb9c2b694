import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from propa import (Kernel, Measure, compose, convolve, gen_path, l1_distance,
                   mix_kernels, power, tail_mass)
from propa.checks import random_kernel, random_measure


class TestMeasure:
    def test_renormalizes(self, path10):
        m = Measure(path10, [2, 5], [0.5, 0.5 + 5e-10])
        assert m.total() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_bad_mass(self, path10):
        with pytest.raises(ValueError, match="not 1"):
            Measure(path10, [0, 1], [0.5, 0.6])
        with pytest.raises(ValueError, match="negative"):
            Measure(path10, [0, 1], [1.5, -0.5])

    def test_rejects_out_of_range(self, path10):
        with pytest.raises(ValueError, match="range"):
            Measure(path10, [50], [1.0])

    def test_getitem(self, path10):
        m = Measure.uniform(path10, [1, 3])
        assert m[1] == 0.5 and m[2] == 0.0


class TestL1Distance:
    def test_identical(self, path10):
        d = Measure.delta(path10, 4)
        assert l1_distance(d, d) == 0.0

    def test_disjoint_deltas(self, path10):
        assert l1_distance(Measure.delta(path10, 1), Measure.delta(path10, 2)) == 2.0

    def test_overlapping_uniforms(self, path10):
        # |0.5| + |0.5 - 0.5| + |0.5| summed elementwise
        a = Measure.uniform(path10, [0, 1])
        b = Measure.uniform(path10, [1, 2])
        assert l1_distance(a, b) == 1.0

    def test_mismatched_spaces(self, path10):
        other = gen_path(5)
        with pytest.raises(ValueError, match="different spaces"):
            l1_distance(Measure.delta(path10, 0), Measure.delta(other, 0))

    @given(st.integers(0, 200))
    @settings(max_examples=50, deadline=None)
    def test_range_bounds(self, seed):
        space = gen_path(12)
        rng = np.random.default_rng(seed)
        a = random_measure(space, rng)
        b = random_measure(space, rng)
        v = l1_distance(a, b)
        # totals are only held to within ROW_SUM_TOL, so allow matching slack
        assert 0.0 <= v <= 2.0 + 1e-9
        assert v == l1_distance(b, a)


class TestConvolve:
    def test_delta_picks_row(self, path10, rng):
        k = random_kernel(path10, rng)
        out = convolve(Measure.delta(path10, 3), k)
        assert l1_distance(out, k.row(3)) == 0.0

    def test_identity_kernel(self, path10, rng):
        m = random_measure(path10, rng)
        out = convolve(m, Kernel.identity(path10))
        assert l1_distance(out, m) == 0.0

    def test_hand_expansion_three_points(self):
        space = gen_path(2)
        k = Kernel.from_dense(space, [[0.5, 0.5, 0.0],
                                      [0.2, 0.3, 0.5],
                                      [0.0, 1.0, 0.0]])
        m = Measure.uniform(space, [0, 1])
        out = convolve(m, k)
        expect = 0.5 * np.array([0.5, 0.5, 0.0]) + 0.5 * np.array([0.2, 0.3, 0.5])
        assert np.allclose(out.dense(), expect, atol=1e-15)

    def test_nonexpansion_seeded(self, path10, rng):
        for _ in range(100):
            a = random_measure(path10, rng)
            b = random_measure(path10, rng)
            k = random_kernel(path10, rng)
            lhs = l1_distance(convolve(a, k), convolve(b, k))
            assert lhs <= l1_distance(a, b) + 1e-12

    def test_local_uniformity_contraction(self, path10, rng):
        from propa.checks import check_local_uniformity
        for lhs, rhs in check_local_uniformity(path10, rng, 50):
            assert lhs <= rhs + 1e-12


class TestCompose:
    def test_identity(self, path10, rng):
        k = random_kernel(path10, rng)
        out = compose(k, Kernel.identity(path10))
        assert np.allclose(out.to_dense(), k.to_dense(), atol=0)

    def test_radius_subadditive(self, path10):
        from propa import build_ball_witness
        k = build_ball_witness(path10, 1)
        assert compose(k, k).support_radius <= 2

    def test_matches_dense_product(self, rng):
        space = gen_path(5)
        for _ in range(10):
            k1 = random_kernel(space, rng)
            k2 = random_kernel(space, rng)
            dense = k1.to_dense() @ k2.to_dense()
            assert np.allclose(compose(k1, k2).to_dense(), dense, atol=1e-13)

    def test_row_is_convolve(self, path10, rng):
        k1 = random_kernel(path10, rng)
        k2 = random_kernel(path10, rng)
        out = compose(k1, k2)
        for x in (0, 4, 9):
            viaconv = convolve(k1.row(x), k2)
            row = out.row(x)
            assert np.array_equal(row.idx, viaconv.idx)
            assert np.array_equal(row.val, viaconv.val)


class TestPower:
    def test_power_one(self, path10, rng):
        k = random_kernel(path10, rng)
        assert power(k, 1) is k

    def test_rejects_zero(self, path10, rng):
        with pytest.raises(ValueError):
            power(random_kernel(path10, rng), 0)

    def test_associativity_cross_check(self, rng):
        space = gen_path(7)
        k = random_kernel(space, rng)
        left = power(k, 4).to_dense()
        split = compose(power(k, 2), power(k, 2)).to_dense()
        assert np.allclose(left, split, atol=1e-14)

    def test_rows_equal_iterated_convolve_exactly(self, path10, rng):
        k = random_kernel(path10, rng)
        p4 = power(k, 4)
        for x in range(path10.point_count):
            m = Measure.delta(path10, x)
            for _ in range(4):
                m = convolve(m, k)
            row = p4.row(x)
            assert np.array_equal(row.idx, m.idx)
            assert np.array_equal(row.val, m.val)

    def test_stochasticity_drift(self, path10, rng):
        k = random_kernel(path10, rng)
        assert power(k, 12).row_sum_drift() <= 1e-9


class TestTailMass:
    def test_identity_zero(self, path10):
        assert tail_mass(Kernel.identity(path10), 4, 0) == 0.0

    def test_ball_witness_contained(self, path10):
        from propa import build_ball_witness
        k = build_ball_witness(path10, 2)
        for x in path10.core(2):
            assert tail_mass(k, int(x), 2) == 0.0

    def test_collapse_tail_below_delta(self, path100):
        from propa import collapse_kernel
        P = collapse_kernel(path100, 0)
        for delta in (0.5, 0.25, 0.1):
            radius = int(1 / delta)
            for x in range(path100.point_count):
                assert tail_mass(P, x, radius) < delta


class TestMixKernels:
    def test_convexity(self, path10, rng):
        ks = [random_kernel(path10, rng) for _ in range(3)]
        mixed = mix_kernels([0.5, 0.25, 0.25], ks)
        assert mixed.row_sum_drift() <= 1e-12
        dense = 0.5 * ks[0].to_dense() + 0.25 * ks[1].to_dense() + 0.25 * ks[2].to_dense()
        assert np.allclose(mixed.to_dense(), dense, atol=1e-15)


class TestKernelIO:
    def test_round_trip(self, path10, rng, tmp_path):
        k = random_kernel(path10, rng)
        f = tmp_path / "k.json"
        k.save(f)
        loaded = Kernel.load(path10, f)
        assert np.allclose(loaded.to_dense(), k.to_dense(), atol=0)

    def test_loader_validates_row_sums(self, path10, tmp_path):
        obj = {"n": 11, "entries": [[x, x, 1.0] for x in range(11)]}
        obj["entries"][0][2] = 0.5
        f = tmp_path / "bad.json"
        f.write_text(json.dumps(obj))
        with pytest.raises(ValueError, match="sums to"):
            Kernel.load(path10, f)

    def test_prune_reports_perturbation(self, path10):
        rows = [Measure(path10, [x, (x + 1) % 11], [1 - 1e-16, 1e-16])
                for x in range(11)]
        k = Kernel.from_rows(path10, rows)
        pruned, bound = k.prune(threshold=1e-15)
        assert pruned.to_dense().diagonal().min() == 1.0
        assert 0 < bound < 1e-14
