import itertools
import json

import numpy as np
import pytest

from propa import (MetricSpace, gen_free_group_ball, gen_grid, gen_path,
                   geometry_profile)
from propa.space import free_group_ball_size


def enumerate_reduced_words(rank, radius):
    """Independent oracle: brute-force enumeration of reduced words."""
    alphabet = list(range(1, rank + 1)) + list(range(-rank, 0))
    words = {()}
    frontier = {()}
    for _ in range(radius):
        nxt = set()
        for w in frontier:
            for a in alphabet:
                if not (w and w[-1] == -a):
                    nxt.add(w + (a,))
        words |= nxt
        frontier = nxt
    return words


class TestPath:
    def test_metric(self, path10):
        assert path10.d(3, 7) == 4
        assert path10.point_count == 11

    def test_balls(self, path10):
        assert len(path10.ball(5, 2)) == 5
        assert len(path10.ball(0, 2)) == 3  # clipped at the end

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            gen_path(0)

    def test_core_excludes_ends(self, path10):
        assert list(path10.core(0)) == list(range(1, 10))
        assert list(path10.core(2)) == list(range(3, 8))


class TestGrid:
    def test_l1_ball(self, grid2):
        center = grid2.labels.index("2,2")
        assert len(grid2.ball(center, 1)) == 5

    def test_corner_distance(self, grid2):
        a = grid2.labels.index("0,0")
        b = grid2.labels.index("4,4")
        assert grid2.d(a, b) == 8

    def test_1d_grid_is_path(self):
        g = gen_grid(1, 7)
        p = gen_path(6)
        assert np.array_equal(g.dist, p.dist)

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            gen_grid(4, 3)


class TestFreeGroupBall:
    def test_radius_one_count(self):
        assert gen_free_group_ball(2, 1).point_count == 5

    @pytest.mark.parametrize("radius", [1, 2, 3, 4])
    def test_count_matches_enumeration(self, radius):
        s = gen_free_group_ball(2, radius)
        assert s.point_count == len(enumerate_reduced_words(2, radius))
        assert s.point_count == 2 * 3 ** radius - 1
        assert free_group_ball_size(2, radius) == s.point_count

    def test_generator_inverse_distance(self, tree2):
        a = tree2.labels.index("a")
        a_inv = tree2.labels.index("A")
        assert tree2.d(a, a_inv) == 2  # through the identity

    def test_word_metric_against_cancellation(self, tree2):
        # d(ab, aB) = 2: the common prefix 'a' cancels
        assert tree2.d(tree2.labels.index("ab"), tree2.labels.index("aB")) == 2
        assert tree2.d(tree2.labels.index("e"), tree2.labels.index("abab")) == 4

    def test_point_cap(self):
        with pytest.raises(ValueError):
            gen_free_group_ball(2, 12, point_cap=1000)


@pytest.mark.parametrize("fixture", ["path10", "grid2", "tree2"])
def test_metric_axioms_exhaustive(fixture, request):
    s = request.getfixturevalue(fixture)
    d = s.dist
    n = s.point_count
    assert np.all(np.diag(d) == 0)
    assert np.array_equal(d, d.T)
    assert np.all(d[~np.eye(n, dtype=bool)] > 0)
    for z in range(n):
        assert np.all(d <= d[:, z:z + 1] + d[z:z + 1, :])


@pytest.mark.parametrize("fixture", ["path10", "grid2", "tree2"])
def test_profile_monotone(fixture, request):
    s = request.getfixturevalue(fixture)
    prof = geometry_profile(s, 4)
    assert prof.counts[0] == 1
    assert all(b >= a for a, b in zip(prof.counts, prof.counts[1:]))


def test_profile_values(path10, grid2):
    assert geometry_profile(path10, 2).counts[2] == 5
    assert geometry_profile(gen_grid(2, 9), 1).counts[1] == 5
    tree = gen_free_group_ball(2, 4)
    assert geometry_profile(tree, 2).counts[2] == 17  # 2*3^2 - 1, interior


def test_core_nesting(tree2):
    small = set(tree2.core(1).tolist())
    large = set(tree2.core(0).tolist())
    assert small <= large


class TestSerialization:
    def test_round_trip(self, path10, tmp_path):
        f = tmp_path / "space.json"
        path10.save(f)
        loaded = MetricSpace.load(f)
        assert np.array_equal(loaded.dist, path10.dist)
        assert list(loaded.boundary) == list(path10.boundary)

    def test_edges_form(self, tmp_path):
        obj = {"points": 4, "edges": [[0, 1], [1, 2], [2, 3], [3, 0]]}
        f = tmp_path / "cycle.json"
        f.write_text(json.dumps(obj))
        s = MetricSpace.load(f)
        assert s.d(0, 2) == 2 and s.d(0, 3) == 1

    def test_rejects_asymmetric(self, tmp_path):
        obj = {"points": 2, "metric": [[0, 1], [2, 0]]}
        f = tmp_path / "bad.json"
        f.write_text(json.dumps(obj))
        with pytest.raises(ValueError, match="symmetric"):
            MetricSpace.load(f)

    def test_rejects_triangle_violation(self, tmp_path):
        obj = {"points": 3, "metric": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}
        f = tmp_path / "bad.json"
        f.write_text(json.dumps(obj))
        with pytest.raises(ValueError, match="triangle"):
            MetricSpace.load(f)

    def test_rejects_disconnected(self, tmp_path):
        obj = {"points": 4, "edges": [[0, 1], [2, 3]]}
        f = tmp_path / "bad.json"
        f.write_text(json.dumps(obj))
        with pytest.raises(ValueError, match="connected"):
            MetricSpace.load(f)
