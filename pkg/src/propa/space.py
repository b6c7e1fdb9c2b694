"""Finite discrete metric spaces with integer graph metrics.

A space is a finite truncation of an (idealized) infinite bounded-geometry
space.  It carries the full integer distance matrix, human-readable point
labels, and the set of truncation-boundary points.  The ``core`` of a space
at margin m is the set of points whose radius-m balls avoid the boundary;
everything downstream that mimics a statement about the infinite space
quantifies only over core points.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

DEFAULT_POINT_CAP = 200_000

_GEN_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class GeometryProfile:
    """Exact ball-growth profile: counts[i] = max over x of |B(x, radii[i])|."""

    radii: tuple
    counts: tuple


class MetricSpace:
    """Finite point set with an integer metric and a truncation boundary.

    Parameters
    ----------
    dist : (N, N) integer array
        Symmetric distance matrix, zero diagonal, triangle inequality.
    labels : sequence of str, optional
        Human-readable point names; defaults to stringified indices.
    boundary : iterable of int, optional
        Truncation-boundary points.  Empty means the space is exact (not a
        truncation) and every point is core at any margin.
    validate : bool
        Check metric axioms at construction (exhaustive for N <= 500,
        seeded triple sampling above that).
    """

    def __init__(self, dist, labels=None, boundary=(), validate=True):
        dist = np.asarray(dist)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ValueError("distance matrix must be square")
        if not np.issubdtype(dist.dtype, np.integer):
            if not np.all(dist == np.round(dist)):
                raise ValueError("metric values must be integers")
            dist = dist.astype(np.int64)
        self.dist = dist.astype(np.int32)
        self.dist.setflags(write=False)
        n = dist.shape[0]
        self.labels = [str(i) for i in range(n)] if labels is None else [str(s) for s in labels]
        if len(self.labels) != n:
            raise ValueError(f"expected {n} labels, got {len(self.labels)}")
        bset = sorted(set(int(b) for b in boundary))
        if bset and (bset[0] < 0 or bset[-1] >= n):
            raise ValueError("boundary point out of range")
        self.boundary = np.array(bset, dtype=np.int64)
        if validate:
            self._check_metric()

    @property
    def point_count(self):
        return self.dist.shape[0]

    def _check_metric(self):
        d = self.dist
        n = d.shape[0]
        if np.any(np.diag(d) != 0):
            raise ValueError("d(x,x) must be 0")
        if np.any(d != d.T):
            raise ValueError("metric is not symmetric")
        if np.any((d == 0) & ~np.eye(n, dtype=bool)):
            raise ValueError("d(x,y) = 0 for distinct points")
        if n <= 500:
            # exhaustive triangle check, vectorized over the middle point
            for z in range(n):
                if np.any(d > d[:, z:z + 1] + d[z:z + 1, :]):
                    raise ValueError(f"triangle inequality fails through point {z}")
        else:
            rng = np.random.default_rng(0)
            xs, ys, zs = rng.integers(0, n, size=(3, 20_000))
            if np.any(d[xs, ys] > d[xs, zs] + d[zs, ys]):
                raise ValueError("triangle inequality fails on sampled triples")

    # -- queries ------------------------------------------------------------

    def d(self, x, y):
        return int(self.dist[x, y])

    def ball(self, x, radius):
        """Indices of the closed ball B(x, radius), ascending."""
        return np.nonzero(self.dist[x] <= radius)[0]

    def core(self, margin):
        """Points whose radius-``margin`` ball contains no boundary point."""
        if margin < 0:
            raise ValueError("margin must be >= 0")
        if len(self.boundary) == 0:
            return np.arange(self.point_count, dtype=np.int64)
        near = self.dist[:, self.boundary].min(axis=1)
        return np.nonzero(near > margin)[0].astype(np.int64)

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        return {
            "points": self.point_count,
            "labels": list(self.labels),
            "metric": self.dist.astype(int).tolist(),
            "boundary": self.boundary.astype(int).tolist(),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, obj):
        n = int(obj["points"])
        labels = obj.get("labels")
        boundary = obj.get("boundary", ())
        if "metric" in obj:
            dist = np.asarray(obj["metric"])
            if dist.shape != (n, n):
                raise ValueError("metric shape does not match point count")
            return cls(dist, labels=labels, boundary=boundary)
        if "edges" in obj:
            return cls.from_edges(n, obj["edges"], labels=labels, boundary=boundary)
        raise ValueError("space file needs a 'metric' or 'edges' key")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_edges(cls, n, edges, labels=None, boundary=()):
        """Shortest-path metric of an undirected unit-weight graph."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        data = np.ones(len(edges))
        adj = csr_matrix((data, (edges[:, 0], edges[:, 1])), shape=(n, n))
        adj = adj + adj.T
        dist = shortest_path(adj, method="D", unweighted=True)
        if np.isinf(dist).any():
            raise ValueError("graph is not connected")
        return cls(dist.astype(np.int64), labels=labels, boundary=boundary)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gen_path(length):
    """Points 0..length on a line, d(i,j) = |i-j|.  Ends are boundary."""
    if length < 1:
        raise ValueError("length must be >= 1")
    idx = np.arange(length + 1)
    dist = np.abs(idx[:, None] - idx[None, :])
    return MetricSpace(dist, boundary=(0, length), validate=False)


def gen_grid(dim, side):
    """side^dim box in Z^dim with the L1 metric.  Faces are boundary."""
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")
    if side < 1:
        raise ValueError("side must be >= 1")
    coords = np.array(list(itertools.product(range(side), repeat=dim)), dtype=np.int64)
    dist = np.abs(coords[:, None, :] - coords[None, :, :]).sum(axis=2)
    labels = [",".join(map(str, c)) for c in coords]
    on_face = ((coords == 0) | (coords == side - 1)).any(axis=1)
    boundary = np.nonzero(on_face)[0] if side > 1 else []
    return MetricSpace(dist, labels=labels, boundary=boundary, validate=False)


def free_group_ball_size(rank, radius):
    """Number of reduced words of length <= radius in the rank-r free group."""
    total = 1
    layer = 2 * rank
    for _ in range(radius):
        total += layer
        layer *= 2 * rank - 1
    return total


def gen_free_group_ball(rank, radius, point_cap=DEFAULT_POINT_CAP):
    """Ball of reduced words in the free group, word (tree) metric.

    Points are reduced words over rank pairs of generators, enumerated by
    BFS (length, then generator order).  Words of maximal length form the
    truncation boundary.  Generator i is labelled by a lowercase letter,
    its inverse by the matching uppercase letter.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if rank > len(_GEN_LETTERS):
        raise ValueError(f"rank must be <= {len(_GEN_LETTERS)}")
    n = free_group_ball_size(rank, radius)
    if n > point_cap:
        raise ValueError(f"space would have {n} points, above cap {point_cap}")

    # letters: +g is a generator, -g its inverse, g in 1..rank
    alphabet = [g for g in range(1, rank + 1)] + [-g for g in range(1, rank + 1)]
    words = [()]
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for a in alphabet:
                if w and w[-1] == -a:
                    continue  # not reduced
                nxt.append(w + (a,))
        words.extend(nxt)
        frontier = nxt

    def letter_label(a):
        return _GEN_LETTERS[a - 1] if a > 0 else _GEN_LETTERS[-a - 1].upper()

    labels = ["e" if not w else "".join(letter_label(a) for a in w) for w in words]

    # tree metric: d(u, v) = |u| + |v| - 2 * (longest common prefix)
    maxlen = radius
    arr = np.zeros((n, maxlen), dtype=np.int64)
    lens = np.array([len(w) for w in words], dtype=np.int64)
    for i, w in enumerate(words):
        arr[i, :len(w)] = w
    dist = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        eq = arr == arr[i]
        # common prefix length: first position where letters differ or a word ends
        limit = np.minimum(lens, lens[i])
        run = np.cumprod(eq, axis=1)  # 1 while prefixes agree
        lcp = np.minimum(run.sum(axis=1), limit)
        dist[i] = lens + lens[i] - 2 * lcp
    boundary = np.nonzero(lens == radius)[0]
    return MetricSpace(dist, labels=labels, boundary=boundary, validate=False)


def geometry_profile(space, max_radius):
    """Exact M(C) = max_x |B(x, C)| for C = 0..max_radius."""
    if max_radius < 0:
        raise ValueError("max_radius must be >= 0")
    radii = tuple(range(max_radius + 1))
    counts = tuple(int((space.dist <= c).sum(axis=1).max()) for c in radii)
    return GeometryProfile(radii=radii, counts=counts)
