"""Witness families certifying the amenability-like smoothing property.

Two equivalent presentations are supported: set families (finite multisets
attached to each point, compared by symmetric-difference ratio) and kernel
families (one ball-supported transition kernel per level, compared by the
sup of row L1 distances over metrically close pairs).  The bridge here goes
one way only, sets -> kernels, by normalizing multiplicities.

``truncate_renormalize`` clips a kernel with heavy tails back to a ball and
renormalizes; when at least 1 - 1/n of each row's mass was already inside,
the per-row L1 change is at most 3/n and pairwise variation inflates by at
most 6/n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .measures import Kernel, Measure


def build_ball_witness(space, radius):
    """Kernel whose row x is uniform on the closed ball B(x, radius)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    mask = space.dist <= radius
    counts = mask.sum(axis=1)
    indptr = np.zeros(space.point_count + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(counts)
    indices = np.nonzero(mask)[1].astype(np.int64)
    data = np.repeat(1.0 / counts, counts)
    return Kernel(space, indptr, indices, data, validate=False)


def _core_pairs(space, K, margin):
    """Unordered core pairs (x < y) with 0 < d(x,y) < K."""
    core = space.core(margin)
    if len(core) == 0:
        raise ValueError("core region is empty at this margin")
    sub = space.dist[np.ix_(core, core)]
    xs, ys = np.nonzero(np.triu((sub > 0) & (sub < K), k=1))
    return core[xs], core[ys]


def variation_profile(k, space, K, margin=0, workers=1):
    """sup over core pairs with d(x,y) < K of || k(x,.) - k(y,.) ||_1."""
    if K < 1:
        raise ValueError("K must be >= 1")
    xs, ys = _core_pairs(space, K, margin)
    if len(xs) == 0:
        return 0.0
    sup, _ = _backend.pair_sup_parallel(xs, ys, k.indptr, k.indices, k.data,
                                        workers=workers)
    return float(sup)


def truncate_renormalize(k, radius):
    """Restrict each row to B(x, radius) and renormalize.

    Fails if some row has no mass inside its ball.  A kernel already
    supported in the balls comes back with identical entries.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    space = k.space
    rows = []
    for x in range(space.point_count):
        s, e = k.indptr[x], k.indptr[x + 1]
        cols = k.indices[s:e]
        inside = space.dist[x, cols] <= radius
        kept = k.data[s:e][inside]
        total = float(kept.sum())
        if total <= 0.0:
            raise ValueError(f"row {x} has no mass inside B(x, {radius})")
        if inside.all():
            rows.append(Measure(space, cols, k.data[s:e], renormalize=False))
        else:
            rows.append(Measure(space, cols[inside], kept / total, renormalize=False))
    return Kernel.from_rows(space, rows)


# ---------------------------------------------------------------------------
# set-form witnesses
# ---------------------------------------------------------------------------

@dataclass
class SetWitness:
    """Finite multisets over the point set, one per (point, level).

    The auxiliary integer fibers only ever enter through cardinalities, so a
    level stores, for each point, a dict mapping point -> multiplicity.
    ``radius_bounds[level]`` bounds the support radius of every set at that
    level.
    """

    levels: list  # list over levels of list over points of dict {point: mult}
    radius_bounds: list

    def __post_init__(self):
        if len(self.levels) != len(self.radius_bounds):
            raise ValueError("one radius bound per level required")

    @classmethod
    def from_balls(cls, space, radii):
        """The standard family: the set at (x, level) is B(x, radii[level]),
        every point with multiplicity 1."""
        levels = []
        for r in radii:
            levels.append([{int(y): 1 for y in space.ball(x, r)}
                           for x in range(space.point_count)])
        return cls(levels=levels, radius_bounds=list(radii))

    def check_radius_bounds(self, space):
        for lvl, (sets, bound) in enumerate(zip(self.levels, self.radius_bounds)):
            for x, s in enumerate(sets):
                if not s:
                    raise ValueError(f"empty set at point {x}, level {lvl}")
                far = [y for y in s if space.d(x, y) > bound]
                if far:
                    raise ValueError(
                        f"set at point {x}, level {lvl} leaves B(x, {bound})")


def set_witness_to_kernel(w, level, space):
    """Normalize multiplicities into a transition kernel row per point."""
    sets = w.levels[level]
    rows = []
    for x, s in enumerate(sets):
        if not s:
            raise ValueError(f"empty set at point {x}, level {level}")
        items = sorted(s.items())
        size = sum(m for _, m in items)
        rows.append(Measure(space, [y for y, _ in items],
                            [m / size for _, m in items], renormalize=False))
    return Kernel.from_rows(space, rows)


def set_ratio_profile(w, level, K, space, margin=0):
    """sup over core pairs with d(x,y) < K of |A_x (+) A_y| / |A_x & A_y|,
    counting multiplicities; +inf when some tested pair has disjoint sets."""
    sets = w.levels[level]
    xs, ys = _core_pairs(space, K, margin)
    sup = 0.0
    for x, y in zip(xs, ys):
        a, b = sets[x], sets[y]
        inter = sum(min(m, b[p]) for p, m in a.items() if p in b)
        if inter == 0:
            return math.inf
        symdiff = (sum(abs(m - b.get(p, 0)) for p, m in a.items())
                   + sum(m for p, m in b.items() if p not in a))
        sup = max(sup, symdiff / inter)
    return sup


# ---------------------------------------------------------------------------
# witness sequences
# ---------------------------------------------------------------------------

@dataclass
class WitnessSequence:
    """Ordered kernel levels with their support radii and cached variation
    profiles, the raw material for the mixture construction."""

    space: object
    kernels: list
    radii: list
    margin: int = 0
    _variation: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.kernels) != len(self.radii):
            raise ValueError("one radius per kernel level required")

    def __len__(self):
        return len(self.kernels)

    @classmethod
    def from_ball_radii(cls, space, radii, margin=0):
        radii = list(radii)
        return cls(space=space,
                   kernels=[build_ball_witness(space, r) for r in radii],
                   radii=radii, margin=margin)

    def variation(self, level, K, workers=1):
        key = (level, K)
        if key not in self._variation:
            self._variation[key] = variation_profile(
                self.kernels[level], self.space, K, margin=self.margin,
                workers=workers)
        return self._variation[key]
