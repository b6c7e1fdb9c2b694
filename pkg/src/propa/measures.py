"""Sparse probability measures and row-stochastic transition kernels.

All arithmetic is exact sparse merging with a fixed summation order
(ascending point index), so repeated runs and both numeric backends give
reproducible values.  Nothing is pruned by default; ``Kernel.prune`` is the
single opt-in exception and reports the L1 perturbation it introduced.
"""

from __future__ import annotations

import json

import numpy as np

from . import _backend

ROW_SUM_TOL = 1e-9


def _same_space(a, b):
    if a.space is not b.space and a.space.point_count != b.space.point_count:
        raise ValueError("operands live on different spaces")


class Measure:
    """Sparse nonnegative vector on a space's points, summing to 1.

    ``idx`` is ascending, ``val`` nonnegative.  Construction renormalizes to
    machine precision unless ``renormalize=False`` (internal use, where the
    caller guarantees the mass is already 1 up to accumulated roundoff).
    """

    __slots__ = ("space", "idx", "val")

    def __init__(self, space, idx, val, renormalize=True):
        idx = np.asarray(idx, dtype=np.int64)
        val = np.asarray(val, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("idx and val must be matching 1-d arrays")
        if len(idx) == 0:
            raise ValueError("a probability measure cannot be empty")
        if np.any(np.diff(idx) <= 0):
            order = np.argsort(idx, kind="stable")
            idx, val = idx[order], val[order]
            if np.any(np.diff(idx) == 0):
                raise ValueError("duplicate support point")
        if idx[0] < 0 or idx[-1] >= space.point_count:
            raise ValueError("support point out of range")
        if np.any(val < 0):
            raise ValueError("negative mass")
        if renormalize:
            total = float(val.sum())
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise ValueError(f"mass {total} is not 1 within {ROW_SUM_TOL}")
            val = val / total
        self.space = space
        self.idx = idx
        self.val = val

    @classmethod
    def delta(cls, space, x):
        return cls(space, [x], [1.0], renormalize=False)

    @classmethod
    def uniform(cls, space, points):
        points = np.asarray(sorted(set(int(p) for p in points)), dtype=np.int64)
        return cls(space, points, np.full(len(points), 1.0 / len(points)), renormalize=False)

    @classmethod
    def from_dict(cls, space, entries):
        items = sorted((int(k), float(v)) for k, v in entries.items())
        return cls(space, [k for k, _ in items], [v for _, v in items])

    @property
    def support(self):
        return self.idx[self.val > 0]

    def total(self):
        return float(self.val.sum())

    def __getitem__(self, x):
        pos = np.searchsorted(self.idx, x)
        if pos < len(self.idx) and self.idx[pos] == x:
            return float(self.val[pos])
        return 0.0

    def dense(self):
        out = np.zeros(self.space.point_count)
        out[self.idx] = self.val
        return out


class Kernel:
    """Row-stochastic sparse matrix: row x is the measure phi(x, .).

    Stored CSR with rows sorted by column.  ``support_radius`` is the tight
    smallest R with every row supported in B(x, R); kernels whose rows are
    not meant to be uniformly ball-supported (the collapse kernel) carry
    ``unbounded=True`` and still report the finite radius attained on the
    truncation.
    """

    __slots__ = ("space", "indptr", "indices", "data", "unbounded", "_radius")

    def __init__(self, space, indptr, indices, data, unbounded=False, validate=True):
        self.space = space
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        self.unbounded = bool(unbounded)
        self._radius = None
        n = space.point_count
        if len(self.indptr) != n + 1:
            raise ValueError("indptr length must be point_count + 1")
        if validate:
            if np.any(self.data < 0):
                raise ValueError("negative transition probability")
            sums = np.add.reduceat(self.data, self.indptr[:-1])
            sums[np.diff(self.indptr) == 0] = 0.0
            bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
            if len(bad):
                raise ValueError(f"row {bad[0]} sums to {sums[bad[0]]}, not 1 within {ROW_SUM_TOL}")
            for x in range(n):
                s, e = self.indptr[x], self.indptr[x + 1]
                if np.any(np.diff(self.indices[s:e]) <= 0):
                    raise ValueError(f"row {x} columns not strictly ascending")

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, space):
        n = space.point_count
        return cls(space, np.arange(n + 1), np.arange(n), np.ones(n), validate=False)

    @classmethod
    def from_rows(cls, space, rows):
        n = space.point_count
        if len(rows) != n:
            raise ValueError("need one row per point")
        indptr = np.zeros(n + 1, dtype=np.int64)
        for x, row in enumerate(rows):
            _same_space(row, rows[0])
            indptr[x + 1] = indptr[x] + len(row.idx)
        indices = np.concatenate([row.idx for row in rows])
        data = np.concatenate([row.val for row in rows])
        return cls(space, indptr, indices, data)

    @classmethod
    def from_dense(cls, space, mat):
        mat = np.asarray(mat, dtype=np.float64)
        n = space.point_count
        if mat.shape != (n, n):
            raise ValueError("matrix shape does not match space")
        rows, cols = np.nonzero(mat)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(space, indptr, cols.astype(np.int64), mat[rows, cols])

    # -- queries ------------------------------------------------------------

    def row(self, x):
        s, e = self.indptr[x], self.indptr[x + 1]
        return Measure(self.space, self.indices[s:e], self.data[s:e], renormalize=False)

    @property
    def support_radius(self):
        if self._radius is None:
            worst = 0
            for x in range(self.space.point_count):
                s, e = self.indptr[x], self.indptr[x + 1]
                if e > s:
                    worst = max(worst, int(self.space.dist[x, self.indices[s:e]].max()))
            self._radius = worst
        return self._radius

    def to_dense(self):
        n = self.space.point_count
        out = np.zeros((n, n))
        for x in range(n):
            s, e = self.indptr[x], self.indptr[x + 1]
            out[x, self.indices[s:e]] = self.data[s:e]
        return out

    def row_sum_drift(self):
        """Max |row sum - 1| over rows."""
        sums = np.add.reduceat(self.data, self.indptr[:-1])
        sums[np.diff(self.indptr) == 0] = 0.0
        return float(np.abs(sums - 1.0).max())

    def prune(self, threshold=1e-15):
        """Drop entries below threshold, renormalize rows.

        Returns (pruned kernel, max per-row L1 perturbation bound).  Off by
        default everywhere; callers must thread the reported bound into any
        inequality they go on to assert.
        """
        n = self.space.point_count
        rows = []
        worst = 0.0
        for x in range(n):
            s, e = self.indptr[x], self.indptr[x + 1]
            keep = self.data[s:e] >= threshold
            dropped = float(self.data[s:e][~keep].sum())
            kept = self.data[s:e][keep]
            total = float(kept.sum())
            if total <= 0:
                raise ValueError(f"pruning removed all mass from row {x}")
            rows.append(Measure(self.space, self.indices[s:e][keep], kept / total,
                                renormalize=False))
            # dropped mass plus the L1 stretch of renormalizing the rest
            worst = max(worst, dropped + abs(1.0 - total))
        out = Kernel.from_rows(self.space, rows)
        out.unbounded = self.unbounded
        return out, worst

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        entries = []
        for x in range(self.space.point_count):
            s, e = self.indptr[x], self.indptr[x + 1]
            for k in range(s, e):
                entries.append([int(x), int(self.indices[k]), float(self.data[k])])
        return {"n": self.space.point_count, "entries": entries}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, space, obj):
        n = int(obj["n"])
        if n != space.point_count:
            raise ValueError("kernel size does not match space")
        entries = sorted((int(r), int(c), float(p)) for r, c, p in obj["entries"])
        indptr = np.zeros(n + 1, dtype=np.int64)
        for r, _, _ in entries:
            indptr[r + 1] += 1
        indptr = np.cumsum(indptr)
        indices = np.array([c for _, c, _ in entries], dtype=np.int64)
        data = np.array([p for _, _, p in entries], dtype=np.float64)
        return cls(space, indptr, indices, data)

    @classmethod
    def load(cls, space, path):
        with open(path) as fh:
            return cls.from_dict(space, json.load(fh))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def l1_distance(a, b):
    """Exact merged-sparse sum of |a(x) - b(x)|; lands in [0, 2]."""
    _same_space(a, b)
    return float(_backend.l1_sparse(a.idx, a.val, b.idx, b.val))


def convolve(m, k):
    """One step of m through k: (m * k)(y) = sum_x m(x) k(x, y)."""
    if m.space is not k.space and m.space.point_count != k.space.point_count:
        raise ValueError("measure and kernel live on different spaces")
    idx, val = _backend.convolve(m.idx, m.val, k.indptr, k.indices, k.data,
                                 k.space.point_count)
    return Measure(m.space, idx, val, renormalize=False)


def compose(k1, k2):
    """Kernel convolution: row x of the result is convolve(k1 row x, k2)."""
    _same_space(k1, k2)
    indptr, indices, data = _backend.compose(
        k1.indptr, k1.indices, k1.data, k2.indptr, k2.indices, k2.data,
        k1.space.point_count)
    out = Kernel(k1.space, indptr, indices, data, validate=False)
    out.unbounded = k1.unbounded or k2.unbounded
    return out


def power(k, n):
    """n-fold composition, left-folded so that row x of the result equals
    the n-fold convolve of delta_x through k in the same summation order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = k
    for _ in range(n - 1):
        out = compose(out, k)
    return out


def tail_mass(k, x, radius):
    """Mass of row x strictly outside the closed ball B(x, radius)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    s, e = k.indptr[x], k.indptr[x + 1]
    cols = k.indices[s:e]
    outside = k.space.dist[x, cols] > radius
    return float(k.data[s:e][outside].sum())


def mix_kernels(weights, kernels):
    """Convex combination sum_i w_i k_i, accumulated per row in list order."""
    if len(weights) != len(kernels) or not kernels:
        raise ValueError("need matching nonempty weight and kernel lists")
    space = kernels[0].space
    for k in kernels[1:]:
        _same_space(k, kernels[0])
    n = space.point_count
    rows = []
    work = np.zeros(n)
    for x in range(n):
        for w, k in zip(weights, kernels):
            s, e = k.indptr[x], k.indptr[x + 1]
            work[k.indices[s:e]] += w * k.data[s:e]
        nz = np.nonzero(work)[0]
        rows.append(Measure(space, nz, work[nz].copy(), renormalize=False))
        work[nz] = 0.0
    out = Kernel.from_rows(space, rows)
    out.unbounded = any(k.unbounded for k in kernels)
    return out
