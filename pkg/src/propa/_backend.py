"""Flat-array numeric kernels behind Measure/Kernel arithmetic.

Two interchangeable implementations live here: a numba-compiled one and a
pure-numpy one.  Selection happens once at import time via the environment
variable ``PROPA_BACKEND``:

* ``auto`` (default) -- numba if importable, numpy otherwise
* ``numba``          -- require numba, fail loudly if missing
* ``numpy``          -- force the fallback path

Both paths accumulate every sum in ascending point-index order, so results
are deterministic and the two backends agree to the last few ulps.  All CSR
triples use int64 indices and float64 data, rows sorted by column.
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("PROPA_BACKEND", "auto").lower()
if _REQUESTED not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"PROPA_BACKEND must be auto|numba|numpy, got {_REQUESTED!r}")


# ---------------------------------------------------------------------------
# pure-numpy reference implementations
# ---------------------------------------------------------------------------

def _l1_sparse_np(ia, va, ib, vb):
    # merged two-pointer walk, ascending index
    total = 0.0
    i = j = 0
    na, nb = len(ia), len(ib)
    while i < na and j < nb:
        x, y = ia[i], ib[j]
        if x == y:
            total += abs(va[i] - vb[j])
            i += 1
            j += 1
        elif x < y:
            total += abs(va[i])
            i += 1
        else:
            total += abs(vb[j])
            j += 1
    while i < na:
        total += abs(va[i])
        i += 1
    while j < nb:
        total += abs(vb[j])
        j += 1
    return total


def _convolve_np(m_idx, m_val, indptr, indices, data, n):
    out = np.zeros(n, dtype=np.float64)
    for i in range(len(m_idx)):
        x = m_idx[i]
        s, e = indptr[x], indptr[x + 1]
        out[indices[s:e]] += m_val[i] * data[s:e]
    nz = np.nonzero(out)[0]
    return nz.astype(np.int64), out[nz]


def _compose_np(ip1, ix1, d1, ip2, ix2, d2, n):
    out_indptr = np.empty(n + 1, dtype=np.int64)
    out_indptr[0] = 0
    rows_idx = []
    rows_val = []
    work = np.zeros(n, dtype=np.float64)
    for x in range(n):
        s, e = ip1[x], ip1[x + 1]
        for k in range(s, e):
            z = ix1[k]
            zs, ze = ip2[z], ip2[z + 1]
            work[ix2[zs:ze]] += d1[k] * d2[zs:ze]
        nz = np.nonzero(work)[0]
        rows_idx.append(nz.astype(np.int64))
        rows_val.append(work[nz].copy())
        work[nz] = 0.0
        out_indptr[x + 1] = out_indptr[x] + len(nz)
    out_indices = np.concatenate(rows_idx) if rows_idx else np.empty(0, np.int64)
    out_data = np.concatenate(rows_val) if rows_val else np.empty(0, np.float64)
    return out_indptr, out_indices, out_data


def _pair_sup_np(xs, ys, indptr, indices, data):
    best = -1.0
    arg = -1
    for p in range(len(xs)):
        x, y = xs[p], ys[p]
        v = _l1_sparse_np(
            indices[indptr[x]:indptr[x + 1]], data[indptr[x]:indptr[x + 1]],
            indices[indptr[y]:indptr[y + 1]], data[indptr[y]:indptr[y + 1]],
        )
        if v > best:
            best = v
            arg = p
    return best, arg


# ---------------------------------------------------------------------------
# numba implementations (same summation order)
# ---------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True, nogil=True)
    def l1_sparse(ia, va, ib, vb):
        total = 0.0
        i = j = 0
        na, nb = len(ia), len(ib)
        while i < na and j < nb:
            x, y = ia[i], ib[j]
            if x == y:
                total += abs(va[i] - vb[j])
                i += 1
                j += 1
            elif x < y:
                total += abs(va[i])
                i += 1
            else:
                total += abs(vb[j])
                j += 1
        while i < na:
            total += abs(va[i])
            i += 1
        while j < nb:
            total += abs(vb[j])
            j += 1
        return total

    @njit(cache=True, nogil=True)
    def convolve(m_idx, m_val, indptr, indices, data, n):
        out = np.zeros(n, dtype=np.float64)
        for i in range(len(m_idx)):
            x = m_idx[i]
            w = m_val[i]
            for k in range(indptr[x], indptr[x + 1]):
                out[indices[k]] += w * data[k]
        count = 0
        for y in range(n):
            if out[y] != 0.0:
                count += 1
        r_idx = np.empty(count, dtype=np.int64)
        r_val = np.empty(count, dtype=np.float64)
        pos = 0
        for y in range(n):
            if out[y] != 0.0:
                r_idx[pos] = y
                r_val[pos] = out[y]
                pos += 1
        return r_idx, r_val

    @njit(cache=True, nogil=True)
    def compose(ip1, ix1, d1, ip2, ix2, d2, n):
        out_indptr = np.empty(n + 1, dtype=np.int64)
        out_indptr[0] = 0
        cap = max(16, len(d1) + len(d2))
        out_indices = np.empty(cap, dtype=np.int64)
        out_data = np.empty(cap, dtype=np.float64)
        work = np.zeros(n, dtype=np.float64)
        pos = 0
        for x in range(n):
            for k in range(ip1[x], ip1[x + 1]):
                z = ix1[k]
                w = d1[k]
                for t in range(ip2[z], ip2[z + 1]):
                    work[ix2[t]] += w * d2[t]
            count = 0
            for y in range(n):
                if work[y] != 0.0:
                    count += 1
            while pos + count > cap:
                cap *= 2
                new_idx = np.empty(cap, dtype=np.int64)
                new_dat = np.empty(cap, dtype=np.float64)
                new_idx[:pos] = out_indices[:pos]
                new_dat[:pos] = out_data[:pos]
                out_indices = new_idx
                out_data = new_dat
            for y in range(n):
                if work[y] != 0.0:
                    out_indices[pos] = y
                    out_data[pos] = work[y]
                    work[y] = 0.0
                    pos += 1
            out_indptr[x + 1] = pos
        return out_indptr, out_indices[:pos].copy(), out_data[:pos].copy()

    @njit(cache=True, nogil=True)
    def pair_sup(xs, ys, indptr, indices, data):
        best = -1.0
        arg = -1
        for p in range(len(xs)):
            x, y = xs[p], ys[p]
            v = l1_sparse(
                indices[indptr[x]:indptr[x + 1]], data[indptr[x]:indptr[x + 1]],
                indices[indptr[y]:indptr[y + 1]], data[indptr[y]:indptr[y + 1]],
            )
            if v > best:
                best = v
                arg = p
        return best, arg

    return l1_sparse, convolve, compose, pair_sup


if _REQUESTED == "numpy":
    BACKEND = "numpy"
else:
    try:
        l1_sparse, convolve, compose, pair_sup = _build_numba()
        BACKEND = "numba"
    except ImportError:
        if _REQUESTED == "numba":
            raise
        BACKEND = "numpy"

if BACKEND == "numpy":
    l1_sparse = _l1_sparse_np
    convolve = _convolve_np
    compose = _compose_np
    pair_sup = _pair_sup_np


def pair_sup_parallel(xs, ys, indptr, indices, data, workers=1):
    """Max of row-pair L1 distances; returns (value, index of attaining pair).

    Chunked across a thread pool when workers > 1.  The reduction is a max
    with smallest-index tie-break, so the result does not depend on the
    worker count.
    """
    m = len(xs)
    if m == 0:
        return 0.0, -1
    if workers <= 1 or m < 256:
        return pair_sup(xs, ys, indptr, indices, data)
    from concurrent.futures import ThreadPoolExecutor

    bounds = np.linspace(0, m, workers * 4 + 1, dtype=np.int64)
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(
            lambda ab: pair_sup(xs[ab[0]:ab[1]], ys[ab[0]:ab[1]], indptr, indices, data),
            chunks,
        ))
    best, arg = -1.0, -1
    for (a, _), (v, i) in zip(chunks, results):
        if v > best or (v == best and a + i < arg):
            best, arg = v, a + i
    return best, arg
