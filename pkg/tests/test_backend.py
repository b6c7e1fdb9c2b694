"""The compiled backend and the pure-numpy fallback must agree, and the
threaded pair sup must not depend on the worker count."""

import numpy as np
import pytest

from propa import _backend, gen_path
from propa._backend import (_compose_np, _convolve_np, _l1_sparse_np,
                            _pair_sup_np, pair_sup_parallel)
from propa.checks import random_kernel, random_measure


@pytest.fixture(scope="module")
def space():
    return gen_path(30)


def test_active_backend_reported():
    assert _backend.BACKEND in ("numba", "numpy")


def test_l1_agrees(space, rng):
    for _ in range(50):
        a = random_measure(space, rng)
        b = random_measure(space, rng)
        fast = _backend.l1_sparse(a.idx, a.val, b.idx, b.val)
        ref = _l1_sparse_np(a.idx, a.val, b.idx, b.val)
        assert fast == pytest.approx(ref, abs=1e-15)


def test_convolve_agrees(space, rng):
    n = space.point_count
    for _ in range(20):
        m = random_measure(space, rng)
        k = random_kernel(space, rng)
        fi, fv = _backend.convolve(m.idx, m.val, k.indptr, k.indices, k.data, n)
        ri, rv = _convolve_np(m.idx, m.val, k.indptr, k.indices, k.data, n)
        assert np.array_equal(fi, ri)
        assert np.array_equal(fv, rv)  # identical summation order, bit-equal


def test_compose_agrees(space, rng):
    n = space.point_count
    for _ in range(5):
        k1 = random_kernel(space, rng)
        k2 = random_kernel(space, rng)
        f = _backend.compose(k1.indptr, k1.indices, k1.data,
                             k2.indptr, k2.indices, k2.data, n)
        r = _compose_np(k1.indptr, k1.indices, k1.data,
                        k2.indptr, k2.indices, k2.data, n)
        for a, b in zip(f, r):
            assert np.array_equal(a, b)


def test_pair_sup_agrees_and_worker_invariant(space, rng):
    k = random_kernel(space, rng)
    xs, ys = np.meshgrid(np.arange(30), np.arange(30))
    mask = xs < ys
    xs, ys = xs[mask].astype(np.int64), ys[mask].astype(np.int64)
    ref = _pair_sup_np(xs, ys, k.indptr, k.indices, k.data)
    for workers in (1, 2, 8):
        got = pair_sup_parallel(xs, ys, k.indptr, k.indices, k.data,
                                workers=workers)
        assert got[1] == ref[1]
        assert got[0] == pytest.approx(ref[0], abs=1e-15)
