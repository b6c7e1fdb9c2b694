"""Seeded randomized inequality checks shared by the runner and the tests.

Each check returns a list of (observed, bound) pairs; the caller asserts
observed <= bound + slack.  Randomness always flows from an explicit
numpy Generator so runs are reproducible byte for byte.
"""

from __future__ import annotations

import numpy as np

from .measures import Kernel, Measure, convolve, l1_distance
from .witness import build_ball_witness, truncate_renormalize, variation_profile


def random_measure(space, rng, max_support=6):
    n = space.point_count
    size = int(rng.integers(1, min(max_support, n) + 1))
    idx = np.sort(rng.choice(n, size=size, replace=False))
    val = rng.random(size) + 1e-3
    return Measure(space, idx, val / val.sum())


def random_kernel(space, rng, max_row_support=4):
    rows = [random_measure(space, rng, max_row_support)
            for _ in range(space.point_count)]
    return Kernel.from_rows(space, rows)


def check_nonexpansion(space, rng, trials):
    """||mu*phi - nu*phi||_1 <= ||mu - nu||_1 on random triples."""
    out = []
    for _ in range(trials):
        mu = random_measure(space, rng)
        nu = random_measure(space, rng)
        phi = random_kernel(space, rng)
        out.append((l1_distance(convolve(mu, phi), convolve(nu, phi)),
                    l1_distance(mu, nu)))
    return out


def check_local_uniformity(space, rng, trials):
    """When every row on Supp(mu) u Supp(nu) sits within eps of a reference
    row, ||mu*phi - nu*phi||_1 < 2 eps.  Rows are built as convex blends of
    the reference with L1 offset strictly below eps."""
    out = []
    n = space.point_count
    for _ in range(trials):
        eps = float(rng.uniform(0.05, 1.0))
        ref = random_measure(space, rng, max_support=5)
        rows = []
        for x in range(n):
            noise = random_measure(space, rng, max_support=5)
            gap = l1_distance(ref, noise)
            u = 0.0 if gap == 0 else float(rng.uniform(0, 0.95)) * eps / gap
            u = min(u, 1.0)
            dense = (1 - u) * ref.dense() + u * noise.dense()
            nz = np.nonzero(dense)[0]
            rows.append(Measure(space, nz, dense[nz], renormalize=False))
        phi = Kernel.from_rows(space, rows)
        mu = random_measure(space, rng)
        nu = random_measure(space, rng)
        out.append((l1_distance(convolve(mu, phi), convolve(nu, phi)), 2 * eps))
    return out


def tailed_ball_witness(space, radius, tail_fraction):
    """Ball witness whose rows leak exactly ``tail_fraction`` of their mass
    to the farthest point of the space (must lie outside each ball)."""
    base = build_ball_witness(space, radius)
    rows = []
    for x in range(space.point_count):
        far = int(np.argmax(space.dist[x]))
        if space.d(x, far) <= radius:
            raise ValueError("space too small for a tail outside the ball")
        s, e = base.indptr[x], base.indptr[x + 1]
        dense = np.zeros(space.point_count)
        dense[base.indices[s:e]] = (1.0 - tail_fraction) * base.data[s:e]
        dense[far] += tail_fraction
        nz = np.nonzero(dense)[0]
        rows.append(Measure(space, nz, dense[nz], renormalize=False))
    return Kernel.from_rows(space, rows)


def check_truncation_bounds(space, radius, ns, K=2, margin=0):
    """For rows keeping exactly 1 - 1/n of their mass in the ball:
    per-row L1 change of truncation <= 3/n, and pairwise variation
    inflation <= 6/n.  Returns (row_checks, pair_checks)."""
    row_checks, pair_checks = [], []
    for n in ns:
        phi = tailed_ball_witness(space, radius, 1.0 / n)
        phi_t = truncate_renormalize(phi, radius)
        worst_row = max(
            l1_distance(phi.row(x), phi_t.row(x))
            for x in range(space.point_count))
        row_checks.append((worst_row, 3.0 / n))
        before = variation_profile(phi, space, K, margin=margin)
        after = variation_profile(phi_t, space, K, margin=margin)
        pair_checks.append((after - before, 6.0 / n))
    return row_checks, pair_checks
