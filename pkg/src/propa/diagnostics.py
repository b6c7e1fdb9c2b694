"""Computable boundary-triviality criteria and the collapse-kernel oracle.

``uniform_profile`` tracks the sup over metrically close core pairs of the
n-step row L1 distance; it vanishing for every window is the uniform
criterion the mixture construction targets, and the series is provably
nonincreasing in n.  ``cesaro_profile`` tracks the much weaker averaged
criterion on explicit pairs.  The collapse kernel drifts all mass to a
basepoint: its n-step rows have a two-point closed form, the averaged
criterion vanishes on every fixed pair, yet the uniform criterion stays
bounded away from zero -- the standing example separating the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import pair_sup_parallel
from .measures import Kernel, Measure, compose, convolve, l1_distance
from .witness import _core_pairs


@dataclass
class DiagnosticsReport:
    criterion: str               # "uniform" or "cesaro"
    series: dict                 # n -> value
    K: int = None                # uniform only
    pairs: list = None           # cesaro only; also carries argmax pairs for uniform
    sup_pairs: dict = field(default_factory=dict)  # n -> (x, y) attaining the sup
    monotone: bool = None
    final: float = None

    def csv_rows(self):
        rows = []
        for n in sorted(self.series):
            where = (self.K if self.criterion == "uniform"
                     else ";".join(f"{x}-{y}" for x, y in self.pairs))
            rows.append((self.criterion, n, where, self.series[n]))
        return rows


def uniform_profile(P, space, K, n_max, margin=0, workers=1, slack=1e-12):
    """Series n -> sup over core pairs d(x,y) < K of ||P^n(x,.) - P^n(y,.)||_1.

    Powers are built incrementally (two kernels live at a time).  Raises if
    the pair set is empty rather than reporting a vacuous zero.
    """
    if K < 1 or n_max < 1:
        raise ValueError("K and n_max must be >= 1")
    xs, ys = _core_pairs(space, K, margin)
    if len(xs) == 0:
        raise ValueError(f"no core pairs with d(x,y) < {K}")
    series, sup_pairs = {}, {}
    Q = P
    for n in range(1, n_max + 1):
        if n > 1:
            Q = compose(Q, P)
        v, arg = pair_sup_parallel(xs, ys, Q.indptr, Q.indices, Q.data,
                                   workers=workers)
        series[n] = float(v)
        sup_pairs[n] = (int(xs[arg]), int(ys[arg]))
    values = [series[n] for n in range(1, n_max + 1)]
    monotone = all(b <= a + slack for a, b in zip(values, values[1:]))
    return DiagnosticsReport(criterion="uniform", series=series, K=K,
                             sup_pairs=sup_pairs, monotone=monotone,
                             final=values[-1])


def cesaro_profile(P, pairs, n_max):
    """Series n -> max over the given pairs of
    (1/n) || sum_{i<=n} P^i(x,.) - sum_{i<=n} P^i(y,.) ||_1, with the
    partial sums maintained incrementally."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    pairs = [(int(x), int(y)) for x, y in pairs]
    space = P.space
    n_pts = space.point_count
    state = {}
    for x, y in pairs:
        for p in (x, y):
            if p not in state:
                state[p] = [Measure.delta(space, p), np.zeros(n_pts)]
    series, sup_pairs = {}, {}
    for n in range(1, n_max + 1):
        for p, st in state.items():
            st[0] = convolve(st[0], P)
            st[1][st[0].idx] += st[0].val
        best, argp = -1.0, pairs[0]
        for x, y in pairs:
            v = float(np.abs(state[x][1] - state[y][1]).sum()) / n
            if v > best:
                best, argp = v, (x, y)
        series[n] = best
        sup_pairs[n] = argp
    return DiagnosticsReport(criterion="cesaro", series=series, pairs=pairs,
                             sup_pairs=sup_pairs, final=series[n_max])


# ---------------------------------------------------------------------------
# collapse kernel and its closed-form oracle
# ---------------------------------------------------------------------------

def collapse_kernel(space, x0):
    """All mass drifts toward x0: the row at x keeps weight d/(1+d) in place
    and sends 1/(1+d) to x0, where d = d(x, x0); the row at x0 is delta_x0."""
    n = space.point_count
    if not 0 <= x0 < n:
        raise ValueError("x0 not in space")
    rows = []
    for x in range(n):
        if x == x0:
            rows.append(Measure.delta(space, x0))
        else:
            d = space.d(x, x0)
            pair = sorted([(x0, 1.0 / (1 + d)), (x, d / (1.0 + d))])
            rows.append(Measure(space, [p for p, _ in pair],
                                [v for _, v in pair], renormalize=False))
    k = Kernel.from_rows(space, rows)
    k.unbounded = True
    return k


def collapse_power_oracle(space, x0, x, n):
    """Closed form for the n-step row of the collapse kernel at x:
    (1 - a^n) delta_x0 + a^n delta_x with a = d(x,x0)/(1 + d(x,x0))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if x == x0:
        return Measure.delta(space, x0)
    d = space.d(x, x0)
    a = (d / (1.0 + d)) ** n
    pair = sorted([(x0, 1.0 - a), (x, a)])
    return Measure(space, [p for p, _ in pair], [v for _, v in pair],
                   renormalize=False)


def pairwise_l1_bound_check(P, x, y, n, x0=None, slack=1e-12):
    """Compare the computed n-step row distance of a collapse kernel against
    its closed-form bound 2 a_x^n + 2 a_y^n.  Returns (lhs, rhs)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    space = P.space
    if x0 is None:
        x0 = _find_basepoint(P)
    mx = Measure.delta(space, x)
    my = Measure.delta(space, y)
    for _ in range(n):
        mx = convolve(mx, P)
        my = convolve(my, P)
    lhs = l1_distance(mx, my)
    dx, dy = space.d(x, x0), space.d(y, x0)
    rhs = 2 * (dx / (1.0 + dx)) ** n + 2 * (dy / (1.0 + dy)) ** n
    if not lhs <= rhs + slack:
        raise AssertionError(f"L1 distance {lhs} exceeds bound {rhs}")
    return lhs, rhs


def _find_basepoint(P):
    # the absorbing point: the unique row equal to its own delta
    for x in range(P.space.point_count):
        s, e = P.indptr[x], P.indptr[x + 1]
        if e - s == 1 and P.indices[s] == x and P.data[s] == 1.0:
            return x
    raise ValueError("kernel has no absorbing basepoint; pass x0 explicitly")
