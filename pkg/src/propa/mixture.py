"""Assemble a single kernel P = sum_i t_i phi_i from a witness sequence and
verify its quantitative properties.

The recipe picks, in this order: step counts n_i from the weights and
tolerances alone (smallest n with (t_1+...+t_{i-1})^n < eps_i, evaluated in
exact rational arithmetic), then a witness level per i whose variation over
the window d(x,y) < n_i * R_{i-1} + 1 is below eps_i and whose support
radius strictly exceeds max(R_{i-1}, i).  The infinite tail of weights is
folded into the last component, which keeps every selection inequality for
i <= I intact while only shrinking supports.

At desk scale the strict selection window grows so fast that a finite level
list often cannot serve the last component; the ``best`` policy then takes
the sharpest available level (smallest variation at the window, largest
radius on ties), records that the choice was not strict, and leaves the
final bounds to empirical verification.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .measures import mix_kernels, power, tail_mass
from ._backend import pair_sup_parallel
from .witness import _core_pairs

# window convention for the first component: R_0 plays the role of the unit
# distance, so level 1 is tested on pairs with d(x,y) <= n_1 * R_0.
R0 = 1


class SelectionExhausted(RuntimeError):
    """No witness level qualifies for some component."""

    def __init__(self, i, window, eps):
        self.i, self.window, self.eps = i, window, eps
        super().__init__(
            f"no witness level for component {i}: need variation < {eps} "
            f"over pairs with d(x,y) < {window}")


class BoundViolation(RuntimeError):
    """A verified inequality failed; indicates a bug or a contaminated core."""


@dataclass
class MixtureRecipe:
    weights: list          # folded, sums to 1
    eps: list
    step_counts: list
    chosen_levels: list
    radii: list            # chosen support radii R_i, strictly increasing
    predicted_bounds: list  # per i >= 2: (distance window R_{i-1}, L1 bound 4 eps_i)
    strict: list = field(default_factory=list)  # per i: selection met the full window
    margin: int = 0

    @property
    def I(self):
        return len(self.weights)

    def validate(self):
        I = self.I
        if not (I == len(self.eps) == len(self.step_counts)
                == len(self.chosen_levels) == len(self.radii)):
            raise ValueError("recipe fields have inconsistent lengths")
        if abs(sum(Fraction(t) for t in self.weights) - 1) != 0:
            raise ValueError("folded weights must sum to 1 exactly")
        if any(e <= 0 for e in self.eps):
            raise ValueError("tolerances must be positive")
        for i in range(1, I):
            partial = sum(Fraction(t) for t in self.weights[:i])
            if not partial ** self.step_counts[i] < Fraction(self.eps[i]):
                raise ValueError(f"step count n_{i + 1} violates its defining inequality")
        for i, r in enumerate(self.radii):
            prev = self.radii[i - 1] if i else 0
            if not r > max(prev, i + 1):
                raise ValueError("chosen radii must be strictly increasing and exceed the index")
        for a, b in zip(self.step_counts, self.step_counts[1:]):
            if b <= a:
                raise ValueError("step counts must be strictly increasing")

    def to_dict(self):
        return {
            "t": [float(t) for t in self.weights],
            "eps": [float(e) for e in self.eps],
            "n": [int(n) for n in self.step_counts],
            "levels": [int(v) for v in self.chosen_levels],
            "R": [int(r) for r in self.radii],
            "predicted_bounds": [[int(w), float(b)] for w, b in self.predicted_bounds],
            "strict": [bool(s) for s in self.strict],
            "margin": int(self.margin),
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(weights=list(obj["t"]), eps=list(obj["eps"]),
                   step_counts=list(obj["n"]), chosen_levels=list(obj["levels"]),
                   radii=list(obj["R"]),
                   predicted_bounds=[(int(w), float(b)) for w, b in obj["predicted_bounds"]],
                   strict=list(obj.get("strict", [])), margin=int(obj.get("margin", 0)))


@dataclass
class MixtureKernel:
    kernel: object
    recipe: MixtureRecipe
    components: list


def dyadic(I):
    """Truncated weights 2^-1 .. 2^-I, before tail folding."""
    return [2.0 ** -(i + 1) for i in range(I)]


def fold_tail(t):
    """Add the residual 1 - sum(t) of the infinite sequence to the last term."""
    t = list(t)
    residual = 1 - sum(Fraction(x) for x in t)
    if residual < 0:
        raise ValueError("weights exceed total mass 1")
    t[-1] = float(Fraction(t[-1]) + residual)
    return t


def select_step_count(t, eps_i, i, n_prev=0):
    """Smallest n with (t_1 + ... + t_{i-1})^n < eps_i, forced above n_prev.

    Index i is 1-based; for i = 1 the empty partial sum makes n = 1 work
    (0^n = 0).  Exact rational arithmetic, zero slack on the strict
    inequality.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    partial = sum(Fraction(x) for x in t[:i - 1])
    if partial >= 1:
        raise ValueError("partial weight sums must stay below 1")
    target = Fraction(eps_i)
    n = 1
    value = partial
    while not value < target:
        n += 1
        value *= partial
    return max(n, n_prev + 1)


def select_subsequence(witnesses, step_counts, eps, policy="strict", workers=1):
    """Choose a witness level per component.

    Returns (levels, radii, strict_flags).  Under ``policy="strict"`` a
    component with no qualifying level raises SelectionExhausted; under
    ``policy="best"`` it falls back to the level with the smallest variation
    at the window (largest radius on ties) among those with an admissible
    support radius, and flags the component as non-strict.
    """
    if policy not in ("strict", "best"):
        raise ValueError("policy must be 'strict' or 'best'")
    levels, radii, flags = [], [], []
    r_prev = R0
    for i, (n_i, eps_i) in enumerate(zip(step_counts, eps), start=1):
        window = n_i * r_prev + 1
        chosen = None
        fallback = None
        fallback_var = None
        fallback_radius = -1
        for j in range(len(witnesses)):
            r_j = witnesses.kernels[j].support_radius
            if not r_j > max(r_prev if i > 1 else 0, i):
                continue
            var = witnesses.variation(j, window, workers=workers)
            if var < eps_i:
                chosen = j
                break
            # fallback candidate: smallest variation, largest radius on
            # near-ties (roundoff-tolerant so ulp noise cannot flip the pick)
            if (fallback_var is None or var < fallback_var - 1e-9
                    or (var <= fallback_var + 1e-9 and r_j > fallback_radius)):
                fallback, fallback_var, fallback_radius = j, var, r_j
        if chosen is not None:
            levels.append(chosen)
            radii.append(witnesses.kernels[chosen].support_radius)
            flags.append(True)
        elif policy == "best" and fallback is not None:
            warnings.warn(
                f"component {i}: no level meets variation < {eps_i} over the "
                f"window d < {window}; taking best available "
                f"(variation {fallback_var:.6g})", stacklevel=2)
            levels.append(fallback)
            radii.append(witnesses.kernels[fallback].support_radius)
            flags.append(False)
        else:
            raise SelectionExhausted(i, window, eps_i)
        r_prev = radii[-1]
    return levels, radii, flags


def assemble(witnesses, t, eps, I, policy="strict", workers=1):
    """Build P = sum_{i<=I} t_i phi_i with the tail weight folded into t_I."""
    if I < 1:
        raise ValueError("I must be >= 1")
    t = list(t)[:I]
    eps = list(eps)[:I]
    if len(t) < I or len(eps) < I:
        raise ValueError("need at least I weights and tolerances")
    steps = []
    for i in range(1, I + 1):
        steps.append(select_step_count(t, eps[i - 1], i,
                                       n_prev=steps[-1] if steps else 0))
    levels, radii, flags = select_subsequence(witnesses, steps, eps,
                                              policy=policy, workers=workers)
    folded = fold_tail(t)
    components = [witnesses.kernels[j] for j in levels]
    kernel = mix_kernels(folded, components)
    recipe = MixtureRecipe(
        weights=folded, eps=eps, step_counts=steps, chosen_levels=levels,
        radii=radii,
        predicted_bounds=[(radii[i - 1], 4.0 * eps[i]) for i in range(1, I)],
        strict=flags, margin=witnesses.margin)
    recipe.validate()
    if I >= 2 and steps[-1] * radii[-2] > witnesses.margin:
        warnings.warn(
            f"verification window n_I * R_(I-1) = {steps[-1] * radii[-2]} exceeds "
            f"the core margin {witnesses.margin}; multi-step rows touch the "
            "truncation boundary", stacklevel=2)
    return MixtureKernel(kernel=kernel, recipe=recipe, components=components)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _tail_index(weights, delta):
    """Smallest 1-based i0 with sum_{i >= i0} t_i < delta (exact)."""
    tail = sum(Fraction(t) for t in weights)
    target = Fraction(delta)
    i0 = 1
    for t in weights:
        if tail < target:
            break
        tail -= Fraction(t)
        i0 += 1
    return i0


def verify_tail(mk, delta, workers=1):
    """Single-step tail radius: returns (R_delta, worst core tail mass).

    R_delta is the chosen radius R_{i0} for the smallest i0 whose residual
    weight drops below delta (the largest radius when even the last residual
    does not); the construction guarantees worst_tail < delta, so a
    violation is raised as a bug, not returned.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    recipe = mk.recipe
    i0 = _tail_index(recipe.weights, delta)
    R_delta = recipe.radii[min(i0, recipe.I) - 1]
    core = mk.kernel.space.core(recipe.margin)
    if len(core) == 0:
        raise ValueError("core region is empty")
    worst = max(tail_mass(mk.kernel, int(x), R_delta) for x in core)
    if not worst < delta:
        raise BoundViolation(
            f"tail mass {worst} at radius {R_delta} not below delta={delta}")
    return R_delta, worst


def verify_nstep_tail(mk, n, delta, workers=1):
    """n-step tail radius R = n * R_{delta/n}: returns (R, worst tail of P^n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if n == 1:
        return verify_tail(mk, delta, workers=workers)
    R_single, _ = verify_tail(mk, delta / n, workers=workers)
    R = n * R_single
    Pn = power(mk.kernel, n)
    core = mk.kernel.space.core(mk.recipe.margin)
    worst = max(tail_mass(Pn, int(x), R) for x in core)
    if not worst <= delta:
        raise BoundViolation(
            f"{n}-step tail mass {worst} at radius {R} exceeds delta={delta}")
    return R, worst


def verify_uniform_bound(mk, i, workers=1, slack=1e-9):
    """Check sup over core pairs d(x,y) < R_{i-1} of the n_i-step row L1
    distance against 4 eps_i.  Returns (observed, bound).  1-based i >= 2."""
    recipe = mk.recipe
    if not 2 <= i <= recipe.I:
        raise ValueError("i must be between 2 and I")
    window = recipe.radii[i - 2]
    n_i = recipe.step_counts[i - 1]
    bound = 4.0 * recipe.eps[i - 1]
    space = mk.kernel.space
    xs, ys = _core_pairs(space, window, recipe.margin)
    if len(xs) == 0:
        raise ValueError(
            f"no core pairs at distance < {window}; space or margin too small")
    Pn = power(mk.kernel, n_i)
    observed, arg = pair_sup_parallel(xs, ys, Pn.indptr, Pn.indices, Pn.data,
                                      workers=workers)
    if not observed <= bound + slack:
        raise BoundViolation(
            f"pair ({xs[arg]}, {ys[arg]}) at distance "
            f"{space.d(xs[arg], ys[arg])}: ||P^{n_i} rows||_1 = {observed} "
            f"> {bound}")
    return float(observed), bound
