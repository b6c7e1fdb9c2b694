"""Config-driven experiment runner with machine-readable artifacts.

A run reads one JSON config, builds the space, witness levels, and mixture,
executes the requested diagnostics and inequality checks, and writes:

* ``recipe.json``   -- the mixture recipe actually used
* ``uniform.csv`` / ``cesaro.csv`` -- diagnostic series
* ``summary.json``  -- one entry per asserted inequality: name, lhs, rhs, pass

Outputs are byte-identical across reruns and worker counts: no wall clock,
no unseeded randomness, atomic writes, 17-significant-digit CSV floats.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import checks, diagnostics, mixture as mixture_mod
from .measures import convolve, l1_distance, power, tail_mass
from .space import MetricSpace, gen_free_group_ball, gen_grid, gen_path
from .witness import WitnessSequence


class ConfigError(ValueError):
    pass


SLACK_L1 = 1e-12
SLACK_MIX = 1e-9


@dataclass
class ExperimentConfig:
    space: dict
    margin: int = 0
    witness: dict = field(default_factory=dict)
    recipe: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    seed: int = 12345
    workers: int = 1
    prune: dict = None
    output_dir: str = "out"

    FIELDS = ("space", "margin", "witness", "recipe", "diagnostics",
              "checks", "seed", "workers", "prune", "output_dir")

    @classmethod
    def from_dict(cls, obj):
        unknown = set(obj) - set(cls.FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "space" not in obj:
            raise ConfigError("config needs a 'space' section")
        cfg = cls(**obj)
        if cfg.margin < 0:
            raise ConfigError("margin must be >= 0")
        if cfg.workers < 1:
            raise ConfigError("workers must be >= 1")
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(obj)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.FIELDS}

    def build_space(self):
        spec = dict(self.space)
        if "file" in spec:
            if not os.path.exists(spec["file"]):
                raise ConfigError(f"space file not found: {spec['file']}")
            return MetricSpace.load(spec["file"])
        kind = spec.pop("kind", None)
        try:
            if kind == "path":
                return gen_path(spec["length"])
            if kind == "grid":
                return gen_grid(spec["dim"], spec["side"])
            if kind == "tree":
                return gen_free_group_ball(spec["rank"], spec["radius"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad space spec: {exc}") from exc
        raise ConfigError(f"unknown space kind {kind!r}")


def fmt(x):
    """Fixed 17-significant-digit decimal, round-trip safe for doubles."""
    return format(float(x), ".17g")


def _atomic_write(path, text):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(c) if isinstance(c, float) else str(c)
                              for c in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _entry(name, lhs, rhs, slack):
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs),
            "pass": bool(lhs <= rhs + slack)}


def _worst(pairs):
    """The (lhs, rhs) pair with the largest margin violation."""
    return max(pairs, key=lambda p: p[0] - p[1])


def run(config):
    """Execute a config end to end.  Returns (exit_code, summary dict)."""
    os.makedirs(config.output_dir, exist_ok=True)
    out = lambda name: os.path.join(config.output_dir, name)
    rng = np.random.default_rng(config.seed)
    workers = config.workers
    summary = []

    space = config.build_space()

    # witness levels and mixture
    mk = None
    if config.witness or config.recipe:
        radii = config.witness.get("radii")
        if radii is None:
            raise ConfigError("witness section needs 'radii'")
        wit = WitnessSequence.from_ball_radii(space, radii, margin=config.margin)
        I = int(config.recipe.get("I", 3))
        t = config.recipe.get("t", "dyadic")
        eps = config.recipe.get("eps", "dyadic")
        t = mixture_mod.dyadic(I) if t == "dyadic" else list(t)
        eps = mixture_mod.dyadic(I) if eps == "dyadic" else list(eps)
        selection = config.recipe.get("selection", "best")
        mk = mixture_mod.assemble(wit, t, eps, I, policy=selection,
                                  workers=workers)
        if config.prune:
            pruned, perturbation = mk.kernel.prune(
                config.prune.get("threshold", 1e-15))
            mk = mixture_mod.MixtureKernel(kernel=pruned, recipe=mk.recipe,
                                           components=mk.components)
            summary.append(_entry("prune_perturbation", perturbation,
                                  config.prune.get("budget", 1e-12), 0.0))
        _atomic_write(out("recipe.json"),
                      json.dumps(mk.recipe.to_dict(), sort_keys=True, indent=2) + "\n")

        for i in range(2, mk.recipe.I + 1):
            observed, bound = mixture_mod.verify_uniform_bound(
                mk, i, workers=workers, slack=SLACK_MIX)
            summary.append(_entry(f"mixture_uniform_bound_i{i}",
                                  observed, bound, SLACK_MIX))
        for delta in config.diagnostics.get("tail_deltas", []):
            R_delta, worst = mixture_mod.verify_tail(mk, delta, workers=workers)
            summary.append(_entry(f"single_step_tail_delta{delta}",
                                  worst, delta, 0.0))
        for n, delta in config.diagnostics.get("nstep_tails", []):
            R, worst = mixture_mod.verify_nstep_tail(mk, n, delta,
                                                     workers=workers)
            summary.append(_entry(f"nstep_tail_n{n}_delta{delta}",
                                  worst, delta, 0.0))

    # uniform diagnostic series on the mixture kernel
    uni = config.diagnostics.get("uniform")
    if uni:
        if mk is None:
            raise ConfigError("uniform diagnostics need a mixture section")
        rep = diagnostics.uniform_profile(
            mk.kernel, space, uni["K"], uni["n_max"], margin=config.margin,
            workers=workers)
        write_csv(out("uniform.csv"), ("criterion", "n", "K_or_pair", "value"),
                  rep.csv_rows())
        worst_step = 0.0
        vals = [rep.series[n] for n in sorted(rep.series)]
        for a, b in zip(vals, vals[1:]):
            worst_step = max(worst_step, b - a)
        summary.append(_entry("uniform_series_nonincreasing", worst_step, 0.0,
                              SLACK_L1))

    ces = config.diagnostics.get("cesaro")
    if ces:
        if mk is None:
            raise ConfigError("cesaro diagnostics need a mixture section")
        rep = diagnostics.cesaro_profile(mk.kernel, ces["pairs"], ces["n_max"])
        write_csv(out("cesaro.csv"), ("criterion", "n", "K_or_pair", "value"),
                  rep.csv_rows())

    # randomized inequality checks
    n_ne = config.checks.get("nonexpansion_trials", 0)
    if n_ne:
        lhs, rhs = _worst(checks.check_nonexpansion(space, rng, n_ne))
        summary.append(_entry("convolution_nonexpansion", lhs, rhs, SLACK_L1))
    n_lu = config.checks.get("contraction_trials", 0)
    if n_lu:
        lhs, rhs = _worst(checks.check_local_uniformity(space, rng, n_lu))
        summary.append(_entry("convolution_local_uniformity", lhs, rhs, SLACK_L1))
    trunc = config.checks.get("truncation")
    if trunc:
        rows, pairs = checks.check_truncation_bounds(
            space, trunc.get("radius", 1), trunc.get("n", [2, 10, 50]),
            margin=config.margin)
        lhs, rhs = _worst(rows)
        summary.append(_entry("truncation_row_change", lhs, rhs, SLACK_L1))
        lhs, rhs = _worst(pairs)
        summary.append(_entry("truncation_pair_inflation", lhs, rhs, SLACK_L1))
    col = config.checks.get("collapse")
    if col:
        x0 = col.get("x0", 0)
        P = diagnostics.collapse_kernel(space, x0)
        worst = []
        for x, y in col.get("pairs", []):
            lhs, rhs = diagnostics.pairwise_l1_bound_check(
                P, x, y, col.get("n", 10), x0=x0)
            worst.append((lhs, rhs))
        if worst:
            lhs, rhs = _worst(worst)
            summary.append(_entry("collapse_pair_bound", lhs, rhs, SLACK_L1))
        # closed form vs actual powering on a sample of points
        n_steps = col.get("n", 10)
        errs = []
        Pn = power(P, n_steps)
        for x in range(0, space.point_count, max(1, space.point_count // 16)):
            oracle = diagnostics.collapse_power_oracle(space, x0, x, n_steps)
            errs.append(l1_distance(Pn.row(x), oracle))
        summary.append(_entry("collapse_power_oracle", max(errs), 0.0, SLACK_L1))

    summary_obj = {"inequalities": summary,
                   "all_pass": all(e["pass"] for e in summary)}
    _atomic_write(out("summary.json"),
                  json.dumps(summary_obj, sort_keys=True, indent=2) + "\n")
    return (0 if summary_obj["all_pass"] else 4), summary_obj
