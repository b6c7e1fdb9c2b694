"""Finite-scale ball witnesses, kernel mixtures, and L1 mixing
diagnostics on discrete metric spaces."""

from ._backend import BACKEND
from .space import (GeometryProfile, MetricSpace, gen_free_group_ball,
                    gen_grid, gen_path, geometry_profile)
from .measures import (Kernel, Measure, compose, convolve, l1_distance,
                       mix_kernels, power, tail_mass)
from .witness import (SetWitness, WitnessSequence, build_ball_witness,
                      set_ratio_profile, set_witness_to_kernel,
                      truncate_renormalize, variation_profile)
from .mixture import (BoundViolation, MixtureKernel, MixtureRecipe,
                      SelectionExhausted, assemble, dyadic, select_step_count,
                      select_subsequence, verify_nstep_tail, verify_tail,
                      verify_uniform_bound)
from .diagnostics import (DiagnosticsReport, cesaro_profile, collapse_kernel,
                          collapse_power_oracle, pairwise_l1_bound_check,
                          uniform_profile)
from .config import ExperimentConfig, run

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
