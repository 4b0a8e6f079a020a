"""Petrov-Galerkin solver for 1-D nonlocal convection-dominated diffusion.

Mixed formulation with an enriched test space; the test-space norm is either
the nonlocal energy norm ('eng') or the computable approximation of the
optimal test norm ('app').  All operators are pure functions of immutable
inputs, so concurrent read-only use is safe.
"""

from .adapt import IndicatorSet, adaptive_loop, dorfler_mark, localize_indicator
from .analysis import (ExperimentRecord, compute_discrete_optimal_norm,
                       energy_seminorm, error_energy, error_l2, loglog_slope,
                       rate, rate_dof)
from .assembly import (MixedSystem, assemble_convection, assemble_diffusion,
                       assemble_gram, assemble_load, assemble_mass_mean,
                       assemble_nonlocal_forms, build_mixed_system)
from .driver import solve_problem
from .kernels import (KernelPair, constant_kernel_pair, exact_sharp,
                      exact_smooth, forcing_sharp, forcing_smooth_local,
                      forcing_smooth_nonlocal)
from .mesh import (Mesh1d, horizon_neighbors, initial_mesh, refine_marked,
                   refine_uniform, uniform_mesh, write_nodes_csv)
from .problems import Problem, make_problem
from .quadrature import QuadRule, gauss_legendre, intersect, nested_integrate
from .solver import (IndefiniteGramError, InfSupError, MixedSolution,
                     expand_solution, solve_mixed)
from .space import Space, boundary_lift, build_space, evaluate, interpolate
from .experiments import (RunConfig, overshoot_metric, records_to_csv, run,
                          run_sharp_demo, run_table1, run_table3, run_table7,
                          uniform_h_study, uniform_p_study)

__version__ = "0.1.0"
