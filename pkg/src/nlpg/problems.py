"""Benchmark problem definitions (manufactured solution + matching forcing)."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels

PROBLEM_NAMES = ("smooth-nonlocal", "smooth-local-forcing", "sharp", "linear")


@dataclass(frozen=True)
class Problem:
    """Exact solution and forcing for one (eps, delta) instance.

    Boundary data on the interaction domain is the exact solution itself.
    """

    name: str
    u_exact: Callable
    forcing: Callable

    @property
    def boundary(self):
        return self.u_exact


def make_problem(name, eps, delta):
    if name == "smooth-nonlocal":
        return Problem(name, kernels.exact_smooth,
                       lambda x: kernels.forcing_smooth_nonlocal(x, eps, delta))
    if name == "smooth-local-forcing":
        return Problem(name, kernels.exact_smooth,
                       lambda x: kernels.forcing_smooth_local(x, eps))
    if name == "sharp":
        return Problem(name, lambda x: kernels.exact_sharp(x, eps),
                       lambda x: kernels.forcing_sharp(x, eps, delta))
    if name == "linear":
        return Problem(name, lambda x: np.asarray(x, dtype=float),
                       lambda x: np.ones_like(np.asarray(x, dtype=float)))
    raise ValueError(f"unknown problem {name!r}, expected one of {PROBLEM_NAMES}")
