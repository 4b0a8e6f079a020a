"""Mixed saddle-point solves: consistency, uniqueness, norm-scaling invariance."""

import numpy as np
import pytest

from nlpg.assembly import build_mixed_system
from nlpg.driver import solve_problem
from nlpg.kernels import constant_kernel_pair
from nlpg.mesh import initial_mesh, refine_uniform
from nlpg.problems import make_problem
from nlpg.solver import IndefiniteGramError, expand_solution, solve_mixed
from nlpg.space import Space


@pytest.mark.parametrize("delta", [0.1, 1e-4])
@pytest.mark.parametrize("norm", ["app", "eng"])
def test_linear_solution_reproduced(delta, norm):
    mesh = refine_uniform(initial_mesh(delta))
    problem = make_problem("linear", 0.01, delta)
    res = solve_problem(mesh, problem, eps=0.01, p=1, dp=2, norms=(norm,))[norm]
    expected = res.trial.interpolate(lambda x: x)[res.trial.free_dofs]
    assert np.abs(res.solution.u - expected).max() <= 1e-10
    assert np.linalg.norm(res.solution.psi) <= 1e-10 * (1 + np.linalg.norm(res.system.F))
    assert res.solution.residual_orthogonality <= 1e-10


def test_quintic_solution_reproduced_at_p5():
    mesh = initial_mesh(0.1)
    problem = make_problem("smooth-nonlocal", 0.01, 0.1)
    res = solve_problem(mesh, problem, eps=0.01, p=5, dp=2)["app"]
    expected = res.trial.interpolate(problem.u_exact)
    full = expand_solution(res.system, res.solution)
    assert np.abs(full - expected).max() <= 1e-8
    assert res.err_energy <= 1e-8


def test_zero_data_gives_zero_solution():
    mesh = initial_mesh(0.1)
    trial, test = Space(mesh, 1), Space(mesh, 3)
    kernel = constant_kernel_pair(0.1)
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    system = build_mixed_system(trial, test, kernel, 0.01, "app", zero, zero)
    sol = solve_mixed(system)
    np.testing.assert_allclose(sol.u, 0.0, atol=1e-14)
    np.testing.assert_allclose(sol.psi, 0.0, atol=1e-14)


def test_solution_invariant_under_gram_scaling():
    mesh = initial_mesh(0.1)
    problem = make_problem("smooth-nonlocal", 0.01, 0.1)
    trial, test = Space(mesh, 1), Space(mesh, 3)
    kernel = constant_kernel_pair(0.1)
    system = build_mixed_system(trial, test, kernel, 0.01, "app",
                                problem.forcing, problem.boundary)
    base = solve_mixed(system)
    system.G = 7.0 * system.G
    scaled = solve_mixed(system)
    np.testing.assert_allclose(scaled.u, base.u, rtol=0, atol=1e-12)
    np.testing.assert_allclose(7.0 * scaled.psi, base.psi, rtol=0,
                               atol=1e-12 * max(1.0, np.abs(base.psi).max()))


def test_enrichment_monotonicity():
    # app-norm error may not grow by more than 5% when dp goes from 2 to 3
    mesh = initial_mesh(0.1)
    problem = make_problem("smooth-nonlocal", 0.01, 0.1)
    e2 = solve_problem(mesh, problem, eps=0.01, p=1, dp=2)["app"].err_energy
    e3 = solve_problem(mesh, problem, eps=0.01, p=1, dp=3)["app"].err_energy
    assert e3 <= 1.05 * e2


def test_indefinite_gram_reported():
    mesh = initial_mesh(0.1)
    problem = make_problem("linear", 0.01, 0.1)
    trial, test = Space(mesh, 1), Space(mesh, 3)
    kernel = constant_kernel_pair(0.1)
    system = build_mixed_system(trial, test, kernel, 0.01, "app",
                                problem.forcing, problem.boundary)
    system.G = -system.G
    with pytest.raises(IndefiniteGramError):
        solve_mixed(system)


def test_residual_diagnostics_small():
    mesh = refine_uniform(initial_mesh(0.1))
    problem = make_problem("smooth-nonlocal", 0.01, 0.1)
    res = solve_problem(mesh, problem, eps=0.01, p=1, dp=2)["app"]
    assert res.solution.residual_primal <= 1e-10
    assert res.solution.residual_orthogonality <= 1e-10
    assert res.solution.schur_cond_estimate >= 1.0
