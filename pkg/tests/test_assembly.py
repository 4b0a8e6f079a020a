"""Discrete operator matrices: annihilation, symmetry, SPD, load consistency."""

import numpy as np
import pytest
from scipy.integrate import quad

from nlpg.assembly import (assemble_convection, assemble_diffusion,
                           assemble_gram, assemble_load, assemble_mass_mean,
                           assemble_nonlocal_forms, build_mixed_system)
from nlpg.kernels import constant_kernel_pair, forcing_smooth_nonlocal
from nlpg.mesh import initial_mesh, refine_uniform
from nlpg.space import Space, boundary_lift


@pytest.fixture(scope="module", params=[0.1, 1e-4])
def setup(request):
    delta = request.param
    mesh = refine_uniform(initial_mesh(delta))
    trial = Space(mesh, 1)
    test = Space(mesh, 3)
    kernel = constant_kernel_pair(delta)
    (A, C), (Avv, Cvv) = assemble_nonlocal_forms(
        test, [(trial, True, True), (test, True, True)], kernel)
    return mesh, trial, test, kernel, A, C, Avv, Cvv


def test_diffusion_annihilates_constants(setup):
    _, trial, _, _, A, _, _, _ = setup
    resid = A @ np.ones(trial.n_dofs)
    assert np.abs(resid).max() <= 1e-12 * np.abs(A).max()


def test_diffusion_annihilates_linears(setup):
    _, trial, _, _, A, _, _, _ = setup
    resid = A @ trial.interpolate(lambda x: x)
    assert np.abs(resid).max() <= 1e-12 * np.abs(A).max()


def test_diffusion_free_block_symmetric_positive(setup):
    _, _, test, _, _, _, Avv, _ = setup
    ff = Avv[:, test.free_dofs]
    assert np.abs(ff - ff.T).max() <= 1e-10 * np.abs(ff).max()
    assert np.linalg.eigvalsh(0.5 * (ff + ff.T)).min() > 0.0


def test_convection_annihilates_constants(setup):
    _, trial, _, _, _, C, _, _ = setup
    resid = C @ np.ones(trial.n_dofs)
    assert np.abs(resid).max() <= 1e-12 * np.abs(C).max()


def test_convection_of_identity_is_mass_vector(setup):
    _, trial, test, _, _, C, _, _ = setup
    _, m = assemble_mass_mean(test)
    np.testing.assert_allclose(C @ trial.interpolate(lambda x: x), m,
                               rtol=0, atol=1e-12 * np.abs(m).max())


def test_convection_free_block_antisymmetric(setup):
    _, _, test, _, _, _, _, Cvv = setup
    ff = Cvv[:, test.free_dofs]
    defect = np.abs(ff + ff.T).max() / np.abs(ff).max()
    print(f"antisymmetry defect (delta={test.mesh.delta:g}): {defect:.3e}")
    assert defect <= 1e-10


def test_bilinear_form_definite_on_random_vectors(setup):
    _, _, test, _, _, _, Avv, Cvv = setup
    eps = 0.01
    Aff = Avv[:, test.free_dofs]
    Cff = Cvv[:, test.free_dofs]
    rng = np.random.default_rng(42)
    for _ in range(100):
        v = rng.standard_normal(test.n_free)
        quad_form = v @ (eps * Aff + Cff) @ v
        energy = eps * (v @ Aff @ v)
        assert quad_form > 0.0
        assert quad_form == pytest.approx(energy, rel=1e-10)


def test_gram_app_eps_zero_is_spd(setup):
    _, _, test, kernel, _, _, Avv, _ = setup
    G = assemble_gram(test, kernel, 0.0, "app", diffusion_vv=Avv[:, test.free_dofs])
    assert np.linalg.eigvalsh(G).min() > 0.0


def test_gram_eng_equals_diffusion_block(setup):
    _, _, test, kernel, _, _, Avv, _ = setup
    ff = Avv[:, test.free_dofs]
    G = assemble_gram(test, kernel, 0.01, "eng", diffusion_vv=ff)
    np.testing.assert_allclose(G, 0.5 * (ff + ff.T))


def test_gram_rejects_unknown_norm(setup):
    _, _, test, kernel, _, _, Avv, _ = setup
    with pytest.raises(ValueError):
        assemble_gram(test, kernel, 0.01, "opt", diffusion_vv=Avv[:, test.free_dofs])


def test_mismatched_meshes_rejected():
    m1, m2 = initial_mesh(0.1), refine_uniform(initial_mesh(0.1))
    with pytest.raises(ValueError):
        assemble_diffusion(Space(m1, 1), Space(m2, 3), constant_kernel_pair(0.1))


def test_app_gram_hat_against_dense_integration():
    # eps^2 a(phi,phi) + ||phi||^2 - (int phi)^2 for one hat function, with the
    # double integral evaluated by adaptive quadrature
    delta, eps = 0.1, 0.01
    mesh = initial_mesh(delta)
    test = Space(mesh, 1)
    kernel = constant_kernel_pair(delta)
    G = assemble_gram(test, kernel, eps, "app")
    idx = 1   # hat at x = 0.4
    e = np.zeros(test.n_free)
    e[idx] = 1.0
    ours = e @ G @ e

    def phi(x):
        return max(0.0, 1.0 - abs(x - 0.4) / 0.2)

    def inner(x):
        breaks = [p for p in mesh.nodes if x - delta < p < x + delta]
        val, _ = quad(lambda y: kernel.eval_diffusion(y - x) * (phi(y) - phi(x)) ** 2,
                      x - delta, x + delta, points=breaks, limit=200, epsabs=1e-14)
        return val

    a_phi = sum(quad(inner, lo, hi, limit=200, epsabs=1e-13)[0]
                for lo, hi in zip(np.arange(0.1, 0.61, 0.1), np.arange(0.2, 0.71, 0.1)))
    mass = quad(lambda x: phi(x) ** 2, 0.2, 0.6, points=[0.4])[0]
    mean = quad(phi, 0.2, 0.6, points=[0.4])[0]
    oracle = eps**2 * a_phi + mass - mean**2
    assert ours == pytest.approx(oracle, rel=1e-10)


def test_load_zero_data_gives_zero(setup):
    _, trial, test, kernel, A, C, _, _ = setup
    F = assemble_load(test, lambda x: np.zeros_like(x), trial,
                      np.zeros(trial.n_dofs), 0.01, kernel, matrices=(A, C),
                      boundary=lambda x: np.zeros_like(x))
    np.testing.assert_allclose(F, 0.0, atol=1e-15)


def test_load_consistency_linear(setup):
    # u = x solves the problem with f = 1; the discrete residual vanishes
    _, trial, test, kernel, A, C, _, _ = setup
    eps = 0.01
    g = lambda x: np.asarray(x, dtype=float)
    lift = boundary_lift(trial, g)
    F = assemble_load(test, lambda x: np.ones_like(x), trial, lift, eps, kernel,
                      matrices=(A, C), boundary=g)
    coeffs = trial.interpolate(g)
    resid = F - (eps * A + C)[:, trial.free_dofs] @ coeffs[trial.free_dofs]
    assert np.abs(resid).max() <= 1e-11 * max(1.0, np.abs(F).max())


def test_load_consistency_quintic():
    # p = 5 reproduces x^5 exactly, so the residual drops to quadrature roundoff
    delta, eps = 0.1, 0.01
    mesh = initial_mesh(delta)
    trial, test = Space(mesh, 5), Space(mesh, 7)
    kernel = constant_kernel_pair(delta)
    g = lambda x: np.asarray(x, dtype=float) ** 5
    system = build_mixed_system(trial, test, kernel, eps, "app",
                                lambda x: forcing_smooth_nonlocal(x, eps, delta), g)
    coeffs = trial.interpolate(g)
    resid = system.F - system.B @ coeffs[trial.free_dofs]
    assert np.abs(resid).max() <= 1e-9 * max(1.0, np.abs(system.F).max())


def test_enrichment_required():
    mesh = initial_mesh(0.1)
    kernel = constant_kernel_pair(0.1)
    with pytest.raises(ValueError):
        build_mixed_system(Space(mesh, 2), Space(mesh, 2), kernel, 0.01, "app",
                           lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
