"""Assembly of the discrete nonlocal operators and the mixed system.

The bilinear form is assembled in operator form, following the nested
integration driver: rows are (free) test functions integrated over the
interior domain, columns are trial basis functions fed through the nonlocal
diffusion/convection operators.  Since every test function vanishes on the
exterior elements, this operator form coincides with the symmetric
double-integral form of the diffusion inner product.

All matrices carry columns for *all* DOFs of the column space (free and
constrained); the constrained columns are what the boundary lift multiplies.
Rows are restricted to free test DOFs throughout.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import horizon_neighbors
from .quadrature import gauss_legendre, smooth_pieces
from .space import boundary_lift


def _check_meshes(trial, test):
    if trial.mesh is not test.mesh and not np.array_equal(trial.mesh.nodes, test.mesh.nodes):
        raise ValueError("trial and test spaces must share one mesh")


def _free_row_data(space):
    rowmap = np.full(space.n_dofs, -1, dtype=int)
    rowmap[space.free_dofs] = np.arange(space.n_free)
    per_element = []
    for e in range(space.mesh.n_elements):
        rows = rowmap[space.element_dofs(e)]
        keep = rows >= 0
        per_element.append((rows[keep], keep))
    return per_element


def assemble_nonlocal_forms(test, columns, kernel, n_over=13):
    """Assemble (-L_delta u, v) and (b.G_delta u, v) matrices in one sweep.

    ``columns`` is a sequence of (space, want_diffusion, want_convection)
    triples sharing the test space's mesh; the returned list holds one
    (A, C) pair per entry (None where not requested).  Rows are free test
    DOFs, columns all DOFs of the respective column space.
    """
    mesh = test.mesh
    delta = mesh.delta
    for space, _, _ in columns:
        _check_meshes(space, test)

    n_out = test.order + n_over
    n_in = max(test.order, max(s.order for s, _, _ in columns)) + n_over
    rule_out = gauss_legendre(n_out)
    rule_in = gauss_legendre(n_in)
    # inner rule in [0, 1] form so it maps onto per-point intervals by broadcasting
    q_in = 0.5 * (rule_in.points + 1.0)
    w_in = 0.5 * rule_in.weights

    need_diff = any(wd for _, wd, _ in columns)
    need_conv = any(wc for _, _, wc in columns)

    # per-element inner grids and basis tables for the fully-contained case
    elem_y = [rule_in.map_to(*mesh.bounds(j)) for j in range(mesh.n_elements)]
    tables = {}
    for space, _, _ in columns:
        if id(space) not in tables:
            tables[id(space)] = [space.local_basis(j, elem_y[j][0])
                                 for j in range(mesh.n_elements)]

    rows_of = _free_row_data(test)
    mats = [(np.zeros((test.n_free, s.n_dofs)) if wd else None,
             np.zeros((test.n_free, s.n_dofs)) if wc else None)
            for s, wd, wc in columns]

    ctol = 1e-12 * max(1.0, delta)
    for i in mesh.interior_elements:
        bi = mesh.bounds(i)
        rows, keep = rows_of[i]
        for j in horizon_neighbors(mesh, i):
            bj = mesh.bounds(j)
            for lo, hi in smooth_pieces(bi, bj, delta):
                xs, wx = rule_out.map_to(lo, hi)
                Btx = test.local_basis(i, xs)
                wBtx = Btx * wx[:, None]
                if j == i and lo >= bj[0] + delta - ctol and hi <= bj[1] - delta + ctol:
                    # unclipped self window: pair mirrored points y = x -+ t so
                    # the O(delta^-3) kernel multiplies symmetric differences of
                    # the basis instead of two huge cancelling half-integrals
                    t = delta * q_in
                    wt = delta * w_in
                    wKd_t = kernel.eval_diffusion(t) * wt if need_diff else None
                    wKc_t = kernel.eval_convection(t) * wt if need_conv else None
                    tau = 2.0 * t / (bj[1] - bj[0])
                    taylor = tau[-1] <= 0.1
                    if not taylor:
                        yp = xs[:, None] + t[None, :]
                        ym = xs[:, None] - t[None, :]
                    for (space, wd, wc), (A, C) in zip(columns, mats):
                        Bx = Btx if space is test else space.local_basis(i, xs)
                        nu = space.order + 1
                        cols_i = space.element_dofs(i)
                        if taylor:
                            # finite Taylor expansion of L(xi +- tau) around xi:
                            # exact for polynomials and free of the eps-level
                            # evaluation noise that the kernel would amplify
                            pows = space.derivative_matrix_powers()
                            fact = 1.0
                            Md = np.zeros((nu, nu))
                            Mc = np.zeros((nu, nu))
                            for m in range(1, space.order + 1):
                                fact *= m
                                if wc and m % 2 == 1:
                                    Mc += 2.0 * (wKc_t @ (tau**m)) / fact * pows[m]
                                if wd and m % 2 == 0:
                                    Md += 2.0 * (wKd_t @ (tau**m)) / fact * pows[m]
                            if wd:
                                A[np.ix_(rows, cols_i)] += \
                                    -2.0 * (wBtx.T @ (Bx @ Md))[keep]
                            if wc:
                                C[np.ix_(rows, cols_i)] += (wBtx.T @ (Bx @ Mc))[keep]
                            continue
                        Byp = space.local_basis(i, yp.ravel()).reshape(n_out, -1, nu)
                        Bym = space.local_basis(i, ym.ravel()).reshape(n_out, -1, nu)
                        if wd:
                            Zd = (wKd_t[None, :, None]
                                  * (Byp + Bym - 2.0 * Bx[:, None, :])).sum(axis=1)
                            A[np.ix_(rows, cols_i)] += -2.0 * (wBtx.T @ Zd)[keep]
                        if wc:
                            Zc = (wKc_t[None, :, None] * (Byp - Bym)).sum(axis=1)
                            C[np.ix_(rows, cols_i)] += (wBtx.T @ Zc)[keep]
                    continue
                if j == i:
                    # clipped self window: split the inner interval at x_p
                    l = np.maximum(bj[0], xs - delta)
                    u = np.minimum(bj[1], xs + delta)
                    y = np.concatenate((l[:, None] + (xs - l)[:, None] * q_in,
                                        xs[:, None] + (u - xs)[:, None] * q_in), axis=1)
                    wy = np.concatenate(((xs - l)[:, None] * w_in,
                                         (u - xs)[:, None] * w_in), axis=1)
                    contained = False
                elif lo >= bj[1] - delta - ctol and hi <= bj[0] + delta + ctol:
                    y, wy = elem_y[j]
                    contained = True
                else:
                    l = np.maximum(bj[0], xs - delta)
                    u = np.minimum(bj[1], xs + delta)
                    y = l[:, None] + (u - l)[:, None] * q_in
                    wy = (u - l)[:, None] * w_in
                    contained = False

                s = (y[None, :] if contained else y) - xs[:, None]
                if need_diff:
                    wKd = kernel.eval_diffusion(s) * wy
                    sd = wKd.sum(axis=-1)
                if need_conv:
                    wKc = kernel.eval_convection_signed(s) * wy
                    sc = wKc.sum(axis=-1)

                for (space, wd, wc), (A, C) in zip(columns, mats):
                    if contained:
                        By = tables[id(space)][j]
                    else:
                        By = space.local_basis(j, y.ravel()).reshape(n_out, -1, space.order + 1)
                    Bx = Btx if space is test else space.local_basis(i, xs)
                    cols_j = space.element_dofs(j)
                    cols_i = space.element_dofs(i)
                    if j == i:
                        # same column block: difference the basis values before
                        # applying the O(delta^-3) kernel weights, so the huge
                        # x-part/y-part cancellation never reaches the matrix
                        D = By - Bx[:, None, :]
                        if wd:
                            A[np.ix_(rows, cols_i)] += \
                                -2.0 * (wBtx.T @ (wKd[:, :, None] * D).sum(axis=1))[keep]
                        if wc:
                            C[np.ix_(rows, cols_i)] += \
                                (wBtx.T @ (wKc[:, :, None] * D).sum(axis=1))[keep]
                        continue
                    if not contained and abs(j - i) == 1:
                        # adjacent window: shift both sides by the shared-vertex
                        # cardinal (exactly 1 at the shared node, so the two
                        # shifts cancel analytically); keeps the summands at the
                        # size of the continuous difference for delta << h
                        By = By.copy()
                        Bx = Bx.copy()
                        if j > i:
                            By[..., 0] -= 1.0
                            Bx[:, -1] -= 1.0
                        else:
                            By[..., -1] -= 1.0
                            Bx[:, 0] -= 1.0
                    if wd:
                        Zd = wKd @ By if contained else (wKd[:, :, None] * By).sum(axis=1)
                        A[np.ix_(rows, cols_j)] += -2.0 * (wBtx.T @ Zd)[keep]
                        A[np.ix_(rows, cols_i)] += 2.0 * ((wBtx * sd[:, None]).T @ Bx)[keep]
                    if wc:
                        Zc = wKc @ By if contained else (wKc[:, :, None] * By).sum(axis=1)
                        C[np.ix_(rows, cols_j)] += (wBtx.T @ Zc)[keep]
                        C[np.ix_(rows, cols_i)] += -((wBtx * sc[:, None]).T @ Bx)[keep]
    return mats


def assemble_diffusion(trial, test, kernel, n_over=13):
    """Matrix A with A[v, u] = a(u, v) = (-L_delta u, v); all trial columns."""
    (A, _), = assemble_nonlocal_forms(test, [(trial, True, False)], kernel, n_over)
    return A


def assemble_convection(trial, test, kernel, n_over=13):
    """Matrix C with C[v, u] = (b . G_delta u, v) for b = 1; all trial columns."""
    (_, C), = assemble_nonlocal_forms(test, [(trial, False, True)], kernel, n_over)
    return C


def assemble_mass_mean(test):
    """L2(Omega) mass matrix and mean vector on the free test DOFs."""
    n = test.order + 1
    rule = gauss_legendre(n)
    rowmap = np.full(test.n_dofs, -1, dtype=int)
    rowmap[test.free_dofs] = np.arange(test.n_free)
    M = np.zeros((test.n_free, test.n_free))
    m = np.zeros(test.n_free)
    for e in test.mesh.interior_elements:
        xs, ws = rule.map_to(*test.mesh.bounds(e))
        B = test.local_basis(e, xs)
        rows = rowmap[test.element_dofs(e)]
        keep = rows >= 0
        Bk = B[:, keep]
        M[np.ix_(rows[keep], rows[keep])] += Bk.T @ (Bk * ws[:, None])
        m[rows[keep]] += Bk.T @ ws
    return M, m


def assemble_gram(test, kernel, eps, norm, n_over=13, diffusion_vv=None):
    """Gram matrix of the chosen test-space norm on the free test DOFs.

    'eng' is the nonlocal energy inner product; 'app' is
    eps^2 * energy + mean-free L2, the computable optimal-norm surrogate.
    """
    if norm not in ("app", "eng"):
        raise ValueError(f"unknown test norm {norm!r}, expected 'app' or 'eng'")
    A = diffusion_vv
    if A is None:
        A = assemble_diffusion(test, test, kernel, n_over)[:, test.free_dofs]
    if norm == "eng":
        G = A
    else:
        M, m = assemble_mass_mean(test)
        omega = test.mesh.nodes[-2] - test.mesh.nodes[1]
        G = eps**2 * A + M - np.outer(m, m) / omega
    return 0.5 * (G + G.T)


def load_vector(test, forcing, n_over=13):
    """(f, v) for all free test functions; f is evaluated on (0, 1) only."""
    rule = gauss_legendre(test.order + n_over)
    rowmap = np.full(test.n_dofs, -1, dtype=int)
    rowmap[test.free_dofs] = np.arange(test.n_free)
    F = np.zeros(test.n_free)
    for e in test.mesh.interior_elements:
        xs, ws = rule.map_to(*test.mesh.bounds(e))
        B = test.local_basis(e, xs)
        rows = rowmap[test.element_dofs(e)]
        keep = rows >= 0
        F[rows[keep]] += B[:, keep].T @ (ws * np.asarray(forcing(xs), dtype=float))
    return F


def boundary_defect_load(test, trial, lift, boundary, eps, kernel, n_over=13):
    """b(w, v) for the collar interpolation defect w = g - (nodal lift of g).

    The volumetric data is imposed with its exact values: the discrete
    solution carries the nodal interpolant of g on the exterior elements and
    this functional accounts for the remainder, which is supported on the
    collar only (so only its y-part survives).  Without it the data error on
    the never-refined exterior elements caps the attainable accuracy.
    """
    mesh = test.mesh
    delta = mesh.delta
    rule_out = gauss_legendre(test.order + n_over)
    rule_in = gauss_legendre(max(test.order, trial.order) + n_over)
    q_in = 0.5 * (rule_in.points + 1.0)
    w_in = 0.5 * rule_in.weights
    rows_of = _free_row_data(test)
    exterior = (0, mesh.n_elements - 1)

    F = np.zeros(test.n_free)
    for i in mesh.interior_elements:
        bi = mesh.bounds(i)
        rows, keep = rows_of[i]
        for j in exterior:
            bj = mesh.bounds(j)
            for lo, hi in smooth_pieces(bi, bj, delta):
                xs, wx = rule_out.map_to(lo, hi)
                wBtx = test.local_basis(i, xs) * wx[:, None]
                l = np.maximum(bj[0], xs - delta)
                u = np.minimum(bj[1], xs + delta)
                y = l[:, None] + (u - l)[:, None] * q_in
                wy = (u - l)[:, None] * w_in
                s = y - xs[:, None]
                defect = (np.asarray(boundary(y.ravel()), dtype=float).reshape(y.shape)
                          - trial.local_basis(j, y.ravel()).reshape(y.shape + (-1,))
                          @ lift[trial.element_dofs(j)])
                dens = (-2.0 * eps * kernel.eval_diffusion(s)
                        + kernel.eval_convection_signed(s)) * wy * defect
                F[rows] += (wBtx.T @ dens.sum(axis=1))[keep]
    return F


def assemble_load(test, forcing, trial, lift, eps, kernel, n_over=13, matrices=None,
                  boundary=None):
    """Load vector F_v = (f, v) - b(g_lift, v); ``lift`` is a full trial vector.

    When ``boundary`` (the exact data g) is given, the collar interpolation
    defect is subtracted as well, so the data enters with its exact values.
    """
    if matrices is None:
        (A, C), = assemble_nonlocal_forms(test, [(trial, True, True)], kernel, n_over)
    else:
        A, C = matrices
    F = load_vector(test, forcing, n_over) - (eps * A + C) @ lift
    if boundary is not None:
        F -= boundary_defect_load(test, trial, lift, boundary, eps, kernel, n_over)
    return F


@dataclass
class SystemParts:
    """Norm-independent pieces of the discrete problem on one mesh."""

    trial: object
    test: object
    kernel: object
    n_over: int
    A_vu: np.ndarray
    C_vu: np.ndarray
    A_vv: np.ndarray
    M: np.ndarray
    m: np.ndarray
    load: np.ndarray


@dataclass
class MixedSystem:
    """Gram + bilinear-form matrix + load of the discrete mixed problem."""

    G: np.ndarray
    B: np.ndarray
    F: np.ndarray
    trial: object
    test: object
    lift: np.ndarray
    eps: float
    norm: str

    @property
    def n_trial(self):
        return self.B.shape[1]

    @property
    def n_test(self):
        return self.B.shape[0]


def assemble_parts(trial, test, kernel, forcing, n_over=13):
    _check_meshes(trial, test)
    if test.n_free <= trial.n_free:
        raise ValueError("test space must be strictly richer than the trial space (dp >= 1)")
    (A_vu, C_vu), (A_vv, _) = assemble_nonlocal_forms(
        test, [(trial, True, True), (test, True, False)], kernel, n_over)
    M, m = assemble_mass_mean(test)
    return SystemParts(trial, test, kernel, n_over, A_vu, C_vu,
                       A_vv[:, test.free_dofs], M, m, load_vector(test, forcing, n_over))


def mixed_system_from_parts(parts, eps, norm, boundary):
    trial, test = parts.trial, parts.test
    if norm not in ("app", "eng"):
        raise ValueError(f"unknown test norm {norm!r}, expected 'app' or 'eng'")
    if norm == "eng":
        G = parts.A_vv
    else:
        omega = test.mesh.nodes[-2] - test.mesh.nodes[1]
        G = eps**2 * parts.A_vv + parts.M - np.outer(parts.m, parts.m) / omega
    G = 0.5 * (G + G.T)
    lift = boundary_lift(trial, boundary)
    op = eps * parts.A_vu + parts.C_vu
    F = (parts.load - op @ lift
         - boundary_defect_load(test, trial, lift, boundary, eps, parts.kernel,
                                parts.n_over))
    return MixedSystem(G=G, B=op[:, trial.free_dofs], F=F,
                       trial=trial, test=test, lift=lift, eps=eps, norm=norm)


def build_mixed_system(trial, test, kernel, eps, norm, forcing, boundary, n_over=13):
    """Assemble the full discrete mixed problem for one norm."""
    parts = assemble_parts(trial, test, kernel, forcing, n_over)
    return mixed_system_from_parts(parts, eps, norm, boundary)
