import numpy as np
import pytest

from humcontrol import (
    SingularPivotError,
    SystemParams,
    assemble_step_matrix,
    laplacian_dirichlet,
    laplacian_neumann,
    make_grid,
    solve_block_tridiagonal,
)
from humcontrol.operators import BlockStepMatrix

REF = SystemParams(a=2.0, b=-0.5, c=5.5, d=-4.5, tau=0.5, sigma=2.0)


def _scalar_thomas(lower, diag, upper, rhs):
    """Reference scalar tridiagonal solve (test oracle)."""
    n = len(diag)
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = upper[0] / diag[0]
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - lower[i] * c[i - 1]
        c[i] = upper[i] / den if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def test_dirichlet_exact_on_quadratic():
    g = make_grid(100)
    f = g.nodes * (1.0 - g.nodes)
    out = laplacian_dirichlet(g).apply(f)
    np.testing.assert_allclose(out[1:-1], -2.0, atol=1e-9)
    assert out[0] == 0.0 and out[-1] == 0.0
    # general quadratics are exact wherever the stencil does not touch the
    # boundary (the operator acts on the zero-trace subspace)
    q = 3.0 * g.nodes**2 - 1.2 * g.nodes + 0.4
    np.testing.assert_allclose(laplacian_dirichlet(g).apply(q)[2:-2], 6.0, atol=1e-8)


def test_dirichlet_eigenfunction():
    g = make_grid(100)
    f = np.sin(np.pi * g.nodes)
    out = laplacian_dirichlet(g).apply(f)
    ref = -np.pi**2 * f
    assert np.linalg.norm(out[1:-1] - ref[1:-1]) <= 1e-3 * np.linalg.norm(ref[1:-1])


def test_dirichlet_zero():
    g = make_grid(10)
    np.testing.assert_array_equal(laplacian_dirichlet(g).apply(np.zeros(g.n_nodes)), 0.0)


def test_neumann_constants_in_kernel():
    g = make_grid(33)
    out = laplacian_neumann(g).apply(np.full(g.n_nodes, 4.2))
    np.testing.assert_allclose(out, 0.0, atol=1e-10)


@pytest.mark.parametrize("k, lam", [(1, np.pi**2), (2, 4 * np.pi**2)])
def test_neumann_eigenfunctions(k, lam):
    g = make_grid(100)
    f = np.cos(k * np.pi * g.nodes)
    out = laplacian_neumann(g).apply(f)
    ref = -lam * f
    assert np.linalg.norm(out - ref) <= 1e-2 * np.linalg.norm(ref)


@pytest.mark.parametrize("make", [laplacian_dirichlet, laplacian_neumann])
def test_stencils_trapezoid_symmetric_nsd(make):
    g = make_grid(12)
    a = make(g).dense()
    w = g.quad_weights
    wa = w[:, None] * a
    np.testing.assert_allclose(wa, wa.T, atol=1e-10)
    eig = np.linalg.eigvalsh(0.5 * (wa + wa.T))
    assert eig.max() <= 1e-10


def test_step_matrix_decoupled_is_two_heat_matrices():
    g = make_grid(8)
    dt = 0.01
    p = SystemParams(a=0.0, b=0.0, c=0.0, d=0.0, tau=1.0, sigma=1.0)
    dense = assemble_step_matrix(p, dt, g).dense()
    uu = dense[0::2, 0::2]
    vv = dense[1::2, 1::2]
    assert np.all(dense[0::2, 1::2] == 0.0) and np.all(dense[1::2, 0::2] == 0.0)
    # u block: backward Euler heat with pinned boundary rows/columns
    expected_u = np.eye(g.n_nodes)
    expected_u[1:-1] -= dt * laplacian_dirichlet(g).dense()[1:-1]
    np.testing.assert_allclose(uu, expected_u, atol=1e-13)
    expected_v = np.eye(g.n_nodes) - dt * laplacian_neumann(g).dense()
    np.testing.assert_allclose(vv, expected_v, atol=1e-13)


@pytest.mark.parametrize("dt", [1e-5, 1e-3, 0.1, 5.0])
def test_step_matrix_factorizable_for_paper_set(dt):
    g = make_grid(20)
    assemble_step_matrix(REF, dt, g)  # must not raise


def test_step_matrix_matvec_against_dense():
    g = make_grid(3)
    m = assemble_step_matrix(REF, 0.01, g)
    dense = m.dense()
    rng = np.random.default_rng(3)
    x = rng.standard_normal(2 * g.n_nodes)
    ru, rv = m.matvec(x[0::2], x[1::2])
    ref = dense @ x
    np.testing.assert_allclose(np.stack([ru, rv], axis=1).ravel(), ref, rtol=1e-12, atol=1e-14)


def test_solve_identity_blocks_returns_rhs():
    n = 7
    diag = np.tile(np.eye(2), (n, 1, 1))
    zero = np.zeros((n, 2, 2))
    m = BlockStepMatrix(diag, zero, zero)
    rng = np.random.default_rng(5)
    ru, rv = rng.standard_normal(n), rng.standard_normal(n)
    xu, xv = solve_block_tridiagonal(m, ru, rv)
    np.testing.assert_allclose(xu, ru, atol=1e-14)
    np.testing.assert_allclose(xv, rv, atol=1e-14)


def _random_dominant_blocks(n, rng):
    diag = np.tile(3.0 * np.eye(2), (n, 1, 1)) + 0.3 * rng.standard_normal((n, 2, 2))
    lower = 0.3 * rng.standard_normal((n, 2, 2))
    upper = 0.3 * rng.standard_normal((n, 2, 2))
    lower[0] = 0.0
    upper[-1] = 0.0
    return diag, lower, upper


def test_solve_random_system_matches_dense():
    rng = np.random.default_rng(7)
    m = BlockStepMatrix(*_random_dominant_blocks(5, rng))
    rhs = rng.standard_normal(2 * 5)
    xu, xv = solve_block_tridiagonal(m, rhs[0::2], rhs[1::2])
    ref = np.linalg.solve(m.dense(), rhs)
    np.testing.assert_allclose(np.stack([xu, xv], axis=1).ravel(), ref, rtol=1e-10, atol=1e-12)


def test_solve_decoupled_matches_scalar_thomas():
    g = make_grid(9)
    dt = 0.02
    p = SystemParams(a=0.0, b=0.0, c=0.0, d=0.0, tau=1.0, sigma=1.0)
    m = assemble_step_matrix(p, dt, g)
    rng = np.random.default_rng(11)
    rhs_u = rng.standard_normal(g.n_nodes)
    rhs_u[0] = rhs_u[-1] = 0.0
    rhs_v = rng.standard_normal(g.n_nodes)
    xu, xv = solve_block_tridiagonal(m, rhs_u, rhs_v)
    dense = m.dense()
    uu, vv = dense[0::2, 0::2], dense[1::2, 1::2]
    ref_u = _scalar_thomas(np.r_[0.0, np.diag(uu, -1)], np.diag(uu).copy(), np.r_[np.diag(uu, 1), 0.0], rhs_u)
    ref_v = _scalar_thomas(np.r_[0.0, np.diag(vv, -1)], np.diag(vv).copy(), np.r_[np.diag(vv, 1), 0.0], rhs_v)
    np.testing.assert_allclose(xu, ref_u, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(xv, ref_v, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("n", [3, 7, 31])
def test_resolve_residual_small(n):
    g = make_grid(n)
    m = assemble_step_matrix(REF, 0.004, g)
    rng = np.random.default_rng(n)
    rhs_u = rng.standard_normal(g.n_nodes)
    rhs_v = rng.standard_normal(g.n_nodes)
    for solver in (m.solve, m.solve_thomas):
        xu, xv = solver(rhs_u, rhs_v)
        ru, rv = m.matvec(xu, xv)
        res = np.hypot(np.linalg.norm(ru - rhs_u), np.linalg.norm(rv - rhs_v))
        assert res <= 1e-10 * np.hypot(np.linalg.norm(rhs_u), np.linalg.norm(rhs_v))


@pytest.mark.parametrize("n", range(3, 11))
def test_block_solve_matches_dense_all_small_grids(n):
    g = make_grid(n)
    m = assemble_step_matrix(REF, 0.01, g)
    rng = np.random.default_rng(100 + n)
    rhs = rng.standard_normal(2 * g.n_nodes)
    xu, xv = solve_block_tridiagonal(m, rhs[0::2], rhs[1::2])
    ref = np.linalg.solve(m.dense(), rhs)
    np.testing.assert_allclose(np.stack([xu, xv], axis=1).ravel(), ref, rtol=1e-10, atol=1e-12)


def test_adjoint_matrix_is_weighted_transpose():
    # Q_hat S_swap == S^T Q_hat with Q_hat the trapezoid weights on both
    # components: the b/c swap realizes the exact weighted adjoint step.
    g = make_grid(6)
    for p in (REF, SystemParams(a=-3.0, b=2.0, c=1.0, d=-1.0, tau=0.05, sigma=20.0)):
        s = assemble_step_matrix(p, 0.02, g).dense()
        s_adj = assemble_step_matrix(p.adjoint(), 0.02, g).dense()
        q = np.repeat(g.quad_weights, 2)
        lhs = q[:, None] * s_adj
        rhs = s.T * q[None, :]
        np.testing.assert_allclose(lhs, rhs, atol=1e-13 * np.abs(rhs).max())


def test_singular_pivot_reports_node():
    n = 6
    diag = np.tile(np.eye(2), (n, 1, 1))
    zero = np.zeros((n, 2, 2))
    diag[3] = 0.0
    with pytest.raises(SingularPivotError) as err:
        BlockStepMatrix(diag, zero, zero)
    assert err.value.node == 3


def test_assemble_rejects_nonpositive_dt():
    g = make_grid(4)
    with pytest.raises(ValueError):
        assemble_step_matrix(REF, 0.0, g)


def test_solve_block_tridiagonal_checks_shapes():
    g = make_grid(4)
    m = assemble_step_matrix(REF, 0.01, g)
    with pytest.raises(ValueError):
        solve_block_tridiagonal(m, np.ones(3), np.ones(g.n_nodes))
