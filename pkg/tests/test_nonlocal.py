import numpy as np
import pytest

from humcontrol import (
    NonlinearitySpec,
    indicator,
    l2_norm,
    make_grid,
    make_time_mesh,
    solve_nonlocal_linear,
    solve_semilinear_nonlocal,
)


def _sine(grid):
    f = np.sin(np.pi * grid.nodes)
    f[0] = f[-1] = 0.0
    return f


def test_linear_without_mean_term_matches_scalar_oracle():
    g = make_grid(16)
    tm = make_time_mesh(0.1, 40)
    a = 1.7
    y = solve_nonlocal_linear(a, 0.0, _sine(g), None, tm, g)
    n = g.n_interior
    lap = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / g.h**2
    mat = np.eye(n) - tm.dt * (lap + a * np.eye(n))
    ref = _sine(g)[1:-1]
    for _ in range(tm.m_steps):
        ref = np.linalg.solve(mat, ref)
    np.testing.assert_allclose(y[-1][1:-1], ref, rtol=1e-12, atol=1e-14)
    np.testing.assert_array_equal(y[:, 0], 0.0)
    np.testing.assert_array_equal(y[:, -1], 0.0)


def test_rank_one_update_matches_dense_oracle():
    # the Sherman-Morrison step must equal a dense solve of the full matrix
    # including the mean coupling
    g = make_grid(8)
    tm = make_time_mesh(0.05, 12)
    a, b = -0.8, 2.3
    rng = np.random.default_rng(2)
    control = rng.standard_normal((tm.m_steps, g.n_nodes)) * indicator(0.3, 0.8, g)
    y = solve_nonlocal_linear(a, b, _sine(g), control, tm, g)

    nn = g.n_nodes
    mat = np.eye(nn)
    lap_rows = np.zeros((nn, nn))
    for i in range(1, nn - 1):
        lap_rows[i, i - 1 : i + 2] = np.array([1.0, -2.0, 1.0]) / g.h**2
    mat[1:-1] -= tm.dt * (lap_rows[1:-1] + a * np.eye(nn)[1:-1])
    ones_int = np.zeros(nn)
    ones_int[1:-1] = 1.0
    mat -= tm.dt * b * np.outer(ones_int, g.quad_weights)
    ref = _sine(g)
    for k in range(tm.m_steps):
        rhs = ref + tm.dt * control[k]
        rhs[0] = rhs[-1] = 0.0
        ref = np.linalg.solve(mat, rhs)
    np.testing.assert_allclose(y[-1], ref, rtol=1e-11, atol=1e-13)


def test_discrete_mean_recursion_exact():
    # integrate the implicit step over the domain: the discrete mean obeys
    # mean(y^{n+1}) - mean(y^n) = dt*(mean(lap y^{n+1}) + a*mean(y^{n+1})
    # + b*w_int*mean(y^{n+1})) exactly (boundary-flux term included)
    g = make_grid(21)
    tm = make_time_mesh(0.1, 30)
    a, b = 0.0, 1.0
    y = solve_nonlocal_linear(a, b, _sine(g), None, tm, g)
    w = g.quad_weights
    w_int = float(np.sum(w[1:-1]))
    lap = np.zeros((g.n_nodes, g.n_nodes))
    for i in range(1, g.n_nodes - 1):
        lap[i, i - 1 : i + 2] = np.array([1.0, -2.0, 1.0]) / g.h**2
    means = y @ w
    for n in range(tm.m_steps):
        flux = float(w @ (lap @ y[n + 1]))
        rhs = tm.dt * (flux + a * means[n + 1] + b * w_int * means[n + 1])
        assert abs((means[n + 1] - means[n]) - rhs) <= 1e-12
    # the average itself decays for this data
    assert means[-1] < means[0]


def test_zero_data_zero_control_is_zero():
    g = make_grid(10)
    tm = make_time_mesh(0.1, 8)
    y = solve_nonlocal_linear(0.5, 1.5, np.zeros(g.n_nodes), None, tm, g)
    np.testing.assert_array_equal(y, 0.0)
    f = NonlinearitySpec(a=0.5, b=1.5)
    y = solve_semilinear_nonlocal(f, np.zeros(g.n_nodes), None, tm, g)
    np.testing.assert_array_equal(y, 0.0)


def test_semilinear_linear_case_converges_to_implicit_solution():
    # with g1 = g2 = 0 the semi-implicit scheme differs from the fully
    # implicit one by O(dt)
    g = make_grid(30)
    a, b = -1.0, 2.0
    f = NonlinearitySpec(a=a, b=b)
    diffs = []
    for m in (100, 200, 400):
        tm = make_time_mesh(0.1, m)
        y_imp = solve_nonlocal_linear(a, b, _sine(g), None, tm, g)
        y_semi = solve_semilinear_nonlocal(f, _sine(g), None, tm, g)
        diffs.append(l2_norm(y_imp[-1] - y_semi[-1], g))
    assert diffs[0] > diffs[1] > diffs[2]
    assert 1.6 <= diffs[0] / diffs[1] <= 2.4
    assert 1.6 <= diffs[1] / diffs[2] <= 2.4


def test_adaptive_evolution_nonlinearity_decays():
    # f(y, avg y) = chi(y) y (B - avg y) with chi a smooth cutoff vanishing
    # near zero; small nonnegative data decays under diffusion
    def chi(u):
        u = np.abs(np.asarray(u, dtype=float))
        out = np.where(u > 0.05, 1.0 - np.exp(-((u - 0.05) ** 2) / 0.01), 0.0)
        return out

    B = 1.0
    f = NonlinearitySpec(
        a=0.0,
        b=0.0,
        g1=lambda u, v: np.where(np.abs(u) > 0.05, B * chi(u) / np.where(u == 0.0, 1.0, u), 0.0),
        g2=lambda u: -chi(u),
    )
    assert float(np.max(np.abs(f(np.zeros(3), 0.0)))) == 0.0
    g = make_grid(40)
    tm = make_time_mesh(0.1, 200)
    y0 = 0.4 * _sine(g)
    y = solve_semilinear_nonlocal(f, y0, None, tm, g)
    assert l2_norm(y[-1], g) < l2_norm(y0, g)
    assert np.isfinite(y).all()


def test_nonlinearity_vanishes_at_origin():
    f = NonlinearitySpec(a=3.0, b=-2.0, g1=lambda u, v: np.cos(u * v), g2=lambda u: np.sin(u))
    assert float(f(0.0, 0.0)) == 0.0


def test_control_shape_validated():
    g = make_grid(6)
    tm = make_time_mesh(0.1, 4)
    with pytest.raises(ValueError):
        solve_nonlocal_linear(0.0, 1.0, np.zeros(g.n_nodes), np.zeros((2, g.n_nodes)), tm, g)
