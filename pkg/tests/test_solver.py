"""Deferred-correction stepping: closed-form checks, equivalence of the
error-equation and updated-solution formulations, limit behaviour, orders."""
import numpy as np
import pytest

import indc
from indc.problems import decay, scalar_linear, van_der_pol
from indc.solver import (DIVERGENCE_LIMIT, DivergenceError, IndcScheme,
                         NewtonError, SolverError, irk_step,
                         newton_solve_stages, predict, solve)
from indc.tableau import builtin


def be_scheme(M, K):
    return IndcScheme(M=M, methods=[builtin("BE")] * (K + 1))


# ---------------------------------------------------------------- basics


def test_single_be_step_closed_form():
    # eps (z1 - z0) = h (-z1 + cos t1)  =>  z1 = (eps z0 + h cos t1)/(eps + h)
    eps, h = 1e-4, 0.01
    p = scalar_linear(eps)
    _, z1 = irk_step(p, builtin("BE"), p.y0, p.z0, 0.0, h)
    expect = (eps * p.z0[0] + h * np.cos(h)) / (eps + h)
    assert abs(z1[0] - expect) < 1e-12


def test_prediction_be_m3_matches_recursion():
    eps, H = 1e-3, 0.3
    p = scalar_linear(eps)
    grid = indc.build_grid(3)
    state = predict(p, grid, builtin("BE"), p.y0, p.z0, 0.0, H)
    h = H / 3
    z = p.z0[0]
    for m in range(3):
        z = (eps * z + h * np.cos((m + 1) * h)) / (eps + h)
        assert abs(state.z[m, 0] - z) < 1e-12


def test_solve_validates_arguments():
    p = scalar_linear(1e-3)
    with pytest.raises(ValueError):
        solve(p, be_scheme(2, 0), -1.0, 4)
    with pytest.raises(ValueError):
        solve(p, be_scheme(2, 0), 1.0, 0)


def test_solve_is_deterministic():
    p = van_der_pol(1e-4)
    sch = be_scheme(3, 2)
    a = solve(p, sch, 0.25, 8)
    b = solve(p, sch, 0.25, 8)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_trace_layout():
    p = scalar_linear(1e-3)
    trace = []
    solve(p, be_scheme(2, 1), 0.2, 2, trace=trace)
    # 2 steps x 2 loops x 2 nodes
    assert len(trace) == 8
    steps = [row[0] for row in trace]
    loops = [row[5] for row in trace]
    assert steps == [0, 0, 0, 0, 1, 1, 1, 1]
    assert loops == [0, 0, 1, 1, 0, 0, 1, 1]
    ts = [row[2] for row in trace[:4]]
    assert np.allclose(ts, [0.05, 0.1, 0.05, 0.1])


def test_scheme_flags():
    assert be_scheme(3, 2).K == 2
    assert not be_scheme(3, 2).unstable_composition
    nsa = IndcScheme(M=3, methods=[builtin("DIRK2-NSA")] * 2)
    assert nsa.unstable_composition
    lob = IndcScheme(M=4, methods=[builtin("LobattoIIIA2")] * 3)
    assert lob.unstable_composition
    with pytest.raises(ValueError):
        IndcScheme(M=3, methods=[])


# ------------------------------------------- error-equation equivalence


def _newton(F, J, u0, tol=1e-13, max_iter=60):
    u = np.array(u0, dtype=float)
    for _ in range(max_iter):
        r = F(u)
        if np.max(np.abs(r), initial=0.0) <= tol:
            return u
        u = u - np.linalg.solve(J(u), r)
    raise AssertionError("oracle Newton did not converge")


def _error_form_be_step(problem, M, K, H, y0, z0):
    """Independent oracle: backward-Euler loops written in the classic
    error-equation form (solve for the defect, then add it back)."""
    h = H / M
    eps = problem.eps
    dy, dz = problem.dim_y, problem.dim_z
    t_nodes = [(m + 1) * h for m in range(M)]

    def be_sub(ym, zm, t1):
        def F(u):
            yv, zv = u[:dy], u[dy:]
            return np.concatenate([
                yv - ym - h * problem.f(yv, zv, t1),
                eps * (zv - zm) - h * problem.g(yv, zv, t1)])

        def J(u):
            yv, zv = u[:dy], u[dy:]
            top = np.hstack([np.eye(dy) - h * problem.f_y(yv, zv, t1),
                             -h * problem.f_z(yv, zv, t1)])
            bot = np.hstack([-h * problem.g_y(yv, zv, t1),
                             eps * np.eye(dz) - h * problem.g_z(yv, zv, t1)])
            return np.vstack([top, bot])

        u = _newton(F, J, np.concatenate([ym, zm]))
        return u[:dy], u[dy:]

    Y = np.zeros((M, dy))
    Z = np.zeros((M, dz))
    ym, zm = np.array(y0, float), np.array(z0, float)
    for m in range(M):
        ym, zm = be_sub(ym, zm, t_nodes[m])
        Y[m], Z[m] = ym, zm

    S = indc.build_grid(M).S
    for _ in range(K):
        fbar = np.array([problem.f(Y[m], Z[m], t_nodes[m]) for m in range(M)])
        gbar = np.array([problem.g(Y[m], Z[m], t_nodes[m]) for m in range(M)])
        dlt, eta = np.zeros(dy), np.zeros(dz)
        prev_y, prev_z = np.array(y0, float), np.array(z0, float)
        Ynew, Znew = np.zeros_like(Y), np.zeros_like(Z)
        for m in range(M):
            t1 = t_nodes[m]
            res_y = h * (S[m] @ fbar) - (Y[m] - prev_y)
            res_z = h * (S[m] @ gbar) - eps * (Z[m] - prev_z)

            def F(u, m=m, t1=t1, res_y=res_y, res_z=res_z, dlt=dlt, eta=eta):
                dv, ev = u[:dy], u[dy:]
                return np.concatenate([
                    dv - dlt - res_y
                    - h * (problem.f(Y[m] + dv, Z[m] + ev, t1) - fbar[m]),
                    eps * (ev - eta) - res_z
                    - h * (problem.g(Y[m] + dv, Z[m] + ev, t1) - gbar[m])])

            def J(u, m=m, t1=t1):
                yv, zv = Y[m] + u[:dy], Z[m] + u[dy:]
                top = np.hstack([np.eye(dy) - h * problem.f_y(yv, zv, t1),
                                 -h * problem.f_z(yv, zv, t1)])
                bot = np.hstack([-h * problem.g_y(yv, zv, t1),
                                 eps * np.eye(dz) - h * problem.g_z(yv, zv, t1)])
                return np.vstack([top, bot])

            u = _newton(F, J, np.concatenate([dlt, eta]))
            dlt, eta = u[:dy].copy(), u[dy:].copy()
            Ynew[m], Znew[m] = Y[m] + dlt, Z[m] + eta
            prev_y, prev_z = Y[m].copy(), Z[m].copy()
        Y, Z = Ynew, Znew
    return Y[-1], Z[-1]


@pytest.mark.parametrize("problem,H", [
    (van_der_pol(1e-3), 0.05),
    (scalar_linear(1e-4), 0.1),
])
@pytest.mark.parametrize("M,K", [(2, 1), (3, 2), (4, 1)])
def test_error_form_matches_updated_form(problem, H, M, K):
    y_o, z_o = _error_form_be_step(problem, M, K, H, problem.y0, problem.z0)
    sch = IndcScheme(M=M, methods=[builtin("BE")] * (K + 1),
                     newton_tol_abs=1e-14, newton_tol_rel=1e-13)
    y, z = solve(problem, sch, H, 1)
    dev = 0.0
    if y.size:
        dev = max(dev, float(np.max(np.abs(y - y_o))))
    dev = max(dev, float(np.max(np.abs(z - z_o))))
    assert dev <= 1e-11


# ------------------------------------------------------- limit behaviour


def test_manifold_attraction_in_dae_limit():
    # at eps = 1e-14 the z-output must sit on g(y, z) = 0 after every step
    p = van_der_pol(1e-14)
    y, z = solve(p, be_scheme(3, 1), 0.2, 4)
    assert abs(p.g(y, z, 0.2)[0]) <= 1e-8


def test_polynomial_fixed_point_of_correction():
    # a problem whose solution is a degree-2 polynomial is solved exactly by
    # the 3-node quadrature, so corrections must leave the exact node values
    # fixed (up to Newton tolerance)
    empty = np.zeros(0)
    poly = np.polynomial.Polynomial([1.0, -0.5, 0.25])
    dpoly = poly.deriv()
    prob = indc.SppProblem(
        name="poly", dim_y=1, dim_z=0, eps=1.0,
        f=lambda y, z, t: np.array([dpoly(t)]),
        g=lambda y, z, t: empty,
        f_y=lambda y, z, t: np.zeros((1, 1)),
        f_z=lambda y, z, t: np.zeros((1, 0)),
        g_y=lambda y, z, t: np.zeros((0, 1)),
        g_z=lambda y, z, t: np.zeros((0, 0)),
        y0=np.array([poly(0.0)]), z0=empty)
    grid = indc.build_grid(3)
    H = 0.8
    state = predict(prob, grid, builtin("BE"), prob.y0, empty, 0.0, H)
    # overwrite with the exact node values and correct once
    for m in range(3):
        state.y[m, 0] = poly((m + 1) * H / 3)
    out = indc.correct(prob, grid, builtin("BE"), state, prob.y0, empty,
                       0.0, H)
    for m in range(3):
        assert abs(out.y[m, 0] - poly((m + 1) * H / 3)) < 1e-11


def test_order_sanity_nonstiff():
    # four BE loops on 4 nodes give a fourth-order scheme on y' = -y
    p = decay()
    sch = be_scheme(4, 3)
    errs = []
    Hs = [2.0 ** -k for k in range(1, 5)]
    for H in Hs:
        y, _ = solve(p, sch, 1.0, int(round(1.0 / H)))
        errs.append(abs(y[0] - np.exp(-1.0)))
    slope = np.polyfit(np.log(Hs), np.log(errs), 1)[0]
    assert abs(slope - 4.0) <= 0.3


def test_scalar_converges_to_exact():
    p = scalar_linear(1e-6)
    y, z = solve(p, be_scheme(3, 2), 0.5, 64)
    _, z_exact = p.exact(0.5)
    assert abs(z[0] - z_exact[0]) < 1e-9


# ----------------------------------------------------- failure handling


def test_divergence_raises():
    # growth problem y' = 1.5 y stepped with h = 1: the BE factor is
    # 1/(1 - 1.5) = -2 per substep, so iterates blow past the limit
    p = decay(rate=-1.5)
    with pytest.raises(DivergenceError):
        solve(p, be_scheme(2, 0), 40.0, 20)


def test_newton_failure_is_reported():
    def residual(u):
        return np.array([np.arctan(u[0] * 50.0) + 2.0])  # no root

    def jacobian(u):
        return np.array([[50.0 / (1.0 + (u[0] * 50.0) ** 2)]])

    with pytest.raises(NewtonError):
        newton_solve_stages(residual, jacobian, np.array([0.0]), max_iter=20)


def test_newton_singular_jacobian():
    with pytest.raises(NewtonError):
        newton_solve_stages(lambda u: u, lambda u: np.zeros((1, 1)),
                            np.array([1.0]))


def test_solver_errors_carry_step_context():
    p = decay(rate=-1.5)
    try:
        solve(p, be_scheme(2, 0), 40.0, 20)
    except SolverError as err:
        assert "step" in str(err)
    else:
        raise AssertionError("expected divergence")
    assert DIVERGENCE_LIMIT == 1e8
