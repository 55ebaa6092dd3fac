"""Deferred-correction time stepping with implicit Runge-Kutta loops.

One time step of size H is split into M substeps. Loop 0 (the prediction)
steps the base IRK method across the substeps; loops k = 1..K solve the
integral-form error equations written directly in terms of the updated
solution: the stage system per substep m is

    Y_i  =  y_m + h*S^{c_i}(fbar) + h*sum_j a_ij [f(Y_j,Z_j) - f(P^{c_j} state)]
  e*Z_i  = e*z_m + h*S^{c_i}(gbar) + h*sum_j a_ij [g(Y_j,Z_j) - g(P^{c_j} state)]

where fbar/gbar are the previous-loop node samples, S^c and P^c the
integration/interpolation rows of the grid, and the g-rows are kept
multiplied by eps so the eps -> 0 limit degenerates to the DAE stage
equations instead of dividing by eps.

The implicit stage systems are solved by simplified Newton: the Jacobian is
frozen at the substep start and refreshed when convergence stalls.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problems import SppProblem
from .quadrature import IndcGrid, build_grid
from .tableau import ButcherTableau

__all__ = [
    "IndcScheme",
    "StepState",
    "SolverError",
    "NewtonError",
    "DivergenceError",
    "newton_solve_stages",
    "irk_step",
    "predict",
    "correct",
    "solve",
]

#: any solution component beyond this magnitude is declared divergent
DIVERGENCE_LIMIT = 1e8


class SolverError(RuntimeError):
    pass


class NewtonError(SolverError):
    """Stage iteration failed to converge."""

    def __init__(self, msg: str, residual: float | None = None):
        if residual is not None:
            msg = f"{msg} (residual {residual:.3e})"
        super().__init__(msg)
        self.residual = residual


class DivergenceError(SolverError):
    """A solution component left the finite range (blow-up)."""

    def __init__(self, where: str):
        if "diverged" in where:
            super().__init__(where)
        else:
            super().__init__(f"solution diverged at {where}")
        self.where = where


@dataclass
class IndcScheme:
    """M quadrature nodes plus the tableau used in each loop.

    ``methods[0]`` is the prediction method, ``methods[1:]`` the correction
    methods, so K = len(methods) - 1. A scheme whose loops are not all
    stiffly accurate with invertible A is flagged (``unstable_composition``)
    but still runs; divergence on stiff problems is then expected.
    """

    M: int
    methods: list[ButcherTableau]
    newton_tol_abs: float = 1e-12
    newton_tol_rel: float = 1e-10
    newton_max_iter: int = 50

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least a prediction method is required")

    @property
    def K(self) -> int:
        return len(self.methods) - 1

    @property
    def unstable_composition(self) -> bool:
        return any(not (t.is_stiffly_accurate() and t.has_invertible_A())
                   for t in self.methods)

    def grid(self) -> IndcGrid:
        return build_grid(self.M)


@dataclass
class StepState:
    """Node values at tau_1..tau_M for one loop of one step."""

    y: np.ndarray  # (M, dim_y)
    z: np.ndarray  # (M, dim_z)


def _check_finite(y: np.ndarray, z: np.ndarray, where: str):
    for v in (y, z):
        if v.size and (not np.all(np.isfinite(v))
                       or np.max(np.abs(v)) > DIVERGENCE_LIMIT):
            raise DivergenceError(where)


def newton_solve_stages(residual, jacobian, guess: np.ndarray,
                        tol_abs: float = 1e-12, tol_rel: float = 1e-10,
                        max_iter: int = 50) -> np.ndarray:
    """Simplified Newton on the stacked stage vector.

    ``jacobian(u)`` assembles the full Jacobian at ``u``; it is evaluated at
    the initial guess, then refreshed at the current iterate whenever the
    residual norm fails to contract by at least half.
    """
    u = np.array(guess, dtype=float)
    try:
        j_inv = np.linalg.inv(jacobian(u))
    except np.linalg.LinAlgError:
        raise NewtonError("singular stage Jacobian", np.inf) from None
    res = residual(u)
    norm = float(np.max(np.abs(res))) if res.size else 0.0
    refreshes = 0
    for _ in range(max_iter):
        if not np.isfinite(norm):
            raise DivergenceError("stage iteration")
        if norm <= tol_abs + tol_rel * float(np.max(np.abs(u), initial=0.0)):
            # one extra step: near the root the iteration contracts fast, so
            # this pushes the residual well below the tolerance and keeps
            # iteration error from accumulating over long runs
            u = u - j_inv @ res
            return u
        u = u - j_inv @ res
        res = residual(u)
        new_norm = float(np.max(np.abs(res))) if res.size else 0.0
        if new_norm > 0.5 * norm and refreshes < 3:
            try:
                j_inv = np.linalg.inv(jacobian(u))
            except np.linalg.LinAlgError:
                raise NewtonError("singular stage Jacobian", new_norm) from None
            refreshes += 1
        norm = new_norm
    if norm <= tol_abs + tol_rel * float(np.max(np.abs(u), initial=0.0)):
        return u
    raise NewtonError(f"no convergence in {max_iter} iterations", norm)


def _frozen_jacobian(problem: SppProblem, tab: ButcherTableau, h: float):
    """J(u) = I (x) diag(I, eps I) - h A (x) [[f_y f_z],[g_y g_z]] evaluated
    at the mean of the current stage states."""
    dy, dz, eps = problem.dim_y, problem.dim_z, problem.eps
    d = dy + dz
    s = tab.s
    E = np.eye(d)
    E[dy:, dy:] *= eps

    def jac(u, t_ref=0.0):
        um = u.reshape(s, d).mean(axis=0)
        y, z = um[:dy], um[dy:]
        j0 = np.empty((d, d))
        j0[:dy, :dy] = problem.f_y(y, z, t_ref)
        j0[:dy, dy:] = problem.f_z(y, z, t_ref)
        j0[dy:, :dy] = problem.g_y(y, z, t_ref)
        j0[dy:, dy:] = problem.g_z(y, z, t_ref)
        return np.kron(np.eye(s), E) - h * np.kron(tab.A, j0)

    return jac


def _solve_substep(problem: SppProblem, tab: ButcherTableau, h: float,
                   t_m: float, y_m: np.ndarray, z_m: np.ndarray,
                   quad_y, quad_z, upd_y, upd_z, base_f, base_g, guess,
                   tol_abs, tol_rel, max_iter):
    """Solve the s-stage system for one substep and return the node update.

    ``quad_*`` (s, d*) carry the h*S^c stage quadrature of the previous loop
    and ``upd_*`` (d*,) the full-substep h*S^m quadrature (all zero for the
    prediction); ``base_*`` (s, d*) the f/g values subtracted inside the
    stage differences (zero for the prediction).
    """
    dy, dz, eps = problem.dim_y, problem.dim_z, problem.eps
    d = dy + dz
    s = tab.s
    A, b, c = tab.A, tab.b, tab.c
    t_stages = t_m + c * h

    f_st = np.empty((s, dy))
    g_st = np.empty((s, dz))

    def residual(u):
        st = u.reshape(s, d)
        for i in range(s):
            f_st[i] = problem.f(st[i, :dy], st[i, dy:], t_stages[i])
            g_st[i] = problem.g(st[i, :dy], st[i, dy:], t_stages[i])
        r = np.empty((s, d))
        r[:, :dy] = (st[:, :dy] - y_m - quad_y
                     - h * (A @ (f_st - base_f)))
        r[:, dy:] = (eps * (st[:, dy:] - z_m) - quad_z
                     - h * (A @ (g_st - base_g)))
        return r.ravel()

    jac = _frozen_jacobian(problem, tab, h)
    u = newton_solve_stages(residual, lambda uu: jac(uu, t_m), guess.ravel(),
                            tol_abs, tol_rel, max_iter)
    residual(u)  # refresh f_st/g_st at the solution
    stages = u.reshape(s, d)
    if tab.is_stiffly_accurate() and abs(c[-1] - 1.0) < 1e-14:
        # node value equals the last stage; avoids dividing the update by eps
        y_next = stages[-1, :dy].copy()
        z_next = stages[-1, dy:].copy()
    else:
        y_next = y_m + upd_y + h * (b @ (f_st - base_f))
        if dz:
            z_next = z_m + (upd_z + h * (b @ (g_st - base_g))) / eps
        else:
            z_next = z_m
    return y_next, z_next, stages


def predict(problem: SppProblem, grid: IndcGrid, tab: ButcherTableau,
            y_in: np.ndarray, z_in: np.ndarray, t_n: float, H: float,
            tol_abs=1e-12, tol_rel=1e-10, max_iter=50) -> StepState:
    """Loop 0: step the base IRK method across the M substeps."""
    M = grid.M
    h = H / M
    dy, dz = problem.dim_y, problem.dim_z
    d = dy + dz
    s = tab.s
    y_nodes = np.empty((M, dy))
    z_nodes = np.empty((M, dz))
    y_m, z_m = np.array(y_in, float), np.array(z_in, float)
    zeros_qy = np.zeros((s, dy))
    zeros_qz = np.zeros((s, dz))
    zeros_uy = np.zeros(dy)
    zeros_uz = np.zeros(dz)
    for m in range(M):
        t_m = t_n + m * h
        guess = np.tile(np.concatenate([y_m, z_m]), (s, 1))
        try:
            y_m, z_m, _ = _solve_substep(
                problem, tab, h, t_m, y_m, z_m,
                zeros_qy, zeros_qz, zeros_uy, zeros_uz,
                zeros_qy, zeros_qz, guess,
                tol_abs, tol_rel, max_iter)
        except SolverError as err:
            raise type(err)(f"prediction substep {m}: {err}") from err
        _check_finite(y_m, z_m, f"prediction substep {m}")
        y_nodes[m], z_nodes[m] = y_m, z_m
    return StepState(y=y_nodes, z=z_nodes)


def correct(problem: SppProblem, grid: IndcGrid, tab: ButcherTableau,
            prev: StepState, y_in: np.ndarray, z_in: np.ndarray,
            t_n: float, H: float,
            tol_abs=1e-12, tol_rel=1e-10, max_iter=50) -> StepState:
    """One correction loop: raise the order of ``prev`` using ``tab``."""
    M = grid.M
    h = H / M
    dy, dz, eps = problem.dim_y, problem.dim_z, problem.eps
    s = tab.s
    Sc, Pc = grid.stage_matrices(tab)
    S = grid.S

    # previous-loop samples at the nodes tau_1..tau_M
    t_nodes = t_n + h * np.arange(1, M + 1)
    fbar = np.empty((M, dy))
    gbar = np.empty((M, dz))
    for j in range(M):
        fbar[j] = problem.f(prev.y[j], prev.z[j], t_nodes[j])
        gbar[j] = problem.g(prev.y[j], prev.z[j], t_nodes[j])

    y_nodes = np.empty((M, dy))
    z_nodes = np.empty((M, dz))
    y_m, z_m = np.array(y_in, float), np.array(z_in, float)
    for m in range(M):
        t_m = t_n + m * h
        t_stages = t_m + tab.c * h
        quad_y = h * (Sc[m] @ fbar)
        quad_z = h * (Sc[m] @ gbar)
        upd_y = h * (S[m] @ fbar)
        upd_z = h * (S[m] @ gbar)
        # previous-loop interpolant at the stage abscissae
        y_interp = Pc[m] @ prev.y
        z_interp = Pc[m] @ prev.z
        base_f = np.empty((s, dy))
        base_g = np.empty((s, dz))
        for i in range(s):
            base_f[i] = problem.f(y_interp[i], z_interp[i], t_stages[i])
            base_g[i] = problem.g(y_interp[i], z_interp[i], t_stages[i])
        guess = np.hstack([y_interp, z_interp])
        try:
            y_m, z_m, _ = _solve_substep(
                problem, tab, h, t_m, y_m, z_m,
                quad_y, quad_z, upd_y, upd_z, base_f, base_g, guess,
                tol_abs, tol_rel, max_iter)
        except SolverError as err:
            raise type(err)(f"correction substep {m}: {err}") from err
        _check_finite(y_m, z_m, f"correction substep {m}")
        y_nodes[m], z_nodes[m] = y_m, z_m
    return StepState(y=y_nodes, z=z_nodes)


def irk_step(problem: SppProblem, tab: ButcherTableau,
             y_in: np.ndarray, z_in: np.ndarray, t: float, H: float,
             tol_abs=1e-12, tol_rel=1e-10, max_iter=200):
    """A single step of ``tab`` applied as a plain IRK method over [t, t+H]."""
    s = tab.s
    dy, dz = problem.dim_y, problem.dim_z
    guess = np.tile(np.concatenate([y_in, z_in]), (s, 1))
    return _solve_substep(
        problem, tab, H, t, np.asarray(y_in, float), np.asarray(z_in, float),
        np.zeros((s, dy)), np.zeros((s, dz)), np.zeros(dy), np.zeros(dz),
        np.zeros((s, dy)), np.zeros((s, dz)),
        guess, tol_abs, tol_rel, max_iter)[:2]


def solve(problem: SppProblem, scheme: IndcScheme, T: float, n_steps: int,
          t0: float = 0.0, y0=None, z0=None, trace: list | None = None):
    """Integrate to ``t0 + T`` with n_steps uniform steps of prediction plus
    K corrections; returns the final (y, z).

    When ``trace`` is a list, rows (step, node, t, y..., z..., loop) are
    appended for every loop of every step.
    """
    if T <= 0 or n_steps < 1:
        raise ValueError("T must be positive and n_steps >= 1")
    grid = build_grid(scheme.M)
    H = T / n_steps
    h = H / scheme.M
    y = np.array(problem.y0 if y0 is None else y0, dtype=float)
    z = np.array(problem.z0 if z0 is None else z0, dtype=float)
    kw = dict(tol_abs=scheme.newton_tol_abs, tol_rel=scheme.newton_tol_rel,
              max_iter=scheme.newton_max_iter)
    for n in range(n_steps):
        t_n = t0 + n * H
        try:
            state = predict(problem, grid, scheme.methods[0], y, z, t_n, H, **kw)
            if trace is not None:
                _trace_rows(trace, n, t_n, h, state, 0)
            for k in range(1, scheme.K + 1):
                state = correct(problem, grid, scheme.methods[k], state,
                                y, z, t_n, H, **kw)
                if trace is not None:
                    _trace_rows(trace, n, t_n, h, state, k)
        except SolverError as err:
            raise type(err)(f"step {n}: {err}") from err
        y, z = state.y[-1].copy(), state.z[-1].copy()
    return y, z


def _trace_rows(trace, n, t_n, h, state: StepState, loop: int):
    for m in range(state.y.shape[0]):
        trace.append((n, m + 1, t_n + (m + 1) * h,
                      state.y[m].copy(), state.z[m].copy(), loop))
