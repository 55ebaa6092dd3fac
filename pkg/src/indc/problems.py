"""Singular perturbation test problems y' = f(y,z,t), eps*z' = g(y,z,t).

The two built-in problems are the scalar relaxation equation
eps*z' = -z + cos(t) (pure z-component, dim_y = 0) and the van der Pol
oscillator in Lienard form with well-prepared initial data.

Problems are autonomous in the van der Pol case; f and g always accept t
and ignore it when unused.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SppProblem",
    "scalar_linear",
    "van_der_pol",
    "decay",
    "linear_system",
    "reduced_resolvent",
    "ResolventError",
    "PROBLEMS",
]

Vec = np.ndarray
Fun = Callable[[Vec, Vec, float], Vec]


class ResolventError(RuntimeError):
    """Newton iteration for the reduced resolvent failed to converge."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"resolvent Newton did not converge in {iterations} iterations "
            f"(residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SppProblem:
    """A stiff problem split into slow (y) and fast (z) components.

    ``f_y, f_z, g_y, g_z`` are the Jacobian blocks as evaluable maps with the
    same (y, z, t) signature, returning matrices of shapes (dy,dy), (dy,dz),
    (dz,dy), (dz,dz). ``exact`` maps t to (y(t), z(t)) when a closed-form
    solution exists.
    """

    name: str
    dim_y: int
    dim_z: int
    eps: float
    f: Fun
    g: Fun
    f_y: Fun
    f_z: Fun
    g_y: Fun
    g_z: Fun
    y0: Vec
    z0: Vec
    exact: Optional[Callable[[float], tuple[Vec, Vec]]] = None


def scalar_linear(eps: float) -> SppProblem:
    """eps*z' = -z + cos(t) with the consistent initial value z(0) = 1/(1+eps^2).

    The smooth solution is z(t) = (cos t + eps sin t) / (1 + eps^2); the
    consistent choice kills the exp(-t/eps) layer term.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    empty = np.zeros(0)
    zero_00 = np.zeros((0, 0))
    zero_01 = np.zeros((0, 1))
    zero_10 = np.zeros((1, 0))

    def f(y, z, t):
        return empty

    def g(y, z, t):
        return np.array([-z[0] + np.cos(t)])

    def g_z(y, z, t):
        return np.array([[-1.0]])

    def exact(t):
        zt = (np.cos(t) + eps * np.sin(t)) / (1.0 + eps * eps)
        return empty, np.array([zt])

    return SppProblem(
        name="scalar", dim_y=0, dim_z=1, eps=eps,
        f=f, g=g,
        f_y=lambda y, z, t: zero_00,
        f_z=lambda y, z, t: zero_01,
        g_y=lambda y, z, t: zero_10,
        g_z=g_z,
        y0=empty.copy(), z0=np.array([1.0 / (1.0 + eps * eps)]),
        exact=exact)


def van_der_pol(eps: float) -> SppProblem:
    """Van der Pol in Lienard form with initial data well prepared to O(eps^3):

    y(0) = 2, z(0) = -2/3 + (10/81) eps - (292/2187) eps^2.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")

    def f(y, z, t):
        return z.copy()

    def g(y, z, t):
        return np.array([(1.0 - y[0] * y[0]) * z[0] - y[0]])

    return SppProblem(
        name="vdp", dim_y=1, dim_z=1, eps=eps,
        f=f, g=g,
        f_y=lambda y, z, t: np.zeros((1, 1)),
        f_z=lambda y, z, t: np.eye(1),
        g_y=lambda y, z, t: np.array([[-2.0 * y[0] * z[0] - 1.0]]),
        g_z=lambda y, z, t: np.array([[1.0 - y[0] * y[0]]]),
        y0=np.array([2.0]),
        z0=np.array([-2.0 / 3.0 + (10.0 / 81.0) * eps
                     - (292.0 / 2187.0) * eps * eps]),
        exact=None)


def decay(rate: float = 1.0, y0: float = 1.0) -> SppProblem:
    """Non-stiff y' = -rate*y (no z-component); used for order sanity checks."""

    def f(y, z, t):
        return -rate * y

    empty = np.zeros(0)
    return SppProblem(
        name="decay", dim_y=1, dim_z=0, eps=1.0,
        f=f, g=lambda y, z, t: empty,
        f_y=lambda y, z, t: np.array([[-rate]]),
        f_z=lambda y, z, t: np.zeros((1, 0)),
        g_y=lambda y, z, t: np.zeros((0, 1)),
        g_z=lambda y, z, t: np.zeros((0, 0)),
        y0=np.array([float(y0)]), z0=empty.copy(),
        exact=lambda t: (np.array([y0 * np.exp(-rate * t)]), empty))


def linear_system(L: np.ndarray, y0: np.ndarray) -> SppProblem:
    """y' = L y (no z-component); the real embedding of y' = lambda*y uses
    L = [[a, -b], [b, a]] for lambda = a + i b."""
    L = np.array(L, dtype=float)
    y0 = np.array(y0, dtype=float)
    n = L.shape[0]
    empty = np.zeros(0)
    return SppProblem(
        name="linear", dim_y=n, dim_z=0, eps=1.0,
        f=lambda y, z, t: L @ y,
        g=lambda y, z, t: empty,
        f_y=lambda y, z, t: L,
        f_z=lambda y, z, t: np.zeros((n, 0)),
        g_y=lambda y, z, t: np.zeros((0, n)),
        g_z=lambda y, z, t: np.zeros((0, 0)),
        y0=y0, z0=empty.copy(), exact=None)


def reduced_resolvent(problem: SppProblem, y: Vec, t: float = 0.0,
                      z_guess: Optional[Vec] = None,
                      tol: float = 1e-12, max_iter: int = 50) -> Vec:
    """Solve g(y, z, t) = 0 for z by damped Newton (the map z = G(y) of the
    reduced index-1 DAE). Requires g_z invertible along the iteration."""
    z = np.array(z_guess if z_guess is not None else problem.z0, dtype=float)
    res = problem.g(y, z, t)
    norm = float(np.max(np.abs(res))) if res.size else 0.0
    for _ in range(max_iter):
        if norm <= tol:
            return z
        step = np.linalg.solve(problem.g_z(y, z, t), -res)
        lam = 1.0
        while lam >= 1e-4:
            z_new = z + lam * step
            res_new = problem.g(y, z_new, t)
            norm_new = float(np.max(np.abs(res_new)))
            if norm_new < norm or norm_new <= tol:
                z, res, norm = z_new, res_new, norm_new
                break
            lam *= 0.5
        else:
            raise ResolventError(norm, max_iter)
    if norm <= tol:
        return z
    raise ResolventError(norm, max_iter)


PROBLEMS: dict[str, Callable[[float], SppProblem]] = {
    "scalar": scalar_linear,
    "vdp": van_der_pol,
}
