"""Single-tableau reformulation of the backward-Euler deferred-correction step.

One step with M nodes and K corrections, all using backward Euler, is
algebraically one implicit Runge-Kutta step with s = M*(K+1) stages. With
T the M x M lower-triangular matrix of 1/M entries and Stilde the
cumulative integration matrix Stilde_ij = integral_0^{i/M} alpha_j(s) ds,
the coefficient matrix is block lower-bidiagonal:

    A = [[T            ],        P = Stilde - T
         [P  T         ],
         [   P  T      ],
         ...            ]

with abscissae (1..M)/M repeated per block and b equal to the last row of A.
The printed one-correction case has b1 = last row of P, b2 = (1/M) 1. The
result is stiffly accurate with invertible (triangular, positive-diagonal) A.

K > 1 follows the same pattern: each loop couples only to the previous one,
and is validated via step-for-step equivalence with the loop implementation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import build_grid
from .solver import IndcScheme, irk_step, solve
from .tableau import ButcherTableau, builtin

__all__ = ["ComposedTableau", "compose_indc_be", "step_equivalence"]


@dataclass(frozen=True)
class ComposedTableau:
    """The composed tableau plus which block-row belongs to which loop."""

    tableau: ButcherTableau
    M: int
    K: int

    def loop_of_stage(self, i: int) -> int:
        return i // self.M

    def node_of_stage(self, i: int) -> int:
        return i % self.M + 1


def cumulative_integration_matrix(M: int) -> np.ndarray:
    """Stilde_ij = integral_0^{i/M} alpha_j(s) ds on the unit step."""
    grid = build_grid(M)
    # grid.S rows are (1/h)*substep integrals; undo the scaling and accumulate
    return np.cumsum(grid.S * grid.h, axis=0)


def compose_indc_be(M: int, K: int) -> ComposedTableau:
    """Butcher tableau of the M-node, K-correction backward-Euler scheme."""
    if M < 1 or K < 1:
        raise ValueError("M >= 1 and K >= 1 required")
    T = np.tril(np.ones((M, M))) / M
    P = cumulative_integration_matrix(M) - T
    s = M * (K + 1)
    A = np.zeros((s, s))
    for k in range(K + 1):
        lo = k * M
        A[lo:lo + M, lo:lo + M] = T
        if k > 0:
            A[lo:lo + M, lo - M:lo] = P
    b = A[-1].copy()
    c = np.tile(np.arange(1, M + 1) / M, K + 1)
    tab = ButcherTableau(name=f"InDC-BE-{M}-{K}", A=A, b=b, c=c, p=None, q=None)
    return ComposedTableau(tableau=tab, M=M, K=K)


def step_equivalence(problem, M: int, K: int, H: float, t0: float = 0.0,
                     y_in=None, z_in=None, tol_abs: float = 1e-13,
                     tol_rel: float = 1e-12) -> float:
    """Max deviation between one composed-IRK step and one loop-solver step.

    Both paths start from the problem's initial data (or the supplied
    state) and advance by H; the return value is the max-norm difference
    over the (y, z) outputs.
    """
    y_in = np.array(problem.y0 if y_in is None else y_in, dtype=float)
    z_in = np.array(problem.z0 if z_in is None else z_in, dtype=float)
    composed = compose_indc_be(M, K)
    y_a, z_a = irk_step(problem, composed.tableau, y_in, z_in, t0, H,
                        tol_abs=tol_abs, tol_rel=tol_rel)
    scheme = IndcScheme(M=M, methods=[builtin("BE")] * (K + 1),
                        newton_tol_abs=tol_abs, newton_tol_rel=tol_rel)
    y_b, z_b = solve(problem, scheme, H, 1, t0=t0, y0=y_in, z0=z_in)
    dev = 0.0
    if y_a.size:
        dev = max(dev, float(np.max(np.abs(y_a - y_b))))
    if z_a.size:
        dev = max(dev, float(np.max(np.abs(z_a - z_b))))
    return dev
