"""Uniform deferred-correction grid and its integration/interpolation matrices.

The grid lives on the unit step [0, 1] split into M substeps of size
h = 1/M. The interpolation stencil is the M nodes tau_m = m/M for
m = 1..M (left endpoint excluded); a diagnostic mode that includes tau_0
exists only for stability experiments.

Matrices:
  S      (M x n): row m maps node samples of a function to
                  (1/h) * integral of its interpolant over [tau_m, tau_{m+1}]
  S^c    (M x s x n): stage variant, integrating over [tau_m, tau_m + c_i h]
  P^c    (M x s x n): interpolant evaluated at tau_m + c_i h

All matrices depend only on (M, c), never on the physical step size, and are
cached. Instances are immutable after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tableau import ButcherTableau

__all__ = ["IndcGrid", "build_grid", "MAX_NODES"]

#: uniform-node Lagrange interpolation degrades quickly past this point
MAX_NODES = 12


def lagrange_basis_at(nodes: np.ndarray, x: float) -> np.ndarray:
    """Values of all Lagrange cardinal polynomials for ``nodes`` at ``x``."""
    n = len(nodes)
    out = np.empty(n)
    for k in range(n):
        num = 1.0
        for j in range(n):
            if j != k:
                num *= (x - nodes[j]) / (nodes[k] - nodes[j])
        out[k] = num
    return out


def lagrange_integrals(nodes: np.ndarray, a: float, b: float) -> np.ndarray:
    """integral_a^b alpha_k(s) ds for every cardinal polynomial alpha_k.

    Gauss-Legendre with ceil(n/2) points is exact for degree n-1.
    """
    n = len(nodes)
    npts = max(1, math.ceil(n / 2))
    x, w = np.polynomial.legendre.leggauss(npts)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid + half * x
    vals = np.array([lagrange_basis_at(nodes, p) for p in pts])  # (npts, n)
    return half * (w @ vals)


@dataclass
class IndcGrid:
    """Quadrature grid for one step, normalized to [0, 1]."""

    M: int
    include_left: bool = False
    nodes: np.ndarray = field(init=False)
    h: float = field(init=False)
    S: np.ndarray = field(init=False)
    _stage_cache: dict = field(init=False, default_factory=dict, repr=False)

    def __post_init__(self):
        M = self.M
        if not (1 <= M <= MAX_NODES):
            raise ValueError(f"M must be in [1, {MAX_NODES}], got {M}")
        self.h = 1.0 / M
        start = 0 if self.include_left else 1
        self.nodes = np.array([m / M for m in range(start, M + 1)])
        S = np.empty((M, len(self.nodes)))
        for m in range(M):
            S[m] = lagrange_integrals(self.nodes, m / M, (m + 1) / M) / self.h
        S.setflags(write=False)
        self.S = S

    @property
    def n_stencil(self) -> int:
        return len(self.nodes)

    def stage_matrices(self, tab: ButcherTableau) -> tuple[np.ndarray, np.ndarray]:
        """(S^c, P^c) for this grid and the abscissae of ``tab``.

        Shapes are (M, s, n_stencil). Cached per abscissae vector.
        """
        key = tuple(tab.c)
        hit = self._stage_cache.get(key)
        if hit is not None:
            return hit
        M, n, s = self.M, self.n_stencil, tab.s
        Sc = np.empty((M, s, n))
        Pc = np.empty((M, s, n))
        for m in range(M):
            for i, ci in enumerate(tab.c):
                x = (m + ci) / M
                Sc[m, i] = lagrange_integrals(self.nodes, m / M, x) / self.h
                Pc[m, i] = lagrange_basis_at(self.nodes, x)
        Sc.setflags(write=False)
        Pc.setflags(write=False)
        self._stage_cache[key] = (Sc, Pc)
        return Sc, Pc

    def integration_row(self, tab: ButcherTableau, m: int, i: int) -> np.ndarray:
        """Row mapping node samples to (1/h) * integral over [tau_m, tau_m + c_i h].

        ``m`` is the substep index (0 <= m < M), ``i`` the stage index
        (0 <= i < s).
        """
        self._check(tab, m, i)
        return self.stage_matrices(tab)[0][m, i]

    def interpolation_row(self, tab: ButcherTableau, m: int, i: int) -> np.ndarray:
        """Row evaluating the node interpolant at tau_m + c_i h."""
        self._check(tab, m, i)
        return self.stage_matrices(tab)[1][m, i]

    def _check(self, tab: ButcherTableau, m: int, i: int):
        if not (0 <= m < self.M):
            raise IndexError(f"substep index {m} out of range [0, {self.M})")
        if not (0 <= i < tab.s):
            raise IndexError(f"stage index {i} out of range [0, {tab.s})")


_GRIDS: dict[tuple[int, bool], IndcGrid] = {}


def build_grid(M: int, include_left: bool = False) -> IndcGrid:
    """Shared grid instance for M substeps (grids are immutable)."""
    key = (M, include_left)
    if key not in _GRIDS:
        _GRIDS[key] = IndcGrid(M, include_left)
    return _GRIDS[key]
