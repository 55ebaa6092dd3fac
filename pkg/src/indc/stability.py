"""Linear stability of deferred-correction schemes on y' = lambda*y.

The amplification factor R(z), z = lambda*H, is computed by running the
scheme's own recursion on the scalar test equation (linear solves only):
the prediction contributes R^(0)_m = R_base(z/M)^m, and each correction
loop propagates node values through the stage system

  r_i = R_m + (z/M) * [S^c_i . Rprev + sum_j a_ij (r_j - P^c_j . Rprev)]

vectorized over arbitrarily many z samples at once.

A diagnostic mode includes the left-most quadrature node in the stencil;
it exists only to demonstrate the loss of L-stability in that layout and is
not a supported solve configuration.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quadrature import build_grid
from .solver import IndcScheme
from .tableau import PoleError

__all__ = ["StabilityScan", "amplification", "amplification_many",
           "scan_region", "l_stability_probe"]

#: |R(z)| <= 1 + this slack counts as stable when sampling
A_STABLE_SLACK = 1e-9

#: probe points along the negative real axis for the L-stability check
L_PROBE_POINTS = (-1e2, -1e4, -1e6, -1e8)


def amplification_many(scheme: IndcScheme, zs: np.ndarray,
                       include_left: bool = False) -> np.ndarray:
    """R(z) for every z in ``zs`` (vectorized). Poles yield inf."""
    zs = np.asarray(zs, dtype=complex).ravel()
    with np.errstate(invalid="ignore", over="ignore"):
        return _amplification_impl(scheme, zs, include_left)


def _amplification_impl(scheme: IndcScheme, zs: np.ndarray,
                        include_left: bool) -> np.ndarray:
    M = scheme.M
    grid = build_grid(M, include_left=include_left)
    n = grid.n_stencil
    w = zs / M  # per-substep argument
    npts = len(zs)

    # node amplification values on the stencil, per z sample
    R = np.empty((npts, n), dtype=complex)

    # prediction: R_m = R_base(z/M)^m; with the left endpoint included the
    # stencil additionally carries R_0 = 1
    tab0 = scheme.methods[0]
    s0 = tab0.s
    mats = np.eye(s0) - w[:, None, None] * tab0.A
    stage = _solve_batch(mats, np.ones((npts, s0), dtype=complex))
    r_base = 1.0 + w * (stage @ tab0.b)
    first = 1 if include_left else 0
    if include_left:
        R[:, 0] = 1.0
    acc = np.ones(npts, dtype=complex)
    for m in range(M):
        acc = acc * r_base
        R[:, first + m] = acc

    for k in range(1, scheme.K + 1):
        tab = scheme.methods[k]
        s = tab.s
        Sc, Pc = grid.stage_matrices(tab)
        A, b = tab.A, tab.b
        S = grid.S
        Rprev = R.copy()
        Rm = np.ones(npts, dtype=complex)
        mats = np.eye(s) - w[:, None, None] * A
        Rnew = np.empty_like(R)
        if include_left:
            Rnew[:, 0] = 1.0
        for m in range(M):
            p_interp = Rprev @ Pc[m].T            # (npts, s)
            rhs = (Rm[:, None]
                   + w[:, None] * (Rprev @ Sc[m].T)
                   - w[:, None] * (p_interp @ A.T))
            stages = _solve_batch(mats, rhs)
            Rm = (Rm + w * (Rprev @ S[m])
                  + w * ((stages - p_interp) @ b))
            Rnew[:, first + m] = Rm
        R = Rnew

    return R[:, -1]


def _solve_batch(mats: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched solve; singular samples come back as inf instead of raising."""
    try:
        return np.linalg.solve(mats, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(rhs)
        for i in range(mats.shape[0]):
            try:
                out[i] = np.linalg.solve(mats[i], rhs[i])
            except np.linalg.LinAlgError:
                out[i] = np.inf
        return out


def amplification(scheme: IndcScheme, z: complex,
                  include_left: bool = False) -> complex:
    """Amplification factor at a single z. Raises PoleError at poles."""
    r = amplification_many(scheme, np.array([z]), include_left)[0]
    if not (np.isfinite(r.real) and np.isfinite(r.imag)):
        raise PoleError(z)
    return complex(r)


@dataclass
class StabilityScan:
    """Sampled |R| field with derived boundary polylines and flags."""

    re: np.ndarray            # (n,) real-axis samples
    im: np.ndarray            # (n,) imaginary-axis samples
    absR: np.ndarray          # (n, n) |R| with rows indexed by im
    boundaries: list = field(default_factory=list)  # |R| = 1 polylines
    a_stable_sampled: bool = False
    l_stable_sampled: bool = False

    @property
    def stable_area(self) -> float:
        """Sampled area of {|R| <= 1} inside the scan window."""
        cell = ((self.re[-1] - self.re[0]) / (len(self.re) - 1)
                * (self.im[-1] - self.im[0]) / (len(self.im) - 1))
        return float(np.count_nonzero(self.absR <= 1.0 + A_STABLE_SLACK) * cell)


def scan_region(scheme: IndcScheme, window=((-20.0, 5.0), (-15.0, 15.0)),
                n: int = 400, include_left: bool = False) -> StabilityScan:
    """Evaluate |R| on an n x n grid over ``window`` = ((re_a, re_b), (im_a, im_b))."""
    if n < 16:
        raise ValueError("resolution n must be at least 16")
    (re_a, re_b), (im_a, im_b) = window
    re = np.linspace(re_a, re_b, n)
    im = np.linspace(im_a, im_b, n)
    zz = re[None, :] + 1j * im[:, None]
    vals = amplification_many(scheme, zz.ravel(), include_left).reshape(n, n)
    absR = np.abs(vals)
    absR[~np.isfinite(absR)] = np.inf

    scan = StabilityScan(re=re, im=im, absR=absR)
    lhp = zz.real < 0
    scan.a_stable_sampled = bool(np.all(absR[lhp] <= 1.0 + A_STABLE_SLACK))
    scan.l_stable_sampled = l_stability_probe(scheme, include_left)["pass"]
    scan.boundaries = _unit_level_set(re, im, absR)
    return scan


def _unit_level_set(re, im, absR) -> list[np.ndarray]:
    """|R| = 1 contours as (x, y) polylines, via marching squares on log|R|."""
    from skimage.measure import find_contours

    with np.errstate(divide="ignore"):
        fld = np.log(np.clip(absR, 1e-300, 1e300))
    polylines = []
    for c in find_contours(fld, 0.0):
        # contour coordinates are fractional (row, col) indices
        x = np.interp(c[:, 1], np.arange(len(re)), re)
        y = np.interp(c[:, 0], np.arange(len(im)), im)
        polylines.append(np.column_stack([x, y]))
    return polylines


def l_stability_probe(scheme: IndcScheme, include_left: bool = False) -> dict:
    """Sample |R| along the negative real axis toward -inf.

    Passes iff the sequence decreases and the final value (at z = -1e8) is
    at most 1e-5.
    """
    vals = np.abs(amplification_many(
        scheme, np.array(L_PROBE_POINTS, dtype=complex), include_left))
    decreasing = bool(np.all(np.diff(vals) < 0))
    ok = decreasing and bool(vals[-1] <= 1e-5)
    return {"values": vals, "limit_estimate": float(vals[-1]), "pass": ok}
