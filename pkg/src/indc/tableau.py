"""Butcher tableaus for implicit Runge-Kutta methods.

Provides the tableau container, classification predicates (stiff accuracy,
invertibility of A), the linear stability function, and the five built-in
methods used throughout the package: BE, DIRK2-SA, DIRK2-NSA, LobattoIIIA2
and RadauIIA3.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ButcherTableau",
    "PoleError",
    "builtin",
    "builtin_names",
    "tableau_to_json",
    "tableau_from_json",
]

#: condition-number threshold above which A is treated as numerically singular
COND_LIMIT = 1e12

#: per-entry tolerance for the stiffly-accurate row test (tableaus are entered
#: from exact rationals, so near-machine tolerance is appropriate)
SA_TOL = 1e-14


class PoleError(ArithmeticError):
    """Raised when the stability function is evaluated at a pole."""

    def __init__(self, z: complex):
        super().__init__(f"stability function has a pole at z = {z}")
        self.z = z


@dataclass(frozen=True)
class ButcherTableau:
    """An s-stage Runge-Kutta method in Butcher notation.

    ``p`` (classical order) and ``q`` (stage order) are stored metadata, not
    recomputed from order conditions; they may be None for derived tableaus.
    Instances are immutable and safe to share across threads.
    """

    name: str
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: int | None = None
    q: int | None = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float)
        c = np.array(self.c, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        s = A.shape[0]
        if b.shape != (s,) or c.shape != (s,):
            raise ValueError("b and c must be length-s vectors")
        A.setflags(write=False)
        b.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return self.A.shape[0]

    @property
    def row_sum_defect(self) -> float:
        """max_i |c_i - sum_j A_ij| (consistency relation)."""
        return float(np.max(np.abs(self.c - self.A.sum(axis=1))))

    def is_stiffly_accurate(self, tol: float = SA_TOL) -> bool:
        """True iff the last row of A equals b entrywise within ``tol``."""
        return bool(np.all(np.abs(self.A[-1] - self.b) <= tol))

    def has_invertible_A(self) -> bool:
        """True iff A is numerically nonsingular (condition estimate below
        ``COND_LIMIT``)."""
        if not np.all(np.isfinite(self.A)):
            return False
        cond = np.linalg.cond(self.A)
        return bool(np.isfinite(cond) and cond < COND_LIMIT)

    def stability_function(self, z: complex) -> complex:
        """R(z) = 1 + z b^T (I - Az)^{-1} 1.

        For stiffly accurate tableaus with invertible A this coincides with
        e_s^T (I - Az)^{-1} 1.
        """
        s = self.s
        m = np.eye(s) - z * self.A
        try:
            x = np.linalg.solve(m.astype(complex), np.ones(s, dtype=complex))
        except np.linalg.LinAlgError:
            raise PoleError(z) from None
        r = 1.0 + z * (self.b @ x)
        if not np.isfinite(r.real) or not np.isfinite(r.imag):
            raise PoleError(z)
        return complex(r)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "s": self.s,
            "A": [list(row) for row in self.A],
            "b": list(self.b),
            "c": list(self.c),
            "p": self.p,
            "q": self.q,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ButcherTableau":
        A = np.array(d["A"], dtype=float).reshape(d["s"], d["s"])
        return cls(name=d["name"], A=A, b=np.array(d["b"]), c=np.array(d["c"]),
                   p=d.get("p"), q=d.get("q"))


def tableau_to_json(t: ButcherTableau) -> str:
    """Serialize with full float precision (repr round-trips float64)."""
    return json.dumps(t.to_dict(), indent=2)


def tableau_from_json(text: str) -> ButcherTableau:
    return ButcherTableau.from_dict(json.loads(text))


def _make_builtins() -> dict[str, ButcherTableau]:
    gamma = 1.0 - math.sqrt(2.0) / 2.0
    return {
        "BE": ButcherTableau(
            "BE", np.array([[1.0]]), np.array([1.0]), np.array([1.0]), p=1, q=1),
        "DIRK2-SA": ButcherTableau(
            "DIRK2-SA",
            np.array([[gamma, 0.0], [1.0 - gamma, gamma]]),
            np.array([1.0 - gamma, gamma]),
            np.array([gamma, 1.0]),
            p=2, q=1),
        "DIRK2-NSA": ButcherTableau(
            "DIRK2-NSA", np.array([[0.5]]), np.array([1.0]), np.array([0.5]),
            p=2, q=1),
        "LobattoIIIA2": ButcherTableau(
            "LobattoIIIA2",
            np.array([[0.0, 0.0], [0.5, 0.5]]),
            np.array([0.5, 0.5]),
            np.array([0.0, 1.0]),
            p=2, q=1),
        "RadauIIA3": ButcherTableau(
            "RadauIIA3",
            np.array([[5.0 / 12.0, -1.0 / 12.0], [3.0 / 4.0, 1.0 / 4.0]]),
            np.array([3.0 / 4.0, 1.0 / 4.0]),
            np.array([1.0 / 3.0, 1.0]),
            p=3, q=2),
    }


_BUILTINS = _make_builtins()

_ALIASES = {
    "BE": "BE",
    "EULER": "BE",
    "DIRK2-SA": "DIRK2-SA",
    "DIRK2SA": "DIRK2-SA",
    "DIRK2-NSA": "DIRK2-NSA",
    "DIRK2NSA": "DIRK2-NSA",
    "MIDPOINT": "DIRK2-NSA",
    "LOBATTOIIIA2": "LobattoIIIA2",
    "LOBATTO2": "LobattoIIIA2",
    "TRAPEZOIDAL": "LobattoIIIA2",
    "RADAUIIA3": "RadauIIA3",
    "RADAU3": "RadauIIA3",
}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def builtin(name: str) -> ButcherTableau:
    """Look up a built-in method by name (case-insensitive, common aliases)."""
    key = _ALIASES.get(name.upper().strip())
    if key is None:
        raise KeyError(
            f"unknown method {name!r}; known methods: {', '.join(builtin_names())}")
    return _BUILTINS[key]
