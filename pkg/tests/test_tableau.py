"""Butcher tableau container, predicates, stability function, serialization."""
import math

import numpy as np
import pytest

from indc.tableau import (ButcherTableau, PoleError, builtin, builtin_names,
                          tableau_from_json, tableau_to_json)

GAMMA = 1.0 - math.sqrt(2.0) / 2.0


def test_builtin_names_complete():
    assert builtin_names() == [
        "BE", "DIRK2-NSA", "DIRK2-SA", "LobattoIIIA2", "RadauIIA3"]


def test_builtin_lookup_aliases():
    assert builtin("be").name == "BE"
    assert builtin("Euler").name == "BE"
    assert builtin("dirk2sa").name == "DIRK2-SA"
    assert builtin("midpoint").name == "DIRK2-NSA"
    assert builtin("trapezoidal").name == "LobattoIIIA2"
    assert builtin("radau3").name == "RadauIIA3"
    with pytest.raises(KeyError):
        builtin("nope")


def test_backward_euler_entries():
    t = builtin("BE")
    assert t.s == 1
    assert t.A[0, 0] == 1.0 and t.b[0] == 1.0 and t.c[0] == 1.0
    assert (t.p, t.q) == (1, 1)
    assert t.is_stiffly_accurate() and t.has_invertible_A()


def test_dirk2_sa_entries():
    t = builtin("DIRK2-SA")
    assert np.allclose(t.A, [[GAMMA, 0.0], [1.0 - GAMMA, GAMMA]])
    assert np.allclose(t.b, [1.0 - GAMMA, GAMMA])
    assert np.allclose(t.c, [GAMMA, 1.0])
    assert (t.p, t.q) == (2, 1)
    assert t.is_stiffly_accurate() and t.has_invertible_A()


def test_dirk2_nsa_entries():
    t = builtin("DIRK2-NSA")
    assert t.s == 1
    assert t.A[0, 0] == 0.5 and t.b[0] == 1.0 and t.c[0] == 0.5
    assert not t.is_stiffly_accurate()
    assert t.has_invertible_A()


def test_lobatto2_entries():
    t = builtin("LobattoIIIA2")
    assert np.allclose(t.A, [[0.0, 0.0], [0.5, 0.5]])
    assert np.allclose(t.b, [0.5, 0.5])
    assert np.allclose(t.c, [0.0, 1.0])
    assert t.is_stiffly_accurate()
    assert not t.has_invertible_A()  # first row of A vanishes


def test_radau3_entries():
    t = builtin("RadauIIA3")
    assert np.allclose(t.A, [[5 / 12, -1 / 12], [3 / 4, 1 / 4]])
    assert np.allclose(t.b, [3 / 4, 1 / 4])
    assert np.allclose(t.c, [1 / 3, 1.0])
    assert (t.p, t.q) == (3, 2)
    assert t.is_stiffly_accurate() and t.has_invertible_A()


def test_row_sums_match_abscissae():
    for name in builtin_names():
        assert builtin(name).row_sum_defect <= 1e-14, name


def test_validation_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ButcherTableau("bad", np.zeros((2, 3)), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        ButcherTableau("bad", np.zeros((2, 2)), np.zeros(3), np.zeros(2))


def test_immutability():
    t = builtin("BE")
    with pytest.raises((ValueError, RuntimeError)):
        t.A[0, 0] = 2.0


def test_stability_function_be():
    t = builtin("BE")
    for z in (-1.0, -10.0, 0.5j, -3 + 4j):
        assert abs(t.stability_function(z) - 1.0 / (1.0 - z)) < 1e-14


def test_stability_function_dirk2_sa():
    t = builtin("DIRK2-SA")
    for z in (-0.7, -25.0, -1 + 2j):
        expect = (1.0 + (1.0 - 2.0 * GAMMA) * z) / (1.0 - GAMMA * z) ** 2
        assert abs(t.stability_function(z) - expect) < 1e-12


def test_stability_function_radau3():
    t = builtin("RadauIIA3")
    for z in (-0.3, -50.0, 2j):
        expect = (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0)
        assert abs(t.stability_function(z) - expect) < 1e-12


def test_stability_function_at_origin_is_one():
    for name in builtin_names():
        assert abs(builtin(name).stability_function(0.0) - 1.0) < 1e-14


def test_stability_function_pole():
    with pytest.raises(PoleError):
        builtin("BE").stability_function(1.0)


def test_l_stable_limits():
    # |R(z)| -> 0 along the negative real axis for the L-stable methods
    for name in ("BE", "DIRK2-SA", "RadauIIA3"):
        r = builtin(name).stability_function(-1e9)
        assert abs(r) < 1e-6, name
    # trapezoidal and midpoint go to -1 instead
    for name in ("LobattoIIIA2", "DIRK2-NSA"):
        r = builtin(name).stability_function(-1e9)
        assert abs(abs(r) - 1.0) < 1e-6, name


def test_json_round_trip():
    for name in builtin_names():
        t = builtin(name)
        back = tableau_from_json(tableau_to_json(t))
        assert back.name == t.name
        assert np.array_equal(back.A, t.A)
        assert np.array_equal(back.b, t.b)
        assert np.array_equal(back.c, t.c)
        assert (back.p, back.q) == (t.p, t.q)
