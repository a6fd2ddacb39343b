from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from oracles import case2_index, ellipsoid_iterate_bar, hyperbolic_index
from maslovkit.errors import MissingSplittingNumber, NoUnitBlock
from maslovkit.index import index_record, omega_index, splitting_number
from maslovkit.iteration import (IterationFormula, find_index_jump, half_formula_from_form,
                                 hyperbolic_half, iteration_sequence, recognize_half_form,
                                 recognize_normal_form, symmetric_iteration, symmetric_mean)
from maslovkit.orbits import ellipsoid_orbits
from maslovkit.surface import ellipsoid
from maslovkit.symplectic import diamond, n1, random_symplectic, rot, symplectic_inverse
from maslovkit.synthetic import hyperbolic_symmetric_orbit, normal_form_orbit_path


def _hidden(m, seed=0):
    p = random_symplectic(2, np.random.default_rng(seed))
    return symplectic_inverse(p) @ m @ p


def test_recognize_elliptic():
    m = _hidden(diamond(n1(1, 1), rot(2 * np.pi / 5)))
    nf = recognize_normal_form(m)
    assert nf.case == "case2"
    assert nf.theta_over_pi == Fraction(2, 5)
    assert nf.witness_residual(m) < 1e-6


def test_recognize_minus_jordan_block():
    nf = recognize_normal_form(_hidden(diamond(n1(1, 1), n1(-1, -1)), 4))
    assert (nf.case, nf.b) == ("case1", -1)


@pytest.mark.parametrize("block,case,b", [
    (n1(-1, 1), "case1", 1), (n1(-1, 0), "case1", 0), (n1(1, 1), "case3", 1),
    (n1(1, 0), "case3", 0), (n1(1, -1), "case4", None), (np.diag([3.0, 1 / 3]), "hyperbolic", None),
])
def test_recognize_all_cases(block, case, b):
    nf = recognize_normal_form(_hidden(diamond(n1(1, 1), block), 7))
    assert nf.case == case
    if b is not None:
        assert nf.b == b


def test_recognize_needs_unit_block():
    with pytest.raises(NoUnitBlock):
        recognize_normal_form(diamond(np.diag([2.0, 0.5]), np.diag([3.0, 1 / 3])))


def test_sqrt2_orbit1_is_a_minus_one_block():
    # theta = 2 pi r_1^2 / r_2^2 = pi: the transverse block is -I = N1(-1, 0)
    o1 = ellipsoid_orbits(ellipsoid([1, sp.sqrt(2)]))[0]
    nf = recognize_normal_form(o1.monodromy)
    assert (nf.case, nf.b) == ("case1", 0)


def test_hyperbolic_sequence():
    f = IterationFormula("hyperbolic", -1)
    assert [f.index(m) for m in range(1, 5)] == [-1, 1, 3, 5]
    assert f.mean == 2


def test_case2_sequence():
    f = IterationFormula("case2", -2, theta_over_pi=Fraction(2, 3))
    assert [f.index(m) for m in range(1, 7)] == [-2, -2, -2, 0, 0, 0]
    assert [f.nullity(m) for m in range(1, 7)] == [1, 1, 3, 1, 1, 3]
    assert f.period_k == 3
    assert f.mean == Fraction(2, 3)
    for t in (Fraction(1, 3), Fraction(7, 5), Fraction(2, 3)):
        for i in (-2, 0, 3):
            g = IterationFormula("case2", i, theta_over_pi=t)
            assert all(g.index(m) == case2_index(i, t, m) for m in range(1, 13))


def test_case3_sequence():
    f = IterationFormula("case3", -2, b=0)
    assert f.index(2) == 0
    assert f.mean == 2


def test_missing_splitting_number():
    with pytest.raises(MissingSplittingNumber):
        IterationFormula("hyperbolic", 0).splitting_plus()


CASES = [
    ("hyperbolic", {"lam": 2.0}), ("hyperbolic", {"lam": -2.0}),
    ("case1", {"b": 1}), ("case1", {"b": 0}), ("case1", {"b": -1}),
    ("case2", {"theta": 2 * np.pi / 3}), ("case2", {"theta": 0.9}), ("case2", {"theta": 4.0}),
    ("case3", {"b": 0}), ("case3", {"b": 1}), ("case4", {}),
    ("case2", {"theta": 0.9, "turns": 1}),
]


@pytest.mark.parametrize("case,params", CASES)
def test_formula_matches_engine_on_model_paths(case, params):
    rng = np.random.default_rng(len(case) + len(params))
    path = normal_form_orbit_path(case, conjugate=random_symplectic(2, rng), **params)
    theta = params.get("theta")
    exact = None
    if theta is not None and np.isclose(theta, 2 * np.pi / 3):
        exact = Fraction(2, 3)
    nf = recognize_normal_form(path.endpoint, exact)
    rec = index_record(path, 8)
    f = iteration_sequence(nf, rec.iterates[1][0])
    for m in range(1, 9):
        assert rec.iterates[m] == (f.index(m), f.nullity(m))
    s_plus, _ = splitting_number(path, 1.0)
    assert s_plus == f.splitting_plus()


def test_hyperbolic_half_formula():
    half = hyperbolic_half(1)
    assert symmetric_iteration(half, 1) == {1: 0}
    assert symmetric_mean(IterationFormula("hyperbolic", -1)) == 1
    full, half_path = hyperbolic_symmetric_orbit(np.random.default_rng(4))
    nf_half = recognize_half_form(half_path.endpoint)
    from_form = half_formula_from_form(nf_half, omega_index(half_path, 1.0))
    assert symmetric_iteration(from_form, 7) == symmetric_iteration(half, 7)


def test_symmetric_table_matches_engine_on_ellipsoid():
    for orbit in ellipsoid_orbits(ellipsoid([1, sp.sqrt(2)])):
        nf_half = recognize_half_form(orbit.half_monodromy)
        half = half_formula_from_form(nf_half, omega_index(orbit.half_path, 1.0))
        table = symmetric_iteration(half, 5)
        rec = index_record(orbit.path, 5, orbit.half_path)
        j = int(orbit.label[-1]) - 1
        rho = orbit.rotation_exact[1 - j]
        for m in (1, 3, 5):
            assert table[m] == rec.odd_iterates_bar[m][0] == ellipsoid_iterate_bar(rho, m)[0]


def test_symmetric_parity():
    for half in (hyperbolic_half(1), hyperbolic_half(-2)):
        table = symmetric_iteration(half, 21)
        assert all((v - table[1]) % 2 == 0 for v in table.values())


def test_jump_search_two_hyperbolic_orbits():
    fs = [IterationFormula("hyperbolic", 0, s_plus=1), IterationFormula("hyperbolic", 2, s_plus=1)]
    triples = find_index_jump(fs, 100)
    assert triples
    first = triples[0]
    assert (first.n, first.ms) == (15, (5, 3))
    for t in triples:
        for f, m in zip(fs, t.ms):
            maslov = hyperbolic_index(f.i_morse, 2 * m + 1) + 2
            assert maslov == 2 * t.n + f.maslov(1)


def test_jump_search_irrational_single_orbit():
    f = IterationFormula("case2", 0, theta_over_pi=sp.sqrt(2) - 1, s_plus=1)
    assert len(find_index_jump([f], 1000)) >= 3


def test_jump_search_empty():
    assert find_index_jump([], 1000) == []
