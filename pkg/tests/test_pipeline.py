from fractions import Fraction

import pytest
import sympy as sp

from maslovkit.errors import InvalidTypeNumbers
from maslovkit.orbits import ellipsoid_orbits
from maslovkit.pipeline import (analyze_orbit, exact_ellipsoid_mean, exact_transverse_angle,
                                formula_from_record, invariants_from_record)
from maslovkit.surface import ellipsoid


@pytest.fixture(scope="module")
def sqrt2():
    return ellipsoid_orbits(ellipsoid([1, sp.sqrt(2)]))


def test_exact_ellipsoid_data(sqrt2):
    o1, o2 = sqrt2
    assert exact_ellipsoid_mean(o1) == 3
    assert exact_ellipsoid_mean(o2) == 6
    assert exact_transverse_angle(o1) == 1
    assert exact_transverse_angle(o2) == 0


def test_sqrt2_analysis(sqrt2):
    numbers = {"plane-1": {2: [1, 0, 0]}, "plane-2": {1: [0, 0, 1]}}
    for orbit, mean in zip(sqrt2, (3, 6)):
        res = analyze_orbit(orbit, 16, numbers[orbit.label])
        assert res.formula_matches_engine and res.symmetric_matches_engine
        assert res.exact.mean == mean
        assert res.exact.chi_hat == 1 and res.exact.chi_bar_hat == 1
        assert not res.bound_violations and res.bott.holds


def test_degenerate_orbit_without_type_numbers(sqrt2):
    with pytest.raises(InvalidTypeNumbers):
        analyze_orbit(sqrt2[1], 8)


def test_irrational_orbit_is_nondegenerate():
    orbit = ellipsoid_orbits(ellipsoid([1, 6 ** sp.Rational(1, 4)]))[0]
    res = analyze_orbit(orbit, 16)
    assert res.exact.nondegenerate
    assert sp.simplify(res.exact.mean - (2 + 2 / sp.sqrt(6))) == 0


def test_rational_ratio_is_eventually_degenerate():
    # r_1^2 / r_2^2 = 100/169: the 169th iterate is degenerate
    orbit = ellipsoid_orbits(ellipsoid([1, sp.Rational(13, 10)]))[0]
    with pytest.raises(InvalidTypeNumbers):
        analyze_orbit(orbit, 8)


def test_formula_records():
    f, half = formula_from_record({"case": "case2", "i1": -2, "theta_over_pi": {"num": 2, "den": 3}})
    assert f.mean == Fraction(2, 3) and half is None
    f, _ = formula_from_record({"case": "case2", "i1": 0, "theta_over_pi": "sqrt(2) - 1"})
    assert f.mean == 1 + sp.sqrt(2)
    with pytest.raises(ValueError):
        formula_from_record({"case": "case2", "i1": 0})
    with pytest.raises(ValueError):
        formula_from_record({"case": "hyperbolic", "i1": 0, "half": {"kind": "elliptic"}})
    inv, _, half = invariants_from_record({"case": "hyperbolic", "i1": -1,
                                           "half": {"kind": "hyperbolic", "i_psi": 1}})
    assert inv.chi_hat == -1 and inv.chi_bar_hat == 1 and inv.mean_bar == 1
