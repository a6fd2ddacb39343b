from fractions import Fraction

import pytest
import sympy as sp

from oracles import ellipsoid_iterate
from maslovkit.errors import (InvalidTypeNumbers, SignAmbiguous, TruncationTooTight,
                              UnboundedContribution)
from maslovkit.iteration import IterationFormula
from maslovkit.resonance import (Interval, MorseSeries, OrbitInvariants, SeriesOrbit, TypeData,
                                 euler_hat, euler_hat_symmetric, forced_euler_value,
                                 identity_sums, morse_inequality_check, morse_series,
                                 series_orbit_from_formula, validate_type_numbers)


def test_euler_hat_nondegenerate():
    assert euler_hat(-1, True) == -1
    assert euler_hat(2, False) == Fraction(1, 2)
    assert euler_hat(3, False) == Fraction(-1, 2)
    with pytest.raises(ValueError):
        euler_hat(0)


def test_euler_hat_degenerate_period_three():
    # elliptic theta = 2 pi / 3, i(y) = -2: indices -2, -2, -2 and nullities 1, 1, 3
    data = TypeData(3, {1: -2, 2: -2, 3: -2}, {1: 1, 2: 1, 3: 3}, {3: [0, 1, 0]})
    # (+1) + (+1) + (-1)^(-2 + 1) over K = 3
    assert euler_hat(-2, data=data) == Fraction(1, 3)


def test_euler_hat_degenerate_needs_type_numbers():
    data = TypeData(3, {1: -2, 2: -2, 3: -2}, {1: 1, 2: 1, 3: 3})
    with pytest.raises(InvalidTypeNumbers):
        euler_hat(-2, data=data)


def test_euler_hat_symmetric():
    assert euler_hat_symmetric(0) == 1
    assert euler_hat_symmetric(3) == -1
    data = TypeData(4, {1: 0, 3: 4}, {1: 1, 3: 3}, {3: [0, 0, 1]}, symmetric=True)
    # 2 ((+1) + (-1)^(4 + 2)) / 4
    assert euler_hat_symmetric(0, data=data) == 1


def test_validate_type_numbers():
    assert validate_type_numbers([0, 1, 0], 3) == []
    assert any("rule (i)" in v for v in validate_type_numbers([1, 1, 0], 3))
    assert validate_type_numbers([1], 1) == []
    assert validate_type_numbers([0, 0, 1], 3) == []
    assert any("support" in v for v in validate_type_numbers([0, 0, 0, 1], 3))
    assert validate_type_numbers([-1], 1)


def test_interval_arithmetic():
    a = Interval(Fraction(1), Fraction(2))
    assert (a + a).lo == 2 and (a + a).hi == 4
    r = a.reciprocal()
    assert (r.lo, r.hi) == (Fraction(1, 2), Fraction(1))
    assert a.halve().hi == 1
    with pytest.raises(SignAmbiguous):
        Interval(Fraction(-1), Fraction(1)).reciprocal()


def _sqrt2_invariants():
    return [OrbitInvariants("plane-1", Fraction(3), Fraction(1), True, chi_bar_hat=Fraction(1)),
            OrbitInvariants("plane-2", Fraction(6), Fraction(1), True, chi_bar_hat=Fraction(1))]


def test_identity_sums_sqrt2_exact():
    reports = {r.identity: r for r in identity_sums(_sqrt2_invariants(), complete=True)}
    assert reports["periodic_positive"].value == Fraction(1, 2)
    assert reports["periodic_positive"].residual == 0
    assert reports["symmetric_positive"].value == 1
    assert reports["symmetric_positive"].residual == 0
    assert reports["periodic_negative"].verdict == "PASS"
    assert "empty sum" in reports["periodic_negative"].notes
    assert all(r.passed for r in reports.values())


def test_identity_sums_irrational_exact():
    rho = 1 / sp.sqrt(6)
    orbits = [OrbitInvariants("a", 2 * (1 + rho), Fraction(1), True, chi_bar_hat=Fraction(1)),
              OrbitInvariants("b", 2 * (1 + 1 / rho), Fraction(1), True, chi_bar_hat=Fraction(1))]
    reports = identity_sums(orbits, complete=True)
    assert all(r.passed and r.mode == "exact" and r.residual == 0 for r in reports)


def test_identity_sums_bracketed():
    orbits = [OrbitInvariants("a", Interval(Fraction(47, 16), Fraction(49, 16)), Fraction(1)),
              OrbitInvariants("b", Interval(Fraction(95, 16), Fraction(97, 16)), Fraction(1))]
    (pos, neg) = identity_sums(orbits)
    assert pos.mode == "bracket"
    assert abs(pos.residual) <= pos.tolerance <= Fraction(1, 8)
    assert pos.verdict == "PASS"


def test_identity_sums_detect_a_wrong_value():
    orbits = _sqrt2_invariants()
    orbits[1].chi_hat = Fraction(-1)
    assert identity_sums(orbits)[0].verdict == "FAIL"


def test_forced_value_contradiction():
    known = [OrbitInvariants("y2", Fraction(2), Fraction(-1), True, chi_bar_hat=Fraction(1))]
    unknown = OrbitInvariants("y1", Fraction(3), None, True)
    rep = forced_euler_value(known, unknown)
    assert rep.forced == 0
    assert rep.verdict == "FAIL"


def test_hyperbolic_morse_series():
    orb = series_orbit_from_formula(IterationFormula("hyperbolic", -1), label="y")
    ms = morse_series([orb], (-8, 8))
    assert ms.coeffs == {h: int(h >= -1 and h % 2 == 1) for h in range(-8, 9)}


def _sqrt2_series_oracle(lo, hi):
    # plane-1: k_0 = 1 on every iterate; plane-2: k_2 = 1 on every iterate
    out = {h: 0 for h in range(lo, hi + 1)}
    for m in range(1, 20):
        for rho, level in ((sp.Rational(1, 2), 0), (2, 2)):
            h = ellipsoid_iterate(rho, m)[0] + level
            if lo <= h <= hi:
                out[h] += 1
    return out


def test_sqrt2_morse_series_frozen():
    f1 = IterationFormula("case1", 0, b=0)
    f2 = IterationFormula("case3", 2, b=0)
    series = [series_orbit_from_formula(f1, {2: [1, 0, 0]}, "plane-1"),
              series_orbit_from_formula(f2, {1: [0, 0, 1]}, "plane-2")]
    ms = morse_series(series, (-8, 8))
    frozen = {h: int(h >= 0 and h % 2 == 0) for h in range(-8, 9)}
    assert ms.coeffs == frozen == _sqrt2_series_oracle(-8, 8)
    check = morse_inequality_check(ms)
    assert check.verdict == "PASS"
    assert all(v >= 0 for h, v in check.u.items() if check.interior[0] <= h <= check.interior[1])


def test_morse_check_flags_missing_degree():
    ms = MorseSeries((-8, 8), {h: 0 for h in range(-8, 9)} | {-2: 1}, False, False)
    check = morse_inequality_check(ms)
    assert check.verdict == "FAIL"
    assert any("m_-1 = 0 < m_-2 = 1" in v for v in check.violations)


def test_morse_check_empty_series():
    ms = morse_series([], (-8, 8))
    assert all(v == 0 for v in ms.coeffs.values())
    check = morse_inequality_check(ms)
    assert check.verdict == "PASS" and check.notes


def test_morse_check_window_too_tight():
    f = IterationFormula("case2", 0, theta_over_pi=sp.sqrt(2) - 1)
    ms = morse_series([series_orbit_from_formula(f)], (-2, 2))
    with pytest.raises(TruncationTooTight):
        morse_inequality_check(ms)


def test_zero_mean_orbit_is_unbounded():
    orb = SeriesOrbit("z", lambda m: 0, 0.0, lambda m: [1])
    with pytest.raises(UnboundedContribution):
        morse_series([orb], (-8, 8))
