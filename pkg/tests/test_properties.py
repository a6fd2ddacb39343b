from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from maslovkit.index import bott_check, mean_index_bracket, omega_nullity, splitting_number
from maslovkit.iteration import IterationFormula, hyperbolic_half, symmetric_iteration
from maslovkit.resonance import Interval, TypeData, euler_hat, validate_type_numbers
from maslovkit.symplectic import random_symplectic, symplectic_defect
from maslovkit.synthetic import normal_form_orbit_path, random_hamiltonian_path

seeds = st.integers(min_value=0, max_value=2**32 - 1)
thetas = st.fractions(min_value=Fraction(1, 40), max_value=Fraction(79, 40), max_denominator=40)


def _formula(case, i, b, theta):
    if case == "case2":
        return IterationFormula(case, i, theta_over_pi=theta)
    if case in ("case1", "case3"):
        return IterationFormula(case, i, b=b if case == "case1" else abs(b) % 2)
    return IterationFormula(case, i)


formulas = st.builds(_formula, st.sampled_from(["hyperbolic", "case1", "case2", "case3", "case4"]),
                     st.integers(-4, 6), st.sampled_from([-1, 0, 1]), thetas)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_bott_formula_on_random_paths(seed):
    path = random_hamiltonian_path(np.random.default_rng(seed))
    assert bott_check(path).holds


@settings(max_examples=8, deadline=None)
@given(seeds, st.sampled_from(["case1", "case2", "case3", "hyperbolic"]))
def test_splitting_numbers_bounded_by_nullity(seed, case):
    rng = np.random.default_rng(seed)
    params = {"case1": {"b": int(rng.integers(-1, 2))}, "case2": {"theta": float(rng.uniform(0.3, 6.0))},
              "case3": {"b": int(rng.integers(0, 2))}, "hyperbolic": {"lam": 2.5}}[case]
    path = normal_form_orbit_path(case, conjugate=random_symplectic(2, rng), **params)
    for omega in (1.0, -1.0):
        s_plus, s_minus = splitting_number(path, omega)
        nu = omega_nullity(path.endpoint, omega)
        # each one-sided jump is bounded by the nullity; their sum is not
        # (N1(1, 1) has nullity 1 and splitting numbers (1, 1))
        assert 0 <= s_plus <= nu and 0 <= s_minus <= nu


@given(formulas, st.integers(1, 200))
def test_iterates_stay_near_the_mean_line(f, m):
    assert abs(f.index(m) - m * float(f.mean)) <= 4


@given(formulas)
def test_bracket_contains_exact_mean(f):
    lo, hi = mean_index_bracket({m: f.index(m) for m in range(1, 33)}, 2)
    assert lo <= f.mean <= hi


@given(st.integers(-5, 5), st.integers(0, 30))
def test_symmetric_odd_iterates_share_parity(i_psi, k):
    table = symmetric_iteration(hyperbolic_half(i_psi), 2 * k + 1)
    assert all((v - table[1]) % 2 == 0 for v in table.values())


@given(formulas)
def test_euler_hat_is_bounded(f):
    if all(f.nullity(m) == 1 for m in (1, 2)):
        chi = euler_hat(f.index(1), (f.index(2) - f.index(1)) % 2 == 0)
        assert abs(chi) <= 1


@given(st.integers(1, 4), st.sampled_from([0, -1]))
def test_single_end_type_number_is_valid(nu, end):
    k = [0] * nu
    k[end] = 1
    assert validate_type_numbers(k, nu) == []


@given(st.integers(1, 6), st.integers(-4, 4))
def test_nondegenerate_type_data_matches_closed_form(k, i0):
    indices = {m: i0 + 2 * (m - 1) for m in range(1, k + 1)}
    data = TypeData(k, indices, {m: 1 for m in indices})
    assert euler_hat(i0, data=data) == euler_hat(i0, True)


@given(st.fractions(-10, 10), st.fractions(0, 5), st.fractions(-10, 10), st.fractions(0, 5),
       st.fractions(0, 1), st.fractions(0, 1))
def test_interval_sum_contains_sums(a, wa, b, wb, s, t):
    x, y = Interval(a, a + wa), Interval(b, b + wb)
    z = x + y
    assert z.lo <= (a + s * wa) + (b + t * wb) <= z.hi


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_random_symplectic_is_symplectic(seed):
    assert symplectic_defect(random_symplectic(2, np.random.default_rng(seed))) < 1e-10
