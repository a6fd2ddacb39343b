import numpy as np
import pytest
import sympy as sp

from maslovkit.errors import NoConvergence
from maslovkit.orbits import (StabilityKind, classify_stability, ellipsoid_orbits, rotation_ratios,
                              shoot_orbit)
from maslovkit.surface import ellipsoid, quartic_perturbation
from maslovkit.symplectic import diamond, n1, rot


def test_sphere_orbits_totally_degenerate():
    orbits = ellipsoid_orbits(ellipsoid([1, 1]))
    assert len(orbits) == 2
    for o in orbits:
        assert np.allclose(np.linalg.eigvals(o.monodromy), 1.0, atol=1e-4)
        assert classify_stability(o.monodromy).kind == StabilityKind.DEGENERATE


def test_sqrt2_orbit_rotation_numbers():
    s = ellipsoid([1, sp.sqrt(2)])
    o1, o2 = ellipsoid_orbits(s)
    assert o1.rotation_exact == (1, sp.Rational(1, 2))
    assert o2.rotation_exact == (2, 1)
    assert rotation_ratios(o1) == pytest.approx([0.5])
    lam = np.linalg.eigvals(o1.monodromy)
    # e^{+-i theta} with theta / 2 pi = 1/2
    assert np.sum(np.abs(lam - 1) < 1e-4) == 2
    assert np.sum(np.abs(lam + 1) < 1e-4) == 2
    assert o1.period == pytest.approx(2 * np.pi)
    assert o2.period == pytest.approx(4 * np.pi)


def test_irrational_orbit_is_elliptic():
    s = ellipsoid([1, sp.Rational(13, 10)])
    o1, _ = ellipsoid_orbits(s)
    st = classify_stability(o1.monodromy)
    assert st.kind == StabilityKind.ELLIPTIC
    assert sorted(st.angles) == pytest.approx(sorted([0.0, 2 * np.pi * 100 / 169]))


def test_classify_normal_forms():
    st = classify_stability(diamond(n1(1, 1), rot(np.pi / 3)))
    assert st.kind == StabilityKind.ELLIPTIC
    assert sorted(st.angles) == pytest.approx([0.0, np.pi / 3])
    assert classify_stability(diamond(n1(1, 1), np.diag([2.0, 0.5]))).kind == StabilityKind.HYPERBOLIC
    assert classify_stability(diamond(n1(1, 1), n1(1, -1))).kind == StabilityKind.DEGENERATE


def test_shooting_recovers_closed_form_orbit():
    s = ellipsoid([1, sp.sqrt(2)])
    o1 = ellipsoid_orbits(s)[0]
    y = o1.y0 + 1e-3 * np.array([0.0, 0.3, 0.2, -0.4])
    y /= s.gauge(y)
    shot = shoot_orbit(s, y, o1.period * 1.0005)
    assert abs(shot.period - o1.period) <= 1e-8
    assert np.max(np.abs(shot.y0[[1, 3]])) <= 1e-8
    assert shot.prime


def test_prime_detection():
    s = ellipsoid([1, sp.sqrt(2)])
    o1 = ellipsoid_orbits(s)[0]
    shot = shoot_orbit(s, o1.y0, 3 * o1.period)
    assert not shot.prime
    assert abs(shot.prime_period - o1.period) <= 1e-8


def test_shooting_failure():
    q = quartic_perturbation([1.0, 1.3], 0.3)
    y = np.array([0.5, 0.7, 0.3, -0.4])
    with pytest.raises(NoConvergence):
        shoot_orbit(q, y / q.gauge(y), 1.0, max_iter=8)
