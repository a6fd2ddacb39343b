import numpy as np
import pytest
import sympy as sp
from scipy.linalg import expm

from maslovkit.errors import OffSurface
from maslovkit.flow import (check_symmetric, integrate_flow, integrate_linearized, monodromy_path,
                            path_from_csv)
from maslovkit.orbits import ellipsoid_orbits, ellipsoid_path, shoot_orbit
from maslovkit.surface import ellipsoid, quartic_perturbation, shifted_ellipsoid
from maslovkit.symplectic import standard_j


def test_sphere_orbit_is_a_rotation():
    s = ellipsoid([1, 1])
    y0 = np.array([1.0, 0, 0, 0])
    tr = integrate_flow(s, y0, 2 * np.pi)
    assert np.max(np.abs(tr.states[-1] - y0)) <= 1e-8
    j = standard_j(2)
    for t, y in zip(tr.times[::16], tr.states[::16]):
        assert np.allclose(y, expm(t * j) @ y0, atol=1e-8)


def test_gauge_is_a_first_integral():
    s = quartic_perturbation([1.0, 1.3], 0.1)
    x = np.array([0.4, -0.6, 0.5, 0.3])
    tr = integrate_flow(s, x / s.gauge(x), 5.0)
    assert tr.drift() <= 1e-8


def test_orbit_stays_in_invariant_plane():
    s = ellipsoid([1, sp.sqrt(2)])
    tr = integrate_flow(s, [1.0, 0, 0, 0], 2 * np.pi)
    assert np.max(np.abs(tr.states[:, [1, 3]])) <= 1e-8


def test_start_must_lie_on_surface():
    with pytest.raises(OffSurface):
        integrate_flow(ellipsoid([1, 2]), [2.0, 0, 0, 0], 1.0)


def test_integrated_monodromy_matches_closed_form_blocks():
    radii = [1.0, np.sqrt(2)]
    s = ellipsoid(radii)
    tau = 2 * np.pi
    _, path = integrate_linearized(s, [1.0, 0, 0, 0], tau)
    closed = ellipsoid_path(radii, 0, tau)
    assert np.max(np.abs(path.endpoint - closed.endpoint)) <= 1e-8
    lam = np.sort_complex(np.linalg.eigvals(path.endpoint))
    # theta = 2 pi r_1^2 / r_2^2 = pi
    assert np.allclose(np.sort(np.abs(lam - 1) < 1e-4), [False, False, True, True])
    assert np.sum(np.abs(lam + 1) < 1e-4) == 2


def test_sphere_monodromy_is_unipotent():
    s = ellipsoid([1.0, 1.0])
    _, path = integrate_linearized(s, [1.0, 0, 0, 0], 2 * np.pi)
    assert np.allclose(np.linalg.eigvals(path.endpoint), 1.0, atol=1e-4)
    assert np.allclose(path.mats[0], np.eye(4))


def test_semigroup_property():
    s = ellipsoid([1.0, 1.3])
    orbit = shoot_orbit(s, [1.0, 0, 0, 0], 2 * np.pi)
    one = monodromy_path(s, orbit, 1)
    for m in (2, 3, 4):
        direct = monodromy_path(s, orbit, m, method="integrate")
        assert np.max(np.abs(direct.endpoint - np.linalg.matrix_power(one.endpoint, m))) <= 1e-6


def test_check_symmetric():
    s = ellipsoid([1, sp.sqrt(2)])
    for orbit in ellipsoid_orbits(s):
        assert check_symmetric(orbit)
    c = np.array([0.1, 0.0, -0.05, 0.0])
    shifted = shifted_ellipsoid([1.0, 1.3], c)
    orbit = shoot_orbit(shifted, c + np.array([1.0, 0, 0, 0]), 2 * np.pi)
    assert not check_symmetric(orbit)


def test_check_symmetric_reflected_pair():
    s = ellipsoid([1.0, 1.3])
    a = shoot_orbit(s, [1.0, 0, 0, 0], 2 * np.pi)
    b = shoot_orbit(s, [-1.0, 0, 0, 0], 2 * np.pi)
    assert check_symmetric(a) == check_symmetric(b)


def test_path_csv_round_trip():
    path = ellipsoid_path([1.0, 1.3], 0, 2 * np.pi, n_samples=32)
    back = path_from_csv(path.to_csv())
    assert np.array_equal(back.times, path.times)
    assert np.array_equal(back.mats, path.mats)


@pytest.mark.parametrize("text", ["", "t,a\n0,1\n", "0,1,0,0,1\n1,1,0,0\n",
                                  "0,1,0,0,1\n0,1,0,0,1\n", "0,1,0\n1,1,0\n"])
def test_path_csv_rejects_malformed(text):
    with pytest.raises(ValueError):
        path_from_csv(text)


def test_refinement_keeps_samples():
    path = ellipsoid_path([1.0, 1.3], 0, 2 * np.pi, n_samples=32)
    fine = path.refined(2)
    assert np.array_equal(fine.mats[::2], path.mats)
    assert np.allclose(fine.mats[1::2], ellipsoid_path([1.0, 1.3], 0, 2 * np.pi, n_samples=64).mats[1::2])
