import numpy as np
import pytest
import sympy as sp

from maslovkit.errors import OffSurface, ZeroPoint
from maslovkit.surface import (custom, ellipsoid, gauge_eval, gauge_hessian, lookup_surface,
                               outward_normal, quartic_perturbation, round_sphere,
                               shifted_ellipsoid, validate_gauge)


def test_gauge_values():
    assert gauge_eval(ellipsoid([1, 1]), [1, 0, 0, 0]) == pytest.approx(1.0)
    # radius r_k pairs coordinates k and k + n
    assert gauge_eval(ellipsoid([1, 2]), [0, 2, 0, 0]) == pytest.approx(1.0)
    assert gauge_eval(ellipsoid([1, 2]), [0, 0, 0, 2]) == pytest.approx(1.0)
    assert gauge_eval(ellipsoid([1, 2]), [0, 0, 2, 0]) == pytest.approx(2.0)
    assert gauge_eval(ellipsoid([1, 2]), [3, 0, 0, 0]) == pytest.approx(3.0)


def test_gauge_rejects_origin():
    with pytest.raises(ZeroPoint):
        gauge_eval(ellipsoid([1, 2]), np.zeros(4))


def test_outward_normal_values():
    assert np.allclose(outward_normal(ellipsoid([1, 1]), [1, 0, 0, 0]), [1, 0, 0, 0])
    assert np.allclose(outward_normal(ellipsoid([1, 2]), [0, 0, 0, 2]), [0, 0, 0, 0.5])
    with pytest.raises(OffSurface):
        outward_normal(ellipsoid([1, 2]), [2, 0, 0, 0])


def _symbolic_ellipsoid_normal(radii, y):
    # grad j / (grad j . y) from sympy differentiation of j
    xs = sp.symbols("x0:4")
    r = [sp.nsimplify(v) for v in radii]
    j = sp.sqrt(sum((xs[k] ** 2 + xs[k + 2] ** 2) / r[k] ** 2 for k in range(2)))
    sub = dict(zip(xs, [sp.nsimplify(v) for v in y]))
    g = [sp.diff(j, x).subs(sub) for x in xs]
    dot = sum(gi * yi for gi, yi in zip(g, sub.values()))
    return np.array([float(gi / dot) for gi in g])


def test_outward_normal_against_symbolic_oracle():
    rng = np.random.default_rng(3)
    s = ellipsoid([1, 2])
    for _ in range(5):
        x = rng.normal(size=4)
        y = x / s.gauge(x)
        n = outward_normal(s, y)
        assert np.allclose(n, _symbolic_ellipsoid_normal([1, 2], y), atol=1e-12)
        assert np.dot(n, y) == pytest.approx(1.0)


def test_hessian_of_norm_power_matches_closed_form():
    s = round_sphere(2)
    rng = np.random.default_rng(5)
    for alpha in (1.5, 1.8, 2.0):
        x = rng.normal(size=4)
        r = np.linalg.norm(x)
        u = x / r
        expected = alpha * r ** (alpha - 2) * (np.eye(4) + (alpha - 2) * np.outer(u, u))
        h = gauge_hessian(s, x, alpha)
        assert np.allclose(h, expected, atol=1e-12)
        assert np.max(np.abs(h - h.T)) <= 1e-12


def test_hessian_finite_difference_on_ellipsoid():
    s = ellipsoid([1.0, 1.7])
    x = np.array([0.3, -0.5, 0.9, 0.2])
    alpha = 1.8
    h = gauge_hessian(s, x, alpha)

    def grad_h(p):
        return alpha * s.gauge(p) ** (alpha - 1) * s.grad(p)

    eps = 1e-6
    fd = np.array([(grad_h(x + eps * e) - grad_h(x - eps * e)) / (2 * eps) for e in np.eye(4)])
    assert np.allclose(h, fd, atol=1e-6)


def test_sphere_hessian_at_alpha_two():
    h = gauge_hessian(ellipsoid([1, 1]), [1, 0, 0, 0], 2.0)
    assert np.allclose(h, 2 * np.eye(4))


@pytest.mark.parametrize("surface", [
    ellipsoid([1.0, 1.3]),
    quartic_perturbation([1.0, 1.3], 0.05),
    shifted_ellipsoid([1.0, 1.3], [0.1, 0.0, -0.05, 0.0]),
    round_sphere(2),
])
def test_gauge_validation(surface):
    worst = validate_gauge(surface, np.random.default_rng(0), 50)
    assert worst["homogeneity"] < 1e-12
    assert worst["euler"] < 1e-12
    assert worst["hessian_symmetry"] < 1e-12


def test_exact_radii_kept():
    s = ellipsoid([1, sp.sqrt(2)])
    assert s.radii_sq_exact == (1, 2)
    assert ellipsoid([1.0, 2.0]).radii_sq_exact is None


def test_registry_and_custom():
    assert lookup_surface("round_sphere").dim_half == 2
    with pytest.raises(KeyError):
        lookup_surface("no-such-surface")
    s = custom(2, lambda x: float(np.linalg.norm(x)), lambda x: x / np.linalg.norm(x),
               lambda x: np.eye(4))
    assert gauge_eval(s, [0, 2, 0, 0]) == pytest.approx(2.0)
