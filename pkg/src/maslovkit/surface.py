"""Star-shaped hypersurfaces described by their gauge functions.

A hypersurface is the level set j = 1 of a positively homogeneous degree-one
function j.  The ellipsoid pairs its radius r_k with the Darboux plane
(x_k, x_{k+n}) so that the linearized flow splits into planar blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .errors import DegenerateGradient, OffSurface, ZeroPoint

DEFAULT_ALPHA = 1.8
ZERO_TOL = 1e-14
ON_SURFACE_TOL = 1e-8
GRADIENT_TOL = 1e-12

ScalarFn = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GaugeSurface:
    """Hypersurface j^{-1}(1) in R^{2n}.

    Attributes
    ----------
    dim_half : int
        n, half the phase-space dimension.
    kind : str
        ``"ellipsoid"`` or ``"custom"``.
    gauge, grad, hess : callables
        j, its gradient and its Hessian, all analytic.
    radii : tuple of float, optional
        Ellipsoid radii r_1..r_n.
    radii_sq_exact : tuple of sympy expressions, optional
        Exact squared radii, used for closed-form rotation numbers.
    name : str
        Identifier, used by the command line registry.
    centrally_symmetric : bool
        Whether j(-x) = j(x) by construction.
    """

    dim_half: int
    kind: str
    gauge: ScalarFn = field(repr=False)
    grad: VectorFn = field(repr=False)
    hess: VectorFn = field(repr=False)
    radii: tuple[float, ...] | None = None
    radii_sq_exact: tuple | None = field(default=None, repr=False)
    name: str = ""
    centrally_symmetric: bool = True

    @property
    def dim(self) -> int:
        return 2 * self.dim_half


def ellipsoid(radii: Sequence) -> GaugeSurface:
    """Ellipsoid sum_k (x_k^2 + x_{k+n}^2) / r_k^2 = 1.

    Radii may be floats or sympy expressions; in the latter case their exact
    squares are kept for closed-form rotation numbers.
    """
    radii = list(radii)
    if not radii or len(radii) > 3:
        raise ValueError("ellipsoids are supported for 1 <= n <= 3")
    exact = None
    if all(isinstance(r, (sp.Basic, int)) for r in radii):
        exact = tuple(sp.sympify(r) ** 2 for r in radii)
    r = np.array([float(v) for v in radii])
    if np.any(r <= 0):
        raise ValueError("radii must be positive")
    n = len(r)
    d = np.concatenate([1.0 / r**2, 1.0 / r**2])

    def gauge(x):
        return float(np.sqrt(np.dot(d * x, x)))

    def grad(x):
        return d * x / gauge(x)

    def hess(x):
        jx = gauge(x)
        dx = d * x
        return np.diag(d) / jx - np.outer(dx, dx) / jx**3

    return GaugeSurface(n, "ellipsoid", gauge, grad, hess, radii=tuple(r),
                        radii_sq_exact=exact, name="ellipsoid")


def round_sphere(n: int) -> GaugeSurface:
    """Unit sphere given as a custom gauge j(x) = |x|."""

    def gauge(x):
        return float(np.linalg.norm(x))

    def grad(x):
        return x / np.linalg.norm(x)

    def hess(x):
        nx = np.linalg.norm(x)
        u = x / nx
        return (np.eye(len(x)) - np.outer(u, u)) / nx

    return GaugeSurface(n, "custom", gauge, grad, hess, name="round_sphere")


def quartic_perturbation(radii: Sequence[float], eps: float,
                         weights: Sequence[float] | None = None) -> GaugeSurface:
    """Centrally symmetric surface j(x) = (q(x)^2 + eps * sum_i w_i x_i^4)^{1/4}.

    Here q is the ellipsoid quadratic form.  For small eps the surface stays
    star-shaped and the planar ellipsoid orbits persist as closed orbits.
    """
    r = np.asarray(radii, dtype=float)
    n = len(r)
    d = np.concatenate([1.0 / r**2, 1.0 / r**2])
    w = np.ones(2 * n) if weights is None else np.asarray(weights, dtype=float)

    def big_q(x):
        q = np.dot(d * x, x)
        return q * q + eps * np.dot(w, x**4)

    def grad_big_q(x):
        q = np.dot(d * x, x)
        return 4.0 * q * d * x + 4.0 * eps * w * x**3

    def hess_big_q(x):
        q = np.dot(d * x, x)
        dx = d * x
        return 4.0 * q * np.diag(d) + 8.0 * np.outer(dx, dx) + 12.0 * eps * np.diag(w * x**2)

    def gauge(x):
        return float(big_q(x) ** 0.25)

    def grad(x):
        return 0.25 * big_q(x) ** (-0.75) * grad_big_q(x)

    def hess(x):
        qq = big_q(x)
        g = grad_big_q(x)
        return 0.25 * qq ** (-0.75) * hess_big_q(x) - (3.0 / 16.0) * qq ** (-1.75) * np.outer(g, g)

    return GaugeSurface(n, "custom", gauge, grad, hess, name="quartic")


def shifted_ellipsoid(radii: Sequence[float], center: Sequence[float]) -> GaugeSurface:
    """Ellipsoid translated by ``center`` (which must lie inside it).

    The gauge is the positive root lambda of
    (1 - c.Dc) lambda^2 + 2 lambda c.Dx - x.Dx = 0.
    """
    r = np.asarray(radii, dtype=float)
    n = len(r)
    d = np.concatenate([1.0 / r**2, 1.0 / r**2])
    c = np.asarray(center, dtype=float)
    dc = d * c
    a = 1.0 - np.dot(dc, c)
    if a <= 0:
        raise ValueError("center must lie inside the ellipsoid")

    def _parts(x):
        b = np.dot(dc, x)
        q = np.dot(d * x, x)
        s = np.sqrt(b * b + a * q)
        return (s - b) / a, s

    def gauge(x):
        return float(_parts(x)[0])

    def grad(x):
        jx, s = _parts(x)
        return (d * x - jx * dc) / s

    def hess(x):
        jx, s = _parts(x)
        g = (d * x - jx * dc) / s
        return (np.diag(d) - np.outer(dc, g) - np.outer(g, dc) - a * np.outer(g, g)) / s

    return GaugeSurface(n, "custom", gauge, grad, hess, name="shifted_ellipsoid",
                        centrally_symmetric=bool(np.allclose(c, 0.0)))


def custom(n: int, gauge: ScalarFn, grad: VectorFn, hess: VectorFn, name: str = "custom",
           centrally_symmetric: bool = False) -> GaugeSurface:
    """Wrap user supplied analytic j, grad j and Hessian of j."""
    return GaugeSurface(n, "custom", gauge, grad, hess, name=name,
                        centrally_symmetric=centrally_symmetric)


def _as_point(surface: GaugeSurface, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (surface.dim,):
        raise ValueError(f"expected a point of R^{surface.dim}, got shape {x.shape}")
    if np.linalg.norm(x) < ZERO_TOL:
        raise ZeroPoint("the gauge is not defined at the origin")
    return x


def gauge_eval(surface: GaugeSurface, x) -> float:
    """Value of the gauge function j(x) > 0."""
    return surface.gauge(_as_point(surface, x))


def outward_normal(surface: GaugeSurface, y) -> np.ndarray:
    """Normal field N(y) = grad j(y) / (grad j(y) . y), so that N(y) . y = 1."""
    y = _as_point(surface, y)
    jy = surface.gauge(y)
    if abs(jy - 1.0) > ON_SURFACE_TOL:
        raise OffSurface(f"|j(y) - 1| = {abs(jy - 1.0):.3e}")
    g = surface.grad(y)
    if np.linalg.norm(g) < GRADIENT_TOL:
        raise DegenerateGradient("gradient of the gauge vanishes")
    return g / np.dot(g, y)


def gauge_hessian(surface: GaugeSurface, x, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Hessian of H = j^alpha at x."""
    x = _as_point(surface, x)
    return _hessian_power(surface, x, alpha)


def _hessian_power(surface: GaugeSurface, x: np.ndarray, alpha: float) -> np.ndarray:
    jx = surface.gauge(x)
    g = surface.grad(x)
    h = alpha * jx ** (alpha - 1.0) * surface.hess(x) \
        + alpha * (alpha - 1.0) * jx ** (alpha - 2.0) * np.outer(g, g)
    return 0.5 * (h + h.T)


def validate_gauge(surface: GaugeSurface, rng: np.random.Generator, n_points: int = 200) -> dict:
    """Numerical checks of homogeneity, Euler identity and Hessian symmetry.

    Returns the worst relative deviation observed for each property.
    """
    worst = {"homogeneity": 0.0, "euler": 0.0, "hessian_symmetry": 0.0}
    for _ in range(n_points):
        x = rng.normal(size=surface.dim)
        x *= rng.uniform(0.1, 3.0) / np.linalg.norm(x)
        lam = rng.uniform(0.0, 5.0)
        jx = surface.gauge(x)
        if lam > 0:
            worst["homogeneity"] = max(worst["homogeneity"],
                                       abs(surface.gauge(lam * x) - lam * jx) / (lam * jx))
        worst["euler"] = max(worst["euler"], abs(np.dot(surface.grad(x), x) - jx) / jx)
        h = surface.hess(x)
        worst["hessian_symmetry"] = max(worst["hessian_symmetry"], float(np.max(np.abs(h - h.T))))
    return worst


def project_to_surface(surface: GaugeSurface, x) -> np.ndarray:
    """Radial projection x / j(x)."""
    x = _as_point(surface, x)
    return x / surface.gauge(x)


_REGISTRY: dict[str, Callable[..., GaugeSurface]] = {}


def register_surface(name: str, factory: Callable[..., GaugeSurface]) -> None:
    """Register a custom surface factory for use from configuration files."""
    _REGISTRY[name] = factory


def lookup_surface(name: str, **params) -> GaugeSurface:
    if name not in _REGISTRY:
        raise KeyError(f"unknown custom surface {name!r}; registered: {sorted(_REGISTRY)}")
    return _REGISTRY[name](**params)


def registered_surfaces() -> list[str]:
    return sorted(_REGISTRY)


register_surface("round_sphere", lambda n=2: round_sphere(n))
register_surface("quartic", lambda radii=(1.0, 1.3), eps=0.05, weights=None:
                 quartic_perturbation(radii, eps, weights))
register_surface("shifted_ellipsoid", lambda radii=(1.0, 1.3), center=(0.1, 0.0, 0.0, 0.05):
                 shifted_ellipsoid(radii, center))
