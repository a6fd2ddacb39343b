"""Closed characteristics: closed-form ellipsoid orbits, shooting, stability.

On an ellipsoid the orbit in plane j is the circle of radius r_j traversed
with angular speed 1/r_j^2, so its period is 2 pi r_j^2.  The fundamental
solution splits into planar blocks: in a transverse plane k it is the rotation
R(s / r_k^2), in the orbit plane it is R(s / r_j^2) composed with the shear
[[1, 0], [(alpha - 2) s / r_j^2, 1]] produced by the radial dependence of the
speed of H = j^alpha.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import sympy as sp

from .errors import NoConvergence, SingularJacobian
from .flow import (DEFAULT_ALPHA, SymplecticPath, Trajectory, _solve, characteristic_rhs,
                   check_symmetric, integrate_flow, monodromy_path, product_path)
from .surface import GaugeSurface, outward_normal
from .symplectic import require_symplectic, standard_j

ON_CIRCLE_TOL = 1e-7
UNIT_TOL = 1e-5
CLOSURE_TOL = 1e-9
MAX_NEWTON = 50
JACOBIAN_TOL = 1e-10
PRIME_SCAN = 12


@dataclass
class ClosedCharacteristic:
    """A closed orbit with its linearization.

    ``path`` is the fundamental solution over one period and ``half_path``
    the one over half a period (symmetric orbits only).  For ellipsoid orbits
    both are available in closed form; otherwise they are integrated lazily.
    """

    surface: GaugeSurface = field(repr=False)
    period: float
    y0: np.ndarray
    symmetric: bool
    prime: bool = True
    samples: Trajectory | None = field(default=None, repr=False)
    prime_period: float | None = None
    label: str = ""
    alpha: float = DEFAULT_ALPHA
    rotation_exact: tuple | None = field(default=None, repr=False)
    _path: SymplecticPath | None = field(default=None, repr=False)
    _half_path: SymplecticPath | None = field(default=None, repr=False)

    @property
    def path(self) -> SymplecticPath:
        if self._path is None:
            self._path = monodromy_path(self.surface, self, 1, self.alpha)
        return self._path

    @property
    def half_path(self) -> SymplecticPath:
        if self._half_path is None:
            self._half_path = monodromy_path(self.surface, self, 0.5, self.alpha)
        return self._half_path

    @property
    def monodromy(self) -> np.ndarray:
        return self.path.endpoint

    @property
    def half_monodromy(self) -> np.ndarray | None:
        return self.half_path.endpoint if self.symmetric else None

    def to_dict(self) -> dict:
        st = classify_stability(self.monodromy)
        return {
            "label": self.label,
            "period": float(self.period),
            "symmetric": bool(self.symmetric),
            "prime": bool(self.prime),
            "y0": [float(v) for v in self.y0],
            "multipliers": [[float(z.real), float(z.imag)] for z in st.multipliers],
            "angles": [float(a) for a in st.angles],
            "stability": st.kind.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# ellipsoids


def _planar_rotation(rate: float):
    def f(ts):
        c, s = np.cos(rate * ts), np.sin(rate * ts)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)

    return f


def _orbit_plane_block(rate: float, alpha: float):
    rotate = _planar_rotation(rate)

    def f(ts):
        shear = np.zeros((len(ts), 2, 2))
        shear[:, 0, 0] = shear[:, 1, 1] = 1.0
        shear[:, 1, 0] = (alpha - 2.0) * rate * ts
        return rotate(ts) @ shear

    return f


def _block_path(blocks, n: int):
    """Evaluator placing planar block callables on the Darboux planes."""

    def f(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.zeros((len(ts), 2 * n, 2 * n))
        for k, blk in enumerate(blocks):
            vals = blk(ts)
            idx = [k, k + n]
            for a in range(2):
                for b in range(2):
                    out[:, idx[a], idx[b]] = vals[:, a, b]
        return out

    return f


def ellipsoid_path(radii, j: int, t_end: float, alpha: float = DEFAULT_ALPHA,
                   n_samples: int | None = None) -> SymplecticPath:
    """Closed-form fundamental solution along the planar orbit j on [0, t_end]."""
    r2 = np.asarray(radii, dtype=float) ** 2
    n = len(r2)
    blocks = [(_orbit_plane_block(1.0 / r2[k], alpha) if k == j else _planar_rotation(1.0 / r2[k]))
              for k in range(n)]
    if n_samples is None:
        turns = t_end * np.max(1.0 / r2) / (2.0 * np.pi)
        n_samples = max(128, int(np.ceil(64 * turns)))
        n_samples += n_samples % 2
    return product_path([_block_path(blocks, n)], t_end, n_samples)


def ellipsoid_orbits(surface: GaugeSurface, alpha: float = DEFAULT_ALPHA,
                     n_samples: int = 256) -> list[ClosedCharacteristic]:
    """The n planar circular orbits of an ellipsoid, in closed form.

    Each orbit records the exact transverse rotation numbers r_j^2 / r_k^2
    when the surface carries exact squared radii.
    """
    if surface.kind != "ellipsoid":
        raise ValueError("closed-form orbits need an ellipsoid")
    r = np.asarray(surface.radii)
    n = surface.dim_half
    out = []
    for j in range(n):
        tau = 2.0 * np.pi * r[j] ** 2
        ts = np.linspace(0.0, tau, n_samples + 1)
        states = np.zeros((len(ts), 2 * n))
        states[:, j] = r[j] * np.cos(ts / r[j] ** 2)
        states[:, j + n] = r[j] * np.sin(ts / r[j] ** 2)
        exact = None
        if surface.radii_sq_exact is not None:
            sq = surface.radii_sq_exact
            exact = tuple(sp.radsimp(sq[j] / sq[k]) for k in range(n))
        orbit = ClosedCharacteristic(
            surface=surface, period=float(tau), y0=states[0].copy(), symmetric=True,
            prime=True, samples=Trajectory(ts, states, surface), label=f"plane-{j + 1}",
            alpha=alpha, rotation_exact=exact)
        orbit._path = ellipsoid_path(r, j, tau, alpha)
        orbit._half_path = ellipsoid_path(r, j, 0.5 * tau, alpha)
        out.append(orbit)
    return out


def rotation_ratios(orbit: ClosedCharacteristic) -> list[float]:
    """Transverse rotation numbers r_j^2 / r_k^2 of an ellipsoid orbit."""
    r2 = np.asarray(orbit.surface.radii) ** 2
    j = int(np.argmax(np.abs(orbit.y0[: orbit.surface.dim_half])
                      + np.abs(orbit.y0[orbit.surface.dim_half:])))
    return [float(r2[j] / r2[k]) for k in range(len(r2)) if k != j]


# ---------------------------------------------------------------------------
# shooting


def _flow_with_variation(surface: GaugeSurface, y0: np.ndarray, tau: float):
    dim = surface.dim
    jmat = standard_j(surface.dim_half)
    char = characteristic_rhs(surface)

    def rhs(t, state):
        y = state[:dim]
        phi = state[dim:].reshape(dim, dim)
        g = surface.grad(y)
        gy = np.dot(g, y)
        h = surface.hess(y)
        dn = h / gy - np.outer(g, h @ y + g) / gy**2
        return np.concatenate([char(t, y), (jmat @ dn @ phi).ravel()])

    init = np.concatenate([y0, np.eye(dim).ravel()])
    sol = _solve(rhs, tau, init, 1e-12, 1e-13)
    end = sol.y[:, -1]
    return end[:dim], end[dim:].reshape(dim, dim)


def shoot_orbit(surface: GaugeSurface, y_seed, tau_seed: float, max_iter: int = MAX_NEWTON,
                tol: float = CLOSURE_TOL, alpha: float = DEFAULT_ALPHA) -> ClosedCharacteristic:
    """Newton iteration for a closed orbit through a transverse section.

    Unknowns are the start point y and the period tau.  The equations are
    phi_tau(y) = y, the section condition (y - y_seed) . f(y_seed) = 0 and
    j(y) = 1; the overdetermined system is solved in the least-squares sense.
    """
    y = np.asarray(y_seed, dtype=float).copy()
    if abs(surface.gauge(y) - 1.0) > 1e-6:
        raise ValueError("seed must lie on the hypersurface to 1e-6")
    y = y / surface.gauge(y)
    f = characteristic_rhs(surface)
    f_seed = f(0.0, y)
    y_ref = y.copy()
    tau = float(tau_seed)
    dim = surface.dim
    for _ in range(max_iter):
        end, phi = _flow_with_variation(surface, y, tau)
        res = np.concatenate([end - y, [np.dot(y - y_ref, f_seed), surface.gauge(y) - 1.0]])
        if np.linalg.norm(end - y) <= tol and abs(res[-1]) <= tol:
            break
        jac = np.zeros((dim + 2, dim + 1))
        jac[:dim, :dim] = phi - np.eye(dim)
        jac[:dim, dim] = f(0.0, end)
        jac[dim, :dim] = f_seed
        jac[dim + 1, :dim] = surface.grad(y)
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[-1] < JACOBIAN_TOL * max(1.0, sv[0]):
            raise SingularJacobian(f"section Jacobian is rank deficient (sigma_min={sv[-1]:.2e})")
        step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        y = y + step[:dim]
        tau = tau + step[dim]
        if tau <= 0 or not np.all(np.isfinite(y)):
            raise NoConvergence("Newton iteration left the admissible region")
    else:
        raise NoConvergence(f"no closed orbit after {max_iter} Newton steps")
    y = y / surface.gauge(y)
    outward_normal(surface, y)
    traj = integrate_flow(surface, y, tau)
    prime_period = _prime_period(surface, y, tau)
    orbit = ClosedCharacteristic(surface=surface, period=tau, y0=y, symmetric=False,
                                 prime=prime_period is None, samples=traj,
                                 prime_period=prime_period or tau, label="shot", alpha=alpha)
    orbit.symmetric = surface.centrally_symmetric and check_symmetric(orbit)
    return orbit


def _prime_period(surface: GaugeSurface, y: np.ndarray, tau: float) -> float | None:
    """Smallest tau / d (d <= PRIME_SCAN) at which the orbit already closes."""
    rhs = characteristic_rhs(surface)
    sol = _solve(rhs, tau, y, 1e-12, 1e-13)
    for d in range(PRIME_SCAN, 1, -1):
        if np.linalg.norm(sol.sol(tau / d) - y) <= 1e-7:
            return tau / d
    return None


# ---------------------------------------------------------------------------
# stability


class StabilityKind(str, Enum):
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    DEGENERATE = "degenerate"
    MIXED = "mixed"


@dataclass(frozen=True)
class StabilityClass:
    kind: StabilityKind
    multipliers: tuple
    angles: tuple
    ambiguous: bool = False


def _krein_positive(m: np.ndarray, lam: complex) -> bool:
    n = m.shape[0] // 2
    w, v = np.linalg.eig(m)
    k = int(np.argmin(np.abs(w - lam)))
    vec = v[:, k]
    return float(np.real(-1j * np.conj(vec) @ standard_j(n) @ vec)) > 0


def classify_stability(gamma_tau: np.ndarray, on_circle_tol: float | None = None,
                       unit_tol: float | None = None) -> StabilityClass:
    """Classify the Floquet multipliers of a monodromy matrix.

    Multipliers within ``unit_tol`` of +1 or -1 are identified with them (a
    Jordan block splits its eigenvalues by about sqrt(machine eps)); the
    remaining ones count as on the unit circle when ||lambda| - 1| is at most
    ``on_circle_tol``.  A multiplier 1 of algebraic multiplicity above two
    makes the orbit Degenerate, which takes priority over the other classes.
    """
    on_circle_tol = ON_CIRCLE_TOL if on_circle_tol is None else on_circle_tol
    unit_tol = UNIT_TOL if unit_tol is None else unit_tol
    m = require_symplectic(gamma_tau, 1e-6)
    lam = np.linalg.eigvals(m)
    ones = np.abs(lam - 1.0) <= unit_tol
    minus = np.abs(lam + 1.0) <= unit_tol
    dist = np.abs(np.abs(lam) - 1.0)
    on = ones | minus | (dist <= on_circle_tol)
    ambiguous = bool(np.any(~on & (dist < unit_tol)))
    angles = set()
    for z, o, one, mi in zip(lam, on, ones, minus):
        if one:
            angles.add(0.0)
        elif mi:
            angles.add(float(np.pi))
        elif o and _krein_positive(m, z):
            angles.add(float(np.angle(z) % (2.0 * np.pi)))
    order = np.lexsort((lam.imag, lam.real))
    mult = tuple(complex(v) for v in lam[order])
    angles = tuple(sorted(angles))
    n_one = int(ones.sum())
    if n_one > 2:
        kind = StabilityKind.DEGENERATE
    elif np.all(on):
        kind = StabilityKind.ELLIPTIC
    elif n_one == 2 and np.all(~on[~ones]) and np.all(dist[~ones] >= unit_tol):
        kind = StabilityKind.HYPERBOLIC
    else:
        kind = StabilityKind.MIXED
    return StabilityClass(kind, mult, angles, ambiguous)
