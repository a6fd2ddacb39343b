"""Synthetic symplectic paths with known structure.

Random Hamiltonian paths exercise the index engine away from any special
structure.  Normal-form paths realize each transverse case of Sp(4) as the
fundamental solution of a model closed orbit: an orbit-plane block, which
ends at a Jordan block N1(1, 1) after full turns, times a transverse block.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .flow import SymplecticPath, product_path
from .orbits import _block_path, _orbit_plane_block, _planar_rotation
from .surface import DEFAULT_ALPHA
from .symplectic import random_symmetric, random_symplectic, standard_j

SAMPLES_PER_TURN = 64


def random_hamiltonian_path(rng: np.random.Generator, n: int = 2, t_end: float = 2.0,
                            scale: float = 1.5, n_samples: int = 256) -> SymplecticPath:
    """gamma(t) = exp(t J S1) exp(sin(t) J S2) with random symmetric S1, S2."""
    j = standard_j(n)
    a1 = j @ random_symmetric(2 * n, rng, scale)
    a2 = j @ random_symmetric(2 * n, rng, scale)

    def evaluator(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.stack([expm(t * a1) @ expm(np.sin(t) * a2) for t in ts])

    ts = np.linspace(0.0, t_end, n_samples + 1)
    return SymplecticPath(ts, evaluator(ts), evaluator)


def _shear(b: float):
    def f(ts):
        out = np.zeros((len(ts), 2, 2))
        out[:, 0, 0] = out[:, 1, 1] = 1.0
        out[:, 0, 1] = b * ts
        return out

    return f


def _stretch(lam: float):
    def f(ts):
        out = np.zeros((len(ts), 2, 2))
        out[:, 0, 0] = lam ** ts
        out[:, 1, 1] = lam ** (-ts)
        return out

    return f


def _compose(*fs):
    def f(ts):
        out = fs[0](ts)
        for g in fs[1:]:
            out = out @ g(ts)
        return out

    return f


def transverse_block(case: str, b: int = 0, theta: float = 0.0, turns: int = 0,
                     lam: float = 2.0):
    """Planar path on [0, 1] ending at the transverse normal form of ``case``.

    case1: N1(-1, b) after turns + 1/2 rotations; case2: R(theta + 2 pi turns);
    case3: N1(1, b), b in {0, 1}; case4: N1(1, -1); hyperbolic: diag(lam, 1/lam)
    (lam may be negative, realized as a half turn times diag(|lam|, 1/|lam|)).
    """
    full = 2.0 * np.pi * turns
    if case == "case1":
        return _compose(_planar_rotation(full + np.pi), _shear(-b))
    if case == "case2":
        return _planar_rotation(full + theta)
    if case == "case3":
        return _compose(_planar_rotation(full), _shear(b))
    if case == "case4":
        return _compose(_planar_rotation(full), _shear(-1.0))
    if case == "hyperbolic":
        extra = np.pi if lam < 0 else 0.0
        return _compose(_planar_rotation(full + extra), _stretch(abs(lam)))
    raise ValueError(f"unknown case {case!r}")


def normal_form_orbit_path(case: str, orbit_turns: int = 1, alpha: float = DEFAULT_ALPHA,
                           conjugate: np.ndarray | None = None, n_samples: int | None = None,
                           **params) -> SymplecticPath:
    """Model fundamental solution on [0, 1]: orbit-plane block <> transverse block.

    The orbit-plane block turns ``orbit_turns`` times and ends at a matrix
    conjugate to N1(1, 1); the transverse block follows ``transverse_block``.
    """
    plane = _orbit_plane_block(2.0 * np.pi * orbit_turns, alpha)
    trans = transverse_block(case, **params)
    turns = orbit_turns + params.get("turns", 0) + 1
    if n_samples is None:
        n_samples = max(128, SAMPLES_PER_TURN * turns)
    path = product_path([_block_path([plane, trans], 2)], 1.0, n_samples)
    return path if conjugate is None else path.conjugated(conjugate)


def hyperbolic_symmetric_orbit(rng: np.random.Generator | None = None, lam: float = 2.0,
                               alpha: float = DEFAULT_ALPHA,
                               n_samples: int = 128) -> tuple[SymplecticPath, SymplecticPath]:
    """(full path, half path) of a model symmetric orbit with hyperbolic transverse part.

    The half path psi(s), s in [0, 1], is a half turn of the orbit-plane
    block times diag(lam^s, lam^-s), so psi(1) is conjugate to
    N1(-1, -1) <> diag(lam, 1/lam).  The full path is psi iterated twice.
    An optional random symplectic conjugation hides the block structure.
    """
    plane = _orbit_plane_block(np.pi, alpha)
    half = product_path([_block_path([plane, _stretch(lam)], 2)], 1.0, n_samples)
    if rng is not None:
        half = half.conjugated(random_symplectic(2, rng))
    return half.iterate(2), half
