"""Linear symplectic helpers.

The standard structure on R^{2n} is J = [[0, -I], [I, 0]], so the Darboux
pairs are (x_k, x_{k+n}).  Normal-form blocks follow the usual notation
N1(lam, b) = [[lam, b], [0, lam]] and R(theta) the planar rotation.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import NotSymplectic

SYMPLECTIC_TOL = 1e-6


def standard_j(n: int) -> np.ndarray:
    """Return the 2n x 2n matrix J = [[0, -I], [I, 0]]."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def n1(lam: float, b: float) -> np.ndarray:
    return np.array([[lam, b], [0.0, lam]], dtype=float)


def rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def diamond(*blocks: np.ndarray) -> np.ndarray:
    """Symplectic direct sum of square blocks of even size.

    A block of size 2k acting on (q, p) in R^{2k} is placed on the
    coordinates (x_i..x_{i+k-1}, x_{n+i}..x_{n+i+k-1}) of the result.
    """
    halves = []
    for blk in blocks:
        blk = np.asarray(blk, dtype=float)
        if blk.ndim != 2 or blk.shape[0] != blk.shape[1] or blk.shape[0] % 2:
            raise ValueError("diamond blocks must be square of even size")
        halves.append(blk.shape[0] // 2)
    n = sum(halves)
    out = np.zeros((2 * n, 2 * n))
    start = 0
    for blk, k in zip(blocks, halves):
        blk = np.asarray(blk, dtype=float)
        idx = np.r_[start:start + k, n + start:n + start + k]
        out[np.ix_(idx, idx)] = blk
        start += k
    return out


def symplectic_defect(m: np.ndarray) -> float:
    """Max-abs entry of M^T J M - J."""
    m = np.asarray(m)
    j = standard_j(m.shape[0] // 2)
    return float(np.max(np.abs(m.T @ j @ m - j)))


def require_symplectic(m: np.ndarray, tol: float = SYMPLECTIC_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        raise NotSymplectic(f"expected a square matrix of even size, got shape {m.shape}")
    d = symplectic_defect(m)
    if d > tol:
        raise NotSymplectic(f"symplectic defect {d:.3e} exceeds {tol:.1e}")
    return m


def hamiltonian_exp(s: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(t J S) for a symmetric matrix S."""
    s = np.asarray(s, dtype=float)
    j = standard_j(s.shape[0] // 2)
    return expm(t * j @ (0.5 * (s + s.T)))


def random_symmetric(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(scale=scale, size=(dim, dim))
    return 0.5 * (a + a.T)


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """A random element of Sp(2n) near the identity component centre."""
    return hamiltonian_exp(random_symmetric(2 * n, rng, scale))


def symplectic_inverse(m: np.ndarray) -> np.ndarray:
    j = standard_j(m.shape[0] // 2)
    return -j @ m.T @ j
