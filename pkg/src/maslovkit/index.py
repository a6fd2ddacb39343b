"""Maslov-type indices of symplectic paths.

For omega on the unit circle the index i_omega(gamma) counts, with signs,
the times at which gamma(t) has omega as an eigenvalue.  Counting is done on
the graph of gamma inside C^{2n} + C^{2n}: each Lagrangian graph is encoded
by a unitary matrix, and the eigenvalues of U_omega^* U_gamma(t) cross 1
exactly when ker(gamma(t) - omega) is non-trivial.  Their direction of motion
through 1 is the sign of the crossing form, so the signed count is the net
winding of those eigenvalues through 1, which is read off from the
continuous phase of det(U_omega^* U_gamma(t)) and a branch cut at 1.

Degenerate end points follow the lower semicontinuous convention: the whole
path is rotated to e^{-eps J} gamma(t), so both ends become omega-regular,
and for omega = 1 the n crossings created at t = 0 are discounted.  This
gives i_1 = n for short positive paths and makes the value at a degenerate
end point the minimum over nearby regular paths.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy as sp

from .errors import (EmptyIntersection, LimitUnstable, NonIntegerStability,
                     NotSymmetricOrbit, UnresolvedCrossing)
from .flow import SymplecticPath
from .symplectic import require_symplectic, standard_j

NULLITY_TOL = 1e-6
REGULARIZATION_EPS = (1e-6, 5e-7)
SPLITTING_EPS = (2e-2, 1e-2)
MAX_STEP_PHASE = np.pi / 2
MAX_EIG_JUMP = 0.5
MAX_REFINE_DEPTH = 12
ENDPOINT_MARGIN = 1e-11


# ---------------------------------------------------------------------------
# unitary encoding of graphs


def _frame(n: int) -> np.ndarray:
    eye = np.eye(n)
    return np.block([[eye, eye], [1j * eye, -1j * eye]]) / np.sqrt(2.0)


def _graph_unitaries(mats: np.ndarray) -> np.ndarray:
    """Unitary U with Graph(M) = {(x_+, U x_+)} for a stack of symplectic M."""
    n = mats.shape[-1] // 2
    t = _frame(n)
    mt = t.conj().T @ mats @ t
    a, b = mt[..., :n, :n], mt[..., :n, n:]
    c, d = mt[..., n:, :n], mt[..., n:, n:]
    ainv = np.linalg.inv(a)
    top = np.concatenate([-ainv @ b, ainv], axis=-1)
    bottom = np.concatenate([d - c @ ainv @ b, c @ ainv], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def _reference_unitary(n: int, omega: complex) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, np.conj(omega) * eye], [omega * eye, zero]])


def crossing_spectrum(mats: np.ndarray, omega: complex) -> np.ndarray:
    """Eigenvalues of U_omega^* U_M for a stack of matrices M (shape (K, 2n))."""
    mats = np.asarray(mats, dtype=float)
    n = mats.shape[-1] // 2
    u = _graph_unitaries(mats)
    w = _reference_unitary(n, omega).conj().T @ u
    return np.linalg.eigvals(w)


def _rotate(mats: np.ndarray, eps: float) -> np.ndarray:
    n = mats.shape[-1] // 2
    rot = np.cos(eps) * np.eye(2 * n) - np.sin(eps) * standard_j(n)
    return rot @ mats


def _branch(theta: np.ndarray) -> np.ndarray:
    # eigenvalue phases with the cut placed at 1, values in (-2pi, 0]
    return np.where(theta > 0.0, theta - 2.0 * np.pi, theta)


# ---------------------------------------------------------------------------
# crossing counter


@dataclass
class _Counter:
    path: SymplecticPath
    omega: complex
    eps: float
    refinements: int = 0

    def spectrum(self, mats):
        return crossing_spectrum(_rotate(mats, self.eps), self.omega)

    def step_crossings(self, eig0, eig1):
        th0, th1 = np.angle(eig0), np.angle(eig1)
        dcont = np.angle(np.exp(1j * (th1.sum(-1) - th0.sum(-1))))
        dbranch = _branch(th1).sum(-1) - _branch(th0).sum(-1)
        count = np.rint((dcont - dbranch) / (2.0 * np.pi)).astype(int)
        jump = np.abs(eig1[..., :, None] - eig0[..., None, :]).min(-1).max(-1)
        ok = (np.abs(dcont) <= MAX_STEP_PHASE) & (jump <= MAX_EIG_JUMP)
        return count, ok

    def interval(self, t0, t1, eig0, eig1, depth):
        count, ok = self.step_crossings(eig0[None], eig1[None])
        if ok[0]:
            return int(count[0])
        if depth >= MAX_REFINE_DEPTH:
            raise UnresolvedCrossing(
                f"eigenvalue motion unresolved on [{t0:.6g}, {t1:.6g}] after refinement",
                (float(t0), float(t1)))
        self.refinements += 1
        ts = np.linspace(t0, t1, 5)[1:-1]
        eigs = self.spectrum(self.path.evaluate(ts))
        pts = [eig0, *eigs, eig1]
        tt = [t0, *ts, t1]
        return sum(self.interval(tt[k], tt[k + 1], pts[k], pts[k + 1], depth + 1)
                   for k in range(4))

    def cumulative(self) -> np.ndarray:
        """Signed crossing counts of the rotated path on [0, t_k] for every sample k."""
        eigs = self.spectrum(self.path.mats)
        count, ok = self.step_crossings(eigs[:-1], eigs[1:])
        for k in np.flatnonzero(~ok):
            count[k] = self.interval(self.path.times[k], self.path.times[k + 1],
                                     eigs[k], eigs[k + 1], 1)
        margin = np.min(np.abs(np.angle(eigs)), axis=-1)
        return np.concatenate([[0], np.cumsum(count)]), margin


def _prefix_counts(path: SymplecticPath, omega: complex, eps: float,
                   sample_idx: np.ndarray) -> np.ndarray:
    counter = _Counter(path, omega, eps)
    cum, margin = counter.cumulative()
    if np.any(margin[sample_idx] < ENDPOINT_MARGIN):
        k = int(sample_idx[np.argmin(margin[sample_idx])])
        raise UnresolvedCrossing(
            f"end point at t={path.times[k]:.6g} remains degenerate after regularization",
            (float(path.times[k]), float(path.times[k])))
    shift = path.n if _is_one(omega) else 0
    return cum[sample_idx] - shift


def _is_one(omega: complex) -> bool:
    return abs(omega - 1.0) < 1e-15


def prefix_indices(path: SymplecticPath, omega: complex = 1.0,
                   sample_idx: Sequence[int] | None = None,
                   check_refinement: bool = True) -> np.ndarray:
    """i_omega of the restrictions gamma|[0, t_k] for the requested samples.

    The value is computed for two regularization parameters and, when
    ``check_refinement`` is set, again on the grid refined by a factor two;
    all evaluations must agree.
    """
    if sample_idx is None:
        sample_idx = [len(path.times) - 1]
    idx = np.asarray(sample_idx, dtype=int)
    results = [_prefix_counts(path, omega, eps, idx) for eps in REGULARIZATION_EPS]
    if not np.array_equal(results[0], results[1]):
        raise NonIntegerStability(
            f"regularized indices disagree between eps values: {results[0]} vs {results[1]}")
    if check_refinement:
        fine = path.refined(2)
        again = _prefix_counts(fine, omega, REGULARIZATION_EPS[0], 2 * idx)
        if not np.array_equal(again, results[0]):
            raise NonIntegerStability(
                f"grid refinement changed the index: {results[0]} vs {again}")
    return results[0]


def omega_index(path: SymplecticPath, omega: complex = 1.0,
                check_refinement: bool = True) -> int:
    """Maslov-type index i_omega of the whole path."""
    _check_path(path)
    return int(prefix_indices(path, omega, None, check_refinement)[0])


def _check_path(path: SymplecticPath) -> None:
    if path.start_defect() > 1e-8:
        raise ValueError("path must start at the identity")


def omega_nullity(m: np.ndarray, omega: complex = 1.0, tol: float | None = None) -> int:
    """dim ker(M - omega I), counted by singular values below ``tol`` (default NULLITY_TOL)."""
    tol = NULLITY_TOL if tol is None else tol
    m = require_symplectic(m, 1e-7)
    sv = np.linalg.svd(m - omega * np.eye(m.shape[0]), compute_uv=False)
    return int(np.sum(sv < tol))


# ---------------------------------------------------------------------------
# derived quantities


def symmetric_index(half_path: SymplecticPath, symmetric: bool = True,
                    check_refinement: bool = True) -> tuple[int, int, list[str]]:
    """(i_bar, nu_bar, warnings) = (i_{-1}, nu_{-1}) of the half-period path."""
    if not symmetric:
        raise NotSymmetricOrbit("the symmetric index needs a symmetric closed orbit")
    ibar = omega_index(half_path, -1.0, check_refinement)
    nubar = omega_nullity(half_path.endpoint, -1.0)
    warnings = []
    if not 1 <= nubar <= 2 * half_path.n - 1:
        warnings.append(f"nullity {nubar} outside [1, {2 * half_path.n - 1}]")
    return ibar, nubar, warnings


def morse_translate(i_maslov: int, nullity: int, n: int) -> tuple[int, int]:
    """Morse-type normalization: i(y^m) = i(y, m) - n, nullity unchanged."""
    return i_maslov - n, nullity


@dataclass(frozen=True)
class BottResidual:
    lhs: int
    rhs: int
    i1: int
    im1: int

    @property
    def residual(self) -> int:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def bott_check(path: SymplecticPath, check_refinement: bool = True) -> BottResidual:
    """Compare i_1 of the doubled path with i_1 + i_{-1} of one period."""
    doubled = path.iterate(2)
    k = len(path.times) - 1
    i_two = int(prefix_indices(doubled, 1.0, [2 * k], check_refinement)[0])
    i_one = int(prefix_indices(doubled, 1.0, [k], check_refinement)[0])
    i_minus = omega_index(path, -1.0, check_refinement)
    return BottResidual(i_two, i_one + i_minus, i_one, i_minus)


def splitting_number(path: SymplecticPath, omega: complex = 1.0,
                     check_refinement: bool = False) -> tuple[int, int]:
    """(S+, S-) = one-sided jumps of i_omega at omega.

    The one-sided limits are sampled at angular offsets well above the
    square root of the regularization size (a Jordan block at omega moves
    eigenvalues by that much) and below a third of the gap to the other
    eigenvalues on the unit circle.
    """
    if omega_nullity(path.endpoint, omega) == 0:
        return 0, 0
    lam = np.linalg.eigvals(path.endpoint)
    on_circle = lam[np.abs(np.abs(lam) - 1.0) < 1e-7]
    gaps = np.abs(np.angle(on_circle / omega))
    gaps = gaps[gaps > 1e-4]
    scale = min(1.0, float(gaps.min()) / 3.0 / SPLITTING_EPS[0]) if gaps.size else 1.0
    base = omega_index(path, omega, check_refinement)
    out = []
    for sign in (1, -1):
        vals = [omega_index(path, omega * np.exp(sign * 1j * e * scale), check_refinement)
                for e in SPLITTING_EPS]
        if vals[0] != vals[1]:
            raise LimitUnstable(f"one-sided limits disagree: {vals}")
        out.append(vals[0] - base)
    return out[0], out[1]


def mean_index_bracket(iterates: Mapping[int, int], n: int) -> tuple[Fraction, Fraction]:
    """Intersection over m of [(i(y^m) - 2n)/m, (i(y^m) + 2n)/m]."""
    if not iterates:
        raise ValueError("empty iterate table")
    lo, hi = Fraction(-10**18), Fraction(10**18)
    for m, i_m in iterates.items():
        lo = max(lo, Fraction(i_m - 2 * n, m))
        hi = min(hi, Fraction(i_m + 2 * n, m))
    if lo > hi:
        raise EmptyIntersection(f"mean-index bracket is empty: [{lo}, {hi}]")
    return lo, hi


def symmetric_mean_index(ihat):
    """Half of a mean index, exact value or bracket."""
    if isinstance(ihat, tuple):
        return tuple(v / 2 for v in ihat)
    return ihat / 2


# ---------------------------------------------------------------------------
# per-orbit record


@dataclass
class IndexRecord:
    """Indices of one closed orbit and of its iterates (Morse normalization)."""

    n: int
    i1: int
    nu1: int
    im1: int
    num1: int
    im1_full: int
    iterates: dict[int, tuple[int, int]] = field(default_factory=dict)
    bracket: tuple[Fraction, Fraction] | None = None
    exact_mean: object = None
    symmetric: bool = False
    odd_iterates_bar: dict[int, tuple[int, int]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def morse(self, m: int) -> int:
        return self.iterates[m][0]

    def to_dict(self) -> dict:
        out = {
            "i1": self.i1,
            "nu1": self.nu1,
            "im1": self.im1,
            "num1": self.num1,
            "im1_full": self.im1_full,
            "iterates": [[m, i, nu] for m, (i, nu) in sorted(self.iterates.items())],
        }
        if self.exact_mean is not None:
            out["mean"] = _exact_json(self.exact_mean)
        elif self.bracket is not None:
            out["mean"] = [_frac_json(self.bracket[0]), _frac_json(self.bracket[1])]
        if self.symmetric:
            out["ibar_odd_iterates"] = [[m, i, nu] for m, (i, nu)
                                        in sorted(self.odd_iterates_bar.items())]
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def _frac_json(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


def _exact_json(x) -> object:
    if isinstance(x, int):
        x = Fraction(x)
    if isinstance(x, Fraction):
        return _frac_json(x)
    if isinstance(x, sp.Basic):
        if x.is_Rational:
            return {"num": int(x.p), "den": int(x.q)}
        return {"expr": str(x), "float": float(x)}
    return float(x)


def index_record(path: SymplecticPath, max_iterate: int = 8,
                 half_path: SymplecticPath | None = None,
                 check_refinement: bool = True) -> IndexRecord:
    """Compute the index record of a closed orbit from its one-period path.

    Iterate indices come from a single pass over the ``max_iterate``-fold
    path; for a symmetric orbit the half path supplies i_bar of the odd
    iterates as i_{-1} of its odd iterates.
    """
    n = path.n
    k = len(path.times) - 1
    big = path.iterate(max_iterate)
    idx = np.arange(1, max_iterate + 1) * k
    maslov = prefix_indices(big, 1.0, idx, check_refinement)
    nulls = []
    power = np.eye(2 * n)
    for _m in range(max_iterate):
        power = power @ path.endpoint
        nulls.append(_nullity_loose(power, 1.0))
    iterates = {m + 1: (int(maslov[m]) - n, nulls[m]) for m in range(max_iterate)}
    i1 = int(maslov[0])
    nu1 = nulls[0]
    im1_full = omega_index(path, -1.0, check_refinement)
    num1_full = omega_nullity(path.endpoint, -1.0)
    rec = IndexRecord(n=n, i1=i1, nu1=nu1, im1=im1_full, num1=num1_full, im1_full=im1_full,
                      iterates=iterates)
    rec.bracket = mean_index_bracket({m: v[0] for m, v in iterates.items()}, n)
    if half_path is not None:
        rec.symmetric = True
        kh = len(half_path.times) - 1
        odd = list(range(1, max_iterate + 1, 2))
        big_h = half_path.iterate(max(odd))
        vals = prefix_indices(big_h, -1.0, np.array(odd) * kh, check_refinement)
        power = np.eye(2 * n)
        powers = {}
        for m in range(1, max(odd) + 1):
            power = power @ half_path.endpoint
            powers[m] = power
        rec.odd_iterates_bar = {m: (int(v), _nullity_loose(powers[m], -1.0))
                                for m, v in zip(odd, vals)}
        rec.im1, rec.num1 = rec.odd_iterates_bar[1]
        if not 1 <= rec.num1 <= 2 * n - 1:
            rec.warnings.append(f"symmetric nullity {rec.num1} outside [1, {2 * n - 1}]")
    return rec


def _nullity_loose(m: np.ndarray, omega: complex) -> int:
    # iterated monodromies may drift slightly further from Sp(2n); the relative
    # singular value threshold keeps Jordan growth from hiding kernels
    sv = np.linalg.svd(m - omega * np.eye(m.shape[0]), compute_uv=False)
    return int(np.sum(sv < NULLITY_TOL * max(1.0, np.linalg.norm(m, 2))))


def iterate_table_indices(records: Iterable[IndexRecord]) -> list[tuple[int, int, float]]:
    """Flattened (m, i(y^m), m * mean midpoint) triples, for bound checks."""
    out = []
    for rec in records:
        mid = float((rec.bracket[0] + rec.bracket[1]) / 2) if rec.bracket else float("nan")
        for m, (i_m, _) in rec.iterates.items():
            out.append((m, i_m, m * mid))
    return out


# ---------------------------------------------------------------------------
# second route: explicit crossing forms


def _crossing_form(path: SymplecticPath, t: float, omega: complex, ker: np.ndarray,
                   h: float) -> np.ndarray:
    lo, hi = max(t - h, 0.0), min(t + h, path.t_end)
    mats = path.evaluate(np.array([lo, t, hi]))
    dot = (mats[2] - mats[0]) / (hi - lo)
    b = -standard_j(path.n) @ dot @ np.linalg.inv(mats[1])
    b = 0.5 * (b + b.T)
    q = ker.conj().T @ b @ ker
    return np.linalg.eigvalsh(0.5 * (q + q.conj().T))


def _kernel(m: np.ndarray, omega: complex, tol: float) -> np.ndarray:
    _, sv, vh = np.linalg.svd(m - omega * np.eye(m.shape[0]))
    return vh[sv < tol].conj().T


def crossing_form_index(path: SymplecticPath, omega: complex = 1.0, kernel_tol: float = 1e-6,
                        form_tol: float = 1e-9, densify: int = 4) -> int:
    """i_omega by locating crossings and summing signatures of crossing forms.

    Every crossing must be regular (non-degenerate crossing form).  The start
    contributes n_+ - n for omega = 1, interior crossings their signature and
    a crossing at the end point -n_-.  This is an independent check of the
    winding count used by ``omega_index`` and is only suitable for paths with
    regular crossings.  The scan runs on the grid refined ``densify`` times
    so that nearby crossings in different blocks are separated.
    """
    from scipy.optimize import minimize_scalar

    if densify > 1:
        path = path.refined(densify)

    def smin(t):
        m = path.evaluate(np.array([t]))[0]
        return np.linalg.svd(m - omega * np.eye(2 * path.n), compute_uv=False)[-1]

    ts = path.times
    vals = np.array([np.linalg.svd(m - omega * np.eye(2 * path.n), compute_uv=False)[-1]
                     for m in path.mats])
    dt = float(np.min(np.diff(ts)))
    total = 0
    found = []
    if _is_one(omega):
        ker = np.eye(2 * path.n)
        sig = _crossing_form(path, 0.0, omega, ker, 1e-6 * path.t_end)
        if np.min(np.abs(sig)) < form_tol:
            raise UnresolvedCrossing("degenerate crossing form at t = 0", (0.0, 0.0))
        total += int(np.sum(sig > 0)) - path.n
        found.append(0.0)
    last = len(ts) - 1
    for k in range(1, last + 1):
        left = vals[k - 1]
        right = vals[k + 1] if k < last else np.inf
        if not (vals[k] <= left and vals[k] <= right):
            continue
        if k == last:
            t_star = ts[k]
        else:
            res = minimize_scalar(smin, bounds=(ts[k - 1], ts[k + 1]), method="bounded",
                                  options={"xatol": 1e-13 * max(1.0, ts[-1])})
            t_star = float(res.x)
        if smin(t_star) > kernel_tol or any(abs(t_star - f) < 0.5 * dt for f in found):
            continue
        found.append(t_star)
        m = path.evaluate(np.array([t_star]))[0]
        ker = _kernel(m, omega, kernel_tol * 10)
        sig = _crossing_form(path, t_star, omega, ker, 1e-6 * path.t_end)
        if np.min(np.abs(sig)) < form_tol:
            raise UnresolvedCrossing(f"degenerate crossing form at t = {t_star:.6g}",
                                     (t_star, t_star))
        if abs(t_star - path.t_end) <= 1e-9 * path.t_end:
            total -= int(np.sum(sig < 0))
        else:
            total += int(np.sum(sig > 0) - np.sum(sig < 0))
    return total
