"""Characteristic flow, linearized flow and sampled symplectic paths.

The orbit solves y' = J N(y) on the hypersurface.  Its linearization uses the
Hamiltonian H = j^alpha, whose flow through a point of the hypersurface is the
characteristic flow sped up by alpha.  Paths are therefore reparametrized by
the characteristic time s in [0, tau], with
    z'(s) = (1/alpha) J H''(y(s)) z(s).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, logm

from .errors import NotAntiperiodic, StepUnderflow, ToleranceExceeded
from .surface import (DEFAULT_ALPHA, ON_SURFACE_TOL, GaugeSurface, _hessian_power,
                      gauge_eval, outward_normal)
from .symplectic import standard_j, symplectic_defect

RTOL = 1e-12
ATOL = 1e-13
DRIFT_TOL = 1e-8
SYMPLECTIC_DRIFT_TOL = 1e-8
MIN_SAMPLES = 128
SAMPLES_PER_TURN = 64
SYMMETRY_TOL = 1e-7


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    surface: GaugeSurface = field(repr=False)

    def drift(self) -> float:
        vals = np.array([self.surface.gauge(s) for s in self.states])
        return float(np.max(np.abs(vals - 1.0)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"x{k}" for k in range(self.states.shape[1])])
        for t, s in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in s])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"times": self.times.tolist(), "states": self.states.tolist()})


@dataclass(frozen=True)
class SymplecticPath:
    """Sampled path gamma: [0, T] -> Sp(2n) with gamma(0) = I.

    ``evaluator`` optionally evaluates the path at arbitrary times in
    [0, T]; it is used for grid refinement.  Without it refinement follows
    the symplectic geodesic exp(s log(M_{k+1} M_k^{-1})) M_k between samples.
    """

    times: np.ndarray
    mats: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False,
                                                                 compare=False)

    @property
    def n(self) -> int:
        return self.mats.shape[1] // 2

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def endpoint(self) -> np.ndarray:
        return self.mats[-1]

    def symplectic_drift(self) -> float:
        j = standard_j(self.n)
        d = np.einsum("kji,jl,klm->kim", self.mats, j, self.mats) - j
        return float(np.max(np.abs(d)))

    def start_defect(self) -> float:
        return float(np.max(np.abs(self.mats[0] - np.eye(2 * self.n))))

    def evaluate(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.evaluator is not None:
            return self.evaluator(ts)
        return _geodesic_interp(self.times, self.mats, ts)

    def refined(self, factor: int = 2) -> "SymplecticPath":
        """Same path with every grid interval split into ``factor`` pieces."""
        t = self.times
        frac = np.arange(factor) / factor
        new_t = (t[:-1, None] + np.diff(t)[:, None] * frac[None, :]).ravel()
        new_t = np.append(new_t, t[-1])
        mats = self.evaluate(new_t)
        mats[::factor] = self.mats  # keep the original samples bit-for-bit
        return SymplecticPath(new_t, mats, self.evaluator)

    def coarsened(self) -> "SymplecticPath":
        """Every other sample (the endpoint is always kept)."""
        idx = np.arange(0, len(self.times), 2)
        if idx[-1] != len(self.times) - 1:
            idx = np.append(idx, len(self.times) - 1)
        return SymplecticPath(self.times[idx], self.mats[idx], self.evaluator)

    def iterate(self, m: int) -> "SymplecticPath":
        """The m-fold iterate: gamma(t + k T) = gamma(t) gamma(T)^k."""
        if m < 1:
            raise ValueError("iterate count must be positive")
        if m == 1:
            return self
        period = self.t_end
        end = self.endpoint
        powers = [np.eye(2 * self.n)]
        for _ in range(1, m):
            powers.append(powers[-1] @ end)
        times = [self.times]
        mats = [self.mats]
        for k in range(1, m):
            times.append(self.times[1:] + k * period)
            mats.append(self.mats[1:] @ powers[k])
        base_eval = self.evaluate

        def evaluator(ts, _powers=powers, _period=period, _m=m):
            ts = np.atleast_1d(np.asarray(ts, dtype=float))
            k = np.clip(np.floor(ts / _period).astype(int), 0, _m - 1)
            local = ts - k * _period
            out = base_eval(local)
            for kk in np.unique(k):
                sel = k == kk
                out[sel] = out[sel] @ _powers[kk]
            return out

        return SymplecticPath(np.concatenate(times), np.concatenate(mats), evaluator)

    def restrict(self, t_end: float) -> "SymplecticPath":
        """Path restricted to [0, t_end]; t_end must be a sample time."""
        k = int(np.searchsorted(self.times, t_end - 1e-12 * max(1.0, abs(t_end))))
        if k >= len(self.times) or abs(self.times[k] - t_end) > 1e-9 * max(1.0, abs(t_end)):
            raise ValueError("restriction time must be a sample time")
        return SymplecticPath(self.times[:k + 1].copy(), self.mats[:k + 1].copy(), self.evaluator)

    def conjugated(self, p: np.ndarray) -> "SymplecticPath":
        """t -> P^{-1} gamma(t) P, which has the same indices."""
        pinv = np.linalg.inv(p)
        ev = None
        if self.evaluator is not None:
            base = self.evaluator
            ev = lambda ts: pinv @ base(ts) @ p  # noqa: E731
        return SymplecticPath(self.times, pinv @ self.mats @ p, ev)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = self.mats.shape[1]
        w.writerow(["t"] + [f"m{i}{j}" for i in range(dim) for j in range(dim)])
        for t, m in zip(self.times, self.mats):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in m.ravel()])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"times": self.times.tolist(), "mats": self.mats.tolist()})


def path_from_csv(text: str) -> SymplecticPath:
    """Parse a path file: one row per sample, t followed by the row-major matrix."""
    rows = []
    for line in csv.reader(io.StringIO(text)):
        if not line or not line[0].strip():
            continue
        try:
            rows.append([float(v) for v in line])
        except ValueError:
            if rows:
                raise
            continue  # header
    if len(rows) < 2:
        raise ValueError("a path needs at least two samples")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged path file")
    dim = int(round(np.sqrt(width - 1)))
    if dim * dim != width - 1 or dim % 2:
        raise ValueError("each row must hold t and a 2n x 2n matrix")
    data = np.array(rows)
    times = data[:, 0]
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    mats = data[:, 1:].reshape(-1, dim, dim)
    return SymplecticPath(times, mats)


def _geodesic_interp(times: np.ndarray, mats: np.ndarray, ts: np.ndarray) -> np.ndarray:
    out = np.empty((len(ts),) + mats.shape[1:])
    idx = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, len(times) - 2)
    cache: dict[int, np.ndarray] = {}
    for q, (t, k) in enumerate(zip(ts, idx)):
        h = times[k + 1] - times[k]
        s = (t - times[k]) / h
        if s <= 0.0:
            out[q] = mats[k]
            continue
        if s >= 1.0:
            out[q] = mats[k + 1]
            continue
        if k not in cache:
            step = mats[k + 1] @ np.linalg.inv(mats[k])
            cache[k] = np.real(logm(step))
        out[q] = expm(s * cache[k]) @ mats[k]
    return out


def _solve(rhs, t_end, y0, rtol, atol):
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True)
    if sol.status == -1:
        if "step size" in sol.message.lower():
            raise StepUnderflow(sol.message)
        raise ToleranceExceeded(sol.message)
    return sol


def characteristic_rhs(surface: GaugeSurface) -> Callable[[float, np.ndarray], np.ndarray]:
    j = standard_j(surface.dim_half)

    def rhs(_t, y):
        g = surface.grad(y)
        return j @ (g / np.dot(g, y))

    return rhs


def integrate_flow(surface: GaugeSurface, y0, t_end: float, n_samples: int | None = None,
                   rtol: float = RTOL, atol: float = ATOL) -> Trajectory:
    """Integrate y' = J N(y) from a point of the hypersurface."""
    y0 = np.asarray(y0, dtype=float)
    outward_normal(surface, y0)  # validates the starting point
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    rhs = characteristic_rhs(surface)
    for attempt in range(3):
        sol = _solve(rhs, t_end, y0, rtol, atol)
        k = n_samples or max(MIN_SAMPLES, len(sol.t) * 4)
        ts = np.linspace(0.0, t_end, k + 1)
        states = sol.sol(ts).T
        states[0] = y0
        traj = Trajectory(ts, states, surface)
        if traj.drift() <= DRIFT_TOL:
            return traj
        rtol, atol = rtol * 0.1, atol * 0.1
    raise ToleranceExceeded(f"on-surface drift {traj.drift():.3e} exceeds {DRIFT_TOL:.0e}")


def rotation_rate(surface: GaugeSurface, y, alpha: float = DEFAULT_ALPHA) -> float:
    """Largest rotation speed of the linearized flow at y (characteristic time)."""
    a = _hessian_power(surface, np.asarray(y, dtype=float), alpha) / alpha
    ev = np.linalg.eigvals(standard_j(surface.dim_half) @ a)
    return float(np.max(np.abs(ev)))


def samples_for(surface: GaugeSurface, trajectory_points: np.ndarray, t_end: float,
                alpha: float = DEFAULT_ALPHA) -> int:
    rate = max(rotation_rate(surface, y, alpha) for y in trajectory_points)
    turns = t_end * rate / (2.0 * np.pi)
    k = max(MIN_SAMPLES, int(np.ceil(SAMPLES_PER_TURN * turns)))
    return k + (k % 2)


def integrate_linearized(surface: GaugeSurface, y0, t_end: float,
                         alpha: float = DEFAULT_ALPHA, n_samples: int | None = None,
                         rtol: float = RTOL, atol: float = ATOL
                         ) -> tuple[Trajectory, SymplecticPath]:
    """Integrate the orbit together with its fundamental solution.

    Returns the trajectory and the path gamma(s), s in [0, t_end], both on a
    uniform grid with at least 64 samples per turn of the fastest block.
    """
    y0 = np.asarray(y0, dtype=float)
    outward_normal(surface, y0)
    dim = surface.dim
    j = standard_j(surface.dim_half)
    char = characteristic_rhs(surface)

    def rhs(t, state):
        y = state[:dim]
        z = state[dim:].reshape(dim, dim)
        a = _hessian_power(surface, y, alpha) / alpha
        return np.concatenate([char(t, y), (j @ a @ z).ravel()])

    init = np.concatenate([y0, np.eye(dim).ravel()])
    for _ in range(3):
        sol = _solve(rhs, t_end, init, rtol, atol)
        if n_samples is None:
            coarse = sol.sol(np.linspace(0.0, t_end, 33)).T[:, :dim]
            k = samples_for(surface, coarse, t_end, alpha)
        else:
            k = n_samples + (n_samples % 2)
        ts = np.linspace(0.0, t_end, k + 1)
        full = sol.sol(ts).T
        full[0] = init
        traj = Trajectory(ts, full[:, :dim], surface)
        mats = full[:, dim:].reshape(-1, dim, dim)
        evaluator = _dense_evaluator(sol, dim)
        path = SymplecticPath(ts, mats, evaluator)
        if traj.drift() <= DRIFT_TOL and path.symplectic_drift() <= SYMPLECTIC_DRIFT_TOL:
            return traj, path
        rtol, atol = rtol * 0.1, atol * 0.1
    raise ToleranceExceeded(
        f"drift {traj.drift():.3e} / symplectic drift {path.symplectic_drift():.3e} over budget")


def _dense_evaluator(sol, dim):
    def evaluator(ts):
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        vals = sol.sol(ts).T[:, dim:].reshape(-1, dim, dim)
        vals[ts == 0.0] = np.eye(dim)
        return vals

    return evaluator


def monodromy_path(surface: GaugeSurface, orbit, fraction=1, alpha: float = DEFAULT_ALPHA,
                   n_samples: int | None = None, method: str = "concatenate") -> SymplecticPath:
    """Fundamental solution along a closed orbit.

    ``fraction`` is 1/2 (half period, symmetric orbits only), 1, or an
    integer m >= 1.  For m > 1 the path is built from one period by the
    semigroup rule unless ``method="integrate"`` asks for direct integration
    over m periods.
    """
    from fractions import Fraction

    frac = Fraction(fraction).limit_denominator(1000)
    tau = orbit.period
    if frac == Fraction(1, 2):
        if not orbit.symmetric:
            raise NotAntiperiodic("half-period path requested for a non-symmetric orbit")
        _, path = integrate_linearized(surface, orbit.y0, 0.5 * tau, alpha, n_samples)
        return path
    if frac.denominator != 1 or frac < 1:
        raise ValueError("fraction must be 1/2 or a positive integer")
    m = int(frac)
    if method == "integrate" or m == 1:
        per = None if n_samples is None else n_samples * m
        _, path = integrate_linearized(surface, orbit.y0, m * tau, alpha, per)
        return path
    _, path = integrate_linearized(surface, orbit.y0, tau, alpha, n_samples)
    return path.iterate(m)


def check_symmetric(orbit, tol: float = SYMMETRY_TOL) -> bool:
    """True iff y(t + tau/2) = -y(t) on the sampled trajectory."""
    traj = orbit.samples
    times = traj.times
    half = 0.5 * orbit.period
    k = len(times) - 1
    if k % 2 == 0 and abs(times[k // 2] - half) < 1e-12 * max(1.0, half):
        first = traj.states[: k // 2 + 1]
        second = traj.states[k // 2:]
        return bool(np.max(np.abs(first + second)) <= tol)
    # fall back to re-integration from y0 on a grid aligned with tau/2
    tr = integrate_flow(orbit.surface, orbit.y0, orbit.period, n_samples=2 * max(64, k // 2))
    k = len(tr.times) - 1
    return bool(np.max(np.abs(tr.states[: k // 2 + 1] + tr.states[k // 2:])) <= tol)


def hamiltonian_path(a_of_t: Callable[[float], np.ndarray], t_end: float, n_samples: int = 512,
                     rtol: float = RTOL, atol: float = ATOL) -> SymplecticPath:
    """Fundamental solution of z' = J A(t) z for a symmetric matrix function A."""
    a0 = np.asarray(a_of_t(0.0))
    dim = a0.shape[0]
    j = standard_j(dim // 2)

    def rhs(t, state):
        z = state.reshape(dim, dim)
        a = np.asarray(a_of_t(t))
        return (j @ (0.5 * (a + a.T)) @ z).ravel()

    sol = _solve(rhs, t_end, np.eye(dim).ravel(), rtol, atol)
    ts = np.linspace(0.0, t_end, n_samples + 1)
    mats = sol.sol(ts).T.reshape(-1, dim, dim)
    mats[0] = np.eye(dim)

    def evaluator(tt):
        tt = np.atleast_1d(np.asarray(tt, dtype=float))
        vals = sol.sol(tt).T.reshape(-1, dim, dim)
        vals[tt == 0.0] = np.eye(dim)
        return vals

    return SymplecticPath(ts, mats, evaluator)


def product_path(pieces: Sequence[Callable[[np.ndarray], np.ndarray]], t_end: float,
                 n_samples: int = 512) -> SymplecticPath:
    """Path given in closed form as a callable t -> stack of matrices."""
    ts = np.linspace(0.0, t_end, n_samples + 1)

    def evaluator(tt):
        tt = np.atleast_1d(np.asarray(tt, dtype=float))
        out = pieces[0](tt)
        for p in pieces[1:]:
            out = out @ p(tt)
        return out

    return SymplecticPath(ts, evaluator(ts), evaluator)


def on_surface(surface: GaugeSurface, y, tol: float = ON_SURFACE_TOL) -> bool:
    return abs(gauge_eval(surface, y) - 1.0) <= tol


def max_symplectic_defect(mats: np.ndarray) -> float:
    return max(symplectic_defect(m) for m in mats)
