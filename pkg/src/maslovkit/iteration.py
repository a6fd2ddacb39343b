"""Normal forms in Sp(4) and closed-form index iteration formulas.

All formulas use the Morse normalization i(y^m) = i(y, m) - n with n = 2.
Rotation angles are stored as theta / pi, exactly when possible (Fraction or
sympy expression) and as a float otherwise.  E(a) is the ceiling function.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
import sympy as sp

from .errors import AmbiguousCase, MissingSplittingNumber, NoUnitBlock
from .symplectic import diamond, n1, require_symplectic, rot, standard_j

UNIT_TOL = 1e-5
ON_CIRCLE_TOL = 1e-7
IDENTITY_TOL = 1e-6
WITNESS_TOL = 1e-6
RATIONAL_DEN = 1000
N_HALF = 2
NEAR_INTEGER = 1e-7

CASES = ("case1", "case2", "case3", "case4", "hyperbolic")


# ---------------------------------------------------------------------------
# exact helpers


def ceil_exact(x) -> int:
    """E(x) = min{k in Z : k >= x} for Fraction, int or sympy input."""
    if isinstance(x, (int, Fraction)):
        return math.ceil(x)
    if isinstance(x, sp.Basic):
        return int(sp.ceiling(x))
    xr = round(x)
    if abs(x - xr) < 1e-9:
        return int(xr)
    return math.ceil(x)


def is_integer_exact(x) -> bool:
    if isinstance(x, (int, Fraction)):
        return Fraction(x).denominator == 1
    if isinstance(x, sp.Basic):
        return bool(sp.simplify(x).is_integer)
    return abs(x - round(x)) < 1e-9


def to_exact(x):
    """Fraction when x is rational (exactly or to 1e-9 for floats), else unchanged."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, sp.Basic):
        x = sp.radsimp(x)
        if x.is_Rational:
            return Fraction(int(x.p), int(x.q))
        return x
    f = Fraction(x).limit_denominator(RATIONAL_DEN)
    if abs(float(f) - x) < 1e-9:
        return f
    return float(x)


def exact_add(a, b):
    if isinstance(a, sp.Basic) or isinstance(b, sp.Basic):
        return sp.radsimp(_sym(a) + _sym(b))
    if isinstance(a, float) or isinstance(b, float):
        return float(a) + float(b)
    return Fraction(a) + Fraction(b)


def _sym(x):
    if isinstance(x, Fraction):
        return sp.Rational(x.numerator, x.denominator)
    return sp.sympify(x) if not isinstance(x, float) else sp.Float(x)


# ---------------------------------------------------------------------------
# normal forms


@dataclass
class NormalFormSp4:
    """gamma(tau) = P^{-1} (N1(1, 1) <> M) P with M classified by case.

    ``b`` is the off-diagonal sign of an N1 block (cases 1 and 3), and
    ``theta_over_pi`` the rotation angle of case 2 divided by pi, in (0, 2).
    """

    case: str
    b: int | None = None
    theta_over_pi: object = None
    rational: bool | None = None
    transverse: np.ndarray | None = field(default=None, repr=False)
    witness: np.ndarray | None = field(default=None, repr=False)
    canonical: np.ndarray | None = field(default=None, repr=False)

    @property
    def theta(self) -> float | None:
        return None if self.theta_over_pi is None else float(self.theta_over_pi) * np.pi

    @property
    def period_k(self) -> int | None:
        """Minimal K with K theta in 2 pi Z (None for irrational theta)."""
        if self.case == "case2":
            half = self.theta_over_pi
            if isinstance(half, Fraction):
                return (half / 2).denominator
            return None
        return 2 if self.case == "case1" else 1

    def witness_residual(self, m: np.ndarray) -> float:
        p = self.witness
        return float(np.max(np.abs(m - np.linalg.inv(p) @ self.canonical @ p)))

    def to_dict(self) -> dict:
        out = {"case": self.case}
        if self.b is not None:
            out["b"] = self.b
        if self.theta_over_pi is not None:
            out["theta_over_pi"] = _number_json(self.theta_over_pi)
            out["rational"] = bool(self.rational)
        return out


def _number_json(x):
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, sp.Basic):
        return {"expr": str(x), "float": float(x)}
    return float(x)


def _j2() -> np.ndarray:
    return standard_j(1)


def _sym_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _unipotent_sign(b2: np.ndarray) -> int:
    """b in {1, 0, -1} for a 2x2 block conjugate to N1(1, b)."""
    if np.max(np.abs(b2 - np.eye(2))) <= IDENTITY_TOL:
        return 0
    s = _sym_part(-_j2() @ (b2 - np.eye(2)))
    return 1 if np.trace(s) < 0 else -1


def _null_space(a: np.ndarray, dim: int) -> np.ndarray:
    _, _, vh = np.linalg.svd(a)
    return vh[-dim:].T


def _darboux_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = a @ standard_j(len(a) // 2) @ b
    if abs(s) < 1e-12:
        raise AmbiguousCase("invariant plane is not symplectic")
    return a, -b / s


def _restrict(m: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    basis = np.column_stack([u, w])
    return np.linalg.lstsq(basis, m @ basis, rcond=None)[0]


def _jordan_basis(block_minus_i: np.ndarray, s: np.ndarray):
    """(u, w) with (M - I) w = u and omega(u, w) = -1, w from the most negative direction of s."""
    ev, vec = np.linalg.eigh(s)
    w = vec[:, 0]
    val = ev[0]
    if val >= -1e-12:
        raise NoUnitBlock("no Jordan block of the form N1(1, 1) in the unit eigenspace")
    w = w / np.sqrt(-val)
    u = block_minus_i @ w
    return u, w


def _canonical_sp2(b2: np.ndarray) -> tuple[str, dict, np.ndarray, np.ndarray]:
    """Classify a 2x2 symplectic block; return (kind, params, canonical form, Q) with Q^{-1} b2 Q = form."""
    lam = np.linalg.eigvals(b2)
    one = np.abs(lam - 1.0) <= UNIT_TOL
    minus = np.abs(lam + 1.0) <= UNIT_TOL
    dist = np.abs(np.abs(lam) - 1.0)
    if np.all(one) or np.all(minus):
        sgn = 1.0 if np.all(one) else -1.0
        b = _unipotent_sign(sgn * b2)
        form = sgn * n1(1.0, b)
        if b == 0:
            q = np.eye(2)
        else:
            s = _sym_part(-_j2() @ (sgn * b2 - np.eye(2)))
            u, w = _jordan_basis(sgn * b2 - np.eye(2), b * s)
            q = _fix_det(np.column_stack([b * u, w]))
        if sgn > 0:
            return "unipotent", {"b": b}, form, q
        # N1(-1, b) = -N1(1, -b)
        return "minus", {"b": -b}, sgn * n1(1.0, b), q
    if np.any(one | minus) or np.any((dist > ON_CIRCLE_TOL) & (dist < UNIT_TOL)):
        raise AmbiguousCase(f"transverse multipliers {lam} sit inside the threshold bands")
    if np.all(dist <= ON_CIRCLE_TOL):
        w, v = np.linalg.eig(b2)
        for k in range(2):
            vec = v[:, k]
            krein = float(np.real(-1j * np.conj(vec) @ _j2() @ vec))
            if krein > 0:
                theta = float(np.angle(w[k]) % (2 * np.pi))
                q = np.column_stack([vec.real, -vec.imag])
                q = _fix_det(q)
                return "elliptic", {"theta": theta}, rot(theta), q
        raise AmbiguousCase("no Krein-positive eigenvector for an elliptic block")
    order = np.argsort(-np.abs(lam))
    w, v = np.linalg.eig(b2)
    w, v = np.real(w[order]), np.real(v[:, order])
    q = _fix_det(v)
    return "hyperbolic", {"lambda": float(w[0])}, np.diag(w), q


def _fix_det(q: np.ndarray) -> np.ndarray:
    d = np.linalg.det(q)
    if abs(d) < 1e-14:
        raise AmbiguousCase("degenerate conjugating basis")
    if d < 0:
        q = q.copy()
        q[:, 1] = -q[:, 1]
        d = -d
    return q / np.sqrt(d)


def recognize_normal_form(gamma_tau: np.ndarray, theta_over_pi_exact=None) -> NormalFormSp4:
    """Identify gamma(tau) = P^{-1} (N1(1,1) <> M) P and the case of M.

    ``theta_over_pi_exact`` may supply an exact value of theta / pi (for
    instance from closed-form rotation numbers); it is used after checking
    it against the numerically extracted angle.
    """
    m = require_symplectic(gamma_tau, 1e-7)
    if m.shape != (4, 4):
        raise ValueError("normal-form recognition is implemented for Sp(4)")
    lam = np.linalg.eigvals(m)
    ones = np.abs(lam - 1.0) <= UNIT_TOL
    near = (np.abs(lam - 1.0) > UNIT_TOL) & (np.abs(lam - 1.0) < 1e-3)
    if np.any(near):
        raise AmbiguousCase(f"multipliers {lam[near]} are close to but not equal to 1")
    k1 = int(ones.sum())
    if k1 < 2:
        raise NoUnitBlock("1 is not a double Floquet multiplier")
    eye = np.eye(4)
    jm = standard_j(2)
    if k1 == 2:
        e1 = _null_space((m - eye) @ (m - eye), 2)
        u0, w0 = _darboux_pair(e1[:, 0], e1[:, 1])
        if _unipotent_sign(_restrict(m, u0, w0)) != 1:
            raise NoUnitBlock("the unit eigenspace does not carry an N1(1, 1) block")
        u, w = _unit_pair_in_plane(m, u0, w0)
        comp = _null_space(np.vstack([u @ jm, w @ jm]), 2)
    else:
        if np.max(np.abs((m - eye) @ (m - eye))) > 1e-5:
            raise AmbiguousCase("unipotent monodromy with a Jordan block of size 4")
        s = _sym_part(-jm @ (m - eye))
        u, w = _jordan_basis(m - eye, s)
        comp = _null_space(np.vstack([u @ jm, w @ jm]), 2)
    u2, w2 = _darboux_pair(comp[:, 0], comp[:, 1])
    b2 = _restrict(m, u2, w2)
    kind, params, form2, q2 = _canonical_sp2(b2)
    basis2 = np.column_stack([u2, w2]) @ q2
    # columns of Q in the diamond ordering (q1, q2, p1, p2)
    qmat = np.column_stack([u, basis2[:, 0], w, basis2[:, 1]])
    witness = np.linalg.inv(qmat)
    canonical = diamond(n1(1.0, 1.0), form2)
    nf = _build_case(kind, params, b2, witness, canonical, theta_over_pi_exact)
    if nf.witness_residual(m) > WITNESS_TOL:
        raise AmbiguousCase(f"normal-form witness residual {nf.witness_residual(m):.2e}")
    return nf


def _unit_pair_in_plane(m: np.ndarray, u0: np.ndarray, w0: np.ndarray):
    """Jordan pair (u, w) inside the invariant plane spanned by u0, w0."""
    b1 = _restrict(m, u0, w0)
    s1 = _sym_part(-_j2() @ (b1 - np.eye(2)))
    ev, vec = np.linalg.eigh(s1)
    c = vec[:, 0] / np.sqrt(-ev[0])
    w = c[0] * u0 + c[1] * w0
    u = (m - np.eye(4)) @ w
    return u, w


def _build_case(kind, params, b2, witness, canonical, exact) -> NormalFormSp4:
    if kind == "minus":
        return NormalFormSp4("case1", b=params["b"], transverse=b2, witness=witness,
                             canonical=canonical)
    if kind == "unipotent":
        b = params["b"]
        case = "case4" if b == -1 else "case3"
        return NormalFormSp4(case, b=None if b == -1 else b, transverse=b2, witness=witness,
                             canonical=canonical)
    if kind == "hyperbolic":
        return NormalFormSp4("hyperbolic", transverse=b2, witness=witness, canonical=canonical)
    theta_pi = params["theta"] / np.pi
    value = to_exact(theta_pi)
    if exact is not None:
        ex = to_exact(exact)
        if abs(float(ex) - theta_pi) > 1e-8:
            raise AmbiguousCase(f"supplied angle {float(ex)} pi differs from computed {theta_pi} pi")
        value = ex
    rational = isinstance(value, Fraction)
    return NormalFormSp4("case2", theta_over_pi=value, rational=rational, transverse=b2,
                         witness=witness, canonical=canonical)


def recognize_half_form(psi_end: np.ndarray) -> NormalFormSp4:
    """Normal form of a half-period monodromy, N1(-1, -1) <> C up to conjugacy.

    Recognized through -psi_end = N1(1, 1) <> (-C); the returned record
    describes -C as its transverse block.
    """
    return recognize_normal_form(-np.asarray(psi_end, dtype=float))


# ---------------------------------------------------------------------------
# splitting numbers and the Bott-type iteration of omega indices


@dataclass(frozen=True)
class SplittingEntry:
    """Splitting numbers (S+, S-) of the end matrix at e^{i pi angle_over_pi}."""

    angle_over_pi: object
    s_plus: int
    s_minus: int


def block_splitting(kind: str, **params) -> list[SplittingEntry]:
    """Splitting numbers of a 2x2 normal-form block.

    N1(1, b): (1, 1) for b in {0, 1}, (0, 0) for b = -1.  N1(-1, b): (1, 1)
    for b in {0, -1}, (0, 0) for b = 1.  R(theta): (0, 1) at e^{i theta} and
    (1, 0) at e^{-i theta}.  Hyperbolic blocks have none.
    """
    if kind == "unit":
        b = params["b"]
        return [SplittingEntry(Fraction(0), 1, 1)] if b in (0, 1) else [SplittingEntry(Fraction(0), 0, 0)]
    if kind == "minus":
        b = params["b"]
        return [SplittingEntry(Fraction(1), 1, 1)] if b in (0, -1) else [SplittingEntry(Fraction(1), 0, 0)]
    if kind == "rotation":
        t = params["theta_over_pi"]
        return [SplittingEntry(t, 0, 1), SplittingEntry(exact_add(2, _neg(t)), 1, 0)]
    if kind == "hyperbolic":
        return []
    raise ValueError(f"unknown block kind {kind!r}")


def _neg(x):
    return -x


def normal_form_splitting(nf: NormalFormSp4) -> list[SplittingEntry]:
    """Splitting data of N1(1, 1) <> M for a recognized normal form."""
    out = block_splitting("unit", b=1)
    if nf.case == "case1":
        out += block_splitting("minus", b=nf.b)
    elif nf.case == "case2":
        out += block_splitting("rotation", theta_over_pi=nf.theta_over_pi)
    elif nf.case == "case3":
        out += block_splitting("unit", b=nf.b)
    elif nf.case == "case4":
        out += block_splitting("unit", b=-1)
    return out


def _cmp(a, b) -> int:
    """Sign of a - b; exact comparison only when the values nearly coincide."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a > b) - (a < b)
    d = _as_float(a) - _as_float(b)
    if abs(d) > 1e-12 or isinstance(a, float) or isinstance(b, float):
        return 0 if abs(d) <= 1e-12 else (1 if d > 0 else -1)
    diff = sp.simplify(_sym(a) - _sym(b))
    if diff == 0:
        return 0
    return 1 if sp.N(diff, 60) > 0 else -1


def _as_float(x) -> float:
    return float(sp.N(x, 30)) if isinstance(x, sp.Basic) else float(x)


def _lt(a, b) -> bool:
    return _cmp(a, b) < 0


def _eq(a, b) -> bool:
    return _cmp(a, b) == 0


def omega_index_from_splitting(i1: int, entries: Sequence[SplittingEntry], angle_over_pi) -> int:
    """i_omega at omega = e^{i pi angle} from i_1 and the end-point splitting numbers.

    i_omega = i_1 + S+(1) + sum_{0 < phi < angle} (S+ - S-)(e^{i phi}) - S-(omega)
    for angle in (0, 2); angle 0 returns i_1.
    """
    if _eq(angle_over_pi, 0):
        return i1
    total = i1
    for e in entries:
        a = e.angle_over_pi
        if _eq(a, 0):
            total += e.s_plus
        elif _lt(a, angle_over_pi):
            total += e.s_plus - e.s_minus
        elif _eq(a, angle_over_pi):
            total -= e.s_minus
    return total


def bott_iterate_index(i1: int, entries: Sequence[SplittingEntry], m: int,
                       target_over_pi=0) -> int:
    """i_omega(gamma^m) = sum over lambda^m = omega of i_lambda(gamma), omega = e^{i pi target}."""
    total = 0
    for k in range(m):
        ang = (Fraction(target_over_pi) + 2 * k) / m if not isinstance(target_over_pi, float) \
            else (target_over_pi + 2 * k) / m
        ang = ang % 2
        total += omega_index_from_splitting(i1, entries, ang)
    return total


# ---------------------------------------------------------------------------
# iteration formulas


@dataclass
class IterationFormula:
    """Closed-form iterate indices i(y^m), nullities nu(y^m) and mean index.

    ``i_morse`` is i(y) = i(y, 1) - 2.  ``s_plus`` is the splitting number
    S+ of gamma(tau) at 1, needed by the common index jump search.
    """

    case: str
    i_morse: int
    b: int | None = None
    theta_over_pi: object = None
    s_plus: int | None = None
    label: str = ""

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.case == "case2" and self.theta_over_pi is None:
            raise ValueError("case 2 needs theta")
        if self.case in ("case1", "case3") and self.b is None:
            raise ValueError(f"{self.case} needs b")

    @property
    def i_maslov(self) -> int:
        return self.i_morse + N_HALF

    def index(self, m: int) -> int:
        i = self.i_morse
        if self.case == "hyperbolic" or self.case == "case4":
            return m * (i + 3) - 3
        if self.case == "case1":
            base = m * (i + 3) - 3
            return base if self.b == 1 else base - (1 + (-1) ** m) // 2
        if self.case == "case2":
            return m * (i + 2) + 2 * self._ceil_turns(m) - 4
        return m * (i + 4) - 4

    def _ceil_turns(self, m: int) -> int:
        """E(m theta / 2 pi), exact; floats decide unless the value is near an integer."""
        t = self.theta_over_pi
        if isinstance(t, Fraction):
            return math.ceil(t * Fraction(m, 2))
        x = self._theta_float * m / 2
        if abs(x - round(x)) > NEAR_INTEGER:
            return math.ceil(x)
        return ceil_exact(_scale(t, Fraction(m, 2)))

    def _turns_integral(self, m: int) -> bool:
        t = self.theta_over_pi
        if isinstance(t, Fraction):
            return (t * Fraction(m, 2)).denominator == 1
        x = self._theta_float * m / 2
        if abs(x - round(x)) > NEAR_INTEGER:
            return False
        return is_integer_exact(_scale(t, Fraction(m, 2)))

    @functools.cached_property
    def _theta_float(self) -> float:
        t = self.theta_over_pi
        return float(sp.N(t, 30)) if isinstance(t, sp.Basic) else float(t)

    def maslov(self, m: int) -> int:
        return self.index(m) + N_HALF

    def nullity(self, m: int) -> int:
        if self.case == "hyperbolic":
            return 1
        if self.case == "case4":
            return 2
        if self.case == "case3":
            return 3 if self.b == 0 else 2
        if self.case == "case1":
            if m % 2:
                return 1
            return 3 if self.b == 0 else 2
        return 3 if self._turns_integral(m) else 1

    @property
    def period_k(self) -> int | None:
        if self.case == "case2":
            t = self.theta_over_pi
            return (Fraction(t) / 2).denominator if isinstance(t, Fraction) else None
        return 2 if self.case == "case1" else 1

    @property
    def mean(self):
        """Exact mean index: i + 3, i + 4, or i + 2 + theta / pi."""
        i = self.i_morse
        if self.case in ("hyperbolic", "case4", "case1"):
            return Fraction(i + 3)
        if self.case == "case3":
            return Fraction(i + 4)
        return exact_add(i + 2, self.theta_over_pi)

    def splitting_plus(self) -> int:
        if self.s_plus is None:
            raise MissingSplittingNumber(f"orbit {self.label or '?'} has no S+ at 1")
        return self.s_plus

    def table(self, max_m: int) -> list[tuple[int, int, int]]:
        return [(m, self.index(m), self.nullity(m)) for m in range(1, max_m + 1)]

    def to_dict(self, max_m: int = 8) -> dict:
        params = {}
        if self.b is not None:
            params["b"] = self.b
        if self.theta_over_pi is not None:
            params["theta_over_pi"] = _number_json(self.theta_over_pi)
        return {
            "case": self.case,
            "params": params,
            "i1": self.i_morse,
            "mean": _number_json(self.mean),
            "table": [list(r) for r in self.table(max_m)],
        }


def _scale(x, f: Fraction):
    if isinstance(x, Fraction):
        return x * f
    if isinstance(x, sp.Basic):
        return x * sp.Rational(f.numerator, f.denominator)
    return float(x) * float(f)


def default_splitting(nf: NormalFormSp4) -> int:
    """S+ of gamma(tau) at 1: one from N1(1, 1) plus the transverse contribution."""
    extra = 1 if nf.case == "case3" else 0
    return 1 + extra


def iteration_sequence(nf: NormalFormSp4, i1: int, label: str = "") -> IterationFormula:
    """Iteration formula of an orbit with normal form ``nf`` and i(y) = ``i1``."""
    return IterationFormula(case=nf.case, i_morse=int(i1), b=nf.b,
                            theta_over_pi=nf.theta_over_pi, s_plus=default_splitting(nf),
                            label=label)


# ---------------------------------------------------------------------------
# symmetric orbits


@dataclass
class HalfPathFormula:
    """i_1 of the iterates psi^k of a half-period path from its splitting data."""

    i1_psi: int
    entries: list[SplittingEntry]

    def i1(self, k: int) -> int:
        return bott_iterate_index(self.i1_psi, self.entries, k)

    def i_minus(self, k: int) -> int:
        return bott_iterate_index(self.i1_psi, self.entries, k, target_over_pi=1)


def hyperbolic_half(i_psi: int) -> HalfPathFormula:
    """psi(tau/2) = N1(-1, -1) <> C with C hyperbolic."""
    return HalfPathFormula(i_psi, block_splitting("minus", b=-1))


def half_formula_from_form(nf_half: NormalFormSp4, i_psi: int) -> HalfPathFormula:
    """Half-path data from the normal form of -psi(tau/2) (see recognize_half_form)."""
    entries = block_splitting("minus", b=-1)
    if nf_half.case == "case1":
        # -C = N1(-1, b) means C = N1(1, -b)
        entries += block_splitting("unit", b=-nf_half.b)
    elif nf_half.case == "case2":
        entries += block_splitting("rotation",
                                   theta_over_pi=_mod2(exact_add(nf_half.theta_over_pi, 1)))
    elif nf_half.case == "case3":
        entries += block_splitting("minus", b=-nf_half.b)
    elif nf_half.case == "case4":
        entries += block_splitting("minus", b=1)
    return HalfPathFormula(i_psi, entries)


def _mod2(x):
    if isinstance(x, Fraction):
        return x % 2
    if isinstance(x, sp.Basic):
        return sp.radsimp(x - 2 * sp.floor(x / 2))
    return float(x) % 2.0


def symmetric_iteration(half: HalfPathFormula, max_m: int) -> dict[int, int]:
    """i_bar(y^m) for odd m <= max_m via i_{-1}(psi^m) = i_1(psi^{2m}) - i_1(psi^m)."""
    return {m: half.i1(2 * m) - half.i1(m) for m in range(1, max_m + 1, 2)}


def symmetric_mean(formula: IterationFormula):
    """Mean index of a symmetric orbit, half the periodic mean index."""
    mean = formula.mean
    return mean / 2 if not isinstance(mean, sp.Basic) else mean / 2


# ---------------------------------------------------------------------------
# common index jump


@dataclass(frozen=True)
class JumpTriple:
    n: int
    ms: tuple[int, ...]


def _jump_candidates(f: IterationFormula, n_max: int) -> dict[int, list[int]]:
    """N -> all m with i(y, 2m+1) = 2N + i(y, 1) and the nullity condition."""
    i1 = f.maslov(1)
    nu1 = f.nullity(1)
    sp_ = f.splitting_plus()
    mean = float(f.mean)
    out: dict[int, list[int]] = {}
    if mean <= 0:
        return out
    m_max = int((2 * n_max + i1 + 2 * N_HALF + 2) / (2 * mean)) + 2
    for m in range(1, m_max + 1):
        upper = f.maslov(2 * m + 1) - i1
        if upper % 2 or upper < 0:
            continue
        n = upper // 2
        if n < 1 or n > n_max:
            continue
        lower = f.maslov(2 * m - 1) + f.nullity(2 * m - 1)
        if lower == 2 * n - (i1 + 2 * sp_ - nu1):
            out.setdefault(n, []).append(m)
    return out


def find_index_jump(records: Sequence[IterationFormula], n_max: int = 1000) -> list[JumpTriple]:
    """All (N, m_1, ..., m_k), N <= n_max, satisfying both jump equalities for every orbit."""
    if not records:
        return []
    tables = [_jump_candidates(f, n_max) for f in records]
    common = set(tables[0])
    for t in tables[1:]:
        common &= set(t)
    out = []
    for n in sorted(common):
        for combo in _product([tables[j][n] for j in range(len(records))]):
            out.append(JumpTriple(n, tuple(combo)))
    return out


def _product(lists: Iterable[list[int]]):
    return itertools.product(*lists)
