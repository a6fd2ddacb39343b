"""Mean index identities and Morse series inequalities.

Per-orbit invariants (mean index and average Euler characteristic) are
summed exactly when every term is exact.  Mean indices known only as
brackets are propagated with interval arithmetic on rationals.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import sympy as sp

from .errors import (InvalidTypeNumbers, SignAmbiguous, TruncationTooTight,
                     UnboundedContribution)

N_HALF = 2
FLOAT_TOL = 1e-10
BRACKET_CAP = Fraction(1, 8)
SYMMETRIC_BRACKET_CAP = Fraction(1, 4)

IDENTITIES = {
    "periodic_positive": Fraction(1, 2),
    "periodic_negative": Fraction(0),
    "symmetric_positive": Fraction(1),
    "symmetric_negative": Fraction(0),
}


# ---------------------------------------------------------------------------
# numbers


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with rational end points."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def scale(self, c: Fraction) -> "Interval":
        a, b = c * self.lo, c * self.hi
        return Interval(min(a, b), max(a, b))

    def reciprocal(self) -> "Interval":
        if self.contains_zero():
            raise SignAmbiguous(f"interval [{self.lo}, {self.hi}] contains 0")
        return Interval(1 / self.hi, 1 / self.lo)

    def halve(self) -> "Interval":
        return Interval(self.lo / 2, self.hi / 2)

    def to_dict(self) -> dict:
        return {"lo": number_json(self.lo), "hi": number_json(self.hi)}


def number_json(x):
    """JSON form: {num, den} for rationals, {expr, float} for symbolic, floats as is."""
    if isinstance(x, int):
        x = Fraction(x)
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, Interval):
        return x.to_dict()
    if isinstance(x, sp.Basic):
        if x.is_Rational:
            return {"num": int(x.p), "den": int(x.q)}
        return {"expr": str(x), "float": float(x)}
    return float(x)


def _sign(x) -> int:
    if isinstance(x, Interval):
        if x.contains_zero():
            raise SignAmbiguous(f"mean-index bracket [{x.lo}, {x.hi}] contains 0")
        return 1 if x.lo > 0 else -1
    v = float(x)
    if v == 0:
        if isinstance(x, sp.Basic) and not x.is_zero:
            v = float(sp.N(x, 50))
        if v == 0:
            return 0
    return 1 if v > 0 else -1


def _to_sympy(x):
    if isinstance(x, Fraction):
        return sp.Rational(x.numerator, x.denominator)
    if isinstance(x, int):
        return sp.Integer(x)
    return x


def _is_zero_exact(x) -> bool:
    if isinstance(x, Fraction):
        return x == 0
    simplified = sp.simplify(x)
    if simplified == 0:
        return True
    eq = simplified.equals(0)
    return bool(eq)


# ---------------------------------------------------------------------------
# critical type numbers


def validate_type_numbers(k: Sequence[int], nu: int) -> list[str]:
    """Violations of the structural rules on the type numbers k_l, l = 0, 1, ...

    Returns an empty list when k is admissible for nullity ``nu``.
    """
    k = list(k)
    out = []
    if any(v < 0 for v in k):
        out.append("negative type number")
    for l, v in enumerate(k):
        if v and not 0 <= l <= nu - 1:
            out.append(f"support: k_{l} = {v} outside [0, {nu - 1}]")
    if nu <= 0:
        return out
    k = k + [0] * max(0, nu - len(k))
    top = nu - 1
    if k[0] not in (0, 1):
        out.append(f"endpoint: k_0 = {k[0]} not in {{0, 1}}")
    if k[top] not in (0, 1):
        out.append(f"endpoint: k_{top} = {k[top]} not in {{0, 1}}")
    if k[0] == 1 and any(k[l] for l in range(1, nu)):
        out.append("rule (i): k_0 = 1 but a higher k_l is non-zero")
    if nu >= 2 and k[top] == 1 and any(k[l] for l in range(0, top)):
        out.append(f"rule (ii): k_{top} = 1 but a lower k_l is non-zero")
    if any(k[l] >= 1 for l in range(1, top)) and (k[0] or k[top]):
        out.append("rule (iii): a middle k_l is non-zero together with an end value")
    if nu <= 3 and sum(1 for l in range(nu) if k[l]) > 1:
        out.append("rule (iv): more than one non-zero k_l with nullity at most 3")
    return out


def require_valid(k: Sequence[int], nu: int, where: str = "") -> None:
    bad = validate_type_numbers(k, nu)
    if bad:
        raise InvalidTypeNumbers(f"invalid type numbers {where}: {'; '.join(bad)}", bad)


@dataclass
class TypeData:
    """Iterate data over one period of the critical modules.

    ``iterates`` lists the iterates m covered: 1..K for periodic data and the
    odd iterates 1, 3, .., K - 1 for symmetric data (K even).  ``indices``
    and ``nullities`` are keyed by iterate; ``type_numbers`` may omit
    non-degenerate iterates (nullity 1), which then get k_0 = 1 when the
    index has the parity of the first index, and 0 otherwise.
    """

    period_k: int
    indices: Mapping[int, int]
    nullities: Mapping[int, int]
    type_numbers: Mapping[int, Sequence[int]] = field(default_factory=dict)
    symmetric: bool = False

    @property
    def iterates(self) -> list[int]:
        if self.symmetric:
            if self.period_k % 2:
                raise InvalidTypeNumbers("symmetric period must be even")
            return list(range(1, self.period_k, 2))
        return list(range(1, self.period_k + 1))

    def numbers(self, m: int) -> list[int]:
        if m in self.type_numbers:
            return list(self.type_numbers[m])
        nu = self.nullities[m]
        if nu != 1:
            raise InvalidTypeNumbers(f"iterate {m} is degenerate (nullity {nu}) and has no type numbers")
        return [1 if (self.indices[m] - self.indices[1]) % 2 == 0 else 0]

    def validate(self) -> None:
        for m in self.iterates:
            require_valid(self.numbers(m), self.nullities[m], f"of iterate {m}")


def euler_hat(i_y: int, jump_even: bool | None = None, data: TypeData | None = None) -> Fraction:
    """Average Euler characteristic of a closed characteristic.

    Non-degenerate orbits: (-1)^i when i(y^2) - i(y) is even, half that when
    odd.  Degenerate orbits: the exact average over one period of the
    alternating sums of the supplied type numbers.
    """
    if data is None:
        if jump_even is None:
            raise ValueError("the parity of i(y^2) - i(y) is required for non-degenerate orbits")
        s = Fraction((-1) ** (i_y % 2))
        return s if jump_even else s / 2
    data.validate()
    total = 0
    for m in data.iterates:
        for l, kl in enumerate(data.numbers(m)):
            total += (-1) ** ((data.indices[m] + l) % 2) * kl
    return Fraction(total, data.period_k)


def euler_hat_symmetric(ibar: int, data: TypeData | None = None) -> Fraction:
    """Average Euler characteristic over odd iterates: (-1)^ibar when non-degenerate."""
    if data is None:
        return Fraction((-1) ** (ibar % 2))
    if not data.symmetric:
        raise InvalidTypeNumbers("symmetric type data expected")
    data.validate()
    total = 0
    for m in data.iterates:
        for l, kl in enumerate(data.numbers(m)):
            total += (-1) ** ((data.indices[m] + l) % 2) * kl
    return Fraction(2 * total, data.period_k)


# ---------------------------------------------------------------------------
# identities


@dataclass
class OrbitInvariants:
    """Mean index and average Euler characteristic of one prime orbit.

    ``mean`` is a Fraction, a sympy expression, a float or an Interval.
    Symmetric orbits also carry the half mean index and the symmetric
    average Euler characteristic.
    """

    orbit_id: str
    mean: object
    chi_hat: Fraction | None
    symmetric: bool = False
    mean_bar: object = None
    chi_bar_hat: Fraction | None = None
    nondegenerate: bool = True
    period_k: int | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.symmetric and self.mean_bar is None:
            self.mean_bar = half(self.mean)

    def to_dict(self) -> dict:
        out = {"id": self.orbit_id, "mean": number_json(self.mean),
               "chi_hat": None if self.chi_hat is None else number_json(self.chi_hat),
               "nondegenerate": self.nondegenerate, "symmetric": self.symmetric}
        if self.symmetric:
            out["mean_bar"] = number_json(self.mean_bar)
            out["chi_bar_hat"] = None if self.chi_bar_hat is None else number_json(self.chi_bar_hat)
        if self.period_k is not None:
            out["period_k"] = self.period_k
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def half(x):
    if isinstance(x, Interval):
        return x.halve()
    if isinstance(x, (Fraction, int)):
        return Fraction(x) / 2
    return x / 2


@dataclass
class IdentityReport:
    identity: str
    value: object
    target: Fraction
    residual: object
    tolerance: object
    verdict: str
    terms: list[dict]
    mode: str
    complete_orbit_set: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "value": number_json(self.value),
            "target": number_json(self.target),
            "residual": number_json(self.residual),
            "tolerance": number_json(self.tolerance),
            "verdict": self.verdict,
            "mode": self.mode,
            "terms": self.terms,
            "complete_orbit_set": self.complete_orbit_set,
            "notes": list(self.notes),
        }

    def csv_row(self) -> list:
        return [self.identity, _flt(self.value), _flt(self.target), _flt(self.residual),
                _flt(self.tolerance), self.verdict, self.mode]


def _flt(x) -> str:
    if isinstance(x, Interval):
        return f"[{float(x.lo):.12g},{float(x.hi):.12g}]"
    return f"{float(x):.12g}"


def reports_csv(reports: Sequence[IdentityReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["identity", "value", "target", "residual", "tolerance", "verdict", "mode"])
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _term(chi, mean):
    """chi / mean as exact, float or interval value."""
    if isinstance(mean, Interval):
        return mean.reciprocal().scale(Fraction(chi))
    if isinstance(mean, float):
        return float(chi) / mean
    if isinstance(mean, (Fraction, int)):
        return Fraction(chi) / Fraction(mean)
    return sp.radsimp(_to_sympy(Fraction(chi)) / mean)


def _sum(values):
    if any(isinstance(v, Interval) for v in values):
        total = Interval(Fraction(0), Fraction(0))
        for v in values:
            total = total + (v if isinstance(v, Interval) else _point_interval(v))
        return total, "bracket"
    if any(isinstance(v, float) for v in values):
        return sum(float(v) for v in values), "float"
    if any(isinstance(v, sp.Basic) for v in values):
        return sp.radsimp(sum(_to_sympy(v) for v in values)), "exact"
    return sum((Fraction(v) for v in values), Fraction(0)), "exact"


def _point_interval(v) -> Interval:
    if isinstance(v, (Fraction, int)):
        return Interval(Fraction(v), Fraction(v))
    f = Fraction(float(v))
    pad = Fraction(1, 10**12) * max(1, abs(f))
    return Interval(f - pad, f + pad)


def _one_identity(name: str, terms: list[tuple[str, object, object]], complete: bool,
                  cap: Fraction) -> IdentityReport:
    target = IDENTITIES[name]
    values = [_term(chi, mean) for _, chi, mean in terms]
    term_json = [{"id": oid, "chi": number_json(chi), "mean": number_json(mean),
                  "term": number_json(v)} for (oid, chi, mean), v in zip(terms, values)]
    notes = [] if complete else ["orbit set not certified complete; verdict is advisory"]
    if not values:
        return IdentityReport(name, Fraction(0), target, -target, Fraction(0),
                              "PASS" if target == 0 else "FAIL", term_json, "exact",
                              complete, notes + ["empty sum"])
    total, mode = _sum(values)
    if mode == "exact":
        residual = _to_sympy(total) - _to_sympy(target) if isinstance(total, sp.Basic) \
            else total - target
        ok = _is_zero_exact(residual)
        residual = Fraction(0) if ok else residual
        return IdentityReport(name, total, target, residual, Fraction(0),
                              "PASS" if ok else "FAIL", term_json, mode, complete, notes)
    if mode == "float":
        residual = total - float(target)
        return IdentityReport(name, total, target, residual, FLOAT_TOL,
                              "PASS" if abs(residual) <= FLOAT_TOL else "FAIL", term_json,
                              mode, complete, notes)
    residual = total.mid - target
    tol = 2 * total.width
    ok = abs(residual) <= tol and tol <= cap
    if tol > cap:
        notes.append(f"bracket tolerance {float(tol):.4g} exceeds the cap {cap}")
    return IdentityReport(name, total, target, residual, tol, "PASS" if ok else "FAIL",
                          term_json, mode, complete, notes)


def identity_sums(orbits: Sequence[OrbitInvariants], complete: bool = False,
                  symmetric: bool | None = None) -> list[IdentityReport]:
    """Evaluate the periodic and (when applicable) symmetric mean index identities.

    Orbits are split by the sign of their mean index; a bracket containing
    0 raises SignAmbiguous.  Symmetric identities are evaluated when every
    orbit is symmetric (or when ``symmetric`` is forced True).
    """
    pos, neg = [], []
    for o in orbits:
        if o.chi_hat is None:
            raise ValueError(f"orbit {o.orbit_id} has no average Euler characteristic")
        s = _sign(o.mean)
        if s > 0:
            pos.append((o.orbit_id, o.chi_hat, o.mean))
        elif s < 0:
            neg.append((o.orbit_id, o.chi_hat, o.mean))
    out = [_one_identity("periodic_positive", pos, complete, BRACKET_CAP),
           _one_identity("periodic_negative", neg, complete, BRACKET_CAP)]
    if symmetric is None:
        symmetric = bool(orbits) and all(o.symmetric for o in orbits)
    if symmetric:
        spos, sneg = [], []
        for o in orbits:
            if not o.symmetric or o.chi_bar_hat is None:
                raise ValueError(f"orbit {o.orbit_id} lacks symmetric data")
            s = _sign(o.mean_bar)
            if s > 0:
                spos.append((o.orbit_id, o.chi_bar_hat, o.mean_bar))
            elif s < 0:
                sneg.append((o.orbit_id, o.chi_bar_hat, o.mean_bar))
        out += [_one_identity("symmetric_positive", spos, complete, SYMMETRIC_BRACKET_CAP),
                _one_identity("symmetric_negative", sneg, complete, SYMMETRIC_BRACKET_CAP)]
    return out


# ---------------------------------------------------------------------------
# forced values


def admissible_euler_values(nondegenerate: bool, symmetric: bool):
    """Finite set of possible average Euler characteristics, or None when only |chi| <= 1 is known."""
    if not nondegenerate:
        return None
    if symmetric:
        return {Fraction(-1), Fraction(1)}
    return {Fraction(-1), Fraction(1), Fraction(-1, 2), Fraction(1, 2)}


@dataclass
class ForcedValueReport:
    orbit_id: str
    identity: str
    forced: object
    admissible: list | None
    verdict: str

    def to_dict(self) -> dict:
        return {"id": self.orbit_id, "identity": self.identity,
                "forced": number_json(self.forced),
                "admissible": None if self.admissible is None
                else [number_json(v) for v in self.admissible],
                "verdict": self.verdict}


def forced_euler_value(known: Sequence[OrbitInvariants], unknown: OrbitInvariants,
                       symmetric: bool = True) -> ForcedValueReport:
    """Average Euler characteristic the ``unknown`` orbit must have for the positive identity.

    The verdict is FAIL when the forced value is impossible for that orbit:
    outside {-1, 1} (symmetric) or {+-1, +-1/2} for non-degenerate orbits,
    outside [-1, 1] otherwise.
    """
    name = "symmetric_positive" if symmetric else "periodic_positive"
    mean_u = unknown.mean_bar if symmetric else unknown.mean
    if _sign(mean_u) <= 0:
        raise ValueError("the unknown orbit must have positive mean index")
    rest = []
    for o in known:
        mean = o.mean_bar if symmetric else o.mean
        chi = o.chi_bar_hat if symmetric else o.chi_hat
        if _sign(mean) > 0:
            rest.append(_term(chi, mean))
    total, mode = _sum(rest) if rest else (Fraction(0), "exact")
    if mode == "bracket" or isinstance(mean_u, Interval):
        raise ValueError("forced values need exact mean indices")
    if isinstance(total, sp.Basic) or isinstance(mean_u, sp.Basic):
        forced = sp.radsimp((_to_sympy(IDENTITIES[name]) - _to_sympy(total)) * _to_sympy(mean_u))
        if forced.is_Rational:
            forced = Fraction(int(forced.p), int(forced.q))
    else:
        forced = (IDENTITIES[name] - total) * mean_u
    adm = admissible_euler_values(unknown.nondegenerate, symmetric)
    if adm is None:
        ok = abs(float(forced)) <= 1
    else:
        ok = isinstance(forced, Fraction) and forced in adm
    return ForcedValueReport(unknown.orbit_id, name, forced,
                             None if adm is None else sorted(adm), "PASS" if ok else "FAIL")


# ---------------------------------------------------------------------------
# Morse series


@dataclass
class SeriesOrbit:
    """Iterate data feeding the Morse series.

    ``index(m)`` and ``type_numbers(m)`` are queried for m = 1, 2, ... in
    the periodic variant and m = 1, 3, 5, ... in the symmetric variant.
    """

    label: str
    index: Callable[[int], int]
    mean: float
    type_numbers: Callable[[int], Sequence[int]]
    symmetric: bool = False


def series_orbit_from_formula(formula, type_numbers: Mapping[int, Sequence[int]] | None = None,
                              label: str = "") -> SeriesOrbit:
    """Periodic series data from an IterationFormula.

    Degenerate iterates need ``type_numbers`` keyed by residue class: the
    entry for m is looked up as m mod K (with K itself for residue 0).
    """
    k = formula.period_k
    supplied = dict(type_numbers or {})
    i1 = formula.index(1)

    def numbers(m):
        if formula.nullity(m) == 1:
            return [1 if (formula.index(m) - i1) % 2 == 0 else 0]
        key = m if k is None else ((m - 1) % k) + 1
        if key not in supplied:
            raise InvalidTypeNumbers(f"degenerate iterate {m} of {label or 'orbit'} lacks type numbers")
        require_valid(supplied[key], formula.nullity(m), f"of iterate {m}")
        return list(supplied[key])

    return SeriesOrbit(label or formula.label, formula.index, float(formula.mean), numbers)


def series_orbit_symmetric(ibar: Callable[[int], int], mean_bar: float, label: str = "",
                           type_numbers: Callable[[int], Sequence[int]] | None = None) -> SeriesOrbit:
    """Symmetric series data: odd iterates only, k_0 = 1 by default."""
    return SeriesOrbit(label, ibar, float(mean_bar), type_numbers or (lambda m: [1]),
                       symmetric=True)


@dataclass
class MorseSeries:
    window: tuple[int, int]
    coeffs: dict[int, int]
    below_window: bool
    symmetric: bool

    def to_dict(self) -> dict:
        lo, hi = self.window
        return {"window": [lo, hi], "symmetric": self.symmetric,
                "coefficients": {str(h): self.coeffs.get(h, 0) for h in range(lo, hi + 1)},
                "below_window": self.below_window}


MAX_LEVEL = 4 * N_HALF - 2


def morse_series(orbits: Sequence[SeriesOrbit], window: tuple[int, int],
                 symmetric: bool = False) -> MorseSeries:
    """Coefficients w_h of the Morse series on the window [lo, hi].

    Every iterate whose index plus level l lands in the window is counted
    with weight k_l.  The index bound |i(y^m) - m i_hat| <= 2n stops the
    enumeration.  Orbits with zero mean index whose contributions reach the
    window raise UnboundedContribution.
    """
    lo, hi = window
    coeffs = {h: 0 for h in range(lo, hi + 1)}
    below = False
    step = 2 if symmetric else 1
    for orb in orbits:
        mean = orb.mean
        if mean == 0:
            if lo <= 2 * N_HALF + MAX_LEVEL and hi >= -2 * N_HALF:
                raise UnboundedContribution(f"orbit {orb.label} has zero mean index")
            continue
        if mean < 0:
            below = True
        m = 1
        while True:
            low_idx = m * mean - 2 * N_HALF
            high_idx = m * mean + 2 * N_HALF + MAX_LEVEL
            if mean > 0 and low_idx > hi:
                break
            if mean < 0 and high_idx < lo:
                break
            i_m = orb.index(m)
            for l, kl in enumerate(orb.type_numbers(m)):
                if not kl:
                    continue
                h = i_m + l
                if h < lo:
                    below = True
                elif h <= hi:
                    coeffs[h] += kl
            m += step
    return MorseSeries((lo, hi), coeffs, below, symmetric)


@dataclass
class MorseCheck:
    verdict: str
    u: dict[int, int]
    interior: tuple[int, int]
    lowest: int | None
    violations: list[str]
    notes: list[str]

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "interior": list(self.interior),
                "lowest_degree": self.lowest,
                "u": {str(h): v for h, v in sorted(self.u.items())},
                "violations": list(self.violations), "notes": list(self.notes)}


def morse_inequality_check(series: MorseSeries) -> MorseCheck:
    """Check that (M(t) - 1/(1 - t^2)) / (1 + t) has non-negative coefficients.

    The division runs upward from the bottom of the window, so nothing may
    contribute below it.  The two top degrees are boundary terms and are
    not checked.  The lowest non-zero degree p < 0 must satisfy
    m_{p+1} >= m_p.
    """
    lo, hi = series.window
    m = series.coeffs
    nonzero = [h for h in range(lo, hi + 1) if m.get(h, 0)]
    if not nonzero:
        return MorseCheck("PASS", {}, (lo, hi - 2), None, [],
                          ["empty series: the -1/(1 - t^2) term alone cannot be matched"])
    if series.below_window:
        raise TruncationTooTight("contributions below the window; enlarge the window")
    p = nonzero[0]
    interior = (lo, hi - 2)
    if not interior[0] <= p + 1 <= interior[1]:
        raise TruncationTooTight(f"lowest degree {p} leaves no room to check degree {p + 1}")
    u = {}
    prev = 0
    for h in range(lo, hi + 1):
        d = m.get(h, 0) - (1 if h >= 0 and h % 2 == 0 else 0)
        prev = d - prev
        u[h] = prev
    violations = [f"u_{h} = {u[h]} < 0" for h in range(interior[0], interior[1] + 1) if u[h] < 0]
    if p < 0 and m.get(p + 1, 0) < m[p]:
        violations.append(f"m_{p + 1} = {m.get(p + 1, 0)} < m_{p} = {m[p]}")
    return MorseCheck("FAIL" if violations else "PASS", u, interior, p, violations, [])
