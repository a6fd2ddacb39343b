"""Per-orbit analysis: index records, normal forms, formulas and invariants.

Each orbit is analysed twice: from the index engine alone (mean index as a
bracket) and through the recognized normal form (exact mean index).  The
two routes are cross-checked, never merged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from .errors import AmbiguousCase, InvalidTypeNumbers, NoUnitBlock
from .index import (BottResidual, IndexRecord, bott_check, index_record, omega_index,
                    omega_nullity)
from .iteration import (HalfPathFormula, IterationFormula, NormalFormSp4,
                        half_formula_from_form, hyperbolic_half, iteration_sequence,
                        recognize_half_form, recognize_normal_form, symmetric_iteration,
                        to_exact)
from .orbits import ClosedCharacteristic
from .resonance import (Interval, OrbitInvariants, TypeData, euler_hat, euler_hat_symmetric,
                        number_json)

N_HALF = 2
INDEX_BOUND = 2 * N_HALF


@dataclass
class OrbitAnalysis:
    label: str
    record: IndexRecord | None = None
    normal_form: NormalFormSp4 | None = None
    formula: IterationFormula | None = None
    half: HalfPathFormula | None = None
    exact: OrbitInvariants | None = None
    bracketed: OrbitInvariants | None = None
    bott: BottResidual | None = None
    orbit: ClosedCharacteristic | None = field(default=None, repr=False)
    formula_matches_engine: bool | None = None
    symmetric_matches_engine: bool | None = None
    bound_violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self, max_iterate: int = 8) -> dict:
        out = {"id": self.label}
        if self.orbit is not None:
            out["orbit"] = self.orbit.to_dict()
        if self.record is not None:
            out["index_record"] = self.record.to_dict()
        if self.normal_form is not None:
            out["normal_form"] = self.normal_form.to_dict()
        if self.formula is not None:
            out["formula"] = self.formula.to_dict(max_iterate)
        if self.half is not None:
            out["symmetric_table"] = {str(m): v for m, v in
                                      symmetric_iteration(self.half, max_iterate).items()}
        if self.bott is not None:
            out["bott"] = {"i_double": self.bott.lhs, "i1": self.bott.i1,
                           "im1": self.bott.im1, "residual": self.bott.residual}
        if self.exact is not None:
            out["invariants_exact"] = self.exact.to_dict()
        if self.bracketed is not None:
            out["invariants_bracketed"] = self.bracketed.to_dict()
        out["formula_matches_engine"] = self.formula_matches_engine
        out["symmetric_matches_engine"] = self.symmetric_matches_engine
        out["bound_violations"] = list(self.bound_violations)
        out["warnings"] = list(self.warnings)
        return out


def exact_transverse_angle(orbit: ClosedCharacteristic):
    """theta / pi of the transverse rotation of an ellipsoid orbit in R^4, exactly."""
    if orbit.rotation_exact is None or len(orbit.rotation_exact) != 2:
        return None
    j = int(orbit.label.split("-")[-1]) - 1
    rho = orbit.rotation_exact[1 - j]
    return sp.radsimp(2 * rho - 2 * sp.floor(rho))


def exact_ellipsoid_mean(orbit: ClosedCharacteristic):
    """Mean index 2 sum_k r_j^2 / r_k^2 of an ellipsoid orbit (Morse normalization)."""
    if orbit.rotation_exact is None:
        return None
    total = sp.radsimp(2 * sum(orbit.rotation_exact))
    return to_exact(total) if total.is_Rational else total


def _periodic_chi(indices: Mapping[int, int], nullities: Mapping[int, int], k: int | None,
                  supplied: Mapping[int, Sequence[int]] | None, label: str):
    """(chi_hat, nondegenerate) from iterate data over one period."""
    nondeg = all(v == 1 for v in nullities.values())
    if nondeg:
        return euler_hat(indices[1], (indices[2] - indices[1]) % 2 == 0), True
    if k is None:
        raise InvalidTypeNumbers(f"orbit {label}: degenerate iterates with unknown period")
    if not supplied:
        raise InvalidTypeNumbers(f"orbit {label} is degenerate; type numbers must be supplied")
    data = TypeData(k, {m: indices[m] for m in range(1, k + 1)},
                    {m: nullities[m] for m in range(1, k + 1)}, dict(supplied))
    return euler_hat(indices[1], data=data), False


def _symmetric_chi(ibar: Mapping[int, int], nubar: Mapping[int, int],
                   supplied: Mapping | None, label: str):
    if all(v == 1 for v in nubar.values()):
        return euler_hat_symmetric(ibar[1]), True
    if not supplied:
        raise InvalidTypeNumbers(f"orbit {label} has degenerate odd iterates; "
                                 "symmetric type numbers must be supplied")
    kbar = int(supplied["K"])
    numbers = {int(m): v for m, v in supplied["numbers"].items()}
    odd = range(1, kbar, 2)
    data = TypeData(kbar, {m: ibar[m] for m in odd}, {m: nubar[m] for m in odd}, numbers,
                    symmetric=True)
    return euler_hat_symmetric(ibar[1], data=data), False


def _odd_nullities(half_end: np.ndarray, upto: int) -> dict[int, int]:
    out = {}
    power = np.eye(half_end.shape[0])
    for m in range(1, upto + 1):
        power = power @ half_end
        if m % 2:
            out[m] = omega_nullity(power, -1.0)
    return out


def analyze_orbit(orbit: ClosedCharacteristic, max_iterate: int = 8,
                  type_numbers: Mapping[int, Sequence[int]] | None = None,
                  symmetric_type_numbers: Mapping | None = None,
                  check_refinement: bool = True, with_bott: bool = True) -> OrbitAnalysis:
    """Index record, normal form, iteration formula and invariants of one orbit."""
    res = OrbitAnalysis(orbit.label, orbit=orbit)
    half_path = orbit.half_path if orbit.symmetric else None
    rec = index_record(orbit.path, max_iterate, half_path, check_refinement)
    res.record = rec
    res.warnings += rec.warnings
    if with_bott:
        res.bott = bott_check(orbit.path, check_refinement)
    n = orbit.path.n
    exact_mean = None
    if n == 2:
        try:
            res.normal_form = recognize_normal_form(orbit.monodromy, exact_transverse_angle(orbit))
        except (NoUnitBlock, AmbiguousCase) as exc:
            res.warnings.append(f"normal form not recognized: {exc}")
    if res.normal_form is not None:
        f = iteration_sequence(res.normal_form, rec.iterates[1][0], orbit.label)
        res.formula = f
        exact_mean = f.mean
        res.formula_matches_engine = all(rec.iterates[m] == (f.index(m), f.nullity(m))
                                         for m in rec.iterates)
        if orbit.symmetric:
            try:
                nf_half = recognize_half_form(orbit.half_monodromy)
                res.half = half_formula_from_form(nf_half, omega_index(orbit.half_path, 1.0))
            except (NoUnitBlock, AmbiguousCase) as exc:
                res.warnings.append(f"half-period normal form not recognized: {exc}")
            if res.half is not None:
                table = symmetric_iteration(res.half, max_iterate)
                res.symmetric_matches_engine = all(table[m] == rec.odd_iterates_bar[m][0]
                                                   for m in rec.odd_iterates_bar)
    elif orbit.rotation_exact is not None:
        exact_mean = exact_ellipsoid_mean(orbit)
    res.bound_violations = index_bound_violations(rec, exact_mean)
    _attach_invariants(res, exact_mean, type_numbers, symmetric_type_numbers)
    return res


def index_bound_violations(rec: IndexRecord, mean) -> list[str]:
    """Iterates with |i(y^m) - m i_hat| > 2n (exact mean if known, else the bracket)."""
    out = []
    for m, (i_m, _nu) in sorted(rec.iterates.items()):
        if mean is not None:
            dev = abs(i_m - m * float(sp.N(mean, 30)) if isinstance(mean, sp.Basic)
                      else i_m - m * float(mean))
            if dev > INDEX_BOUND + 1e-9:
                out.append(f"m={m}: |i - m mean| = {dev:.6g}")
        lo, hi = rec.bracket
        if not (i_m - INDEX_BOUND <= m * hi and m * lo <= i_m + INDEX_BOUND):
            out.append(f"m={m}: bracket inconsistent")
    return out


def _attach_invariants(res: OrbitAnalysis, exact_mean, type_numbers, symmetric_type_numbers):
    rec = res.record
    sym = rec.symmetric
    label = res.label
    idx = {m: v[0] for m, v in rec.iterates.items()}
    nul = {m: v[1] for m, v in rec.iterates.items()}
    f = res.formula
    k = f.period_k if f is not None else None
    if f is not None and k is not None and k > max(idx):
        idx.update({m: f.index(m) for m in range(1, k + 1)})
        nul.update({m: f.nullity(m) for m in range(1, k + 1)})
    chi, nondeg = _periodic_chi(idx, nul, k, type_numbers, label)
    chi_bar = None
    if sym:
        ibar = {m: v[0] for m, v in rec.odd_iterates_bar.items()}
        nubar = {m: v[1] for m, v in rec.odd_iterates_bar.items()}
        if symmetric_type_numbers:
            kbar = int(symmetric_type_numbers["K"])
            if res.half is not None:
                table = symmetric_iteration(res.half, kbar)
                ibar.update(table)
            nubar.update(_odd_nullities(res.orbit.half_monodromy, kbar))
        chi_bar, _ = _symmetric_chi(ibar, nubar, symmetric_type_numbers, label)
    if exact_mean is not None:
        res.exact = OrbitInvariants(label, exact_mean, chi, sym, chi_bar_hat=chi_bar,
                                    nondegenerate=nondeg, period_k=k)
    bracket = Interval(*rec.bracket)
    res.bracketed = OrbitInvariants(label, bracket, chi, sym, chi_bar_hat=chi_bar,
                                    nondegenerate=nondeg, period_k=k)


# ---------------------------------------------------------------------------
# explicit formula records


def formula_from_record(record: Mapping) -> tuple[IterationFormula, HalfPathFormula | None]:
    """Iteration formula (and half-path data) from a JSON-like record.

    Keys: case, i1 (Morse), b, theta_over_pi ({num, den}, number or sympy
    string), s_plus, and for symmetric orbits either ``half`` =
    {"kind": "hyperbolic", "i_psi": int} or ``ibar`` (an integer).
    """
    theta = record.get("theta_over_pi")
    if isinstance(theta, Mapping):
        theta = Fraction(int(theta["num"]), int(theta["den"]))
    elif isinstance(theta, str):
        theta = to_exact(sp.sympify(theta))
    elif theta is not None:
        theta = to_exact(theta)
    case = record["case"]
    s_plus = record.get("s_plus")
    if s_plus is None:
        s_plus = 2 if case == "case3" else 1
    f = IterationFormula(case, int(record["i1"]), b=record.get("b"), theta_over_pi=theta,
                         s_plus=int(s_plus), label=str(record.get("id", "")))
    half = None
    h = record.get("half")
    if h is not None:
        if h.get("kind") != "hyperbolic":
            raise ValueError("explicit half-path data supports the hyperbolic kind only")
        half = hyperbolic_half(int(h["i_psi"]))
    return f, half


def invariants_from_record(record: Mapping) -> tuple[OrbitInvariants, IterationFormula,
                                                   HalfPathFormula | None]:
    """OrbitInvariants of an explicit record; ``"chi_bar_hat": "unknown"`` leaves it open."""
    f, half = formula_from_record(record)
    label = f.label
    k = f.period_k
    upto = max(2, k or 1)
    idx = {m: f.index(m) for m in range(1, upto + 1)}
    nul = {m: f.nullity(m) for m in range(1, upto + 1)}
    tn = {int(m): v for m, v in (record.get("type_numbers") or {}).items()}
    chi, nondeg = _periodic_chi(idx, nul, k, tn, label)
    sym = bool(record.get("symmetric", half is not None or "ibar" in record))
    chi_bar = None
    if sym and record.get("chi_bar_hat") != "unknown":
        ibar = symmetric_iteration(half, 1)[1] if half is not None else int(record["ibar"])
        chi_bar = euler_hat_symmetric(ibar)
    inv = OrbitInvariants(label, f.mean, chi, sym, chi_bar_hat=chi_bar,
                          nondegenerate=bool(record.get("nondegenerate", nondeg)), period_k=k)
    return inv, f, half


def formula_table_json(f: IterationFormula, max_iterate: int) -> dict:
    d = f.to_dict(max_iterate)
    d["id"] = f.label
    d["mean"] = number_json(f.mean)
    return d
