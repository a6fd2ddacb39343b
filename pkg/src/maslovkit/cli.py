"""Command line driver.

Exit codes: 0 when every requested check passes, 1 when some verdict fails,
2 on configuration or input errors, 3 on numerical errors.
"""
from __future__ import annotations

import argparse
import csv
import functools
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np
import sympy as sp

from . import index as index_mod
from . import iteration as iteration_mod
from . import orbits as orbits_mod
from .errors import InputError, NumericalError
from .flow import path_from_csv
from .iteration import find_index_jump
from .orbits import ellipsoid_orbits, shoot_orbit
from .pipeline import analyze_orbit, formula_table_json, invariants_from_record
from .resonance import (forced_euler_value, identity_sums, morse_inequality_check, morse_series,
                        reports_csv, series_orbit_from_formula, series_orbit_symmetric)
from .surface import DEFAULT_ALPHA, ellipsoid, lookup_surface

SCHEMA_VERSION = 1
CHECKS = ("indices", "bott", "identities", "morse", "jumps")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

TOLERANCES = {
    "unit": [(iteration_mod, "UNIT_TOL"), (orbits_mod, "UNIT_TOL")],
    "on_circle": [(iteration_mod, "ON_CIRCLE_TOL"), (orbits_mod, "ON_CIRCLE_TOL")],
    "nullity": [(index_mod, "NULLITY_TOL")],
    "witness": [(iteration_mod, "WITNESS_TOL")],
}


class ConfigError(InputError):
    pass


# ---------------------------------------------------------------------------
# configuration


def _parse_radius(v):
    if isinstance(v, str):
        r = sp.sympify(v)
        if not r.is_number or not r.is_positive:
            raise ConfigError(f"radius {v!r} is not a positive number")
        return r
    if isinstance(v, int):
        return sp.Integer(v)
    return float(v)


def load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(cfg)


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg = dict(cfg)
    cfg.setdefault("schema_version", SCHEMA_VERSION)
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg['schema_version']}")
    cfg.setdefault("max_iterate", 8)
    if int(cfg["max_iterate"]) < 4:
        raise ConfigError("max_iterate must be at least 4")
    cfg.setdefault("window", [-8, 8])
    lo, hi = cfg["window"]
    if lo != -hi or hi <= 0:
        raise ConfigError("window must be symmetric around 0")
    cfg.setdefault("checks", list(CHECKS))
    bad = [c for c in cfg["checks"] if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}")
    for name, value in cfg.get("tolerances", {}).items():
        if name not in TOLERANCES:
            raise ConfigError(f"unknown tolerance {name!r}")
        if not float(value) > 0:
            raise ConfigError(f"tolerance {name} must be positive")
    cfg.setdefault("orbits", {"source": "closed_form"})
    if cfg["orbits"].get("source") not in ("closed_form", "shooting", "formulas"):
        raise ConfigError("orbits.source must be closed_form, shooting or formulas")
    if cfg["orbits"]["source"] != "formulas" and "surface" not in cfg:
        raise ConfigError("a surface is required unless explicit formulas are given")
    cfg.setdefault("jump_bound", 1000)
    cfg.setdefault("complete_orbit_set", False)
    return cfg


def apply_tolerances(tols: dict) -> None:
    for name, value in tols.items():
        for module, attr in TOLERANCES[name]:
            setattr(module, attr, float(value))


def build_surface(surface_cfg: dict):
    kind = surface_cfg.get("kind")
    if kind == "ellipsoid":
        return ellipsoid([_parse_radius(v) for v in surface_cfg["radii"]])
    if kind == "custom":
        try:
            return lookup_surface(surface_cfg["id"], **surface_cfg.get("params", {}))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown surface kind {kind!r}")


def build_orbits(cfg: dict):
    surface = build_surface(cfg["surface"])
    alpha = float(cfg.get("alpha", DEFAULT_ALPHA))
    src = cfg["orbits"]
    if src["source"] == "closed_form":
        return ellipsoid_orbits(surface, alpha)
    out = []
    for k, seed in enumerate(src.get("seeds", [])):
        orb = shoot_orbit(surface, seed["y"], seed["tau"], alpha=alpha)
        orb.label = seed.get("id", f"orbit-{k + 1}")
        out.append(orb)
    if not out:
        raise ConfigError("shooting needs at least one seed")
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MASLOVKIT_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# analyze


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def run_analysis(cfg: dict) -> dict:
    """Run the configured checks and return the report dictionary."""
    apply_tolerances(cfg.get("tolerances", {}))
    checks = cfg["checks"]
    m_max = int(cfg["max_iterate"])
    report = {"schema_version": SCHEMA_VERSION, "config": cfg, "verdicts": {}}
    if cfg["orbits"]["source"] == "formulas":
        return _run_formulas(cfg, report)
    orbits = build_orbits(cfg)
    tn = cfg.get("type_numbers", {})
    stn = cfg.get("symmetric_type_numbers", {})

    def work(orb):
        return analyze_orbit(orb, m_max, _int_keys(tn.get(orb.label)), stn.get(orb.label),
                             with_bott="bott" in checks)

    with ThreadPoolExecutor(max_workers=min(_threads(), len(orbits))) as pool:
        analyses = list(pool.map(work, orbits))
    report["orbits"] = [a.to_dict(m_max) for a in analyses]
    verdicts = report["verdicts"]
    if "indices" in checks:
        ok = all(a.formula_matches_engine is not False and a.symmetric_matches_engine is not False
                 and not a.bound_violations for a in analyses)
        verdicts["indices"] = _verdict(ok)
    if "bott" in checks:
        verdicts["bott"] = _verdict(all(a.bott.holds for a in analyses))
    if "identities" in checks:
        exact = [a.exact for a in analyses]
        reports = []
        if all(e is not None for e in exact):
            reports += identity_sums(exact, cfg["complete_orbit_set"])
        reports += identity_sums([a.bracketed for a in analyses], cfg["complete_orbit_set"])
        report["identities"] = [r.to_dict() for r in reports]
        report["identities_csv"] = reports_csv(reports)
        verdicts["identities"] = _verdict(all(r.passed for r in reports))
    formulas = [a.formula for a in analyses]
    if "morse" in checks:
        if any(f is None for f in formulas):
            raise ConfigError("the Morse check needs iteration formulas for every orbit")
        series = [series_orbit_from_formula(f, _int_keys(tn.get(f.label)), f.label)
                  for f in formulas]
        report["morse"] = _morse_block(series, cfg["window"], analyses)
        verdicts["morse"] = report["morse"]["verdict"]
    if "jumps" in checks:
        if any(f is None for f in formulas):
            raise ConfigError("the jump search needs iteration formulas for every orbit")
        report["jumps"] = _jump_block(formulas, int(cfg["jump_bound"]))
        verdicts["jumps"] = _verdict(bool(report["jumps"]["triples"]))
    return report


def _int_keys(d):
    return None if d is None else {int(k): v for k, v in d.items()}


def _morse_block(series, window, analyses=None) -> dict:
    ms = morse_series(series, tuple(window))
    check = morse_inequality_check(ms)
    block = {"periodic": ms.to_dict(), "check": check.to_dict(), "verdict": check.verdict}
    sym = []
    if analyses is not None and all(a.half is not None for a in analyses):
        for a in analyses:
            sym.append(series_orbit_symmetric(_ibar_fn(a.half), float(a.formula.mean) / 2,
                                              a.label))
    if sym:
        mss = morse_series(sym, tuple(window), symmetric=True)
        sym_check = morse_inequality_check(mss)
        block["symmetric"] = mss.to_dict()
        block["symmetric_check"] = sym_check.to_dict()
        if sym_check.verdict != "PASS":
            block["verdict"] = "FAIL"
    block["csv"] = _series_csv(ms, check)
    return block


def _ibar_fn(half):
    @functools.lru_cache(maxsize=None)
    def ibar(m):
        return half.i1(2 * m) - half.i1(m)

    return ibar


def _series_csv(ms, check) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "m_h", "u_h"])
    lo, hi = ms.window
    for h in range(lo, hi + 1):
        w.writerow([h, ms.coeffs.get(h, 0), check.u.get(h, "")])
    return buf.getvalue()


def _jump_block(formulas, bound: int) -> dict:
    triples = find_index_jump(formulas, bound)
    return {"bound": bound, "count": len(triples),
            "triples": [[t.n, *t.ms] for t in triples[:50]],
            "maslov_i1": [f.maslov(1) for f in formulas]}


def _run_formulas(cfg: dict, report: dict) -> dict:
    checks = cfg["checks"]
    records = cfg["orbits"].get("records", [])
    if not records:
        raise ConfigError("formula source needs records")
    invs, formulas, halves, unknown = [], [], [], []
    for rec in records:
        inv, f, half = invariants_from_record(rec)
        formulas.append(f)
        halves.append(half)
        if rec.get("chi_bar_hat") == "unknown":
            unknown.append(inv)
        else:
            invs.append(inv)
    m_max = int(cfg["max_iterate"])
    report["formulas"] = [formula_table_json(f, m_max) for f in formulas]
    report["invariants"] = [i.to_dict() for i in invs + unknown]
    verdicts = report["verdicts"]
    if "identities" in checks:
        out = []
        if unknown:
            forced = [forced_euler_value(invs + [u for u in unknown if u is not v], v)
                      for v in unknown]
            report["forced_values"] = [r.to_dict() for r in forced]
            ok = all(r.verdict == "PASS" for r in forced)
        else:
            out = identity_sums(invs, cfg["complete_orbit_set"])
            report["identities"] = [r.to_dict() for r in out]
            report["identities_csv"] = reports_csv(out)
            ok = all(r.passed for r in out)
        verdicts["identities"] = _verdict(ok)
    if "morse" in checks:
        tn = {str(r.get("id")): r.get("type_numbers") for r in records}
        series = [series_orbit_from_formula(f, _int_keys(tn.get(f.label)), f.label)
                  for f in formulas]
        report["morse"] = _morse_block(series, cfg["window"])
        verdicts["morse"] = report["morse"]["verdict"]
    if "jumps" in checks:
        report["jumps"] = _jump_block(formulas, int(cfg["jump_bound"]))
        verdicts["jumps"] = _verdict(bool(report["jumps"]["triples"]))
    return report


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, sp.Basic):
        return str(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _write_outputs(report: dict, out: str | None) -> None:
    text = dump_report(report)
    if out is None:
        sys.stdout.write(text)
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "report.json").write_text(text)
    if "identities_csv" in report:
        (d / "identities.csv").write_text(report["identities_csv"])
    if "morse" in report:
        (d / "morse.csv").write_text(report["morse"]["csv"])


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    if args.check:
        cfg["checks"] = [c.strip() for c in args.check.split(",") if c.strip()]
    if args.max_iterate is not None:
        cfg["max_iterate"] = args.max_iterate
    tols = dict(cfg.get("tolerances", {}))
    for name in TOLERANCES:
        v = getattr(args, f"tol_{name}")
        if v is not None:
            tols[name] = v
    cfg["tolerances"] = tols
    cfg = validate_config(cfg)
    report = run_analysis(cfg)
    _write_outputs(report, args.out)
    for name, v in sorted(report["verdicts"].items()):
        print(f"{name}: {v}", file=sys.stderr)
    return EXIT_OK if all(v == "PASS" for v in report["verdicts"].values()) else EXIT_FAIL


def _parse_omega(text: str) -> complex:
    t = text.strip().lower()
    if t in ("1", "+1"):
        return 1.0
    if t == "-1":
        return -1.0
    if t.startswith("angle:"):
        return complex(np.exp(1j * float(t.split(":", 1)[1])))
    raise ConfigError(f"omega must be 1, -1 or angle:<radians>, got {text!r}")


def cmd_index(args) -> int:
    try:
        text = Path(args.path).read_text()
    except OSError as exc:
        raise ConfigError(str(exc)) from exc
    path = path_from_csv(text)
    omega = _parse_omega(args.omega)
    i = index_mod.omega_index(path, omega)
    nu = index_mod.omega_nullity(path.endpoint, omega)
    print(f"{i} {nu}")
    return EXIT_OK


def cmd_orbits(args) -> int:
    cfg = load_config(args.config)
    orbits = build_orbits(cfg)
    text = json.dumps([o.to_dict() for o in orbits], sort_keys=True, indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_jumps(args) -> int:
    cfg = load_config(args.config)
    if args.bound is not None:
        cfg["jump_bound"] = args.bound
    cfg["checks"] = ["jumps"]
    report = run_analysis(validate_config(cfg))
    _write_outputs({"schema_version": SCHEMA_VERSION, "jumps": report["jumps"]}, args.out)
    return EXIT_OK if report["jumps"]["triples"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maslovkit",
                                description="Index iteration and mean index identities "
                                            "for closed characteristics.")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="run the configured pipeline and checks")
    a.add_argument("--config", required=True)
    a.add_argument("--check", help=f"comma separated subset of {','.join(CHECKS)}")
    a.add_argument("--out", help="output directory for report.json and CSV tables")
    a.add_argument("--max-iterate", type=int, dest="max_iterate")
    for name in TOLERANCES:
        a.add_argument(f"--tol-{name.replace('_', '-')}", type=float, dest=f"tol_{name}")
    a.set_defaults(func=cmd_analyze)
    i = sub.add_parser("index", help="index and nullity of a path stored as CSV")
    i.add_argument("path")
    i.add_argument("--omega", default="1", help="1, -1 or angle:<radians>")
    i.set_defaults(func=cmd_index)
    o = sub.add_parser("orbits", help="list the closed orbits of the configured surface")
    o.add_argument("--config", required=True)
    o.add_argument("--out")
    o.set_defaults(func=cmd_orbits)
    j = sub.add_parser("jumps", help="common index jump search")
    j.add_argument("--config", required=True)
    j.add_argument("--bound", type=int)
    j.add_argument("--out")
    j.set_defaults(func=cmd_jumps)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, KeyError) as exc:
        print(f"input error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
