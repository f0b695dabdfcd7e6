"""Case suites: loading JSON configs, running checks, writing reports."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .convexity import ConvexityCertificate, certify, max_modulus
from .funcspace import (
    DifferentiableFunction,
    FuncSpaceError,
    HFunction,
    Interval,
    PhiMap,
    StrongParams,
    abs_derivative_power,
    make_builtin_function,
    make_builtin_h,
    make_builtin_phi,
    sum_functions,
)
from .inequalities import (
    COROLLARIES,
    PreconditionError,
    Tolerances,
    VerificationRecord,
    corollary_bound,
    corollary_h,
    hh_classical_gap,
    hh_phi_gap,
    lemma1_residual,
    lemma2_residual,
    make_record,
    midpoint_defect,
    thm1_bound,
    thm2_bound,
    thm3_bound,
    thm4_bound,
    trapezoid_defect,
)
from .quadrature import DEFAULT_TOL

DEFAULT_SEED = 42
DEFAULT_SAMPLES = 4096
DEFAULT_SUITE = Path(__file__).with_name("data") / "default_suite.json"
CHECKS = ("lemma1", "lemma2", "thm1", "thm2", "thm3", "thm4", "hh_classical", "hh_phi", "corollaries")
SWEEP_PARAMS = ("c", "q", "s")
CSV_COLUMNS = ("label", "check", "lhs", "bound", "margin", "holds", "preconditions_ok", "discrepancy", "seed")
# h_power exponent used for the t^s corollaries when the case's own h is not h_power
DEFAULT_COROLLARY_S = 0.5


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FamilyRef:
    family: str
    params: tuple[float, ...] = ()


@dataclass(frozen=True)
class HRef:
    family: str
    s: Optional[float] = None


@dataclass(frozen=True)
class CaseSpec:
    label: str
    f: tuple[FamilyRef, ...]
    phi: FamilyRef
    h: HRef
    c: float
    interval: Interval
    checks: tuple[str, ...]
    q: Optional[float] = None
    seed: Optional[int] = None

    def build(self) -> tuple[DifferentiableFunction, PhiMap, HFunction]:
        f = sum_functions([make_builtin_function(r.family, r.params, self.interval) for r in self.f])
        phi = make_builtin_phi(self.phi.family, self.phi.params, self.interval)
        h = make_builtin_h(self.h.family, self.h.s)
        return f, phi, h


@dataclass(frozen=True)
class Summary:
    total: int
    passed: int
    failed: int
    precondition_skips: int
    discrepancies: int


@dataclass(frozen=True)
class Report:
    records: tuple[VerificationRecord, ...]
    summary: Summary
    tool_version: str
    seed: int
    quad_tol: float
    samples: int


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple[float, ...]


# -- config loading ----------------------------------------------------------------------


def read_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object with a 'cases' list")
    return raw


def load_config(path) -> list[CaseSpec]:
    """Read and fully validate a case suite; every family is built once here."""
    return parse_cases(read_config(path), source=str(path))


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where}: expected a finite number, got {value!r}")
    return float(value)


def _family_ref(raw, where: str) -> FamilyRef:
    if not isinstance(raw, dict) or "family" not in raw:
        raise ConfigError(f"{where}: expected an object with 'family' and 'params'")
    params = raw.get("params", [])
    if not isinstance(params, list):
        raise ConfigError(f"{where}.params: expected a list of numbers")
    return FamilyRef(str(raw["family"]), tuple(_number(p, f"{where}.params[{i}]") for i, p in enumerate(params)))


def _case(raw, where: str) -> CaseSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected an object")
    for key in ("label", "f", "phi", "h", "c", "interval", "checks"):
        if key not in raw:
            raise ConfigError(f"{where}: missing field {key!r}")
    label = raw["label"]
    if not isinstance(label, str) or not label:
        raise ConfigError(f"{where}.label: expected a non-empty string")
    f_raw = raw["f"] if isinstance(raw["f"], list) else [raw["f"]]
    if not f_raw:
        raise ConfigError(f"{where}.f: empty function list")
    f = tuple(_family_ref(part, f"{where}.f[{i}]") for i, part in enumerate(f_raw))
    phi = _family_ref(raw["phi"], f"{where}.phi")
    h_raw = raw["h"]
    if not isinstance(h_raw, dict) or "family" not in h_raw:
        raise ConfigError(f"{where}.h: expected an object with 'family'")
    s = h_raw.get("s")
    h = HRef(str(h_raw["family"]), None if s is None else _number(s, f"{where}.h.s"))
    c = _number(raw["c"], f"{where}.c")
    q = raw.get("q")
    q = None if q is None else _number(q, f"{where}.q")
    iv = raw["interval"]
    if not isinstance(iv, list) or len(iv) != 2:
        raise ConfigError(f"{where}.interval: expected [a, b]")
    checks = raw["checks"]
    if not isinstance(checks, list) or any(ch not in CHECKS for ch in checks):
        raise ConfigError(f"{where}.checks: expected a list drawn from {list(CHECKS)}, got {checks!r}")
    seed = raw.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigError(f"{where}.seed: expected a non-negative integer")
    try:
        case = CaseSpec(
            label=label,
            f=f,
            phi=phi,
            h=h,
            c=c,
            interval=Interval(_number(iv[0], f"{where}.interval[0]"), _number(iv[1], f"{where}.interval[1]")),
            checks=tuple(checks),
            q=q,
            seed=seed,
        )
        validate_case(case)
    except FuncSpaceError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return case


def validate_case(case: CaseSpec) -> None:
    case.build()
    StrongParams(case.c, 2.0 if case.q is None else case.q)


def parse_cases(raw: dict, source: str = "<config>") -> list[CaseSpec]:
    cases_raw = raw.get("cases")
    if not isinstance(cases_raw, list) or not cases_raw:
        raise ConfigError(f"{source}: 'cases' must be a non-empty list")
    cases = [_case(item, f"{source}: cases[{i}]") for i, item in enumerate(cases_raw)]
    seen = set()
    for i, case in enumerate(cases):
        if case.label in seen:
            raise ConfigError(f"{source}: cases[{i}].label: duplicate label {case.label!r}")
        seen.add(case.label)
    return cases


def parse_sweep(raw: dict, source: str = "<config>") -> SweepSpec:
    """Read the ``sweep`` block: {"param": "c"|"q"|"s", "values": [...]} or start/stop/num."""
    sw = raw.get("sweep")
    if not isinstance(sw, dict):
        raise ConfigError(f"{source}: sweep needs a 'sweep' object naming one parameter")
    param = sw.get("param")
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"{source}: sweep.param must be one of {list(SWEEP_PARAMS)}, got {param!r}")
    if "values" in sw:
        vals = sw["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{source}: sweep.values must be a non-empty list")
        values = tuple(_number(v, f"{source}: sweep.values[{i}]") for i, v in enumerate(vals))
    else:
        try:
            start = _number(sw["start"], f"{source}: sweep.start")
            stop = _number(sw["stop"], f"{source}: sweep.stop")
            num = sw["num"]
        except KeyError as exc:
            raise ConfigError(f"{source}: sweep needs 'values' or start/stop/num (missing {exc})") from None
        if not isinstance(num, int) or num < 1:
            raise ConfigError(f"{source}: sweep.num must be a positive integer")
        values = tuple(float(v) for v in np.linspace(start, stop, num))
    return SweepSpec(param, values)


def expand_sweep(cases: Sequence[CaseSpec], sweep: SweepSpec) -> list[CaseSpec]:
    out = []
    for case in cases:
        for v in sweep.values:
            label = f"{case.label}[{sweep.param}={v:g}]"
            if sweep.param == "c":
                new = dataclasses.replace(case, label=label, c=v)
            elif sweep.param == "q":
                new = dataclasses.replace(case, label=label, q=v)
            else:
                new = dataclasses.replace(case, label=label, h=HRef(case.h.family, v))
            try:
                validate_case(new)
            except FuncSpaceError as exc:
                raise ConfigError(f"sweep {sweep.param}={v:g} invalid for case {case.label!r}: {exc}") from exc
            out.append(new)
    return out


# -- running --------------------------------------------------------------------------------


def _nan_on_error(fn, *args) -> float:
    try:
        return float(fn(*args))
    except (PreconditionError, FuncSpaceError, ArithmeticError, ValueError, RuntimeError):
        return math.nan


class _CaseRun:
    """Runs the checks of one case; certificates are computed up front and cached."""

    def __init__(self, case: CaseSpec, quad_tol: float, samples: int, seed: int):
        self.case = case
        self.tol = quad_tol
        self.samples = samples
        self.seed = seed
        self.f, self.phi, self.h = case.build()
        self.identity = make_builtin_phi("identity", [], case.interval)
        self.h_linear = make_builtin_h("h_linear")
        self.params = StrongParams(case.c, case.q) if case.q is not None else None
        self.corollary_s = case.h.s if case.h.family == "h_power" else DEFAULT_COROLLARY_S
        self._certs: dict[tuple, ConvexityCertificate | Exception] = {}

    # certificates

    def _target(self, power: Optional[float]) -> DifferentiableFunction:
        if power is None:
            return self.f
        return abs_derivative_power(self.f, power)

    def certificate(self, power: Optional[float], phi: PhiMap, h: HFunction, c: float) -> ConvexityCertificate:
        key = (power, phi.label, h.label, c)
        if key not in self._certs:
            try:
                self._certs[key] = certify(self._target(power), phi, h, c, self.samples, self.seed)
            except (FuncSpaceError, ValueError, ArithmeticError) as exc:
                self._certs[key] = exc
        cert = self._certs[key]
        if isinstance(cert, Exception):
            raise PreconditionError(f"certification failed: {cert}")
        return cert

    def _plan_certificates(self) -> list[tuple]:
        plan = []
        q = self.case.q
        for check in self.case.checks:
            if check == "hh_classical":
                plan.append((None, self.identity, self.h_linear, 0.0))
            elif check == "hh_phi":
                plan.append((None, self.phi, self.h_linear, 0.0))
            elif check in ("thm1", "thm3"):
                plan.append((1.0, self.phi, self.h, self.case.c))
            elif check in ("thm2", "thm4") and q is not None:
                plan.append((q, self.phi, self.h, self.case.c))
            elif check == "corollaries":
                for cid, (parent, _) in COROLLARIES.items():
                    power = 1.0 if parent in ("thm1", "thm3") else q
                    if power is not None:
                        plan.append((power, self.phi, corollary_h(cid, self.corollary_s), self.case.c))
        return plan

    # records

    def _record(self, check, lhs, bound, **kw) -> VerificationRecord:
        return make_record(self.case.label, check, lhs, bound, quad_tol=self.tol, seed=self.seed, **kw)

    def _skip(self, check, reason, lhs=math.nan, bound=math.nan, **kw) -> VerificationRecord:
        return self._record(check, lhs, bound, preconditions_ok=False, reason=reason, **kw)

    def run(self) -> list[VerificationRecord]:
        if not self.case.checks:
            return [self._skip("none", "no checks requested")]
        for power, phi, h, c in self._plan_certificates():
            try:
                self.certificate(power, phi, h, c)
            except PreconditionError:
                pass  # reported by the dependent check
        records = []
        for check in self.case.checks:
            if check == "corollaries":
                records.extend(self._guarded(f"corollary:{cid}", self._corollary, cid) for cid in COROLLARIES)
            else:
                records.append(self._guarded(check, getattr(self, "_" + check)))
        return records

    def _guarded(self, check: str, fn, *args) -> VerificationRecord:
        try:
            return fn(*args)
        except (PreconditionError, FuncSpaceError) as exc:
            return self._skip(check, str(exc))
        except Exception as exc:  # isolation: numerical failures stay inside the record
            return self._record(check, math.nan, math.nan, reason=f"error: {type(exc).__name__}: {exc}")

    def _gap_record(self, check, gaps, cert) -> VerificationRecord:
        lhs = -min(gaps.left_gap, gaps.right_gap)
        details = {"left_gap": gaps.left_gap, "right_gap": gaps.right_gap}
        if not cert.holds:
            return self._skip(check, "f not certified convex for this phi", lhs, 0.0, certificate=cert, details=details)
        return self._record(check, lhs, 0.0, certificate=cert, details=details)

    def _hh_classical(self):
        cert = self.certificate(None, self.identity, self.h_linear, 0.0)
        return self._gap_record("hh_classical", hh_classical_gap(self.f, self.case.interval, self.tol), cert)

    def _hh_phi(self):
        gaps = hh_phi_gap(self.f, self.phi, self.tol)
        cert = self.certificate(None, self.phi, self.h_linear, 0.0)
        return self._gap_record("hh_phi", gaps, cert)

    def _lemma(self, check, fn):
        residual = fn(self.f, self.phi, self.case.c, self.tol)
        return self._record(check, abs(residual), 0.0, details={"residual": residual})

    def _lemma1(self):
        return self._lemma("lemma1", lemma1_residual)

    def _lemma2(self):
        return self._lemma("lemma2", lemma2_residual)

    def _bound_record(self, check, defect_fn, bound_fn, power, h, details=None):
        cert = self.certificate(power, self.phi, h, self.case.c)
        bound = bound_fn()  # raises PreconditionError on delta / moment / A / G failures
        lhs = defect_fn(self.f, self.phi, self.tol)
        if not cert.holds:
            return self._skip(
                check, f"{cert.function} not certified at c={self.case.c:g}", lhs, bound, certificate=cert, details=details
            )
        return self._record(check, lhs, bound, certificate=cert, details=details)

    def _thm1(self):
        return self._bound_record(
            "thm1", trapezoid_defect, lambda: thm1_bound(self.f, self.phi, self.h, self.tol), 1.0, self.h
        )

    def _thm3(self):
        return self._bound_record(
            "thm3", midpoint_defect, lambda: thm3_bound(self.f, self.phi, self.h, self.tol), 1.0, self.h
        )

    def _thm2(self):
        if self.params is None:
            raise PreconditionError("q not set for this case")
        result = thm2_bound(self.f, self.phi, self.h, self.params, self.tol)
        return self._bound_record(
            "thm2", trapezoid_defect, lambda: result.bound, self.params.q, self.h, details={"A": result.constants.A}
        )

    def _thm4(self):
        if self.params is None:
            raise PreconditionError("q not set for this case")
        result = thm4_bound(self.f, self.phi, self.h, self.params, self.tol)
        details = {
            "bound_printed": result.bound_printed,
            "bound_proof": result.bound_proof,
            "G": result.constants.G,
            "G_proof_variant": result.constants.G_proof_variant,
        }
        return self._bound_record("thm4", midpoint_defect, lambda: result.loosest, self.params.q, self.h, details)

    def _corollary(self, cid: str):
        check = f"corollary:{cid}"
        parent, _ = COROLLARIES[cid]
        trapezoid = parent in ("thm1", "thm2")
        power = 1.0 if parent in ("thm1", "thm3") else self.case.q
        if power is None:
            raise PreconditionError("q not set for this case")
        params = self.params or StrongParams(self.case.c)
        result = corollary_bound(cid, self.f, self.phi, params, self.corollary_s, self.tol)
        flagged = result.flagged(10 * self.tol)
        details = {
            "printed_value": result.printed_value,
            "theorem_value": result.theorem_value,
            "discrepancy_flagged": flagged,
        }
        lhs = (trapezoid_defect if trapezoid else midpoint_defect)(self.f, self.phi, self.tol)
        cert = self.certificate(power, self.phi, corollary_h(cid, self.corollary_s), self.case.c)
        kw = dict(certificate=cert, discrepancy=result.discrepancy, details=details)
        if not cert.holds:
            return self._skip(check, f"{cert.function} not certified at c={self.case.c:g}", lhs, result.theorem_value, **kw)
        return self._record(check, lhs, result.theorem_value, **kw)


def summarize(records: Iterable[VerificationRecord]) -> Summary:
    records = list(records)
    flagged = {r.check for r in records if r.details.get("discrepancy_flagged")}
    return Summary(
        total=len(records),
        passed=sum(r.status == "passed" for r in records),
        failed=sum(r.status == "failed" for r in records),
        precondition_skips=sum(r.status == "skip" for r in records),
        discrepancies=len(flagged),
    )


def run_suite(
    cases: Sequence[CaseSpec],
    quad_tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
    seed: Optional[int] = None,
) -> Report:
    """Run every case in order; ``seed`` (when given) overrides the per-case seeds.

    summary.discrepancies counts distinct corollaries whose printed formula
    disagrees with the parent theorem anywhere in the suite.
    """
    if not cases:
        raise ConfigError("empty case list")
    records: list[VerificationRecord] = []
    for case in cases:
        case_seed = seed if seed is not None else (case.seed if case.seed is not None else DEFAULT_SEED)
        records.extend(_CaseRun(case, quad_tol, samples, case_seed).run())
    return Report(
        records=tuple(records),
        summary=summarize(records),
        tool_version=__version__,
        seed=DEFAULT_SEED if seed is None else seed,
        quad_tol=quad_tol,
        samples=samples,
    )


def run_certify(
    cases: Sequence[CaseSpec],
    samples: int = DEFAULT_SAMPLES,
    seed: Optional[int] = None,
) -> Report:
    """Certification only: f, |f'| and (when q is set) |f'|^q against each case's (phi, h, c)."""
    if not cases:
        raise ConfigError("empty case list")
    records = []
    for case in cases:
        case_seed = seed if seed is not None else (case.seed if case.seed is not None else DEFAULT_SEED)
        f, phi, h = case.build()
        targets = [("certify:f", f), ("certify:|f'|", abs_derivative_power(f, 1.0))]
        if case.q is not None:
            targets.append((f"certify:|f'|^q", abs_derivative_power(f, case.q)))
        for check, g in targets:
            try:
                cert = certify(g, phi, h, case.c, samples, case_seed)
                c_star = _nan_on_error(max_modulus, g, phi, h, samples, case_seed)
            except (FuncSpaceError, ValueError, ArithmeticError) as exc:
                records.append(
                    make_record(case.label, check, math.nan, 0.0, quad_tol=0.0, seed=case_seed,
                                preconditions_ok=False, reason=str(exc))
                )
                continue
            records.append(
                VerificationRecord(
                    case_label=case.label,
                    check=check,
                    lhs=cert.max_violation,
                    bound=0.0,
                    holds=cert.holds,
                    margin=-cert.max_violation,
                    preconditions_ok=True,
                    reason="" if cert.holds else "sampled triple violates the inequality",
                    tolerances=Tolerances(0.0, cert.slack),
                    seed=case_seed,
                    certificate=cert,
                    details={"max_modulus": c_star},
                )
            )
    return Report(tuple(records), summarize(records), __version__, DEFAULT_SEED if seed is None else seed, 0.0, samples)


# -- serialisation ----------------------------------------------------------------------------


def _jsonable(value: Any) -> Any:
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return _jsonable(value.item())
    return value


def report_to_dict(report: Report) -> dict:
    return _jsonable(dataclasses.asdict(report))


def _float(value) -> float:
    return math.nan if value is None else float(value)


def _certificate_from_dict(d: Optional[dict]) -> Optional[ConvexityCertificate]:
    if d is None:
        return None
    d = dict(d)
    d["worst_point"] = tuple(_float(v) for v in d["worst_point"])
    d["max_violation"] = _float(d["max_violation"])
    return ConvexityCertificate(**d)


def _record_from_dict(d: dict) -> VerificationRecord:
    return VerificationRecord(
        case_label=d["case_label"],
        check=d["check"],
        lhs=_float(d["lhs"]),
        bound=_float(d["bound"]),
        holds=d["holds"],
        margin=_float(d["margin"]),
        preconditions_ok=d["preconditions_ok"],
        reason=d["reason"],
        tolerances=Tolerances(**d["tolerances"]),
        seed=d["seed"],
        certificate=_certificate_from_dict(d.get("certificate")),
        discrepancy=d.get("discrepancy"),
        details=d.get("details", {}),
    )


def report_from_dict(d: dict) -> Report:
    return Report(
        records=tuple(_record_from_dict(r) for r in d["records"]),
        summary=Summary(**d["summary"]),
        tool_version=d["tool_version"],
        seed=d["seed"],
        quad_tol=d["quad_tol"],
        samples=d["samples"],
    )


def load_report(path) -> Report:
    try:
        return report_from_dict(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read report: {exc.strerror}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: not a report file: {exc}") from exc


def _num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def report_csv(report: Report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.records:
        writer.writerow([
            r.case_label,
            r.check,
            _num(r.lhs),
            _num(r.bound),
            _num(r.margin),
            str(r.holds).lower(),
            str(r.preconditions_ok).lower(),
            _num(r.discrepancy),
            r.seed,
        ])
    return buf.getvalue()


def report_json(report: Report) -> str:
    return json.dumps(report_to_dict(report), indent=2, allow_nan=False) + "\n"


def emit_report(report: Report, fmt: str = "json", path=None) -> None:
    """Write the report as JSON or CSV to ``path`` (stdout when None or '-')."""
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
